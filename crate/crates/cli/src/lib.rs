//! Command implementations for the `shankel` binary. Each command returns
//! the text it would write, so the binary only handles output and exit codes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use spectral_hankel::bounds::{self, BoundReport, BoundSpec};
use spectral_hankel::hankel::spectral_norm_diff;
use spectral_hankel::io::{parse_model, parse_sample, render_model, render_sample};
use spectral_hankel::sampling::splitmix64;
use spectral_hankel::{
    empirical_hankel, exact_hankel, l1_distance_upto, learn, learn_from_exact, sample,
    stewart_bound, subspace_distance, truncated_svd, Basis, LinearRepresentation, Mode, PfaForm,
    Word,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const TRIAL_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Bad flag combinations; the binary exits with status 2 on these.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

#[derive(Debug, Parser)]
#[command(
    name = "shankel",
    version,
    about = "Spectral learning and Hankel concentration experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Debug, Args, Clone)]
pub struct Global {
    /// Base seed for sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Hankel variant: standard, prefix or factor.
    #[arg(long, global = true, default_value = "standard")]
    pub mode: Mode,
    /// Smoothing parameter for prefix and factor modes.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub eta: f64,
    /// Maximal string length of the bases U and V.
    #[arg(long, global = true, default_value_t = 4)]
    pub l: usize,
    /// Maximal length for U, overriding --l.
    #[arg(long = "l-u", global = true)]
    pub l_u: Option<usize>,
    /// Maximal length for V, overriding --l.
    #[arg(long = "l-v", global = true)]
    pub l_v: Option<usize>,
    /// Sample size.
    #[arg(long, global = true, default_value_t = 20_000)]
    pub n: usize,
    /// Number of independent trials.
    #[arg(long, global = true, default_value_t = 1)]
    pub trials: usize,
    /// Failure probability of the bounds.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub delta: f64,
    /// Truncation rank for learning.
    #[arg(long, global = true)]
    pub rank: Option<usize>,
    /// Learn from the exact Hankel matrix of the model instead of a sample.
    #[arg(long, global = true)]
    pub exact: bool,
}

impl Global {
    fn l_u(&self) -> usize {
        self.l_u.unwrap_or(self.l)
    }

    fn l_v(&self) -> usize {
        self.l_v.unwrap_or(self.l)
    }

    fn eta(&self) -> f64 {
        if self.mode == Mode::Standard {
            0.0
        } else {
            self.eta
        }
    }

    fn bases(&self, rep_or_alphabet: &spectral_hankel::Alphabet) -> Result<(Basis, Basis)> {
        Ok((Basis::new(rep_or_alphabet, self.l_u())?, Basis::new(rep_or_alphabet, self.l_v())?))
    }

    fn echo(&self) -> String {
        format!(
            "seed={} mode={} eta={} l_u={} l_v={} n={} trials={} delta={}{}{}",
            self.seed,
            self.mode,
            self.eta(),
            self.l_u(),
            self.l_v(),
            self.n,
            self.trials,
            self.delta,
            self.rank.map(|r| format!(" rank={r}")).unwrap_or_default(),
            if self.exact { " exact=true" } else { "" }
        )
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound values: dimension-free, restricted to U x V, and the dimension-dependent baseline.
    Bounds(BoundsArgs),
    /// Sample repeatedly, measure the Hankel estimation error and compare it with the bounds.
    Experiment(ModelArg),
    /// Spectral learning from a sample file, a fresh sample, or the exact Hankel matrix.
    Learn(LearnArgs),
    /// Draw a sample from a model.
    Sample(ModelArg),
    /// Export an empirical Hankel matrix as a coordinate list.
    Hankel(HankelArgs),
    /// Moments of the mode-eta series of a model.
    Moments(MomentsArgs),
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Model file in `wfa v1` format.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub baseline: BaselineArgs,
}

#[derive(Debug, Args, Default)]
pub struct BaselineArgs {
    /// Per-string norm bound M for the dimension-dependent baseline.
    #[arg(long = "baseline-m")]
    pub baseline_m: Option<f64>,
    /// Dimension d for the baseline (defaults to |U| + |V|).
    #[arg(long = "baseline-d")]
    pub baseline_d: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Model file; its moments give S1 and S2, and it enables the restricted bound.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// First moment of the mode-eta series, when no model is given.
    #[arg(long)]
    pub s1: Option<f64>,
    /// Second moment of the mode-eta series, when no model is given.
    #[arg(long)]
    pub s2: Option<f64>,
    #[command(flatten)]
    pub baseline: BaselineArgs,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Target model: sampled from when no sample file is given, and the reference for metrics.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Sample file to learn from.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    /// Where to write the learned model.
    #[arg(long = "save-model")]
    pub save_model: Option<PathBuf>,
    /// Length of the strings compared in the L1 metric.
    #[arg(long = "eval-len", default_value_t = 6)]
    pub eval_len: usize,
}

#[derive(Debug, Args)]
pub struct HankelArgs {
    /// Sample file.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    /// Model to sample from when no sample file is given (also fixes the alphabet).
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Highest moment order.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
}

/// Result of a command: the main output and any diagnostics for stderr.
#[derive(Debug, Default)]
pub struct Output {
    pub text: String,
    pub warnings: Vec<String>,
}

pub fn run(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    if !(0.0..=1.0).contains(&g.eta) {
        return Err(usage(format!("--eta must be in [0, 1], got {}", g.eta)));
    }
    if g.n == 0 || g.trials == 0 {
        return Err(usage("--n and --trials must be positive"));
    }
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(g, a),
        Command::Experiment(a) => cmd_experiment(g, a),
        Command::Learn(a) => cmd_learn(g, a),
        Command::Sample(a) => cmd_sample(g, a),
        Command::Hankel(a) => cmd_hankel(g, a),
        Command::Moments(a) => cmd_moments(g, a),
    }
}

pub fn load_model(path: &Path, warnings: &mut Vec<String>) -> Result<LinearRepresentation> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = parse_model(&text).with_context(|| format!("parsing {}", path.display()))?;
    warnings.extend(parsed.warnings.into_iter().map(|w| format!("{}: {w}", path.display())));
    Ok(parsed.rep)
}

fn model_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
}

/// `v` with `digits` significant digits.
pub fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    if (-5..digits as i32).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.prec$e}", prec = digits - 1)
    }
}

fn header(verb: &str, g: &Global, extra: &str) -> String {
    format!("# shankel {VERSION} {verb} {}{extra}\n", g.echo())
}

fn bound_row(out: &mut String, name: &str, r: &BoundReport) {
    let l = r.spec.l.map(|l| l.to_string()).unwrap_or_default();
    let _ = writeln!(
        out,
        "{name},{},{},{l},{},{},{},{},{},{}",
        r.spec.mode,
        r.spec.eta,
        r.spec.n,
        r.spec.delta,
        sig(r.t, 10),
        sig(r.sigma2_used, 6),
        sig(r.b_used, 6),
        sig(r.value, 6)
    );
}

fn baseline_value(
    g: &Global,
    baseline: &BaselineArgs,
    default_d: Option<f64>,
) -> Result<Option<(f64, f64)>> {
    let Some(m) = baseline.baseline_m else { return Ok(None) };
    let d = baseline
        .baseline_d
        .or(default_d)
        .ok_or_else(|| usage("--baseline-d is required for the baseline without a model"))?;
    Ok(Some((d, bounds::bound_baseline_eq1(m, d, g.n, g.delta)?)))
}

fn dim_free(g: &Global, s1: f64, s2: f64) -> Result<BoundReport> {
    let spec =
        BoundSpec::new(g.mode, g.eta(), g.n, g.delta, s1, s2).with_l(Some(g.l_u().max(g.l_v())));
    // the length cap only matters for the prefix bound
    let spec = if g.mode == Mode::Prefix { spec } else { spec.with_l(None) };
    Ok(bounds::bound(&spec)?)
}

pub fn cmd_bounds(g: &Global, a: &BoundsArgs) -> Result<Output> {
    let mut warnings = Vec::new();
    let mut out = header("bounds", g, "");
    out.push_str("bound,mode,eta,l,N,delta,t,sigma2,b,value\n");
    let rep = a.model.as_deref().map(|p| load_model(p, &mut warnings)).transpose()?;
    let (s1, s2) = match (&rep, a.s1, a.s2) {
        (Some(rep), None, None) => bounds::mode_moments(rep, g.mode, g.eta())?,
        (None, s1, Some(s2)) => {
            let s1 = match (g.mode, s1) {
                (Mode::Standard, s1) => s1.unwrap_or(1.0),
                (_, Some(s1)) => s1,
                (_, None) => return Err(usage("--s1 is required for prefix and factor bounds")),
            };
            (s1, s2)
        }
        _ => return Err(usage("give either --model or --s2 (with --s1 for smoothed modes)")),
    };
    bound_row(&mut out, "dim_free", &dim_free(g, s1, s2)?);
    let mut default_d = None;
    if let Some(rep) = &rep {
        let (u, v) = g.bases(rep.alphabet())?;
        default_d = Some((u.len() + v.len()) as f64);
        let l = (g.mode == Mode::Prefix).then_some(g.l_u().max(g.l_v()));
        let r = bounds::bound_opt(rep, &u, &v, g.mode, g.eta(), g.n, g.delta, l)?;
        bound_row(&mut out, "opt_uv", &r);
    }
    if let Some((d, value)) = baseline_value(g, &a.baseline, default_d)? {
        let _ = writeln!(
            out,
            "baseline,{},{},,{},{},,,,{}",
            g.mode,
            g.eta(),
            g.n,
            g.delta,
            sig(value, 6)
        );
        warnings.push(format!("baseline uses d = {d}"));
    }
    Ok(Output { text: out, warnings })
}

fn pfa(rep: LinearRepresentation) -> Result<PfaForm> {
    PfaForm::try_from(rep).map_err(|e| anyhow!("sampling needs a probabilistic automaton: {e}"))
}

/// Seed of trial `i` derived from the base seed.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    splitmix64(seed ^ (trial as u64 + 1).wrapping_mul(TRIAL_SEED_STRIDE))
}

pub fn cmd_experiment(g: &Global, a: &ModelArg) -> Result<Output> {
    let mut warnings = Vec::new();
    let rep = load_model(&a.model, &mut warnings)?;
    let (u, v) = g.bases(rep.alphabet())?;
    let eta = g.eta();
    let (s1, s2) = bounds::mode_moments(&rep, g.mode, eta)?;
    let dim_free = dim_free(g, s1, s2)?;
    let l = (g.mode == Mode::Prefix).then_some(g.l_u().max(g.l_v()));
    let opt = bounds::bound_opt(&rep, &u, &v, g.mode, eta, g.n, g.delta, l)?;
    let baseline =
        baseline_value(g, &a.baseline, Some((u.len() + v.len()) as f64))?.map(|(_, v)| v);
    let hp = exact_hankel(&rep, &u, &v, g.mode, eta)?;
    let pfa = pfa(rep)?;

    let observed: Vec<(u64, f64)> = (0..g.trials)
        .into_par_iter()
        .map(|trial| -> Result<(u64, f64)> {
            let seed = trial_seed(g.seed, trial);
            let s = sample(&pfa, g.n, seed)?;
            let hs = empirical_hankel(&s.strings, &u, &v, g.mode, eta)?;
            Ok((seed, spectral_norm_diff(&hs, &hp)?.value))
        })
        .collect::<Result<_>>()?;

    let baseline_text = baseline.map(|v| sig(v, 6)).unwrap_or_default();
    let mut out = header("experiment", g, &format!(" model={}", model_id(&a.model)));
    out.push_str("row,trial,seed,observed,max_observed,dim_free,opt_uv,baseline,coverage\n");
    for (trial, (seed, value)) in observed.iter().enumerate() {
        let _ = writeln!(
            out,
            "trial,{trial},{seed},{},,{},{},{baseline_text},{}",
            sig(*value, 6),
            sig(dim_free.value, 6),
            sig(opt.value, 6),
            u8::from(*value <= dim_free.value)
        );
    }
    let mut values: Vec<f64> = observed.iter().map(|(_, v)| *v).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    let median = if values.len() % 2 == 1 {
        values[values.len() / 2]
    } else {
        0.5 * (values[values.len() / 2 - 1] + values[values.len() / 2])
    };
    let covered = values.iter().filter(|&&v| v <= dim_free.value).count();
    let _ = writeln!(
        out,
        "summary,{},{},{},{},{},{},{baseline_text},{}",
        g.trials,
        g.seed,
        sig(median, 6),
        sig(*values.last().expect("at least one trial"), 6),
        sig(dim_free.value, 6),
        sig(opt.value, 6),
        sig(covered as f64 / g.trials as f64, 6)
    );
    Ok(Output { text: out, warnings })
}

fn read_sample_file(path: &Path, rep: &LinearRepresentation) -> Result<Vec<Word>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_sample(&text, rep.alphabet())
        .with_context(|| format!("parsing {}", path.display()))?
        .strings)
}

pub fn cmd_learn(g: &Global, a: &LearnArgs) -> Result<Output> {
    let rank = g.rank.ok_or_else(|| usage("learn requires --rank"))?;
    let mut warnings = Vec::new();
    let target = match &a.model {
        Some(p) => load_model(p, &mut warnings)?,
        None => return Err(usage("learn needs --model (target, or alphabet for --sample)")),
    };
    if g.exact && a.sample.is_some() {
        return Err(usage("--exact learns from the model, not from --sample"));
    }
    let eta = g.eta();
    let (u, v) = g.bases(target.alphabet())?;
    let hp = exact_hankel(&target, &u, &v, g.mode, eta)?;
    let strings = match (&a.sample, g.exact) {
        (_, true) => None,
        (Some(path), false) => Some(read_sample_file(path, &target)?),
        (None, false) => Some(sample(&pfa(target.clone())?, g.n, g.seed)?.strings),
    };
    let (model, n, norm_diff) = match &strings {
        None => (learn_from_exact(&target, &u, &v, g.mode, eta, rank)?, 0, 0.0),
        Some(strings) => {
            let hs = empirical_hankel(strings, &u, &v, g.mode, eta)?;
            let diff = spectral_norm_diff(&hs, &hp)?.value;
            (learn(strings, &u, &v, g.mode, eta, rank)?, strings.len(), diff)
        }
    };
    if let Some(path) = &a.save_model {
        std::fs::write(path, render_model(&model.rep))
            .with_context(|| format!("writing {}", path.display()))?;
    }

    let l1 = l1_distance_upto(&model.rep, &target, a.eval_len)?;
    let truth = truncated_svd(&hp, rank)?;
    let distance = subspace_distance(&truth.right, &model.svd.right)?;
    let sigma_min = truth.singular_values[rank - 1];
    let (stewart, vacuous) = match stewart_bound(norm_diff, sigma_min) {
        Ok(b) => (sig(b.value, 6), u8::from(b.vacuous).to_string()),
        Err(_) => (String::new(), String::new()),
    };
    let mut out = header("learn", g, &format!(" model={}", model_id(a.model.as_deref().unwrap())));
    out.push_str("rank,mode,eta,N,l1,subspace_distance,norm_diff,sigma_min,stewart,vacuous\n");
    let _ = writeln!(
        out,
        "{rank},{},{eta},{n},{},{},{},{},{stewart},{vacuous}",
        g.mode,
        sig(l1, 6),
        sig(distance, 6),
        sig(norm_diff, 6),
        sig(sigma_min, 6)
    );
    Ok(Output { text: out, warnings })
}

pub fn cmd_sample(g: &Global, a: &ModelArg) -> Result<Output> {
    let mut warnings = Vec::new();
    let rep = load_model(&a.model, &mut warnings)?;
    let alphabet = rep.alphabet().clone();
    let s = sample(&pfa(rep)?, g.n, g.seed)?.with_source(model_id(&a.model));
    Ok(Output { text: render_sample(&s, &alphabet), warnings })
}

pub fn cmd_hankel(g: &Global, a: &HankelArgs) -> Result<Output> {
    let mut warnings = Vec::new();
    let rep = load_model(&a.model, &mut warnings)?;
    let strings = match &a.sample {
        Some(path) => read_sample_file(path, &rep)?,
        None => sample(&pfa(rep.clone())?, g.n, g.seed)?.strings,
    };
    let (u, v) = g.bases(rep.alphabet())?;
    let h = empirical_hankel(&strings, &u, &v, g.mode, g.eta())?;
    let mut buf = Vec::new();
    h.write_coo(&mut buf)?;
    Ok(Output { text: String::from_utf8(buf)?, warnings })
}

pub fn cmd_moments(g: &Global, a: &MomentsArgs) -> Result<Output> {
    if a.k == 0 {
        bail!(usage("--k must be positive"));
    }
    let mut warnings = Vec::new();
    let rep = load_model(&a.model, &mut warnings)?;
    let mut out = header("moments", g, &format!(" model={}", model_id(&a.model)));
    out.push_str("k,mode,eta,moment\n");
    for k in 1..=a.k {
        let m = rep.moment(k, g.mode, g.eta())?;
        let _ = writeln!(out, "{k},{},{},{}", g.mode, g.eta(), sig(m, 6));
    }
    Ok(Output { text: out, warnings })
}
