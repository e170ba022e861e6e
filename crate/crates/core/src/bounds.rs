//! Dimension-free concentration bounds on `‖H_S - H_p‖₂`.
//!
//! Every bound has the matrix Bernstein shape
//! `sqrt(2σ²t/N) + bt/(3N)`, holding with probability at least
//! `1 - k·t/(e^t - t - 1)` where `k = 2`. The modes differ in `b` and `σ²`:
//!
//! | mode     | `b`                                  | `σ²`        |
//! |----------|--------------------------------------|-------------|
//! | standard | `2`                                  | `S^(2)`     |
//! | prefix   | `min(l+1, 1/(1-η)) + S̄^(1)`          | `S̄^(2)`     |
//! | factor   | `(1-η)^-2 + Ŝ^(1)`                   | `K_η Ŝ^(2)` |
//!
//! where `S̄`, `Ŝ` are moments of the smoothed series. With η = 0 both
//! smoothed variants reduce to the standard bound.

use crate::error::{Error, Result};
use crate::hankel::exact_hankel;
use crate::lang::Basis;
use crate::wfa::{check_eta, LinearRepresentation, Mode};

/// Trace constant of the Bernstein inequality; 2 in every mode.
pub const K_TRACE: f64 = 2.0;

const T_LOW: f64 = 1e-8;
const T_HIGH: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundSpec {
    pub mode: Mode,
    pub eta: f64,
    pub n: usize,
    pub delta: f64,
    /// First moment of the mode-η series.
    pub s1: f64,
    /// Second moment of the mode-η series.
    pub s2: f64,
    /// Maximal length of strings in `U` and `V`, if bounded.
    pub l: Option<usize>,
    pub k_trace: f64,
}

impl BoundSpec {
    pub fn new(mode: Mode, eta: f64, n: usize, delta: f64, s1: f64, s2: f64) -> Self {
        let eta = if mode == Mode::Standard { 0.0 } else { eta };
        BoundSpec { mode, eta, n, delta, s1, s2, l: None, k_trace: K_TRACE }
    }

    pub fn with_l(mut self, l: Option<usize>) -> Self {
        self.l = l;
        self
    }

    /// Reads `s1`, `s2` off the moments of `rep`.
    pub fn from_rep(
        rep: &LinearRepresentation,
        mode: Mode,
        eta: f64,
        n: usize,
        delta: f64,
    ) -> Result<Self> {
        let (s1, s2) = mode_moments(rep, mode, eta)?;
        Ok(Self::new(mode, eta, n, delta, s1, s2))
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta {} not in (0, 1)", self.delta)));
        }
        check_eta(self.eta)?;
        if !(self.s1 > 0.0 && self.s2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "moments must be positive, got S1 = {}, S2 = {}",
                self.s1, self.s2
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub spec: BoundSpec,
    pub t: f64,
    pub b_used: f64,
    pub sigma2_used: f64,
    pub value: f64,
}

/// `(S^(1), S^(2))` of the mode-η series of `rep`.
pub fn mode_moments(rep: &LinearRepresentation, mode: Mode, eta: f64) -> Result<(f64, f64)> {
    Ok((rep.moment(1, mode, eta)?, rep.moment(2, mode, eta)?))
}

fn failure_probability(t: f64, k_trace: f64) -> f64 {
    // e^t - t - 1 without cancellation for small t
    k_trace * t / (t.exp_m1() - t)
}

/// Solves `k·t/(e^t - t - 1) = δ` for `t` by bisection.
pub fn solve_t(delta: f64, k_trace: f64) -> Result<f64> {
    let (hi_p, lo_p) = (failure_probability(T_LOW, k_trace), failure_probability(T_HIGH, k_trace));
    if !(delta > lo_p && delta < hi_p) || !(k_trace > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "failure probability {delta} outside the attainable range ({lo_p:e}, {hi_p:e})"
        )));
    }
    let (mut lo, mut hi) = (T_LOW, T_HIGH);
    // the failure probability decreases in t
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if failure_probability(mid, k_trace) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn bernstein(spec: BoundSpec, sigma2: f64, b: f64) -> Result<BoundReport> {
    let t = solve_t(spec.delta, spec.k_trace)?;
    let n = spec.n as f64;
    let value = (2.0 * sigma2 * t / n).sqrt() + b * t / (3.0 * n);
    Ok(BoundReport { spec, t, b_used: b, sigma2_used: sigma2, value })
}

/// Bound for the standard Hankel matrix.
pub fn bound_standard(s2: f64, n: usize, delta: f64) -> Result<BoundReport> {
    let spec = BoundSpec::new(Mode::Standard, 0.0, n, delta, 1.0, s2);
    spec.check()?;
    bernstein(spec, s2, 2.0)
}

fn prefix_b(s1: f64, eta: f64, l: Option<usize>) -> Result<f64> {
    let geometric = if eta < 1.0 { 1.0 / (1.0 - eta) } else { f64::INFINITY };
    let cap = match l {
        Some(l) => geometric.min(l as f64 + 1.0),
        None if eta < 1.0 => geometric,
        None => {
            return Err(Error::InvalidArgument(
                "the prefix bound needs 0 <= eta < 1 unless a maximal length l is given".into(),
            ))
        }
    };
    Ok(cap + s1)
}

/// Bound for the prefix Hankel matrix; with `l`, the per-string norm uses
/// `min(l+1, 1/(1-η))`, which also covers η = 1.
pub fn bound_prefix(
    s1: f64,
    s2: f64,
    eta: f64,
    n: usize,
    delta: f64,
    l: Option<usize>,
) -> Result<BoundReport> {
    let spec = BoundSpec::new(Mode::Prefix, eta, n, delta, s1, s2).with_l(l);
    spec.check()?;
    bernstein(spec, s2, prefix_b(s1, eta, l)?)
}

/// `sup_n (n+1)η^n`, bounded by 1 for η ≤ 1/e and by `1/(-eη ln η)` above.
pub fn k_eta(eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if eta >= 1.0 {
        return Err(Error::InvalidArgument("K_eta is infinite at eta = 1".into()));
    }
    if eta <= (-1.0f64).exp() {
        Ok(1.0)
    } else {
        Ok(1.0 / (-std::f64::consts::E * eta * eta.ln()))
    }
}

fn factor_b(s1: f64, eta: f64) -> f64 {
    (1.0 - eta).powi(-2) + s1
}

/// Bound for the factor Hankel matrix, 0 ≤ η < 1.
pub fn bound_factor(s1: f64, s2: f64, eta: f64, n: usize, delta: f64) -> Result<BoundReport> {
    let spec = BoundSpec::new(Mode::Factor, eta, n, delta, s1, s2);
    spec.check()?;
    let k = k_eta(eta)?;
    bernstein(spec, k * s2, factor_b(s1, eta))
}

/// Dispatches on `spec.mode`.
pub fn bound(spec: &BoundSpec) -> Result<BoundReport> {
    match spec.mode {
        Mode::Standard => bound_standard(spec.s2, spec.n, spec.delta),
        Mode::Prefix => bound_prefix(spec.s1, spec.s2, spec.eta, spec.n, spec.delta, spec.l),
        Mode::Factor => bound_factor(spec.s1, spec.s2, spec.eta, spec.n, spec.delta),
    }
}

/// Dimension-dependent matrix Bernstein baseline
/// `(6M/√N)(√ln d + √ln(1/δ))`.
pub fn bound_baseline_eq1(m: f64, d: f64, n: usize, delta: f64) -> Result<f64> {
    if !(m > 0.0) || !(d > 1.0) || n == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "baseline needs M > 0, d > 1, N >= 1, 0 < delta < 1 (got {m}, {d}, {n}, {delta})"
        )));
    }
    Ok(6.0 * m / (n as f64).sqrt() * (d.ln().sqrt() + (1.0 / delta).ln().sqrt()))
}

/// `Σ_{(u,v) ∈ U×V}` of the mode-η series at `uv`.
pub fn restricted_sigma2(
    rep: &LinearRepresentation,
    row_basis: &Basis,
    col_basis: &Basis,
    mode: Mode,
    eta: f64,
) -> Result<f64> {
    Ok(exact_hankel(rep, row_basis, col_basis, mode, eta)?.entry_sum())
}

/// The mode's bound with `σ²` restricted to the entries of `U × V`.
#[allow(clippy::too_many_arguments)]
pub fn bound_opt(
    rep: &LinearRepresentation,
    row_basis: &Basis,
    col_basis: &Basis,
    mode: Mode,
    eta: f64,
    n: usize,
    delta: f64,
    l: Option<usize>,
) -> Result<BoundReport> {
    let spec = BoundSpec::from_rep(rep, mode, eta, n, delta)?.with_l(l);
    spec.check()?;
    let restricted = restricted_sigma2(rep, row_basis, col_basis, mode, spec.eta)?;
    let (sigma2, b) = match mode {
        Mode::Standard => (restricted, 2.0),
        Mode::Prefix => (restricted, prefix_b(spec.s1, spec.eta, l)?),
        Mode::Factor => (k_eta(spec.eta)? * restricted, factor_b(spec.s1, spec.eta)),
    };
    bernstein(spec, sigma2, b)
}
