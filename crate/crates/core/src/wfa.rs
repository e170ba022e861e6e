//! Linear representations `⟨I, (M_x), T⟩` of rational series.
//!
//! A representation computes `r(x₁…xₙ) = Iᵀ M_{x₁}⋯M_{xₙ} T`. When the
//! spectral radius of `M_Σ = Σ_x M_x` is below one, the series converges and
//! its moments
//!
//! ```text
//! S^(k)      = Iᵀ (I - M_Σ)^-k T
//! S̄_η^(k)    = Iᵀ (I - M_Σ)^-k (I - ηM_Σ)^-1 T
//! Ŝ_η^(k)    = Iᵀ (I - ηM_Σ)^-1 (I - M_Σ)^-k (I - ηM_Σ)^-1 T
//! ```
//!
//! are obtained by repeated linear solves. The prefix and factor variants
//! `p̄_η(u) = Σ_x η^|x| p(ux)` and `p̂_η(u) = Σ_{x,y} η^|xy| p(xuy)` share the
//! transition matrices of `p` and only change the boundary vectors, see
//! [`LinearRepresentation::transform`].

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lang::Alphabet;
use crate::linalg::{spectral_radius_estimate, Resolvent};

/// A representation is treated as convergent iff its estimated spectral
/// radius is below `1 - CONVERGENCE_MARGIN`.
pub const CONVERGENCE_MARGIN: f64 = 1e-6;

pub const DEFAULT_PFA_TOLERANCE: f64 = 1e-9;

/// Which series a Hankel matrix, moment or bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `p` itself.
    Standard,
    /// The η-smoothed prefix series `p̄_η`.
    Prefix,
    /// The η-smoothed factor series `p̂_η`.
    Factor,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Prefix => "prefix",
            Mode::Factor => "factor",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Mode::Standard),
            "prefix" => Ok(Mode::Prefix),
            "factor" => Ok(Mode::Factor),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode `{other}` (expected standard, prefix or factor)"
            ))),
        }
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearRepresentation {
    alphabet: Alphabet,
    initial: DVector<f64>,
    transitions: Vec<DMatrix<f64>>,
    final_weights: DVector<f64>,
}

impl LinearRepresentation {
    /// `transitions[x]` is the matrix of the `x`-th alphabet symbol.
    pub fn new(
        alphabet: Alphabet,
        initial: DVector<f64>,
        transitions: Vec<DMatrix<f64>>,
        final_weights: DVector<f64>,
    ) -> Result<Self> {
        let d = initial.len();
        if d == 0 {
            return Err(Error::Shape("dimension must be positive".into()));
        }
        if final_weights.len() != d {
            return Err(Error::Shape(format!(
                "final vector has length {}, expected {d}",
                final_weights.len()
            )));
        }
        if transitions.len() != alphabet.len() {
            return Err(Error::Shape(format!(
                "{} transition matrices for {} symbols",
                transitions.len(),
                alphabet.len()
            )));
        }
        for (x, m) in transitions.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(Error::Shape(format!(
                    "matrix for `{}` is {}x{}, expected {d}x{d}",
                    alphabet.symbol(x),
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(LinearRepresentation { alphabet, initial, transitions, final_weights })
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    pub fn final_weights(&self) -> &DVector<f64> {
        &self.final_weights
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    pub fn transition(&self, symbol: usize) -> &DMatrix<f64> {
        &self.transitions[symbol]
    }

    /// `M_Σ = Σ_x M_x`.
    pub fn m_sigma(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.transitions.iter().fold(DMatrix::zeros(d, d), |acc, m| acc + m)
    }

    /// `Iᵀ M_u` as a column vector.
    pub fn forward(&self, word: &[usize]) -> Result<DVector<f64>> {
        let mut row = self.initial.clone();
        for &x in word {
            let m = self.transitions.get(x).ok_or_else(|| Error::UnknownSymbol(format!("#{x}")))?;
            row = m.tr_mul(&row);
        }
        Ok(row)
    }

    pub fn evaluate(&self, word: &[usize]) -> Result<f64> {
        Ok(self.forward(word)?.dot(&self.final_weights))
    }

    pub fn evaluate_symbols<S: AsRef<str>>(&self, word: &[S]) -> Result<f64> {
        self.evaluate(&self.alphabet.encode(word)?)
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius_estimate(&self.m_sigma())
    }

    fn ensure_convergent(&self, scale: f64) -> Result<()> {
        let rho = self.spectral_radius() * scale;
        if rho < 1.0 - CONVERGENCE_MARGIN {
            Ok(())
        } else {
            Err(Error::Divergent { spectral_radius: rho })
        }
    }

    /// `r(Σ*) = Iᵀ (I - M_Σ)^-1 T`.
    pub fn series_sum(&self) -> Result<f64> {
        self.moment(1, Mode::Standard, 0.0)
    }

    /// Moment `S^(k)` of the mode-η series (η is ignored for `Standard`).
    pub fn moment(&self, k: usize, mode: Mode, eta: f64) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument("moment order must be positive".into()));
        }
        if mode != Mode::Standard {
            check_eta(eta)?;
        }
        self.ensure_convergent(1.0)?;
        let m = self.m_sigma();
        let full = Resolvent::new(&m, 1.0);
        let mut x = match mode {
            Mode::Standard => self.final_weights.clone(),
            Mode::Prefix | Mode::Factor => Resolvent::new(&m, eta).solve(&self.final_weights)?,
        };
        for _ in 0..k {
            x = full.solve(&x)?;
        }
        let left = match mode {
            Mode::Factor => Resolvent::new(&m.transpose(), eta).solve(&self.initial)?,
            _ => self.initial.clone(),
        };
        Ok(left.dot(&x))
    }

    /// Representation of `p̄_η` (prefix) or `p̂_η` (factor): `T̄_η = (I - ηM_Σ)^-1 T`
    /// and, for factor, `Î_η = (I - ηM_Σᵀ)^-1 I`.
    pub fn transform(&self, mode: Mode, eta: f64) -> Result<LinearRepresentation> {
        if mode == Mode::Standard {
            return Ok(self.clone());
        }
        check_eta(eta)?;
        self.ensure_convergent(eta)?;
        let m = self.m_sigma();
        let mut out = self.clone();
        out.final_weights = Resolvent::new(&m, eta).solve(&self.final_weights)?;
        if mode == Mode::Factor {
            out.initial = Resolvent::new(&m.transpose(), eta).solve(&self.initial)?;
        }
        Ok(out)
    }

    /// Inverse of [`transform`](Self::transform): `T = (I - ηM_Σ) T̄_η` and,
    /// for factor, `I = (I - ηM_Σᵀ) Î_η`.
    pub fn de_smooth(&self, mode: Mode, eta: f64) -> Result<LinearRepresentation> {
        if mode == Mode::Standard {
            return Ok(self.clone());
        }
        check_eta(eta)?;
        let m = self.m_sigma();
        let mut out = self.clone();
        out.final_weights = &self.final_weights - (&m * &self.final_weights) * eta;
        if mode == Mode::Factor {
            out.initial = &self.initial - m.tr_mul(&self.initial) * eta;
        }
        Ok(out)
    }

    pub fn validate(&self, require_pfa: bool) -> ValidationReport {
        let spectral_radius = self.spectral_radius();
        ValidationReport {
            spectral_radius,
            convergent: spectral_radius < 1.0 - CONVERGENCE_MARGIN,
            pfa_violations: require_pfa.then(|| pfa_violations(self, DEFAULT_PFA_TOLERANCE)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub spectral_radius: f64,
    pub convergent: bool,
    /// `None` when PFA checks were not requested.
    pub pfa_violations: Option<Vec<String>>,
}

impl ValidationReport {
    pub fn is_pfa(&self) -> bool {
        matches!(&self.pfa_violations, Some(v) if v.is_empty())
    }
}

fn pfa_violations(rep: &LinearRepresentation, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    let negative = |v: &f64| *v < -tol;
    if rep.initial.iter().any(negative) {
        out.push("initial vector has negative entries".to_string());
    }
    if rep.final_weights.iter().any(negative) {
        out.push("final vector has negative entries".to_string());
    }
    for (x, m) in rep.transitions.iter().enumerate() {
        if m.iter().any(negative) {
            out.push(format!("matrix `{}` has negative entries", rep.alphabet.symbol(x)));
        }
    }
    let total: f64 = rep.initial.sum();
    if (total - 1.0).abs() > tol {
        out.push(format!("initial weights sum to {total}, expected 1"));
    }
    // column_sum adds up the columns, giving per-row totals
    let row_sums = rep.m_sigma().column_sum();
    for i in 0..rep.dim() {
        let s = rep.final_weights[i] + row_sums[i];
        if (s - 1.0).abs() > tol {
            out.push(format!("state {i}: stop + outgoing weight is {s}, expected 1"));
        }
    }
    out
}

/// A representation in PFA normal form, ready for sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct PfaForm {
    rep: LinearRepresentation,
    tolerance: f64,
}

impl PfaForm {
    pub fn new(rep: LinearRepresentation, tolerance: f64) -> Result<Self> {
        let violations = pfa_violations(&rep, tolerance);
        if violations.is_empty() {
            Ok(PfaForm { rep, tolerance })
        } else {
            Err(Error::NotPfa(violations.join("; ")))
        }
    }

    pub fn rep(&self) -> &LinearRepresentation {
        &self.rep
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn into_rep(self) -> LinearRepresentation {
        self.rep
    }
}

impl TryFrom<LinearRepresentation> for PfaForm {
    type Error = Error;

    fn try_from(rep: LinearRepresentation) -> Result<Self> {
        PfaForm::new(rep, DEFAULT_PFA_TOLERANCE)
    }
}
