//! Empirical and exact Hankel matrices over `U × V`, and norms.
//!
//! For a sample `S` the empirical matrix is the mean of per-string matrices:
//!
//! * standard: `H_w[u,v] = 1{uv = w}`
//! * prefix:   `H̄_{η,w}[u,v] = η^(|w|-|uv|)` when `uv` is a prefix of `w`
//! * factor:   `Ĥ_{η,w}[u,v] = η^(|w|-|uv|) · #occurrences of uv in w`
//!
//! Only splits compatible with `w` are enumerated, so building a Hankel
//! matrix costs `O(|S| · |w|²)` regardless of `|U|·|V|`. The exact matrix of
//! a rational series is kept factored as `A·B` with `A[u] = Iᵀ M_u` and
//! `B[v] = M_v T`; differences `H_S - A·B` are only ever applied, never
//! stored, unless they are small enough for a dense fallback.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lang::{Basis, Word};
use crate::linalg::{largest_singular_value, LanczosOptions, MatrixOperator, NormEstimate};
use crate::wfa::{check_eta, LinearRepresentation, Mode};

/// Differences with at most this many entries are materialised densely.
pub const DENSE_FALLBACK_ENTRIES: usize = 4_000_000;

const FLUSH_TO_ZERO: f64 = 1e-300;

/// Empirical Hankel matrix in coordinate form, sorted row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHankel {
    row_basis: Basis,
    col_basis: Basis,
    mode: Mode,
    eta: f64,
    entries: Vec<(usize, usize, f64)>,
    // row_starts[r]..row_starts[r+1] indexes the entries of row r
    row_starts: Vec<usize>,
    sample_size: usize,
}

impl SparseHankel {
    /// Builds a matrix from explicit coordinates; duplicates are summed and
    /// zeros dropped.
    pub fn from_entries(
        row_basis: &Basis,
        col_basis: &Basis,
        mode: Mode,
        eta: f64,
        sample_size: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in entries {
            if r >= row_basis.len() || c >= col_basis.len() {
                return Err(Error::Shape(format!(
                    "entry ({r}, {c}) outside a {}x{} matrix",
                    row_basis.len(),
                    col_basis.len()
                )));
            }
            *acc.entry((r, c)).or_insert(0.0) += v;
        }
        Ok(Self::from_sorted(row_basis, col_basis, mode, eta, sample_size, acc.into_iter()))
    }

    fn from_sorted(
        row_basis: &Basis,
        col_basis: &Basis,
        mode: Mode,
        eta: f64,
        sample_size: usize,
        sorted: impl Iterator<Item = ((usize, usize), f64)>,
    ) -> Self {
        let entries: Vec<(usize, usize, f64)> =
            sorted.filter(|(_, v)| *v != 0.0).map(|((r, c), v)| (r, c, v)).collect();
        let mut row_starts = vec![0usize; row_basis.len() + 1];
        for &(r, _, _) in &entries {
            row_starts[r + 1] += 1;
        }
        for r in 0..row_basis.len() {
            row_starts[r + 1] += row_starts[r];
        }
        SparseHankel {
            row_basis: row_basis.clone(),
            col_basis: col_basis.clone(),
            mode,
            eta,
            entries,
            row_starts,
            sample_size,
        }
    }

    pub fn row_basis(&self) -> &Basis {
        &self.row_basis
    }

    pub fn col_basis(&self) -> &Basis {
        &self.col_basis
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = &self.entries[self.row_starts[row]..self.row_starts[row + 1]];
        range.binary_search_by_key(&col, |&(_, c, _)| c).map(|i| range[i].2).unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.row_basis.len(), self.col_basis.len());
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Coordinate-list export: a `hankel <mode> <eta> <|U|> <|V|> <N>` header,
    /// then one `row col value` line per nonzero entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "hankel {} {} {} {} {}",
            self.mode,
            self.eta,
            self.row_basis.len(),
            self.col_basis.len(),
            self.sample_size
        )?;
        for &(r, c, v) in &self.entries {
            writeln!(out, "{r} {c} {v}")?;
        }
        Ok(())
    }
}

impl MatrixOperator for SparseHankel {
    fn nrows(&self) -> usize {
        self.row_basis.len()
    }

    fn ncols(&self) -> usize {
        self.col_basis.len()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.row_basis.len());
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.col_basis.len());
        for &(r, c, v) in &self.entries {
            x[c] += v * y[r];
        }
        x
    }

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.row_basis.len(), x.ncols());
        for &(r, c, v) in &self.entries {
            for j in 0..x.ncols() {
                y[(r, j)] += v * x[(c, j)];
            }
        }
        y
    }

    fn apply_transpose_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.col_basis.len(), y.ncols());
        for &(r, c, v) in &self.entries {
            for j in 0..y.ncols() {
                x[(c, j)] += v * y[(r, j)];
            }
        }
        x
    }
}

fn check_word(word: &[usize], basis: &Basis) -> Result<()> {
    let k = basis.alphabet().len();
    match word.iter().find(|&&x| x >= k) {
        Some(x) => Err(Error::UnknownSymbol(format!("#{x}"))),
        None => Ok(()),
    }
}

/// Calls `f(row, col, weight)` for every `(u, v) ∈ U × V` on which the
/// per-string matrix of `w` is nonzero (possibly several times per cell in
/// factor mode, once per occurrence).
fn for_each_split(
    w: &[usize],
    row_basis: &Basis,
    col_basis: &Basis,
    mode: Mode,
    eta: f64,
    mut f: impl FnMut(usize, usize, f64),
) {
    let (lu, lv) = (row_basis.max_len(), col_basis.max_len());
    let n = w.len();
    let mut emit = |s: &[usize], weight: f64| {
        if weight == 0.0 || s.len() > lu + lv {
            return;
        }
        let lo = s.len().saturating_sub(lv);
        let hi = s.len().min(lu);
        for k in lo..=hi {
            if let (Some(r), Some(c)) = (row_basis.index_of(&s[..k]), col_basis.index_of(&s[k..])) {
                f(r, c, weight);
            }
        }
    };
    match mode {
        Mode::Standard => emit(w, 1.0),
        Mode::Prefix => {
            for j in 0..=n.min(lu + lv) {
                emit(&w[..j], eta.powi((n - j) as i32));
            }
        }
        Mode::Factor => {
            for i in 0..=n {
                for j in i..=n.min(i + lu + lv) {
                    emit(&w[i..j], eta.powi((n - (j - i)) as i32));
                }
            }
        }
    }
}

/// Hankel matrix of a single string (sample size 1).
pub fn per_string_hankel(
    w: &[usize],
    row_basis: &Basis,
    col_basis: &Basis,
    mode: Mode,
    eta: f64,
) -> Result<SparseHankel> {
    empirical_hankel(std::slice::from_ref(&w.to_vec()), row_basis, col_basis, mode, eta)
}

/// Mean of the per-string Hankel matrices over `sample`.
pub fn empirical_hankel(
    sample: &[Word],
    row_basis: &Basis,
    col_basis: &Basis,
    mode: Mode,
    eta: f64,
) -> Result<SparseHankel> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("sample must not be empty".into()));
    }
    if row_basis.alphabet() != col_basis.alphabet() {
        return Err(Error::Basis("row and column bases use different alphabets".into()));
    }
    if mode != Mode::Standard {
        check_eta(eta)?;
    }
    let mut counts: BTreeMap<&[usize], usize> = BTreeMap::new();
    for w in sample {
        check_word(w, row_basis)?;
        *counts.entry(w.as_slice()).or_insert(0) += 1;
    }
    // per-cell sums follow the BTreeMap order, so results are reproducible
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    for (w, count) in counts {
        let count = count as f64;
        for_each_split(w, row_basis, col_basis, mode, eta, |r, c, weight| {
            *acc.entry((r, c)).or_insert(0.0) += count * weight;
        });
    }
    let n = sample.len() as f64;
    let mut sorted: Vec<((usize, usize), f64)> = acc.into_iter().map(|(k, v)| (k, v / n)).collect();
    sorted.sort_unstable_by_key(|&(k, _)| k);
    let eta = if mode == Mode::Standard { 0.0 } else { eta };
    Ok(SparseHankel::from_sorted(row_basis, col_basis, mode, eta, sample.len(), sorted.into_iter()))
}

/// Exact Hankel matrix `A·B` of a rational series, `A` being `|U|×d` and `B`
/// being `d×|V|`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredHankel {
    row_basis: Basis,
    col_basis: Basis,
    mode: Mode,
    eta: f64,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
}

impl FactoredHankel {
    pub fn from_factors(
        row_basis: &Basis,
        col_basis: &Basis,
        mode: Mode,
        eta: f64,
        left: DMatrix<f64>,
        right: DMatrix<f64>,
    ) -> Result<Self> {
        if left.nrows() != row_basis.len()
            || right.ncols() != col_basis.len()
            || left.ncols() != right.nrows()
        {
            return Err(Error::Shape(format!(
                "factors {}x{} · {}x{} do not fit a {}x{} matrix",
                left.nrows(),
                left.ncols(),
                right.nrows(),
                right.ncols(),
                row_basis.len(),
                col_basis.len()
            )));
        }
        Ok(FactoredHankel {
            row_basis: row_basis.clone(),
            col_basis: col_basis.clone(),
            mode,
            eta,
            left,
            right,
        })
    }

    pub fn row_basis(&self) -> &Basis {
        &self.row_basis
    }

    pub fn col_basis(&self) -> &Basis {
        &self.col_basis
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Rows `α_u`.
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// Columns `β_v`.
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    pub fn inner_dim(&self) -> usize {
        self.left.ncols()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.left.row(row).transpose().dot(&self.right.column(col))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.left * &self.right
    }

    /// Sum of all entries, `(Σ_u α_u)·(Σ_v β_v)`.
    pub fn entry_sum(&self) -> f64 {
        let a: DVector<f64> = self.left.row_sum().transpose();
        let b: DVector<f64> = self.right.column_sum();
        a.dot(&b)
    }
}

impl MatrixOperator for FactoredHankel {
    fn nrows(&self) -> usize {
        self.left.nrows()
    }
    fn ncols(&self) -> usize {
        self.right.ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.left * (&self.right * x)
    }
    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        self.right.tr_mul(&self.left.tr_mul(y))
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.left * (&self.right * x)
    }
    fn apply_transpose_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.right.tr_mul(&self.left.tr_mul(y))
    }
}

/// Exact Hankel matrix of the mode-η series of `rep` over `U × V`. Rows and
/// columns are filled by prefix sharing: `α_{ux} = α_u M_x`, `β_{xv} = M_x β_v`.
pub fn exact_hankel(
    rep: &LinearRepresentation,
    row_basis: &Basis,
    col_basis: &Basis,
    mode: Mode,
    eta: f64,
) -> Result<FactoredHankel> {
    if row_basis.alphabet() != rep.alphabet() || col_basis.alphabet() != rep.alphabet() {
        return Err(Error::Basis("bases and representation use different alphabets".into()));
    }
    let report = rep.validate(false);
    if !report.convergent {
        return Err(Error::Divergent { spectral_radius: report.spectral_radius });
    }
    let eta = if mode == Mode::Standard { 0.0 } else { eta };
    let t = rep.transform(mode, eta)?;
    let d = t.dim();

    let mut left = DMatrix::zeros(row_basis.len(), d);
    left.set_row(0, &t.initial().transpose());
    for i in 1..row_basis.len() {
        let (parent, x) = row_basis.split_last(i).expect("non-empty word");
        let row = t.transition(x).tr_mul(&left.row(parent).transpose());
        left.set_row(i, &row.transpose());
    }
    let mut right = DMatrix::zeros(d, col_basis.len());
    right.set_column(0, t.final_weights());
    for j in 1..col_basis.len() {
        let (x, rest) = col_basis.split_first(j).expect("non-empty word");
        let col = t.transition(x) * right.column(rest);
        right.set_column(j, &col);
    }
    for v in left.iter_mut().chain(right.iter_mut()) {
        if v.abs() < FLUSH_TO_ZERO {
            *v = 0.0;
        }
    }
    FactoredHankel::from_factors(row_basis, col_basis, mode, eta, left, right)
}

/// The operator `x ↦ H_S x - A(Bx)`.
pub struct HankelDifference<'a> {
    pub empirical: &'a SparseHankel,
    pub exact: &'a FactoredHankel,
}

impl MatrixOperator for HankelDifference<'_> {
    fn nrows(&self) -> usize {
        self.empirical.nrows()
    }
    fn ncols(&self) -> usize {
        self.empirical.ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.empirical.apply(x) - self.exact.apply(x)
    }
    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        self.empirical.apply_transpose(y) - self.exact.apply_transpose(y)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    /// Materialise the difference when `|U|·|V|` does not exceed this.
    pub dense_threshold: usize,
    pub lanczos: LanczosOptions,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { dense_threshold: DENSE_FALLBACK_ENTRIES, lanczos: LanczosOptions::default() }
    }
}

impl NormOptions {
    pub fn matrix_free() -> Self {
        NormOptions { dense_threshold: 0, ..Default::default() }
    }
}

/// `‖H_S - H_r‖₂` with default options.
pub fn spectral_norm_diff(hs: &SparseHankel, hp: &FactoredHankel) -> Result<NormEstimate> {
    spectral_norm_diff_with(hs, hp, &NormOptions::default())
}

pub fn spectral_norm_diff_with(
    hs: &SparseHankel,
    hp: &FactoredHankel,
    opts: &NormOptions,
) -> Result<NormEstimate> {
    if hs.row_basis() != hp.row_basis() || hs.col_basis() != hp.col_basis() {
        return Err(Error::Basis("empirical and exact Hankel matrices use different bases".into()));
    }
    let cells = hs.nrows().saturating_mul(hs.ncols());
    if cells <= opts.dense_threshold {
        let dense = hs.to_dense() - hp.to_dense();
        Ok(largest_singular_value(&dense, &opts.lanczos))
    } else {
        let diff = HankelDifference { empirical: hs, exact: hp };
        Ok(largest_singular_value(&diff, &opts.lanczos))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InducedNorms {
    /// Maximum absolute column sum.
    pub norm1: f64,
    /// Maximum absolute row sum.
    pub norm_inf: f64,
    /// Largest singular value.
    pub norm2: f64,
}

pub fn induced_norms(m: &DMatrix<f64>) -> InducedNorms {
    if m.is_empty() {
        return InducedNorms { norm1: 0.0, norm_inf: 0.0, norm2: 0.0 };
    }
    let norm1 = m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let norm_inf = m.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    let norm2 = m.singular_values().max();
    InducedNorms { norm1, norm_inf, norm2 }
}

/// `[[0, Z], [Zᵀ, 0]]`.
pub fn dilate(z: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = z.shape();
    let mut x = DMatrix::zeros(m + n, m + n);
    x.view_mut((0, m), (m, n)).copy_from(z);
    x.view_mut((m, 0), (n, m)).copy_from(&z.transpose());
    x
}
