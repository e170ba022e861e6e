//! Spectral learning from Hankel matrices.
//!
//! Given a rank-`d` factorisation `H ≈ L D Rᵀ` of a Hankel matrix over
//! `U × V`, the right singular vectors give coordinates `φ(u) = Rᵀ H[u,:]`
//! for every prefix. Since `H[u,:]` lies in the span of `R`, the series is
//! recovered as
//!
//! * `φ(ε) = Rᵀ P` with `P[v] = p̂(v)` (initial weights),
//! * `f(u) = R[ε,:] · φ(u)` (final weights),
//! * `φ(ux) = K_x φ(u)` with `K_x = R_{V'}⁺ R_{xV'}`, where `V'` are the
//!   columns `v` whose extension `xv` is still in `V`.
//!
//! On an exact Hankel matrix of rank `d` whose restriction to `V'` keeps rank
//! `d`, this reproduces the target series exactly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::{empirical_hankel, exact_hankel, FactoredHankel, SparseHankel};
use crate::lang::{Basis, Word};
use crate::linalg::{orthonormalize, seeded_matrix, MatrixOperator, DEFAULT_SEED};
use crate::wfa::{LinearRepresentation, Mode};

const SUBSPACE_MAX_ITERATIONS: usize = 300;
const SUBSPACE_TOLERANCE: f64 = 1e-10;
const PINV_TOLERANCE: f64 = 1e-12;

/// Reduced SVD truncated at rank `d`: `left · diag(singular_values) · rightᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult {
    pub left: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub right: DMatrix<f64>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    fn from_small_svd(
        outer_left: &DMatrix<f64>,
        core: DMatrix<f64>,
        outer_right: &DMatrix<f64>,
        d: usize,
    ) -> Self {
        let svd = core.svd(true, true);
        let u = svd.u.expect("requested U");
        let vt = svd.v_t.expect("requested Vᵀ");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let order = &order[..d];
        let values = DVector::from_iterator(d, order.iter().map(|&i| svd.singular_values[i]));
        let u_d = DMatrix::from_fn(u.nrows(), d, |r, c| u[(r, order[c])]);
        let v_d = DMatrix::from_fn(vt.ncols(), d, |r, c| vt[(order[c], r)]);
        SvdResult { left: outer_left * u_d, singular_values: values, right: outer_right * v_d }
    }
}

/// Inputs accepted by [`truncated_svd`].
pub trait SvdSource {
    fn truncated_svd(&self, d: usize) -> Result<SvdResult>;
}

pub fn truncated_svd<H: SvdSource + ?Sized>(h: &H, d: usize) -> Result<SvdResult> {
    h.truncated_svd(d)
}

fn check_rank(d: usize, nrows: usize, ncols: usize) -> Result<()> {
    if d == 0 || d > nrows.min(ncols) {
        return Err(Error::InvalidArgument(format!(
            "rank {d} must be between 1 and min({nrows}, {ncols})"
        )));
    }
    Ok(())
}

impl SvdSource for DMatrix<f64> {
    fn truncated_svd(&self, d: usize) -> Result<SvdResult> {
        check_rank(d, self.nrows(), self.ncols())?;
        let (m, n) = self.shape();
        Ok(SvdResult::from_small_svd(
            &DMatrix::identity(m, m),
            self.clone(),
            &DMatrix::identity(n, n),
            d,
        ))
    }
}

impl SvdSource for FactoredHankel {
    /// QR of both factors, then an SVD of the small core `R_A R_Bᵀ`.
    fn truncated_svd(&self, d: usize) -> Result<SvdResult> {
        check_rank(d, self.nrows(), self.ncols())?;
        let qa = self.left().clone().qr();
        let qb = self.right().transpose().qr();
        let core = qa.r() * qb.r().transpose();
        if d > core.nrows().min(core.ncols()) {
            return Err(Error::InvalidArgument(format!(
                "rank {d} exceeds the factorisation rank {}",
                self.inner_dim()
            )));
        }
        Ok(SvdResult::from_small_svd(&qa.q(), core, &qb.q(), d))
    }
}

impl SvdSource for SparseHankel {
    /// Block subspace iteration with `2d` columns, then Rayleigh-Ritz.
    fn truncated_svd(&self, d: usize) -> Result<SvdResult> {
        check_rank(d, self.nrows(), self.ncols())?;
        Ok(subspace_iteration(self, d))
    }
}

fn subspace_iteration<O: MatrixOperator + ?Sized>(op: &O, d: usize) -> SvdResult {
    let (m, n) = (op.nrows(), op.ncols());
    let k = (2 * d).min(m).min(n);
    let mut q = orthonormalize(seeded_matrix(n, k, DEFAULT_SEED));
    let mut previous: Option<DVector<f64>> = None;
    let mut p;
    let mut core;
    let mut iteration = 0;
    loop {
        p = orthonormalize(op.apply_block(&q));
        let z = op.apply_transpose_block(&p);
        q = orthonormalize(z.clone());
        // B = Pᵀ A Q = (Aᵀ P)ᵀ Q
        core = z.tr_mul(&q);
        iteration += 1;
        let mut values: Vec<f64> = core.singular_values().iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let current = DVector::from_iterator(d, values.into_iter().take(d));
        let scale = current[0].max(f64::MIN_POSITIVE);
        let settled = previous.as_ref().is_some_and(|prev| {
            prev.iter()
                .zip(current.iter())
                .all(|(a, b)| (a - b).abs() <= SUBSPACE_TOLERANCE * b.abs().max(1e-3 * scale))
        });
        if settled || iteration >= SUBSPACE_MAX_ITERATIONS || k == m.min(n) && iteration >= 2 {
            break;
        }
        previous = Some(current);
    }
    SvdResult::from_small_svd(&p, core, &q, d)
}

/// Builds a representation from the right singular vectors (indexed by `V`)
/// and the estimated series `p_hat` on `V`.
pub fn extract_representation(
    svd: &SvdResult,
    col_basis: &Basis,
    p_hat: &DVector<f64>,
) -> Result<LinearRepresentation> {
    let r = &svd.right;
    if r.nrows() != col_basis.len() || p_hat.len() != col_basis.len() {
        return Err(Error::Shape(format!(
            "right singular vectors have {} rows and p_hat {} entries, basis has {}",
            r.nrows(),
            p_hat.len(),
            col_basis.len()
        )));
    }
    if col_basis.is_empty() || col_basis.word_len(0) != 0 {
        return Err(Error::Basis("column basis must contain ε".into()));
    }
    let d = r.ncols();
    let alphabet = col_basis.alphabet();
    let initial = r.tr_mul(p_hat);
    let final_weights = r.row(0).transpose();

    // V' = words shorter than max_len: a prefix of the basis order
    let shiftable = col_basis.len() - alphabet.len().pow(col_basis.max_len() as u32);
    let transitions = if shiftable == 0 {
        vec![DMatrix::zeros(d, d); alphabet.len()]
    } else {
        let base = r.rows(0, shiftable).into_owned();
        let svd_base = base.svd(true, true);
        (0..alphabet.len())
            .map(|x| {
                let rows: Vec<usize> = (0..shiftable)
                    .map(|i| {
                        let mut w: Word = vec![x];
                        w.extend(col_basis.word(i));
                        col_basis.index_of(&w).expect("shift stays in basis")
                    })
                    .collect();
                let shifted = DMatrix::from_fn(shiftable, d, |i, j| r[(rows[i], j)]);
                let k = svd_base
                    .solve(&shifted, PINV_TOLERANCE * svd_base.singular_values.max())
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                Ok(k.transpose())
            })
            .collect::<Result<Vec<_>>>()?
    };
    LinearRepresentation::new(alphabet.clone(), initial, transitions, final_weights)
}

#[derive(Clone, Debug)]
pub struct LearnedModel {
    pub rep: LinearRepresentation,
    pub mode: Mode,
    pub eta: f64,
    pub rank: usize,
    pub row_basis: Basis,
    pub col_basis: Basis,
    pub svd: SvdResult,
}

/// Spectral learning from a sample. For prefix and factor modes the learned
/// representation of the smoothed series is de-smoothed back to `p`.
pub fn learn(
    sample: &[Word],
    row_basis: &Basis,
    col_basis: &Basis,
    mode: Mode,
    eta: f64,
    rank: usize,
) -> Result<LearnedModel> {
    let hs = empirical_hankel(sample, row_basis, col_basis, mode, eta)?;
    let svd = truncated_svd(&hs, rank)?;
    // row ε of the mode-η Hankel matrix is the mode-η empirical series on V
    let p_hat = DVector::from_fn(col_basis.len(), |c, _| hs.get(0, c));
    finish(svd, row_basis, col_basis, &p_hat, mode, eta)
}

/// Learning from the exact Hankel matrix of `target`, which should recover
/// `target` up to a change of basis whenever `rank` is its true rank.
pub fn learn_from_exact(
    target: &LinearRepresentation,
    row_basis: &Basis,
    col_basis: &Basis,
    mode: Mode,
    eta: f64,
    rank: usize,
) -> Result<LearnedModel> {
    let hp = exact_hankel(target, row_basis, col_basis, mode, eta)?;
    let svd = truncated_svd(&hp, rank)?;
    let p_hat = hp.right().tr_mul(&hp.left().row(0).transpose());
    finish(svd, row_basis, col_basis, &p_hat, mode, eta)
}

fn finish(
    svd: SvdResult,
    row_basis: &Basis,
    col_basis: &Basis,
    p_hat: &DVector<f64>,
    mode: Mode,
    eta: f64,
) -> Result<LearnedModel> {
    let smoothed = extract_representation(&svd, col_basis, p_hat)?;
    let eta = if mode == Mode::Standard { 0.0 } else { eta };
    let rep = smoothed.de_smooth(mode, eta)?;
    Ok(LearnedModel {
        rep,
        mode,
        eta,
        rank: svd.rank(),
        row_basis: row_basis.clone(),
        col_basis: col_basis.clone(),
        svd,
    })
}

fn principal_cosines(r1: &DMatrix<f64>, r2: &DMatrix<f64>) -> Result<DVector<f64>> {
    if r1.shape() != r2.shape() {
        return Err(Error::Shape(format!(
            "subspaces {}x{} and {}x{} differ in shape",
            r1.nrows(),
            r1.ncols(),
            r2.nrows(),
            r2.ncols()
        )));
    }
    Ok(r1.tr_mul(r2).singular_values().map(|c| c.clamp(0.0, 1.0)))
}

/// `1 - mean cos θ_i` over the principal angles between two subspaces given
/// by orthonormal columns.
pub fn subspace_distance(r1: &DMatrix<f64>, r2: &DMatrix<f64>) -> Result<f64> {
    let cos = principal_cosines(r1, r2)?;
    if cos.is_empty() {
        return Ok(0.0);
    }
    Ok((1.0 - cos.mean()).clamp(0.0, 1.0))
}

/// `sin` of the largest principal angle between two subspaces.
pub fn largest_principal_sine(r1: &DMatrix<f64>, r2: &DMatrix<f64>) -> Result<f64> {
    let cos = principal_cosines(r1, r2)?;
    let min = cos.iter().copied().fold(1.0, f64::min);
    Ok((1.0 - min * min).max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StewartBound {
    pub value: f64,
    /// A bound above 1 says nothing about the angle.
    pub vacuous: bool,
}

/// `‖H_S - H_r‖₂ / σ_min(H_r)`, a bound on the sine of the largest angle
/// between the learned and true singular subspaces.
pub fn stewart_bound(norm_diff: f64, sigma_min_target: f64) -> Result<StewartBound> {
    if !(sigma_min_target > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smallest target singular value must be positive, got {sigma_min_target}"
        )));
    }
    let value = (norm_diff / sigma_min_target).max(0.0);
    Ok(StewartBound { value, vacuous: value > 1.0 })
}

/// `Σ_{|u| ≤ max_len} |r1(u) - r2(u)|`.
pub fn l1_distance_upto(
    rep1: &LinearRepresentation,
    rep2: &LinearRepresentation,
    max_len: usize,
) -> Result<f64> {
    if rep1.alphabet() != rep2.alphabet() {
        return Err(Error::InvalidArgument("representations use different alphabets".into()));
    }
    let basis = Basis::new(rep1.alphabet(), max_len)?;
    let mut f1: Vec<DVector<f64>> = Vec::with_capacity(basis.len());
    let mut f2: Vec<DVector<f64>> = Vec::with_capacity(basis.len());
    let mut total = 0.0;
    for i in 0..basis.len() {
        let (a, b) = match basis.split_last(i) {
            None => (rep1.initial().clone(), rep2.initial().clone()),
            Some((parent, x)) => {
                (rep1.transition(x).tr_mul(&f1[parent]), rep2.transition(x).tr_mul(&f2[parent]))
            }
        };
        total += (a.dot(rep1.final_weights()) - b.dot(rep2.final_weights())).abs();
        f1.push(a);
        f2.push(b);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Alphabet;
    use crate::wfa::tests::{p1, scalar};

    fn unary(l: usize) -> Basis {
        Basis::new(&Alphabet::new(["a"]).unwrap(), l).unwrap()
    }

    fn assert_orthonormal(m: &DMatrix<f64>) {
        let g = m.tr_mul(m);
        assert!((g - DMatrix::identity(m.ncols(), m.ncols())).amax() < 1e-8);
    }

    #[test]
    fn identity_and_rank_one() {
        let s = truncated_svd(&DMatrix::<f64>::identity(3, 3), 2).unwrap();
        assert!((s.singular_values - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-14);

        let a = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let b = DVector::from_vec(vec![3.0, 4.0]);
        let m = &a * b.transpose();
        let s = truncated_svd(&m, 1).unwrap();
        assert!((s.singular_values[0] - 15.0).abs() < 1e-12);
        assert!(truncated_svd(&m, 3).is_err());
        assert!(truncated_svd(&m, 0).is_err());
    }

    #[test]
    fn sparse_matches_dense_oracle() {
        let b = unary(499);
        let noise = seeded_matrix(500, 500, 21);
        let h = SparseHankel::from_entries(
            &b,
            &b,
            Mode::Standard,
            0.0,
            1,
            noise
                .iter()
                .enumerate()
                .filter(|(i, _)| i % 11 == 0)
                .map(|(i, &v)| (i % 500, i / 500, v)),
        )
        .unwrap();
        let s = truncated_svd(&h, 5).unwrap();
        let mut oracle: Vec<f64> = h.to_dense().singular_values().iter().copied().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (i, (got, want)) in s.singular_values.iter().zip(&oracle).enumerate() {
            assert!((got - want).abs() < 1e-7, "{i}");
        }
        assert_orthonormal(&s.left);
        assert_orthonormal(&s.right);
    }

    #[test]
    fn factored_uses_core() {
        let m = seeded_matrix(40, 3, 1) * seeded_matrix(3, 30, 2);
        let b40 = unary(39);
        let b30 = unary(29);
        let f = FactoredHankel::from_factors(
            &b40,
            &b30,
            Mode::Standard,
            0.0,
            seeded_matrix(40, 3, 1),
            seeded_matrix(3, 30, 2),
        )
        .unwrap();
        let s = truncated_svd(&f, 3).unwrap();
        let mut oracle: Vec<f64> = m.singular_values().iter().copied().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in s.singular_values.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-10);
        }
        let rebuilt = &s.left * DMatrix::from_diagonal(&s.singular_values) * s.right.transpose();
        assert!((rebuilt - m).amax() < 1e-10);
        assert!(truncated_svd(&f, 4).is_err());
    }

    #[test]
    fn exact_rank_one_recovers_p1() {
        let b = unary(4);
        let model = learn_from_exact(&p1(), &b, &b, Mode::Standard, 0.0, 1).unwrap();
        for n in 0..=4 {
            let w = vec![0; n];
            let got = model.rep.evaluate(&w).unwrap();
            assert!((got - 0.5f64.powi(n as i32 + 1)).abs() < 1e-9);
        }
        assert_eq!(model.rep.dim(), 1);
    }

    #[test]
    fn exact_prefix_and_factor_are_de_smoothed() {
        let b = unary(3);
        for (mode, eta) in [(Mode::Prefix, 0.5), (Mode::Prefix, 1.0), (Mode::Factor, 0.3)] {
            let model = learn_from_exact(&p1(), &b, &b, mode, eta, 1).unwrap();
            assert!(l1_distance_upto(&model.rep, &p1(), 6).unwrap() < 1e-9, "{mode} {eta}");
        }
    }

    #[test]
    fn degenerate_basis() {
        let v = unary(0);
        let svd = SvdResult {
            left: DMatrix::from_element(1, 1, 1.0),
            singular_values: DVector::from_element(1, 0.3),
            right: DMatrix::from_element(1, 1, 1.0),
        };
        let rep = extract_representation(&svd, &v, &DVector::from_element(1, 0.3)).unwrap();
        assert_eq!(rep.transition(0)[(0, 0)], 0.0);
        assert!((rep.evaluate(&[]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(rep.evaluate(&[0]).unwrap(), 0.0);
    }

    #[test]
    fn rebasing_invariance() {
        let alpha = Alphabet::new(["a", "b"]).unwrap();
        let target = LinearRepresentation::new(
            alpha.clone(),
            DVector::from_vec(vec![0.6, 0.4]),
            vec![
                DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.0, 0.3]),
                DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.25, 0.1]),
            ],
            DVector::from_vec(vec![0.4, 0.35]),
        )
        .unwrap();
        let b = Basis::new(&alpha, 3).unwrap();
        let hp = exact_hankel(&target, &b, &b, Mode::Standard, 0.0).unwrap();
        let svd = truncated_svd(&hp, 2).unwrap();
        let p_hat = hp.right().tr_mul(&hp.left().row(0).transpose());
        let rep = extract_representation(&svd, &b, &p_hat).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let rotated = SvdResult { right: &svd.right * q, ..svd.clone() };
        let rep_q = extract_representation(&rotated, &b, &p_hat).unwrap();
        for w in Basis::new(&alpha, 4).unwrap().iter() {
            let (x, y) = (rep.evaluate(&w).unwrap(), rep_q.evaluate(&w).unwrap());
            assert!((x - y).abs() < 1e-9);
            assert!((x - target.evaluate(&w).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let svd = SvdResult {
            left: DMatrix::from_element(2, 1, 1.0),
            singular_values: DVector::from_element(1, 1.0),
            right: DMatrix::from_element(2, 1, 1.0),
        };
        assert!(extract_representation(&svd, &unary(3), &DVector::zeros(4)).is_err());
    }

    #[test]
    fn subspace_distances() {
        let e = DMatrix::<f64>::identity(4, 4);
        let r1 = e.columns(0, 2).into_owned();
        let r2 = e.columns(2, 2).into_owned();
        assert!(subspace_distance(&r1, &r1).unwrap() < 1e-15);
        assert!((subspace_distance(&r1, &r2).unwrap() - 1.0).abs() < 1e-15);
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!(subspace_distance(&r1, &(&r1 * q)).unwrap() < 1e-12);
        assert!(subspace_distance(&r1, &e).is_err());
        assert!((largest_principal_sine(&r1, &r2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stewart_values() {
        assert_eq!(stewart_bound(0.0, 0.7).unwrap().value, 0.0);
        let b = stewart_bound(0.1, 0.5).unwrap();
        assert!((b.value - 0.2).abs() < 1e-15 && !b.vacuous);
        let b = stewart_bound(2.0, 1.0).unwrap();
        assert_eq!(b, StewartBound { value: 2.0, vacuous: true });
        assert!(stewart_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distance_upto(&p1(), &p1(), 5).unwrap(), 0.0);
        let other = scalar(1.0, 0.5, 0.25);
        assert!((l1_distance_upto(&p1(), &other, 0).unwrap() - 0.25).abs() < 1e-15);
        let a = l1_distance_upto(&p1(), &other, 4).unwrap();
        let b = l1_distance_upto(&other, &p1(), 4).unwrap();
        assert_eq!(a, b);
    }
}
