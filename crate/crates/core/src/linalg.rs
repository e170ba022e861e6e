//! Small dense helpers and the matrix-free operator machinery shared by the
//! norm engine and the truncated SVD.

use nalgebra::{DMatrix, DVector, SymmetricEigen, LU};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed for every deterministic start vector.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

const SOLVE_RESIDUAL: f64 = 1e-12;

/// A linear map `R^ncols -> R^nrows` known only through products.
pub trait MatrixOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64>;

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows(), x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            out.set_column(j, &self.apply(&col.into_owned()));
        }
        out
    }

    fn apply_transpose_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.ncols(), y.ncols());
        for (j, col) in y.column_iter().enumerate() {
            out.set_column(j, &self.apply_transpose(&col.into_owned()));
        }
        out
    }
}

impl MatrixOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        DMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        DMatrix::ncols(self)
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        self.tr_mul(y)
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }
    fn apply_transpose_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(y)
    }
}

impl<T: MatrixOperator + ?Sized> MatrixOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).apply(x)
    }
    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        (**self).apply_transpose(y)
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).apply_block(x)
    }
    fn apply_transpose_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).apply_transpose_block(y)
    }
}

/// Deterministic pseudo-random matrix with entries uniform in [-1, 1).
pub fn seeded_matrix(nrows: usize, ncols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(nrows, ncols, |_, _| rng.random_range(-1.0..1.0))
}

/// `(I - scale·m)` factored once, solved against many right-hand sides.
pub(crate) struct Resolvent {
    matrix: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Resolvent {
    pub fn new(m: &DMatrix<f64>, scale: f64) -> Self {
        let n = m.nrows();
        let matrix = DMatrix::identity(n, n) - m * scale;
        let lu = LU::new(matrix.clone());
        Resolvent { matrix, lu }
    }

    /// Solves `(I - scale·m) x = b`, with one refinement step when the
    /// relative residual exceeds 1e-12.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let singular = || Error::Singular { residual: f64::INFINITY };
        let mut x = self.lu.solve(b).ok_or_else(singular)?;
        let mut res = self.relative_residual(&x, b);
        if res > SOLVE_RESIDUAL {
            let r = b - &self.matrix * &x;
            x += self.lu.solve(&r).ok_or_else(singular)?;
            res = self.relative_residual(&x, b);
        }
        if !res.is_finite() || res > SOLVE_RESIDUAL {
            return Err(Error::Singular { residual: res });
        }
        Ok(x)
    }

    fn relative_residual(&self, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let r = b - &self.matrix * x;
        let scale = self.matrix.norm() * x.norm() + b.norm();
        if scale == 0.0 {
            0.0
        } else {
            r.norm() / scale
        }
    }
}

/// Power-iteration estimate of the spectral radius: 200 iterations from the
/// normalised all-ones vector; the estimate is the geometric mean of the
/// growth factors over the last 100 iterations.
pub fn spectral_radius_estimate(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for it in 1..=200 {
        let y = m * &x;
        let norm = y.norm();
        if !(norm > 1e-300) {
            return 0.0;
        }
        if it > 100 {
            log_sum += norm.ln();
            count += 1;
        }
        x = y / norm;
    }
    (log_sum / count as f64).exp()
}

/// Result of a largest-singular-value computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    /// Number of Gram-operator applications used.
    pub iterations: usize,
    pub converged: bool,
    /// Final Ritz residual relative to the Gram eigenvalue.
    pub relative_residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub seed: u64,
    pub max_applications: usize,
    pub restart: usize,
    pub residual_tol: f64,
    pub stagnation_tol: f64,
    pub stagnation_window: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            seed: DEFAULT_SEED,
            max_applications: 5000,
            restart: 60,
            residual_tol: 1e-10,
            stagnation_tol: 1e-12,
            stagnation_window: 10,
        }
    }
}

/// Largest singular value of `op` by restarted Lanczos on the Gram operator
/// `x ↦ opᵀ(op x)`, with full reorthogonalisation inside each cycle.
pub fn largest_singular_value<O: MatrixOperator + ?Sized>(
    op: &O,
    opts: &LanczosOptions,
) -> NormEstimate {
    let n = op.ncols();
    if n == 0 || op.nrows() == 0 {
        return NormEstimate { value: 0.0, iterations: 0, converged: true, relative_residual: 0.0 };
    }
    let gram = |x: &DVector<f64>| op.apply_transpose(&op.apply(x));
    let kmax = opts.restart.clamp(1, n);

    let mut start = seeded_matrix(n, 1, opts.seed).column(0).into_owned();
    start /= start.norm();

    let mut applications = 0usize;
    let mut best_theta = 0.0f64;
    let mut last_residual = f64::INFINITY;
    let mut stagnant = 0usize;

    loop {
        let mut basis: Vec<DVector<f64>> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::with_capacity(kmax);
        let mut betas: Vec<f64> = Vec::with_capacity(kmax);
        let mut ritz: Option<(f64, DVector<f64>)> = None;

        for j in 0..kmax {
            let mut w = gram(&basis[j]);
            applications += 1;
            let alpha = basis[j].dot(&w);
            alphas.push(alpha);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&w);
                    w.axpy(-c, q, 1.0);
                }
            }
            let beta = w.norm();

            let k = alphas.len();
            let mut t = DMatrix::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alphas[i];
                if i + 1 < k {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imax, &theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty tridiagonal");
            let y = eig.eigenvectors.column(imax).into_owned();
            let theta = theta.max(0.0);
            let residual = beta * y[k - 1].abs();
            let rel_residual = if theta > 0.0 { residual / theta } else { residual };

            let change = if theta > 0.0 { (theta - best_theta).abs() / theta } else { 0.0 };
            stagnant = if change < opts.stagnation_tol { stagnant + 1 } else { 0 };
            best_theta = best_theta.max(theta);
            last_residual = rel_residual;
            ritz = Some((theta, y));

            let invariant = beta <= 1e-14 * theta.max(f64::MIN_POSITIVE) || beta == 0.0;
            if rel_residual <= opts.residual_tol || invariant || stagnant >= opts.stagnation_window
            {
                return NormEstimate {
                    value: theta.sqrt(),
                    iterations: applications,
                    converged: true,
                    relative_residual: rel_residual,
                };
            }
            if applications >= opts.max_applications {
                return NormEstimate {
                    value: best_theta.sqrt(),
                    iterations: applications,
                    converged: false,
                    relative_residual: last_residual,
                };
            }
            if j + 1 < kmax {
                betas.push(beta);
                basis.push(w / beta);
            }
        }

        // explicit restart from the current Ritz vector
        let (_, y) = ritz.expect("at least one Lanczos step");
        let mut v = DVector::zeros(n);
        for (q, &c) in basis.iter().zip(y.iter()) {
            v.axpy(c, q, 1.0);
        }
        let norm = v.norm();
        if !(norm > 0.0) {
            return NormEstimate {
                value: best_theta.sqrt(),
                iterations: applications,
                converged: false,
                relative_residual: last_residual,
            };
        }
        start = v / norm;
    }
}

/// Orthonormal basis of the column space of `m` (thin QR), `m` must have at
/// least as many rows as columns.
pub(crate) fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}
