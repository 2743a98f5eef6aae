//! Dense linear-algebra kernels shared by the reductions.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

/// Relative singular-value cutoff used for null spaces and numerical rank.
pub const NULL_TOL: f64 = 1e-10;
/// Reciprocal condition number below which a block counts as singular.
pub const RCOND_MIN: f64 = 1e-13;
/// Relative residual accepted by [`min_norm_solution`].
pub const LSQ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("input matrix is rank deficient (rank {rank}, expected {expected})")]
    RankDeficientInput { rank: usize, expected: usize },
    #[error("block to invert is singular (rcond {0:e})")]
    SingularBlock(f64),
    #[error("right-hand side is not in the range of the matrix (residual {0:e})")]
    Inconsistent(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("edge weight {0} is zero")]
    ZeroWeight(usize),
}

/// Real `E x (E - k)` matrix with orthonormal or otherwise independent columns spanning a null space.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis(DMatrix<f64>);

impl Basis {
    pub fn new(p: DMatrix<f64>) -> Self {
        Basis(p)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Number of edges (rows).
    pub fn n_edges(&self) -> usize {
        self.0.nrows()
    }

    /// Reduced order (columns).
    pub fn dim(&self) -> usize {
        self.0.ncols()
    }
}

/// Nonzero complex edge weights, the diagonal of `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWeights(Vec<Complex64>);

impl ComplexWeights {
    pub fn new(w: Vec<Complex64>) -> Result<Self, NumericsError> {
        if let Some(k) = w.iter().position(|z| z.norm() == 0.0) {
            return Err(NumericsError::ZeroWeight(k));
        }
        Ok(ComplexWeights(w))
    }

    /// `W = R + jωL`.
    pub fn impedances(r: &DVector<f64>, l: &DVector<f64>, omega: f64) -> Result<Self, NumericsError> {
        Self::new(r.iter().zip(l.iter()).map(|(&r, &l)| Complex64::new(r, omega * l)).collect())
    }

    pub fn real(w: &DVector<f64>) -> Result<Self, NumericsError> {
        Self::new(w.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn max_abs<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

/// Numerical rank from the singular values of `m`, cutoff `tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Orthonormal basis of the null space of a full-row-rank `k x E` matrix.
///
/// Rank is checked on the singular values; the basis itself is read off the trailing
/// columns of a Householder QR of `[M^T | I]`.
pub fn nullspace_basis(m: &DMatrix<f64>, tol: f64) -> Result<Basis, NumericsError> {
    let (k, e) = m.shape();
    if k == 0 {
        return Ok(Basis(DMatrix::identity(e, e)));
    }
    if k > e {
        return Err(NumericsError::RankDeficientInput { rank: e, expected: k });
    }
    let rank = numerical_rank(m, tol);
    if rank < k {
        return Err(NumericsError::RankDeficientInput { rank, expected: k });
    }
    let mut stacked = DMatrix::zeros(e, k + e);
    stacked.columns_mut(0, k).copy_from(&m.transpose());
    stacked.columns_mut(k, e).fill_with_identity();
    let q = stacked.qr().q();
    Ok(Basis(q.columns(k, e - k).into_owned()))
}

/// Inverse with an LU-based reciprocal condition check (1-norm).
pub fn checked_inverse<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<DMatrix<T>, NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let inv = m.clone().lu().try_inverse().ok_or(NumericsError::SingularBlock(0.0))?;
    let rcond = 1.0 / (norm1(m) * norm1(&inv));
    if !(rcond >= RCOND_MIN) {
        return Err(NumericsError::SingularBlock(if rcond.is_finite() { rcond } else { 0.0 }));
    }
    Ok(inv)
}

fn norm1<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Schur complement `M11 - M10 M00^{-1} M01` eliminating the indices in `eliminate`.
///
/// Retained indices keep their relative order.
pub fn schur_complement<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    eliminate: &[usize],
) -> Result<DMatrix<T>, NumericsError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(NumericsError::DimensionMismatch(format!("{}x{} is not square", n, m.ncols())));
    }
    if let Some(&bad) = eliminate.iter().find(|&&i| i >= n) {
        return Err(NumericsError::DimensionMismatch(format!("index {bad} out of range {n}")));
    }
    let keep: Vec<usize> = (0..n).filter(|i| !eliminate.contains(i)).collect();
    let m11 = m.select_rows(&keep).select_columns(&keep);
    if eliminate.is_empty() {
        return Ok(m11);
    }
    let m10 = m.select_rows(&keep).select_columns(eliminate);
    let m01 = m.select_rows(eliminate).select_columns(&keep);
    let m00 = m.select_rows(eliminate).select_columns(eliminate);
    let inv = checked_inverse(&m00)?;
    Ok(m11 - m10 * inv * m01)
}

/// Minimum-norm solution of the consistent part of `A x = b`.
///
/// A maximal independent row subset `A_r` is chosen by column-pivoted QR of `A^T`; then
/// `x = Q R^{-T} b_r` from the Householder QR `A_r^T = Q R`.
fn min_norm_apply(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let rank = numerical_rank(a, NULL_TOL);
    if rank == 0 {
        return DVector::zeros(n);
    }
    let mut order = DMatrix::from_fn(1, a.nrows(), |_, j| j as f64);
    a.transpose().col_piv_qr().p().permute_columns(&mut order);
    let rows: Vec<usize> = order.iter().take(rank).map(|&j| j as usize).collect();
    let ar_t = a.select_rows(&rows).transpose();
    let br = DVector::from_iterator(rank, rows.iter().map(|&j| b[j]));
    let qr = ar_t.qr();
    let y = qr
        .r()
        .tr_solve_upper_triangular(&br)
        .expect("independent rows give a nonsingular triangle");
    qr.q() * y
}

/// Minimum-norm `x` with `A x = b`; errors when `b` is outside `range(A)`.
pub fn min_norm_solution(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, NumericsError> {
    if a.nrows() != b.len() {
        return Err(NumericsError::DimensionMismatch(format!("A has {} rows, b has {}", a.nrows(), b.len())));
    }
    let x = min_norm_apply(a, b);
    let residual = (a * &x - b).norm();
    if residual > LSQ_TOL * b.norm().max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(NumericsError::Inconsistent(residual));
    }
    Ok(x)
}

/// Least-squares coordinates of `b` in the columns of a full-column-rank `a`, with the residual norm.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64), NumericsError> {
    if a.nrows() != b.len() {
        return Err(NumericsError::DimensionMismatch(format!("A has {} rows, b has {}", a.nrows(), b.len())));
    }
    if a.ncols() == 0 {
        return Ok((DVector::zeros(0), b.norm()));
    }
    let rank = numerical_rank(a, NULL_TOL);
    if rank < a.ncols() {
        return Err(NumericsError::RankDeficientInput { rank, expected: a.ncols() });
    }
    let qr = a.clone().qr();
    let x = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * b))
        .ok_or(NumericsError::RankDeficientInput { rank, expected: a.ncols() })?;
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

/// Congruence `V` with `V^T Lp V = I` and `V^T Rp V = diag(d)`.
///
/// `Lp` is Cholesky-whitened and the whitened `Rp` is diagonalized, so a singular `Rp`
/// is fine. Eigenvalues come back ascending, tiny negative round-off clamped to zero.
pub fn simultaneous_diagonalization(
    lp: &DMatrix<f64>,
    rp: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>), NumericsError> {
    let m = lp.nrows();
    if lp.shape() != (m, m) || rp.shape() != (m, m) {
        return Err(NumericsError::DimensionMismatch("pencil matrices must be square and equal-sized".into()));
    }
    if m == 0 {
        return Ok((DMatrix::zeros(0, 0), DVector::zeros(0)));
    }
    let chol = symmetrize(lp).cholesky().ok_or(NumericsError::NotPositiveDefinite)?;
    let g = chol.l();
    let g_inv = g
        .clone()
        .solve_lower_triangular(&DMatrix::identity(m, m))
        .ok_or(NumericsError::NotPositiveDefinite)?;
    let whitened = symmetrize(&(&g_inv * symmetrize(rp) * g_inv.transpose()));
    let eig = SymmetricEigen::new(whitened);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let d = DVector::from_iterator(
        m,
        order.iter().map(|&i| {
            let x = eig.eigenvalues[i];
            if x < 0.0 && x.abs() <= 1e-10 * scale {
                0.0
            } else {
                x
            }
        }),
    );
    let q = eig.eigenvectors.select_columns(&order);
    let v = g_inv.transpose() * q;
    Ok((v, d))
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `P (P^T W P)^{-1} P^T` for diagonal complex `W`.
pub fn projected_inverse(w: &ComplexWeights, p: &DMatrix<f64>) -> Result<DMatrix<Complex64>, NumericsError> {
    if w.len() != p.nrows() {
        return Err(NumericsError::DimensionMismatch(format!("{} weights for {} rows", w.len(), p.nrows())));
    }
    let pc = complexify(p);
    let mut wp = pc.clone();
    for (mut row, wk) in wp.row_iter_mut().zip(w.as_slice()) {
        row *= *wk;
    }
    let inner = pc.transpose() * wp;
    let inv = checked_inverse(&inner)?;
    Ok(&pc * inv * pc.transpose())
}

/// `W^{-1} - W^{-1} B0^T (B0 W^{-1} B0^T)^{-1} B0 W^{-1}`, the basis-free form of [`projected_inverse`].
pub fn constrained_inverse(w: &ComplexWeights, b0: &DMatrix<f64>) -> Result<DMatrix<Complex64>, NumericsError> {
    let e = w.len();
    if b0.ncols() != e {
        return Err(NumericsError::DimensionMismatch(format!("{} weights for {} columns", e, b0.ncols())));
    }
    let w_inv = DMatrix::from_diagonal(&DVector::from_iterator(e, w.as_slice().iter().map(|z| z.inv())));
    if b0.nrows() == 0 {
        return Ok(w_inv);
    }
    let b0c = complexify(b0);
    let left = &w_inv * b0c.transpose();
    let core = checked_inverse(&(&b0c * &left))?;
    Ok(&w_inv - &left * core * left.transpose())
}

/// Max-entry residual between the two sides of the projected-inverse identity.
pub fn projection_identity_residual(w: &ComplexWeights, p: &Basis, b0: &DMatrix<f64>) -> Result<f64, NumericsError> {
    let lhs = projected_inverse(w, p.matrix())?;
    let rhs = constrained_inverse(w, b0)?;
    Ok(max_abs(&(lhs - rhs)))
}

pub fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    max_abs(m)
}

pub fn max_abs_complex(m: &DMatrix<Complex64>) -> f64 {
    max_abs(m)
}
