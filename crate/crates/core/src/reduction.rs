//! Exact time-domain reduction of an RL network onto the null space of its interior
//! incidence block.
//!
//! Edge flows that satisfy Kirchhoff's current law at every interior node live in
//! `null(B0)`. Writing `f = P f̂` for any full-column-rank `P` with that range turns the
//! constrained dynamics `L ḟ = -R f + B^T v, B0 f = 0` into the ODE
//!
//! ```text
//! L̂ ḟ̂ = -R̂ f̂ + B̂^T v1,   i1 = B̂ f̂,   L̂ = P^T L P,  R̂ = P^T R P,  B̂ = B1 P
//! ```
//!
//! with no approximation error and no dependence on the interior voltages. The choice of
//! `P` is free; [`PStrategy`] offers three.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{adjacency, PartitionedMatrices, ValidatedNetwork};
use crate::numerics::{self, Basis, NumericsError, NULL_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("initial flows violate KCL at interior nodes (residual {0:e})")]
    InconsistentInitialCondition(f64),
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("network is not homogeneous (max relative deviation of r/l from the mean: {0:e})")]
    NotHomogeneous(f64),
    #[error("interior node {0} has no incident edge left to eliminate")]
    Structural(String),
}

/// How the null-space basis `P` is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PStrategy {
    /// Keep all flows but one incident edge per interior node; the dropped flows follow
    /// from KCL. `P` is an integer matrix.
    #[serde(rename = "tree")]
    TreeElimination,
    /// Orthonormal basis of `null(B0)`.
    #[serde(rename = "nullbasis")]
    OrthonormalNullBasis,
    /// Basis that makes `L̂` and `R̂` both diagonal (decoupled RL circuits).
    #[serde(rename = "modal")]
    ModalDiagonalizing,
}

impl PStrategy {
    pub const ALL: [PStrategy; 3] = [
        PStrategy::TreeElimination,
        PStrategy::OrthonormalNullBasis,
        PStrategy::ModalDiagonalizing,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PStrategy::TreeElimination => "tree",
            PStrategy::OrthonormalNullBasis => "nullbasis",
            PStrategy::ModalDiagonalizing => "modal",
        }
    }
}

impl fmt::Display for PStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(PStrategy::TreeElimination),
            "nullbasis" => Ok(PStrategy::OrthonormalNullBasis),
            "modal" => Ok(PStrategy::ModalDiagonalizing),
            other => Err(format!("unknown P strategy {other:?} (expected tree, nullbasis or modal)")),
        }
    }
}

/// Reduced ODE `L̂ ḟ̂ = -R̂ f̂ + B̂^T v1` together with the basis that lifts pseudoflows back to flows.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub strategy: PStrategy,
    pub p: DMatrix<f64>,
    pub lhat: DMatrix<f64>,
    pub rhat: DMatrix<f64>,
    pub bhat: DMatrix<f64>,
}

impl ReducedModel {
    /// Reduced order `E - N0`.
    pub fn order(&self) -> usize {
        self.p.ncols()
    }

    pub fn n_edges(&self) -> usize {
        self.p.nrows()
    }

    pub fn n_boundary(&self) -> usize {
        self.bhat.nrows()
    }

    pub fn basis(&self) -> Basis {
        Basis::new(self.p.clone())
    }

    /// Input coefficients `β = P^T B1^T`: pseudoflow `k` is driven by `Σ_n β[k, n] v_n`.
    pub fn beta(&self) -> DMatrix<f64> {
        self.bhat.transpose()
    }

    pub fn embed_initial(&self, f0: &DVector<f64>, tol: f64) -> Result<DVector<f64>, ReductionError> {
        embed_initial(&self.basis(), f0, tol)
    }

    pub fn lift(&self, fhat: &DVector<f64>) -> Result<DVector<f64>, ReductionError> {
        lift(&self.basis(), fhat)
    }

    pub fn output(&self, fhat: &DVector<f64>) -> Result<DVector<f64>, ReductionError> {
        check_len(self.order(), fhat.len())?;
        Ok(&self.bhat * fhat)
    }
}

/// Homogeneous special case `i̇1 = -α i1 + (L̃ \ L̃00) v1` with `L̃ = B L^{-1} B^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousReducedModel {
    pub alpha: f64,
    pub lred: DMatrix<f64>,
}

fn check_len(expected: usize, got: usize) -> Result<(), ReductionError> {
    if expected != got {
        return Err(ReductionError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Builds `P` with `range(P) = null(B0)` for the requested strategy.
pub fn build_p(network: &ValidatedNetwork, strategy: PStrategy) -> Result<Basis, ReductionError> {
    let mats = network.partition();
    match strategy {
        PStrategy::TreeElimination => tree_elimination_basis(network),
        PStrategy::OrthonormalNullBasis => Ok(numerics::nullspace_basis(&mats.b0, NULL_TOL)?),
        PStrategy::ModalDiagonalizing => modal_basis(&mats),
    }
}

/// Integer basis obtained by eliminating one incident flow per interior node.
///
/// Interior nodes are visited in breadth-first order from the boundary set (neighbours in
/// edge order). Each node eliminates the highest-indexed edge joining it to an already
/// visited node, so the eliminated edges form a spanning tree of the graph with all
/// boundary nodes merged and the square block `B0[:, eliminated]` is unimodular.
pub fn tree_elimination_basis(network: &ValidatedNetwork) -> Result<Basis, ReductionError> {
    let n = network.n_nodes();
    let nb = network.n_boundary();
    let edges = network.edges();
    let ne = edges.len();
    let adj = adjacency(n, edges);

    let mut order = Vec::with_capacity(n - nb);
    let mut rank = vec![usize::MAX; n];
    let mut queue: VecDeque<usize> = (0..nb).collect();
    for b in 0..nb {
        rank[b] = 0;
    }
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adj[u] {
            if rank[v] == usize::MAX {
                order.push(v);
                rank[v] = order.len();
                queue.push_back(v);
            }
        }
    }

    let mut eliminated_by = vec![None; n];
    let mut is_eliminated = vec![false; ne];
    for &v in &order {
        let edge = adj[v]
            .iter()
            .filter(|&&(u, k)| rank[u] < rank[v] && !is_eliminated[k])
            .map(|&(_, k)| k)
            .max()
            .ok_or_else(|| ReductionError::Structural(network.node_ids()[v].clone()))?;
        is_eliminated[edge] = true;
        eliminated_by[v] = Some(edge);
    }

    let retained: Vec<usize> = (0..ne).filter(|&k| !is_eliminated[k]).collect();
    let mut column_of = vec![usize::MAX; ne];
    for (c, &k) in retained.iter().enumerate() {
        column_of[k] = c;
    }

    // rows[k] = coefficients of flow k in the retained flows
    let mut rows: Vec<Vec<i64>> = vec![vec![0; retained.len()]; ne];
    for &k in &retained {
        rows[k][column_of[k]] = 1;
    }
    let sign_at = |node: usize, k: usize| -> i64 {
        if edges[k].tail == node {
            1
        } else {
            -1
        }
    };
    // deepest first: every other incident flow is already expressed
    for &v in order.iter().rev() {
        let target = eliminated_by[v].expect("every interior node eliminates an edge");
        let mut acc = vec![0i64; retained.len()];
        for &(_, k) in &adj[v] {
            if k == target {
                continue;
            }
            let s = sign_at(v, k);
            for (a, x) in acc.iter_mut().zip(&rows[k]) {
                *a += s * x;
            }
        }
        // KCL at v: s_t f_t + Σ s_k f_k = 0
        let s_t = sign_at(v, target);
        rows[target] = acc.into_iter().map(|a| -s_t * a).collect();
    }

    let p = DMatrix::from_fn(ne, retained.len(), |i, j| rows[i][j] as f64);
    Ok(Basis::new(p))
}

/// Orthonormal null basis followed by an `L̂'`-whitened congruence that diagonalizes the reduced pencil.
pub fn modal_basis(mats: &PartitionedMatrices) -> Result<Basis, ReductionError> {
    let p0 = numerics::nullspace_basis(&mats.b0, NULL_TOL)?.into_matrix();
    let lp = congruence(&p0, &mats.l);
    let rp = congruence(&p0, &mats.r);
    let (v, _) = numerics::simultaneous_diagonalization(&lp, &rp)?;
    Ok(Basis::new(p0 * v))
}

/// Symmetric `P^T diag(d) P`.
fn congruence(p: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut dp = p.clone();
    for (mut row, &x) in dp.row_iter_mut().zip(d.iter()) {
        row *= x;
    }
    numerics::symmetrize(&(p.transpose() * dp))
}

/// Assembles the reduced model for the chosen basis.
pub fn reduce(network: &ValidatedNetwork, strategy: PStrategy) -> Result<ReducedModel, ReductionError> {
    let basis = build_p(network, strategy)?;
    Ok(assemble(&network.partition(), basis, strategy))
}

/// `L̂ = P^T L P`, `R̂ = P^T R P`, `B̂ = B1 P` for a given basis.
pub fn assemble(mats: &PartitionedMatrices, basis: Basis, strategy: PStrategy) -> ReducedModel {
    let p = basis.into_matrix();
    let mut lhat = congruence(&p, &mats.l);
    let mut rhat = congruence(&p, &mats.r);
    if strategy == PStrategy::ModalDiagonalizing {
        zero_small_off_diagonal(&mut lhat);
        zero_small_off_diagonal(&mut rhat);
    }
    let bhat = &mats.b1 * &p;
    ReducedModel {
        strategy,
        p,
        lhat,
        rhat,
        bhat,
    }
}

fn zero_small_off_diagonal(m: &mut DMatrix<f64>) {
    let scale = m.diagonal().amax();
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)].abs() <= 1e-12 * scale {
                m[(i, j)] = 0.0;
            }
        }
    }
}

/// Pseudoflow coordinates of a KCL-consistent flow vector.
pub fn embed_initial(p: &Basis, f0: &DVector<f64>, tol: f64) -> Result<DVector<f64>, ReductionError> {
    check_len(p.n_edges(), f0.len())?;
    let (fhat, residual) = numerics::least_squares(p.matrix(), f0)?;
    if residual > tol * f0.norm() {
        return Err(ReductionError::InconsistentInitialCondition(residual));
    }
    Ok(fhat)
}

/// `f = P f̂`.
pub fn lift(p: &Basis, fhat: &DVector<f64>) -> Result<DVector<f64>, ReductionError> {
    check_len(p.dim(), fhat.len())?;
    Ok(p.matrix() * fhat)
}

/// `i1 = B1 P f̂`.
pub fn output_injections(b1: &DMatrix<f64>, p: &Basis, fhat: &DVector<f64>) -> Result<DVector<f64>, ReductionError> {
    check_len(p.dim(), fhat.len())?;
    check_len(b1.ncols(), p.n_edges())?;
    Ok(b1 * (p.matrix() * fhat))
}

/// Reduction for networks with a common `r/l` ratio, in injection coordinates.
///
/// `tol` bounds `max |r_e/l_e - α| / α` where `α` is the mean ratio.
pub fn homogeneous_reduce(network: &ValidatedNetwork, tol: f64) -> Result<HomogeneousReducedModel, ReductionError> {
    let ratios: Vec<f64> = network.edges().iter().map(|e| e.r / e.l).collect();
    let alpha = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let deviation = ratios.iter().map(|x| (x - alpha).abs()).fold(0.0, f64::max);
    if deviation > tol * alpha {
        return Err(ReductionError::NotHomogeneous(deviation / alpha));
    }
    let b = network.incidence().to_real();
    let l_inv = DMatrix::from_diagonal(&network.inductances().map(|l| 1.0 / l));
    let lt = numerics::symmetrize(&(&b * l_inv * b.transpose()));
    let interior: Vec<usize> = (network.n_boundary()..network.n_nodes()).collect();
    let lred = numerics::symmetrize(&numerics::schur_complement(&lt, &interior)?);
    Ok(HomogeneousReducedModel { alpha, lred })
}
