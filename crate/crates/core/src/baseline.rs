//! Frequency-domain heuristic used as a comparison baseline.
//!
//! The heuristic Kron-reduces the admittance at a single frequency `ω0`, reads every
//! reduced branch impedance `z = -1/Yr[m, n]` as a series RL element with `r = Re z` and
//! `l = Im z / ω0`, and simulates the resulting boundary-only network. It is exact in
//! sinusoidal steady state at `ω0` and for homogeneous networks, and generally wrong
//! otherwise. Initial branch currents of the synthesized network are only determined up
//! to circulating currents in `null(Br)`; the `γ` coefficients pick one.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::network::{IndexedEdge, ValidatedNetwork};
use crate::numerics::{self, NumericsError, NULL_TOL};
use crate::phasor::{self, PhasorError};
use crate::reduction::{self, PStrategy, ReductionError};
use crate::simulation::{self, Excitation, SimulationError, SolverConfig, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("synthesized edge {edge} is unphysical (r = {r}, l = {l})")]
    NegativeSynthesizedElement { edge: String, r: f64, l: f64 },
    #[error("{given} gamma coefficients for a {dim}-dimensional circulating-current space")]
    GammaDimension { given: usize, dim: usize },
    #[error("boundary injections are not realizable by the synthesized network (residual {0:e})")]
    Inconsistent(f64),
    #[error(transparent)]
    Phasor(#[from] PhasorError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

/// Boundary-only RL network produced by the heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedNetwork {
    pub network: ValidatedNetwork,
    pub omega0: f64,
    /// True when the reduced graph is a triangle with cyclic edge orientation.
    pub cyclic_delta: bool,
}

impl SynthesizedNetwork {
    /// Incidence matrix `Br` of the synthesized network.
    pub fn incidence(&self) -> DMatrix<f64> {
        self.network.incidence().to_real()
    }

    /// Columns spanning `null(Br)`, the circulating currents that leave injections unchanged.
    ///
    /// For the cyclic triangle this is the all-ones vector; otherwise an orthonormal basis.
    pub fn ambiguity_basis(&self) -> Result<DMatrix<f64>, BaselineError> {
        let e = self.network.n_edges();
        if self.cyclic_delta {
            return Ok(DMatrix::from_element(e, 1, 1.0));
        }
        // null(Br) = null of any N-1 rows of Br (connected graph)
        let br = self.incidence();
        let rows = br.rows(0, br.nrows().saturating_sub(1)).into_owned();
        Ok(numerics::nullspace_basis(&rows, NULL_TOL)?.into_matrix())
    }
}

/// Steps S1-S3: Kron reduction at `ω0` followed by splitting each reduced branch impedance.
///
/// Unphysical elements (negative `r`, non-positive `l`) are an error unless `allow_unphysical`.
pub fn heuristic_reduce(network: &ValidatedNetwork, omega0: f64, allow_unphysical: bool) -> Result<SynthesizedNetwork, BaselineError> {
    let y = phasor::admittance(network, omega0)?;
    let yr = phasor::kron_reduce(&y)?.yr;
    let nb = network.n_boundary();
    let ids = network.boundary_ids();
    let scale = numerics::max_abs_complex(&yr);

    let mut pairs = Vec::new();
    for m in 0..nb {
        for n in m + 1..nb {
            if yr[(m, n)].norm() > 1e-12 * scale {
                pairs.push((m, n));
            }
        }
    }
    let cyclic_delta = nb == 3 && pairs.len() == 3;
    if cyclic_delta {
        pairs = vec![(0, 1), (1, 2), (2, 0)];
    }

    let mut edges = Vec::with_capacity(pairs.len());
    for (m, n) in pairs {
        let z = -yr[(m, n)].inv();
        let mut r = z.re;
        if r.abs() <= 1e-12 * z.norm() {
            r = 0.0;
        }
        let l = z.im / omega0;
        let id = format!("{}-{}", ids[m], ids[n]);
        if !allow_unphysical && (r < 0.0 || !(l > 0.0)) {
            return Err(BaselineError::NegativeSynthesizedElement { edge: id, r, l });
        }
        edges.push(IndexedEdge { id, tail: m, head: n, r, l });
    }
    Ok(SynthesizedNetwork {
        network: ValidatedNetwork::from_parts_unchecked(ids.to_vec(), nb, edges),
        omega0,
        cyclic_delta,
    })
}

/// Minimum-norm branch currents reproducing `i1_0`, shifted by `gamma` along the ambiguity basis.
///
/// Missing trailing coefficients are zero; a single `γ` scales the first basis column.
pub fn map_initial_condition(syn: &SynthesizedNetwork, i1_0: &DVector<f64>, gamma: &[f64]) -> Result<DVector<f64>, BaselineError> {
    let br = syn.incidence();
    let base = numerics::min_norm_solution(&br, i1_0).map_err(|e| match e {
        NumericsError::Inconsistent(r) => BaselineError::Inconsistent(r),
        other => other.into(),
    })?;
    let amb = syn.ambiguity_basis()?;
    if gamma.len() > amb.ncols() {
        return Err(BaselineError::GammaDimension {
            given: gamma.len(),
            dim: amb.ncols(),
        });
    }
    let mut f = base;
    for (k, g) in gamma.iter().enumerate() {
        f += amb.column(k) * *g;
    }
    Ok(f)
}

/// `count` draws uniform in `[lo, hi]` from a seeded ChaCha8 stream.
pub fn sample_gammas(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(lo..=hi)).collect()
}

/// Simulates the synthesized network once per `γ` coefficient vector, runs in parallel.
///
/// The synthesized network has no interior nodes, so its reduction is the identity and
/// each run integrates the plain RL dynamics.
pub fn run_baseline_sweep(
    network: &ValidatedNetwork,
    omega0: f64,
    x: &Excitation,
    f0_full: &DVector<f64>,
    gammas: &[Vec<f64>],
    cfg: &SolverConfig,
    allow_unphysical: bool,
) -> Result<Vec<Trajectory>, BaselineError> {
    let syn = heuristic_reduce(network, omega0, allow_unphysical)?;
    let model = reduction::reduce(&syn.network, PStrategy::OrthonormalNullBasis)?;
    let b1 = network.partition().b1;
    if f0_full.len() != b1.ncols() {
        return Err(SimulationError::DimensionMismatch {
            expected: b1.ncols(),
            got: f0_full.len(),
        }
        .into());
    }
    let i1_0 = &b1 * f0_full;
    gammas
        .par_iter()
        .map(|g| {
            let f0 = map_initial_condition(&syn, &i1_0, g)?;
            Ok(simulation::simulate_reduced(&model, x, &f0, cfg)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{validate, Edge, Network};
    use approx::assert_abs_diff_eq;

    fn wye(r: [f64; 3], l: [f64; 3]) -> ValidatedNetwork {
        validate(&Network {
            nodes: ["1", "2", "3", "4"].map(String::from).to_vec(),
            boundary: ["1", "2", "3"].map(String::from).to_vec(),
            edges: (0..3)
                .map(|k| Edge::new(format!("{}", k + 1), format!("{}", k + 1), "4", r[k], l[k]))
                .collect(),
        })
        .unwrap()
    }

    #[test]
    fn balanced_wye_synthesizes_delta_of_three() {
        for omega0 in [0.5, 9.42477796] {
            let syn = heuristic_reduce(&wye([1.0; 3], [1.0; 3]), omega0, false).unwrap();
            assert!(syn.cyclic_delta);
            for e in syn.network.edges() {
                assert_abs_diff_eq!(e.r, 3.0, epsilon = 1e-12);
                assert_abs_diff_eq!(e.l, 3.0, epsilon = 1e-12);
            }
            let br = syn.incidence();
            assert_eq!(br, DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -1.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0]));
        }
    }

    #[test]
    fn wye_benchmark_synthesizes_positive_elements() {
        let syn = heuristic_reduce(&wye([0.98, 0.99, 0.58], [0.55, 0.64, 0.77]), 3.0 * std::f64::consts::PI, false).unwrap();
        assert_eq!(syn.network.n_edges(), 3);
        assert!(syn.network.edges().iter().all(|e| e.r > 0.0 && e.l > 0.0));
    }

    #[test]
    fn homogeneous_wye_synthesis_is_frequency_independent() {
        let net = wye([0.6, 1.2, 0.9], [0.3, 0.6, 0.45]);
        let a = heuristic_reduce(&net, 2.0, false).unwrap();
        let b = heuristic_reduce(&net, 17.0, false).unwrap();
        for (x, y) in a.network.edges().iter().zip(b.network.edges()) {
            assert_abs_diff_eq!(x.r, y.r, epsilon = 1e-10);
            assert_abs_diff_eq!(x.l, y.l, epsilon = 1e-10);
        }
    }

    #[test]
    fn initial_condition_mapping() {
        let syn = heuristic_reduce(&wye([1.0; 3], [1.0; 3]), 1.0, false).unwrap();
        let i1 = DVector::from_vec(vec![-5.0, -5.0, 10.0]);
        let f = map_initial_condition(&syn, &i1, &[0.0]).unwrap();
        assert_abs_diff_eq!(f, DVector::from_vec(vec![0.0, -5.0, 5.0]), epsilon = 1e-12);
        let f = map_initial_condition(&syn, &i1, &[2.0]).unwrap();
        assert_abs_diff_eq!(f, DVector::from_vec(vec![2.0, -3.0, 7.0]), epsilon = 1e-12);
        let f = map_initial_condition(&syn, &DVector::zeros(3), &[0.0]).unwrap();
        assert_eq!(f, DVector::zeros(3));
        assert!(matches!(
            map_initial_condition(&syn, &i1, &[1.0, 2.0]),
            Err(BaselineError::GammaDimension { given: 2, dim: 1 })
        ));
        assert!(matches!(
            map_initial_condition(&syn, &DVector::from_vec(vec![1.0, 1.0, 1.0]), &[]),
            Err(BaselineError::Inconsistent(_))
        ));
    }

    #[test]
    fn general_reduced_graph_uses_lexicographic_orientation() {
        // star with four leaves reduces to a complete graph on four nodes
        let net = validate(&Network {
            nodes: ["a", "b", "c", "d", "hub"].map(String::from).to_vec(),
            boundary: ["a", "b", "c", "d"].map(String::from).to_vec(),
            edges: ["a", "b", "c", "d"]
                .iter()
                .enumerate()
                .map(|(k, n)| Edge::new(format!("{k}"), *n, "hub", 0.5 + 0.1 * k as f64, 0.7))
                .collect(),
        })
        .unwrap();
        let syn = heuristic_reduce(&net, 5.0, false).unwrap();
        assert!(!syn.cyclic_delta);
        assert_eq!(syn.network.n_edges(), 6);
        assert!(syn.network.edges().iter().all(|e| e.tail < e.head));
        let amb = syn.ambiguity_basis().unwrap();
        assert_eq!(amb.ncols(), 3);
        assert!(numerics::max_abs_real(&(syn.incidence() * &amb)) < 1e-12);
        let i1 = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.5]);
        let f = map_initial_condition(&syn, &i1, &[0.3, -1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(syn.incidence() * f, i1, epsilon = 1e-12);
    }

    #[test]
    fn gamma_draws_are_seeded() {
        let a = sample_gammas(7, 5, -5.0, 5.0);
        assert_eq!(a, sample_gammas(7, 5, -5.0, 5.0));
        assert_ne!(a, sample_gammas(8, 5, -5.0, 5.0));
        assert!(a.iter().all(|g| (-5.0..=5.0).contains(g)));
    }
}
