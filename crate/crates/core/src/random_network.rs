//! Random connected RL networks for stress tests and benchmarks.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::{validate, Edge, Network, ValidatedNetwork};
use crate::numerics::{self, NULL_TOL};
use crate::simulation::{Excitation, Signal};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomNetworkSpec {
    pub nodes: RangeInclusive<usize>,
    pub max_edges: usize,
    pub r: RangeInclusive<f64>,
    pub l: RangeInclusive<f64>,
    /// Permit boundary = all nodes (no interior).
    pub allow_no_interior: bool,
    /// With a single boundary node the injection is identically zero.
    pub min_boundary: usize,
}

impl Default for RandomNetworkSpec {
    fn default() -> Self {
        RandomNetworkSpec {
            nodes: 3..=10,
            max_edges: 20,
            r: 0.5..=1.0,
            l: 0.5..=1.0,
            allow_no_interior: false,
            min_boundary: 2,
        }
    }
}

/// Random spanning tree plus random extra edges (parallel edges allowed, no self-loops),
/// random orientations, random strict interior subset.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, spec: &RandomNetworkSpec) -> ValidatedNetwork {
    let min_nodes = spec.min_boundary.max(1) + usize::from(!spec.allow_no_interior);
    let n = rng.random_range(spec.nodes.clone()).max(min_nodes).max(2);
    let max_e = spec.max_edges.max(n - 1);
    let e = rng.random_range(n - 1..=max_e);
    let ids: Vec<String> = (1..=n).map(|k| format!("n{k}")).collect();

    let mut pairs = Vec::with_capacity(e);
    for k in 1..n {
        pairs.push((rng.random_range(0..k), k));
    }
    while pairs.len() < e {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.push((a, b));
        }
    }
    pairs.shuffle(rng);

    let edges = pairs
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let (from, to) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            Edge::new(
                format!("e{}", k + 1),
                ids[from].clone(),
                ids[to].clone(),
                rng.random_range(spec.r.clone()),
                rng.random_range(spec.l.clone()),
            )
        })
        .collect();

    let min_interior = if spec.allow_no_interior { 0 } else { 1 };
    let n0 = rng.random_range(min_interior..=n - spec.min_boundary.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut boundary_idx: Vec<usize> = order[..n - n0].to_vec();
    boundary_idx.sort_unstable();
    let boundary = boundary_idx.iter().map(|&k| ids[k].clone()).collect();

    validate(&Network { nodes: ids, boundary, edges }).expect("generated network is valid")
}

/// Random flow vector satisfying KCL at every interior node, entries of order `scale`.
pub fn random_consistent_flows<R: Rng + ?Sized>(rng: &mut R, network: &ValidatedNetwork, scale: f64) -> DVector<f64> {
    let b0 = network.partition().b0;
    let p = numerics::nullspace_basis(&b0, NULL_TOL).expect("connected network").into_matrix();
    let z = DVector::from_fn(p.ncols(), |_, _| rng.random_range(-scale..=scale));
    p * z
}

/// Random mix of sinusoids, steps and constants on the boundary nodes.
pub fn random_excitation<R: Rng + ?Sized>(rng: &mut R, n_boundary: usize) -> Excitation {
    let signals = (0..n_boundary)
        .map(|_| match rng.random_range(0..3) {
            0 => Signal::Sinusoid {
                amplitude: rng.random_range(1.0..=120.0),
                freq: rng.random_range(0.2..=3.0),
                phase: rng.random_range(-PI..=PI),
            },
            1 => Signal::Step {
                value: rng.random_range(-120.0..=120.0),
                t_step: rng.random_range(0.0..=0.5),
            },
            _ => Signal::Constant {
                value: rng.random_range(-120.0..=120.0),
            },
        })
        .collect();
    Excitation::new(signals).expect("generated signals are valid")
}

/// Same network with every `r` set to `alpha * l`.
pub fn homogenized(network: &ValidatedNetwork, alpha: f64) -> ValidatedNetwork {
    let mut plain = network.to_network();
    for e in &mut plain.edges {
        e.r = alpha * e.l;
    }
    validate(&plain).expect("homogenized network stays valid")
}
