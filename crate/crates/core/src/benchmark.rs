//! The three-terminal wye network used for the wye-delta comparison.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::baseline::{self, BaselineError};
use crate::metrics::{self, Deviation};
use crate::network::{validate, Edge, Network};
use crate::reduction::{reduce, PStrategy};
use crate::simulation::{self, Excitation, Signal, SolverConfig, Trajectory};

pub const WYE_R: [f64; 3] = [0.98, 0.99, 0.58];
pub const WYE_L: [f64; 3] = [0.55, 0.64, 0.77];
/// Initial branch currents, all edges oriented into the centre node.
pub const WYE_F0: [f64; 3] = [-5.0, -5.0, 10.0];
pub const FORCING_HZ: f64 = 1.5;
pub const SINUSOID_AMPLITUDE: f64 = 120.0;
pub const SINUSOID_PHASES_DEG: [f64; 3] = [0.0, 30.0, -30.0];
pub const STEP_VALUES: [f64; 3] = [120.0, 100.0, 110.0];
pub const GAMMA_RANGE: (f64, f64) = (-5.0, 5.0);
pub const GAMMA_DRAWS: usize = 5;

/// Synthesis frequency of the baseline, `2π · 1.5` rad/s.
pub fn omega0() -> f64 {
    2.0 * PI * FORCING_HZ
}

/// Boundary nodes 1-3, interior node 4, edges `k -> 4`.
pub fn wye_network() -> Network {
    Network {
        nodes: ["1", "2", "3", "4"].map(String::from).to_vec(),
        boundary: ["1", "2", "3"].map(String::from).to_vec(),
        edges: (0..3)
            .map(|k| Edge::new(format!("{}", k + 1), format!("{}", k + 1), "4", WYE_R[k], WYE_L[k]))
            .collect(),
    }
}

pub fn initial_flows() -> DVector<f64> {
    DVector::from_row_slice(&WYE_F0)
}

pub fn sinusoid_excitation() -> Excitation {
    Excitation::new(
        SINUSOID_PHASES_DEG
            .iter()
            .map(|deg| Signal::Sinusoid {
                amplitude: SINUSOID_AMPLITUDE,
                freq: FORCING_HZ,
                phase: deg.to_radians(),
            })
            .collect(),
    )
    .expect("valid sinusoids")
}

pub fn step_excitation() -> Excitation {
    Excitation::new(STEP_VALUES.iter().map(|&value| Signal::Step { value, t_step: 0.0 }).collect()).expect("valid steps")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Sinusoid,
    Step,
}

impl Which {
    pub fn excitation(self) -> Excitation {
        match self {
            Which::Sinusoid => sinusoid_excitation(),
            Which::Step => step_excitation(),
        }
    }
}

/// Settings for [`run_experiment`]. Errors are measured on boundary injections.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub solver: SolverConfig,
    pub strategy: PStrategy,
    pub seed: u64,
    /// Length of the trailing window treated as steady state, in seconds.
    pub steady_window: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            solver: SolverConfig {
                dt: 1e-4,
                t_end: 30.0,
                record_stride: 10,
            },
            strategy: PStrategy::TreeElimination,
            seed: 0,
            steady_window: 4.0 / FORCING_HZ,
        }
    }
}

/// Baseline instance summary, errors relative to the DAE oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub gamma: f64,
    pub steady_state_error_rel: f64,
    pub transient_max_error_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub which: Which,
    pub seed: u64,
    pub omega0: f64,
    pub steady_from_s: f64,
    pub reduced_vs_dae: Deviation,
    pub initial_injection_mismatch: f64,
    pub baselines: Vec<BaselineSummary>,
    pub observations: Vec<Observation>,
}

impl ExperimentSummary {
    pub fn all_hold(&self) -> bool {
        self.observations.iter().all(|o| o.holds)
    }
}

pub struct ExperimentRun {
    pub dae: Trajectory,
    pub reduced: Trajectory,
    pub baselines: Vec<Trajectory>,
    pub summary: ExperimentSummary,
}

fn observe(name: &str, holds: bool, detail: String) -> Observation {
    Observation {
        name: name.to_string(),
        holds,
        detail,
    }
}

/// Runs the oracle, the exact reduced model and five heuristic instances on the wye benchmark.
pub fn run_experiment(which: Which, cfg: &ExperimentConfig) -> Result<ExperimentRun, BaselineError> {
    let net = validate(&wye_network()).expect("benchmark network is valid");
    let x = which.excitation();
    let f0 = initial_flows();
    let dae = simulation::simulate_dae_oracle(&net, &x, &f0, &cfg.solver)?;
    let model = reduce(&net, cfg.strategy)?;
    let reduced = simulation::simulate_reduced(&model, &x, &f0, &cfg.solver)?;

    let gammas = baseline::sample_gammas(cfg.seed, GAMMA_DRAWS, GAMMA_RANGE.0, GAMMA_RANGE.1);
    let gamma_vecs: Vec<Vec<f64>> = gammas.iter().map(|&g| vec![g]).collect();
    let baselines = baseline::run_baseline_sweep(&net, omega0(), &x, &f0, &gamma_vecs, &cfg.solver, false)?;

    let t_last = dae.times.last().copied().unwrap_or(0.0);
    let steady_from = t_last - cfg.steady_window;
    let compare = |a: &Trajectory| metrics::compare_injections(a, &dae, steady_from).expect("common time grid");
    let reduced_vs_dae = compare(&reduced);
    let summaries: Vec<BaselineSummary> = gammas
        .iter()
        .zip(&baselines)
        .map(|(&gamma, traj)| {
            let d = compare(traj);
            BaselineSummary {
                gamma,
                steady_state_error_rel: d.steady_rel,
                transient_max_error_rel: d.max_rel,
            }
        })
        .collect();

    let i0 = &dae.i1[0];
    let initial_injection_mismatch = std::iter::once(&reduced)
        .chain(&baselines)
        .map(|t| (&t.i1[0] - i0).amax())
        .fold(0.0, f64::max);
    let scale = i0.amax().max(1.0);

    let mut observations = vec![
        observe(
            "initial injections coincide",
            initial_injection_mismatch <= 1e-12 * scale,
            format!("max mismatch {initial_injection_mismatch:e} A"),
        ),
        observe(
            "reduced model coincides with the oracle",
            reduced_vs_dae.max_rel <= 1e-6,
            format!("max relative deviation {:e}", reduced_vs_dae.max_rel),
        ),
    ];
    match which {
        Which::Sinusoid => {
            let worst = summaries.iter().map(|b| b.steady_state_error_rel).fold(0.0, f64::max);
            observations.push(observe(
                "every baseline settles onto the oracle",
                worst <= 1e-3,
                format!("worst steady relative error {worst:e}"),
            ));
            let best_ratio = summaries
                .iter()
                .map(|b| b.transient_max_error_rel / b.steady_state_error_rel.max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            observations.push(observe(
                "some baseline has a visible transient error",
                best_ratio >= 10.0,
                format!("largest transient/steady ratio {best_ratio:e}"),
            ));
        }
        Which::Step => {
            let least = summaries.iter().map(|b| b.steady_state_error_rel).fold(f64::INFINITY, f64::min);
            observations.push(observe(
                "every baseline misses the oracle's steady state",
                least >= 1e-2,
                format!("smallest steady relative error {least:e}"),
            ));
        }
    }

    Ok(ExperimentRun {
        dae,
        reduced,
        baselines,
        summary: ExperimentSummary {
            which,
            seed: cfg.seed,
            omega0: omega0(),
            steady_from_s: steady_from,
            reduced_vs_dae,
            initial_injection_mismatch,
            baselines: summaries,
            observations,
        },
    })
}
