//! Time integration of the reduced model and of the full constrained network.
//!
//! Both solvers use fixed-step classical RK4 on the uniform grid `t_k = k dt`, so runs are
//! deterministic and directly comparable sample by sample. The DAE oracle integrates the
//! full flow vector with interior voltages solved from the differentiated KCL constraint
//! and does not touch the null-space projection.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::network::ValidatedNetwork;
use crate::phasor::Phasor;
use crate::reduction::{HomogeneousReducedModel, ReducedModel, ReductionError};

/// Relative tolerance for KCL consistency of initial flows.
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Relative bound on `||B0 f||` enforced by the oracle at every recorded sample.
pub const DRIFT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid excitation: {0}")]
    InvalidExcitation(String),
    #[error("initial flows violate KCL at interior nodes (residual {0:e})")]
    InconsistentInitialCondition(f64),
    #[error("constraint drift {norm:e} at t = {t}")]
    ConstraintDrift { t: f64, norm: f64 },
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trajectory covers {covered} s but {needed} s are required")]
    InsufficientWindow { covered: f64, needed: f64 },
    #[error("trajectory sampling is not uniform")]
    NonUniformSampling,
    #[error("reduced inductance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

/// Voltage waveform at one boundary node.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    /// `amplitude cos(2π freq t + phase)`, phase in radians.
    Sinusoid { amplitude: f64, freq: f64, phase: f64 },
    /// `0` before `t_step`, `value` from `t_step` on.
    Step { value: f64, t_step: f64 },
    Constant { value: f64 },
    /// Zero-order hold through `(t, v)` breakpoints; `0` before the first one.
    Piecewise { breakpoints: Vec<(f64, f64)> },
}

impl Signal {
    pub fn validate(&self) -> Result<(), SimulationError> {
        match self {
            Signal::Sinusoid { amplitude, freq, phase } => {
                if !(*freq > 0.0) || !freq.is_finite() {
                    return Err(SimulationError::InvalidExcitation(format!("sinusoid frequency must be positive, got {freq}")));
                }
                if !amplitude.is_finite() || !phase.is_finite() {
                    return Err(SimulationError::InvalidExcitation("non-finite sinusoid parameter".into()));
                }
            }
            Signal::Step { value, t_step } => {
                if !value.is_finite() || !t_step.is_finite() {
                    return Err(SimulationError::InvalidExcitation("non-finite step parameter".into()));
                }
            }
            Signal::Constant { value } => {
                if !value.is_finite() {
                    return Err(SimulationError::InvalidExcitation("non-finite constant".into()));
                }
            }
            Signal::Piecewise { breakpoints } => {
                if breakpoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(SimulationError::InvalidExcitation("breakpoints must be strictly increasing".into()));
                }
                if breakpoints.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return Err(SimulationError::InvalidExcitation("non-finite breakpoint".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Sinusoid { amplitude, freq, phase } => amplitude * (2.0 * PI * freq * t + phase).cos(),
            Signal::Step { value, t_step } => {
                if t < *t_step {
                    0.0
                } else {
                    *value
                }
            }
            Signal::Constant { value } => *value,
            Signal::Piecewise { breakpoints } => {
                let held = breakpoints.partition_point(|&(tb, _)| tb <= t);
                if held == 0 {
                    0.0
                } else {
                    breakpoints[held - 1].1
                }
            }
        }
    }
}

/// One signal per boundary node, in boundary order.
#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    signals: Vec<Signal>,
}

impl Excitation {
    pub fn new(signals: Vec<Signal>) -> Result<Self, SimulationError> {
        for s in &signals {
            s.validate()?;
        }
        Ok(Excitation { signals })
    }

    /// All boundary voltages held at zero.
    pub fn zero(n_boundary: usize) -> Self {
        Excitation {
            signals: vec![Signal::Constant { value: 0.0 }; n_boundary],
        }
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.signals.len(), self.signals.iter().map(|s| s.eval(t)))
    }
}

pub fn eval_excitation(x: &Excitation, t: f64) -> DVector<f64> {
    x.eval(t)
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, record_stride: usize) -> Result<Self, SimulationError> {
        let cfg = SolverConfig { dt, t_end, record_stride };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SimulationError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > self.dt) || !self.t_end.is_finite() {
            return Err(SimulationError::InvalidConfig(format!("t_end must exceed dt, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(SimulationError::InvalidConfig("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of RK4 steps; the run ends at `n_steps * dt`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// What the `state` samples of a [`Trajectory`] hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Pseudoflow,
    Flow,
    /// Injection-space run; only `i1` is recorded.
    None,
}

/// Recorded samples of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Boundary injections per sample.
    pub i1: Vec<DVector<f64>>,
    pub state_kind: StateKind,
    /// Pseudoflows or flows per sample (empty for [`StateKind::None`]).
    pub state: Vec<DVector<f64>>,
    /// Interior voltages per sample (oracle runs only).
    pub v0: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_boundary(&self) -> usize {
        self.i1.first().map_or(0, |v| v.len())
    }

    pub fn i1_channel(&self, k: usize) -> Vec<f64> {
        self.i1.iter().map(|v| v[k]).collect()
    }

    pub fn i1_rows(&self) -> Vec<Vec<f64>> {
        self.i1.iter().map(|v| v.iter().copied().collect()).collect()
    }

    /// Largest `|1^T i1|` over all samples.
    pub fn max_injection_imbalance(&self) -> f64 {
        self.i1.iter().map(|v| v.sum().abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_injection(&self) -> f64 {
        self.i1.iter().map(|v| v.amax()).fold(0.0, f64::max)
    }
}

fn rk4_step<F>(rhs: &F, t: f64, dt: f64, x: &DVector<f64>) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * dt, &(x + &k1 * (0.5 * dt)));
    let k3 = rhs(t + 0.5 * dt, &(x + &k2 * (0.5 * dt)));
    let k4 = rhs(t + dt, &(x + &k3 * dt));
    x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0)
}

/// Integrates `ẋ = rhs(t, x)` on the grid and calls `record(t, x)` at every stride.
fn integrate<F, R>(x0: DVector<f64>, cfg: &SolverConfig, rhs: F, mut record: R) -> Result<(), SimulationError>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
    R: FnMut(f64, &DVector<f64>) -> Result<(), SimulationError>,
{
    cfg.validate()?;
    let n = cfg.n_steps();
    let mut x = x0;
    record(0.0, &x)?;
    for k in 0..n {
        let t = k as f64 * cfg.dt;
        x = rk4_step(&rhs, t, cfg.dt, &x);
        if (k + 1) % cfg.record_stride == 0 {
            record((k + 1) as f64 * cfg.dt, &x)?;
        }
    }
    Ok(())
}

fn check_excitation(x: &Excitation, n_boundary: usize) -> Result<(), SimulationError> {
    if x.len() != n_boundary {
        return Err(SimulationError::DimensionMismatch {
            expected: n_boundary,
            got: x.len(),
        });
    }
    Ok(())
}

/// RK4 on `L̂ ḟ̂ = -R̂ f̂ + B̂^T v1(t)` from the pseudoflows of `f0`.
pub fn simulate_reduced(
    model: &ReducedModel,
    x: &Excitation,
    f0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<Trajectory, SimulationError> {
    check_excitation(x, model.n_boundary())?;
    let fhat0 = model.embed_initial(f0, CONSISTENCY_TOL).map_err(|e| match e {
        ReductionError::InconsistentInitialCondition(r) => SimulationError::InconsistentInitialCondition(r),
        other => other.into(),
    })?;
    simulate_pseudoflows(model, x, fhat0, cfg)
}

/// Same as [`simulate_reduced`] but starting from pseudoflows directly.
pub fn simulate_pseudoflows(
    model: &ReducedModel,
    x: &Excitation,
    fhat0: DVector<f64>,
    cfg: &SolverConfig,
) -> Result<Trajectory, SimulationError> {
    check_excitation(x, model.n_boundary())?;
    if fhat0.len() != model.order() {
        return Err(SimulationError::DimensionMismatch {
            expected: model.order(),
            got: fhat0.len(),
        });
    }
    let m = model.order();
    let chol = model.lhat.clone().cholesky().ok_or(SimulationError::NotPositiveDefinite)?;
    let decay = -chol.solve(&model.rhat);
    let input = chol.solve(&model.bhat.transpose());
    let bhat = &model.bhat;

    let mut traj = Trajectory {
        times: Vec::new(),
        i1: Vec::new(),
        state_kind: StateKind::Pseudoflow,
        state: Vec::new(),
        v0: Vec::new(),
    };
    let rhs = |t: f64, f: &DVector<f64>| -> DVector<f64> {
        if m == 0 {
            return DVector::zeros(0);
        }
        &decay * f + &input * x.eval(t)
    };
    integrate(fhat0, cfg, rhs, |t, f| {
        traj.times.push(t);
        traj.i1.push(bhat * f);
        traj.state.push(f.clone());
        Ok(())
    })?;
    Ok(traj)
}

/// Index-1 reduction of the full network DAE, integrated directly in flow coordinates.
pub fn simulate_dae_oracle(
    network: &ValidatedNetwork,
    x: &Excitation,
    f0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<Trajectory, SimulationError> {
    let e = network.n_edges();
    check_excitation(x, network.n_boundary())?;
    if f0.len() != e {
        return Err(SimulationError::DimensionMismatch { expected: e, got: f0.len() });
    }
    let mats = network.partition();
    let b0 = &mats.b0;
    let b1t = mats.b1.transpose();
    let b0t = b0.transpose();
    let l_inv = mats.l.map(|l| 1.0 / l);
    let r = &mats.r;

    let residual = (b0 * f0).norm();
    if residual > CONSISTENCY_TOL * f0.norm() {
        return Err(SimulationError::InconsistentInitialCondition(residual));
    }

    // B0 L^{-1} B0^T is constant and SPD; factor once
    let b0_linv = DMatrix::from_fn(b0.nrows(), e, |i, j| b0[(i, j)] * l_inv[j]);
    let schur: Option<Cholesky<f64, Dyn>> = if b0.nrows() == 0 {
        None
    } else {
        Some((&b0_linv * &b0t).cholesky().ok_or(SimulationError::NotPositiveDefinite)?)
    };

    let interior_voltages = |t: f64, f: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let v1 = x.eval(t);
        let drive = &b1t * &v1;
        let v0 = match &schur {
            Some(chol) => chol.solve(&(&b0_linv * (r.component_mul(f) - &drive))),
            None => DVector::zeros(0),
        };
        (v0, drive)
    };
    let rhs = |t: f64, f: &DVector<f64>| -> DVector<f64> {
        let (v0, drive) = interior_voltages(t, f);
        let branch = -r.component_mul(f) + &b0t * v0 + drive;
        branch.component_mul(&l_inv)
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        i1: Vec::new(),
        state_kind: StateKind::Flow,
        state: Vec::new(),
        v0: Vec::new(),
    };
    integrate(f0.clone(), cfg, rhs, |t, f| {
        let drift = (b0 * f).norm();
        if drift > DRIFT_TOL * f.norm() {
            return Err(SimulationError::ConstraintDrift { t, norm: drift });
        }
        let (v0, _) = interior_voltages(t, f);
        traj.times.push(t);
        traj.i1.push(&mats.b1 * f);
        traj.state.push(f.clone());
        traj.v0.push(v0);
        Ok(())
    })?;
    Ok(traj)
}

/// RK4 on the injection-space model `i̇1 = -α i1 + Lred v1`.
pub fn simulate_homogeneous(
    model: &HomogeneousReducedModel,
    x: &Excitation,
    i1_0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<Trajectory, SimulationError> {
    let nb = model.lred.nrows();
    check_excitation(x, nb)?;
    if i1_0.len() != nb {
        return Err(SimulationError::DimensionMismatch { expected: nb, got: i1_0.len() });
    }
    let alpha = model.alpha;
    let rhs = |t: f64, i: &DVector<f64>| -> DVector<f64> { &model.lred * x.eval(t) - i * alpha };
    let mut traj = Trajectory {
        times: Vec::new(),
        i1: Vec::new(),
        state_kind: StateKind::None,
        state: Vec::new(),
        v0: Vec::new(),
    };
    integrate(i1_0.clone(), cfg, rhs, |t, i| {
        traj.times.push(t);
        traj.i1.push(i.clone());
        Ok(())
    })?;
    Ok(traj)
}

/// Fundamental-frequency phasor of one channel plus the fraction of energy it leaves unexplained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyPhasor {
    pub phasor: Phasor,
    pub residual: f64,
}

/// Residual fraction above which a channel is considered not yet settled.
pub const STEADY_RESIDUAL_MAX: f64 = 1e-3;

/// Least-squares fit of `a cos(ωt) + b sin(ωt)` over the last `periods` periods of every `i1` channel.
pub fn extract_steady_phasors(traj: &Trajectory, freq: f64, periods: usize) -> Result<Vec<SteadyPhasor>, SimulationError> {
    let channels: Vec<Vec<f64>> = (0..traj.n_boundary()).map(|k| traj.i1_channel(k)).collect();
    extract_phasors(&traj.times, &channels, freq, periods)
}

/// Channel-wise version of [`extract_steady_phasors`].
pub fn extract_phasors(times: &[f64], channels: &[Vec<f64>], freq: f64, periods: usize) -> Result<Vec<SteadyPhasor>, SimulationError> {
    if !(freq > 0.0) {
        return Err(SimulationError::InvalidExcitation(format!("frequency must be positive, got {freq}")));
    }
    let period = 1.0 / freq;
    let needed = (periods + 2) as f64 * period;
    let covered = match (times.first(), times.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    if periods == 0 || covered + 1e-9 * period < needed {
        return Err(SimulationError::InsufficientWindow { covered, needed });
    }
    let h = covered / (times.len() - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
        return Err(SimulationError::NonUniformSampling);
    }

    let t_last = *times.last().unwrap();
    let start = times.partition_point(|&t| t < t_last - periods as f64 * period - 1e-9 * h);
    let omega = 2.0 * PI * freq;
    let window = &times[start..];
    let design = DMatrix::from_fn(window.len(), 2, |i, j| {
        let arg = omega * window[i];
        if j == 0 {
            arg.cos()
        } else {
            arg.sin()
        }
    });
    let qr = design.clone().qr();
    let r = qr.r();
    let qt = qr.q().transpose();

    channels
        .iter()
        .map(|values| {
            if values.len() != times.len() {
                return Err(SimulationError::DimensionMismatch {
                    expected: times.len(),
                    got: values.len(),
                });
            }
            let y = DVector::from_column_slice(&values[start..]);
            let energy = y.norm_squared();
            if energy == 0.0 {
                return Ok(SteadyPhasor {
                    phasor: Phasor::new(0.0, 0.0),
                    residual: 0.0,
                });
            }
            let coeffs = r
                .solve_upper_triangular(&(&qt * &y))
                .ok_or(SimulationError::InsufficientWindow { covered, needed })?;
            let fit = &design * &coeffs;
            let residual = (y - fit).norm_squared() / energy;
            // a cos + b sin = |x| cos(ωt + θ) with x = a - j b
            let phasor = Phasor::from_complex(num_complex::Complex64::new(coeffs[0], -coeffs[1]));
            Ok(SteadyPhasor { phasor, residual })
        })
        .collect()
}
