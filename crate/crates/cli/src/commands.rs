use std::path::{Path, PathBuf};

use kronred::baseline;
use kronred::benchmark::{self, ExperimentConfig};
use kronred::io::{self, ChannelLabels};
use kronred::metrics;
use kronred::phasor::{self, Phasor};
use kronred::reduction::{self, PStrategy, ReducedModel};
use kronred::simulation::{self, SolverConfig, Trajectory};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::files;
use crate::manifest::{self, RunManifest};
use crate::{Command, ExperimentArgs, Method, SimulateArgs, SEED_ENV};

const HOMOGENEITY_TOL: f64 = 1e-9;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { network } => validate(&network),
        Command::Reduce { network, p_strategy, out } => reduce(&network, p_strategy.into(), out.as_deref()),
        Command::Simulate(args) => simulate(&args),
        Command::Compare { a, b, channels, from_time } => compare(&a, &b, channels, from_time),
        Command::Phasor { network, omega, v1 } => phasor_cmd(&network, omega, &v1),
        Command::PaperExperiment(args) => paper_experiment(&args),
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn validate(path: &Path) -> Result<(), CliError> {
    let net = files::load_network(path)?;
    print_json(&json!({
        "valid": true,
        "nodes": net.n_nodes(),
        "edges": net.n_edges(),
        "boundary": net.boundary_ids(),
        "interior": net.interior_ids(),
        "reduced_order": net.n_edges() - net.n_interior(),
    }));
    Ok(())
}

fn reduce(path: &Path, strategy: PStrategy, out: Option<&Path>) -> Result<(), CliError> {
    let net = files::load_network(path)?;
    let model = reduction::reduce(&net, strategy)?;
    let text = io::model_to_json(&model);
    match out {
        Some(p) => files::write(p, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Flag, then environment variable, then the fallback.
fn resolve_seed(flag: Option<u64>, fallback: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(raw) = std::env::var(SEED_ENV) {
        return raw
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{SEED_ENV}={raw:?} is not an unsigned integer")));
    }
    Ok(fallback.unwrap_or(0))
}

fn write_csv(path: &Path, traj: &Trajectory, labels: &ChannelLabels) -> Result<PathBuf, CliError> {
    files::write(path, &io::trajectory_csv_string(traj, labels))?;
    Ok(path.to_path_buf())
}

fn default_from_time(times: &[f64]) -> f64 {
    match (times.first(), times.last()) {
        (Some(a), Some(b)) => b - 0.1 * (b - a),
        _ => 0.0,
    }
}

fn load_model(path: &Path, run: &RunManifest) -> Result<ReducedModel, CliError> {
    let text = files::read(path)?;
    let model = io::model_from_json(&text).map_err(|e| files::file_error(path.to_path_buf(), e))?;
    if model.n_edges() != run.network.n_edges() || model.n_boundary() != run.network.n_boundary() {
        return Err(CliError::Input(format!(
            "model {} has {} edges and {} boundary nodes, network has {} and {}",
            path.display(),
            model.n_edges(),
            model.n_boundary(),
            run.network.n_edges(),
            run.network.n_boundary()
        )));
    }
    Ok(model)
}

fn gamma_sets(args: &SimulateArgs, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
    let mut sets: Vec<Vec<f64>> = args.gamma.iter().map(|&g| vec![g]).collect();
    for raw in &args.gamma_vector {
        let v = raw
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Input(format!("--gamma-vector {raw:?} is not a comma-separated list of numbers")))?;
        sets.push(v);
    }
    if sets.is_empty() {
        let (lo, hi) = benchmark::GAMMA_RANGE;
        sets = baseline::sample_gammas(seed, args.draws, lo, hi).into_iter().map(|g| vec![g]).collect();
    }
    Ok(sets)
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let run = manifest::load(&args.manifest)?;
    let out_dir = args.out_dir.clone().unwrap_or_else(|| run.output_dir.clone());
    let labels = ChannelLabels::for_network(&run.network);
    let cfg = &run.solver;

    let written = match args.method {
        Method::Reduced => {
            let model = match &args.model {
                Some(p) => load_model(p, &run)?,
                None => reduction::reduce(&run.network, run.strategy)?,
            };
            let traj = simulation::simulate_reduced(&model, &run.excitation, &run.f0, cfg)?;
            vec![write_csv(&out_dir.join("reduced.csv"), &traj, &labels)?]
        }
        Method::Dae => {
            let traj = simulation::simulate_dae_oracle(&run.network, &run.excitation, &run.f0, cfg)?;
            vec![write_csv(&out_dir.join("dae.csv"), &traj, &labels)?]
        }
        Method::Homogeneous => {
            let model = reduction::homogeneous_reduce(&run.network, HOMOGENEITY_TOL)?;
            let mats = run.network.partition();
            let residual = (&mats.b0 * &run.f0).norm();
            if residual > simulation::CONSISTENCY_TOL * run.f0.norm() {
                return Err(simulation::SimulationError::InconsistentInitialCondition(residual).into());
            }
            let i1_0 = &mats.b1 * &run.f0;
            let traj = simulation::simulate_homogeneous(&model, &run.excitation, &i1_0, cfg)?;
            vec![write_csv(&out_dir.join("homogeneous.csv"), &traj, &labels)?]
        }
        Method::Baseline => simulate_baseline(args, &run, &out_dir)?,
    };
    print_json(&json!({ "written": written }));
    Ok(())
}

fn simulate_baseline(args: &SimulateArgs, run: &RunManifest, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let omega0 = args
        .omega0
        .ok_or_else(|| CliError::Usage("--method baseline requires --omega0".into()))?;
    let seed = resolve_seed(args.seed, run.seed)?;
    let gammas = gamma_sets(args, seed)?;
    let syn = baseline::heuristic_reduce(&run.network, omega0, args.allow_unphysical)?;
    let trajs = baseline::run_baseline_sweep(&run.network, omega0, &run.excitation, &run.f0, &gammas, &run.solver, args.allow_unphysical)?;

    let (oracle_times, oracle_rows) = match &args.oracle {
        Some(path) => {
            let table = files::read_table(path)?;
            let names: Vec<String> = run.network.boundary_ids().iter().map(|id| format!("i_{id}")).collect();
            let times = table.times().map_err(|e| files::file_error(path.clone(), e))?;
            let rows = table.select(&names).map_err(|e| files::file_error(path.clone(), e))?;
            (times, rows)
        }
        None => {
            let dae = simulation::simulate_dae_oracle(&run.network, &run.excitation, &run.f0, &run.solver)?;
            (dae.times.clone(), dae.i1_rows())
        }
    };
    let from_time = args.from_time.unwrap_or_else(|| default_from_time(&oracle_times));

    let labels = ChannelLabels::for_network(&syn.network);
    let mut written = Vec::new();
    let mut summary = Vec::new();
    for (k, (traj, gamma)) in trajs.iter().zip(&gammas).enumerate() {
        written.push(write_csv(&out_dir.join(format!("baseline_{}.csv", k + 1)), traj, &labels)?);
        let d = metrics::compare_rows(&traj.times, &traj.i1_rows(), &oracle_times, &oracle_rows, from_time)?;
        let gamma_value = if gamma.len() == 1 { json!(gamma[0]) } else { json!(gamma) };
        summary.push(json!({
            "gamma": gamma_value,
            "steady_state_error_rel": d.steady_rel,
            "transient_max_error_rel": d.max_rel,
        }));
    }
    let summary_path = out_dir.join("baseline_summary.json");
    files::write(
        &summary_path,
        &serde_json::to_string_pretty(&json!({
            "omega0": omega0,
            "seed": seed,
            "steady_from_s": from_time,
            "runs": summary,
        }))
        .expect("summary serializes"),
    )?;
    written.push(summary_path);
    Ok(written)
}

fn compare(a: &Path, b: &Path, channels: Option<Vec<String>>, from_time: Option<f64>) -> Result<(), CliError> {
    let ta = files::read_table(a)?;
    let tb = files::read_table(b)?;
    let names = channels.unwrap_or_else(|| tb.injection_columns());
    if names.is_empty() {
        return Err(CliError::Input(format!("{} has no injection columns", b.display())));
    }
    let times_a = ta.times().map_err(|e| files::file_error(a.to_path_buf(), e))?;
    let times_b = tb.times().map_err(|e| files::file_error(b.to_path_buf(), e))?;
    let rows_a = ta.select(&names).map_err(|e| files::file_error(a.to_path_buf(), e))?;
    let rows_b = tb.select(&names).map_err(|e| files::file_error(b.to_path_buf(), e))?;
    let from = from_time.unwrap_or_else(|| default_from_time(&times_b));
    let d = metrics::compare_rows(&times_a, &rows_a, &times_b, &rows_b, from)?;
    print_json(&json!({
        "channels": names,
        "from_time": from,
        "max_abs": d.max_abs,
        "max_rel": d.max_rel,
        "steady_rel": d.steady_rel,
    }));
    Ok(())
}

/// `magnitude@degrees`; `∠` is accepted in place of `@`.
fn parse_phasor(raw: &str) -> Result<Phasor, CliError> {
    let bad = || CliError::Input(format!("phasor {raw:?} is not of the form magnitude@degrees"));
    let (mag, deg) = raw.split_once('@').or_else(|| raw.split_once('∠')).ok_or_else(bad)?;
    let mag: f64 = mag.trim().parse().map_err(|_| bad())?;
    let deg: f64 = deg.trim().parse().map_err(|_| bad())?;
    if !mag.is_finite() || !deg.is_finite() {
        return Err(bad());
    }
    Ok(Phasor::from_degrees(mag, deg))
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn phasor_json(id: &str, p: &Phasor) -> Value {
    let z = p.to_complex();
    json!({
        "node": id,
        "re": z.re,
        "im": z.im,
        "magnitude": p.magnitude(),
        "phase_deg": p.phase().to_degrees(),
    })
}

fn phasor_cmd(path: &Path, omega: f64, v1: &[String]) -> Result<(), CliError> {
    let net = files::load_network(path)?;
    let v1: Vec<Phasor> = v1.iter().map(|s| parse_phasor(s)).collect::<Result<_, _>>()?;
    if v1.len() != net.n_boundary() {
        return Err(CliError::Input(format!("{} phasors for {} boundary nodes", v1.len(), net.n_boundary())));
    }
    let y = phasor::admittance(&net, omega)?;
    let kron = phasor::kron_reduce(&y)?;
    let i1 = phasor::phasor_solve(&kron.yr, &v1)?;
    let v0 = phasor::recover_interior(&kron, &v1)?;
    let yr: Vec<Vec<Value>> = kron.yr.row_iter().map(|r| r.iter().map(|&z| complex_json(z)).collect()).collect();
    print_json(&json!({
        "omega": omega,
        "boundary": net.boundary_ids(),
        "Yr": yr,
        "i1": net.boundary_ids().iter().zip(&i1).map(|(id, p)| phasor_json(id, p)).collect::<Vec<_>>(),
        "v0": net.interior_ids().iter().zip(&v0).map(|(id, p)| phasor_json(id, p)).collect::<Vec<_>>(),
    }));
    Ok(())
}

fn paper_experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig {
        solver: SolverConfig::new(args.dt, args.t_end, args.record_stride)?,
        strategy: args.p_strategy.into(),
        seed: resolve_seed(args.seed, None)?,
        ..ExperimentConfig::default()
    };
    let run = benchmark::run_experiment(args.which.into(), &cfg)?;
    let net = kronred::validate(&benchmark::wye_network()).expect("benchmark network is valid");
    let labels = ChannelLabels::for_network(&net);
    let syn = baseline::heuristic_reduce(&net, benchmark::omega0(), false)?;
    let syn_labels = ChannelLabels::for_network(&syn.network);

    let dir = &args.out_dir;
    let mut written = vec![
        write_csv(&dir.join("dae.csv"), &run.dae, &labels)?,
        write_csv(&dir.join("reduced.csv"), &run.reduced, &labels)?,
    ];
    for (k, traj) in run.baselines.iter().enumerate() {
        written.push(write_csv(&dir.join(format!("baseline_{}.csv", k + 1)), traj, &syn_labels)?);
    }
    let summary_path = dir.join("summary.json");
    files::write(&summary_path, &serde_json::to_string_pretty(&run.summary).expect("summary serializes"))?;
    written.push(summary_path);
    print_json(&json!({ "written": written, "all_observations_hold": run.summary.all_hold() }));

    if !run.summary.all_hold() {
        let failed: Vec<&str> = run.summary.observations.iter().filter(|o| !o.holds).map(|o| o.name.as_str()).collect();
        return Err(CliError::Observation(failed.join("; ")));
    }
    Ok(())
}
