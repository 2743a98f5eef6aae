//! Run manifests: the network, excitation, initial flows and solver settings of one simulation.

use std::path::{Path, PathBuf};

use kronred::io;
use kronred::reduction::PStrategy;
use kronred::simulation::{Excitation, SolverConfig};
use kronred::ValidatedNetwork;
use nalgebra::DVector;
use serde::Deserialize;

use crate::error::CliError;
use crate::files;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub dt_s: f64,
    pub t_end_s: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub network: PathBuf,
    pub excitation: PathBuf,
    #[serde(default)]
    pub f0: Option<Vec<f64>>,
    pub solver: SolverSpec,
    #[serde(default = "default_strategy")]
    pub strategy: PStrategy,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_strategy() -> PStrategy {
    PStrategy::TreeElimination
}

/// A manifest with every referenced file loaded and checked.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub network: ValidatedNetwork,
    pub excitation: Excitation,
    pub f0: DVector<f64>,
    pub solver: SolverConfig,
    pub strategy: PStrategy,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
}

/// Relative paths inside the manifest are resolved against the manifest's directory.
pub fn load(path: &Path) -> Result<RunManifest, CliError> {
    let text = files::read(path)?;
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| files::parse_error(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

    let network = files::load_network(&resolve(&file.network))?;
    let exc_path = resolve(&file.excitation);
    let excitation = io::excitation_from_json(&files::read(&exc_path)?, &network).map_err(|source| CliError::File {
        path: exc_path.clone(),
        source,
    })?;
    let e = network.n_edges();
    let f0 = match file.f0 {
        Some(v) if v.len() != e => {
            return Err(CliError::Input(format!("f0 has {} entries, network has {e} edges", v.len())));
        }
        Some(v) => DVector::from_vec(v),
        None => DVector::zeros(e),
    };
    let solver = SolverConfig::new(file.solver.dt_s, file.solver.t_end_s, file.solver.record_stride)?;
    Ok(RunManifest {
        network,
        excitation,
        f0,
        solver,
        strategy: file.strategy,
        seed: file.seed,
        output_dir: resolve(file.output_dir.as_deref().unwrap_or(Path::new("."))),
    })
}
