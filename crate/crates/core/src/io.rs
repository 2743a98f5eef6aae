//! File formats: network and excitation JSON, reduced-model JSON, trajectory CSV.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Network, ValidatedNetwork};
use crate::reduction::{PStrategy, ReducedModel};
use crate::simulation::{Excitation, Signal, StateKind, Trajectory};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{0}")]
    Schema(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub fn parse_network(text: &str) -> Result<Network, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn network_to_json(network: &Network) -> String {
    serde_json::to_string_pretty(network).expect("network serializes")
}

/// Per-node waveform as written in excitation files. Phases are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SignalSpec {
    Sinusoid {
        amplitude_v: f64,
        freq_hz: f64,
        #[serde(default)]
        phase_deg: f64,
    },
    Step {
        value_v: f64,
        #[serde(default)]
        t_step_s: f64,
    },
    Constant {
        value_v: f64,
    },
    Piecewise {
        /// `[t_s, value_v]` pairs.
        breakpoints: Vec<[f64; 2]>,
    },
}

impl SignalSpec {
    pub fn to_signal(&self) -> Signal {
        match *self {
            SignalSpec::Sinusoid { amplitude_v, freq_hz, phase_deg } => Signal::Sinusoid {
                amplitude: amplitude_v,
                freq: freq_hz,
                phase: phase_deg.to_radians(),
            },
            SignalSpec::Step { value_v, t_step_s } => Signal::Step { value: value_v, t_step: t_step_s },
            SignalSpec::Constant { value_v } => Signal::Constant { value: value_v },
            SignalSpec::Piecewise { ref breakpoints } => Signal::Piecewise {
                breakpoints: breakpoints.iter().map(|&[t, v]| (t, v)).collect(),
            },
        }
    }

    pub fn from_signal(signal: &Signal) -> Self {
        match signal {
            Signal::Sinusoid { amplitude, freq, phase } => SignalSpec::Sinusoid {
                amplitude_v: *amplitude,
                freq_hz: *freq,
                phase_deg: phase.to_degrees(),
            },
            Signal::Step { value, t_step } => SignalSpec::Step {
                value_v: *value,
                t_step_s: *t_step,
            },
            Signal::Constant { value } => SignalSpec::Constant { value_v: *value },
            Signal::Piecewise { breakpoints } => SignalSpec::Piecewise {
                breakpoints: breakpoints.iter().map(|&(t, v)| [t, v]).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationFile {
    pub signals: BTreeMap<String, SignalSpec>,
}

/// Resolves an excitation file against the boundary of `network`.
///
/// Boundary nodes without an entry are held at 0 V; entries for other nodes are an error.
pub fn excitation_from_json(text: &str, network: &ValidatedNetwork) -> Result<Excitation, IoError> {
    let file: ExcitationFile = serde_json::from_str(text)?;
    excitation_from_file(&file, network)
}

pub fn excitation_from_file(file: &ExcitationFile, network: &ValidatedNetwork) -> Result<Excitation, IoError> {
    let boundary = network.boundary_ids();
    if let Some(unknown) = file.signals.keys().find(|k| !boundary.contains(k)) {
        return Err(IoError::Schema(format!("excitation given for {unknown:?}, which is not a boundary node")));
    }
    let signals = boundary
        .iter()
        .map(|id| file.signals.get(id).map_or(Signal::Constant { value: 0.0 }, SignalSpec::to_signal))
        .collect();
    Excitation::new(signals).map_err(|e| IoError::Schema(e.to_string()))
}

pub fn excitation_to_file(x: &Excitation, network: &ValidatedNetwork) -> ExcitationFile {
    ExcitationFile {
        signals: network
            .boundary_ids()
            .iter()
            .cloned()
            .zip(x.signals().iter().map(SignalSpec::from_signal))
            .collect(),
    }
}

/// Reduced model as stored on disk; matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub strategy: PStrategy,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "Lhat")]
    pub lhat: Vec<Vec<f64>>,
    #[serde(rename = "Rhat")]
    pub rhat: Vec<Vec<f64>>,
    #[serde(rename = "Bhat")]
    pub bhat: Vec<Vec<f64>>,
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize, name: &str) -> Result<DMatrix<f64>, IoError> {
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(IoError::Schema(format!("{name}: row of length {} where {ncols} expected", bad.len())));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl From<&ReducedModel> for ModelFile {
    fn from(m: &ReducedModel) -> Self {
        ModelFile {
            strategy: m.strategy,
            p: matrix_to_rows(&m.p),
            lhat: matrix_to_rows(&m.lhat),
            rhat: matrix_to_rows(&m.rhat),
            bhat: matrix_to_rows(&m.bhat),
        }
    }
}

impl ModelFile {
    pub fn to_model(&self) -> Result<ReducedModel, IoError> {
        let order = self.p.first().map_or(0, Vec::len);
        if self.lhat.len() != order || self.rhat.len() != order {
            return Err(IoError::Schema(format!("Lhat and Rhat must be {order}x{order}")));
        }
        Ok(ReducedModel {
            strategy: self.strategy,
            p: rows_to_matrix(&self.p, order, "P")?,
            lhat: rows_to_matrix(&self.lhat, order, "Lhat")?,
            rhat: rows_to_matrix(&self.rhat, order, "Rhat")?,
            bhat: rows_to_matrix(&self.bhat, order, "Bhat")?,
        })
    }
}

pub fn model_to_json(model: &ReducedModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from(model)).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<ReducedModel, IoError> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.to_model()
}

/// Channel names for trajectory CSV columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelLabels {
    pub boundary: Vec<String>,
    pub edges: Vec<String>,
    pub interior: Vec<String>,
}

impl ChannelLabels {
    pub fn for_network(network: &ValidatedNetwork) -> Self {
        ChannelLabels {
            boundary: network.boundary_ids().to_vec(),
            edges: network.edge_ids(),
            interior: network.interior_ids().to_vec(),
        }
    }

    /// Column header for a trajectory of the given shape.
    pub fn header(&self, traj: &Trajectory) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend(self.boundary.iter().map(|id| format!("i_{id}")));
        let n_state = traj.state.first().map_or(0, |s| s.len());
        match traj.state_kind {
            StateKind::Pseudoflow => h.extend((0..n_state).map(|k| format!("fhat_{}", k + 1))),
            StateKind::Flow => h.extend(self.edges.iter().map(|id| format!("f_{id}"))),
            StateKind::None => {}
        }
        if !traj.v0.is_empty() {
            h.extend(self.interior.iter().map(|id| format!("v0_{id}")));
        }
        h
    }
}

/// Writes `t, i_*, fhat_* | f_*, v0_*` rows with shortest round-trip number formatting.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, labels: &ChannelLabels, out: W) -> Result<(), IoError> {
    let header = labels.header(traj);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for k in 0..traj.len() {
        record.clear();
        record.push(traj.times[k].to_string());
        record.extend(traj.i1[k].iter().map(f64::to_string));
        if let Some(s) = traj.state.get(k) {
            record.extend(s.iter().map(f64::to_string));
        }
        if let Some(v) = traj.v0.get(k) {
            record.extend(v.iter().map(f64::to_string));
        }
        if record.len() != header.len() {
            return Err(IoError::Schema(format!("{} values for {} columns", record.len(), header.len())));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_csv_string(traj: &Trajectory, labels: &ChannelLabels) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, labels, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Numeric CSV read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn times(&self) -> Result<Vec<f64>, IoError> {
        self.column("t").ok_or_else(|| IoError::Schema("missing t column".into()))
    }

    /// Row-major samples restricted to `names`.
    pub fn select(&self, names: &[String]) -> Result<Vec<Vec<f64>>, IoError> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| IoError::Schema(format!("missing column {n}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.rows.iter().map(|r| idx.iter().map(|&k| r[k]).collect()).collect())
    }

    /// Names of the boundary-injection columns.
    pub fn injection_columns(&self) -> Vec<String> {
        self.header.iter().filter(|h| h.starts_with("i_")).cloned().collect()
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<CsvTable, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, s)| {
                s.trim().parse::<f64>().map_err(|e| IoError::Parse {
                    line: line + 2,
                    column: col + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}
