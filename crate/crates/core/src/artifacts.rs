//! On-disk formats: genome JSON, run JSONL, summaries, and CSV exports
//! for plotting.
//!
//! Genome file schema (JSON):
//! ```json
//! { "version": 1, "n_inter": 2, "genes": [ ... ] }
//! ```
//! `genes` is the flat genotype, every value in [-1, 1], with length
//! `3 + 7N + N^2 + 2N + 2N + 3`. Decode order: sensory (tau, gain,
//! bias); sensor-to-interneuron weights row-major `[ray][inter]`;
//! recurrent weights row-major `[from][to]`; interneuron biases;
//! interneuron taus; interneuron-to-motor weights row-major
//! `[inter][left,right]`; motor (gain, bias, tau). Gains scale to
//! [1,20], taus to [1,2], biases to [-4,4], weights to [-5,5].

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctrnn::{genotype_len, Genotype};
use crate::embodiment::{Pose, TrialResult};
use crate::evolution::{GenRecord, RunRecord};

pub const GENOME_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeFile {
    pub version: u32,
    pub n_inter: usize,
    pub genes: Vec<f64>,
    /// Hash of the config that produced this genome, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

fn io_err(path: &Path, source: std::io::Error) -> ArtifactError {
    ArtifactError::Io { path: path.display().to_string(), source }
}

impl GenomeFile {
    pub fn new(genotype: &Genotype, n_inter: usize) -> Self {
        Self {
            version: GENOME_FORMAT_VERSION,
            n_inter,
            genes: genotype.genes.clone(),
            config_hash: None,
            seed: None,
        }
    }

    pub fn genotype(&self) -> Genotype {
        Genotype { genes: self.genes.clone() }
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        let text = serde_json::to_string_pretty(self).expect("genome serializes");
        std::fs::write(path, text).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let file: GenomeFile =
            serde_json::from_str(&text).map_err(|e| ArtifactError::Format {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        let expected = genotype_len(file.n_inter);
        if file.genes.len() != expected {
            return Err(ArtifactError::Format {
                path: path.display().to_string(),
                message: format!(
                    "genome has {} genes, n_inter {} needs {}",
                    file.genes.len(),
                    file.n_inter,
                    expected
                ),
            });
        }
        if let Some(g) = file.genes.iter().find(|g| !(-1.0..=1.0).contains(*g)) {
            return Err(ArtifactError::Format {
                path: path.display().to_string(),
                message: format!("gene {g} outside [-1, 1]"),
            });
        }
        Ok(file)
    }
}

/// Append-as-you-go writer for the per-generation run log: one JSON
/// object per line.
pub struct RunLogWriter {
    file: std::io::BufWriter<std::fs::File>,
    path: std::path::PathBuf,
}

impl RunLogWriter {
    pub fn create(path: &Path) -> Result<Self, ArtifactError> {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        Ok(Self { file: std::io::BufWriter::new(file), path: path.to_path_buf() })
    }

    pub fn write(&mut self, record: &GenRecord) -> Result<(), ArtifactError> {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(self.file, "{line}").map_err(|e| io_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), ArtifactError> {
        self.file.flush().map_err(|e| io_err(&self.path, e))
    }
}

pub fn read_run_log(path: &Path) -> Result<Vec<GenRecord>, ArtifactError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| ArtifactError::Format {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub config_hash: String,
    pub n_inter: usize,
    pub generations: usize,
    pub final_best: f64,
    pub final_best_cat: Option<f64>,
    pub final_best_pole: Option<f64>,
}

impl RunSummary {
    pub fn from_record(record: &RunRecord) -> Self {
        let last = record.generations.last();
        Self {
            seed: record.seed,
            config_hash: record.config_hash.clone(),
            n_inter: record.n_inter,
            generations: record.generations.len(),
            final_best: record.final_best(),
            final_best_cat: last.and_then(|g| g.best_cat),
            final_best_pole: last.and_then(|g| g.best_pole),
        }
    }
}

/// Trajectory CSV: `t,x_agent,v_agent,<pose fields>,I1..I7,s_sensor1..7,
/// s_inter1..N,s_motor_l,s_motor_r,accel`. Pose fields are
/// `obj_x,obj_y` for falling-object trials and `theta,omega` for pole
/// trials.
pub fn trajectory_csv(result: &TrialResult, n_inter: usize) -> String {
    let mut out = String::new();
    let pose_header = match result.trajectory.first().map(|s| s.pose) {
        Some(Pose::Pole { .. }) => "theta,omega",
        _ => "obj_x,obj_y",
    };
    write!(out, "t,x_agent,v_agent,{pose_header}").unwrap();
    for i in 1..=7 {
        write!(out, ",I{i}").unwrap();
    }
    for i in 1..=7 {
        write!(out, ",s_sensor{i}").unwrap();
    }
    for i in 1..=n_inter {
        write!(out, ",s_inter{i}").unwrap();
    }
    out.push_str(",s_motor_l,s_motor_r,accel\n");
    for s in &result.trajectory {
        let (p0, p1) = match s.pose {
            Pose::Falling { x, y, .. } => (x, y),
            Pose::Pole { theta, omega } => (theta, omega),
        };
        write!(out, "{},{},{},{},{}", s.t, s.x_agent, s.v_agent, p0, p1).unwrap();
        for v in &s.inputs {
            write!(out, ",{v}").unwrap();
        }
        for v in &s.s_sensor {
            write!(out, ",{v}").unwrap();
        }
        for v in &s.s_inter {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{},{},{}", s.s_motor[0], s.s_motor[1], s.accel).unwrap();
    }
    out
}

/// JSON sidecar accompanying a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSidecar {
    pub spec: crate::embodiment::TrialSpec,
    pub score: f64,
    pub termination: crate::embodiment::Termination,
    pub config_hash: String,
}

/// Attractor overlap table (one row per attractor of each set) for
/// external plotting.
pub fn attractor_csv(sets: &[&crate::dynamics::AttractorSet]) -> String {
    let n = sets
        .iter()
        .flat_map(|s| &s.attractors)
        .map(|a| match &a.kind {
            crate::dynamics::AttractorKind::FixedPoint { location } => location.len(),
            crate::dynamics::AttractorKind::LimitCycle { orbit, .. } => {
                orbit.first().map(|p| p.len()).unwrap_or(0)
            }
        })
        .max()
        .unwrap_or(0);
    let mut out = String::from("behavior,index,kind,basin_samples");
    for i in 1..=n {
        write!(out, ",s{i}").unwrap();
    }
    out.push('\n');
    for set in sets {
        for (idx, a) in set.attractors.iter().enumerate() {
            let (kind, coords): (&str, Vec<f64>) = match &a.kind {
                crate::dynamics::AttractorKind::FixedPoint { location } => {
                    ("fixed_point", location.clone())
                }
                crate::dynamics::AttractorKind::LimitCycle { orbit, .. } => {
                    ("limit_cycle", orbit.first().cloned().unwrap_or_default())
                }
            };
            write!(out, "{:?},{},{},{}", set.behavior, idx, kind, a.basin_samples).unwrap();
            for c in &coords {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Two aligned interneuron-output series around a transient match, for
/// external plotting.
pub fn aligned_transient_csv(
    series_a: &[Vec<f64>],
    series_b: &[Vec<f64>],
    m: &crate::dynamics::TransientMatch,
    dt: f64,
) -> String {
    let n = series_a.first().map(|v| v.len()).unwrap_or(0);
    let mut out = String::from("offset");
    for i in 1..=n {
        write!(out, ",a_out{i}").unwrap();
    }
    for i in 1..=n {
        write!(out, ",b_out{i}").unwrap();
    }
    out.push('\n');
    let steps = (m.duration / dt).round() as usize;
    let ia0 = (m.t_a / dt).round() as usize;
    let ib0 = (m.t_b / dt).round() as usize;
    for k in 0..steps {
        write!(out, "{}", k as f64 * dt).unwrap();
        for v in &series_a[ia0 + k] {
            write!(out, ",{v}").unwrap();
        }
        for v in &series_b[ib0 + k] {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
