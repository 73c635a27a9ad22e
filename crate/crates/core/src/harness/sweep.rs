//! Horizon × seed sweeps with resumable, deterministic persistence.
//!
//! Layout of a sweep directory:
//!
//! ```text
//! out/
//!   manifest.json        full config, schema/code version, completed runs
//!   regret.csv           merged traces, written once every run has finished
//!   parts/T{T}_s{i}.csv  one trace per finished run
//!   parts/T{T}_s{i}.json run metadata (theta_hat, Delta, wall time, ..)
//! ```
//!
//! Runs execute on a bounded worker pool; a single writer persists results as
//! they arrive. The merged CSV is assembled in `(T, seed)` order, so its bytes
//! do not depend on completion order.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, RunConfig};
use super::episode::{run_episode, RunTrace};
use crate::error::{invalid, PricingError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_NAME: &str = "regret.csv";
pub const MANIFEST_NAME: &str = "manifest.json";

/// One CSV row: a checkpoint of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub algorithm: Algorithm,
    pub noise: String,
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seed: u64,
    pub checkpoint_t: u64,
    pub cum_regret: f64,
}

impl TraceRow {
    pub fn from_trace(trace: &RunTrace) -> Vec<TraceRow> {
        trace
            .checkpoints
            .iter()
            .map(|c| TraceRow {
                algorithm: trace.algorithm,
                noise: trace.noise.clone(),
                d: trace.d,
                horizon: trace.horizon,
                seed: trace.seed,
                checkpoint_t: c.t,
                cum_regret: c.cum_regret,
            })
            .collect()
    }
}

/// What to sweep: the base config is run at every horizon with seed indices `0..seeds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub horizons: Vec<u64>,
    pub seeds: u64,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.seeds == 0 {
            return Err(invalid("sweep needs at least one horizon and one seed"));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("horizons must be strictly ascending"));
        }
        Ok(())
    }

    fn runs(&self) -> Vec<(u64, u64)> {
        self.horizons
            .iter()
            .flat_map(|&t| (0..self.seeds).map(move |s| (t, s)))
            .collect()
    }

    fn config_for(&self, horizon: u64, seed: u64) -> RunConfig {
        RunConfig {
            horizon,
            seed,
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub spec: SweepSpec,
    pub csv: String,
    pub csv_columns: Vec<String>,
    /// Finished `(T, seed)` pairs, sorted.
    pub completed: Vec<(u64, u64)>,
    pub complete: bool,
}

impl SweepManifest {
    fn fresh(spec: &SweepSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION").to_owned(),
            spec: spec.clone(),
            csv: CSV_NAME.to_owned(),
            csv_columns: ["algorithm", "noise", "d", "T", "seed", "checkpoint_t", "cum_regret"]
                .map(String::from)
                .to_vec(),
            completed: Vec::new(),
            complete: false,
        }
    }

    fn same_sweep(&self, other: &SweepManifest) -> bool {
        self.schema_version == other.schema_version
            && self.code_version == other.code_version
            && self.spec == other.spec
    }

    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST_NAME);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&fs::read_to_string(path)?)?))
    }

    fn store(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join(format!("{MANIFEST_NAME}.tmp"));
        fs::write(&tmp, serde_json::to_string_pretty(self)? + "\n")?;
        fs::rename(tmp, dir.join(MANIFEST_NAME))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub csv_path: PathBuf,
    /// Runs executed by this call.
    pub executed: usize,
    /// Runs found already finished.
    pub reused: usize,
}

fn part_stem(horizon: u64, seed: u64) -> String {
    format!("T{horizon}_s{seed}")
}

fn write_rows(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads every row of a trace CSV.
pub fn read_rows(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(PricingError::from)).collect()
}

/// Runs (or resumes) a sweep into `out_dir` with at most `workers` threads.
///
/// A directory holding a finished sweep with an identical manifest is left
/// untouched. A directory holding a different sweep is an error.
pub fn sweep(spec: &SweepSpec, out_dir: &Path, workers: usize) -> Result<SweepOutcome> {
    spec.validate()?;
    spec.base.validate()?;
    fs::create_dir_all(out_dir.join("parts"))?;
    let csv_path = out_dir.join(CSV_NAME);

    let mut manifest = SweepManifest::fresh(spec);
    if let Some(existing) = SweepManifest::load(out_dir)? {
        if !existing.same_sweep(&manifest) {
            return Err(invalid(format!(
                "{} holds a different sweep; choose a fresh output directory",
                out_dir.display()
            )));
        }
        if existing.complete && csv_path.exists() {
            return Ok(SweepOutcome {
                csv_path,
                executed: 0,
                reused: existing.completed.len(),
            });
        }
        manifest.completed = existing
            .completed
            .into_iter()
            .filter(|&(t, s)| out_dir.join("parts").join(part_stem(t, s) + ".csv").exists())
            .collect();
    }
    manifest.store(out_dir)?;

    let todo: Vec<(u64, u64)> = spec
        .runs()
        .into_iter()
        .filter(|run| !manifest.completed.contains(run))
        .collect();
    let reused = manifest.completed.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PricingError::Config(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<((u64, u64), Result<RunTrace>)>();
    let mut first_error = None;

    std::thread::scope(|scope| -> Result<()> {
        let jobs = &todo;
        scope.spawn(move || {
            pool.install(|| {
                jobs.par_iter().for_each_with(tx, |tx, &(t, s)| {
                    let _ = tx.send(((t, s), run_episode(&spec.config_for(t, s))));
                });
            });
        });
        for ((t, s), result) in rx {
            match result {
                Ok(trace) => {
                    let stem = part_stem(t, s);
                    let parts = out_dir.join("parts");
                    write_rows(&parts.join(format!("{stem}.csv")), &TraceRow::from_trace(&trace))?;
                    fs::write(
                        parts.join(format!("{stem}.json")),
                        serde_json::to_string_pretty(&trace.meta)? + "\n",
                    )?;
                    manifest.completed.push((t, s));
                    manifest.completed.sort_unstable();
                    manifest.store(out_dir)?;
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        Ok(())
    })?;

    if let Some(e) = first_error {
        return Err(e);
    }

    let mut rows = Vec::new();
    for (t, s) in spec.runs() {
        rows.extend(read_rows(&out_dir.join("parts").join(part_stem(t, s) + ".csv"))?);
    }
    write_rows(&csv_path, &rows)?;
    manifest.complete = true;
    manifest.store(out_dir)?;

    Ok(SweepOutcome {
        csv_path,
        executed: todo.len(),
        reused,
    })
}
