//! Aggregation of sweep CSVs into summary tables, fits and the figure input.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use super::fit::{fit_power_law, FitPoint, PowerLawFit};
use super::sweep::TraceRow;
use crate::error::{invalid, Result};

/// Final-regret statistics for one `(algorithm, noise, T)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub noise: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub n_seeds: usize,
    pub mean_final_regret: f64,
    /// Sample standard deviation over seeds divided by `sqrt(n)`; `0` for one seed.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub algorithm: Algorithm,
    pub noise: String,
    pub alpha: f64,
    pub stderr_alpha: Option<f64>,
    pub c_coef: f64,
    pub n_points: usize,
}

/// One row of the figure-input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub algorithm: Algorithm,
    pub noise: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub mean_final_regret: f64,
    pub stderr: f64,
    pub alpha: f64,
    pub c_coef: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Vec<SummaryRow>,
    pub fits: Vec<(Algorithm, String, PowerLawFit)>,
}

impl Report {
    pub fn fit(&self, algorithm: Algorithm, noise: &str) -> Option<&PowerLawFit> {
        self.fits
            .iter()
            .find(|(a, n, _)| *a == algorithm && n == noise)
            .map(|(_, _, f)| f)
    }

    pub fn fit_rows(&self) -> Vec<FitRow> {
        self.fits
            .iter()
            .map(|(a, n, f)| FitRow {
                algorithm: *a,
                noise: n.clone(),
                alpha: f.alpha,
                stderr_alpha: f.stderr_alpha,
                c_coef: f.c_coef,
                n_points: f.points.len(),
            })
            .collect()
    }

    /// Summary rows of every group that has a fit, annotated with that fit.
    pub fn figure_rows(&self) -> Vec<FigureRow> {
        self.summary
            .iter()
            .filter_map(|s| {
                self.fit(s.algorithm, &s.noise).map(|f| FigureRow {
                    algorithm: s.algorithm,
                    noise: s.noise.clone(),
                    horizon: s.horizon,
                    mean_final_regret: s.mean_final_regret,
                    stderr: s.stderr,
                    alpha: f.alpha,
                    c_coef: f.c_coef,
                })
            })
            .collect()
    }

    /// Writes `summary.csv`, `fits.csv` and `figure_input.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join("summary.csv"), &self.summary)?;
        write_csv(&dir.join("fits.csv"), &self.fit_rows())?;
        write_csv(&dir.join("figure_input.csv"), &self.figure_rows())?;
        Ok(())
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates final-round rows (`checkpoint_t == T`) and fits every
/// `(algorithm, noise)` group with at least two horizons.
pub fn report(rows: &[TraceRow]) -> Result<Report> {
    let mut cells: BTreeMap<(Algorithm, String, u64), Vec<f64>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.checkpoint_t == r.horizon) {
        cells
            .entry((row.algorithm, row.noise.clone(), row.horizon))
            .or_default()
            .push(row.cum_regret);
    }
    if cells.is_empty() {
        return Err(invalid("no completed traces to report"));
    }
    let summary: Vec<SummaryRow> = cells
        .into_iter()
        .map(|((algorithm, noise, horizon), finals)| {
            let (mean, stderr) = mean_stderr(&finals);
            SummaryRow {
                algorithm,
                noise,
                horizon,
                n_seeds: finals.len(),
                mean_final_regret: mean,
                stderr,
            }
        })
        .collect();

    let mut groups: BTreeMap<(Algorithm, String), Vec<FitPoint>> = BTreeMap::new();
    for s in &summary {
        groups
            .entry((s.algorithm, s.noise.clone()))
            .or_default()
            .push(FitPoint {
                horizon: s.horizon,
                mean: s.mean_final_regret,
                stderr: s.stderr,
            });
    }
    let fits = groups
        .into_iter()
        .filter(|(_, pts)| pts.len() >= 2 && pts.iter().all(|p| p.mean > 0.0))
        .map(|((a, n), pts)| Ok((a, n, fit_power_law(&pts)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { summary, fits })
}
