use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pricing_lab::env::{InstanceSpec, NoisePreset};
use pricing_lab::harness::{
    read_rows, report, run_episode, sweep, Algorithm, RunConfig, SweepSpec, TraceRow,
};

#[derive(Parser)]
#[command(name = "pricing-lab", version, about = "Contextual pricing regret experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode.
    Run {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long, default_value_t = 8000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for trace.csv and meta.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (horizon, seed) pair and persist the traces.
    Sweep {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long, value_delimiter = ',', default_value = "500,1000,2000,4000,8000,16000,32000,64000")]
        horizons: Vec<u64>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Fit R_T ≈ C T^alpha per (algorithm, noise) from sweep CSVs.
    Fit {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
    /// Write summary.csv, fits.csv and figure_input.csv.
    Report {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BaseArgs {
    /// TOML run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<Algorithm>,
    /// Benchmark noise model (ignored when --config supplies an instance).
    #[arg(long)]
    noise: Option<NoisePreset>,
    #[arg(long)]
    master_seed: Option<u64>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl BaseArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)
                .with_context(|| format!("loading {}", path.display()))?,
            None => RunConfig::new(
                self.algo.unwrap_or(Algorithm::Cmrup),
                InstanceSpec::benchmark(self.noise.unwrap_or(NoisePreset::Uniform)),
                8000,
            ),
        };
        if let Some(algo) = self.algo {
            cfg.algorithm = algo;
        }
        if let (Some(noise), Some(_)) = (self.noise, &self.config) {
            cfg.instance.noise = noise.spec();
        }
        if let Some(seed) = self.master_seed {
            cfg.master_seed = seed;
        }
        Ok(cfg)
    }
}

fn load_rows(inputs: &[PathBuf]) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for path in inputs {
        rows.extend(read_rows(path).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(rows)
}

fn write_trace(dir: &Path, trace: &pricing_lab::harness::RunTrace) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("trace.csv"))?;
    for row in TraceRow::from_trace(trace) {
        w.serialize(row)?;
    }
    w.flush()?;
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&trace.meta)? + "\n")?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { base, horizon, seed, out } => {
            let mut cfg = base.resolve()?;
            cfg.horizon = horizon;
            cfg.seed = seed;
            let trace = run_episode(&cfg)?;
            println!(
                "{} noise={} T={} seed={} R_T={:.4} wall={:.2}s",
                trace.algorithm,
                trace.noise,
                trace.horizon,
                trace.seed,
                trace.final_regret(),
                trace.meta.wall_time_secs
            );
            if let Some(dir) = out {
                write_trace(&dir, &trace)?;
            }
        }
        Command::Sweep { base, horizons, seeds, out, workers } => {
            let spec = SweepSpec { base: base.resolve()?, horizons, seeds };
            let outcome = sweep(&spec, &out, workers)?;
            println!(
                "{}: executed {} runs, reused {}",
                outcome.csv_path.display(),
                outcome.executed,
                outcome.reused
            );
        }
        Command::Fit { input } => {
            let rep = report(&load_rows(&input)?)?;
            if rep.fits.is_empty() {
                bail!("no (algorithm, noise) group has two or more horizons");
            }
            for row in rep.fit_rows() {
                let se = row.stderr_alpha.map_or("n/a".to_owned(), |s| format!("{s:.3}"));
                println!(
                    "{:<8} {:<8} alpha={:.3} (se {se}) C={:.4} points={}",
                    row.algorithm, row.noise, row.alpha, row.c_coef, row.n_points
                );
            }
        }
        Command::Report { input, out } => {
            let rep = report(&load_rows(&input)?)?;
            rep.write(&out)?;
            for s in &rep.summary {
                println!(
                    "{:<8} {:<8} T={:<8} n={:<3} R_T={:.3} ± {:.3}",
                    s.algorithm, s.noise, s.horizon, s.n_seeds, s.mean_final_regret, s.stderr
                );
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
