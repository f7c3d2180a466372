use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use adaptive_gof::adaptive_test::{run_composite_invariant_test, run_simple_test};
use adaptive_gof::calibration::{calibrate, Budgets, CalibrationTable, NullStatistic, StatisticKind, DEFAULT_U_GRID_SIZE};
use adaptive_gof::estimators::{ModelCollection, ModelIndex, ScaleSearchPolicy};
use adaptive_gof::harness::{calibrate_for, estimate_power, load_calibration, ExperimentConfig};
use adaptive_gof::null_models::NullDensity;
use adaptive_gof::oracles::run_selfcheck;
use adaptive_gof::tables::{reproduce_table, TableId};
use adaptive_gof::{GofError, Result};

#[derive(Parser)]
#[command(name = "adaptive-gof", version, about = "Adaptive goodness-of-fit tests")]
struct Cli {
    /// Master seed (overrides a config file's seed when given).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Simple,
    Composite,
}

#[derive(Subcommand)]
enum Command {
    /// Build a calibration table (or, with --config, the calibration for an experiment).
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "uniform")]
        null: String,
        #[arg(long)]
        n: Option<usize>,
        /// Model list, e.g. `pc:2-6,fourier:1-6`.
        #[arg(long, default_value = "fourier:1-6")]
        models: String,
        #[arg(long, value_enum, default_value_t = Kind::Simple)]
        kind: Kind,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 20_000)]
        b1: usize,
        #[arg(long, default_value_t = 20_000)]
        b2: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a calibrated test on a data file (one value per line).
    Test {
        data: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        /// Apply this null's cdf to the data before testing uniformity.
        #[arg(long)]
        transform: Option<String>,
    },
    /// Estimate power for an experiment config; writes CSV.
    Power {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        calib: Option<PathBuf>,
        /// Calibrate on the fly instead of loading --calib.
        #[arg(long)]
        calibrate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a reference table as CSV.
    Table {
        id: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare every fast statistic with its literal oracle.
    Selfcheck {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
}

fn parse_models(spec: &str) -> Result<ModelCollection> {
    let mut models = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || GofError::InvalidInput(format!("bad model spec `{part}`"));
        let (family, range) = part.split_once(':').ok_or_else(bad)?;
        let (lo, hi) = match range.split_once('-') {
            Some((a, b)) => (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?),
            None => {
                let d: u32 = range.parse().map_err(|_| bad())?;
                (d, d)
            }
        };
        for d in lo..=hi {
            models.push(match family {
                "pc" | "piecewise" => ModelIndex::piecewise(d),
                "fourier" | "tr" => ModelIndex::fourier(d),
                _ => return Err(bad()),
            });
        }
    }
    ModelCollection::new(models)
}

fn read_sample(path: &PathBuf) -> Result<Vec<f64>> {
    std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|_| GofError::InvalidInput(format!("not a number: `{l}`"))))
        .collect()
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
}

/// Returns the process exit code on success.
fn run(cli: Cli) -> Result<u8> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .map_err(|e| GofError::InvalidInput(e.to_string()))?;
    }
    match cli.command {
        Command::Calibrate { config: Some(path), out, .. } => {
            let mut config = read_config(&path)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            calibrate_for(&config)?.save(&out)?;
        }
        Command::Calibrate { config: None, null, n, models, kind, alpha, b1, b2, out } => {
            let null: NullDensity = null.parse()?;
            let n = n.ok_or_else(|| GofError::InvalidInput("--n is required without --config".into()))?;
            let models = parse_models(&models)?;
            let stat = match kind {
                Kind::Simple => NullStatistic::simple(null, models),
                Kind::Composite => NullStatistic::composite_scale(null, models, ScaleSearchPolicy::default()),
            };
            calibrate(&stat, n, alpha, Budgets { b1, b2 }, DEFAULT_U_GRID_SIZE, cli.seed.unwrap_or(0))?.save(&out)?;
        }
        Command::Test { data, calib, transform } => {
            let table = CalibrationTable::load(&calib)?;
            let mut x = read_sample(&data)?;
            if let Some(t) = transform {
                x = t.parse::<NullDensity>()?.transform_to_uniform(&x);
            }
            let result = match table.statistic_kind {
                StatisticKind::Simple => run_simple_test(&x, &table.null, &table)?,
                StatisticKind::CompositeInvariant => {
                    run_composite_invariant_test(&x, &table.null, &table.scale_policy.unwrap_or_default(), &table)?
                }
            };
            println!("{}", serde_json::to_string_pretty(&result)?);
            return Ok(u8::from(result.reject));
        }
        Command::Power { config, calib, calibrate, out } => {
            let mut config = read_config(&config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let test = if calibrate { calibrate_for(&config)? } else { load_calibration(&config, calib.as_deref())? };
            emit(out.as_ref(), &estimate_power(&config, &test)?.to_csv())?;
        }
        Command::Table { id, scale, out } => {
            let id: TableId = id.parse()?;
            emit(out.as_ref(), &reproduce_table(id, cli.seed.unwrap_or(0), scale)?)?;
        }
        Command::Selfcheck { cases } => {
            let mut ok = true;
            for c in run_selfcheck(cases, cli.seed.unwrap_or(0))? {
                ok &= c.passed();
                println!(
                    "{} {} ({} cases, worst {:.3e}, tolerance {:.0e})",
                    if c.passed() { "PASS" } else { "FAIL" },
                    c.name,
                    c.cases,
                    c.worst,
                    c.tolerance
                );
            }
            return Ok(if ok { 0 } else { 1 });
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
