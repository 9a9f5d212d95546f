use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mismc_bench::complexity::run_complexity_study;
use mismc_bench::datagen::generate_dataset;
use mismc_bench::output::{num, Table};
use mismc_bench::rates::run_rate_study;
use mismc_bench::reference::{compute_reference, Reference};
use mismc_bench::setup::load_model;
use mismc_bench::{BenchError, ExperimentConfig, ModelKind};

#[derive(Parser)]
#[command(name = "mismc", version, about = "Multi-index SMC experiments: rates, complexity, references")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for CSV and SVG files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Increment statistics and rate fits along index lines.
    Rates {
        #[arg(long)]
        config: PathBuf,
    },
    /// MSE-versus-cost study over a tolerance ladder.
    Complexity {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reference value of the posterior mean.
    Reference {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a synthetic dataset (toy1d, elliptic2d, lgc or lgp).
    GenerateData {
        #[arg(long)]
        model: String,
    },
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write_reference(dir: &Path, stem: &str, r: &Reference) -> anyhow::Result<()> {
    let mut t = Table::new(&["method", "value", "alpha", "eps"]);
    t.push(vec![r.method.into(), num(r.value), r.alpha.to_string(), num(r.eps)]);
    t.write(dir, stem)?;
    Ok(())
}

/// Wall-clock record of one study, written next to its outputs.
fn write_timing(dir: &Path, model: ModelKind, study: &str, started: Instant) -> anyhow::Result<()> {
    let mut t = Table::new(&["model", "study", "wall_seconds", "threads"]);
    t.push(vec![
        model.id().into(),
        study.into(),
        num(started.elapsed().as_secs_f64()),
        rayon::current_num_threads().to_string(),
    ]);
    t.write(dir, &format!("{}_{study}_timing", model.id()))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Rates { config } => {
            let cfg = load(&config, cli.seed)?;
            let loaded = load_model(&cfg)?;
            let started = Instant::now();
            let study = run_rate_study(&cfg, &loaded, Some(out))?;
            write_timing(out, loaded.kind, "rates", started)?;
            println!("{:<10} {:<5} {:<14} {:>8} {:>8}", "line", "zeta", "statistic", "rate", "se");
            for f in &study.fits {
                let zeta = f.zeta.map(|z| z.id()).unwrap_or("-");
                match &f.fit {
                    Ok(l) => println!(
                        "{:<10} {:<5} {:<14} {:>8.3} {:>8.3}",
                        f.line,
                        zeta,
                        f.kind.id(),
                        f.rate().unwrap_or(f64::NAN),
                        l.slope_se
                    ),
                    Err(e) => println!("{:<10} {:<5} {:<14} not fitted: {e}", f.line, zeta, f.kind.id()),
                }
            }
        }
        Command::Complexity { config } => {
            let cfg = load(&config, cli.seed)?;
            let loaded = load_model(&cfg)?;
            let started = Instant::now();
            let reference = compute_reference(&cfg, &loaded)?;
            write_reference(out, &format!("{}_reference", loaded.kind.id()), &reference)?;
            println!("reference {} ({})", reference.value, reference.method);
            let result = run_complexity_study(&cfg, &loaded, reference.value, Some(out))?;
            write_timing(out, loaded.kind, "complexity", started)?;
            for s in &result.summaries {
                for p in &s.points {
                    println!(
                        "{:<12} eps {:>9.3e}  mse {:>10.3e}  cost {:>10.3e}  indices {:>3}  top {}",
                        s.estimator.label(),
                        p.eps,
                        p.mse,
                        p.mean_cost,
                        p.indices,
                        p.max_index
                    );
                }
                match &s.slope {
                    Some(f) => println!("{:<12} slope {:.3}", s.estimator.label(), f.slope),
                    None => println!("{:<12} slope not available", s.estimator.label()),
                }
            }
        }
        Command::Reference { config } => {
            let cfg = load(&config, cli.seed)?;
            let loaded = load_model(&cfg)?;
            let r = compute_reference(&cfg, &loaded)?;
            write_reference(out, &format!("{}_reference", loaded.kind.id()), &r)?;
            println!("{} ({} at {})", num(r.value), r.method, r.alpha);
        }
        Command::GenerateData { model } => {
            let kind = ModelKind::parse(&model)
                .ok_or_else(|| BenchError::config(format!("unknown model {model:?}; expected toy1d, elliptic2d, lgc or lgp")))?;
            let path = generate_dataset(kind, cli.seed.unwrap_or(0), out)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<BenchError>() {
        Some(BenchError::Numerical(e)) => {
            if let Some(alpha) = e.failing_index() {
                eprintln!("numerical failure at index {alpha}");
            }
            3
        }
        Some(e) => e.exit_code(),
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MISMC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
