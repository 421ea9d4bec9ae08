use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use graphflow::config::{load_config, load_config_with_seed};
use graphflow::experiment::{self, output_root, ExperimentError, ExperimentReport};

/// p-Laplacian diffusion on graphs: simulation and verification runs.
#[derive(Parser)]
#[command(name = "graphflow", version)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Output root; defaults to $GRAPHFLOW_OUT, then the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and check one or more experiments.
    Simulate {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Brute-force Faber-Krahn table for the config's `fk` section.
    Fk {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-run the checks on a stored run directory.
    Verify {
        #[arg(long)]
        dir: PathBuf,
        /// Take the checks from this config instead of the stored one.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-fit exponents from a run directory's trajectory.csv.
    Fit {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Validate a config file.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn print_report(r: &ExperimentReport, dir: &Path) {
    println!(
        "{}: {} (n = {}, mass drift {:.2e}) -> {}",
        r.name,
        if r.pass { "PASS" } else { "FAIL" },
        r.certified_n,
        r.invariants.mass_drift,
        dir.display()
    );
    for c in &r.checks {
        let mut line = format!("  {:<16} {}", c.tag, if c.pass { "PASS" } else { "FAIL" });
        if let Some(s) = c.slope {
            line += &format!("  slope {s:.4}");
        }
        if let Some(t) = c.theoretical {
            line += &format!(" (theory {t:.4})");
        }
        if let Some(k) = c.fitted_constant {
            line += &format!("  constant {k:.4e}");
        }
        if let Some(e) = &c.error {
            line += &format!("  {e}");
        }
        println!("{line}");
    }
}

fn simulate_one(path: &Path, run: &RunArgs) -> i32 {
    let result = load_config_with_seed(path, run.seed).map_err(ExperimentError::from).and_then(|cfg| {
        let root = output_root(run.out.as_deref(), &cfg);
        experiment::run(&cfg, &root).map(|r| (r, root.join(&cfg.name)))
    });
    match result {
        Ok((r, dir)) => {
            print_report(&r, &dir);
            r.exit_code()
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, ExperimentError> {
    match cli.command {
        Command::Simulate { configs, run } => {
            let codes: Vec<i32> = configs.par_iter().map(|p| simulate_one(p, &run)).collect();
            Ok(codes.into_iter().max().unwrap_or(0))
        }
        Command::Fk { config, run } => {
            let cfg = load_config_with_seed(&config, run.seed)?;
            let root = output_root(run.out.as_deref(), &cfg);
            let r = experiment::run_fk(&cfg, &root)?;
            println!(
                "{}: {} subsets, {} measures -> {}",
                r.name,
                r.subsets,
                r.table.len(),
                root.join(&cfg.name).join("fk").display()
            );
            for (v, l) in &r.table {
                println!("  {v:>10} {l:.12}");
            }
            for c in &r.assumptions.checks {
                println!("  {:<16} {}", c.name, if c.pass { "PASS" } else { "FAIL" });
            }
            Ok(if r.pass { 0 } else { 1 })
        }
        Command::Verify { dir, config } => {
            let checks = config.map(|p| load_config(&p)).transpose()?.map(|c| c.checks);
            let r = experiment::verify(&dir, checks)?;
            print_report(&r, &dir);
            Ok(r.exit_code())
        }
        Command::Fit { dir } => {
            let fits = experiment::refit(&dir)?;
            for f in &fits {
                println!(
                    "{:<12} [{}, {}] slope {:.16e} stderr {:.3e} theory {:.6} {}",
                    f.quantity,
                    f.t_min,
                    f.t_max,
                    f.slope,
                    f.stderr,
                    f.theoretical,
                    if f.pass { "PASS" } else { "FAIL" }
                );
            }
            Ok(if fits.iter().all(|f| f.pass) { 0 } else { 1 })
        }
        Command::ValidateConfig { config } => {
            let cfg = load_config(&config)?;
            println!("{}: valid ({}), hash {}", config.display(), cfg.name, cfg.hash());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("--jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let code = match dispatch(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
