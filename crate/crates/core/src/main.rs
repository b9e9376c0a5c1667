use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pullback::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use pullback::Error;

/// Pullback attractor experiments.
#[derive(Parser)]
#[command(name = "pullback", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identity, composition and periodicity residuals of the cocycle.
    Axioms(RunArgs),
    /// Attractor sections, compared with oracles and Ω-limit unions.
    Attractor(RunArgs),
    /// Entry times into the absorbing family, and its decay profile.
    Absorbing(RunArgs),
    /// Tail mass of pullback states and domain-truncation sensitivity.
    Tails(RunArgs),
    /// Distance between attractor sections one period apart.
    Periodicity(RunArgs),
    /// Closed-form checks on the finite-dimensional testbeds.
    Oracle(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set system.lambda=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Use seeds 0..N instead of the configured list.
    #[arg(long)]
    seed_count: Option<u64>,
    /// Output directory for the report and columnar files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on concurrently running seeds.
    #[arg(long)]
    workers: Option<usize>,
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut overrides = vec![("kind".to_string(), format!("\"{}\"", kind.name()))];
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(vec![format!("--set {kv}: expected KEY=VALUE")]))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut cfg = ExperimentConfig::from_toml_with_overrides(&text, &overrides)?;
    if let Some(n) = args.seed_count {
        cfg.seeds = (0..n).collect();
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Axioms(a) => (ExperimentKind::Axioms, a),
        Command::Attractor(a) => (ExperimentKind::Attractor, a),
        Command::Absorbing(a) => (ExperimentKind::Absorbing, a),
        Command::Tails(a) => (ExperimentKind::Tails, a),
        Command::Periodicity(a) => (ExperimentKind::Periodicity, a),
        Command::Oracle(a) => (ExperimentKind::Oracle, a),
    };
    let report = match load(kind, args).and_then(|cfg| run_experiment(&cfg)) {
        Ok(r) => r,
        Err(Error::Config(problems)) => {
            eprintln!("configuration error:");
            for p in problems {
                eprintln!("  {p}");
            }
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for c in &report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {:<24} max {:.3e}  tol {:.3e}  ({} samples)",
            c.check, c.max_residual, c.tolerance, c.samples
        );
    }
    for f in &report.failures {
        eprintln!("failure: {f}");
    }
    println!("config {}  wall {:.1} s", &report.config_hash[..12], report.wall_time_s);
    ExitCode::from(report.exit_code() as u8)
}
