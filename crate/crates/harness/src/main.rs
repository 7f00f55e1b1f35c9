use clap::Parser;
use floatbody_harness::commands::{run, Command, Format, RunOptions};
use floatbody_harness::config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Private estimation of convex floating bodies: experiment runner.
#[derive(Debug, Parser)]
#[command(name = "floatbody", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output` or `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Record wall-clock time in the report (breaks byte reproducibility).
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions { out, threads: cli.threads.max(1), format: cli.format, timing: cli.timing };
    match run(cli.command, &cfg, &opts) {
        Ok(rec) => {
            for c in &rec.checks {
                println!("{} {}: {:.6e} (limit {:.6e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
            }
            if let Some(l) = &rec.ledger {
                for call in &l.calls {
                    println!("ledger: {} batch {} rows {} epsilon {}", call.op, call.batch, call.rows, call.epsilon);
                }
                println!("ledger: total epsilon {} (naive sum {})", l.total_epsilon(), l.naive_sum());
            }
            for n in &rec.notes {
                println!("note: {n}");
            }
            if rec.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
