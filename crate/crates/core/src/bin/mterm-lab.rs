use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mterm_lab::harness::config::{run, run_trace, Experiment, ExperimentConfig};
use mterm_lab::harness::csv::plot_triples;
use mterm_lab::harness::verify::{status_line, verify_all, write_outcome};
use mterm_lab::Error;

#[derive(Parser)]
#[command(name = "mterm-lab", version, about = "Greedy m-term approximation and entropy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSV artifacts.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every verification criterion.
    VerifyAll {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
    },
    /// Run a single WRGA trace config and print its steps as JSON lines.
    Trace { config: PathBuf },
    /// Reshape a CSV into long `x,y,series` triples on stdout.
    PlotData { csv: PathBuf },
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_json(&read(&config)?)?;
            let outcomes = run(&cfg)?;
            let dir = out.or_else(|| cfg.out.clone());
            let mut ok = true;
            for o in &outcomes {
                if let Some(dir) = &dir {
                    write_outcome(dir, o)?;
                }
                writeln!(stdout, "{}", status_line(o))?;
                ok &= o.passed;
            }
            Ok(ok)
        }
        Command::VerifyAll { seed, out } => {
            let report = verify_all(seed, Some(&out))?;
            for line in report.lines() {
                writeln!(stdout, "{line}")?;
            }
            writeln!(stdout, "overall: {}", if report.passed() { "PASS" } else { "FAIL" })?;
            Ok(report.passed())
        }
        Command::Trace { config } => {
            let cfg = ExperimentConfig::from_json(&read(&config)?)?;
            let Experiment::Trace(params) = &cfg.experiment else {
                return Err(Error::InvalidArgument("trace needs an experiment of kind \"trace\"".into()));
            };
            write!(stdout, "{}", run_trace(params, cfg.seed)?.to_jsonl()?)?;
            Ok(true)
        }
        Command::PlotData { csv } => {
            write!(stdout, "{}", plot_triples(&read(&csv)?)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
