use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cellfree::evaluation::aggregate_cdf;
use cellfree::harness::{
    cdf_path, read_rates, run_experiment, scenario_dump, write_cdf, write_outputs, ExperimentConfig,
};
use cellfree::verify::run_checks;
use cellfree::Error;

#[derive(Parser)]
#[command(name = "cellfree", version, about = "Team MMSE precoding under delayed CSI sharing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment: writes the rates CSV and a summary JSON next to it
    Run {
        config: PathBuf,
        /// Worker threads (default: all cores)
        #[arg(long, env = "CELLFREE_WORKERS")]
        workers: Option<usize>,
    },
    /// Per-scheme empirical CDFs of a rates CSV
    Cdf {
        rates: PathBuf,
        /// Directory for the CDF files (default: next to the input)
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Finite-oracle and invariant checks
    Verify,
    /// Dump the large-scale state of one drop as JSON
    Scenario {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        drop: usize,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => ExitCode::from(3),
    }
}

fn io_failure(what: &str, path: &std::path::Path, e: io::Error) -> Failure {
    Failure::Usage(format!("{what} {}: {e}", path.display()))
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, workers } => {
            let config = ExperimentConfig::load(&config)?;
            let workers = workers.unwrap_or_else(rayon::current_num_threads);
            let out = run_experiment(&config, workers)?;
            write_outputs(&config, &out)?;
            eprintln!(
                "wrote {} records to {} ({} of {} realizations skipped)",
                out.records.len(),
                config.output_path.display(),
                out.summary.skipped_realizations,
                out.summary.total_realizations
            );
            Ok(())
        }
        Command::Cdf { rates, out_dir } => {
            let file = File::open(&rates).map_err(|e| io_failure("cannot open", &rates, e))?;
            let records = read_rates(BufReader::new(file))?;
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir).map_err(|e| io_failure("cannot create", dir, e))?;
            }
            for (scheme, cdf) in aggregate_cdf(&records)? {
                let path = cdf_path(&rates, out_dir.as_deref(), scheme);
                let file = File::create(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
                write_cdf(BufWriter::new(file), &cdf)?;
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Verify => {
            let mut failed = false;
            for c in run_checks() {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed |= !c.passed;
            }
            if failed {
                Err(Failure::Verification)
            } else {
                Ok(())
            }
        }
        Command::Scenario { config, drop } => {
            let config = ExperimentConfig::load(&config)?;
            let dump = scenario_dump(&config, drop)?;
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &dump).map_err(|e| Failure::Runtime(e.to_string()))?;
            writeln!(out).map_err(|e| Failure::Runtime(e.to_string()))?;
            Ok(())
        }
    }
}
