use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sharpmin::harness::{self, ExperimentConfig, HarnessError, RunOptions};
use sharpmin::problems::SampleCheck;
use sharpmin::trace::Trace;

#[derive(Parser)]
#[command(
    name = "sharpmin",
    version,
    about = "Run and certify sharp-minimum solver experiments"
)]
struct Cli {
    /// Output directory; each experiment writes into a subdirectory named
    /// after it.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Use the large dimension for the shifted-ball problem.
    #[arg(long, global = true)]
    large_n: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments (in parallel) and write trace.csv, report.md and
    /// report.json for each.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run every applicable certificate for an experiment.
    Certify { config: PathBuf },
    /// Print the bound table of a trace at the given iterations.
    Table {
        trace: PathBuf,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<usize>>,
    },
}

fn load(path: &Path) -> Result<(String, ExperimentConfig)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    let name = config.name.clone().unwrap_or(stem);
    Ok((name, config))
}

/// Runs one experiment; `Ok(passed)` on completion.
fn run_one(path: &Path, out: &Path, options: RunOptions) -> Result<bool> {
    let (name, config) = load(path)?;
    let dir = out.join(&name);
    match harness::run(&config, options) {
        Ok(output) => {
            harness::write_outputs(&dir, &output)?;
            let r = &output.report;
            println!(
                "{name}: {} after {} iterations, f = {:e}, certificates {} -> {}",
                r.exit,
                r.iterations,
                r.final_value,
                if r.passed { "pass" } else { "FAIL" },
                dir.display()
            );
            for c in r.certificates.iter().filter(|c| !c.passed) {
                println!("  FAIL {}", c.name);
            }
            Ok(r.passed)
        }
        Err(HarnessError::Solver {
            message,
            trace: Some(trace),
        }) => {
            harness::write_atomic(&dir, "trace.csv", trace.to_csv_string().as_bytes())?;
            anyhow::bail!("{name}: solver failed: {message} (partial trace in {})", dir.display())
        }
        Err(e) => Err(e).with_context(|| name.clone()),
    }
}

fn print_checks(checks: &[SampleCheck]) -> bool {
    for c in checks {
        println!(
            "{} {} (samples {}, worst slack {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.samples,
            c.worst_slack
        );
    }
    checks.iter().all(|c| c.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let options = RunOptions { large_n: cli.large_n };
    let result = match &cli.command {
        Command::Run { configs } => {
            let results: Vec<Result<bool>> = std::thread::scope(|s| {
                let handles: Vec<_> = configs
                    .iter()
                    .map(|path| s.spawn(|| run_one(path, &cli.out, options)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join()
                            .unwrap_or_else(|_| Err(anyhow::anyhow!("experiment thread panicked")))
                    })
                    .collect()
            });
            let mut passed = true;
            let mut error = None;
            for r in results {
                match r {
                    Ok(p) => passed &= p,
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        error = Some(e);
                    }
                }
            }
            match error {
                Some(e) => Err(e),
                None => Ok(passed),
            }
        }
        Command::Certify { config } => load(config).and_then(|(name, config)| {
            let checks = harness::run_certificates(&config, options).with_context(|| name.clone())?;
            let json = serde_json::to_string_pretty(&checks).expect("checks serialize");
            harness::write_atomic(&cli.out.join(&name), "certificates.json", json.as_bytes())?;
            Ok(print_checks(&checks))
        }),
        Command::Table { trace, checkpoints } => (|| {
            let file = std::fs::File::open(trace).with_context(|| format!("opening {}", trace.display()))?;
            let trace = Trace::read_csv(file).context("reading trace")?;
            let checkpoints = match checkpoints {
                Some(c) => c.clone(),
                None => harness::default_checkpoints(&trace),
            };
            print!("{}", harness::emit_table(&trace, &checkpoints)?);
            Ok(true)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            if !matches!(cli.command, Command::Run { .. }) {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
