//! Command-line harness: synthetic data generation, experiment runs,
//! report inspection, and the built-in self-test suite.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dcqe::harness::{run_experiment, run_selftest, ExperimentConfig, ExperimentReport};
use dcqe::tabular::{generate_synthetic, write_population_csv, write_schema_json, SyntheticConfig};
use dcqe::Error;

#[derive(Parser)]
#[command(name = "dcqe", version, about = "Distributed causal inference over reduced data shares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic population CSV plus its schema sidecar.
    Synth {
        /// Synthetic configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; the schema lands next to it as <out>.schema.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment and write reports to a directory.
    Run {
        /// Experiment configuration (JSON). Optional with --print-defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the replicate count.
        #[arg(long)]
        replicates: Option<usize>,
        /// Override the worker thread count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Allow reducer dimension splits beyond the canonical three.
        #[arg(long)]
        free_dims: bool,
        /// Override the alignment target scaling (unit | scaled).
        #[arg(long, value_enum)]
        anchor_target: Option<AnchorTargetArg>,
        /// Print the default configuration as JSON and exit.
        #[arg(long)]
        print_defaults: bool,
        /// Write the first party's fitted reducer parameters (JSON) to
        /// this path. Reducers never leave a party otherwise; this is a
        /// debugging aid and defeats the first privacy layer.
        #[arg(long, value_name = "PATH")]
        unsafe_export_reducer: Option<PathBuf>,
    },
    /// Render a previously written report directory.
    Report {
        #[arg(long, value_name = "DIR")]
        r#in: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
    },
    /// Run the built-in oracle and invariant checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnchorTargetArg {
    Unit,
    Scaled,
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) | Error::Json(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Synth { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg: SyntheticConfig = serde_json::from_str(&text)?;
            let population = generate_synthetic(&cfg)?;
            write_population_csv(&population, &out)?;
            let schema_path = out.with_extension("schema.json");
            write_schema_json(population.schema(), &schema_path)?;
            println!(
                "wrote {} samples to {} (schema: {})",
                population.n(),
                out.display(),
                schema_path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            config,
            out_dir,
            replicates,
            workers,
            seed,
            free_dims,
            anchor_target,
            print_defaults,
            unsafe_export_reducer,
        } => {
            if print_defaults {
                println!("{}", ExperimentConfig::example_defaults().to_json()?);
                return Ok(ExitCode::SUCCESS);
            }
            let config = config.ok_or_else(|| Error::Config("--config is required".into()))?;
            let text = std::fs::read_to_string(&config)?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(b) = replicates {
                cfg.replicates = b;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if free_dims {
                cfg.free_dims = true;
            }
            if let Some(target) = anchor_target {
                cfg.anchor_target = match target {
                    AnchorTargetArg::Unit => dcqe::collaboration::TargetScaling::Unit,
                    AnchorTargetArg::Scaled => dcqe::collaboration::TargetScaling::Scaled,
                };
            }
            let out_dir = out_dir
                .or_else(|| cfg.out_dir.clone())
                .ok_or_else(|| Error::Config("--out-dir is required (or set out_dir in the config)".into()))?;
            cfg.validate()?;

            if let Some(path) = unsafe_export_reducer {
                export_first_reducer(&cfg, &path)?;
                eprintln!("warning: reducer parameters exported to {} (privacy layer 1 bypassed)", path.display());
            }

            let report = run_experiment(&cfg)?;
            report.emit(&out_dir)?;
            print_summary(&report.summary);
            println!("report written to {}", out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { r#in, format } => {
            let summary = ExperimentReport::load_summary(&r#in)?;
            match format {
                ReportFormat::Csv => print_summary(&summary),
                ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let outcomes = run_selftest();
            let mut all_ok = true;
            for outcome in &outcomes {
                let status = if outcome.passed { "PASS" } else { "FAIL" };
                println!("SELFTEST {:<32} {status}  ({})", outcome.name, outcome.detail);
                all_ok &= outcome.passed;
            }
            if all_ok {
                Ok(ExitCode::SUCCESS)
            } else {
                Err(Error::Solver("self-test failures".into()))
            }
        }
    }
}

fn print_summary(summary: &dcqe::harness::SummaryTable) {
    println!("{:<10} {:<14} {:>14} {:>12} {:>6}", "arm", "metric", "value", "se", "n");
    for row in &summary.rows {
        let value = row.value.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        let se = row.se.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:<14} {:>14} {:>12} {:>6}",
            row.arm.to_string(),
            row.metric,
            value,
            se,
            row.n_replicates
        );
    }
}

/// Fit the configured reducer on party 1 of the raw partition and dump
/// its parameters. Exists so tests can prove reducers are inspectable
/// only through this explicit opt-in.
fn export_first_reducer(cfg: &ExperimentConfig, path: &std::path::Path) -> Result<(), Error> {
    use dcqe::harness::load_population;
    use dcqe::reduction::unsafe_export_reducer;
    use dcqe::tabular::partition;

    let population = load_population(cfg)?;
    let parties = partition(&population, &cfg.partition)?;
    let party = parties
        .first()
        .ok_or_else(|| Error::Degenerate("no parties".into()))?;
    let collab_dim = cfg.collab_dim.unwrap_or(population.m() - 1);
    let dims = cfg.reducer.resolve_dims(collab_dim, cfg.free_dims)?;
    let reducer = dcqe::harness::fit_reducer_for_export(party, &cfg.reducer, dims, cfg.seed)?;
    std::fs::write(path, unsafe_export_reducer(&reducer))?;
    Ok(())
}
