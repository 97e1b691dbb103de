use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use repcode::mps::TruncationPolicy;
use repcode_cli::checks::{all_pass, continuum_suite, statmech_suite, verify_suite, CheckResult};
use repcode_cli::config::{apply_overrides, parse_table, single_point, spec_from_table, EngineChoice};
use repcode_cli::experiments::{duality_experiment, DualitySpec};
use repcode_cli::output::{self, CsvSink, OutputFormat, CSV_FILE};
use repcode_cli::{run_sweep, CliError, ConfigError, Result};

#[derive(Parser)]
#[command(name = "repcode", version, about = "Monitored repetition-code chain: sweeps and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one parameter point and print its row as CSV.
    Simulate {
        /// Optional config file, then overrides as `--key=value`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "CONFIG] [--key=value")]
        args: Vec<String>,
    },
    /// Run a sweep, writing results.csv and summary.json to the output directory.
    Sweep {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run the oracle and identity checks.
    Verify {
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare the order susceptibility at λ with the disorder one at 1 − λ.
    Duality {
        #[arg(long = "L", default_value_t = 12)]
        l: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.35, 0.5, 0.65, 0.8])]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long, default_value_t = repcode::model::default_delta())]
        delta: f64,
        #[arg(long = "n_trajectories", default_value_t = 100)]
        n_trajectories: usize,
        #[arg(long = "master_seed", default_value_t = 0)]
        master_seed: u64,
        #[arg(long, default_value = "auto")]
        engine: String,
        #[arg(long = "chi_max", default_value_t = 128)]
        chi_max: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Partition-function cross-checks.
    Statmech,
    /// Continuum Hamiltonian checks.
    Continuum,
}

fn parse_overrides(args: &[String]) -> std::result::Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            return Err(ConfigError::Invalid(format!("expected --key=value, got `{a}`")));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| ConfigError::Invalid(format!("flag `--{flag}` needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        out.push((key, value));
    }
    Ok(out)
}

fn load(config: Option<&PathBuf>, overrides: &[String], single: bool) -> Result<(toml::Table, repcode_cli::SweepSpec)> {
    let text = match config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut table = parse_table(&text)?;
    apply_overrides(&mut table, &parse_overrides(overrides)?)?;
    if single {
        single_point(&mut table)?;
    }
    let spec = spec_from_table(&table)?;
    Ok((table, spec))
}

fn report(checks: &[CheckResult]) -> ExitCode {
    for c in checks {
        println!("{}", c.line());
    }
    if all_pass(checks) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn workers(n: Option<usize>) -> usize {
    n.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { args } => {
            let (config, overrides) = match args.split_first() {
                Some((first, rest)) if !first.starts_with("--") => (Some(PathBuf::from(first)), rest),
                _ => (None, &args[..]),
            };
            let (_, spec) = load(config.as_ref(), overrides, true)?;
            let rows = run_sweep(&spec, |_| Ok(()))?;
            output::write_csv(&rows, std::io::stdout())?;
            Ok(if rows.iter().all(|r| r.error.is_none()) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Sweep { config, overrides } => {
            let (table, spec) = load(Some(&config), &overrides, false)?;
            let mut sink = CsvSink::create(&spec.output_dir.join(CSV_FILE))?;
            let rows = run_sweep(&spec, |row| {
                eprintln!(
                    "{} = {} L = {}: {}",
                    spec.axis.name(),
                    row.value,
                    row.params.l,
                    row.error.as_deref().unwrap_or("done")
                );
                sink.push(row)
            })?;
            let echo = serde_json::to_value(&table)?;
            let path = output::write_results(&rows, OutputFormat::JsonSummary, &spec.output_dir, &echo)?;
            println!("{}", spec.output_dir.join(CSV_FILE).display());
            println!("{}", path.display());
            Ok(if rows.iter().all(|r| r.error.is_none()) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Verify { workers: w } => Ok(report(&verify_suite(workers(w)))),
        Command::Statmech => Ok(report(&statmech_suite())),
        Command::Continuum => Ok(report(&continuum_suite())),
        Command::Duality { l, lambdas, q, delta, n_trajectories, master_seed, engine, chi_max, workers: w } => {
            let engine = match engine.as_str() {
                "dense" => EngineChoice::Dense,
                "mps" => EngineChoice::Mps,
                "auto" => EngineChoice::Auto,
                _ => {
                    return Err(ConfigError::TypeError { key: "engine".into(), expected: "one of dense, mps, auto" }.into())
                }
            };
            let spec = DualitySpec {
                l,
                lambdas,
                q,
                delta,
                n_trajectories,
                master_seed,
                engine: engine.resolve(l),
                policy: TruncationPolicy { chi_max, ..Default::default() },
                workers: workers(w),
            };
            let rows = duality_experiment(&spec)?;
            println!("lambda,kappa_ea_mean,kappa_ea_stderr,d_ea_dual_mean,d_ea_dual_stderr,agree");
            for r in &rows {
                println!(
                    "{},{},{},{},{},{}",
                    output::format_f64(r.lambda),
                    output::format_f64(r.kappa_ea.mean),
                    output::format_f64(r.kappa_ea.stderr),
                    output::format_f64(r.d_ea_dual.mean),
                    output::format_f64(r.d_ea_dual.stderr),
                    r.agree
                );
            }
            Ok(if rows.iter().all(|r| r.agree) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
