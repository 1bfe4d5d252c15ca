use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use singspec::coeffs::coefficient_table_csv;
use singspec::experiment::{find_scenario, run_experiment, ExperimentConfig, SCENARIOS, SUMMARY_FILE};
use singspec::Error;

const EXIT_VERDICT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Spectral experiments for Birman–Schwinger operators on singular measures.
#[derive(Parser)]
#[command(name = "singspec", version)]
struct Cli {
    /// Output directory (overrides the config's `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "SINGSPEC_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config or a builtin scenario id.
    Run { config: String },
    /// List the builtin scenarios with what they test and the expected verdict.
    ListScenarios,
    /// Check a config without solving anything.
    Validate { config: String },
    /// Print the surface coefficients Z(d, codim) in both conventions as CSV.
    CoeffsTable {
        /// Largest ambient dimension d + codim.
        #[arg(long, default_value_t = 6)]
        max_n: usize,
    },
}

fn load(arg: &str) -> Result<ExperimentConfig, Error> {
    let path = Path::new(arg);
    if path.is_file() {
        return ExperimentConfig::load(path);
    }
    match find_scenario(arg) {
        Some(s) => Ok(s.config()),
        None => Err(Error::Config(format!("`{arg}` is neither a config file nor a builtin scenario"))),
    }
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn run(cli: &Cli, arg: &str) -> ExitCode {
    let mut config = match load(arg) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("singspec-out"));
    let report = match run_experiment(&config, Some(&out)) {
        Ok(r) => r,
        Err(failure) => {
            eprintln!("error: {failure}");
            let code = if failure.is_config() { EXIT_CONFIG } else { EXIT_NUMERICAL };
            return ExitCode::from(code);
        }
    };
    for v in &report.verdicts {
        println!(
            "{} {}: value {:.6} target {:.6} tolerance {} ({:?})",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.value,
            v.target,
            v.tolerance,
            v.comparison
        );
    }
    for note in report.spectral.notes.iter().chain(&report.prediction.notes) {
        println!("note: {note}");
    }
    println!("summary: {}", out.join(SUMMARY_FILE).display());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERDICT)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = singspec::configure_threads(threads) {
            return config_error(e);
        }
    }
    match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::ListScenarios => {
            println!("{:<20} {:<8} {:<68} description", "id", "expected", "reference");
            for s in SCENARIOS {
                println!("{:<20} {:<8} {:<68} {}", s.id, s.expected.as_str(), s.reference, s.description);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let checked = load(config).and_then(|c| {
                c.validate()?;
                let (m, _) = c.build()?;
                Ok((c, m.len()))
            });
            match checked {
                Ok((c, atoms)) => {
                    println!("ok: scenario `{}`, {atoms} atoms, route {:?}", c.scenario, c.operator.route);
                    ExitCode::SUCCESS
                }
                Err(e) => config_error(e),
            }
        }
        Command::CoeffsTable { max_n } => match coefficient_table_csv(*max_n) {
            Ok(csv) => {
                print!("{csv}");
                ExitCode::SUCCESS
            }
            Err(e) => config_error(e),
        },
    }
}
