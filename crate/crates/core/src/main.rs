use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flapsim::harness::{self, compare_variants, ConfigError, ConfigFile, RunOutput, Scenario};

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "flapsim",
    version,
    about = "Flapping-wing vehicle flight simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV record
    Run {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path (defaults to <scenario name>.csv)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario duration, s
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Compare damping, wing loading and lift-to-weight of two configs
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
    },
    /// Check a config and list every violation
    Validate { config: PathBuf },
    /// Run a scenario once per value of one config key
    Sweep {
        config: PathBuf,
        /// Dotted key, e.g. wing.flap_amplitude_deg
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV prefix; runs are written to <prefix>.<index>.csv
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        duration: Option<f64>,
    },
}

fn load(path: &Path, duration: Option<f64>) -> Result<Scenario, ConfigError> {
    let mut file = ConfigFile::load(path)?;
    if let Some(d) = duration {
        file.scenario.duration_s = d;
    }
    Scenario::from_file(&file)
}

fn config_failure(e: ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn write_outputs(out: &RunOutput, path: &Path) -> std::io::Result<()> {
    let write = |rec: &harness::RunRecord, p: &Path| -> std::io::Result<()> {
        let f = BufWriter::new(File::create(p)?);
        rec.write_csv(f).map_err(std::io::Error::other)
    };
    write(&out.record, path)?;
    if let Some(c) = &out.comparison {
        write(c, &path.with_extension("comparison.csv"))?;
    }
    Ok(())
}

fn exit_for(out: &RunOutput) -> ExitCode {
    if out.diverged() {
        ExitCode::from(EXIT_DIVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            duration,
        } => {
            let sc = match load(&config, duration) {
                Ok(s) => s,
                Err(e) => return config_failure(e),
            };
            let result = harness::run(&sc, seed);
            let path = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", sc.name)));
            if let Err(e) = write_outputs(&result, &path) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
            print!("csv = {}\n{}", path.display(), result.summary());
            exit_for(&result)
        }
        Command::Compare { config_a, config_b } => {
            let (a, b) = match (load(&config_a, None), load(&config_b, None)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return config_failure(e),
            };
            print!("{}", compare_variants(&a, &b).report(&a.name, &b.name));
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config, None) {
            Ok(sc) => {
                println!("ok: {} ({:?}, {} ticks)", sc.name, sc.mode, sc.ticks());
                ExitCode::SUCCESS
            }
            Err(e) => config_failure(e),
        },
        Command::Sweep {
            config,
            param,
            values,
            seed,
            out,
            duration,
        } => {
            let base = match ConfigFile::load(&config) {
                Ok(f) => f,
                Err(e) => return config_failure(e),
            };
            let mut scenarios = Vec::with_capacity(values.len());
            for v in &values {
                let file = base.with_param(&param, v).and_then(|mut f| {
                    if let Some(d) = duration {
                        f.scenario.duration_s = d;
                    }
                    Scenario::from_file(&f)
                });
                match file {
                    Ok(s) => scenarios.push(s),
                    Err(e) => return config_failure(e),
                }
            }
            let results: Vec<RunOutput> = std::thread::scope(|scope| {
                let handles: Vec<_> = scenarios
                    .iter()
                    .map(|sc| scope.spawn(move || harness::run(sc, seed)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("run panicked"))
                    .collect()
            });
            let prefix = out.unwrap_or_else(|| PathBuf::from(&base.scenario.name));
            let mut code = ExitCode::SUCCESS;
            for (i, (v, r)) in values.iter().zip(&results).enumerate() {
                let path = PathBuf::from(format!("{}.{i}.csv", prefix.display()));
                if let Err(e) = write_outputs(r, &path) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
                print!(
                    "[[run]]\n{param} = {v}\ncsv = {}\n{}",
                    path.display(),
                    r.summary()
                );
                if r.diverged() {
                    code = ExitCode::from(EXIT_DIVERGED);
                }
            }
            code
        }
    }
}
