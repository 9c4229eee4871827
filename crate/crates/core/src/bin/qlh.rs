//! Thin command-line front end over `quantum_lighthill::scenario`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quantum_lighthill::scenario::{
    audit_signs, bundled, bundled_names, convergence_report, emit_plot_data, exit_code_for,
    run_scenario, FitLabel, ScenarioConfig,
};
use quantum_lighthill::{Error, Result};

#[derive(Parser)]
#[command(
    name = "qlh",
    version,
    about = "Quantum Lighthill scenarios and checks"
)]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Source {
    /// Scenario file.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Bundled scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Overrides the seed of any randomized perturbation.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut config = match (&self.config, &self.scenario) {
            (Some(path), _) => ScenarioConfig::from_file(path)?,
            (None, Some(name)) => bundled(name)?,
            (None, None) => {
                return Err(Error::Config(vec![format!(
                    "pass --config PATH or --scenario NAME ({})",
                    bundled_names().join(", ")
                )]))
            }
        };
        if let (Some(seed), Some(run)) = (self.seed, config.run.as_mut()) {
            run.seed = seed;
        }
        Ok(config)
    }
}

fn parse_ladder(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| {
            Error::Config(vec![format!(
                "ladder: '{s}' is not a comma-separated list of sizes ({e})"
            )])
        })
}

#[derive(Subcommand)]
enum Verb {
    /// Evolve a scenario, evaluate its checks and write artifacts.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual and dispersion errors over a refinement ladder.
    Converge {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated grid sizes.
        #[arg(long, default_value = "64,128,256")]
        ladder: String,
    },
    /// Determine the momentum-balance signs from the default scenario suite.
    AuditSigns {
        #[arg(long, default_value = "out/sign_audit")]
        out: PathBuf,
        /// Comma-separated grid sizes.
        #[arg(long, default_value = "64,128,256")]
        ladder: String,
    },
    /// Turn the CSV reports of an artifact directory into gnuplot input.
    PlotData {
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[command(flatten)]
        source: Source,
    },
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn execute(verb: Verb) -> Result<u8> {
    match verb {
        Verb::Run { source, out } => {
            let config = source.load()?;
            let (result, dir) = run_scenario(&config, out.as_deref())?;
            print!("{}", result.summary.lines());
            println!("artifacts: {}", dir.display());
            Ok(result.summary.exit_code() as u8)
        }
        Verb::Converge {
            source,
            out,
            ladder,
        } => {
            let config = source.load()?;
            let report = convergence_report(&config, &parse_ladder(&ladder)?)?;
            let dir = out.unwrap_or_else(|| config.output_dir()).join("reports");
            write(&dir, "convergence.csv", &report.to_csv())?;
            write(&dir, "convergence_fits.csv", &report.fits_csv())?;
            for f in &report.fits {
                match f.label {
                    FitLabel::Floor => println!("{:<28} floor (round-off at every level)", f.check),
                    FitLabel::Fit if f.order_dt.is_nan() => println!(
                        "{:<28} order {:.2} in h (dt fixed by the potential)",
                        f.check, f.order_h
                    ),
                    FitLabel::Fit => println!(
                        "{:<28} order {:.2} in h, {:.2} in dt",
                        f.check, f.order_h, f.order_dt
                    ),
                }
            }
            println!("report: {}", dir.join("convergence.csv").display());
            Ok(0)
        }
        Verb::AuditSigns { out, ladder } => {
            let (audit, csv) = audit_signs(&parse_ladder(&ladder)?)?;
            let dir = out.join("reports");
            write(&dir, "sign_audit.csv", &csv)?;
            write(&out, "sign_audit.txt", &audit.note)?;
            print!("{}", audit.note);
            Ok(0)
        }
        Verb::PlotData { out } => {
            for p in emit_plot_data(&out)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Verb::Validate { source } => {
            let config = source.load()?;
            config.validate()?;
            println!("{}: valid", config.name);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.verb) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
