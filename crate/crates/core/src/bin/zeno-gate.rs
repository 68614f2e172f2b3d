use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zeno_gate::scenario::{run_design, run_scenario, run_sweep, validate_config, RunReport, KEYS, SCENARIOS};
use zeno_gate::Error;

#[derive(Parser)]
#[command(name = "zeno-gate", version, about = "Zeno-blockade single-photon phase gate: design search and gate simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and write its CSV artifacts and manifest.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Flat key-value TOML file (or a previous manifest) layered over the scenario.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Search phase-matched fundamental triplets at one radius.
    Design {
        /// Disk radius in metres.
        #[arg(long)]
        radius: f64,
        /// Wavelength band for all three modes, "low,high" in nm.
        #[arg(long, value_parser = parse_band, default_value = "700,2000")]
        band: (f64, f64),
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Gate metrics over a list of Upsilon values (MHz, resolved convention).
    SweepUpsilon {
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Scenario supplying the base configuration.
        #[arg(long, default_value = "fig4b")]
        scenario: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check a configuration and print every default substitution.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "custom")]
        scenario: String,
    },
    /// List scenarios and configuration keys.
    List,
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<_> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts.as_slice() {
        [Ok(a), Ok(b)] if *a > 0.0 && b > a => Ok((*a, *b)),
        _ => Err(format!("expected \"low,high\" in nm, got `{s}`")),
    }
}

fn print_report(report: &RunReport) {
    for (k, v) in &report.metrics {
        println!("{k} = {v:.6e}");
    }
    for a in &report.artifacts {
        println!("wrote {} ({} bytes, sha256 {})", a.name, a.bytes, a.sha256);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate { scenario, out, config } => print_report(&run_scenario(&scenario, &out, config.as_deref())?),
        Command::Design { radius, band, out, config } => print_report(&run_design(radius, band, &out, config.as_deref())?),
        Command::SweepUpsilon { values, out, scenario, config } => {
            print_report(&run_sweep(&scenario, &values, &out, config.as_deref())?)
        }
        Command::Validate { config, scenario } => {
            let (resolved, report) = validate_config(&scenario, config.as_deref())?;
            println!("configuration valid: {} steps", resolved.gate.steps());
            print!("{report}");
        }
        Command::List => {
            println!("scenarios:");
            for (name, what) in SCENARIOS {
                println!("  {name:<8} {what}");
            }
            println!("configuration keys:");
            for k in KEYS {
                println!("  {:<24} {}", k.name, k.help);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
