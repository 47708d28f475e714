//! Command-line front end: scenario simulation, pulse design survey,
//! phase-match report, and the two figure reproductions.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rosesim::cli::config::parse_config_str;
use rosesim::cli::runner::{
    design_pulse_table, phase_match_report, run_reproduce_fig4, run_reproduce_fig5, run_simulate,
    Fig4Variant,
};
use rosesim::cli::Scenario;
use rosesim::error::Result;

#[derive(Parser)]
#[command(
    name = "rosesim",
    about = "Photon-echo storage simulator for two-level atomic ensembles",
    version
)]
struct Cli {
    /// Seed for the Monte Carlo counting stage (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for CSV and metrics outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads for the ensemble sweep (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one full scenario: dynamics, echo, noise, counting.
    Simulate {
        /// JSON config; omit for the baseline scenario.
        config: Option<PathBuf>,
    },
    /// Survey chirped-pulse parameters at fixed peak drive.
    DesignPulse {
        /// JSON config supplying the drive amplitude and T2.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Report echo wavevectors and emission regimes for a geometry.
    PhaseMatch {
        /// JSON config; omit for the baseline scenario.
        config: Option<PathBuf>,
    },
    /// Reproduce the medium-response trace after strong pulses.
    ReproduceFig4 {
        /// Excitation variant: one_chs or two_chs.
        #[arg(long, default_value = "two_chs")]
        variant: String,
        /// JSON config; omit for the baseline scenario.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Reproduce the weak-signal storage run end to end.
    ReproduceFig5 {
        /// JSON config; omit for the baseline scenario.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_scenario(path: &Option<PathBuf>, seed: Option<u64>) -> Result<Scenario> {
    let mut scenario = match path {
        Some(p) => parse_config_str(&std::fs::read_to_string(p)?)?,
        None => Scenario::baseline(),
    };
    if let Some(s) = seed {
        scenario.simulation.seed = s;
    }
    Ok(scenario)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { config } => {
            let scenario = load_scenario(config, cli.seed)?;
            let out = run_simulate(&scenario, &cli.out_dir)?;
            println!(
                "simulate: echo {:.3}, background {:.3}, transmitted {:.3}, efficiency {:.4}",
                out.metrics["echo"].as_f64().unwrap_or(f64::NAN),
                out.metrics["background"].as_f64().unwrap_or(f64::NAN),
                out.metrics["transmitted"].as_f64().unwrap_or(f64::NAN),
                out.metrics["efficiency"].as_f64().unwrap_or(f64::NAN),
            );
            println!("wrote {}", out.metrics_json.display());
        }
        Command::DesignPulse { config } => {
            let scenario = load_scenario(config, cli.seed)?;
            let table =
                design_pulse_table(scenario.rephasing.omega0, scenario.medium.t2)?;
            print!("{table}");
        }
        Command::PhaseMatch { config } => {
            let scenario = load_scenario(config, cli.seed)?;
            let report = phase_match_report(&scenario)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::ReproduceFig4 { variant, config } => {
            let scenario = load_scenario(config, cli.seed)?;
            let variant: Fig4Variant = variant.parse()?;
            let out = run_reproduce_fig4(&scenario, variant, &cli.out_dir)?;
            println!(
                "fig4 {}: plateau {:.4} photons/bin, fitted T1 {:.1} us",
                variant.name(),
                out.metrics["plateau_photons_per_bin"].as_f64().unwrap_or(f64::NAN),
                out.metrics["fitted_t1_s"].as_f64().unwrap_or(f64::NAN) * 1e6,
            );
            println!("wrote {}", out.metrics_json.display());
        }
        Command::ReproduceFig5 { config } => {
            let scenario = load_scenario(config, cli.seed)?;
            let out = run_reproduce_fig5(&scenario, &cli.out_dir)?;
            println!(
                "fig5: signal_in {:.1}, transmitted {:.3}, echo {:.3}, background {:.3}, snr {}",
                out.metrics["signal_in"].as_f64().unwrap_or(f64::NAN),
                out.metrics["transmitted"].as_f64().unwrap_or(f64::NAN),
                out.metrics["echo"].as_f64().unwrap_or(f64::NAN),
                out.metrics["background"].as_f64().unwrap_or(f64::NAN),
                out.metrics["snr"],
            );
            println!("wrote {}", out.metrics_json.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error[dynamics]: could not size the thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.module());
            ExitCode::FAILURE
        }
    }
}
