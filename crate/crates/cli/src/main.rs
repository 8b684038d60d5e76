use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pif_cli::{cmd_compare, cmd_greens, cmd_run, CliError, Overrides, ProtocolChoice, Tolerances};

#[derive(Parser)]
#[command(name = "pif", about = "Time reversal of lattice wave packets through a probe site")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file.
    scenario: PathBuf,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Forward pass, injection and reversal.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolChoice>,
        /// Run twice and require byte-identical output.
        #[arg(long)]
        seedless_check: bool,
    },
    /// Export the probe Green's function in time and energy.
    Greens {
        #[command(flatten)]
        common: Common,
    },
    /// Diff two reports; nonzero exit when they differ beyond tolerance.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        fidelity_tol: f64,
        #[arg(long, default_value_t = 1e-9)]
        time_tol: f64,
        #[arg(long, default_value_t = 1e-9)]
        series_tol: f64,
    },
}

fn overrides(c: &Common, protocol: Option<ProtocolChoice>) -> Overrides {
    Overrides { dt: c.dt, eta: c.eta, threshold: c.threshold, protocol, out_dir: c.out_dir.clone() }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { common, protocol, seedless_check } => {
            let out = cmd_run(&common.scenario, &overrides(&common, protocol), seedless_check)?;
            let w = out.report.forward.window;
            println!("window t1 = {:.6} t_R = {:.6} T_rec = {:.6}", w.t1, w.t_r, w.t_r - w.t1);
            for r in &out.report.runs {
                println!(
                    "{} fidelity {:.9} velocity {:.6} -> {:.6} max cavity error {:.3e}",
                    r.protocol, r.echo_fidelity, r.initial_velocity, r.echo_velocity, r.max_reversal_error
                );
            }
            if let Some(c) = &out.report.comparison {
                println!("fidelity gain PIF - TRM {:.6e}, probe shape correlation {:.6}", c.fidelity_gain, c.probe_shape_correlation);
            }
            if seedless_check {
                println!("repeat run identical");
            }
            println!("{} files in {}", out.files.len(), out.out_dir.display());
        }
        Command::Greens { common } => {
            let (meta, files) = cmd_greens(&common.scenario, &overrides(&common, None))?;
            println!("eta {:.6e} t_max {:.3} dt {}", meta.eta, meta.t_max, meta.dt);
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Compare { a, b, fidelity_tol, time_tol, series_tol } => {
            let s = cmd_compare(&a, &b, &Tolerances { fidelity: fidelity_tol, time: time_tol, series: series_tol })?;
            for l in s.lines {
                println!("{l}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pif: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
