use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lagvac::commands::{cmd_eigen, cmd_simulate, cmd_transform, cmd_verify};
use lagvac::config::{output_root, RunConfig};
use lagvac::error::{CliResult, EXIT_MONITOR};
use lagvac_core::GridSpec;

#[derive(Parser)]
#[command(
    name = "lagvac",
    version,
    about = "Radial vacuum free boundary solver for degenerate viscous gas",
    after_help = "Relative output paths are placed under $LAGVAC_OUTPUT_ROOT (default ./runs)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, monitor and write a run directory.
    Simulate {
        /// JSON run configuration.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// benchmark, shallow-water or zero.
        #[arg(long)]
        preset: Option<String>,
        /// Override a config field, e.g. `--set physical.beta=0.75`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (default: under the output root).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Sturm–Liouville eigenpairs.
    Eigen {
        /// Dimension index m = n − 1.
        #[arg(long)]
        m: usize,
        /// Number of modes.
        #[arg(long, short = 'n')]
        count: usize,
        #[arg(long, default_value_t = 64)]
        panels: usize,
        #[arg(long, default_value_t = 8)]
        nodes_per_panel: usize,
        #[arg(long, default_value_t = 4)]
        stencil_order: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recompute all monitors from a stored run.
    Verify { dir: PathBuf },
    /// Eulerian snapshot of a checkpoint or of a run's final state.
    Transform {
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Output CSV (default: eulerian.csv next to the input).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Simulate { config, preset, overrides, output, print_config } => {
            let (base, name) = match (&config, &preset) {
                (Some(path), _) => (RunConfig::load(path)?, "run".to_string()),
                (None, Some(p)) => (RunConfig::preset(p)?, p.clone()),
                (None, None) => (RunConfig::benchmark(), "benchmark".to_string()),
            };
            let config = base.with_overrides(&overrides)?;
            if print_config {
                println!("{}", config.to_json());
                return Ok(0);
            }
            let dir = config.resolve_output(output.as_deref(), &name);
            let out = cmd_simulate(&config, &dir)?;
            let s = &out.manifest.summary;
            println!("run directory: {}", out.dir.display());
            println!("steps {} to t = {}, mass {}", s.steps, s.final_time, s.mass_final);
            for (k, pass) in &s.monitors {
                println!("{} {k} (worst {:.3e})", if *pass { "pass" } else { "FAIL" }, s.worst[k]);
            }
            Ok(if out.pass() { 0 } else { EXIT_MONITOR })
        }
        Command::Eigen { m, count, panels, nodes_per_panel, stencil_order, output } => {
            let grid = GridSpec { m, panels, nodes_per_panel, stencil_order };
            let dir = output.unwrap_or_else(|| output_root().join(format!("eigen-m{m}-n{count}")));
            let out = cmd_eigen(m, count, grid, &dir)?;
            for (j, l) in out.lambdas.iter().enumerate() {
                println!("lambda_{} = {l:.12}", j + 1);
            }
            println!("orthonormality defect {:.3e}", out.orthonormality_defect);
            println!("boundary residual {:.3e}", out.boundary_residual);
            Ok(0)
        }
        Command::Verify { dir } => {
            let out = cmd_verify(&dir)?;
            for (k, pass) in &out.monitors {
                println!("{} {k}", if *pass { "pass" } else { "FAIL" });
            }
            println!("mass {} ({})", out.mass_final, if out.mass_matches { "reproduced" } else { "DIFFERS" });
            if out.identical() {
                println!("verification identical");
                Ok(0)
            } else {
                println!("verification differs: {}", out.mismatches.join(", "));
                Ok(EXIT_MONITOR)
            }
        }
        Command::Transform { input, samples, output } => {
            let out = output.unwrap_or_else(|| {
                let base =
                    if input.is_dir() { input.clone() } else { input.parent().map(PathBuf::from).unwrap_or_default() };
                base.join("eulerian.csv")
            });
            let snap = cmd_transform(&input, samples, &out)?;
            println!("t = {} R_t = {:.16e} -> {}", snap.t, snap.r_t, out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
