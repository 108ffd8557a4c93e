use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracefem::io::{parse_config, print_config, SimConfig};
use tracefem::scenarios::{self, force_demo_config};
use tracefem::{Error, Vec3};

#[derive(Parser)]
#[command(name = "tracefem", version, about = "Trace finite element solvers for phase separation and flow on a sphere")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the random initial condition
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Coupled Navier-Stokes-Cahn-Hilliard run from a configuration file
    Run,
    /// Laplace-Beltrami convergence table on the unit sphere
    LbConvergence {
        /// Background cells per axis, one entry per level
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32])]
        levels: Vec<usize>,
    },
    /// Cahn-Hilliard run without flow
    Ch,
    /// Steady Stokes solve and its approach by time stepping
    Stokes {
        #[arg(long, default_value_t = 10)]
        n_per_axis: usize,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 0.25)]
        dt: f64,
    },
    /// Reorientation of the low phase under the plane's electrostatic force
    ForceDemo {
        /// pat1, pat2 or pat3; ignored with --config
        #[arg(long, default_value = "pat3")]
        preset: String,
    },
    /// Print every configuration key with its default value
    PrintDefaults,
}

fn load(common: &Common, fallback: impl FnOnce() -> tracefem::Result<SimConfig>) -> tracefem::Result<SimConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
            parse_config(&text)?
        }
        None => fallback()?,
    };
    if let Some(s) = common.seed {
        cfg.ic.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.directory = o.clone();
    }
    Ok(cfg)
}

fn required(common: &Common) -> tracefem::Result<SimConfig> {
    load(common, || Err(Error::Config(vec!["--config: a configuration file is required".into()])))
}

fn write_text(dir: Option<&Path>, name: &str, text: &str) -> tracefem::Result<()> {
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
        std::fs::write(d.join(name), text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> tracefem::Result<()> {
    let common = cli.common;
    match cli.command {
        Command::Run => {
            let cfg = required(&common)?;
            let (_, summary, art) = scenarios::run_simulation(&cfg, Some(&cfg.output.directory))?;
            print!("{}", scenarios::summary_text(&summary));
            if let Some(csv) = art.csv {
                println!("diagnostics      {}", csv.display());
            }
        }
        Command::Ch => {
            let mut cfg = required(&common)?;
            cfg.flow = false;
            let (_, summary, _) = scenarios::run_simulation(&cfg, Some(&cfg.output.directory))?;
            print!("{}", scenarios::summary_text(&summary));
        }
        Command::LbConvergence { levels } => {
            if levels.len() < 2 || levels.iter().any(|&n| n < 2) {
                return Err(Error::Config(vec!["--levels: need at least two levels, each at least 2".into()]));
            }
            let table = scenarios::lb_table(&scenarios::lb_study(&levels, 1.6, Vec3::zeros(), true)?);
            print!("{table}");
            write_text(common.out.as_deref(), "lb_convergence.txt", &table)?;
        }
        Command::Stokes {
            n_per_axis,
            steps,
            dt,
        } => {
            if n_per_axis < 2 || !(dt > 0.0) {
                return Err(Error::Config(vec!["--n-per-axis must be at least 2 and --dt positive".into()]));
            }
            let r = scenarios::stokes_demo(n_per_axis, 1.5, steps, dt)?;
            let mut s = format!(
                "h {:.4}, velocity dofs {}, |u_steady| {:.6e}, rms(u.n) {:.3e}\n",
                r.h, r.velocity_dofs, r.steady_norm, r.steady_rms_normal
            );
            s += "t relative_distance_to_steady\n";
            for (t, d) in &r.history {
                s += &format!("{t:.4} {d:.6e}\n");
            }
            print!("{s}");
            write_text(common.out.as_deref(), "stokes.txt", &s)?;
        }
        Command::ForceDemo { preset } => {
            let cfg = load(&common, || force_demo_config(&preset))?;
            let out = common.out.as_deref();
            let r = scenarios::force_demo(&cfg, out)?;
            println!(
                "preset {}, a_D {}, partition fraction {}",
                r.preset.as_deref().unwrap_or("-"),
                r.a_d,
                r.partition_fraction
            );
            match r.reorientation_time {
                Some(t) => println!("reorientation time {t:.4}"),
                None => println!("no reorientation before t = {}", r.summary.t),
            }
        }
        Command::PrintDefaults => print!("{}", print_config(&SimConfig::default())),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
