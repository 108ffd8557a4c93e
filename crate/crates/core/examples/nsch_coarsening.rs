//! Coupled Navier-Stokes-Cahn-Hilliard coarsening for one composition,
//! writing VTK snapshots and a diagnostics CSV.
//!
//! ```text
//! cargo run --release --example nsch_coarsening -- [mix-1-1-15|mix-1-2-25] [out_dir]
//! ```

use std::path::PathBuf;

use tracefem::io::{preset, SimConfig};
use tracefem::scenarios::{run_simulation, summary_text};

fn main() -> tracefem::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "mix-1-1-15".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/nsch".into()));
    let p = preset(&name).expect("unknown preset");

    let mut cfg = SimConfig::default();
    cfg.preset = Some(p.name.into());
    cfg.ic.a_d = p.a_d;
    cfg.ic.seed = 1;
    cfg.geometry.n_per_axis = 12;
    cfg.scheme.t_end = 6.0;
    cfg.scheme.dt = 0.1;
    cfg.output.vtk_every = 10;

    let (sim, summary, art) = run_simulation(&cfg, Some(&out))?;
    for r in sim.rows.iter().step_by(5) {
        println!(
            "t = {:6.2}  domains {}  perimeter {:.4}  rms(u·n) {:.2e}",
            r.t, r.domain_count, r.perimeter, r.rms_normal_velocity
        );
    }
    print!("{}", summary_text(&summary));
    println!("{} snapshots in {}", art.vtk.len(), out.display());
    Ok(())
}
