//! Spinodal decomposition without flow from a Bernoulli initial field.
//!
//! ```text
//! cargo run --release --example cahn_hilliard -- [a_d] [seed]
//! ```

use tracefem::io::SimConfig;
use tracefem::scenarios::{run_simulation, summary_text};

fn main() -> tracefem::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = SimConfig::default();
    cfg.ic.a_d = args.next().map_or(Ok(0.29), |s| s.parse()).expect("a_d");
    cfg.ic.seed = args.next().map_or(Ok(1), |s| s.parse()).expect("seed");
    cfg.flow = false;
    cfg.geometry.n_per_axis = 16;
    cfg.scheme.t_end = 20.0;
    cfg.scheme.dt = 0.05;

    let (sim, summary, _) = run_simulation(&cfg, None)?;
    println!("{:>8} {:>10} {:>10} {:>8}", "t", "energy", "perimeter", "domains");
    for r in sim.rows.iter().step_by(10) {
        println!("{:>8.3} {:>10.5} {:>10.4} {:>8}", r.t, r.scheme_energy, r.perimeter, r.domain_count);
    }
    print!("{}", summary_text(&summary));
    Ok(())
}
