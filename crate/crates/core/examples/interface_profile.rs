//! Equilibrium of an equatorial band: cross-section against the 1D `tanh`
//! profile and the perimeter functional against `2π · 2π · √2/12`.
//!
//! ```text
//! cargo run --release --example interface_profile
//! ```

use tracefem::diagnostics::perimeter;
use tracefem::io::{IcPattern, SimConfig};
use tracefem::models::ic::tanh_profile;
use tracefem::scenarios::build_simulation;
use tracefem::Vec3;

fn main() -> tracefem::Result<()> {
    let mut cfg = SimConfig::default();
    cfg.flow = false;
    cfg.geometry.n_per_axis = 24;
    cfg.physics.eps = 0.1;
    cfg.ic.pattern = IcPattern::Band;
    cfg.scheme.t_end = 1.0;
    cfg.scheme.dt = 0.01;
    let mut sim = build_simulation(&cfg)?;
    sim.run()?;

    let c = &sim.state.c;
    let eps = cfg.physics.eps;
    let mesh = &c.space.mesh;
    println!("{:>8} {:>10} {:>10}", "z", "c_h", "tanh");
    for k in -6..=6 {
        let z = 0.05 * k as f64;
        let x = Vec3::new((1.0 - z * z).sqrt(), 0.0, z);
        let e = mesh
            .tets
            .iter()
            .position(|t| t.barycentric(&x).iter().all(|&b| b >= -1e-12))
            .expect("point in the band");
        println!("{z:>8.3} {:>10.5} {:>10.5}", c.eval_at(e, &x)?, tanh_profile(z.asin(), eps));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    println!(
        "perimeter {:.5}, sharp-interface value {:.5}",
        perimeter(c, eps),
        two_pi * two_pi * 2f64.sqrt() / 12.0
    );
    Ok(())
}
