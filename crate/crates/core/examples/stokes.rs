//! Steady Stokes flow on the unit sphere for a tangential load with its
//! rigid rotations removed, and the time-stepped flow approaching it.
//!
//! ```text
//! cargo run --release --example stokes
//! ```

use tracefem::scenarios::stokes_demo;

fn main() -> tracefem::Result<()> {
    let r = stokes_demo(10, 1.5, 20, 0.25)?;
    println!("h = {:.3}, {} velocity dofs", r.h, r.velocity_dofs);
    println!("steady |u| = {:.5e}, rms(u·n) = {:.3e}", r.steady_norm, r.steady_rms_normal);
    for (t, d) in r.history.iter().step_by(2) {
        println!("t = {t:5.2}  |u - u_steady| / |u_steady| = {d:.3e}");
    }
    println!("strain energy of an interpolated rotation: {:.3e}", r.rotation_strain_energy);
    Ok(())
}
