//! Reorientation of the L_d cap of a charged vesicle towards an oppositely
//! charged plane, for the three PAT compositions.
//!
//! ```text
//! cargo run --release --example force_demo
//! ```

use tracefem::physics::{electric_field, grahame_sigma};
use tracefem::scenarios::{force_demo, force_demo_config};

fn main() -> tracefem::Result<()> {
    let cfg = force_demo_config("pat3")?;
    let p = &cfg.electrostatics.params;
    let s_guv = grahame_sigma(p.zeta_guv, p)?;
    let s_suv = grahame_sigma(p.zeta_suv, p)?;
    println!("sigma_GUV {s_guv:.5e} C/m², sigma_SUV {s_suv:.5e} C/m², E {:.5e} V/m", electric_field(s_guv, p));

    for name in ["pat3", "pat2", "pat1"] {
        let r = force_demo(&force_demo_config(name)?, None)?;
        let t = r.reorientation_time.map_or("none".to_string(), |t| format!("{t:.3}"));
        println!(
            "{name}: a_D {:.4}, L_d charge share {:.4}, reorientation time {t} ({} steps)",
            r.a_d, r.partition_fraction, r.summary.steps
        );
    }
    Ok(())
}
