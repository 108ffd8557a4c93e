//! Convergence of the stabilized trace FEM for `-Δ_Γ u + u = f` on the unit
//! sphere with `u = x₁x₂x₃`.
//!
//! ```text
//! cargo run --release --example laplace_beltrami
//! ```

use tracefem::scenarios::{lb_study, lb_table};
use tracefem::Vec3;

fn main() -> tracefem::Result<()> {
    let levels = lb_study(&[8, 16, 32], 1.6, Vec3::zeros(), true)?;
    print!("{}", lb_table(&levels));

    // Same study with the sphere shifted against the background grid.
    let shifted = lb_study(&[16], 1.6, Vec3::new(0.01, 0.013, 0.007), false)?;
    println!(
        "shifted center, n = 16: L2 {:.4e} (centered {:.4e})",
        shifted[0].l2, levels[1].l2
    );
    Ok(())
}
