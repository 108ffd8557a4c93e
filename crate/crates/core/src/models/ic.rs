//! Initial phase fields.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fe_space::{FEFunction, FESpace};
use crate::Vec3;

/// Width `2√2 ε` of the equilibrium `tanh` profile of `f₀`.
pub fn profile_width(eps: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * eps
}

/// `½ (1 + tanh(s / (2√2 ε)))`.
pub fn tanh_profile(s: f64, eps: f64) -> f64 {
    0.5 * (1.0 + (s / profile_width(eps)).tanh())
}

/// One Bernoulli(`a_d`) draw per degree of freedom.
pub fn bernoulli(space: &Arc<FESpace>, a_d: f64, seed: u64) -> Result<FEFunction> {
    if !(0.0..=1.0).contains(&a_d) {
        return Err(Error::Config(vec![format!("ic.a_d: must lie in [0, 1], got {a_d}")]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..space.n_dofs())
        .map(|_| if rng.random_bool(a_d) { 1.0 } else { 0.0 })
        .collect();
    Ok(FEFunction::new(space.clone(), coeffs))
}

/// Diffuse interface along the circle of latitude `latitude` (radians)
/// around `center`, with `c ≈ 1` to the north. `eps` sets the width.
pub fn band(space: &Arc<FESpace>, center: Vec3, radius: f64, latitude: f64, eps: f64) -> FEFunction {
    space.interpolate(|x| {
        let y = (x - center) / radius;
        let lat = (y.z / y.norm()).clamp(-1.0, 1.0).asin();
        tanh_profile(radius * (lat - latitude), eps)
    })
}

/// A cap `c ≈ 0` of area fraction `1 - a_d` around `axis`, with a
/// `tanh` edge of width set by `eps`.
pub fn caps(space: &Arc<FESpace>, center: Vec3, radius: f64, a_d: f64, axis: Vec3, eps: f64) -> Result<FEFunction> {
    if !(0.0..=1.0).contains(&a_d) {
        return Err(Error::Config(vec![format!("ic.a_d: must lie in [0, 1], got {a_d}")]));
    }
    let d = axis
        .try_normalize(1e-14)
        .ok_or_else(|| Error::Config(vec!["ic.axis: must be nonzero".into()]))?;
    let theta0 = (2.0 * a_d - 1.0).clamp(-1.0, 1.0).acos();
    Ok(space.interpolate(|x| {
        let y = (x - center).normalize();
        let theta = y.dot(&d).clamp(-1.0, 1.0).acos();
        tanh_profile(radius * (theta - theta0), eps)
    }))
}

/// Axis at `tilt` radians from `+z` in the `xz` plane.
pub fn tilted_axis(tilt: f64) -> Vec3 {
    Vec3::new(tilt.sin(), 0.0, tilt.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::mass;
    use crate::geometry::{ActiveMesh, BackgroundMesh, BoundingBox, LevelSetSurface};

    fn p1() -> Arc<FESpace> {
        let bg = BackgroundMesh::build(BoundingBox::cube(1.5), 12).unwrap();
        let mesh = Arc::new(ActiveMesh::build(bg, LevelSetSurface::unit_sphere()).unwrap());
        Arc::new(FESpace::scalar(mesh, 1).unwrap())
    }

    #[test]
    fn bernoulli_is_seeded_and_binary() {
        let sp = p1();
        let a = bernoulli(&sp, 0.29, 7).unwrap();
        let b = bernoulli(&sp, 0.29, 7).unwrap();
        let c = bernoulli(&sp, 0.29, 8).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_ne!(a.coefficients, c.coefficients);
        assert!(a.coefficients.iter().all(|&v| v == 0.0 || v == 1.0));
        let n = sp.n_dofs() as f64;
        let mean = a.coefficients.iter().sum::<f64>() / n;
        let sd = (0.29 * 0.71 / n).sqrt();
        assert!((mean - 0.29).abs() < 3.0 * sd);
        assert!(bernoulli(&sp, 1.5, 0).is_err());
    }

    #[test]
    fn caps_area_fraction() {
        let sp = p1();
        for a_d in [0.108, 0.3457, 0.7037] {
            let c = caps(&sp, Vec3::zeros(), 1.0, a_d, tilted_axis(1.0), 0.02).unwrap();
            let frac = mass(&c) / sp.mesh.area();
            assert!((frac - a_d).abs() < 0.03, "a_d {a_d}: {frac}");
        }
    }

    #[test]
    fn equatorial_band_is_half() {
        let sp = p1();
        let c = band(&sp, Vec3::zeros(), 1.0, 0.0, 0.05);
        assert!((mass(&c) / sp.mesh.area() - 0.5).abs() < 0.01);
    }
}
