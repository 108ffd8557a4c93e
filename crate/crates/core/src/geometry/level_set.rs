//! Implicit surfaces given as the zero level of an analytic function.

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Stationary closed (or planar) surface described by a level-set function
/// that is negative inside and positive outside.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelSetSurface {
    /// Exact signed distance to a sphere.
    Sphere { center: Vec3, radius: f64 },
    /// Signed distance to the plane `normal · x = offset`.
    Plane { normal: Vec3, offset: f64 },
    /// Axis-aligned ellipsoid. The level set is `min(a) * (|A⁻¹(x - c)| - 1)`,
    /// which is a signed distance only near the surface.
    Ellipsoid { center: Vec3, semi_axes: Vec3 },
}

impl LevelSetSurface {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        LevelSetSurface::Sphere { center, radius }
    }

    pub fn unit_sphere() -> Self {
        Self::sphere(Vec3::zeros(), 1.0)
    }

    /// Plane through `offset * normal` with unit normal `normal`.
    pub fn plane(normal: Vec3, offset: f64) -> Self {
        LevelSetSurface::Plane {
            normal: normal.normalize(),
            offset,
        }
    }

    pub fn ellipsoid(center: Vec3, semi_axes: Vec3) -> Self {
        LevelSetSurface::Ellipsoid { center, semi_axes }
    }

    pub fn value(&self, x: &Vec3) -> f64 {
        match self {
            LevelSetSurface::Sphere { center, radius } => (x - center).norm() - radius,
            LevelSetSurface::Plane { normal, offset } => normal.dot(x) - offset,
            LevelSetSurface::Ellipsoid { center, semi_axes } => {
                let y = (x - center).component_div(semi_axes);
                semi_axes.min() * (y.norm() - 1.0)
            }
        }
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        match self {
            LevelSetSurface::Sphere { center, .. } => {
                let d = x - center;
                let r = d.norm();
                if r == 0.0 {
                    Vec3::zeros()
                } else {
                    d / r
                }
            }
            LevelSetSurface::Plane { normal, .. } => *normal,
            LevelSetSurface::Ellipsoid { center, semi_axes } => {
                let y = (x - center).component_div(semi_axes);
                let r = y.norm();
                if r == 0.0 {
                    Vec3::zeros()
                } else {
                    semi_axes.min() * y.component_div(semi_axes) / r
                }
            }
        }
    }

    /// Unit outward normal of the level set through `x`.
    pub fn normal(&self, x: &Vec3) -> Vec3 {
        let g = self.gradient(x);
        let n = g.norm();
        if n == 0.0 {
            g
        } else {
            g / n
        }
    }

    /// Closest point on the surface. Exact for spheres and planes; for the
    /// ellipsoid a Newton iteration along the gradient is used, which lands
    /// on the surface but is only approximately the closest point.
    pub fn closest_point(&self, x: &Vec3) -> Result<Vec3> {
        match self {
            LevelSetSurface::Sphere { center, radius } => {
                let d = x - center;
                let r = d.norm();
                if r < 1e-14 * radius.max(1.0) {
                    return Err(Error::Geometry(
                        "closest point projection undefined at the sphere center".into(),
                    ));
                }
                Ok(center + d * (radius / r))
            }
            LevelSetSurface::Plane { normal, offset } => Ok(x - normal * (normal.dot(x) - offset)),
            LevelSetSurface::Ellipsoid { center, .. } => {
                if (x - center).norm() < 1e-14 {
                    return Err(Error::Geometry(
                        "closest point projection undefined at the ellipsoid center".into(),
                    ));
                }
                let mut y = *x;
                for _ in 0..100 {
                    let phi = self.value(&y);
                    if phi.abs() < 1e-14 {
                        break;
                    }
                    let g = self.gradient(&y);
                    y -= g * (phi / g.norm_squared());
                }
                Ok(y)
            }
        }
    }

    pub fn center(&self) -> Vec3 {
        match self {
            LevelSetSurface::Sphere { center, .. } | LevelSetSurface::Ellipsoid { center, .. } => *center,
            LevelSetSurface::Plane { normal, offset } => normal * *offset,
        }
    }

    /// Analytic surface area, when it has a closed form.
    pub fn area(&self) -> Option<f64> {
        match self {
            LevelSetSurface::Sphere { radius, .. } => Some(4.0 * std::f64::consts::PI * radius * radius),
            _ => None,
        }
    }
}

/// Orthogonal projector `I - n nᵀ` onto the tangent plane of a unit normal.
pub fn tangential_projector(n: &Vec3) -> Result<Mat3> {
    let len = n.norm();
    if (len - 1.0).abs() > 1e-10 {
        return Err(Error::Geometry(format!(
            "tangential projector needs a unit normal, got |n| = {len}"
        )));
    }
    Ok(projector_unchecked(n))
}

#[inline]
pub(crate) fn projector_unchecked(n: &Vec3) -> Mat3 {
    Mat3::identity() - n * n.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sphere_signed_distance() {
        let s = LevelSetSurface::unit_sphere();
        assert_eq!(s.value(&Vec3::zeros()), -1.0);
        assert_eq!(s.value(&Vec3::new(1.0, 0.0, 0.0)), 0.0);
        assert_eq!(s.value(&Vec3::new(2.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn sphere_projection() {
        let s = LevelSetSurface::unit_sphere();
        let p = s.closest_point(&Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((p - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        let p = s.closest_point(&Vec3::new(0.5, 0.0, 0.0)).unwrap();
        assert!((p - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!(s.closest_point(&Vec3::zeros()).is_err());
    }

    #[test]
    fn projector_of_e3() {
        let p = tangential_projector(&Vec3::z()).unwrap();
        assert_eq!(p, Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)));
        assert!(tangential_projector(&Vec3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn ellipsoid_projection_lands_on_surface() {
        let e = LevelSetSurface::ellipsoid(Vec3::zeros(), Vec3::new(1.0, 0.8, 0.6));
        let p = e.closest_point(&Vec3::new(0.3, 0.9, -0.4)).unwrap();
        assert!(e.value(&p).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_on_surface(
            x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0
        ) {
            let s = LevelSetSurface::sphere(Vec3::new(0.1, -0.2, 0.05), 1.0);
            let v = Vec3::new(x, y, z);
            prop_assume!((v - s.center()).norm() > 0.05);
            let p = s.closest_point(&v).unwrap();
            prop_assert!(s.value(&p).abs() < 1e-12);
            prop_assert!(((p - s.center()).norm() - 1.0).abs() < 1e-12);
            let pp = s.closest_point(&p).unwrap();
            prop_assert!((pp - p).norm() < 1e-12);
        }

        #[test]
        fn projector_properties(theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..6.3) {
            let n = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let p = tangential_projector(&n).unwrap();
            prop_assert!((p - p.transpose()).abs().max() < 1e-15);
            prop_assert!((p * p - p).abs().max() < 1e-14);
            prop_assert!((p * n).norm() < 1e-14);
            prop_assert!((p.trace() - 2.0).abs() < 1e-14);
            let mut ev: Vec<f64> = p.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert!(ev[0].abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12 && (ev[2] - 1.0).abs() < 1e-12);
        }
    }
}
