//! Stabilized Laplace-Beltrami problem `-Δ_Γ u + u = f`.

use std::sync::Arc;

use crate::assembly::{assemble_laplace_beltrami, assemble_scalar_load_fn};
use crate::error::{Error, Result};
use crate::fe_space::{FEFunction, FESpace};
use crate::geometry::{ActiveMesh, BackgroundMesh, BoundingBox, LevelSetSurface};
use crate::solvers::{condition_estimate, solve_spd, SolveReport, SolverOptions};
use crate::Vec3;

/// Solves `(∇_Γu, ∇_Γv) + (u, v) + ρ_s s_h(u, v) = (f, v)`.
pub fn solve_laplace_beltrami(
    space: &Arc<FESpace>,
    f: impl Fn(&Vec3) -> f64,
    rho_s: f64,
    opts: &SolverOptions,
) -> Result<(FEFunction, SolveReport)> {
    let a = assemble_laplace_beltrami(space, rho_s);
    let b = assemble_scalar_load_fn(space, f);
    let (x, report) = solve_spd(&a, &b, opts)?;
    if !report.converged {
        return Err(Error::Solver(format!(
            "Laplace-Beltrami solve did not converge: {} iterations, residual {:e}",
            report.iterations, report.residual
        )));
    }
    Ok((FEFunction::new(space.clone(), x), report))
}

/// `‖u_h - u‖_{L²(Γ_h)}` and `‖∇_Γh(u_h - u)‖_{L²(Γ_h)}` for an
/// extension `u` of the exact solution with gradient `grad`.
pub fn surface_errors(uh: &FEFunction, u: impl Fn(&Vec3) -> f64, grad: impl Fn(&Vec3) -> Vec3) -> (f64, f64) {
    let m = &uh.space.mesh;
    let tr = uh.eval_trace();
    let (mut l2, mut h1) = (0.0, 0.0);
    for (q, qp) in m.surface_qp.iter().enumerate() {
        let p = &m.tets[qp.owner].projector;
        l2 += qp.weight * (tr.values[q] - u(&qp.x)).powi(2);
        h1 += qp.weight * (tr.surface_gradients[q] - p * grad(&qp.x)).norm_squared();
    }
    (l2.sqrt(), h1.sqrt())
}

/// `u* = y₁y₂y₃` with `y = (x - center)/|x - center|`, an eigenfunction of
/// `-Δ_Γ` on the unit sphere with eigenvalue 12, extended constantly
/// along normals.
#[derive(Debug, Clone, Copy)]
pub struct SphereEigenfunction {
    pub center: Vec3,
}

impl SphereEigenfunction {
    pub fn value(&self, x: &Vec3) -> f64 {
        let y = (x - self.center).normalize();
        y.x * y.y * y.z
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        let d = x - self.center;
        let r = d.norm();
        let y = d / r;
        let g = Vec3::new(y.y * y.z, y.x * y.z, y.x * y.y);
        (g - y * y.dot(&g)) / r
    }

    /// Right-hand side of `-Δ_Γ u + u = f`.
    pub fn rhs(&self, x: &Vec3) -> f64 {
        13.0 * self.value(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbLevel {
    pub n_per_axis: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub l2: f64,
    pub h1: f64,
    pub iterations: usize,
    pub condition: Option<f64>,
}

/// Manufactured-solution study on the unit sphere centered at `center`
/// inside `[-half, half]³`.
pub fn lb_convergence(
    levels: &[usize],
    half: f64,
    center: Vec3,
    with_condition: bool,
    opts: &SolverOptions,
) -> Result<Vec<LbLevel>> {
    let exact = SphereEigenfunction { center };
    levels
        .iter()
        .map(|&n| {
            let bg = BackgroundMesh::build(BoundingBox::cube(half), n)?;
            let h = bg.h();
            let mesh = Arc::new(ActiveMesh::build(bg, LevelSetSurface::sphere(center, 1.0))?);
            let space = Arc::new(FESpace::scalar(mesh, 1)?);
            let (uh, rep) = solve_laplace_beltrami(&space, |x| exact.rhs(x), h, opts)?;
            let (l2, h1) = surface_errors(&uh, |x| exact.value(x), |x| exact.gradient(x));
            let condition = if with_condition {
                let a = assemble_laplace_beltrami(&space, h);
                Some(condition_estimate(&a, 400)?)
            } else {
                None
            };
            Ok(LbLevel {
                n_per_axis: n,
                h,
                n_dofs: space.n_dofs(),
                l2,
                h1,
                iterations: rep.iterations,
                condition,
            })
        })
        .collect()
}

/// Observed orders `log(e_k / e_{k+1}) / log(h_k / h_{k+1})` for (L², H¹).
pub fn eoc(levels: &[LbLevel]) -> Vec<(f64, f64)> {
    levels
        .windows(2)
        .map(|w| {
            let r = (w[0].h / w[1].h).ln();
            ((w[0].l2 / w[1].l2).ln() / r, (w[0].h1 / w[1].h1).ln() / r)
        })
        .collect()
}
