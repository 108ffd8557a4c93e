//! Linearized surface Navier-Stokes step in the Taylor-Hood pair
//! `P2³ × P1` with a weakly enforced tangential constraint.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::assembly::{
    assemble_b, assemble_convection, assemble_line_tension_load, assemble_normal_volume_stab,
    assemble_pressure_stab, assemble_projected_mass, assemble_theta_flux_lhs, assemble_vector_a_with,
    assemble_vector_load, qp_map, FormParams,
};
use crate::error::{Error, Result};
use crate::fe_space::{FEFunction, FESpace, Rank};
use crate::physics::MaterialParams;
use crate::solvers::{solve_saddle, SolveReport, SolverOptions};
use crate::sparse::{axpy, dot, SparseMatrix};
use crate::Vec3;

use super::ensure_finite;

/// Data of one momentum step from `tⁿ` to `tⁿ⁺¹`.
#[derive(Debug, Clone, Copy)]
pub struct NsInput<'a> {
    pub u_prev: &'a FEFunction,
    pub p_prev: Option<&'a [f64]>,
    pub c_prev: &'a FEFunction,
    pub c_next: &'a FEFunction,
    pub mu_next: &'a FEFunction,
    /// External force density per surface quadrature point.
    pub force: Option<&'a [Vec3]>,
    /// Assembled load added to the right-hand side.
    pub load: Option<&'a [f64]>,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct NsStep {
    pub u: FEFunction,
    pub p: Vec<f64>,
    /// `a(η^{n+1})`, for the dissipation.
    pub a_u: SparseMatrix,
    pub report: SolveReport,
}

#[derive(Debug, Clone)]
pub struct NsSolver {
    pub vspace: Arc<FESpace>,
    pub pspace: Arc<FESpace>,
    pub mat: MaterialParams,
    pub params: FormParams,
    pub b: SparseMatrix,
    /// `β_p s_h` on the pressure space.
    pub s_p: SparseMatrix,
    /// Unscaled `s_h` on the pressure space.
    pub s_h_p: SparseMatrix,
    /// Componentwise `s_h` on the velocity space.
    pub s_u: SparseMatrix,
    /// `∫_Γh ψᵢ`.
    pub pressure_weights: Vec<f64>,
    pub opts: SolverOptions,
    pub convection: bool,
}

impl NsSolver {
    pub fn new(
        vspace: Arc<FESpace>,
        pspace: Arc<FESpace>,
        mat: MaterialParams,
        params: FormParams,
        opts: SolverOptions,
        convection: bool,
    ) -> Result<Self> {
        if vspace.rank != Rank::Vector || pspace.rank != Rank::Scalar {
            return Err(Error::Dimension("need a vector velocity space and a scalar pressure space".into()));
        }
        params.validate()?;
        let b = assemble_b(&vspace, &pspace);
        let s_h_p = assemble_normal_volume_stab(&pspace);
        let s_p = assemble_pressure_stab(&pspace, &params);
        let s_u = assemble_normal_volume_stab(&vspace);
        let pressure_weights = crate::assembly::assemble_scalar_load(&pspace, &vec![1.0; pspace.mesh.surface_qp.len()]);
        Ok(Self {
            vspace,
            pspace,
            mat,
            params,
            b,
            s_p,
            s_h_p,
            s_u,
            pressure_weights,
            opts,
            convection,
        })
    }

    /// `a(η(c); ·, ·)` with the cut-off viscosity.
    pub fn viscous_operator(&self, c: &FEFunction) -> SparseMatrix {
        let eta = qp_map(c, |v| self.mat.cutoff_viscosity(v));
        assemble_vector_a_with(&self.vspace, &eta, &self.params, &self.s_u)
    }

    pub fn step(&self, inp: &NsInput) -> Result<NsStep> {
        let dt = inp.dt;
        if !(dt > 0.0) {
            return Err(Error::Solver(format!("time step must be positive, got {dt}")));
        }
        let started = std::time::Instant::now();
        let rho_prev = qp_map(inp.c_prev, |v| self.mat.rho_smooth(v));
        let m_rho = assemble_projected_mass(&self.vspace, &rho_prev);
        let a_u = self.viscous_operator(inp.c_next);
        let mut k = a_u.clone();
        k.add_scaled(1.0 / dt, &m_rho);
        if self.convection {
            let rho = qp_map(inp.c_next, |v| self.mat.rho_smooth(v));
            let rho_hat = qp_map(inp.c_next, |v| self.mat.rho_hat(v));
            k.add_scaled(1.0, &assemble_convection(&self.vspace, &rho, &rho_hat, inp.u_prev));
        }
        k.add_scaled(1.0, &assemble_theta_flux_lhs(&self.vspace, inp.c_next, inp.mu_next, &self.mat));

        let mut f = m_rho.matvec(&inp.u_prev.coefficients);
        f.iter_mut().for_each(|v| *v /= dt);
        if self.mat.sigma_gamma != 0.0 {
            let lt = assemble_line_tension_load(&self.vspace, inp.c_next, inp.mu_next, self.mat.sigma_gamma);
            axpy(1.0, &lt, &mut f);
        }
        if let Some(force) = inp.force {
            axpy(1.0, &assemble_vector_load(&self.vspace, force), &mut f);
        }
        if let Some(load) = inp.load {
            if load.len() != f.len() {
                return Err(Error::Dimension(format!("load has {} entries, expected {}", load.len(), f.len())));
            }
            axpy(1.0, load, &mut f);
        }
        let g = vec![0.0; self.pspace.n_dofs()];
        let guess = inp.p_prev.map(|p| (inp.u_prev.coefficients.as_slice(), p));
        let assembled = started.elapsed();
        let sol = solve_saddle(&k, &self.b, &self.s_p, &f, &g, &self.pressure_weights, &self.opts, guess)?;
        log::debug!(
            "momentum step: assembly {assembled:?}, solve {:?} ({} iterations)",
            sol.report.wall_time,
            sol.report.iterations
        );
        if !sol.report.converged {
            return Err(Error::Solver(format!(
                "momentum solve did not converge: {} iterations, residual {:e}",
                sol.report.iterations, sol.report.residual
            )));
        }
        ensure_finite(&sol.u, "velocity")?;
        ensure_finite(&sol.p, "pressure")?;
        Ok(NsStep {
            u: FEFunction::new(self.vspace.clone(), sol.u),
            p: sol.p,
            a_u,
            report: sol.report,
        })
    }

    /// Interpolated rigid rotations `e_k × (x - center)`, `k = 1, 2, 3`.
    pub fn rotations(&self) -> [FEFunction; 3] {
        let center = self.vspace.mesh.surface.center();
        [Vec3::x(), Vec3::y(), Vec3::z()].map(|e| self.vspace.interpolate_vector(|x| e.cross(&(x - center))))
    }

    /// Removes from the load `f` its components along the discrete rotations,
    /// in the projected-mass inner product.
    pub fn remove_rotational_load(&self, f: &mut [f64]) -> Result<()> {
        let m = assemble_projected_mass(&self.vspace, &vec![1.0; self.vspace.mesh.surface_qp.len()]);
        let rots = self.rotations();
        let mr: Vec<Vec<f64>> = rots.iter().map(|r| m.matvec(&r.coefficients)).collect();
        let gram = Matrix3::from_fn(|i, j| dot(&rots[i].coefficients, &mr[j]));
        let rhs = Vector3::from_fn(|i, _| dot(&rots[i].coefficients, f));
        let alpha = gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Solver("rotation Gram matrix is singular".into()))?;
        for k in 0..3 {
            axpy(-alpha[k], &mr[k], f);
        }
        Ok(())
    }

    /// `(f, v)` for a force per surface quadrature point, without its
    /// rotational part.
    pub fn nonrotational_load(&self, force: &[Vec3]) -> Result<Vec<f64>> {
        let mut f = assemble_vector_load(&self.vspace, force);
        self.remove_rotational_load(&mut f)?;
        Ok(f)
    }

    /// Steady Stokes problem `a(η; u, v) + b(v, p) = (f, v)`, `b(u, q) - s(p, q) = 0`
    /// with constant viscosity, after removing the rotational part of `f`.
    pub fn steady_stokes(&self, force: &[Vec3], eta: f64) -> Result<(FEFunction, Vec<f64>, SolveReport)> {
        let eta_q = vec![eta; self.vspace.mesh.surface_qp.len()];
        let a = assemble_vector_a_with(&self.vspace, &eta_q, &self.params, &self.s_u);
        let f = self.nonrotational_load(force)?;
        let g = vec![0.0; self.pspace.n_dofs()];
        let sol = solve_saddle(&a, &self.b, &self.s_p, &f, &g, &self.pressure_weights, &self.opts, None)?;
        if !sol.report.converged {
            return Err(Error::Solver(format!(
                "Stokes solve did not converge: {} iterations, residual {:e}",
                sol.report.iterations, sol.report.residual
            )));
        }
        Ok((FEFunction::new(self.vspace.clone(), sol.u), sol.p, sol.report))
    }
}
