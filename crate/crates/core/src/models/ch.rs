//! Linear Cahn-Hilliard step with explicit `f₀'`, stabilization `γ_c` and
//! implicit transport by a given velocity.

use std::sync::Arc;

use crate::assembly::{
    assemble_a_c, assemble_a_mu_with, assemble_ch_transport, assemble_mass, assemble_normal_volume_stab,
    assemble_scalar_load, qp_map, FormParams,
};
use crate::error::{Error, Result};
use crate::fe_space::{FEFunction, FESpace, Rank};
use crate::physics::{f0_prime, MaterialParams};
use crate::solvers::{solve_nonsym_from, SolveReport, SolverOptions};
use crate::sparse::SparseMatrix;

use super::ensure_finite;

#[derive(Debug, Clone)]
pub struct ChStep {
    pub c: FEFunction,
    pub mu: FEFunction,
    /// `a_μ` with the mobility of the old phase field, for the dissipation.
    pub a_mu: SparseMatrix,
    pub report: SolveReport,
}

/// Operators of the phase-field problem that do not change in time.
#[derive(Debug, Clone)]
pub struct ChSolver {
    pub space: Arc<FESpace>,
    pub mat: MaterialParams,
    pub params: FormParams,
    pub mass: SparseMatrix,
    /// Unscaled normal-gradient volume stabilization.
    pub stab: SparseMatrix,
    pub a_c: SparseMatrix,
    pub opts: SolverOptions,
}

impl ChSolver {
    pub fn new(space: Arc<FESpace>, mat: MaterialParams, params: FormParams, opts: SolverOptions) -> Result<Self> {
        if space.rank != Rank::Scalar {
            return Err(Error::Dimension("phase field needs a scalar space".into()));
        }
        params.validate()?;
        let mass = assemble_mass(&space);
        let stab = assemble_normal_volume_stab(&space);
        let a_c = assemble_a_c(&space, &params);
        Ok(Self {
            space,
            mat,
            params,
            mass,
            stab,
            a_c,
            opts,
        })
    }

    /// `(f₀'(c), φᵢ)`.
    pub fn well_load(&self, c: &FEFunction) -> Vec<f64> {
        assemble_scalar_load(&self.space, &qp_map(c, f0_prime))
    }

    /// Advances `c` by `dt`. `u = None` is a fluid at rest; `mu_guess`
    /// seeds the Krylov solver.
    pub fn step(&self, c: &FEFunction, u: Option<&FEFunction>, dt: f64, mu_guess: Option<&FEFunction>) -> Result<ChStep> {
        if !(dt > 0.0) {
            return Err(Error::Solver(format!("time step must be positive, got {dt}")));
        }
        let n = self.space.n_dofs();
        let eps = self.mat.eps;
        let a_mu = assemble_a_mu_with(c, &self.mat, &self.params, &self.stab)?;
        let transport = u.map(|u| assemble_ch_transport(&self.space, u));

        // Unknowns (δ, μ) interleaved, δ = c^{n+1} - c^n.
        let mut k11 = self.mass.clone();
        if let Some(t) = &transport {
            k11.add_scaled(dt, t);
        }
        let k12 = a_mu.scaled(dt);
        let k21 = SparseMatrix::linear_combination(&[(-self.params.gamma_c / eps, &self.mass), (-1.0, &self.a_c)]);
        let k = SparseMatrix::interleave(&[vec![Some(&k11), Some(&k12)], vec![Some(&k21), Some(&self.mass)]])?;

        let r1 = match &transport {
            Some(t) => t.matvec(&c.coefficients).iter().map(|v| -dt * v).collect(),
            None => vec![0.0; n],
        };
        let well = self.well_load(c);
        let ac = self.a_c.matvec(&c.coefficients);
        let mut rhs = vec![0.0; 2 * n];
        let mut x0 = vec![0.0; 2 * n];
        for i in 0..n {
            rhs[2 * i] = r1[i];
            rhs[2 * i + 1] = well[i] / eps + ac[i];
            if let Some(m) = mu_guess {
                x0[2 * i + 1] = m.coefficients[i];
            }
        }
        let (x, report) = solve_nonsym_from(&k, &rhs, x0, &self.opts)?;
        if !report.converged {
            return Err(Error::Solver(format!(
                "phase-field solve did not converge: {} iterations, residual {:e}",
                report.iterations, report.residual
            )));
        }
        ensure_finite(&x, "phase-field solution")?;
        let c_new: Vec<f64> = (0..n).map(|i| c.coefficients[i] + x[2 * i]).collect();
        let mu: Vec<f64> = (0..n).map(|i| x[2 * i + 1]).collect();
        Ok(ChStep {
            c: FEFunction::new(self.space.clone(), c_new),
            mu: FEFunction::new(self.space.clone(), mu),
            a_mu,
            report,
        })
    }

    /// Chemical potential of `c` at rest: `(M + τ_μ s_h) μ = (1/ε) (f₀'(c), ·) + A_c c`.
    pub fn chemical_potential(&self, c: &FEFunction) -> Result<FEFunction> {
        let well = self.well_load(c);
        let ac = self.a_c.matvec(&c.coefficients);
        let b: Vec<f64> = well.iter().zip(&ac).map(|(w, a)| w / self.mat.eps + a).collect();
        let mut m = self.mass.clone();
        m.add_scaled(self.params.tau_mu, &self.stab);
        let (mu, rep) = crate::solvers::solve_spd(&m, &b, &SolverOptions::spd(self.opts.tol))?;
        if !rep.converged {
            return Err(Error::Solver("chemical potential projection did not converge".into()));
        }
        Ok(FEFunction::new(self.space.clone(), mu))
    }
}
