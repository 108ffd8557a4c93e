//! Decoupled time loop: phase-field step, then momentum step, with the
//! energy monitor and adaptive step size.

use std::time::{Duration, Instant};

use crate::assembly::qp_values;
use crate::diagnostics::{
    count_minority_domains, dissipation_increment, lyapunov, mass, max_abs, perimeter, rms_normal_velocity,
    DiagnosticsRow,
};
use crate::error::{Error, Result};
use crate::fe_space::FEFunction;
use crate::physics::{build_external_force, ElectrostaticParams};
use crate::sparse::SparseMatrix;
use crate::Vec3;

use super::{
    adapt_dt, underflow, ChSolver, LyapunovMonitor, MonitoredEnergy, NsInput, NsSolver, SchemeParams, StepFeedback,
};

/// Threshold on `c` separating the phases in domain counts.
pub const DOMAIN_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SimState {
    pub step: usize,
    pub t: f64,
    /// Step size for the next attempt.
    pub dt: f64,
    pub c: FEFunction,
    pub mu: FEFunction,
    /// `None` when the flow is switched off.
    pub u: Option<FEFunction>,
    pub p: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub rejections: usize,
    pub t: f64,
    pub lyapunov_initial: f64,
    pub lyapunov_final: f64,
    /// Largest `(Lⁿ⁺¹ - Lⁿ) / L⁰` over accepted steps.
    pub max_relative_increase: f64,
    /// Accepted steps with `Lⁿ⁺¹ - Lⁿ > monitor_tol · L⁰`.
    pub lyapunov_increases: usize,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Largest `(Eⁿ⁺¹ - Eⁿ) / E⁰` of the scheme energy.
    pub max_relative_energy_increase: f64,
    pub energy_increases: usize,
    /// Accepted steps on which the monitored functional increased.
    pub monitor_violations: usize,
    pub dissipation_sum: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub wall_time: Duration,
}

struct Trial {
    c: FEFunction,
    mu: FEFunction,
    u: Option<FEFunction>,
    p: Option<Vec<f64>>,
    lyapunov: f64,
    energy: f64,
    dissipation: f64,
    ch_iterations: usize,
    ns_iterations: usize,
}

pub struct Simulation {
    pub ch: ChSolver,
    /// Momentum solver; `None` runs the phase field without flow.
    pub ns: Option<NsSolver>,
    pub scheme: SchemeParams,
    pub electrostatics: Option<ElectrostaticParams>,
    /// Assembled momentum load added on every step.
    pub load: Option<Vec<f64>>,
    /// Skip the phase-field step and keep `c`, `μ` fixed.
    pub freeze_phase: bool,
    /// Components smaller than this are not counted as domains.
    pub min_domain_triangles: usize,
    pub state: SimState,
    pub rows: Vec<DiagnosticsRow>,
    lyapunov_initial: f64,
    lyapunov_prev: f64,
    max_relative_increase: f64,
    lyapunov_increases: usize,
    energy_initial: f64,
    energy_prev: f64,
    max_relative_energy_increase: f64,
    energy_increases: usize,
    monitor_violations: usize,
    dissipation_sum: f64,
    rejections: usize,
    mass_initial: f64,
    started: Instant,
}

impl Simulation {
    /// Starts from `c0` with `u⁰ = 0` and `μ⁰` the chemical potential of `c0`.
    pub fn new(ch: ChSolver, ns: Option<NsSolver>, scheme: SchemeParams, c0: FEFunction) -> Result<Self> {
        let errs = scheme.validate();
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let mu = ch.chemical_potential(&c0)?;
        let u = ns.as_ref().map(|ns| ns.vspace.zero());
        let p = ns.as_ref().map(|ns| vec![0.0; ns.pspace.n_dofs()]);
        let ly = lyapunov(&c0, u.as_ref(), &ch.mat, &ch.a_c);
        let (l0, e0) = (ly.total(), ly.scheme_energy(ch.mat.sigma_gamma));
        let m0 = mass(&c0);
        let state = SimState {
            step: 0,
            t: 0.0,
            dt: scheme.dt,
            c: c0,
            mu,
            u,
            p,
        };
        let mut sim = Self {
            ch,
            ns,
            scheme,
            electrostatics: None,
            load: None,
            freeze_phase: false,
            min_domain_triangles: 3,
            state,
            rows: Vec::new(),
            lyapunov_initial: l0,
            lyapunov_prev: l0,
            max_relative_increase: f64::NEG_INFINITY,
            lyapunov_increases: 0,
            energy_initial: e0,
            energy_prev: e0,
            max_relative_energy_increase: f64::NEG_INFINITY,
            energy_increases: 0,
            monitor_violations: 0,
            dissipation_sum: 0.0,
            rejections: 0,
            mass_initial: m0,
            started: Instant::now(),
        };
        let row = sim.diagnostics(0.0, 0.0, 0, 0);
        sim.rows.push(row);
        Ok(sim)
    }

    pub fn with_electrostatics(mut self, p: ElectrostaticParams) -> Self {
        self.electrostatics = Some(p);
        self
    }

    pub fn with_load(mut self, load: Vec<f64>) -> Self {
        self.load = Some(load);
        self
    }

    pub fn with_frozen_phase(mut self) -> Self {
        self.freeze_phase = true;
        self
    }

    pub fn lyapunov_initial(&self) -> f64 {
        self.lyapunov_initial
    }

    pub fn lyapunov_current(&self) -> f64 {
        self.lyapunov_prev
    }

    pub fn energy_current(&self) -> f64 {
        self.energy_prev
    }

    fn diagnostics(&self, dt: f64, dissipation: f64, ch_it: usize, ns_it: usize) -> DiagnosticsRow {
        let s = &self.state;
        DiagnosticsRow {
            step: s.step,
            t: s.t,
            dt,
            mass: mass(&s.c),
            lyapunov: self.lyapunov_prev,
            scheme_energy: self.energy_prev,
            dissipation_increment: dissipation,
            perimeter: perimeter(&s.c, self.ch.mat.eps),
            domain_count: count_minority_domains(&s.c, DOMAIN_THRESHOLD, self.min_domain_triangles),
            max_abs_c: max_abs(&s.c),
            rms_normal_velocity: s.u.as_ref().map_or(0.0, rms_normal_velocity),
            ch_iterations: ch_it,
            ns_iterations: ns_it,
        }
    }

    /// External force density for the phase field `c`.
    pub fn external_force(&self, c: &FEFunction) -> Result<Option<Vec<Vec3>>> {
        let Some(ep) = &self.electrostatics else {
            return Ok(None);
        };
        let w: Vec<f64> = c.space.mesh.surface_qp.iter().map(|q| q.weight).collect();
        Ok(Some(build_external_force(&qp_values(c), &w, ep)?.forces))
    }

    fn trial(&self, dt: f64) -> Result<Trial> {
        let s = &self.state;
        let (c, mu, a_mu, ch_it) = if self.freeze_phase {
            (s.c.clone(), s.mu.clone(), None, 0)
        } else {
            let r = self.ch.step(&s.c, s.u.as_ref(), dt, Some(&s.mu))?;
            (r.c, r.mu, Some(r.a_mu), r.report.iterations)
        };
        let (u, p, a_u, ns_it) = match (&self.ns, &s.u) {
            (Some(ns), Some(u_prev)) => {
                let force = self.external_force(&c)?;
                let r = ns.step(&NsInput {
                    u_prev,
                    p_prev: s.p.as_deref(),
                    c_prev: &s.c,
                    c_next: &c,
                    mu_next: &mu,
                    force: force.as_deref(),
                    load: self.load.as_deref(),
                    dt,
                })?;
                (Some(r.u), Some(r.p), Some(r.a_u), r.report.iterations)
            }
            _ => (None, None, None, 0),
        };
        let ly = lyapunov(&c, u.as_ref(), &self.ch.mat, &self.ch.a_c);
        let zero;
        let a_mu_ref: &SparseMatrix = match &a_mu {
            Some(a) => a,
            None => {
                zero = self.ch.space.pattern().zeros();
                &zero
            }
        };
        let dissipation = dissipation_increment(
            dt,
            a_u.as_ref().zip(u.as_ref()).map(|(a, u)| (a, u.coefficients.as_slice())),
            (a_mu_ref, &mu.coefficients),
            self.ns.as_ref().zip(p.as_ref()).map(|(ns, p)| (&ns.s_h_p, p.as_slice())),
        );
        Ok(Trial {
            c,
            mu,
            u,
            p,
            lyapunov: ly.total(),
            energy: ly.scheme_energy(self.ch.mat.sigma_gamma),
            dissipation,
            ch_iterations: ch_it,
            ns_iterations: ns_it,
        })
    }

    fn reject(&mut self, dt: f64) -> Result<()> {
        self.rejections += 1;
        if dt <= self.scheme.dt_min {
            let err = underflow(self.state.t, dt, &self.scheme);
            log::error!(
                "{err}; state at step {}: mass {:.12e}, lyapunov {:.12e}, max|c| {:.6e}",
                self.state.step,
                mass(&self.state.c),
                self.lyapunov_prev,
                max_abs(&self.state.c)
            );
            return Err(err);
        }
        self.state.dt = (0.5 * dt).max(self.scheme.dt_min);
        Ok(())
    }

    /// Attempts one step; returns `true` if it was accepted.
    pub fn advance(&mut self) -> Result<bool> {
        let remaining = self.scheme.t_end - self.state.t;
        let dt = self.state.dt.min(remaining.max(self.scheme.dt_min));
        let trial = match self.trial(dt) {
            Ok(t) => t,
            Err(Error::Solver(msg)) if self.scheme.adaptive => {
                log::warn!("step {} rejected at dt = {dt:e}: {msg}", self.state.step + 1);
                self.reject(dt)?;
                return Ok(false);
            }
            Err(e) => return Err(e),
        };
        let increase = trial.lyapunov - self.lyapunov_prev;
        let e_increase = trial.energy - self.energy_prev;
        let l_up = increase > self.scheme.monitor_tol * self.lyapunov_initial.abs();
        let e_up = e_increase > self.scheme.monitor_tol * self.energy_initial.abs();
        let (violated, watched_increase, watched_prev) = match self.scheme.monitored {
            MonitoredEnergy::Scheme => (e_up, e_increase, self.energy_prev),
            MonitoredEnergy::Lyapunov => (l_up, increase, self.lyapunov_prev),
        };
        // External forcing does work on the membrane; the energy is not monotone.
        let forced = self.electrostatics.is_some() || self.load.is_some();
        if violated && !forced {
            match self.scheme.monitor {
                LyapunovMonitor::Enforce => {
                    log::warn!(
                        "step {} rejected at dt = {dt:e}: energy increase {watched_increase:e}",
                        self.state.step + 1
                    );
                    self.reject(dt)?;
                    return Ok(false);
                }
                LyapunovMonitor::Record => self.monitor_violations += 1,
            }
        }
        self.lyapunov_increases += usize::from(l_up);
        self.energy_increases += usize::from(e_up);
        let rel_decrease = if watched_prev > 0.0 {
            -watched_increase / watched_prev
        } else {
            0.0
        };
        if self.lyapunov_initial != 0.0 {
            self.max_relative_increase = self.max_relative_increase.max(increase / self.lyapunov_initial.abs());
        }
        if self.energy_initial != 0.0 {
            self.max_relative_energy_increase =
                self.max_relative_energy_increase.max(e_increase / self.energy_initial.abs());
        }
        self.dissipation_sum += trial.dissipation;
        self.lyapunov_prev = trial.lyapunov;
        self.energy_prev = trial.energy;
        self.state.step += 1;
        self.state.t += dt;
        self.state.c = trial.c;
        self.state.mu = trial.mu;
        self.state.u = trial.u;
        self.state.p = trial.p;
        if self.scheme.adaptive {
            let fb = StepFeedback {
                rejected: false,
                relative_decrease: rel_decrease,
                iterations: trial.ch_iterations.max(trial.ns_iterations),
                max_iter: self.scheme.max_iter,
            };
            self.state.dt = adapt_dt(self.state.dt, &fb, &self.scheme);
        }
        if self.state.step % self.scheme.diagnostics_every == 0 || self.finished() {
            let row = self.diagnostics(dt, trial.dissipation, trial.ch_iterations, trial.ns_iterations);
            if !row.is_finite() {
                return Err(Error::Solver(format!("non-finite diagnostics at step {}", row.step)));
            }
            self.rows.push(row);
        }
        Ok(true)
    }

    pub fn finished(&self) -> bool {
        self.state.t >= self.scheme.t_end * (1.0 - 1e-12) || self.state.step >= self.scheme.max_steps
    }

    /// Runs to `t_end` or `max_steps`, calling `on_accept` after every
    /// accepted step.
    pub fn run_with(&mut self, mut on_accept: impl FnMut(&Simulation) -> Result<()>) -> Result<RunSummary> {
        while !self.finished() {
            if self.advance()? {
                on_accept(self)?;
            }
        }
        Ok(self.summary())
    }

    pub fn run(&mut self) -> Result<RunSummary> {
        self.run_with(|_| Ok(()))
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            steps: self.state.step,
            rejections: self.rejections,
            t: self.state.t,
            lyapunov_initial: self.lyapunov_initial,
            lyapunov_final: self.lyapunov_prev,
            max_relative_increase: self.max_relative_increase,
            lyapunov_increases: self.lyapunov_increases,
            energy_initial: self.energy_initial,
            energy_final: self.energy_prev,
            max_relative_energy_increase: self.max_relative_energy_increase,
            energy_increases: self.energy_increases,
            monitor_violations: self.monitor_violations,
            dissipation_sum: self.dissipation_sum,
            mass_initial: self.mass_initial,
            mass_final: mass(&self.state.c),
            wall_time: self.started.elapsed(),
        }
    }
}
