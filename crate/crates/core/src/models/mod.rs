//! Problem drivers: Laplace-Beltrami, Cahn-Hilliard step, Navier-Stokes
//! step and the coupled time loop.

pub mod ch;
pub mod ic;
pub mod lb;
pub mod ns;
pub mod nsch;

pub use ch::{ChSolver, ChStep};
pub use lb::{lb_convergence, solve_laplace_beltrami, LbLevel};
pub use ns::{NsInput, NsSolver, NsStep};
pub use nsch::{RunSummary, SimState, Simulation};

use crate::error::{Error, Result};

/// What the driver does when the discrete energy increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovMonitor {
    /// Reject the step and halve `dt`.
    Enforce,
    /// Keep the step and count the violation.
    Record,
}

/// Functional watched by the monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitoredEnergy {
    /// `½∫ρ|ū|² + σ_γ(ε⁻¹∫f₀ + ½a_c(c, c))`.
    Scheme,
    /// `∫(ρ|ū|² + (σ_γ/ε)f₀) + a_c(c, c)`.
    Lyapunov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    pub dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub max_steps: usize,
    pub adaptive: bool,
    pub gamma_c: f64,
    pub ch_tol: f64,
    pub ns_tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub monitor: LyapunovMonitor,
    pub monitored: MonitoredEnergy,
    /// Relative slack of the energy monitor.
    pub monitor_tol: f64,
    /// Include the convective term in the momentum equation.
    pub convection: bool,
    pub diagnostics_every: usize,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            dt_min: 4e-6,
            dt_max: 4.0,
            t_end: 1.0,
            max_steps: 1_000_000,
            adaptive: true,
            gamma_c: 1.0,
            ch_tol: 1e-10,
            ns_tol: 1e-8,
            max_iter: 2000,
            restart: 60,
            monitor: LyapunovMonitor::Enforce,
            monitored: MonitoredEnergy::Scheme,
            monitor_tol: 1e-6,
            convection: true,
            diagnostics_every: 1,
        }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            errs.push(format!(
                "scheme.dt_min: need 0 < dt_min <= dt_max, got dt_min = {}, dt_max = {}",
                self.dt_min, self.dt_max
            ));
        }
        if !(self.dt >= self.dt_min && self.dt <= self.dt_max) {
            errs.push(format!("scheme.dt: must lie in [dt_min, dt_max], got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            errs.push(format!("scheme.t_end: must be positive, got {}", self.t_end));
        }
        for (k, v) in [("scheme.gamma_c", self.gamma_c), ("scheme.ch_tol", self.ch_tol), ("scheme.ns_tol", self.ns_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{k}: must be positive, got {v}"));
            }
        }
        if self.max_iter == 0 {
            errs.push("scheme.max_iter: must be positive".into());
        }
        if self.diagnostics_every == 0 {
            errs.push("scheme.diagnostics_every: must be positive".into());
        }
        errs
    }
}

/// Outcome of one attempted step, as seen by the step-size controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFeedback {
    pub rejected: bool,
    /// `(L_old - L_new) / L_old`.
    pub relative_decrease: f64,
    /// Largest Krylov iteration count among the step's solves.
    pub iterations: usize,
    pub max_iter: usize,
}

pub const DT_GROWTH: f64 = 1.5;
pub const DT_SHRINK: f64 = 0.5;
pub const QUIESCENT_DECREASE: f64 = 1e-4;

/// `clamp(dt·g, dt_min, dt_max)` with `g = 0.5` after a rejection, `1.5`
/// for a quiescent, cheap step and `1` otherwise.
pub fn adapt_dt(dt: f64, fb: &StepFeedback, scheme: &SchemeParams) -> f64 {
    let g = if fb.rejected {
        DT_SHRINK
    } else if fb.relative_decrease < QUIESCENT_DECREASE && 3 * fb.iterations < fb.max_iter {
        DT_GROWTH
    } else {
        1.0
    };
    (dt * g).clamp(scheme.dt_min, scheme.dt_max)
}

/// Error raised when a rejected step would need `dt < dt_min`.
pub fn underflow(t: f64, dt: f64, scheme: &SchemeParams) -> Error {
    Error::TimeStepUnderflow {
        t,
        dt,
        dt_min: scheme.dt_min,
    }
}

pub(crate) fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Solver(format!("{what} contains non-finite values")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fb(rejected: bool, dec: f64, it: usize) -> StepFeedback {
        StepFeedback {
            rejected,
            relative_decrease: dec,
            iterations: it,
            max_iter: 300,
        }
    }

    #[test]
    fn rejection_halves_and_quiescence_grows() {
        let s = SchemeParams::default();
        assert_eq!(adapt_dt(0.1, &fb(true, 0.0, 0), &s), 0.05);
        assert_eq!(adapt_dt(0.1, &fb(false, 1e-2, 5), &s), 0.1);
        assert!((adapt_dt(0.1, &fb(false, 0.0, 5), &s) - 0.15).abs() < 1e-15);
        assert_eq!(adapt_dt(0.1, &fb(false, 0.0, 150), &s), 0.1);
        let mut dt = 1e-3;
        for _ in 0..100 {
            dt = adapt_dt(dt, &fb(false, 0.0, 1), &s);
        }
        assert_eq!(dt, s.dt_max);
    }

    proptest! {
        #[test]
        fn dt_stays_in_bounds(seq in proptest::collection::vec((any::<bool>(), 0.0f64..0.01, 0usize..400), 1..60)) {
            let s = SchemeParams::default();
            let mut dt = s.dt;
            for (r, d, it) in seq {
                dt = adapt_dt(dt, &fb(r, d, it), &s);
                prop_assert!(dt >= s.dt_min && dt <= s.dt_max);
            }
        }
    }
}
