//! Material laws and the electrostatic attraction model.

use crate::error::{Error, Result};
use crate::Vec3;

/// Smoothing width of `θ²(c)`.
pub const THETA_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityKind {
    Constant,
    Degenerate,
}

/// Phase 1 (`c = 1`) is the denser, more viscous phase.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub rho1: f64,
    pub rho2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub sigma_gamma: f64,
    pub eps: f64,
    pub diffusivity: f64,
    pub mobility: MobilityKind,
    pub alpha: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            rho1: 1.5,
            rho2: 1.0,
            eta1: 2.0,
            eta2: 1.0,
            sigma_gamma: 1.0,
            eps: 0.1,
            diffusivity: 1.0,
            mobility: MobilityKind::Degenerate,
            alpha: THETA_ALPHA,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let pos = [
            ("physics.rho2", self.rho2),
            ("physics.eta2", self.eta2),
            ("physics.eps", self.eps),
            ("physics.diffusivity", self.diffusivity),
            ("physics.alpha", self.alpha),
        ];
        for (k, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{k}: must be positive and finite, got {v}"));
            }
        }
        if !(self.sigma_gamma >= 0.0 && self.sigma_gamma.is_finite()) {
            errs.push(format!("physics.sigma_gamma: must be non-negative, got {}", self.sigma_gamma));
        }
        if !(self.rho1 >= self.rho2) {
            errs.push(format!("physics.rho1: must be >= rho2 ({}), got {}", self.rho2, self.rho1));
        }
        if !(self.eta1 >= self.eta2) {
            errs.push(format!("physics.eta1: must be >= eta2 ({}), got {}", self.eta2, self.eta1));
        }
        errs
    }

    pub fn mobility(&self, c: f64) -> f64 {
        match self.mobility {
            MobilityKind::Constant => self.diffusivity,
            MobilityKind::Degenerate => {
                let c = c.clamp(0.0, 1.0);
                self.diffusivity * c * (1.0 - c)
            }
        }
    }

    pub fn cutoff_density(&self, c: f64) -> f64 {
        if c <= 0.0 {
            self.rho2
        } else {
            c * self.rho1 + (1.0 - c) * self.rho2
        }
    }

    pub fn cutoff_viscosity(&self, c: f64) -> f64 {
        if c <= 0.0 {
            self.eta2
        } else {
            c * self.eta1 + (1.0 - c) * self.eta2
        }
    }

    /// `θ² = dρ/dc`.
    pub fn theta_sq(&self, c: f64) -> f64 {
        0.5 * (self.rho1 - self.rho2) * ((c / self.alpha).tanh() + 1.0)
    }

    pub fn theta(&self, c: f64) -> f64 {
        self.theta_sq(c).sqrt()
    }

    /// `ρ(c) = ρ₂ + ∫₀^c θ²`.
    pub fn rho_smooth(&self, c: f64) -> f64 {
        let a = self.alpha;
        // c + α ln cosh(c/α) = α (softplus(2c/α) - ln 2)
        self.rho2 + 0.5 * (self.rho1 - self.rho2) * a * (softplus(2.0 * c / a) - std::f64::consts::LN_2)
    }

    /// `d²ρ/dc²`.
    pub fn rho_smooth_second(&self, c: f64) -> f64 {
        let s = 1.0 / (c / self.alpha).cosh();
        0.5 * (self.rho1 - self.rho2) * s * s / self.alpha
    }

    /// `ρ̂ = ρ - c dρ/dc`.
    pub fn rho_hat(&self, c: f64) -> f64 {
        self.rho_smooth(c) - c * self.theta_sq(c)
    }

    pub fn density_contrast(&self) -> f64 {
        self.rho1 - self.rho2
    }
}

/// `ln(1 + eˣ)` without overflow or cancellation.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn f0(c: f64) -> f64 {
    0.25 * c * c * (1.0 - c) * (1.0 - c)
}

pub fn f0_prime(c: f64) -> f64 {
    0.5 * c * (1.0 - c) * (1.0 - 2.0 * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectrostaticParams {
    /// Zeta potentials in volts.
    pub zeta_guv: f64,
    pub zeta_suv: f64,
    /// Debye parameter in 1/nm.
    pub kappa: f64,
    /// Slip-plane distance in nm.
    pub x_slip: f64,
    pub eps_r: f64,
    pub eps0: f64,
    /// Fraction of the SUV charge carried by the L_d phase.
    pub partition_fraction: f64,
    /// Use `σ / (2 ε_r ε₀)` instead of `σ / (2 ε₀)`.
    pub field_includes_eps_r: bool,
    /// `c` threshold separating the two phases.
    pub phase_threshold: f64,
    /// Converts the physical force density to model units.
    pub force_scale: f64,
}

impl Default for ElectrostaticParams {
    fn default() -> Self {
        Self {
            zeta_guv: -0.010,
            zeta_suv: 0.010,
            kappa: 10.0 / 7.0,
            x_slip: 0.24,
            eps_r: 80.0,
            eps0: 8.85e-12,
            partition_fraction: 0.6715,
            field_includes_eps_r: false,
            phase_threshold: 0.5,
            force_scale: 1.0,
        }
    }
}

impl ElectrostaticParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (k, v) in [
            ("electrostatics.kappa", self.kappa),
            ("electrostatics.x_slip", self.x_slip),
            ("electrostatics.eps_r", self.eps_r),
            ("electrostatics.eps0", self.eps0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{k}: must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.partition_fraction) {
            errs.push(format!(
                "electrostatics.partition_fraction: must lie in [0, 1], got {}",
                self.partition_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.phase_threshold) {
            errs.push(format!(
                "electrostatics.phase_threshold: must lie in [0, 1], got {}",
                self.phase_threshold
            ));
        }
        for (k, v) in [("electrostatics.zeta_guv", self.zeta_guv), ("electrostatics.zeta_suv", self.zeta_suv)] {
            if !(v.abs() < 0.2) {
                errs.push(format!("{k}: |zeta| must be below 0.2 V, got {v}"));
            }
        }
        if !(self.force_scale >= 0.0 && self.force_scale.is_finite()) {
            errs.push(format!("electrostatics.force_scale: must be non-negative, got {}", self.force_scale));
        }
        errs
    }
}

/// Linearized Grahame relation `σ = ε_r ε₀ κ ζ / exp(-κ x)` in C/m².
pub fn grahame_sigma(zeta: f64, p: &ElectrostaticParams) -> Result<f64> {
    if !(zeta.abs() < 0.2) {
        return Err(Error::Config(vec![format!(
            "zeta potential {zeta} V is outside the low-potential regime (|zeta| < 0.2 V)"
        )]));
    }
    let kappa_m = p.kappa * 1e9;
    let psi0 = zeta / (-p.kappa * p.x_slip).exp();
    Ok(p.eps_r * p.eps0 * kappa_m * psi0)
}

/// Field magnitude of a uniformly charged plane, in V/m.
pub fn electric_field(sigma: f64, p: &ElectrostaticParams) -> f64 {
    let perm = if p.field_includes_eps_r { p.eps_r * p.eps0 } else { p.eps0 };
    sigma / (2.0 * perm)
}

/// Per-point force densities for a charged vesicle above a charged plane
/// `z = const` below it.
#[derive(Debug, Clone)]
pub struct ExternalForce {
    pub forces: Vec<Vec3>,
    pub total_charge: f64,
    pub field: f64,
    /// Area carrying the L_d share (`c <= threshold`).
    pub ld_area: f64,
    pub redistributed: bool,
}

/// Spreads the SUV charge `σ_suv · area` over the surface, a share
/// `partition_fraction` uniformly on `{c <= threshold}` and the remainder
/// on `{c > threshold}`, and multiplies by the plane field.
///
/// `c` and `weights` are per surface quadrature point.
pub fn build_external_force(c: &[f64], weights: &[f64], p: &ElectrostaticParams) -> Result<ExternalForce> {
    let sigma_suv = grahame_sigma(p.zeta_suv, p)?;
    let sigma_guv = grahame_sigma(p.zeta_guv, p)?;
    let field = electric_field(sigma_guv, p);
    let area: f64 = weights.iter().sum();
    let total_charge = sigma_suv * area;
    let ld_area: f64 = c
        .iter()
        .zip(weights)
        .filter(|(c, _)| **c <= p.phase_threshold)
        .map(|(_, w)| w)
        .sum();
    let lo_area = area - ld_area;
    let f = p.partition_fraction;
    let redistributed = ld_area <= 0.0 || lo_area <= 0.0;
    let (q_ld, q_lo) = if redistributed {
        if f > 0.0 && f < 1.0 {
            log::warn!("one phase has zero area; spreading its charge share over the whole surface");
        }
        (total_charge / area, total_charge / area)
    } else {
        (f * total_charge / ld_area, (1.0 - f) * total_charge / lo_area)
    };
    // The plane lies below; a field of sign(σ_guv) points away from it.
    let scale = p.force_scale * field;
    let forces = c
        .iter()
        .map(|&ci| {
            let q = if ci <= p.phase_threshold { q_ld } else { q_lo };
            Vec3::z() * (scale * q)
        })
        .collect();
    Ok(ExternalForce {
        forces,
        total_charge,
        field,
        ld_area,
        redistributed,
    })
}
