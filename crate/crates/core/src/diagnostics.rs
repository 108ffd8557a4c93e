//! Scalar observables: mass, domain perimeter, domain count, discrete
//! energy and tangentiality residual.

use crate::fe_space::FEFunction;
use crate::geometry::ActiveMesh;
use crate::physics::{f0, MaterialParams};
use crate::sparse::SparseMatrix;

/// `∫_Γh c`.
pub fn mass(c: &FEFunction) -> f64 {
    let m = &c.space.mesh;
    let mut acc = Vec::with_capacity(m.surface_qp.len());
    for (q, qp) in m.surface_qp.iter().enumerate() {
        acc.push(qp.weight * c.surface_value_grad(q).0);
    }
    pairwise_sum(&acc)
}

/// `p = 2π ∫_Γh ε |∇_Γ c|²`.
pub fn perimeter(c: &FEFunction, eps: f64) -> f64 {
    let tr = c.eval_trace();
    let terms: Vec<f64> = c
        .space
        .mesh
        .surface_qp
        .iter()
        .zip(&tr.surface_gradients)
        .map(|(qp, g)| qp.weight * eps * g.norm_squared())
        .collect();
    2.0 * std::f64::consts::PI * pairwise_sum(&terms)
}

/// Summation with a fixed binary tree, independent of thread count.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Mean of `c` over each surface triangle.
pub fn triangle_means(c: &FEFunction) -> Vec<f64> {
    let m = &c.space.mesh;
    (0..m.triangles.len())
        .map(|t| {
            let (a, b) = (m.tri_qp_offsets[t], m.tri_qp_offsets[t + 1]);
            let mut s = 0.0;
            let mut w = 0.0;
            for q in a..b {
                s += m.surface_qp[q].weight * c.surface_value_grad(q).0;
                w += m.surface_qp[q].weight;
            }
            s / w
        })
        .collect()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components of the marked triangles under edge adjacency,
/// ignoring components with fewer than `min_triangles` triangles.
pub fn count_components(mesh: &ActiveMesh, marked: &[bool], min_triangles: usize) -> usize {
    let adj = mesh.triangle_adjacency();
    let n = marked.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for t in 0..n {
        if !marked[t] {
            continue;
        }
        for &o in &adj[t] {
            if marked[o] {
                let (a, b) = (find(&mut parent, t), find(&mut parent, o));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut sizes = vec![0usize; n];
    for t in 0..n {
        if marked[t] {
            let r = find(&mut parent, t);
            sizes[r] += 1;
        }
    }
    sizes.iter().filter(|&&s| s > 0 && s >= min_triangles.max(1)).count()
}

/// Number of domains `{mean c > threshold}`.
pub fn count_domains(c: &FEFunction, threshold: f64, min_triangles: usize) -> usize {
    let marked: Vec<bool> = triangle_means(c).iter().map(|&v| v > threshold).collect();
    count_components(&c.space.mesh, &marked, min_triangles)
}

/// Number of domains of the phase occupying the smaller area.
pub fn count_minority_domains(c: &FEFunction, threshold: f64, min_triangles: usize) -> usize {
    let means = triangle_means(c);
    let m = &c.space.mesh;
    let above: f64 = means
        .iter()
        .zip(&m.triangles)
        .filter(|(v, _)| **v > threshold)
        .map(|(_, t)| t.area)
        .sum();
    let minority_above = above <= 0.5 * m.area();
    let marked: Vec<bool> = means.iter().map(|&v| (v > threshold) == minority_above).collect();
    count_components(m, &marked, min_triangles)
}

/// Energy parts of the discrete Lyapunov functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lyapunov {
    pub kinetic: f64,
    pub well: f64,
    pub gradient: f64,
    /// `ε⁻¹∫f₀(c)`.
    pub well_unscaled: f64,
}

impl Lyapunov {
    pub fn total(&self) -> f64 {
        self.kinetic + self.well + self.gradient
    }

    /// `½∫ρ|ū|² + s (ε⁻¹∫f₀ + ½ a_c(c, c))` with `s = σ_γ` (or 1 when
    /// `σ_γ = 0`), the energy obeying the discrete dissipation law of the
    /// decoupled scheme.
    pub fn scheme_energy(&self, sigma_gamma: f64) -> f64 {
        let (s, well) = if sigma_gamma > 0.0 {
            (sigma_gamma, self.well)
        } else {
            (1.0, self.well_unscaled)
        };
        0.5 * self.kinetic + well + 0.5 * s * self.gradient
    }
}

/// `∫ (ρ(c)|ū|² + (σ_γ/ε) f₀(c)) + a_c(c, c)`; `u = None` means a
/// fluid at rest.
pub fn lyapunov(c: &FEFunction, u: Option<&FEFunction>, mat: &MaterialParams, a_c: &SparseMatrix) -> Lyapunov {
    let m = &c.space.mesh;
    let mut kin = Vec::with_capacity(m.surface_qp.len());
    let mut well = Vec::with_capacity(m.surface_qp.len());
    for (q, qp) in m.surface_qp.iter().enumerate() {
        let cq = c.surface_value_grad(q).0;
        well.push(qp.weight / mat.eps * f0(cq));
        if let Some(u) = u {
            let (uq, _) = u.surface_vector_value_grad(q);
            let ub = m.tets[qp.owner].projector * uq;
            kin.push(qp.weight * mat.rho_smooth(cq) * ub.norm_squared());
        }
    }
    let well_unscaled = pairwise_sum(&well);
    Lyapunov {
        kinetic: pairwise_sum(&kin),
        well: mat.sigma_gamma * well_unscaled,
        gradient: a_c.bilinear(&c.coefficients, &c.coefficients),
        well_unscaled,
    }
}

/// `Δt (a(η; u, u) + a_μ(μ, μ) + s_h(p, p))` from assembled operators.
pub fn dissipation_increment(
    dt: f64,
    a_u: Option<(&SparseMatrix, &[f64])>,
    a_mu: (&SparseMatrix, &[f64]),
    s_p: Option<(&SparseMatrix, &[f64])>,
) -> f64 {
    let quad = |(m, x): (&SparseMatrix, &[f64])| m.bilinear(x, x);
    dt * (a_u.map_or(0.0, quad) + quad(a_mu) + s_p.map_or(0.0, quad))
}

/// `(∫ (u·n_h)² / area)^{1/2}`.
pub fn rms_normal_velocity(u: &FEFunction) -> f64 {
    let m = &u.space.mesh;
    let terms: Vec<f64> = m
        .surface_qp
        .iter()
        .enumerate()
        .map(|(q, qp)| {
            let (uq, _) = u.surface_vector_value_grad(q);
            qp.weight * m.tets[qp.owner].normal.dot(&uq).powi(2)
        })
        .collect();
    (pairwise_sum(&terms) / m.area()).sqrt()
}

/// `∫_Γh |E_s(u)|²` with `E_s(u) = ½ P(∇u + ∇uᵀ)P`.
pub fn strain_energy(u: &FEFunction) -> f64 {
    let m = &u.space.mesh;
    let tr = u.eval_vector_trace();
    let terms: Vec<f64> = m
        .surface_qp
        .iter()
        .zip(&tr.strain)
        .map(|(qp, e)| qp.weight * e.norm_squared())
        .collect();
    pairwise_sum(&terms)
}

/// Height above the surface center of the area-weighted centroid of
/// `{c <= threshold}`; `None` if that region is empty.
pub fn low_phase_centroid_height(c: &FEFunction, threshold: f64) -> Option<f64> {
    let m = &c.space.mesh;
    let center = m.surface.center();
    let mut area = 0.0;
    let mut moment = 0.0;
    for (q, qp) in m.surface_qp.iter().enumerate() {
        if c.surface_value_grad(q).0 <= threshold {
            area += qp.weight;
            moment += qp.weight * (qp.x.z - center.z);
        }
    }
    (area > 0.0).then(|| moment / area)
}

pub fn max_abs(c: &FEFunction) -> f64 {
    c.coefficients.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// One line of the diagnostics time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub lyapunov: f64,
    pub scheme_energy: f64,
    pub dissipation_increment: f64,
    pub perimeter: f64,
    pub domain_count: usize,
    pub max_abs_c: f64,
    pub rms_normal_velocity: f64,
    pub ch_iterations: usize,
    pub ns_iterations: usize,
}

impl DiagnosticsRow {
    pub const HEADER: [&'static str; 13] = [
        "step",
        "t",
        "dt",
        "mass",
        "lyapunov",
        "scheme_energy",
        "dissipation_increment",
        "perimeter",
        "domain_count",
        "max_abs_c",
        "rms_normal_velocity",
        "ch_iterations",
        "ns_iterations",
    ];

    /// Fields in header order, numbers with 17 significant digits.
    pub fn fields(&self) -> Vec<String> {
        let g = |x: f64| format!("{x:.16e}");
        vec![
            self.step.to_string(),
            g(self.t),
            g(self.dt),
            g(self.mass),
            g(self.lyapunov),
            g(self.scheme_energy),
            g(self.dissipation_increment),
            g(self.perimeter),
            self.domain_count.to_string(),
            g(self.max_abs_c),
            g(self.rms_normal_velocity),
            self.ch_iterations.to_string(),
            self.ns_iterations.to_string(),
        ]
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.dt,
            self.mass,
            self.lyapunov,
            self.scheme_energy,
            self.dissipation_increment,
            self.perimeter,
            self.max_abs_c,
            self.rms_normal_velocity,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}
