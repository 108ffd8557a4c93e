//! Bilinear forms and load vectors on Γ_h and the active band ω_h.
//!
//! Coefficients that vary in space are passed as one value per surface
//! quadrature point (`ActiveMesh::surface_qp` order).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fe_space::{FEFunction, FESpace, Rank};
use crate::physics::MaterialParams;
use crate::sparse::{Assembler, Pattern, SparseMatrix};
use crate::{Mat3, Vec3};

/// Stabilization and penalty parameters tied to the mesh size.
#[derive(Debug, Clone, PartialEq)]
pub struct FormParams {
    pub h: f64,
    pub eps: f64,
    pub tau_mu: f64,
    pub tau_c: f64,
    /// Tangential penalty.
    pub tau: f64,
    pub beta_p: f64,
    pub beta_u: f64,
    /// Normal stabilization weight of the Laplace-Beltrami problem.
    pub rho_s: f64,
    pub gamma_c: f64,
    pub sigma_gamma: f64,
}

impl FormParams {
    pub fn new(h: f64, eps: f64, sigma_gamma: f64, gamma_c: f64) -> Self {
        Self {
            h,
            eps,
            tau_mu: h,
            tau_c: eps / h,
            tau: h.powi(-2),
            beta_p: h,
            beta_u: 1.0 / h,
            rho_s: h,
            gamma_c,
            sigma_gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            ("h", self.h),
            ("eps", self.eps),
            ("tau_mu", self.tau_mu),
            ("tau_c", self.tau_c),
            ("tau", self.tau),
            ("beta_p", self.beta_p),
            ("beta_u", self.beta_u),
            ("rho_s", self.rho_s),
            ("gamma_c", self.gamma_c),
        ];
        let errs: Vec<String> = vals
            .iter()
            .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
            .map(|(k, v)| format!("form parameter {k} must be positive, got {v}"))
            .collect();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Basis data of one space at one quadrature point.
struct Basis<'a> {
    phi: &'a [f64],
    /// `P_h ∇φ`.
    sgrad: &'a [Vec3],
}

struct Qp<'a> {
    q: usize,
    w: f64,
    x: Vec3,
    p: &'a Mat3,
}

fn pattern_for(rows: &FESpace, cols: &FESpace) -> Arc<Pattern> {
    if std::ptr::eq(rows, cols) {
        return rows.pattern();
    }
    Arc::new(Pattern::from_elements(
        rows.n_dofs(),
        cols.n_dofs(),
        rows.n_elements(),
        |e| rows.element_dofs(e),
        |e| cols.element_dofs(e),
    ))
}

fn local_size(s: &FESpace) -> usize {
    s.n_local * s.rank.components()
}

/// Element loop over surface quadrature with a dense local block.
fn surface_form(
    rows: &FESpace,
    cols: &FESpace,
    symmetric: bool,
    mut kernel: impl FnMut(&Qp, &Basis, &Basis, &mut [f64]),
) -> SparseMatrix {
    assert!(Arc::ptr_eq(&rows.mesh, &cols.mesh), "spaces live on different meshes");
    let pattern = pattern_for(rows, cols);
    let mut asm = Assembler::new(&pattern);
    let mesh = &rows.mesh;
    let (nr, nc) = (local_size(rows), local_size(cols));
    let mut local = vec![0.0; nr * nc];
    let mut sg_r = vec![Vec3::zeros(); rows.n_local];
    let mut sg_c = vec![Vec3::zeros(); cols.n_local];
    for e in 0..rows.n_elements() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let p = &mesh.tets[e].projector;
        let mut any = false;
        for q in rows.surface_qp_indices(e) {
            any = true;
            let qp = &mesh.surface_qp[q];
            let gr = rows.surface_tab.gradients(q);
            let gc = cols.surface_tab.gradients(q);
            for (s, g) in sg_r.iter_mut().zip(gr) {
                *s = p * g;
            }
            for (s, g) in sg_c.iter_mut().zip(gc) {
                *s = p * g;
            }
            let br = Basis {
                phi: rows.surface_tab.values(q),
                sgrad: &sg_r,
            };
            let bc = Basis {
                phi: cols.surface_tab.values(q),
                sgrad: &sg_c,
            };
            kernel(
                &Qp {
                    q,
                    w: qp.weight,
                    x: qp.x,
                    p,
                },
                &br,
                &bc,
                &mut local,
            );
        }
        if any {
            asm.add(&rows.element_dofs(e), &cols.element_dofs(e), &local);
        }
    }
    asm.finish(symmetric)
}

/// Element loop over surface quadrature producing a load vector.
fn surface_load(space: &FESpace, mut kernel: impl FnMut(&Qp, &Basis, &mut [f64])) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.n_dofs()];
    let n = local_size(space);
    let mut local = vec![0.0; n];
    let mut sg = vec![Vec3::zeros(); space.n_local];
    for e in 0..space.n_elements() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let p = &mesh.tets[e].projector;
        for q in space.surface_qp_indices(e) {
            let qp = &mesh.surface_qp[q];
            let g = space.surface_tab.gradients(q);
            for (s, gi) in sg.iter_mut().zip(g) {
                *s = p * gi;
            }
            let b = Basis {
                phi: space.surface_tab.values(q),
                sgrad: &sg,
            };
            kernel(
                &Qp {
                    q,
                    w: qp.weight,
                    x: qp.x,
                    p,
                },
                &b,
                &mut local,
            );
        }
        for (d, v) in space.element_dofs(e).into_iter().zip(&local) {
            out[d] += v;
        }
    }
    out
}

fn check_qp_len(space: &FESpace, v: &[f64], what: &str) {
    assert_eq!(
        v.len(),
        space.mesh.surface_qp.len(),
        "{what}: expected one value per surface quadrature point"
    );
}

/// `∫_Γh k φᵢ φⱼ`; `coeff = None` means `k = 1`. Scalar spaces only.
pub fn assemble_weighted_mass(space: &FESpace, coeff: Option<&[f64]>) -> SparseMatrix {
    assert_eq!(space.rank, Rank::Scalar);
    if let Some(k) = coeff {
        check_qp_len(space, k, "mass coefficient");
    }
    let n = space.n_local;
    surface_form(space, space, true, |qp, b, _, local| {
        let wk = qp.w * coeff.map_or(1.0, |k| k[qp.q]);
        for i in 0..n {
            let wi = wk * b.phi[i];
            for j in 0..n {
                local[i * n + j] += wi * b.phi[j];
            }
        }
    })
}

pub fn assemble_mass(space: &FESpace) -> SparseMatrix {
    assemble_weighted_mass(space, None)
}

/// `∫_Γh k ∇_Γφᵢ · ∇_Γφⱼ`.
pub fn assemble_surface_stiffness(space: &FESpace, coeff: Option<&[f64]>) -> SparseMatrix {
    assert_eq!(space.rank, Rank::Scalar);
    if let Some(k) = coeff {
        check_qp_len(space, k, "stiffness coefficient");
    }
    let n = space.n_local;
    surface_form(space, space, true, |qp, b, _, local| {
        let wk = qp.w * coeff.map_or(1.0, |k| k[qp.q]);
        for i in 0..n {
            let gi = b.sgrad[i] * wk;
            for j in 0..n {
                local[i * n + j] += gi.dot(&b.sgrad[j]);
            }
        }
    })
}

/// `s_h(u, v) = ∫_ωh (n_h·∇u)(n_h·∇v)`; vector spaces get it per component.
pub fn assemble_normal_volume_stab(space: &FESpace) -> SparseMatrix {
    let mesh = &space.mesh;
    let pattern = space.pattern();
    let mut asm = Assembler::new(&pattern);
    let n = space.n_local;
    let nc = space.rank.components();
    let ns = n * nc;
    let mut local = vec![0.0; ns * ns];
    let mut dn = vec![0.0; n];
    for e in 0..space.n_elements() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let normal = mesh.tets[e].normal;
        for q in space.volume_qp_indices(e) {
            let w = mesh.volume_qp[q].weight;
            for (d, g) in dn.iter_mut().zip(space.volume_tab.gradients(q)) {
                *d = normal.dot(g);
            }
            for i in 0..n {
                for j in 0..n {
                    let v = w * dn[i] * dn[j];
                    for a in 0..nc {
                        local[(i * nc + a) * ns + j * nc + a] += v;
                    }
                }
            }
        }
        let dofs = space.element_dofs(e);
        asm.add(&dofs, &dofs, &local);
    }
    asm.finish(true)
}

/// `(∇_Γu, ∇_Γv) + (u, v) + ρ_s s_h(u, v)`.
pub fn assemble_laplace_beltrami(space: &FESpace, rho_s: f64) -> SparseMatrix {
    let mut a = assemble_surface_stiffness(space, None);
    a.add_scaled(1.0, &assemble_mass(space));
    a.add_scaled(rho_s, &assemble_normal_volume_stab(space));
    a
}

/// `a_μ(μ, v) = ∫ M(c)∇_Γμ·∇_Γv + τ_μ s_h(μ, v)`, with `s_h` supplied
/// (it does not depend on `c`).
pub fn assemble_a_mu_with(c: &FEFunction, mat: &MaterialParams, params: &FormParams, stab: &SparseMatrix) -> Result<SparseMatrix> {
    let m: Vec<f64> = c.eval_trace().values.iter().map(|&v| mat.mobility(v)).collect();
    if let Some((q, v)) = m.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Solver(format!("negative mobility {v} at surface quadrature point {q}")));
    }
    let mut a = assemble_surface_stiffness(&c.space, Some(&m));
    a.add_scaled(params.tau_mu, stab);
    Ok(a)
}

pub fn assemble_a_mu(c: &FEFunction, mat: &MaterialParams, params: &FormParams) -> Result<SparseMatrix> {
    assemble_a_mu_with(c, mat, params, &assemble_normal_volume_stab(&c.space))
}

/// `a_c(c, g) = ε ∫ ∇_Γc·∇_Γg + τ_c s_h(c, g)`.
pub fn assemble_a_c(space: &FESpace, params: &FormParams) -> SparseMatrix {
    let mut a = assemble_surface_stiffness(space, None);
    a.scale(params.eps);
    a.add_scaled(params.tau_c, &assemble_normal_volume_stab(space));
    a
}

fn assert_vector(space: &FESpace) {
    assert_eq!(space.rank, Rank::Vector, "vector space expected");
}

/// `∫ k ū·v̄` (entries `k φᵢ φⱼ P_ab`).
pub fn assemble_projected_mass(space: &FESpace, coeff: &[f64]) -> SparseMatrix {
    assert_vector(space);
    check_qp_len(space, coeff, "projected mass coefficient");
    let n = space.n_local;
    let ns = 3 * n;
    surface_form(space, space, true, |qp, b, _, local| {
        let wk = qp.w * coeff[qp.q];
        for i in 0..n {
            for j in 0..n {
                let v = wk * b.phi[i] * b.phi[j];
                for a in 0..3 {
                    for bb in 0..3 {
                        local[(3 * i + a) * ns + 3 * j + bb] += v * qp.p[(a, bb)];
                    }
                }
            }
        }
    })
}

/// Viscous part `∫ 2η E_s(ū):E_s(v̄)` plus the tangential penalty
/// `τ ∫ (n·u)(n·v)` with the exact surface normal.
pub fn assemble_viscous_penalty(space: &FESpace, eta: &[f64], params: &FormParams) -> SparseMatrix {
    assert_vector(space);
    check_qp_len(space, eta, "viscosity");
    let n = space.n_local;
    let ns = 3 * n;
    let surface = &space.mesh.surface;
    surface_form(space, space, true, |qp, b, _, local| {
        let we = qp.w * eta[qp.q];
        let wt = qp.w * params.tau;
        let nrm = surface.normal(&qp.x);
        for i in 0..n {
            let gi = b.sgrad[i];
            for j in 0..n {
                let gj = b.sgrad[j];
                let gg = gi.dot(&gj);
                let pp = wt * b.phi[i] * b.phi[j];
                for a in 0..3 {
                    let row = (3 * i + a) * ns + 3 * j;
                    for bb in 0..3 {
                        local[row + bb] += we * (qp.p[(a, bb)] * gg + gj[a] * gi[bb]) + pp * nrm[a] * nrm[bb];
                    }
                }
            }
        }
    })
}

/// `a(η; u, v)`; `stab` is the componentwise `s_h` on the velocity space.
pub fn assemble_vector_a_with(space: &FESpace, eta: &[f64], params: &FormParams, stab: &SparseMatrix) -> SparseMatrix {
    let mut a = assemble_viscous_penalty(space, eta, params);
    a.add_scaled(params.beta_u, stab);
    a
}

pub fn assemble_vector_a(space: &FESpace, eta: &[f64], params: &FormParams) -> SparseMatrix {
    assemble_vector_a_with(space, eta, params, &assemble_normal_volume_stab(space))
}

/// `c(ρ; w, u, v) = ∫ ρ vᵀ(∇_Γū)w + ½ ∫ ρ̂ (div_Γ w̄) ū·v̄`.
pub fn assemble_convection(space: &FESpace, rho: &[f64], rho_hat: &[f64], wind: &FEFunction) -> SparseMatrix {
    assert_vector(space);
    check_qp_len(space, rho, "density");
    check_qp_len(space, rho_hat, "modified density");
    let n = space.n_local;
    let ns = 3 * n;
    surface_form(space, space, false, |qp, b, _, local| {
        let (w, gw) = wind.surface_vector_value_grad(qp.q);
        if w.norm_squared() == 0.0 && gw.norm_squared() == 0.0 {
            return;
        }
        let div = (qp.p * gw).trace();
        let wr = qp.w * rho[qp.q];
        let wh = 0.5 * qp.w * rho_hat[qp.q] * div;
        for i in 0..n {
            for j in 0..n {
                let v = b.phi[i] * (wr * b.sgrad[j].dot(&w) + wh * b.phi[j]);
                if v == 0.0 {
                    continue;
                }
                for a in 0..3 {
                    for bb in 0..3 {
                        local[(3 * i + a) * ns + 3 * j + bb] += v * qp.p[(a, bb)];
                    }
                }
            }
        }
    })
}

/// `B` with `B[q_i, u_j] = b(φ_j, ψ_i) = ∫ φ_j · ∇_Γψ_i`; rows are
/// pressure dofs, columns velocity dofs.
pub fn assemble_b(velocity: &FESpace, pressure: &FESpace) -> SparseMatrix {
    assert_vector(velocity);
    assert_eq!(pressure.rank, Rank::Scalar);
    let np = pressure.n_local;
    let nv = velocity.n_local;
    let ns = 3 * nv;
    surface_form(pressure, velocity, false, |qp, bp, bv, local| {
        for i in 0..np {
            let g = bp.sgrad[i] * qp.w;
            for j in 0..nv {
                for a in 0..3 {
                    local[i * ns + 3 * j + a] += bv.phi[j] * g[a];
                }
            }
        }
    })
}

/// `s(p, q) = β_p s_h(p, q)`.
pub fn assemble_pressure_stab(pressure: &FESpace, params: &FormParams) -> SparseMatrix {
    let mut s = assemble_normal_volume_stab(pressure);
    s.scale(params.beta_p);
    s
}

/// Transport matrix `T[i, j] = -∫ φⱼ u·∇_Γφᵢ`, the action of
/// `-(u c, ∇_Γ v)` on the unknown `c`.
pub fn assemble_ch_transport(space: &FESpace, u: &FEFunction) -> SparseMatrix {
    assert_eq!(space.rank, Rank::Scalar);
    assert_vector(&u.space);
    let n = space.n_local;
    surface_form(space, space, false, |qp, b, _, local| {
        let (uq, _) = u.surface_vector_value_grad(qp.q);
        if uq.norm_squared() == 0.0 {
            return;
        }
        for i in 0..n {
            let ug = -qp.w * uq.dot(&b.sgrad[i]);
            for j in 0..n {
                local[i * n + j] += ug * b.phi[j];
            }
        }
    })
}

/// Diffusive momentum flux `M(∇_Γ(θū)∇_Γμ, θv)` as a matrix acting on
/// `u`, negated so that it can be added to the left-hand side.
pub fn assemble_theta_flux_lhs(space: &FESpace, c: &FEFunction, mu: &FEFunction, mat: &MaterialParams) -> SparseMatrix {
    assert_vector(space);
    if mat.density_contrast() == 0.0 {
        return space.pattern().zeros();
    }
    let ct = c.eval_trace();
    let mt = mu.eval_trace();
    let n = space.n_local;
    let ns = 3 * n;
    surface_form(space, space, false, |qp, b, _, local| {
        let cq = ct.values[qp.q];
        let gmu = mt.surface_gradients[qp.q];
        let mob = mat.mobility(cq);
        if mob == 0.0 || gmu.norm_squared() == 0.0 {
            return;
        }
        let w = -qp.w * mob;
        let th2 = mat.theta_sq(cq);
        let half_rpp = 0.5 * mat.rho_smooth_second(cq) * ct.surface_gradients[qp.q].dot(&gmu);
        for i in 0..n {
            for j in 0..n {
                let v = w * b.phi[i] * (th2 * b.sgrad[j].dot(&gmu) + half_rpp * b.phi[j]);
                for a in 0..3 {
                    for bb in 0..3 {
                        local[(3 * i + a) * ns + 3 * j + bb] += v * qp.p[(a, bb)];
                    }
                }
            }
        }
    })
}

/// `-(σ_γ c ∇_Γμ, v)`.
pub fn assemble_line_tension_load(space: &FESpace, c: &FEFunction, mu: &FEFunction, sigma_gamma: f64) -> Vec<f64> {
    assert_vector(space);
    let ct = c.eval_trace();
    let mt = mu.eval_trace();
    let n = space.n_local;
    surface_load(space, |qp, b, local| {
        let f = mt.surface_gradients[qp.q] * (-sigma_gamma * ct.values[qp.q] * qp.w);
        for i in 0..n {
            for a in 0..3 {
                local[3 * i + a] += b.phi[i] * f[a];
            }
        }
    })
}

/// `(f, v)` for a force density given per surface quadrature point.
pub fn assemble_vector_load(space: &FESpace, f: &[Vec3]) -> Vec<f64> {
    assert_vector(space);
    assert_eq!(f.len(), space.mesh.surface_qp.len());
    let n = space.n_local;
    surface_load(space, |qp, b, local| {
        let fq = f[qp.q] * qp.w;
        for i in 0..n {
            for a in 0..3 {
                local[3 * i + a] += b.phi[i] * fq[a];
            }
        }
    })
}

/// `(f, v)` for a scalar density given per surface quadrature point.
pub fn assemble_scalar_load(space: &FESpace, f: &[f64]) -> Vec<f64> {
    assert_eq!(space.rank, Rank::Scalar);
    check_qp_len(space, f, "load");
    let n = space.n_local;
    surface_load(space, |qp, b, local| {
        let fq = f[qp.q] * qp.w;
        for i in 0..n {
            local[i] += b.phi[i] * fq;
        }
    })
}

/// `(f, v)` for a function of position.
pub fn assemble_scalar_load_fn(space: &FESpace, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
    let vals: Vec<f64> = space.mesh.surface_qp.iter().map(|q| f(&q.x)).collect();
    assemble_scalar_load(space, &vals)
}

/// Values of a scalar FE function at the surface quadrature points.
pub fn qp_values(f: &FEFunction) -> Vec<f64> {
    f.eval_trace().values
}

/// Applies `law` to the values of `c` at the surface quadrature points.
pub fn qp_map(c: &FEFunction, law: impl Fn(f64) -> f64) -> Vec<f64> {
    qp_values(c).into_iter().map(law).collect()
}

/// Exported operator for debugging, in Matrix Market text format.
pub fn export_matrix(m: &SparseMatrix, dir: &std::path::Path, name: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    m.write_matrix_market(&dir.join(format!("{name}.mtx")))
}
