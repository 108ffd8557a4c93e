#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracefem::assembly::*;
use tracefem::fe_space::{FEFunction, FESpace, Rank};
use tracefem::geometry::{ActiveMesh, BackgroundMesh, BoundingBox, LevelSetSurface};
use tracefem::physics::MaterialParams;
use tracefem::{Mat3, Vec3};

pub fn sphere_mesh(n: usize, half: f64, center: Vec3) -> Arc<ActiveMesh> {
    let bg = BackgroundMesh::build(BoundingBox::cube(half), n).unwrap();
    Arc::new(ActiveMesh::build(bg, LevelSetSurface::sphere(center, 1.0)).unwrap())
}

fn monomials(degree: usize, x: &Vec3) -> (Vec<f64>, Vec<Vec3>) {
    let (a, b, c) = (x.x, x.y, x.z);
    let mut v = vec![1.0, a, b, c];
    let mut g = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
    if degree == 2 {
        v.extend([a * a, b * b, c * c, a * b, a * c, b * c]);
        g.extend([
            Vec3::new(2.0 * a, 0.0, 0.0),
            Vec3::new(0.0, 2.0 * b, 0.0),
            Vec3::new(0.0, 0.0, 2.0 * c),
            Vec3::new(b, a, 0.0),
            Vec3::new(c, 0.0, a),
            Vec3::new(0.0, c, b),
        ]);
    }
    (v, g)
}

/// Polynomial on one tet interpolating the nodal values, built from the
/// monomial basis; independent of the library's shape functions.
pub struct LocalPoly {
    degree: usize,
    /// Columns: monomial coefficients per interpolated scalar.
    coeffs: DMatrix<f64>,
}

impl LocalPoly {
    pub fn new(space: &FESpace, e: usize, fields: &[&FEFunction]) -> Self {
        let nodes = space.nodes(e);
        let n = nodes.len();
        let vander = DMatrix::from_fn(n, n, |i, k| monomials(space.degree, &space.node_coords[nodes[i]]).0[k]);
        let lu = vander.lu();
        let mut cols = Vec::new();
        for f in fields {
            let comps = f.space.rank.components();
            for a in 0..comps {
                let rhs = DVector::from_fn(n, |i, _| f.coefficients[comps * nodes[i] + a]);
                cols.push(lu.solve(&rhs).expect("unisolvent nodes"));
            }
        }
        Self {
            degree: space.degree,
            coeffs: DMatrix::from_columns(&cols),
        }
    }

    /// Value and gradient of interpolated scalar `k`.
    pub fn eval(&self, k: usize, x: &Vec3) -> (f64, Vec3) {
        let (v, g) = monomials(self.degree, x);
        let col = self.coeffs.column(k);
        let mut val = 0.0;
        let mut grad = Vec3::zeros();
        for m in 0..v.len() {
            val += col[m] * v[m];
            grad += g[m] * col[m];
        }
        (val, grad)
    }

    /// Value and ambient Jacobian `J[a][b] = ∂_b u_a` of the vector stored at `k..k+3`.
    pub fn eval_vec(&self, k: usize, x: &Vec3) -> (Vec3, Mat3) {
        let mut v = Vec3::zeros();
        let mut j = Mat3::zeros();
        for a in 0..3 {
            let (va, ga) = self.eval(k + a, x);
            v[a] = va;
            j.set_row(a, &ga.transpose());
        }
        (v, j)
    }
}

/// Normal of the P1 level-set interpolant on active tet `e`.
pub fn discrete_normal(mesh: &ActiveMesh, e: usize) -> Vec3 {
    let t = &mesh.tets[e];
    let m = DMatrix::from_fn(4, 4, |i, k| monomials(1, &t.vertices[i]).0[k]);
    let rhs = DVector::from_fn(4, |i, _| mesh.level_set[t.vertex_ids[i]]);
    let c = m.lu().solve(&rhs).unwrap();
    Vec3::new(c[1], c[2], c[3]).normalize()
}

pub fn projector(n: &Vec3) -> Mat3 {
    Mat3::identity() - n * n.transpose()
}

pub fn random_fn(space: &Arc<FESpace>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> FEFunction {
    let v = (0..space.n_dofs()).map(|_| rng.random_range(lo..hi)).collect();
    FEFunction::new(space.clone(), v)
}

/// Relative deviation of an assembled quantity from its oracle, scaled by
/// the integral of the absolute integrand.
pub fn rel(assembled: f64, oracle: f64, scale: f64) -> f64 {
    (assembled - oracle).abs() / scale.max(oracle.abs()).max(f64::MIN_POSITIVE)
}

/// `Σ_q w_q g(e, x_q, n_h)` over the surface quadrature, returning the sum
/// and the sum of absolute values.
pub fn surface_sum(mesh: &ActiveMesh, mut g: impl FnMut(usize, usize, &Vec3, &Vec3) -> f64) -> (f64, f64) {
    let normals: Vec<Vec3> = (0..mesh.tets.len()).map(|e| discrete_normal(mesh, e)).collect();
    let (mut s, mut a) = (0.0, 0.0);
    for (q, qp) in mesh.surface_qp.iter().enumerate() {
        let v = qp.weight * g(qp.owner, q, &qp.x, &normals[qp.owner]);
        s += v;
        a += v.abs();
    }
    (s, a)
}

pub fn volume_sum(mesh: &ActiveMesh, mut g: impl FnMut(usize, &Vec3, &Vec3) -> f64) -> (f64, f64) {
    let normals: Vec<Vec3> = (0..mesh.tets.len()).map(|e| discrete_normal(mesh, e)).collect();
    let (mut s, mut a) = (0.0, 0.0);
    for qp in &mesh.volume_qp {
        let v = qp.weight * g(qp.owner, &qp.x, &normals[qp.owner]);
        s += v;
        a += v.abs();
    }
    (s, a)
}

/// Cache of per-element interpolants for a fixed list of fields.
pub struct Polys(pub Vec<LocalPoly>);

impl Polys {
    pub fn new(space: &FESpace, fields: &[&FEFunction]) -> Self {
        Self((0..space.n_elements()).map(|e| LocalPoly::new(space, e, fields)).collect())
    }
}

/// Largest relative deviation per form over `pairs` random field pairs on
/// the sphere mesh with `n` cells per axis.
pub fn form_oracle_suite(n: usize, pairs: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mesh = sphere_mesh(n, 1.5, Vec3::new(0.013, -0.021, 0.007));
    let s1 = Arc::new(FESpace::scalar(mesh.clone(), 1).unwrap());
    let v2 = Arc::new(FESpace::vector(mesh.clone(), 2).unwrap());
    let mat = MaterialParams {
        mobility: tracefem::physics::MobilityKind::Degenerate,
        ..MaterialParams::default()
    };
    let fp = FormParams::new(mesh.h, mat.eps, mat.sigma_gamma, 1.0);
    let surface = mesh.surface.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Vec<(&'static str, f64)> = Vec::new();
    let mut record = |name: &'static str, r: f64| match worst.iter_mut().find(|w| w.0 == name) {
        Some(w) => w.1 = w.1.max(r),
        None => worst.push((name, r)),
    };
    let nq = mesh.surface_qp.len();

    let s_s = assemble_normal_volume_stab(&s1);
    let s_v = assemble_normal_volume_stab(&v2);
    let mass = assemble_mass(&s1);
    let a_c = assemble_a_c(&s1, &fp);
    let lb = assemble_laplace_beltrami(&s1, fp.rho_s);
    let b = assemble_b(&v2, &s1);
    let sp = assemble_pressure_stab(&s1, &fp);

    for _ in 0..pairs {
        let u = random_fn(&s1, &mut rng, -1.0, 1.0);
        let v = random_fn(&s1, &mut rng, -1.0, 1.0);
        let c = random_fn(&s1, &mut rng, -0.1, 1.1);
        let mu = random_fn(&s1, &mut rng, -1.0, 1.0);
        let uu = random_fn(&v2, &mut rng, -1.0, 1.0);
        let vv = random_fn(&v2, &mut rng, -1.0, 1.0);
        let ww = random_fn(&v2, &mut rng, -1.0, 1.0);
        let k: Vec<f64> = (0..nq).map(|_| rng.random_range(0.5..2.0)).collect();
        let ps = Polys::new(&s1, &[&u, &v, &c, &mu]);
        let pv = Polys::new(&v2, &[&uu, &vv, &ww]);
        let ev = |e: usize, i: usize, x: &Vec3| ps.0[e].eval(i, x);
        let evv = |e: usize, i: usize, x: &Vec3| pv.0[e].eval_vec(3 * i, x);

        // scalar surface forms
        let (o, sc) = surface_sum(&mesh, |e, _, x, _| ev(e, 0, x).0 * ev(e, 1, x).0);
        record("mass", rel(mass.bilinear(&v.coefficients, &u.coefficients), o, sc));

        let stiff = assemble_surface_stiffness(&s1, Some(&k));
        let (o, sc) = surface_sum(&mesh, |e, q, x, n| {
            let p = projector(n);
            k[q] * (p * ev(e, 0, x).1).dot(&(p * ev(e, 1, x).1))
        });
        record("surface_stiffness", rel(stiff.bilinear(&v.coefficients, &u.coefficients), o, sc));

        let (o, sc) = volume_sum(&mesh, |e, x, n| n.dot(&ev(e, 0, x).1) * n.dot(&ev(e, 1, x).1));
        record("normal_volume_stab", rel(s_s.bilinear(&v.coefficients, &u.coefficients), o, sc));
        record("pressure_stab", rel(sp.bilinear(&v.coefficients, &u.coefficients), fp.beta_p * o, fp.beta_p * sc));
        let stab_uv = (o, sc);

        let (o, sc) = surface_sum(&mesh, |e, _, x, n| {
            let p = projector(n);
            let (a, ga) = ev(e, 0, x);
            let (bv, gb) = ev(e, 1, x);
            (p * ga).dot(&(p * gb)) + a * bv
        });
        record(
            "laplace_beltrami",
            rel(lb.bilinear(&v.coefficients, &u.coefficients), o + fp.rho_s * stab_uv.0, sc + fp.rho_s * stab_uv.1),
        );

        let (o, sc) = surface_sum(&mesh, |e, _, x, n| {
            let p = projector(n);
            fp.eps * (p * ev(e, 0, x).1).dot(&(p * ev(e, 1, x).1))
        });
        record(
            "a_c",
            rel(a_c.bilinear(&v.coefficients, &u.coefficients), o + fp.tau_c * stab_uv.0, sc + fp.tau_c * stab_uv.1),
        );

        let a_mu = assemble_a_mu(&c, &mat, &fp).unwrap();
        let (o, sc) = surface_sum(&mesh, |e, _, x, n| {
            let p = projector(n);
            let cc = ev(e, 2, x).0.clamp(0.0, 1.0);
            mat.diffusivity * cc * (1.0 - cc) * (p * ev(e, 0, x).1).dot(&(p * ev(e, 1, x).1))
        });
        record(
            "a_mu",
            rel(a_mu.bilinear(&v.coefficients, &u.coefficients), o + fp.tau_mu * stab_uv.0, sc + fp.tau_mu * stab_uv.1),
        );

        // vector forms
        let pm = assemble_projected_mass(&v2, &k);
        let (o, sc) = surface_sum(&mesh, |e, q, x, n| {
            let p = projector(n);
            k[q] * (p * evv(e, 0, x).0).dot(&(p * evv(e, 1, x).0))
        });
        record("projected_mass", rel(pm.bilinear(&vv.coefficients, &uu.coefficients), o, sc));

        let (ov, scv) = volume_sum(&mesh, |e, x, n| {
            let (_, ju) = evv(e, 0, x);
            let (_, jv) = evv(e, 1, x);
            (ju * n).dot(&(jv * n))
        });
        record("normal_volume_stab_vector", rel(s_v.bilinear(&vv.coefficients, &uu.coefficients), ov, scv));

        let strain = |p: &Mat3, j: &Mat3| {
            let c = p * j * p;
            (c + c.transpose()) * 0.5
        };
        let vp = assemble_viscous_penalty(&v2, &k, &fp);
        let (o, sc) = surface_sum(&mesh, |e, q, x, n| {
            let p = projector(n);
            let (u_, ju) = evv(e, 0, x);
            let (v_, jv) = evv(e, 1, x);
            let ne = surface.normal(x);
            2.0 * k[q] * strain(&p, &ju).component_mul(&strain(&p, &jv)).sum() + fp.tau * ne.dot(&u_) * ne.dot(&v_)
        });
        record("viscous_penalty", rel(vp.bilinear(&vv.coefficients, &uu.coefficients), o, sc));
        let va = assemble_vector_a(&v2, &k, &fp);
        record(
            "vector_a",
            rel(va.bilinear(&vv.coefficients, &uu.coefficients), o + fp.beta_u * ov, sc + fp.beta_u * scv),
        );

        let rho: Vec<f64> = (0..nq).map(|_| rng.random_range(0.5..2.0)).collect();
        let rho_hat: Vec<f64> = (0..nq).map(|_| rng.random_range(-1.0..1.0)).collect();
        let conv = assemble_convection(&v2, &rho, &rho_hat, &ww);
        let (o, sc) = surface_sum(&mesh, |e, q, x, n| {
            let p = projector(n);
            let (u_, ju) = evv(e, 0, x);
            let (v_, _) = evv(e, 1, x);
            let (w_, jw) = evv(e, 2, x);
            let div = (p * jw).trace();
            rho[q] * (p * v_).dot(&(p * ju * p * w_)) + 0.5 * rho_hat[q] * div * (p * u_).dot(&(p * v_))
        });
        record("convection", rel(conv.bilinear(&vv.coefficients, &uu.coefficients), o, sc));

        let tf = assemble_theta_flux_lhs(&v2, &c, &mu, &mat);
        let (o, sc) = surface_sum(&mesh, |e, _, x, n| {
            let p = projector(n);
            let (cc, gc) = ev(e, 2, x);
            let gmu = p * ev(e, 3, x).1;
            let (u_, ju) = evv(e, 0, x);
            let (v_, _) = evv(e, 1, x);
            let th2 = mat.theta_sq(cc);
            let r2 = mat.rho_smooth_second(cc);
            -mat.mobility(cc)
                * (th2 * (p * v_).dot(&(p * ju * gmu)) + 0.5 * r2 * (p * gc).dot(&gmu) * (p * u_).dot(&(p * v_)))
        });
        record("theta_flux", rel(tf.bilinear(&vv.coefficients, &uu.coefficients), o, sc));

        let (o, sc) = surface_sum(&mesh, |e, _, x, n| {
            let p = projector(n);
            evv(e, 0, x).0.dot(&(p * ev(e, 1, x).1))
        });
        record("b", rel(b.bilinear(&v.coefficients, &uu.coefficients), o, sc));

        let t = assemble_ch_transport(&s1, &ww);
        let (o, sc) = surface_sum(&mesh, |e, _, x, n| {
            let p = projector(n);
            -ev(e, 0, x).0 * evv(e, 2, x).0.dot(&(p * ev(e, 1, x).1))
        });
        record("ch_transport", rel(t.bilinear(&v.coefficients, &u.coefficients), o, sc));

        let lt = assemble_line_tension_load(&v2, &c, &mu, mat.sigma_gamma);
        let (o, sc) = surface_sum(&mesh, |e, _, x, n| {
            let p = projector(n);
            -mat.sigma_gamma * ev(e, 2, x).0 * (p * ev(e, 3, x).1).dot(&evv(e, 1, x).0)
        });
        record("line_tension_load", rel(tracefem::sparse::dot(&lt, &vv.coefficients), o, sc));

        let f: Vec<Vec3> = (0..nq).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
        let fl = assemble_vector_load(&v2, &f);
        let (o, sc) = surface_sum(&mesh, |e, q, x, _| f[q].dot(&evv(e, 1, x).0));
        record("vector_load", rel(tracefem::sparse::dot(&fl, &vv.coefficients), o, sc));

        let sl = assemble_scalar_load(&s1, &k);
        let (o, sc) = surface_sum(&mesh, |e, q, x, _| k[q] * ev(e, 1, x).0);
        record("scalar_load", rel(tracefem::sparse::dot(&sl, &v.coefficients), o, sc));
    }
    assert_eq!(s1.rank, Rank::Scalar);
    worst
}
