//! Trace finite element spaces: continuous piecewise polynomials on the
//! active tetrahedra, evaluated on Γ_h.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::ActiveMesh;
use crate::sparse::Pattern;
use crate::{Mat3, Vec3};

/// Barycentric tolerance for accepting a point as inside its owner tet.
pub const BARY_TOL: f64 = 1e-8;

/// Local edge ordering of the quadratic element.
pub const LOCAL_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
        }
    }
}

/// Shape function values at a barycentric point.
pub fn shape_values(degree: usize, b: &[f64; 4], out: &mut [f64]) {
    match degree {
        1 => out[..4].copy_from_slice(b),
        _ => {
            for i in 0..4 {
                out[i] = b[i] * (2.0 * b[i] - 1.0);
            }
            for (k, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
                out[4 + k] = 4.0 * b[i] * b[j];
            }
        }
    }
}

/// Shape function gradients at a barycentric point, given the constant
/// gradients of the barycentric coordinates.
pub fn shape_gradients(degree: usize, b: &[f64; 4], db: &[Vec3; 4], out: &mut [Vec3]) {
    match degree {
        1 => out[..4].copy_from_slice(db),
        _ => {
            for i in 0..4 {
                out[i] = db[i] * (4.0 * b[i] - 1.0);
            }
            for (k, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
                out[4 + k] = (db[i] * b[j] + db[j] * b[i]) * 4.0;
            }
        }
    }
}

/// Tabulated shape values and gradients at a list of quadrature points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_local: usize,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec3>,
}

impl Tabulation {
    #[inline]
    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_local..(q + 1) * self.n_local]
    }

    #[inline]
    pub fn gradients(&self, q: usize) -> &[Vec3] {
        &self.gradients[q * self.n_local..(q + 1) * self.n_local]
    }
}

/// Continuous Lagrange space of degree 1 or 2 on the active mesh.
#[derive(Debug, Clone)]
pub struct FESpace {
    pub mesh: Arc<ActiveMesh>,
    pub degree: usize,
    pub rank: Rank,
    /// Scalar node ids per active tet, `n_local` per element.
    pub element_nodes: Vec<usize>,
    pub n_local: usize,
    pub n_nodes: usize,
    pub node_coords: Vec<Vec3>,
    pub surface_tab: Tabulation,
    pub volume_tab: Tabulation,
    pattern: OnceLock<Arc<Pattern>>,
}

impl FESpace {
    pub fn new(mesh: Arc<ActiveMesh>, degree: usize, rank: Rank) -> Result<Self> {
        let n_local = match degree {
            1 => 4,
            2 => 10,
            d => return Err(Error::Unsupported(format!("finite element degree {d}"))),
        };
        let mut vertex_ids: HashMap<usize, usize> = HashMap::new();
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut node_coords = Vec::new();
        let mut element_nodes = Vec::with_capacity(mesh.tets.len() * n_local);
        let bg = &mesh.background;
        for tet in &mesh.tets {
            for &v in &tet.vertex_ids {
                let id = *vertex_ids.entry(v).or_insert_with(|| {
                    node_coords.push(bg.vertices[v]);
                    node_coords.len() - 1
                });
                element_nodes.push(id);
            }
            if degree == 2 {
                for &(i, j) in LOCAL_EDGES.iter() {
                    let (a, b) = (tet.vertex_ids[i], tet.vertex_ids[j]);
                    let key = (a.min(b), a.max(b));
                    let id = *edge_ids.entry(key).or_insert_with(|| {
                        node_coords.push((bg.vertices[a] + bg.vertices[b]) * 0.5);
                        node_coords.len() - 1
                    });
                    element_nodes.push(id);
                }
            }
        }
        let n_nodes = node_coords.len();
        let surface_tab = tabulate(&mesh, degree, n_local, &mesh.surface_qp)?;
        let volume_tab = tabulate(&mesh, degree, n_local, &mesh.volume_qp)?;
        Ok(Self {
            mesh,
            degree,
            rank,
            element_nodes,
            n_local,
            n_nodes,
            node_coords,
            surface_tab,
            volume_tab,
            pattern: OnceLock::new(),
        })
    }

    pub fn scalar(mesh: Arc<ActiveMesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, degree, Rank::Scalar)
    }

    pub fn vector(mesh: Arc<ActiveMesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, degree, Rank::Vector)
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.rank.components()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.tets.len()
    }

    #[inline]
    pub fn nodes(&self, element: usize) -> &[usize] {
        &self.element_nodes[element * self.n_local..(element + 1) * self.n_local]
    }

    /// Global dof ids of an element; vector spaces interleave components
    /// (`3 * node + component`).
    pub fn element_dofs(&self, element: usize) -> Vec<usize> {
        let nodes = self.nodes(element);
        match self.rank {
            Rank::Scalar => nodes.to_vec(),
            Rank::Vector => nodes.iter().flat_map(|&n| [3 * n, 3 * n + 1, 3 * n + 2]).collect(),
        }
    }

    /// The scalar space with the same degree on the same mesh.
    pub fn scalar_counterpart(&self) -> Self {
        let mut s = self.clone();
        s.rank = Rank::Scalar;
        s.pattern = OnceLock::new();
        s
    }

    /// Sparsity pattern of square operators on this space (cached).
    pub fn pattern(&self) -> Arc<Pattern> {
        self.pattern
            .get_or_init(|| {
                let n = self.n_dofs();
                Arc::new(Pattern::from_elements(n, n, self.n_elements(), |e| self.element_dofs(e), |e| self.element_dofs(e)))
            })
            .clone()
    }

    /// Global indices of the surface quadrature points owned by element `e`.
    pub fn surface_qp_indices(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let m = &self.mesh;
        m.tet_triangles[e]
            .iter()
            .flat_map(move |&t| m.tri_qp_offsets[t]..m.tri_qp_offsets[t + 1])
    }

    pub fn volume_qp_indices(&self, e: usize) -> std::ops::Range<usize> {
        self.mesh.tet_qp_offsets[e]..self.mesh.tet_qp_offsets[e + 1]
    }

    pub fn zero(self: &Arc<Self>) -> FEFunction {
        FEFunction::new(self.clone(), vec![0.0; self.n_dofs()])
    }

    pub fn constant(self: &Arc<Self>, value: f64) -> FEFunction {
        FEFunction::new(self.clone(), vec![value; self.n_dofs()])
    }

    /// Nodal interpolant of a scalar field.
    pub fn interpolate(self: &Arc<Self>, f: impl Fn(&Vec3) -> f64) -> FEFunction {
        assert_eq!(self.rank, Rank::Scalar, "interpolate needs a scalar space");
        let coefficients = self.node_coords.iter().map(f).collect();
        FEFunction::new(self.clone(), coefficients)
    }

    /// Nodal interpolant of a vector field.
    pub fn interpolate_vector(self: &Arc<Self>, f: impl Fn(&Vec3) -> Vec3) -> FEFunction {
        assert_eq!(self.rank, Rank::Vector, "interpolate_vector needs a vector space");
        let mut coefficients = Vec::with_capacity(self.n_dofs());
        for x in &self.node_coords {
            let v = f(x);
            coefficients.extend_from_slice(&[v.x, v.y, v.z]);
        }
        FEFunction::new(self.clone(), coefficients)
    }
}

fn tabulate(
    mesh: &ActiveMesh,
    degree: usize,
    n_local: usize,
    qps: &[crate::geometry::QuadPoint],
) -> Result<Tabulation> {
    let mut values = vec![0.0; qps.len() * n_local];
    let mut gradients = vec![Vec3::zeros(); qps.len() * n_local];
    for (q, qp) in qps.iter().enumerate() {
        if qp.bary.iter().any(|&l| l < -BARY_TOL || l > 1.0 + BARY_TOL) {
            return Err(Error::Geometry(format!(
                "quadrature point {q} lies outside its owner element (barycentric {:?})",
                qp.bary
            )));
        }
        let tet = &mesh.tets[qp.owner];
        shape_values(degree, &qp.bary, &mut values[q * n_local..(q + 1) * n_local]);
        shape_gradients(degree, &qp.bary, &tet.bary_grads, &mut gradients[q * n_local..(q + 1) * n_local]);
    }
    Ok(Tabulation {
        n_local,
        values,
        gradients,
    })
}

/// Coefficient vector attached to a space.
#[derive(Debug, Clone)]
pub struct FEFunction {
    pub space: Arc<FESpace>,
    pub coefficients: Vec<f64>,
}

/// Scalar traces at surface quadrature points.
#[derive(Debug, Clone)]
pub struct ScalarTrace {
    pub values: Vec<f64>,
    pub gradients: Vec<Vec3>,
    pub surface_gradients: Vec<Vec3>,
}

/// Vector traces at surface quadrature points.
#[derive(Debug, Clone)]
pub struct VectorTrace {
    pub values: Vec<Vec3>,
    /// Full gradient, row `k` is `∇u_k`.
    pub gradients: Vec<Mat3>,
    /// Covariant derivative `P_h (∇u) P_h`.
    pub covariant: Vec<Mat3>,
    /// Surface rate-of-strain tensor `½(∇_Γ u + ∇_Γ uᵀ)`.
    pub strain: Vec<Mat3>,
}

impl FEFunction {
    pub fn new(space: Arc<FESpace>, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), space.n_dofs(), "coefficient length must equal n_dofs");
        Self { space, coefficients }
    }

    /// Value and gradient of a scalar function at surface quadrature point `q`.
    #[inline]
    pub fn surface_value_grad(&self, q: usize) -> (f64, Vec3) {
        let sp = &self.space;
        let owner = sp.mesh.surface_qp[q].owner;
        let nodes = sp.nodes(owner);
        let vals = sp.surface_tab.values(q);
        let grads = sp.surface_tab.gradients(q);
        let mut v = 0.0;
        let mut g = Vec3::zeros();
        for k in 0..sp.n_local {
            let c = self.coefficients[nodes[k]];
            v += c * vals[k];
            g += grads[k] * c;
        }
        (v, g)
    }

    /// Value and full gradient of a vector function at surface quadrature point `q`.
    #[inline]
    pub fn surface_vector_value_grad(&self, q: usize) -> (Vec3, Mat3) {
        let sp = &self.space;
        let owner = sp.mesh.surface_qp[q].owner;
        let nodes = sp.nodes(owner);
        let vals = sp.surface_tab.values(q);
        let grads = sp.surface_tab.gradients(q);
        let mut v = Vec3::zeros();
        let mut g = Mat3::zeros();
        for k in 0..sp.n_local {
            let n = nodes[k];
            let c = Vec3::new(
                self.coefficients[3 * n],
                self.coefficients[3 * n + 1],
                self.coefficients[3 * n + 2],
            );
            v += c * vals[k];
            g += c * grads[k].transpose();
        }
        (v, g)
    }

    /// Value and gradient of a scalar function at volume quadrature point `q`.
    pub fn volume_value_grad(&self, q: usize) -> (f64, Vec3) {
        let sp = &self.space;
        let owner = sp.mesh.volume_qp[q].owner;
        let nodes = sp.nodes(owner);
        let vals = sp.volume_tab.values(q);
        let grads = sp.volume_tab.gradients(q);
        let mut v = 0.0;
        let mut g = Vec3::zeros();
        for k in 0..sp.n_local {
            let c = self.coefficients[nodes[k]];
            v += c * vals[k];
            g += grads[k] * c;
        }
        (v, g)
    }

    /// Scalar traces on Γ_h at every surface quadrature point.
    pub fn eval_trace(&self) -> ScalarTrace {
        assert_eq!(self.space.rank, Rank::Scalar);
        let nq = self.space.mesh.surface_qp.len();
        let mut values = Vec::with_capacity(nq);
        let mut gradients = Vec::with_capacity(nq);
        let mut surface_gradients = Vec::with_capacity(nq);
        for q in 0..nq {
            let (v, g) = self.surface_value_grad(q);
            let p = &self.space.mesh.tets[self.space.mesh.surface_qp[q].owner].projector;
            values.push(v);
            gradients.push(g);
            surface_gradients.push(p * g);
        }
        ScalarTrace {
            values,
            gradients,
            surface_gradients,
        }
    }

    /// Vector traces on Γ_h at every surface quadrature point.
    pub fn eval_vector_trace(&self) -> VectorTrace {
        assert_eq!(self.space.rank, Rank::Vector);
        let nq = self.space.mesh.surface_qp.len();
        let mut out = VectorTrace {
            values: Vec::with_capacity(nq),
            gradients: Vec::with_capacity(nq),
            covariant: Vec::with_capacity(nq),
            strain: Vec::with_capacity(nq),
        };
        for q in 0..nq {
            let (v, g) = self.surface_vector_value_grad(q);
            let p = &self.space.mesh.tets[self.space.mesh.surface_qp[q].owner].projector;
            let cov = p * g * p;
            out.values.push(v);
            out.gradients.push(g);
            out.strain.push((cov + cov.transpose()) * 0.5);
            out.covariant.push(cov);
        }
        out
    }

    /// Evaluates a scalar function at an arbitrary point of active tet `element`.
    pub fn eval_at(&self, element: usize, x: &Vec3) -> Result<f64> {
        let sp = &self.space;
        let b = sp.mesh.tets[element].barycentric(x);
        if b.iter().any(|&l| l < -BARY_TOL || l > 1.0 + BARY_TOL) {
            return Err(Error::Geometry(format!(
                "point {x:?} lies outside element {element} (barycentric {b:?})"
            )));
        }
        let mut vals = [0.0; 10];
        shape_values(sp.degree, &b, &mut vals);
        let nodes = sp.nodes(element);
        Ok(match sp.rank {
            Rank::Scalar => {
                // u₀ + Σ φ_k (u_k - u₀)
                let u0 = self.coefficients[nodes[0]];
                u0 + (1..sp.n_local).map(|k| (self.coefficients[nodes[k]] - u0) * vals[k]).sum::<f64>()
            }
            Rank::Vector => {
                return Err(Error::Dimension("eval_at on a vector function; use eval_vector_at".into()))
            }
        })
    }

    pub fn eval_vector_at(&self, element: usize, x: &Vec3) -> Result<Vec3> {
        let sp = &self.space;
        if sp.rank != Rank::Vector {
            return Err(Error::Dimension("eval_vector_at on a scalar function".into()));
        }
        let b = sp.mesh.tets[element].barycentric(x);
        if b.iter().any(|&l| l < -BARY_TOL || l > 1.0 + BARY_TOL) {
            return Err(Error::Geometry(format!(
                "point {x:?} lies outside element {element} (barycentric {b:?})"
            )));
        }
        let mut vals = [0.0; 10];
        shape_values(sp.degree, &b, &mut vals);
        let nodes = sp.nodes(element);
        let at = |n: usize| Vec3::new(self.coefficients[3 * n], self.coefficients[3 * n + 1], self.coefficients[3 * n + 2]);
        let u0 = at(nodes[0]);
        let mut v = u0;
        for k in 1..sp.n_local {
            v += (at(nodes[k]) - u0) * vals[k];
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BackgroundMesh, BoundingBox, LevelSetSurface};

    fn sphere(n: usize) -> Arc<ActiveMesh> {
        let bg = BackgroundMesh::build(BoundingBox::cube(1.5), n).unwrap();
        Arc::new(ActiveMesh::build(bg, LevelSetSurface::unit_sphere()).unwrap())
    }

    /// Small sphere around the bbox corner (1,-1,-1): that vertex lies in
    /// exactly two Kuhn tetrahedra, which share a face.
    fn corner_mesh() -> Arc<ActiveMesh> {
        let bg = BackgroundMesh::build(BoundingBox::cube(1.0), 2).unwrap();
        let s = LevelSetSurface::sphere(Vec3::new(1.0, -1.0, -1.0), 0.1);
        Arc::new(ActiveMesh::build(bg, s).unwrap())
    }

    #[test]
    fn dof_counts() {
        let mesh = corner_mesh();
        assert_eq!(mesh.tets.len(), 2);
        let p1 = FESpace::scalar(mesh.clone(), 1).unwrap();
        let p2 = FESpace::scalar(mesh.clone(), 2).unwrap();
        let v2 = FESpace::vector(mesh.clone(), 2).unwrap();
        assert_eq!(p1.element_dofs(0).len(), 4);
        assert_eq!(p2.element_dofs(0).len(), 10);
        assert_eq!(v2.element_dofs(0).len(), 30);
        // 5 vertices, 9 edges.
        assert_eq!(p1.n_dofs(), 5);
        assert_eq!(p2.n_dofs(), 14);
        assert_eq!(v2.n_dofs(), 42);
        assert!(FESpace::scalar(mesh, 3).is_err());
    }

    #[test]
    fn dof_map_is_a_bijection_onto_range() {
        let mesh = sphere(6);
        for deg in [1, 2] {
            let sp = FESpace::scalar(mesh.clone(), deg).unwrap();
            let mut seen = vec![false; sp.n_dofs()];
            for e in 0..sp.n_elements() {
                let nodes = sp.nodes(e);
                let mut sorted = nodes.to_vec();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted.len(), sp.n_local);
                for &n in nodes {
                    seen[n] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
        let p1 = FESpace::scalar(mesh.clone(), 1).unwrap();
        let verts: std::collections::BTreeSet<usize> =
            mesh.tets.iter().flat_map(|t| t.vertex_ids.iter().copied()).collect();
        assert_eq!(p1.n_dofs(), verts.len());
    }

    #[test]
    fn partition_of_unity_and_polynomial_reproduction() {
        let mesh = sphere(6);
        for deg in [1, 2] {
            let sp = Arc::new(FESpace::scalar(mesh.clone(), deg).unwrap());
            for q in 0..mesh.surface_qp.len() {
                let s: f64 = sp.surface_tab.values(q).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
            let f = |x: &Vec3| if deg == 1 { 0.3 + x.x - 2.0 * x.z } else { x.x * x.y - x.z * x.z + 0.5 * x.y };
            let fh = sp.interpolate(f);
            let tr = fh.eval_trace();
            for (q, qp) in mesh.surface_qp.iter().enumerate() {
                assert!((tr.values[q] - f(&qp.x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constants_have_zero_surface_gradient() {
        let mesh = sphere(5);
        let sp = Arc::new(FESpace::scalar(mesh, 2).unwrap());
        let tr = sp.constant(2.5).eval_trace();
        assert!(tr.surface_gradients.iter().all(|g| g.norm() < 1e-12));
    }

    #[test]
    fn normal_coordinate_has_zero_surface_gradient_on_a_plane() {
        let bg = BackgroundMesh::build(BoundingBox::cube(1.0), 3).unwrap();
        let mesh = Arc::new(ActiveMesh::build(bg, LevelSetSurface::plane(Vec3::z(), 0.0)).unwrap());
        let sp = Arc::new(FESpace::scalar(mesh, 1).unwrap());
        let tr = sp.interpolate(|x| x.z).eval_trace();
        assert!(tr.surface_gradients.iter().all(|g| g.norm() < 1e-12));
        assert!(tr.gradients.iter().all(|g| (g - Vec3::z()).norm() < 1e-12));
    }

    #[test]
    fn p1_interpolation_error_is_second_order() {
        let f = |x: &Vec3| x.x * x.y;
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| {
                let mesh = sphere(n);
                let sp = Arc::new(FESpace::scalar(mesh.clone(), 1).unwrap());
                let tr = sp.interpolate(f).eval_trace();
                mesh.surface_qp
                    .iter()
                    .enumerate()
                    .map(|(q, qp)| (tr.values[q] - f(&qp.x)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let eoc = (errs[1] / errs[2]).log2();
        assert!(eoc > 1.8, "eoc {eoc}, errors {errs:?}");
    }

    #[test]
    fn eval_at_rejects_points_outside() {
        let mesh = sphere(4);
        let sp = Arc::new(FESpace::scalar(mesh.clone(), 1).unwrap());
        let f = sp.constant(1.0);
        let inside = mesh.tets[0].point(&[0.25; 4]);
        assert!((f.eval_at(0, &inside).unwrap() - 1.0).abs() < 1e-14);
        assert!(f.eval_at(0, &Vec3::repeat(50.0)).is_err());
    }
}
