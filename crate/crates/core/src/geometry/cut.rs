//! Active element selection and piecewise planar surface reconstruction.

use std::collections::HashMap;

use super::level_set::{projector_unchecked, LevelSetSurface};
use super::mesh::BackgroundMesh;
use super::quadrature::{TetRule, TriangleRule};
use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Relative nudge applied to level-set values that are (numerically) zero
/// at background vertices.
pub const ZERO_NUDGE: f64 = 1e-10;
/// Surface triangles below `DEGENERATE_AREA * h²` are dropped.
pub const DEGENERATE_AREA: f64 = 1e-14;

/// Geometry of one active tetrahedron.
#[derive(Debug, Clone)]
pub struct ActiveTet {
    /// Index into the background tetrahedron list.
    pub background: usize,
    pub vertex_ids: [usize; 4],
    pub vertices: [Vec3; 4],
    /// Gradients of the barycentric coordinates (constant on the tet).
    pub bary_grads: [Vec3; 4],
    pub volume: f64,
    /// Normal of Γ_h in this tet, `∇φ_h / |∇φ_h|`; also the extended
    /// normal used by the volume stabilization.
    pub normal: Vec3,
    /// `I - n nᵀ` for the normal above.
    pub projector: Mat3,
}

impl ActiveTet {
    pub fn barycentric(&self, x: &Vec3) -> [f64; 4] {
        let d = x - self.vertices[0];
        let l1 = self.bary_grads[1].dot(&d);
        let l2 = self.bary_grads[2].dot(&d);
        let l3 = self.bary_grads[3].dot(&d);
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }

    pub fn point(&self, bary: &[f64; 4]) -> Vec3 {
        self.vertices[0] * bary[0] + self.vertices[1] * bary[1] + self.vertices[2] * bary[2] + self.vertices[3] * bary[3]
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceTriangle {
    /// Index into `ActiveMesh::tets`.
    pub owner: usize,
    /// Indices into `ActiveMesh::surface_vertices`; ordered so that the
    /// right-hand normal agrees with the owner's `normal`.
    pub vertices: [usize; 3],
    pub area: f64,
}

/// Quadrature point tagged with its owner element.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// Index into `ActiveMesh::tets`.
    pub owner: usize,
    pub bary: [f64; 4],
    pub x: Vec3,
    pub weight: f64,
}

/// The background mesh restricted to the tetrahedra cut by Γ_h, together
/// with Γ_h itself and quadrature on both.
#[derive(Debug, Clone)]
pub struct ActiveMesh {
    pub background: BackgroundMesh,
    pub surface: LevelSetSurface,
    /// Level-set values (after the zero nudge) at all background vertices.
    pub level_set: Vec<f64>,
    pub tets: Vec<ActiveTet>,
    pub surface_vertices: Vec<Vec3>,
    /// Background edge `(a, b)`, `a < b`, carrying each surface vertex.
    pub surface_vertex_edges: Vec<(usize, usize)>,
    pub triangles: Vec<SurfaceTriangle>,
    pub surface_qp: Vec<QuadPoint>,
    /// `surface_qp[tri_qp_offsets[t]..tri_qp_offsets[t + 1]]` belong to triangle `t`.
    pub tri_qp_offsets: Vec<usize>,
    /// Triangles owned by each active tet.
    pub tet_triangles: Vec<Vec<usize>>,
    pub volume_qp: Vec<QuadPoint>,
    pub tet_qp_offsets: Vec<usize>,
    pub dropped_triangles: usize,
    pub h: f64,
}

/// Level-set values at background vertices with near-zero values nudged
/// to `+ZERO_NUDGE * h`.
pub fn vertex_level_set(mesh: &BackgroundMesh, surface: &LevelSetSurface) -> Vec<f64> {
    let floor = ZERO_NUDGE * mesh.h();
    mesh.vertices
        .iter()
        .map(|x| {
            let v = surface.value(x);
            if v.abs() < floor {
                floor
            } else {
                v
            }
        })
        .collect()
}

/// Background tetrahedra whose P1 level-set interpolant changes sign.
pub fn select_active_elements(mesh: &BackgroundMesh, surface: &LevelSetSurface) -> Result<Vec<usize>> {
    let phi = vertex_level_set(mesh, surface);
    let active: Vec<usize> = mesh
        .tetrahedra
        .iter()
        .enumerate()
        .filter(|(_, tet)| {
            let neg = tet.iter().any(|&v| phi[v] < 0.0);
            let pos = tet.iter().any(|&v| phi[v] > 0.0);
            neg && pos
        })
        .map(|(t, _)| t)
        .collect();
    if active.is_empty() {
        return Err(Error::Config(vec![
            "geometry: the surface does not cut the background mesh (empty active set)".into(),
        ]));
    }
    Ok(active)
}

fn bary_gradients(v: &[Vec3; 4]) -> Result<[Vec3; 4]> {
    let j = Mat3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    let inv = j
        .try_inverse()
        .ok_or_else(|| Error::Geometry("singular tetrahedron".into()))?;
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    Ok([-(g1 + g2 + g3), g1, g2, g3])
}

fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

impl ActiveMesh {
    /// Builds the active mesh with the default quadrature (degree 4 on
    /// surface triangles, degree 2 on tetrahedra).
    pub fn build(background: BackgroundMesh, surface: LevelSetSurface) -> Result<Self> {
        Self::build_with_quadrature(background, surface, 4, 2)
    }

    pub fn build_with_quadrature(
        background: BackgroundMesh,
        surface: LevelSetSurface,
        surface_degree: usize,
        volume_degree: usize,
    ) -> Result<Self> {
        let tri_rule = TriangleRule::of_degree(surface_degree)?;
        let tet_rule = TetRule::of_degree(volume_degree)?;
        let h = background.h();
        let active = select_active_elements(&background, &surface)?;
        let phi = vertex_level_set(&background, &surface);

        let mut tets = Vec::with_capacity(active.len());
        let mut surface_vertices = Vec::new();
        let mut surface_vertex_edges = Vec::new();
        let mut edge_to_vertex: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangles = Vec::new();
        let mut tet_triangles = Vec::with_capacity(active.len());
        let mut dropped = 0usize;

        for &bt in &active {
            let ids = background.tetrahedra[bt];
            let verts = background.tet_vertices(bt);
            let grads = bary_gradients(&verts)?;
            let vals = [phi[ids[0]], phi[ids[1]], phi[ids[2]], phi[ids[3]]];
            let g: Vec3 = (0..4).map(|i| grads[i] * vals[i]).sum();
            let normal = g.normalize();
            let local = tets.len();
            tets.push(ActiveTet {
                background: bt,
                vertex_ids: ids,
                vertices: verts,
                bary_grads: grads,
                volume: background.tet_volume(bt),
                normal,
                projector: projector_unchecked(&normal),
            });

            let mut cut_vertex = |a: usize, b: usize| -> usize {
                let (ga, gb) = (ids[a], ids[b]);
                let key = (ga.min(gb), ga.max(gb));
                *edge_to_vertex.entry(key).or_insert_with(|| {
                    let (p, q) = (key.0, key.1);
                    let (fp, fq) = (phi[p], phi[q]);
                    let t = fp / (fp - fq);
                    let x = background.vertices[p] + (background.vertices[q] - background.vertices[p]) * t;
                    surface_vertices.push(x);
                    surface_vertex_edges.push(key);
                    surface_vertices.len() - 1
                })
            };

            let pos: Vec<usize> = (0..4).filter(|&i| vals[i] > 0.0).collect();
            let neg: Vec<usize> = (0..4).filter(|&i| vals[i] < 0.0).collect();
            let mut local_tris: Vec<[usize; 3]> = Vec::with_capacity(2);
            match (pos.len(), neg.len()) {
                (1, 3) => {
                    let p = pos[0];
                    local_tris.push([cut_vertex(p, neg[0]), cut_vertex(p, neg[1]), cut_vertex(p, neg[2])]);
                }
                (3, 1) => {
                    let n = neg[0];
                    local_tris.push([cut_vertex(n, pos[0]), cut_vertex(n, pos[1]), cut_vertex(n, pos[2])]);
                }
                (2, 2) => {
                    let q = [
                        cut_vertex(pos[0], neg[0]),
                        cut_vertex(pos[0], neg[1]),
                        cut_vertex(pos[1], neg[1]),
                        cut_vertex(pos[1], neg[0]),
                    ];
                    let d02 = (surface_vertices[q[0]] - surface_vertices[q[2]]).norm();
                    let d13 = (surface_vertices[q[1]] - surface_vertices[q[3]]).norm();
                    if d02 <= d13 {
                        local_tris.push([q[0], q[1], q[2]]);
                        local_tris.push([q[0], q[2], q[3]]);
                    } else {
                        local_tris.push([q[0], q[1], q[3]]);
                        local_tris.push([q[1], q[2], q[3]]);
                    }
                }
                _ => unreachable!("active tetrahedra have a strict sign change"),
            }

            let mut owned = Vec::with_capacity(2);
            for mut tri in local_tris {
                let (a, b, c) = (
                    surface_vertices[tri[0]],
                    surface_vertices[tri[1]],
                    surface_vertices[tri[2]],
                );
                let cross = (b - a).cross(&(c - a));
                let area = 0.5 * cross.norm();
                if area < DEGENERATE_AREA * h * h {
                    dropped += 1;
                    continue;
                }
                if cross.dot(&normal) < 0.0 {
                    tri.swap(1, 2);
                }
                owned.push(triangles.len());
                triangles.push(SurfaceTriangle {
                    owner: local,
                    vertices: tri,
                    area,
                });
            }
            tet_triangles.push(owned);
        }

        // Quadrature on the surface triangles, expressed in owner barycentrics.
        let mut surface_qp = Vec::with_capacity(triangles.len() * tri_rule.weights.len());
        let mut tri_qp_offsets = Vec::with_capacity(triangles.len() + 1);
        for tri in &triangles {
            tri_qp_offsets.push(surface_qp.len());
            let owner = &tets[tri.owner];
            let [a, b, c] = tri.vertices.map(|v| surface_vertices[v]);
            for (p, &w) in tri_rule.points.iter().zip(&tri_rule.weights) {
                let x = a * p[0] + b * p[1] + c * p[2];
                surface_qp.push(QuadPoint {
                    owner: tri.owner,
                    bary: owner.barycentric(&x),
                    x,
                    weight: w * tri.area,
                });
            }
        }
        tri_qp_offsets.push(surface_qp.len());

        let mut volume_qp = Vec::with_capacity(tets.len() * tet_rule.weights.len());
        let mut tet_qp_offsets = Vec::with_capacity(tets.len() + 1);
        for (i, tet) in tets.iter().enumerate() {
            tet_qp_offsets.push(volume_qp.len());
            for (p, &w) in tet_rule.points.iter().zip(&tet_rule.weights) {
                volume_qp.push(QuadPoint {
                    owner: i,
                    bary: *p,
                    x: tet.point(p),
                    weight: w * tet.volume,
                });
            }
        }
        tet_qp_offsets.push(volume_qp.len());

        Ok(Self {
            background,
            surface,
            level_set: phi,
            tets,
            surface_vertices,
            surface_vertex_edges,
            triangles,
            surface_qp,
            tri_qp_offsets,
            tet_triangles,
            volume_qp,
            tet_qp_offsets,
            dropped_triangles: dropped,
            h,
        })
    }

    /// Area of Γ_h.
    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }

    /// Volume of ω_h.
    pub fn band_volume(&self) -> f64 {
        self.tets.iter().map(|t| t.volume).sum()
    }

    pub fn triangle_qps(&self, t: usize) -> &[QuadPoint] {
        &self.surface_qp[self.tri_qp_offsets[t]..self.tri_qp_offsets[t + 1]]
    }

    pub fn tet_volume_qps(&self, t: usize) -> &[QuadPoint] {
        &self.volume_qp[self.tet_qp_offsets[t]..self.tet_qp_offsets[t + 1]]
    }

    /// Surface quadrature points of all triangles owned by active tet `t`.
    pub fn tet_surface_qps(&self, t: usize) -> impl Iterator<Item = &QuadPoint> + '_ {
        self.tet_triangles[t].iter().flat_map(move |&tri| self.triangle_qps(tri).iter())
    }

    /// Value of the P1 level-set interpolant at a point of active tet `t`.
    pub fn interpolated_level_set(&self, t: usize, bary: &[f64; 4]) -> f64 {
        let ids = self.tets[t].vertex_ids;
        (0..4).map(|i| bary[i] * self.level_set[ids[i]]).sum()
    }

    /// Surface triangles sharing an edge, as adjacency lists.
    pub fn triangle_adjacency(&self) -> Vec<Vec<usize>> {
        let mut edge_owner: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri.vertices[k], tri.vertices[(k + 1) % 3]);
                edge_owner.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut adj = vec![Vec::new(); self.triangles.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri.vertices[k], tri.vertices[(k + 1) % 3]);
                for &o in &edge_owner[&(a.min(b), a.max(b))] {
                    if o != t && !adj[t].contains(&o) {
                        adj[t].push(o);
                    }
                }
            }
            adj[t].sort_unstable();
        }
        adj
    }

    /// Surface triangle areas and unit normals (useful for export).
    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        self.tets[self.triangles[t].owner].normal
    }

    pub fn triangle_area_check(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].vertices.map(|v| self.surface_vertices[v]);
        triangle_area(&a, &b, &c)
    }
}
