//! Structured tetrahedral background mesh.

use crate::error::{Error, Result};
use crate::Vec3;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoundingBox {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    /// The cube `[-half, half]³`.
    pub fn cube(half: f64) -> Self {
        Self::new(Vec3::repeat(-half), Vec3::repeat(half))
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }
}

/// Uniform grid of `n³` cubes, each split into 6 tetrahedra sharing the
/// cube's main diagonal (Kuhn subdivision, conforming across faces).
#[derive(Debug, Clone)]
pub struct BackgroundMesh {
    pub bbox: BoundingBox,
    pub n_per_axis: usize,
    pub vertices: Vec<Vec3>,
    pub tetrahedra: Vec<[usize; 4]>,
}

// Axis orderings for the six Kuhn simplices.
const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

impl BackgroundMesh {
    pub fn build(bbox: BoundingBox, n_per_axis: usize) -> Result<Self> {
        if n_per_axis < 2 {
            return Err(Error::Config(vec![format!(
                "geometry.n_per_axis: must be at least 2, got {n_per_axis}"
            )]));
        }
        let ext = bbox.extent();
        if !(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0) {
            return Err(Error::Config(vec![
                "geometry.bbox: maximum corner must exceed minimum corner on every axis".into(),
            ]));
        }
        let n = n_per_axis;
        let np = n + 1;
        let step = ext / n as f64;
        let mut vertices = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    vertices.push(Vec3::new(
                        bbox.min.x + i as f64 * step.x,
                        bbox.min.y + j as f64 * step.y,
                        bbox.min.z + k as f64 * step.z,
                    ));
                }
            }
        }
        let index = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        let mut tetrahedra = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for perm in PERMUTATIONS.iter() {
                        let mut ijk = [i, j, k];
                        let mut tet = [0usize; 4];
                        tet[0] = index(ijk[0], ijk[1], ijk[2]);
                        for (slot, &axis) in perm.iter().enumerate() {
                            ijk[axis] += 1;
                            tet[slot + 1] = index(ijk[0], ijk[1], ijk[2]);
                        }
                        let v = signed_volume(
                            &vertices[tet[0]],
                            &vertices[tet[1]],
                            &vertices[tet[2]],
                            &vertices[tet[3]],
                        );
                        if v < 0.0 {
                            tet.swap(2, 3);
                        }
                        tetrahedra.push(tet);
                    }
                }
            }
        }
        Ok(Self {
            bbox,
            n_per_axis,
            vertices,
            tetrahedra,
        })
    }

    /// Mesh size: the largest cube edge.
    pub fn h(&self) -> f64 {
        self.bbox.extent().max() / self.n_per_axis as f64
    }

    pub fn tet_vertices(&self, t: usize) -> [Vec3; 4] {
        let ids = self.tetrahedra[t];
        [
            self.vertices[ids[0]],
            self.vertices[ids[1]],
            self.vertices[ids[2]],
            self.vertices[ids[3]],
        ]
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_vertices(t);
        signed_volume(&a, &b, &c, &d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let m = BackgroundMesh::build(BoundingBox::cube(1.5), 2).unwrap();
        assert_eq!(m.tetrahedra.len(), 48);
        assert_eq!(m.vertices.len(), 27);
        let m = BackgroundMesh::build(BoundingBox::cube(1.5), 4).unwrap();
        assert_eq!(m.tetrahedra.len(), 384);
        assert_eq!(m.vertices.len(), 125);
        assert!((m.h() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn positive_volumes_partition_the_box() {
        for n in [2, 3, 5] {
            let m = BackgroundMesh::build(BoundingBox::cube(1.5), n).unwrap();
            let mut total = 0.0;
            for t in 0..m.tetrahedra.len() {
                let v = m.tet_volume(t);
                assert!(v > 0.0);
                total += v;
            }
            assert!((total - 27.0).abs() < 1e-12 * 27.0);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BackgroundMesh::build(BoundingBox::cube(1.0), 1).is_err());
        let inverted = BoundingBox::new(Vec3::repeat(1.0), Vec3::repeat(-1.0));
        assert!(BackgroundMesh::build(inverted, 4).is_err());
    }
}
