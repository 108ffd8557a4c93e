//! Legacy ASCII VTK output of fields on the discrete surface.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fe_space::{FEFunction, Rank};
use crate::geometry::ActiveMesh;

/// Field sampled at the vertices of Γ_h.
#[derive(Debug, Clone)]
pub enum PointField<'a> {
    Scalar(&'a str, &'a FEFunction),
    Vector(&'a str, &'a FEFunction),
}

/// One owner tet per surface vertex.
fn vertex_owners(mesh: &ActiveMesh) -> Vec<usize> {
    let mut owner = vec![usize::MAX; mesh.surface_vertices.len()];
    for tri in &mesh.triangles {
        for &v in &tri.vertices {
            if owner[v] == usize::MAX {
                owner[v] = tri.owner;
            }
        }
    }
    owner
}

/// Renders Γ_h as an `UNSTRUCTURED_GRID` of triangles with the given point fields.
pub fn render_vtk(mesh: &ActiveMesh, fields: &[PointField], title: &str) -> Result<String> {
    let owners = vertex_owners(mesh);
    let nv = mesh.surface_vertices.len();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for x in &mesh.surface_vertices {
        let _ = writeln!(s, "{:e} {:e} {:e}", x.x, x.y, x.z);
    }
    let nt = mesh.triangles.len();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let [a, b, c] = t.vertices;
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    if fields.is_empty() {
        return Ok(s);
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    for f in fields {
        match f {
            PointField::Scalar(name, u) => {
                if u.space.rank != Rank::Scalar {
                    return Err(Error::Dimension(format!("field {name} is not scalar")));
                }
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for (v, &e) in owners.iter().enumerate() {
                    let _ = writeln!(s, "{:e}", u.eval_at(e, &mesh.surface_vertices[v])?);
                }
            }
            PointField::Vector(name, u) => {
                if u.space.rank != Rank::Vector {
                    return Err(Error::Dimension(format!("field {name} is not a vector")));
                }
                let _ = writeln!(s, "VECTORS {name} double");
                for (v, &e) in owners.iter().enumerate() {
                    let w = u.eval_vector_at(e, &mesh.surface_vertices[v])?;
                    let _ = writeln!(s, "{:e} {:e} {:e}", w.x, w.y, w.z);
                }
            }
        }
    }
    Ok(s)
}

pub fn write_vtk(path: &Path, mesh: &ActiveMesh, fields: &[PointField], title: &str) -> Result<()> {
    std::fs::write(path, render_vtk(mesh, fields, title)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe_space::FESpace;
    use crate::geometry::{BackgroundMesh, BoundingBox, LevelSetSurface};
    use crate::Vec3;
    use std::collections::HashMap;
    use std::sync::Arc;

    struct Parsed {
        points: Vec<Vec3>,
        cells: Vec<[usize; 3]>,
        scalars: HashMap<String, Vec<f64>>,
        vectors: HashMap<String, Vec<Vec3>>,
    }

    fn read(text: &str) -> Parsed {
        let mut it = text.lines().skip(4);
        let mut out = Parsed {
            points: vec![],
            cells: vec![],
            scalars: HashMap::new(),
            vectors: HashMap::new(),
        };
        let nums = |l: &str| l.split_whitespace().map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>();
        while let Some(line) = it.next() {
            let w: Vec<&str> = line.split_whitespace().collect();
            match w[0] {
                "POINTS" => {
                    for _ in 0..w[1].parse().unwrap() {
                        let v = nums(it.next().unwrap());
                        out.points.push(Vec3::new(v[0], v[1], v[2]));
                    }
                }
                "CELLS" => {
                    for _ in 0..w[1].parse().unwrap() {
                        let v = nums(it.next().unwrap());
                        assert_eq!(v[0], 3.0);
                        out.cells.push([v[1] as usize, v[2] as usize, v[3] as usize]);
                    }
                }
                "CELL_TYPES" => {
                    for _ in 0..w[1].parse().unwrap() {
                        assert_eq!(it.next().unwrap(), "5");
                    }
                }
                "SCALARS" => {
                    it.next();
                    let v = (0..out.points.len()).map(|_| nums(it.next().unwrap())[0]).collect();
                    out.scalars.insert(w[1].to_string(), v);
                }
                "VECTORS" => {
                    let v = (0..out.points.len())
                        .map(|_| {
                            let v = nums(it.next().unwrap());
                            Vec3::new(v[0], v[1], v[2])
                        })
                        .collect();
                    out.vectors.insert(w[1].to_string(), v);
                }
                _ => {}
            }
        }
        out
    }

    #[test]
    fn round_trip_through_reader() {
        let bg = BackgroundMesh::build(BoundingBox::cube(1.5), 6).unwrap();
        let mesh = Arc::new(ActiveMesh::build(bg, LevelSetSurface::unit_sphere()).unwrap());
        let sp = Arc::new(FESpace::scalar(mesh.clone(), 1).unwrap());
        let vs = Arc::new(FESpace::vector(mesh.clone(), 2).unwrap());
        let c = sp.interpolate(|x| x.z);
        let one = sp.constant(1.0);
        let u = vs.interpolate_vector(|x| 2.0 * x);
        let fields = [
            PointField::Scalar("c", &c),
            PointField::Scalar("one", &one),
            PointField::Vector("u", &u),
        ];
        let parsed = read(&render_vtk(&mesh, &fields, "t").unwrap());
        assert_eq!(parsed.cells.len(), mesh.triangles.len());
        for (p, q) in parsed.points.iter().zip(&mesh.surface_vertices) {
            assert!((p - q).norm() < 1e-12);
        }
        assert!(parsed.scalars["one"].iter().all(|&v| v == 1.0));
        for (v, x) in parsed.scalars["c"].iter().zip(&mesh.surface_vertices) {
            assert!((v - x.z).abs() < 1e-12);
        }
        for (v, x) in parsed.vectors["u"].iter().zip(&mesh.surface_vertices) {
            assert!((v - 2.0 * x).norm() < 1e-12);
        }
        assert!(render_vtk(&mesh, &[PointField::Scalar("u", &u)], "t").is_err());
    }
}
