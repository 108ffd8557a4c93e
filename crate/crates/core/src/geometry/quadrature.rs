//! Quadrature rules on the reference triangle and tetrahedron in
//! barycentric coordinates; weights sum to one.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TetRule {
    pub degree: usize,
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[a, a, b], [a, b, a], [b, a, a]]
}

impl TriangleRule {
    /// Lowest-point-count rule integrating polynomials of total degree
    /// `degree` exactly. Degrees above 5 are rejected.
    pub fn of_degree(degree: usize) -> Result<Self> {
        let third = 1.0 / 3.0;
        let (points, weights): (Vec<[f64; 3]>, Vec<f64>) = match degree {
            0 | 1 => (vec![[third, third, third]], vec![1.0]),
            2 => {
                let pts = orbit3(1.0 / 6.0).to_vec();
                (pts, vec![third; 3])
            }
            3 | 4 => {
                // Dunavant 6-point rule.
                let a1 = 0.445_948_490_915_964_886_318_329_253_883;
                let w1 = 0.223_381_589_678_011_465_944_827_542_694;
                let a2 = 0.091_576_213_509_770_743_459_571_463_402;
                let w2 = 1.0 / 3.0 - w1;
                let mut pts = orbit3(a1).to_vec();
                pts.extend_from_slice(&orbit3(a2));
                (pts, vec![w1, w1, w1, w2, w2, w2])
            }
            5 => {
                let s15 = 15f64.sqrt();
                let a1 = (6.0 - s15) / 21.0;
                let a2 = (6.0 + s15) / 21.0;
                let w1 = (155.0 - s15) / 1200.0;
                let w2 = (155.0 + s15) / 1200.0;
                let mut pts = vec![[third, third, third]];
                pts.extend_from_slice(&orbit3(a1));
                pts.extend_from_slice(&orbit3(a2));
                (pts, vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2])
            }
            d => {
                return Err(Error::Unsupported(format!(
                    "triangle quadrature of degree {d}"
                )))
            }
        };
        Ok(Self {
            degree: degree.max(1),
            points,
            weights,
        })
    }
}

impl TetRule {
    pub fn of_degree(degree: usize) -> Result<Self> {
        let (points, weights) = match degree {
            0 | 1 => (vec![[0.25; 4]], vec![1.0]),
            2 => {
                let s5 = 5f64.sqrt();
                let a = (5.0 - s5) / 20.0;
                let b = (5.0 + 3.0 * s5) / 20.0;
                (
                    vec![[b, a, a, a], [a, b, a, a], [a, a, b, a], [a, a, a, b]],
                    vec![0.25; 4],
                )
            }
            d => {
                return Err(Error::Unsupported(format!(
                    "tetrahedron quadrature of degree {d}"
                )))
            }
        };
        Ok(Self {
            degree: degree.max(1),
            points,
            weights,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫_T λ1^a λ2^b λ3^c dA / |T| = 2 a! b! c! / (a+b+c+2)!
    fn tri_moment(a: u32, b: u32, c: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        2.0 * f(a) * f(b) * f(c) / f(a + b + c + 2)
    }

    fn tet_moment(a: u32, b: u32, c: u32, d: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        6.0 * f(a) * f(b) * f(c) * f(d) / f(a + b + c + d + 3)
    }

    #[test]
    fn triangle_rules_are_exact() {
        for deg in [1usize, 2, 4, 5] {
            let rule = TriangleRule::of_degree(deg).unwrap();
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    for c in 0..=(deg as u32 - a - b) {
                        let q: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                            .sum();
                        let exact = tri_moment(a, b, c);
                        assert!((q - exact).abs() <= 1e-12 * exact, "deg {deg} ({a},{b},{c})");
                    }
                }
            }
        }
    }

    #[test]
    fn tet_rules_are_exact() {
        for deg in [1usize, 2] {
            let rule = TetRule::of_degree(deg).unwrap();
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    for c in 0..=(deg as u32 - a - b) {
                        let d = deg as u32 - a - b - c;
                        let q: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| {
                                w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32) * p[3].powi(d as i32)
                            })
                            .sum();
                        let exact = tet_moment(a, b, c, d);
                        assert!((q - exact).abs() <= 1e-12 * exact);
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_degrees() {
        assert!(TriangleRule::of_degree(9).is_err());
        assert!(TetRule::of_degree(4).is_err());
    }
}
