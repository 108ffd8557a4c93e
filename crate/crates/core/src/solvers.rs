//! Krylov solvers: Jacobi-preconditioned CG, restarted GMRES with ILU(0)
//! or Jacobi preconditioning, and the monolithic saddle-point solve.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
    Ilu0,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub preconditioner: Preconditioner,
}

impl SolverOptions {
    pub fn spd(tol: f64) -> Self {
        Self {
            tol,
            max_iter: 2000,
            restart: 0,
            preconditioner: Preconditioner::Jacobi,
        }
    }

    pub fn gmres(tol: f64) -> Self {
        Self {
            tol,
            max_iter: 2000,
            restart: 60,
            preconditioner: Preconditioner::Ilu0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b - Ax‖ / ‖b‖`, recomputed after the iteration stopped.
    pub residual: f64,
    pub converged: bool,
    pub wall_time: Duration,
}

fn true_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let bn = norm2(b);
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    if bn == 0.0 {
        r
    } else {
        r / bn
    }
}

fn check_square(a: &SparseMatrix, b: &[f64]) -> Result<()> {
    if a.n_rows != a.n_cols || b.len() != a.n_rows {
        return Err(Error::Dimension(format!(
            "system {}x{} with right-hand side of length {}",
            a.n_rows,
            a.n_cols,
            b.len()
        )));
    }
    Ok(())
}

fn inv_diagonal(a: &SparseMatrix) -> Vec<f64> {
    a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect()
}

/// Jacobi-preconditioned conjugate gradients.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    solve_spd_from(a, b, vec![0.0; b.len()], opts)
}

pub fn solve_spd_from(a: &SparseMatrix, b: &[f64], x0: Vec<f64>, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    let (x, report, _) = cg(a, b, x0, opts, false)?;
    Ok((x, report))
}

/// CG; optionally returns the Lanczos coefficients `(α, β)`.
fn cg(
    a: &SparseMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    opts: &SolverOptions,
    record: bool,
) -> Result<(Vec<f64>, SolveReport, Vec<(f64, f64)>)> {
    check_square(a, b)?;
    let start = Instant::now();
    let n = b.len();
    let bn = norm2(b);
    let mut coeffs = Vec::new();
    if bn == 0.0 {
        let x = vec![0.0; n];
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
                wall_time: start.elapsed(),
            },
            coeffs,
        ));
    }
    let dinv = match opts.preconditioner {
        Preconditioner::None => vec![1.0; n],
        _ => inv_diagonal(a),
    };
    let mut r = a.matvec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut it = 0;
    let mut converged = norm2(&r) <= opts.tol * bn;
    while !converged && it < opts.max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver(format!(
                "conjugate gradient breakdown at iteration {it}: pᵀAp = {pap:e} (matrix not positive definite?)"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        if record {
            coeffs.push((alpha, beta));
        }
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        converged = norm2(&r) <= opts.tol * bn;
    }
    let residual = true_residual(a, &x, b);
    Ok((
        x,
        SolveReport {
            iterations: it,
            residual,
            converged: converged && residual <= 10.0 * opts.tol,
            wall_time: start.elapsed(),
        },
        coeffs,
    ))
}

/// Extremal-eigenvalue estimate `λ_max / λ_min` of the Jacobi-scaled
/// matrix `D^{-1/2} A D^{-1/2}`, from the Lanczos tridiagonal built by
/// `steps` CG iterations.
pub fn condition_estimate(a: &SparseMatrix, steps: usize) -> Result<f64> {
    let n = a.n_rows;
    // Deterministic, non-smooth start vector.
    let b: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let opts = SolverOptions {
        tol: 1e-300,
        max_iter: steps.min(n),
        restart: 0,
        preconditioner: Preconditioner::Jacobi,
    };
    let (_, _, coeffs) = cg(a, &b, vec![0.0; n], &opts, true)?;
    let m = coeffs.len();
    if m < 2 {
        return Err(Error::Solver("too few Lanczos steps for a condition estimate".into()));
    }
    let mut t = nalgebra::DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let (alpha, _) = coeffs[k];
        let prev_beta = if k == 0 { 0.0 } else { coeffs[k - 1].1 };
        let prev_alpha = if k == 0 { f64::INFINITY } else { coeffs[k - 1].0 };
        t[(k, k)] = 1.0 / alpha + prev_beta / prev_alpha;
        if k + 1 < m {
            let off = coeffs[k].1.sqrt() / alpha;
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(t).eigenvalues;
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    if !(min > 0.0) {
        return Err(Error::Solver(format!("non-positive Ritz value {min:e}")));
    }
    Ok(max / min)
}

/// Incomplete LU factorization with zero fill, stored in the pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: SparseMatrix,
    diag: Vec<usize>,
    /// Number of pivots replaced by the guard.
    pub guarded_pivots: usize,
}

impl Ilu0 {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            if let Some(p) = lu.position(i, i) {
                *d = p;
            }
        }
        if let Some(i) = diag.iter().position(|&d| d == usize::MAX) {
            return Err(Error::Solver(format!("ILU(0): row {i} has no diagonal entry in the pattern")));
        }
        let row_scale: Vec<f64> = (0..n)
            .map(|i| a.row(i).1.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        let mut guarded = 0;
        let mut work = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                work[lu.col_idx[k]] = k;
            }
            for k in start..end {
                let j = lu.col_idx[k];
                if j >= i {
                    break;
                }
                let pivot = lu.values[diag[j]];
                let lij = lu.values[k] / pivot;
                lu.values[k] = lij;
                for kk in diag[j] + 1..lu.row_ptr[j + 1] {
                    let c = lu.col_idx[kk];
                    let w = work[c];
                    if w != usize::MAX {
                        lu.values[w] -= lij * lu.values[kk];
                    }
                }
            }
            let floor = 1e-12 * row_scale[i].max(f64::MIN_POSITIVE);
            let d = lu.values[diag[i]];
            if !(d.abs() > floor) {
                lu.values[diag[i]] = if d < 0.0 { -floor.max(1e-300) } else { floor.max(1e-300) };
                guarded += 1;
            }
            for k in start..end {
                work[lu.col_idx[k]] = usize::MAX;
            }
        }
        Ok(Self {
            lu,
            diag,
            guarded_pivots: guarded,
        })
    }

    /// Solves `LU z = r` in place.
    pub fn apply(&self, z: &mut [f64]) {
        let lu = &self.lu;
        let n = lu.n_rows;
        for i in 0..n {
            let mut s = z[i];
            for k in lu.row_ptr[i]..self.diag[i] {
                s -= lu.values[k] * z[lu.col_idx[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.values[k] * z[lu.col_idx[k]];
            }
            z[i] = s / lu.values[self.diag[i]];
        }
    }
}

enum Precond {
    Identity,
    Jacobi(Vec<f64>),
    Ilu(Ilu0),
}

impl Precond {
    fn build(a: &SparseMatrix, kind: Preconditioner) -> Result<Self> {
        Ok(match kind {
            Preconditioner::None => Precond::Identity,
            Preconditioner::Jacobi => Precond::Jacobi(inv_diagonal(a)),
            Preconditioner::Ilu0 => Precond::Ilu(Ilu0::new(a)?),
        })
    }

    fn apply(&self, v: &mut [f64]) {
        match self {
            Precond::Identity => {}
            Precond::Jacobi(d) => v.iter_mut().zip(d).for_each(|(x, d)| *x *= d),
            Precond::Ilu(ilu) => ilu.apply(v),
        }
    }
}

/// Right-preconditioned restarted GMRES.
pub fn solve_nonsym(a: &SparseMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    solve_nonsym_from(a, b, vec![0.0; b.len()], opts)
}

pub fn solve_nonsym_from(a: &SparseMatrix, b: &[f64], x0: Vec<f64>, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    check_square(a, b)?;
    let start = Instant::now();
    let m = Precond::build(a, opts.preconditioner)?;
    let (x, it, conv) = gmres(a, b, x0, opts, &m);
    let residual = true_residual(a, &x, b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("GMRES produced non-finite values".into()));
    }
    Ok((
        x,
        SolveReport {
            iterations: it,
            residual,
            converged: conv && residual <= 10.0 * opts.tol,
            wall_time: start.elapsed(),
        },
    ))
}

fn gmres(a: &SparseMatrix, b: &[f64], mut x: Vec<f64>, opts: &SolverOptions, m: &Precond) -> (Vec<f64>, usize, bool) {
    let n = b.len();
    let bn = norm2(b);
    if bn == 0.0 {
        return (vec![0.0; n], 0, true);
    }
    let restart = if opts.restart == 0 { 50 } else { opts.restart }.min(n.max(1));
    let target = opts.tol * bn;
    let mut total = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
    let mut hcol: Vec<Vec<f64>> = Vec::with_capacity(restart);
    let mut cs = vec![0.0; restart];
    let mut sn = vec![0.0; restart];
    let mut g = vec![0.0; restart + 1];
    loop {
        a.matvec_into(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        if beta <= target {
            return (x, total, true);
        }
        if total >= opts.max_iter {
            return (x, total, false);
        }
        v.clear();
        hcol.clear();
        v.push(r.iter().map(|ri| ri / beta).collect());
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = beta;
        let mut k_done = 0;
        let mut happy = false;
        for k in 0..restart {
            z.copy_from_slice(&v[k]);
            m.apply(&mut z);
            a.matvec_into(&z, &mut w);
            let mut h = vec![0.0; k + 2];
            // Modified Gram-Schmidt, applied twice for stability.
            for _ in 0..2 {
                for (j, vj) in v.iter().enumerate() {
                    let c = dot(&w, vj);
                    h[j] += c;
                    axpy(-c, vj, &mut w);
                }
            }
            let hn = norm2(&w);
            h[k + 1] = hn;
            for j in 0..k {
                let t = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            let denom = (h[k] * h[k] + h[k + 1] * h[k + 1]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k] / denom;
                sn[k] = h[k + 1] / denom;
            }
            h[k] = cs[k] * h[k] + sn[k] * h[k + 1];
            h[k + 1] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            hcol.push(h);
            total += 1;
            k_done = k + 1;
            if hn <= 1e-300 {
                happy = true;
                break;
            }
            if g[k + 1].abs() <= target || total >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // Back substitution for the update coefficients.
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut s = g[i];
            for j in i + 1..k_done {
                s -= hcol[j][i] * y[j];
            }
            y[i] = if hcol[i][i] != 0.0 { s / hcol[i][i] } else { 0.0 };
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut update);
        }
        m.apply(&mut update);
        axpy(1.0, &update, &mut x);
        if happy {
            a.matvec_into(&x, &mut r);
            let rn = r.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
            return (x, total, rn <= target);
        }
    }
}

/// Solution of the stabilized saddle-point system
/// `[[A, Bᵀ], [B, -S]] [u; p] = [f; g]`.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub report: SolveReport,
}

/// Monolithic GMRES solve; `pressure_weights[i] = ∫_Γh ψᵢ` is used to
/// shift `p` to zero mean afterwards.
pub fn solve_saddle(
    a: &SparseMatrix,
    b: &SparseMatrix,
    s: &SparseMatrix,
    f: &[f64],
    g: &[f64],
    pressure_weights: &[f64],
    opts: &SolverOptions,
    guess: Option<(&[f64], &[f64])>,
) -> Result<SaddleSolution> {
    let (nu, np) = (a.n_rows, s.n_rows);
    if b.n_rows != np || b.n_cols != nu || f.len() != nu || g.len() != np || pressure_weights.len() != np {
        return Err(Error::Dimension("saddle-point block sizes disagree".into()));
    }
    let bt = b.transpose();
    let neg_s = s.scaled(-1.0);
    let k = SparseMatrix::block(&[vec![Some(a), Some(&bt)], vec![Some(b), Some(&neg_s)]])?;
    let mut rhs = f.to_vec();
    rhs.extend_from_slice(g);
    let x0 = match guess {
        Some((u0, p0)) => {
            let mut x = u0.to_vec();
            x.extend_from_slice(p0);
            x
        }
        None => vec![0.0; nu + np],
    };
    let (x, report) = solve_nonsym_from(&k, &rhs, x0, opts)?;
    let u = x[..nu].to_vec();
    let mut p = x[nu..].to_vec();
    shift_to_zero_mean(&mut p, pressure_weights);
    Ok(SaddleSolution { u, p, report })
}

/// Subtracts the weighted mean.
pub fn shift_to_zero_mean(p: &mut [f64], weights: &[f64]) {
    let area: f64 = weights.iter().sum();
    if area > 0.0 {
        let mean = dot(p, weights) / area;
        p.iter_mut().for_each(|v| *v -= mean);
    }
}
