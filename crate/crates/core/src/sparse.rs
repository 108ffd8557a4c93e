//! Compressed sparse row matrices and finite element scatter assembly.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// CSR matrix with sorted, unique column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    /// Set by assemblers of symmetric forms.
    pub symmetric: bool,
}

impl SparseMatrix {
    pub fn zeros_with_pattern(n_rows: usize, n_cols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        let nnz = col_idx.len();
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
            symmetric: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.values.copy_from_slice(d);
        m
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let trip: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, &v)| (i, j, v)))
            .collect();
        Self::from_triplets(rows.len(), n_cols, &trip)
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    /// Position of entry `(i, j)` in `values`, if it is in the pattern.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].binary_search(&j).ok().map(|k| a + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        let ax = self.matvec(x);
        ax.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[k];
                let dst = next[c];
                col_idx[dst] = i;
                values[dst] = self.values[k];
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr: counts,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows && self.n_cols == other.n_cols && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }

    /// `self += s * other`. Uses a value-wise update when patterns agree.
    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols), "shape mismatch");
        if self.same_pattern(other) {
            for (a, b) in self.values.iter_mut().zip(&other.values) {
                *a += s * b;
            }
            self.symmetric &= other.symmetric;
            return;
        }
        *self = Self::linear_combination(&[(1.0, self), (s, other)]);
    }

    /// `Σ sᵢ Aᵢ` over matrices of equal shape.
    pub fn linear_combination(terms: &[(f64, &Self)]) -> Self {
        let (n_rows, n_cols) = (terms[0].1.n_rows, terms[0].1.n_cols);
        let mut trip = Vec::new();
        for (s, m) in terms {
            assert_eq!((m.n_rows, m.n_cols), (n_rows, n_cols), "shape mismatch");
            for i in 0..m.n_rows {
                let (cols, vals) = m.row(i);
                for (&c, &v) in cols.iter().zip(vals) {
                    trip.push((i, c, s * v));
                }
            }
        }
        let mut out = Self::from_triplets(n_rows, n_cols, &trip);
        out.symmetric = terms.iter().all(|(_, m)| m.symmetric);
        out
    }

    /// Stacks blocks `[[A00, A01, ..], [A10, ..]]`; `None` is a zero block.
    /// Row heights and column widths are taken from the non-empty blocks.
    pub fn block(blocks: &[Vec<Option<&SparseMatrix>>]) -> Result<Self> {
        let nbr = blocks.len();
        let nbc = blocks[0].len();
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        for (bi, row) in blocks.iter().enumerate() {
            if row.len() != nbc {
                return Err(Error::Dimension("ragged block layout".into()));
            }
            for (bj, b) in row.iter().enumerate() {
                if let Some(m) = b {
                    for (slot, v) in [(&mut heights[bi], m.n_rows), (&mut widths[bj], m.n_cols)] {
                        match slot {
                            Some(x) if *x != v => return Err(Error::Dimension("inconsistent block sizes".into())),
                            _ => *slot = Some(v),
                        }
                    }
                }
            }
        }
        let heights: Vec<usize> = heights
            .into_iter()
            .map(|h| h.ok_or_else(|| Error::Dimension("empty block row".into())))
            .collect::<Result<_>>()?;
        let widths: Vec<usize> = widths
            .into_iter()
            .map(|w| w.ok_or_else(|| Error::Dimension("empty block column".into())))
            .collect::<Result<_>>()?;
        let col_off: Vec<usize> = widths.iter().scan(0, |s, &w| {
            let o = *s;
            *s += w;
            Some(o)
        }).collect();
        let n_rows: usize = heights.iter().sum();
        let n_cols: usize = widths.iter().sum();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (bi, row) in blocks.iter().enumerate() {
            for i in 0..heights[bi] {
                for (bj, b) in row.iter().enumerate() {
                    if let Some(m) = b {
                        let (cols, vals) = m.row(i);
                        col_idx.extend(cols.iter().map(|c| c + col_off[bj]));
                        values.extend_from_slice(vals);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        })
    }

    /// Like [`SparseMatrix::block`] for a `k × k` layout of `n × n` blocks,
    /// but with unknowns interleaved: block `(a, b)` entry `(i, j)` lands at
    /// `(k i + a, k j + b)`.
    pub fn interleave(blocks: &[Vec<Option<&SparseMatrix>>]) -> Result<Self> {
        let k = blocks.len();
        let n = blocks
            .iter()
            .flatten()
            .flatten()
            .map(|m| m.n_rows)
            .next()
            .ok_or_else(|| Error::Dimension("all blocks empty".into()))?;
        for m in blocks.iter().flatten().flatten() {
            if m.n_rows != n || m.n_cols != n {
                return Err(Error::Dimension("interleaved blocks must be square and equal".into()));
            }
        }
        if blocks.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("ragged block layout".into()));
        }
        let mut row_ptr = Vec::with_capacity(k * n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            for row in blocks {
                buf.clear();
                for (b, m) in row.iter().enumerate() {
                    if let Some(m) = m {
                        let (cols, vals) = m.row(i);
                        buf.extend(cols.iter().zip(vals).map(|(&j, &v)| (k * j + b, v)));
                    }
                }
                buf.sort_unstable_by_key(|e| e.0);
                col_idx.extend(buf.iter().map(|e| e.0));
                values.extend(buf.iter().map(|e| e.1));
                row_ptr.push(col_idx.len());
            }
        }
        Ok(Self {
            n_rows: k * n,
            n_cols: k * n,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        })
    }

    /// Largest absolute entry of `A - Aᵀ`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let d = Self::linear_combination(&[(1.0, self), (-1.0, &t)]);
        d.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Matrix Market coordinate format (1-based indices).
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(f, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(f, "{} {} {:.17e}", i + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Sparsity pattern for a pair of element-wise dof maps; used to assemble
/// many matrices with the same structure.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// `element_rows(e)` and `element_cols(e)` list the global dofs of element `e`.
    pub fn from_elements(
        n_rows: usize,
        n_cols: usize,
        n_elements: usize,
        element_rows: impl Fn(usize) -> Vec<usize>,
        element_cols: impl Fn(usize) -> Vec<usize>,
    ) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_rows];
        for e in 0..n_elements {
            let rs = element_rows(e);
            let cs = element_cols(e);
            for &r in &rs {
                rows[r].extend_from_slice(&cs);
            }
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
        }
    }

    pub fn zeros(&self) -> SparseMatrix {
        SparseMatrix::zeros_with_pattern(self.n_rows, self.n_cols, self.row_ptr.clone(), self.col_idx.clone())
    }
}

/// Scatter-adds dense element matrices into a matrix with a fixed pattern.
pub struct Assembler {
    pub matrix: SparseMatrix,
}

impl Assembler {
    pub fn new(pattern: &Pattern) -> Self {
        Self { matrix: pattern.zeros() }
    }

    /// Adds `local[r * cols.len() + c]` at `(rows[r], cols[c])`.
    pub fn add(&mut self, rows: &[usize], cols: &[usize], local: &[f64]) {
        let m = &mut self.matrix;
        let nc = cols.len();
        for (r, &gr) in rows.iter().enumerate() {
            let (a, b) = (m.row_ptr[gr], m.row_ptr[gr + 1]);
            let row_cols = &m.col_idx[a..b];
            for (c, &gc) in cols.iter().enumerate() {
                let v = local[r * nc + c];
                if v == 0.0 {
                    continue;
                }
                let k = row_cols
                    .binary_search(&gc)
                    .expect("entry outside the precomputed sparsity pattern");
                m.values[a + k] += v;
            }
        }
    }

    pub fn finish(self, symmetric: bool) -> SparseMatrix {
        let mut m = self.matrix;
        m.symmetric = symmetric;
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}
