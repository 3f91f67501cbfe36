//! Compressed sparse row matrices, block-system composition and direct
//! solvers with a relative-residual accuracy contract.
//!
//! Factorizations are delegated to `faer`'s sparse LU and Cholesky. A CSR
//! matrix is handed to `faer` as the CSC storage of its transpose, so no
//! conversion is needed; systems are then solved with the transposed factors.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Relative residual `||Ax - b|| / max(||b||, 1e-300)` every solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENT_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, cap: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn build(self) -> Result<CsrMatrix> {
        triplets_to_csr(self.rows, self.cols, &self.entries)
    }
}

/// Builds a CSR matrix, summing duplicates in insertion order. Explicit zeros
/// are kept so that the sparsity pattern depends only on the index set.
pub fn triplets_to_csr(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> Result<CsrMatrix> {
    for &(r, c, _) in entries {
        if r >= rows || c >= cols {
            return Err(Error::IndexOutOfRange {
                row: r,
                col: c,
                rows,
                cols,
            });
        }
    }
    // Counting sort by row keeps insertion order within each row.
    let mut counts = vec![0usize; rows + 1];
    for &(r, _, _) in entries {
        counts[r + 1] += 1;
    }
    for i in 0..rows {
        counts[i + 1] += counts[i];
    }
    let mut next = counts.clone();
    let mut by_row = vec![(0usize, 0.0f64); entries.len()];
    for &(r, c, v) in entries {
        by_row[next[r]] = (c, v);
        next[r] += 1;
    }

    let mut row_ptr = Vec::with_capacity(rows + 1);
    let mut col_idx = Vec::with_capacity(entries.len());
    let mut values = Vec::with_capacity(entries.len());
    row_ptr.push(0);
    for r in 0..rows {
        let slice = &mut by_row[counts[r]..counts[r + 1]];
        // Stable: equal columns stay in insertion order.
        slice.sort_by_key(|&(c, _)| c);
        let mut k = 0;
        while k < slice.len() {
            let c = slice[k].0;
            let mut sum = 0.0;
            while k < slice.len() && slice[k].0 == c {
                sum += slice[k].1;
                k += 1;
            }
            col_idx.push(c);
            values.push(sum);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix {
        rows,
        cols,
        row_ptr,
        col_idx,
        values,
    })
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let mut b = TripletBuilder::new(rows, cols);
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build().expect("indices in range by construction")
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `sum_k alpha_k A_k`; the result pattern is the union of the inputs.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Result<CsrMatrix> {
        let (rows, cols) = match terms.first() {
            Some((_, m)) => (m.rows, m.cols),
            None => return Err(Error::InvalidArgument("empty linear combination".into())),
        };
        for (_, m) in terms {
            if m.rows != rows || m.cols != cols {
                return Err(Error::DimensionMismatch {
                    expected: rows * cols,
                    found: m.rows * m.cols,
                });
            }
        }
        let mut b = TripletBuilder::with_capacity(rows, cols, terms.iter().map(|(_, m)| m.nnz()).sum());
        for i in 0..rows {
            for (alpha, m) in terms {
                for (j, v) in m.row(i) {
                    b.push(i, j, alpha * v);
                }
            }
        }
        b.build()
    }

    /// Replaces every row and column flagged in `fixed` by the unit vector,
    /// keeping the pattern. Masked diagonals must be present in the pattern.
    pub fn eliminate(&mut self, fixed: &[bool]) -> Result<()> {
        if fixed.len() != self.rows || self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: fixed.len(),
            });
        }
        for i in 0..self.rows {
            let mut has_diag = false;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if fixed[i] || fixed[j] {
                    self.values[k] = if i == j { 1.0 } else { 0.0 };
                }
                has_diag |= i == j;
            }
            if fixed[i] && !has_diag {
                return Err(Error::InvalidArgument(format!("row {i} has no diagonal entry to pin")));
            }
        }
        Ok(())
    }

    /// Imposes `x[i] = g[i]` on fixed unknowns: lifts the known values into
    /// `rhs`, then pins the rows and columns as in [`CsrMatrix::eliminate`].
    pub fn eliminate_with_values(&mut self, fixed: &[bool], g: &[f64], rhs: &mut [f64]) -> Result<()> {
        if g.len() != self.cols || rhs.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: g.len(),
            });
        }
        let lift: Vec<f64> = g.iter().zip(fixed).map(|(&v, &f)| if f { v } else { 0.0 }).collect();
        if lift.iter().any(|&v| v != 0.0) {
            for (r, a) in rhs.iter_mut().zip(self.matvec(&lift)) {
                *r -= a;
            }
        }
        for (i, r) in rhs.iter_mut().enumerate() {
            if fixed[i] {
                *r = lift[i];
            }
        }
        self.eliminate(fixed)
    }

    fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }

    /// Storage of `A` read as the CSC storage of `A^T`.
    fn transposed_view(&self) -> SparseColMatRef<'_, usize, f64> {
        let sym = SymbolicSparseColMatRef::new_checked(self.cols, self.rows, &self.row_ptr, None, &self.col_idx);
        SparseColMatRef::new(sym, &self.values)
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Relative residual `||Ax - b||_2 / max(||b||_2, 1e-300)`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r: Vec<f64> = a.matvec(x).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
    norm2(&r) / norm2(b).max(1e-300)
}

fn check_square(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.rows != a.cols {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, not square", a.rows, a.cols)));
    }
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            found: b.len(),
        });
    }
    Ok(())
}

/// Sparse LU solver that reuses the symbolic analysis while the sparsity
/// pattern stays the same.
#[derive(Default)]
pub struct DirectSolver {
    cached: Option<(CsrMatrix, SymbolicLu<usize>)>,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        check_square(a, b)?;
        let view = a.transposed_view();
        let reuse = matches!(&self.cached, Some((pattern, _)) if pattern.same_pattern(a));
        if !reuse {
            let symbolic = SymbolicLu::try_new(view.symbolic()).map_err(|e| Error::Singular(format!("{e:?}")))?;
            let mut pattern = a.clone();
            pattern.values.clear();
            self.cached = Some((pattern, symbolic));
        }
        let symbolic = self.cached.as_ref().map(|(_, s)| s.clone()).expect("cached above");
        let lu = Lu::try_new_with_symbolic(symbolic, view).map_err(|e| Error::Singular(format!("{e:?}")))?;
        refine(a, b, |rhs| lu.solve_transpose_in_place(rhs))
    }
}

/// One-shot sparse LU solve.
pub fn solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DirectSolver::new().solve(a, b)
}

/// Sparse Cholesky solve for symmetric positive definite matrices.
pub fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(a, b)?;
    // Symmetric: the transposed view is the matrix itself.
    let view = a.transposed_view();
    let symbolic = SymbolicLlt::try_new(view.symbolic(), Side::Lower).map_err(|e| Error::Singular(format!("{e:?}")))?;
    let llt = Llt::try_new_with_symbolic(symbolic, view, Side::Lower).map_err(|e| Error::Singular(format!("{e:?}")))?;
    refine(a, b, |rhs| llt.solve_in_place(rhs))
}

/// Applies the factorization, then iterative refinement until the residual
/// contract holds.
fn refine(a: &CsrMatrix, b: &[f64], apply: impl Fn(&mut Mat<f64>)) -> Result<Vec<f64>> {
    let n = b.len();
    let mut work = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    apply(&mut work);
    let mut x: Vec<f64> = (0..n).map(|i| work[(i, 0)]).collect();
    let bnorm = norm2(b).max(1e-300);
    let mut residual = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENT_STEPS {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        residual = norm2(&r) / bnorm;
        if !residual.is_finite() {
            return Err(Error::Singular(format!("non-finite residual {residual}")));
        }
        if residual <= RESIDUAL_TOLERANCE {
            return Ok(x);
        }
        let mut corr = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
        apply(&mut corr);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += corr[(i, 0)];
        }
    }
    Err(Error::SolverContract {
        residual,
        tolerance: RESIDUAL_TOLERANCE,
    })
}

/// A monolithic system built from named variable blocks.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    names: Vec<String>,
    offsets: Vec<usize>,
    blocks: Vec<(usize, usize, CsrMatrix)>,
    pub rhs: Vec<f64>,
}

impl BlockSystem {
    /// `vars` lists `(name, size)` in unknown order.
    pub fn new(vars: &[(&str, usize)]) -> Self {
        let mut offsets = vec![0];
        for (_, n) in vars {
            offsets.push(offsets.last().unwrap() + n);
        }
        let total = *offsets.last().unwrap();
        Self {
            names: vars.iter().map(|(s, _)| s.to_string()).collect(),
            offsets,
            blocks: Vec::new(),
            rhs: vec![0.0; total],
        }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn var(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown block variable {name}"))
    }

    pub fn range(&self, var: usize) -> std::ops::Range<usize> {
        self.offsets[var]..self.offsets[var + 1]
    }

    pub fn size(&self, var: usize) -> usize {
        self.offsets[var + 1] - self.offsets[var]
    }

    /// Adds `alpha * m` at block `(row, col)`.
    pub fn add_block(&mut self, row: usize, col: usize, m: &CsrMatrix, alpha: f64) -> Result<()> {
        if m.rows != self.size(row) || m.cols != self.size(col) {
            return Err(Error::InvalidArgument(format!(
                "block ({}, {}) is {}x{}, expected {}x{}",
                self.names[row],
                self.names[col],
                m.rows,
                m.cols,
                self.size(row),
                self.size(col)
            )));
        }
        let block = if alpha == 1.0 { m.clone() } else { m.scaled(alpha) };
        self.blocks.push((row, col, block));
        Ok(())
    }

    /// Adds the constraint pair: column `m` in rows of `field` against the
    /// scalar `multiplier`, and the transposed row `m^T` in the multiplier row.
    pub fn add_mean_constraint(&mut self, field: usize, multiplier: usize, m: &[f64]) -> Result<()> {
        if self.size(multiplier) != 1 || m.len() != self.size(field) {
            return Err(Error::DimensionMismatch {
                expected: self.size(field),
                found: m.len(),
            });
        }
        let column: Vec<_> = m.iter().enumerate().map(|(i, &v)| (i, 0, v)).collect();
        let col = triplets_to_csr(m.len(), 1, &column)?;
        let row = col.transpose();
        self.blocks.push((field, multiplier, col));
        self.blocks.push((multiplier, field, row));
        Ok(())
    }

    pub fn set_rhs(&mut self, var: usize, values: &[f64]) {
        let r = self.range(var);
        self.rhs[r].copy_from_slice(values);
    }

    /// Merges all blocks into one CSR matrix; coincident entries are summed in
    /// block insertion order.
    pub fn assemble(&self) -> CsrMatrix {
        let n = self.dim();
        let nnz = self.blocks.iter().map(|(_, _, m)| m.nnz()).sum();
        let mut b = TripletBuilder::with_capacity(n, n, nnz);
        for (row, col, m) in &self.blocks {
            let (r0, c0) = (self.offsets[*row], self.offsets[*col]);
            for i in 0..m.rows {
                for (j, v) in m.row(i) {
                    b.push(r0 + i, c0 + j, v);
                }
            }
        }
        b.build().expect("block offsets in range")
    }

    pub fn split<'a>(&self, x: &'a [f64], var: usize) -> &'a [f64] {
        &x[self.range(var)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.random::<f64>() < density { rng.random_range(-1.0..1.0) } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn duplicates_are_summed() {
        let m = triplets_to_csr(1, 1, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn empty_triplets() {
        let m = triplets_to_csr(3, 3, &[]).unwrap();
        assert_eq!(m.matvec(&[1.0, 2.0, 3.0]), vec![0.0; 3]);
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(
            triplets_to_csr(2, 2, &[(2, 0, 1.0)]),
            Err(Error::IndexOutOfRange { row: 2, .. })
        ));
    }

    #[test]
    fn random_triplets_match_dense_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (r, c) = (13, 9);
        let mut dense = vec![vec![0.0; c]; r];
        let entries: Vec<_> = (0..300)
            .map(|_| {
                let (i, j, v) = (rng.random_range(0..r), rng.random_range(0..c), rng.random_range(-1.0..1.0));
                dense[i][j] += v;
                (i, j, v)
            })
            .collect();
        let m = triplets_to_csr(r, c, &entries).unwrap();
        let got = m.to_dense();
        for i in 0..r {
            assert!(m.col_idx[m.row_ptr[i]..m.row_ptr[i + 1]].windows(2).all(|w| w[0] < w[1]));
            for j in 0..c {
                assert!((got[i][j] - dense[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let d = random_dense(&mut rng, 20, 0.3);
            let m = CsrMatrix::from_dense(&d);
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = m.matvec(&x);
            let oracle = DMatrix::from_fn(20, 20, |i, j| d[i][j]) * DVector::from_vec(x.clone());
            for i in 0..20 {
                assert!((y[i] - oracle[i]).abs() <= 1e-13 * oracle.norm().max(1.0));
            }
            let t = m.transpose();
            for i in 0..20 {
                for j in 0..20 {
                    assert_eq!(t.get(i, j), d[j][i]);
                }
            }
        }
    }

    #[test]
    fn small_solves() {
        let x = solve(&CsrMatrix::identity(4), &[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0, 0.5]);
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        for x in [solve(&a, &[3.0, 3.0]).unwrap(), solve_spd(&a, &[3.0, 3.0]).unwrap()] {
            assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nonsymmetric_solve_meets_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut d = random_dense(&mut rng, 40, 0.15);
        for (i, row) in d.iter_mut().enumerate() {
            row[i] += 4.0;
        }
        let a = CsrMatrix::from_dense(&d);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let mut solver = DirectSolver::new();
        let x = solver.solve(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) <= RESIDUAL_TOLERANCE);
        // Second solve with the same pattern reuses the symbolic analysis.
        let a2 = a.scaled(2.0);
        let x2 = solver.solve(&a2, &b).unwrap();
        for (u, v) in x.iter().zip(&x2) {
            assert!((u - 2.0 * v).abs() < 1e-12);
        }
    }

    #[test]
    fn spd_solve_matches_dense_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let n = 25;
            let r = DMatrix::from_fn(n, n, |_, _| if rng.random::<f64>() < 0.2 { rng.random_range(-1.0..1.0) } else { 0.0 });
            let spd = &r * r.transpose() + DMatrix::identity(n, n) * (n as f64 * 0.1);
            let dense: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| spd[(i, j)]).collect()).collect();
            let a = CsrMatrix::from_dense(&dense);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = solve_spd(&a, &b).unwrap();
            let oracle = spd.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
            let err = (DVector::from_vec(x) - &oracle).norm() / oracle.norm();
            assert!(err < 1e-9, "relative error {err}");
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(solve(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn eliminate_pins_rows_and_columns() {
        let mut a = CsrMatrix::from_dense(&[vec![4.0, 1.0, 2.0], vec![1.0, 5.0, 3.0], vec![2.0, 3.0, 6.0]]);
        a.eliminate(&[false, true, false]).unwrap();
        assert_eq!(a.to_dense(), vec![vec![4.0, 0.0, 2.0], vec![0.0, 1.0, 0.0], vec![2.0, 0.0, 6.0]]);
        assert_eq!(a.nnz(), 9);
    }

    #[test]
    fn block_system_layout() {
        let mut sys = BlockSystem::new(&[("a", 2), ("b", 1), ("lam", 1)]);
        let (a, b, lam) = (sys.var("a"), sys.var("b"), sys.var("lam"));
        sys.add_block(a, a, &CsrMatrix::identity(2), 2.0).unwrap();
        sys.add_block(a, a, &CsrMatrix::identity(2), 1.0).unwrap();
        sys.add_block(b, b, &CsrMatrix::identity(1), 1.0).unwrap();
        sys.add_mean_constraint(a, lam, &[0.5, 0.25]).unwrap();
        assert!(sys.add_block(a, b, &CsrMatrix::identity(2), 1.0).is_err());
        let m = sys.assemble();
        assert_eq!(
            m.to_dense(),
            vec![
                vec![3.0, 0.0, 0.0, 0.5],
                vec![0.0, 3.0, 0.0, 0.25],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.5, 0.25, 0.0, 0.0]
            ]
        );
    }

    #[test]
    fn matrix_market_dump() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, -2.5]]);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 2 2");
        assert!(lines[3].starts_with("2 2 -2.5"));
    }
}
