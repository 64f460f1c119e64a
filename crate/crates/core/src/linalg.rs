//! Dense solves for the per-cell systems and sparse matrices with a fixed
//! compressed-column pattern for the global forms.
//!
//! Sparse factorizations are delegated to `faer`'s supernodal LU and
//! Cholesky; the symbolic analysis (fill-reducing ordering) is computed once
//! per pattern and reused for every numeric factorization.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot size below which a dense system is declared singular.
const DENSE_PIVOT_TOLERANCE: f64 = 1e-14;

fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `A X = B` with a fully pivoted LU.
pub fn dense_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    assert_eq!(a.nrows(), a.ncols(), "dense_solve needs a square matrix");
    assert_eq!(a.nrows(), b.nrows(), "dense_solve shape mismatch");
    let lu = a.clone().full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if a.nrows() > 0 && (max == 0.0 || min <= DENSE_PIVOT_TOLERANCE * max) {
        return Err(Error::SingularDense {
            condition: condition_estimate(a),
        });
    }
    lu.solve(b).ok_or_else(|| Error::SingularDense {
        condition: condition_estimate(a),
    })
}

/// Minimize `|D x - r_d|` subject to `C x = r_c`, column by column of the
/// right-hand sides. Without constraints this is an ordinary QR least-squares
/// fit; otherwise the KKT system `[[D^T D, C^T], [C, 0]]` is solved.
pub fn dense_lstsq_kkt(
    d: &DMatrix<f64>,
    c: &DMatrix<f64>,
    rhs_d: &DMatrix<f64>,
    rhs_c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = d.ncols();
    let m = c.nrows();
    assert_eq!(rhs_d.nrows(), d.nrows());
    assert_eq!(rhs_c.nrows(), m);
    if m == 0 {
        if d.nrows() < n {
            return Err(Error::SingularDense {
                condition: f64::INFINITY,
            });
        }
        let qr = d.clone().qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..n).map(|i| r[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if n > 0 && (max == 0.0 || min <= 1e-13 * max) {
            return Err(Error::SingularDense {
                condition: condition_estimate(d),
            });
        }
        let qtb = qr.q().transpose() * rhs_d;
        let x = r.solve_upper_triangular(&qtb).ok_or(Error::SingularDense {
            condition: f64::INFINITY,
        })?;
        return Ok(x);
    }
    assert_eq!(c.ncols(), n);
    let k = rhs_d.ncols();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&(d.transpose() * d));
    kkt.view_mut((0, n), (n, m)).copy_from(&c.transpose());
    kkt.view_mut((n, 0), (m, n)).copy_from(c);
    let mut rhs = DMatrix::zeros(n + m, k);
    rhs.view_mut((0, 0), (n, k)).copy_from(&(d.transpose() * rhs_d));
    rhs.view_mut((n, 0), (m, k)).copy_from(rhs_c);
    let sol = dense_solve(&kkt, &rhs)?;
    Ok(sol.rows(0, n).into_owned())
}

/// Compressed-column sparsity pattern with sorted row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Pattern of a square matrix of size `n` coupling every pair of indices
    /// that appear together in one block.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for block in blocks {
            for &c in block {
                cols[c].extend_from_slice(block);
            }
        }
        // Every diagonal entry is present so constrained rows can hold an identity.
        for (c, rows) in cols.iter_mut().enumerate() {
            rows.push(c);
            rows.sort_unstable();
            rows.dedup();
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        for rows in cols {
            row_idx.extend(rows);
            col_ptr.push(row_idx.len());
        }
        Self { n, col_ptr, row_idx }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    /// Storage slot of entry `(row, col)`.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (start, end) = (self.col_ptr[col], self.col_ptr[col + 1]);
        self.row_idx[start..end].binary_search(&row).ok().map(|k| start + k)
    }

    /// Storage slots of a dense block, column-major over `dofs x dofs`.
    pub fn block_positions(&self, dofs: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(dofs.len() * dofs.len());
        for &c in dofs {
            for &r in dofs {
                out.push(self.position(r, c).expect("block entry missing from pattern"));
            }
        }
        out
    }
}

/// Square sparse matrix on a shared pattern.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(r, c, _) in triplets {
            cols[c].push(r);
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        for (c, rows) in cols.iter_mut().enumerate() {
            rows.push(c);
            rows.sort_unstable();
            rows.dedup();
            row_idx.extend_from_slice(rows);
            col_ptr.push(row_idx.len());
        }
        let pattern = Arc::new(SparsityPattern { n, col_ptr, row_idx });
        let mut m = Self::zeros(pattern);
        for &(r, c, v) in triplets {
            let k = m.pattern.position(r, c).expect("triplet in pattern");
            m.values[k] += v;
        }
        m
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.position(row, col).map_or(0.0, |k| self.values[k])
    }

    /// Add a dense column-major block at precomputed storage slots.
    pub fn add_block(&mut self, positions: &[usize], block: &DMatrix<f64>) {
        debug_assert_eq!(positions.len(), block.len());
        for (&k, v) in positions.iter().zip(block.iter()) {
            self.values[k] += v;
        }
    }

    /// `self += alpha * other`; both must share the pattern.
    pub fn axpy(&mut self, alpha: f64, other: &SparseMatrix) {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_add(x, &mut y);
        y
    }

    /// `y += self * x`
    pub fn mul_vec_add(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for (c, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            for k in p.col_ptr[c]..p.col_ptr[c + 1] {
                y[p.row_idx[k]] += self.values[k] * xc;
            }
        }
    }

    /// Clear the rows and columns of `constrained` and put 1 on their diagonal.
    pub fn apply_identity_rows(&mut self, constrained: &[bool]) {
        let p = self.pattern.clone();
        for c in 0..p.n {
            for k in p.col_ptr[c]..p.col_ptr[c + 1] {
                let r = p.row_idx[k];
                if constrained[c] || constrained[r] {
                    self.values[k] = if r == c { 1.0 } else { 0.0 };
                }
            }
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let p = &self.pattern;
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        (0..p.n).all(|c| {
            (p.col_ptr[c]..p.col_ptr[c + 1]).all(|k| (self.values[k] - self.get(c, p.row_idx[k])).abs() <= tol * scale)
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = &self.pattern;
        let mut d = DMatrix::zeros(p.n, p.n);
        for c in 0..p.n {
            for k in p.col_ptr[c]..p.col_ptr[c + 1] {
                d[(p.row_idx[k], c)] += self.values[k];
            }
        }
        d
    }

    fn as_faer(&self) -> SparseColMatRef<'_, usize, f64> {
        let p = &self.pattern;
        let symbolic = SymbolicSparseColMatRef::new_checked(p.n, p.n, &p.col_ptr, None, &p.row_idx);
        SparseColMatRef::new(symbolic, &self.values)
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A sparse LU solve context. The symbolic analysis is cached and reused as
/// long as matrices share the same pattern.
#[derive(Default)]
pub struct SparseSolver {
    symbolic: Option<(Arc<SparsityPattern>, SymbolicLu<usize>)>,
}

/// A numeric factorization produced by [`SparseSolver::factor`].
pub struct SparseFactor {
    lu: Lu<usize, f64>,
    matrix: SparseMatrix,
    norm_inf: f64,
}

impl SparseSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factor(&mut self, a: &SparseMatrix) -> Result<SparseFactor> {
        let reuse = matches!(&self.symbolic, Some((p, _)) if Arc::ptr_eq(p, a.pattern()) || **p == **a.pattern());
        if !reuse {
            let sym = SymbolicLu::try_new(a.as_faer().symbolic())
                .map_err(|e| Error::SparseFactorization(format!("symbolic analysis failed: {e:?}")))?;
            self.symbolic = Some((a.pattern().clone(), sym));
        }
        let sym = self.symbolic.as_ref().expect("symbolic set").1.clone();
        let lu = Lu::try_new_with_symbolic(sym, a.as_faer())
            .map_err(|e| Error::SparseFactorization(format!("numeric factorization failed: {e:?}")))?;
        let mut rows = vec![0.0f64; a.dim()];
        for (&r, v) in a.pattern().row_idx().iter().zip(a.values()) {
            rows[r] += v.abs();
        }
        Ok(SparseFactor {
            lu,
            matrix: a.clone(),
            norm_inf: rows.into_iter().fold(0.0, f64::max),
        })
    }
}

impl SparseFactor {
    /// Solve `A x = b`, refining (at most three steps) until the normwise
    /// backward error `|A x - b| / (|A| |x| + |b|)` in the max norm is below
    /// `1e-12`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let solve_once = |rhs: &[f64]| {
            let mut m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
            self.lu.solve_in_place(m.as_mut());
            (0..n).map(|i| m[(i, 0)]).collect::<Vec<f64>>()
        };
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let residual = |x: &[f64]| -> Vec<f64> {
            let ax = self.matrix.mul_vec(x);
            b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
        };
        let accept = |x: &[f64], r: &[f64]| {
            let rn = inf(r);
            x.iter().chain(r).all(|v| v.is_finite()) && (rn == 0.0 || rn <= 1e-12 * (self.norm_inf * inf(x) + inf(b)))
        };
        let mut x = solve_once(b);
        for _ in 0..3 {
            let r = residual(&x);
            if accept(&x, &r) {
                return Ok(x);
            }
            if !r.iter().all(|v| v.is_finite()) {
                break;
            }
            let dx = solve_once(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        let r = residual(&x);
        if accept(&x, &r) {
            Ok(x)
        } else {
            Err(Error::SparseFactorization(format!(
                "numerically singular: residual {:.3e} for right-hand side norm {:.3e}",
                inf(&r),
                inf(b)
            )))
        }
    }
}

pub fn sparse_factor_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SparseSolver::new().factor(a)?.solve(b)
}

/// Sparse Cholesky context for symmetric positive definite matrices, with the
/// symbolic analysis cached per pattern. Only the lower triangle is read.
#[derive(Default)]
pub struct CholeskySolver {
    symbolic: Option<(Arc<SparsityPattern>, SymbolicLlt<usize>)>,
}

pub struct CholeskyFactor {
    llt: Llt<usize, f64>,
}

impl CholeskySolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factor(&mut self, a: &SparseMatrix) -> Result<CholeskyFactor> {
        let reuse = matches!(&self.symbolic, Some((p, _)) if Arc::ptr_eq(p, a.pattern()) || **p == **a.pattern());
        if !reuse {
            let sym = SymbolicLlt::try_new(a.as_faer().symbolic(), Side::Lower)
                .map_err(|e| Error::SparseFactorization(format!("symbolic analysis failed: {e:?}")))?;
            self.symbolic = Some((a.pattern().clone(), sym));
        }
        let sym = self.symbolic.as_ref().expect("symbolic set").1.clone();
        let llt = Llt::try_new_with_symbolic(sym, a.as_faer(), Side::Lower)
            .map_err(|e| Error::SparseFactorization(format!("matrix is not positive definite: {e:?}")))?;
        Ok(CholeskyFactor { llt })
    }
}

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        self.llt.solve_in_place(m.as_mut());
        (0..n).map(|i| m[(i, 0)]).collect()
    }
}

/// Right-preconditioned GMRES without restarts, started from zero. Returns
/// `None` unless `|b - A x| <= rtol |b|` within `max_iter` iterations.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precondition: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Option<Vec<f64>> {
    let n = b.len();
    let beta = norm2(b);
    if beta == 0.0 {
        return Some(vec![0.0; n]);
    }
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / beta).collect()];
    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut hess: Vec<Vec<f64>> = Vec::new();
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    for k in 0..max_iter {
        let z = precondition(&basis[k]);
        let mut w = apply(&z);
        directions.push(z);
        let mut h = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            h[i] = dot(&w, v);
            w.iter_mut().zip(v).for_each(|(wj, vj)| *wj -= h[i] * vj);
        }
        let norm = norm2(&w);
        h[k + 1] = norm;
        for i in 0..k {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let r = h[k].hypot(h[k + 1]);
        if !(r > 0.0) || !r.is_finite() {
            return None;
        }
        cs.push(h[k] / r);
        sn.push(h[k + 1] / r);
        h[k] = r;
        h[k + 1] = 0.0;
        g.push(-sn[k] * g[k]);
        g[k] *= cs[k];
        hess.push(h);
        if g[k + 1].abs() <= rtol * beta || norm == 0.0 {
            let mut y = vec![0.0; k + 1];
            for i in (0..=k).rev() {
                let s: f64 = (i + 1..=k).map(|j| hess[j][i] * y[j]).sum();
                y[i] = (g[i] - s) / hess[i][i];
            }
            let mut x = vec![0.0; n];
            for (yi, z) in y.iter().zip(&directions) {
                x.iter_mut().zip(z).for_each(|(xj, zj)| *xj += yi * zj);
            }
            return x.iter().all(|v| v.is_finite()).then_some(x);
        }
        basis.push(w.iter().map(|x| x / norm).collect());
    }
    None
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve() {
        let a = DMatrix::<f64>::identity(4, 4);
        let b = DMatrix::from_fn(4, 2, |i, j| (i + 3 * j) as f64);
        assert_eq!(dense_solve(&a, &b).unwrap(), b);
    }

    #[test]
    fn singular_dense_reports_condition() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = dense_solve(&a, &DMatrix::from_element(2, 1, 1.0)).unwrap_err();
        assert!(matches!(err, Error::SingularDense { .. }));
    }

    #[test]
    fn unconstrained_lstsq_exact_data() {
        let d = DMatrix::from_fn(6, 3, |i, j| (i as f64 * 0.3 + 1.0).powi(j as i32));
        let x = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let got = dense_lstsq_kkt(&d, &DMatrix::zeros(0, 3), &(&d * &x), &DMatrix::zeros(0, 1)).unwrap();
        assert!((got - x).norm() < 1e-12);
    }

    #[test]
    fn constrained_lstsq_holds_constraint() {
        let d = DMatrix::from_fn(6, 3, |i, j| ((i + 1) as f64).powi(j as i32) / 10.0);
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let rhs = DMatrix::from_fn(6, 1, |i, _| (i as f64).sin());
        let x = dense_lstsq_kkt(&d, &c, &rhs, &DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert!(((&c * &x)[(0, 0)] - 2.0).abs() < 1e-12);
        // Feasible perturbations never decrease the objective.
        let obj = |x: &DMatrix<f64>| (&d * x - &rhs).norm_squared();
        let base = obj(&x);
        for dir in [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [1.0, 1.0, -2.0]] {
            let p = DMatrix::from_column_slice(3, 1, &dir) * 1e-3;
            assert!(obj(&(&x + &p)) >= base - 1e-14);
            assert!(obj(&(&x - &p)) >= base - 1e-14);
        }
    }

    #[test]
    fn spd_matches_conjugate_gradient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = DMatrix::from_fn(20, 20, |_, _| rng.random::<f64>() - 0.5);
        let a = &g * g.transpose() + DMatrix::identity(20, 20) * 2.0;
        let b = DVector::from_fn(20, |_, _| rng.random::<f64>());
        let x = dense_solve(&a, &DMatrix::from_column_slice(20, 1, b.as_slice())).unwrap();
        // Oracle: conjugate gradients iterated to machine precision.
        let mut y = DVector::zeros(20);
        let mut r = &b - &a * &y;
        let mut p = r.clone();
        for _ in 0..200 {
            let rr = r.dot(&r);
            if rr.sqrt() < 1e-15 {
                break;
            }
            let ap = &a * &p;
            let alpha = rr / p.dot(&ap);
            y += &p * alpha;
            r -= &ap * alpha;
            p = &r + &p * (r.dot(&r) / rr);
        }
        assert!((x.column(0) - y).norm() < 1e-10);
    }

    #[test]
    fn diagonal_sparse_solve() {
        let trip: Vec<_> = (0..5).map(|i| (i, i, (i + 1) as f64)).collect();
        let a = SparseMatrix::from_triplets(5, &trip);
        let x = sparse_factor_solve(&a, &[1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - 1.0 / (i + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn tridiagonal_laplacian_against_analytic() {
        // -u'' = 1 on (0,1) with u(0)=u(1)=0 discretised: the discrete solution is
        // exactly u_i = x_i (1 - x_i) / 2.
        let n = 100;
        let h = 1.0 / (n + 1) as f64;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0));
            if i > 0 {
                trip.push((i, i - 1, -1.0));
                trip.push((i - 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, &trip);
        let b = vec![h * h; n];
        let x = sparse_factor_solve(&a, &b).unwrap();
        for (i, xi) in x.iter().enumerate() {
            let xv = (i + 1) as f64 * h;
            assert!((xi - xv * (1.0 - xv) / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicates_are_summed_and_identity_rows() {
        let mut a = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (2, 2, 5.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        a.apply_identity_rows(&[false, true, false]);
        assert_eq!(a.get(1, 1), 1.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert!(a.is_symmetric(0.0));
    }

    #[test]
    fn singular_sparse_is_an_error() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(sparse_factor_solve(&a, &[1.0, 2.0]).is_err());
    }
    fn random_sparse(n: usize, seed: u64, shift: f64, symmetric: bool) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, shift));
            for j in [i + 1, i + 3] {
                if j < n {
                    let (a, b) = (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                    trip.push((i, j, a));
                    trip.push((j, i, if symmetric { a } else { b }));
                }
            }
        }
        SparseMatrix::from_triplets(n, &trip)
    }

    #[test]
    fn cholesky_matches_lu() {
        let a = random_sparse(40, 3, 4.0, true);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).cos()).collect();
        let mut solver = CholeskySolver::new();
        let x = solver.factor(&a).unwrap().solve(&b);
        let y = sparse_factor_solve(&a, &b).unwrap();
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-12));
        // The cached analysis is reused for new values on the same pattern.
        let mut a2 = a.clone();
        a2.scale(2.0);
        let x2 = solver.factor(&a2).unwrap().solve(&b);
        assert!(x2.iter().zip(&x).all(|(p, q)| (2.0 * p - q).abs() < 1e-12));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(CholeskySolver::new().factor(&a).is_err());
    }

    #[test]
    fn gmres_solves_nonsymmetric_systems() {
        let a = random_sparse(60, 9, 3.0, false);
        let b: Vec<f64> = (0..60).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
        let exact = sparse_factor_solve(&a, &b).unwrap();
        let x = gmres(|v| a.mul_vec(v), |v| v.to_vec(), &b, 1e-12, 60).unwrap();
        assert!(x.iter().zip(&exact).all(|(p, q)| (p - q).abs() < 1e-9));
        // An exact preconditioner converges in one iteration.
        let f = SparseSolver::new().factor(&a).unwrap();
        let x = gmres(|v| a.mul_vec(v), |v| f.solve(v).unwrap(), &b, 1e-12, 1).unwrap();
        assert!(x.iter().zip(&exact).all(|(p, q)| (p - q).abs() < 1e-10));
        assert!(gmres(|v| a.mul_vec(v), |v| v.to_vec(), &b, 1e-12, 2).is_none());
        assert_eq!(gmres(|v| a.mul_vec(v), |v| v.to_vec(), &[0.0; 60], 1e-12, 2).unwrap(), vec![0.0; 60]);
    }
}
