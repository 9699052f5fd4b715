//! Dense complex linear algebra with explicit tolerance handling.
//!
//! Everything downstream (twisted boundary matrices, transition-matrix
//! determinants, Mayer-Vietoris induced maps) reduces to a handful of
//! operations on small dense matrices over C: ranks, kernel and image
//! bases, solves within a span, and determinants. Rank decisions use
//! full-pivot Gaussian elimination with an absolute threshold scaled by
//! the largest entry of the input; boundary matrices in this domain have
//! entries of order one (roots of unity and small integers), so the
//! scale-aware absolute test is stable at desk scale.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("NotSquare: matrix is {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("SizeMismatch: {0}")]
    SizeMismatch(String),
    #[error("NotInSpan: residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    NotInSpan { residual: f64, threshold: f64 },
    #[error("NonFinite: matrix contains a NaN or infinite entry")]
    NonFinite,
    #[error("Singular: matrix is numerically singular")]
    Singular,
}

/// Thresholds for rank decisions (`pivot_eps`, absolute, scaled by the
/// largest entry of the matrix at hand) and value comparison
/// (`compare_rel`, relative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub pivot_eps: f64,
    pub compare_rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            pivot_eps: 1e-9,
            compare_rel: 1e-6,
        }
    }
}

impl Tolerance {
    pub fn new(pivot_eps: f64, compare_rel: f64) -> Result<Self, LinalgError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(pivot_eps) || !ok(compare_rel) {
            return Err(LinalgError::SizeMismatch(
                "tolerances must be strictly positive".into(),
            ));
        }
        Ok(Tolerance {
            pivot_eps,
            compare_rel,
        })
    }

    /// Same pivot threshold, different comparison threshold.
    pub fn with_compare_rel(self, compare_rel: f64) -> Self {
        Tolerance {
            compare_rel,
            ..self
        }
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Rows given as nested slices of (re, im) pairs; handy in tests.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        CMatrix::from_rows(
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect::<Vec<_>>(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry magnitude; 0 for empty matrices.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "mul shape");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape");
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)] * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    /// Columns `js` of `self`, in the order given.
    pub fn select_columns(&self, js: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.rows, js.len(), |i, k| self[(i, js[k])])
    }

    /// Horizontal concatenation; all blocks must share the row count.
    pub fn hstack(blocks: &[&CMatrix]) -> CMatrix {
        if blocks.is_empty() {
            return CMatrix::zeros(0, 0);
        }
        let rows = blocks[0].rows;
        assert!(blocks.iter().all(|b| b.rows == rows), "hstack rows");
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = CMatrix::zeros(rows, cols);
        let mut at = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out[(i, at + j)] = b[(i, j)];
                }
            }
            at += b.cols;
        }
        out
    }

    /// Writes `block` with its (0,0) entry at (r0, c0).
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols, "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Inverse by full-pivot elimination; `Singular` when a pivot vanishes.
    pub fn inverse(&self) -> Result<CMatrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        // Gauss-Jordan on [self | I] with partial pivoting.
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        for k in 0..n {
            let (mut pr, mut best) = (k, 0.0f64);
            for i in k..n {
                let m = a[(i, k)].norm();
                if m > best {
                    best = m;
                    pr = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::Singular);
            }
            if pr != k {
                for j in 0..n {
                    a.data.swap(pr * n + j, k * n + j);
                    inv.data.swap(pr * n + j, k * n + j);
                }
            }
            let p = a[(k, k)];
            for j in 0..n {
                a[(k, j)] /= p;
                inv[(k, j)] /= p;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let akj = a[(k, j)];
                    let ikj = inv[(k, j)];
                    a[(i, j)] -= f * akj;
                    inv[(i, j)] -= f * ikj;
                }
            }
        }
        Ok(inv)
    }
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Full-pivot LU record. `u` holds the eliminated matrix (multipliers in
/// the strictly lower part), `row_of[k]`/`col_of[k]` map position k back
/// to the original index.
struct Elimination {
    u: CMatrix,
    col_of: Vec<usize>,
    row_swap_at: Vec<(usize, usize)>,
    rank: usize,
}

fn eliminate(m: &CMatrix, pivot_eps: f64) -> Elimination {
    let (rows, cols) = (m.rows(), m.cols());
    let mut u = m.clone();
    let mut col_of: Vec<usize> = (0..cols).collect();
    let mut row_swap_at = Vec::new();
    let threshold = pivot_eps * m.max_abs();
    let steps = rows.min(cols);
    let mut rank = 0;
    for k in 0..steps {
        let (mut pi, mut pj, mut best) = (k, k, 0.0f64);
        for i in k..rows {
            for j in k..cols {
                let mag = u[(i, j)].norm();
                if mag > best {
                    best = mag;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= threshold {
            break;
        }
        if pi != k {
            for j in 0..cols {
                u.data.swap(pi * cols + j, k * cols + j);
            }
        }
        row_swap_at.push((k, pi));
        if pj != k {
            for i in 0..rows {
                u.data.swap(i * cols + pj, i * cols + k);
            }
            col_of.swap(pj, k);
        }
        let pivot = u[(k, k)];
        for i in k + 1..rows {
            let f = u[(i, k)] / pivot;
            u[(i, k)] = f; // keep the multiplier
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for j in k + 1..cols {
                let ukj = u[(k, j)];
                u[(i, j)] -= f * ukj;
            }
        }
        rank = k + 1;
    }
    Elimination {
        u,
        col_of,
        row_swap_at,
        rank,
    }
}

/// Numerical rank under the scale-aware absolute pivot threshold.
pub fn rank(m: &CMatrix, tol: Tolerance) -> usize {
    eliminate(m, tol.pivot_eps).rank
}

/// Columns of `m` (unnormalized, original entries) spanning its column
/// space; the column count is the numerical rank. A zero matrix yields a
/// zero-column result.
pub fn image_basis(m: &CMatrix, tol: Tolerance) -> CMatrix {
    let e = eliminate(m, tol.pivot_eps);
    let mut pivots: Vec<usize> = e.col_of[..e.rank].to_vec();
    pivots.sort_unstable();
    m.select_columns(&pivots)
}

/// Basis of the numerical null space; column count is cols - rank.
pub fn kernel_basis(m: &CMatrix, tol: Tolerance) -> CMatrix {
    let e = eliminate(m, tol.pivot_eps);
    let (rank, cols) = (e.rank, m.cols());
    let free = cols - rank;
    let mut out = CMatrix::zeros(cols, free);
    // Free positions sorted by original column index for determinism.
    let mut free_positions: Vec<usize> = (rank..cols).collect();
    free_positions.sort_by_key(|&pos| e.col_of[pos]);
    for (fi, &fpos) in free_positions.iter().enumerate() {
        // Solve U[0..rank,0..rank] x = -U[0..rank, fpos], back substitution.
        let mut x = vec![Complex64::new(0.0, 0.0); rank];
        for k in (0..rank).rev() {
            let mut s = -e.u[(k, fpos)];
            for j in k + 1..rank {
                s -= e.u[(k, j)] * x[j];
            }
            x[k] = s / e.u[(k, k)];
        }
        for k in 0..rank {
            out[(e.col_of[k], fi)] = x[k];
        }
        out[(e.col_of[fpos], fi)] = Complex64::new(1.0, 0.0);
    }
    out
}

/// Solves M x = b for one preimage (free variables set to zero), used to
/// realize sections by choosing preimages of boundary columns. Errors
/// with `NotInSpan` when the final residual exceeds
/// `pivot_eps * (1 + |b|)`.
pub fn solve_in_span(m: &CMatrix, b: &[Complex64], tol: Tolerance) -> Result<Vec<Complex64>, LinalgError> {
    assert_eq!(m.rows(), b.len(), "solve_in_span shape");
    let e = eliminate(m, tol.pivot_eps);
    // Stored multipliers are in final row order, so permute b fully
    // before the forward substitution.
    let mut rhs = b.to_vec();
    for &(at, with) in &e.row_swap_at {
        rhs.swap(at, with);
    }
    for k in 0..e.rank {
        for i in k + 1..m.rows() {
            let f = e.u[(i, k)];
            let rk = rhs[k];
            rhs[i] -= f * rk;
        }
    }
    // Back substitution on the rank x rank triangular head.
    let mut xp = vec![Complex64::new(0.0, 0.0); e.rank];
    for k in (0..e.rank).rev() {
        let mut s = rhs[k];
        for j in k + 1..e.rank {
            s -= e.u[(k, j)] * xp[j];
        }
        xp[k] = s / e.u[(k, k)];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); m.cols()];
    for k in 0..e.rank {
        x[e.col_of[k]] = xp[k];
    }
    let residual_vec: Vec<Complex64> = m
        .mul_vec(&x)
        .iter()
        .zip(b)
        .map(|(a, c)| a - c)
        .collect();
    let residual = vec_norm(&residual_vec);
    let threshold = tol.pivot_eps * (1.0 + vec_norm(b));
    if residual > threshold {
        return Err(LinalgError::NotInSpan {
            residual,
            threshold,
        });
    }
    Ok(x)
}

/// Determinant by full-pivot elimination with the permutation sign
/// tracked exactly. Runs to completion without rank thresholding so that
/// near-singular matrices report their actual tiny determinant.
pub fn det(m: &CMatrix) -> Result<Complex64, LinalgError> {
    if m.rows() != m.cols() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0)); // empty product
    }
    let mut a = m.clone();
    let mut sign = 1.0f64;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0f64);
        for i in k..n {
            for j in k..n {
                let mag = a[(i, j)].norm();
                if mag > best {
                    best = mag;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if pi != k {
            for j in 0..n {
                a.data.swap(pi * n + j, k * n + j);
            }
            sign = -sign;
        }
        if pj != k {
            for i in 0..n {
                a.data.swap(i * n + pj, i * n + k);
            }
            sign = -sign;
        }
        let pivot = a[(k, k)];
        for i in k + 1..n {
            let f = a[(i, k)] / pivot;
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
            }
        }
    }
    let mut out = Complex64::new(sign, 0.0);
    for k in 0..n {
        out *= a[(k, k)];
    }
    Ok(out)
}

/// True iff a equals b up to an overall sign, relative to
/// `max(|a|, |b|, 1)`.
pub fn eq_up_to_sign(a: Complex64, b: Complex64, tol: Tolerance) -> bool {
    let scale = a.norm().max(b.norm()).max(1.0);
    ((a - b).norm().min((a + b).norm())) <= tol.compare_rel * scale
}

/// Greedy left-to-right column selection: returns the indices of
/// `candidates` columns that are independent of `base` and of the
/// previously selected candidates. All columns of `base` must themselves
/// be independent (callers pass bases). Used to complete an image basis
/// to a cycle basis and to test independence modulo boundaries.
pub fn select_independent_columns(
    base: &CMatrix,
    candidates: &CMatrix,
    tol: Tolerance,
) -> Result<Vec<usize>, LinalgError> {
    assert_eq!(base.rows(), candidates.rows(), "select shape");
    let rows = base.rows();
    let scale = base.max_abs().max(candidates.max_abs());
    let threshold = tol.pivot_eps * if scale == 0.0 { 1.0 } else { scale };
    // Incremental elimination state: reduced pivot vectors + their pivot rows.
    let mut pivot_rows: Vec<usize> = Vec::new();
    let mut pivot_vecs: Vec<Vec<Complex64>> = Vec::new();
    fn reduce(
        col: Vec<Complex64>,
        pivot_rows: &[usize],
        pivot_vecs: &[Vec<Complex64>],
        threshold: f64,
    ) -> (Vec<Complex64>, Option<usize>) {
        let mut v = col;
        for (pr, pv) in pivot_rows.iter().zip(pivot_vecs) {
            let f = v[*pr] / pv[*pr];
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for (vi, pvi) in v.iter_mut().zip(pv) {
                *vi -= f * pvi;
            }
        }
        let (mut best_row, mut best) = (0usize, 0.0f64);
        for (i, z) in v.iter().enumerate() {
            let m = z.norm();
            if m > best {
                best = m;
                best_row = i;
            }
        }
        if best > threshold {
            (v, Some(best_row))
        } else {
            (v, None)
        }
    }
    let _ = rows;
    for j in 0..base.cols() {
        let (v, row) = reduce(base.column(j), &pivot_rows, &pivot_vecs, threshold);
        match row {
            Some(r) => {
                pivot_rows.push(r);
                pivot_vecs.push(v);
            }
            None => return Err(LinalgError::Singular),
        }
    }
    let mut selected = Vec::new();
    for j in 0..candidates.cols() {
        let (v, row) = reduce(candidates.column(j), &pivot_rows, &pivot_vecs, threshold);
        if let Some(r) = row {
            pivot_rows.push(r);
            pivot_vecs.push(v);
            selected.push(j);
        }
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn image_basis_identity_and_zero() {
        let id = CMatrix::identity(3);
        assert_eq!(image_basis(&id, tol()).cols(), 3);
        let z = CMatrix::zeros(4, 2);
        assert_eq!(image_basis(&z, tol()).cols(), 0);
    }

    #[test]
    fn image_basis_rank_one() {
        // [[1,2],[2,4]] has rank 1 by hand elimination.
        let m = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let b = image_basis(&m, tol());
        assert_eq!(b.cols(), 1);
        // Column proportional to (1, 2).
        let ratio = b[(1, 0)] / b[(0, 0)];
        assert!((ratio - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kernel_basis_identity_zero_and_row() {
        assert_eq!(kernel_basis(&CMatrix::identity(3), tol()).cols(), 0);
        let z = CMatrix::zeros(0, 2);
        let k = kernel_basis(&z, tol());
        assert_eq!(k.cols(), 2);
        // [[1,1]] -> one kernel column proportional to (1,-1), solved by hand.
        let m = CMatrix::from_real_rows(&[vec![1.0, 1.0]]);
        let k = kernel_basis(&m, tol());
        assert_eq!(k.cols(), 1);
        let ratio = k[(1, 0)] / k[(0, 0)];
        assert!((ratio - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn solve_in_span_basic_and_rejection() {
        let id = CMatrix::identity(2);
        let x = solve_in_span(&id, &[c(1.0, 0.0), c(2.0, 0.0)], tol()).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-12 && (x[1] - c(2.0, 0.0)).norm() < 1e-12);

        let m = CMatrix::from_real_rows(&[vec![2.0]]);
        let x = solve_in_span(&m, &[c(6.0, 0.0)], tol()).unwrap();
        assert!((x[0] - c(3.0, 0.0)).norm() < 1e-12);

        // b = (1,2) is not in the span of (1,1): best residual is 1/sqrt(2).
        let m = CMatrix::from_real_rows(&[vec![1.0], vec![1.0]]);
        let err = solve_in_span(&m, &[c(1.0, 0.0), c(2.0, 0.0)], tol()).unwrap_err();
        assert!(matches!(err, LinalgError::NotInSpan { .. }));
    }

    #[test]
    fn det_small_cases() {
        assert!((det(&CMatrix::identity(5)).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        let d = CMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 3.0)]]);
        assert!((det(&d).unwrap() - c(0.0, 6.0)).norm() < 1e-14);
        // One transposition: det = -1.
        let s = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((det(&s).unwrap() - c(-1.0, 0.0)).norm() < 1e-14);
        assert!(matches!(
            det(&CMatrix::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn eq_up_to_sign_cases() {
        assert!(eq_up_to_sign(c(5.0, 0.0), c(-5.0, 0.0), tol()));
        assert!(eq_up_to_sign(c(0.0, 2.0), c(0.0, 2.0), tol()));
        assert!(!eq_up_to_sign(c(1.0, 0.0), c(1.5, 0.0), tol()));
    }

    #[test]
    fn inverse_round_trip() {
        let m = CMatrix::from_rows(&[
            vec![c(1.0, 1.0), c(2.0, 0.0)],
            vec![c(0.5, 0.0), c(-1.0, 2.0)],
        ]);
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        assert!(prod.sub(&CMatrix::identity(2)).max_abs() < 1e-12);
        assert!(matches!(
            CMatrix::zeros(2, 2).inverse(),
            Err(LinalgError::Singular)
        ));
    }

    #[test]
    fn select_independent_columns_completion() {
        let base = CMatrix::from_real_rows(&[vec![1.0], vec![0.0], vec![0.0]]);
        let cand = CMatrix::from_real_rows(&[
            vec![2.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ]);
        // Column 0 is dependent on base, column 1 is new, column 2 is then dependent.
        let sel = select_independent_columns(&base, &cand, tol()).unwrap();
        assert_eq!(sel, vec![1]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix(max_dim: usize) -> impl Strategy<Value = CMatrix> {
            (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
                proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), r * c).prop_map(
                    move |entries| {
                        CMatrix::from_fn(r, c, |i, j| {
                            let (re, im) = entries[i * c + j];
                            Complex64::new(re, im)
                        })
                    },
                )
            })
        }

        proptest! {
            #[test]
            fn kernel_is_annihilated(m in arb_matrix(8)) {
                let t = Tolerance::default();
                let k = kernel_basis(&m, t);
                if k.cols() > 0 {
                    let prod = m.mul(&k);
                    prop_assert!(prod.max_abs() <= t.pivot_eps * (1.0 + m.max_abs()) * 10.0);
                }
            }

            #[test]
            fn rank_nullity(m in arb_matrix(8)) {
                let t = Tolerance::default();
                prop_assert_eq!(
                    image_basis(&m, t).cols() + kernel_basis(&m, t).cols(),
                    m.cols()
                );
            }

            #[test]
            fn eq_up_to_sign_negation_invariant(re in -10.0..10.0f64, im in -10.0..10.0f64) {
                let t = Tolerance::default();
                let a = Complex64::new(re, im);
                prop_assert!(eq_up_to_sign(a, -a, t));
                prop_assert!(eq_up_to_sign(-a, a, t));
            }
        }
    }
}
