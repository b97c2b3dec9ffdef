//! Small complex linear-algebra kernel used by the alignment pipeline.
//!
//! Everything here works on two types: [`DiagonalOperator`], which stands in
//! for the `M x M` diagonal channel and composite matrices, and
//! [`DenseMatrix`], a row-major complex matrix used for beamformers and
//! effective channels. Rank decisions go through a column-pivoted Householder
//! QR with a tolerance relative to the largest pivot; columns are scaled to
//! unit norm first, so a rank verdict never depends on column scaling.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative pivot threshold used by rank and inclusion tests.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Smallest magnitude a diagonal entry may have and still be inverted.
pub const DEFAULT_INV_EPS: f64 = 1e-12;

fn ensure_finite(values: &[C64], what: &'static str) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Diagonal `M x M` complex operator stored as its diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalOperator {
    entries: Vec<C64>,
}

impl DiagonalOperator {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        ensure_finite(&entries, "diagonal operator")?;
        Ok(Self { entries })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            entries: vec![C64::new(1.0, 0.0); m],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// Elementwise product, i.e. the matrix product of two diagonals.
    pub fn compose(&self, other: &DiagonalOperator) -> Result<DiagonalOperator> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                context: "diagonal compose",
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(DiagonalOperator {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn inverse(&self, eps: f64) -> Result<DiagonalOperator> {
        diag_inverse(self, eps)
    }

    pub fn apply_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: "diagonal apply",
                expected: self.len(),
                found: v.len(),
            });
        }
        Ok(self.entries.iter().zip(v).map(|(d, x)| d * x).collect())
    }

    pub fn min_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "dense matrix storage",
                expected: rows * cols,
                found: data.len(),
            });
        }
        ensure_finite(&data, "dense matrix")?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = C64::new(1.0, 0.0);
        }
        out
    }

    /// Builds a `rows x columns.len()` matrix from column vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        let mut out = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    context: "column length",
                    expected: rows,
                    found: col.len(),
                });
            }
            ensure_finite(col, "matrix column")?;
            for (i, z) in col.iter().enumerate() {
                out[(i, j)] = *z;
            }
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let cols: Vec<Vec<C64>> = idx.iter().map(|&j| self.column(j)).collect();
        let mut out = Self::zeros(self.rows, idx.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                out[(i, j)] = *z;
            }
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                context: "horizontal concatenation",
                expected: self.rows,
                found: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (p, a) in self.row(i).iter().enumerate() {
                if *a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[p * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix difference",
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale_column(&mut self, j: usize, s: C64) {
        for i in 0..self.rows {
            self[(i, j)] *= s;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, z) in self.row(i).iter().enumerate() {
                acc[j] += z.norm_sqr();
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// Returns a copy with every nonzero column scaled to unit norm, plus the
    /// original column norms.
    pub fn normalized_columns(&self) -> (DenseMatrix, Vec<f64>) {
        let norms = self.column_norms();
        let mut out = self.clone();
        for (j, &n) in norms.iter().enumerate() {
            if n > 0.0 {
                out.scale_column(j, C64::new(1.0 / n, 0.0));
            }
        }
        (out, norms)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|z| format!("{z:.4}")).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Row `i` of the result is `d[i]` times row `i` of `a`.
pub fn diag_apply(d: &DiagonalOperator, a: &DenseMatrix) -> Result<DenseMatrix> {
    if d.len() != a.rows {
        return Err(Error::DimensionMismatch {
            context: "diag_apply",
            expected: a.rows,
            found: d.len(),
        });
    }
    let mut out = a.clone();
    for (i, s) in d.entries.iter().enumerate() {
        for z in &mut out.data[i * a.cols..(i + 1) * a.cols] {
            *z *= s;
        }
    }
    Ok(out)
}

pub fn diag_inverse(d: &DiagonalOperator, eps: f64) -> Result<DiagonalOperator> {
    let mut entries = Vec::with_capacity(d.len());
    for (index, z) in d.entries.iter().enumerate() {
        let magnitude = z.norm();
        if !(magnitude > eps) {
            return Err(Error::SingularDiagonal { index, magnitude });
        }
        entries.push(z.inv());
    }
    Ok(DiagonalOperator { entries })
}

/// Outcome of a rank-revealing factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    /// Magnitudes of the diagonal of R, in pivot order (nonincreasing).
    pub pivots: Vec<f64>,
}

impl RankInfo {
    /// Largest pivot over smallest pivot; infinite when the last pivot is zero.
    pub fn condition_indicator(&self) -> f64 {
        match (self.pivots.first(), self.pivots.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }
}

/// Column-pivoted Householder QR on unit-normalized columns.
///
/// A pivot counts toward the rank when its magnitude exceeds
/// `tol_rel` times the largest pivot.
pub fn rank_revealing(a: &DenseMatrix, tol_rel: f64) -> RankInfo {
    let (m, n) = (a.rows, a.cols);
    let (normalized, _) = a.normalized_columns();
    let mut cols = normalized.columns();
    let steps = m.min(n);
    let mut pivots = Vec::with_capacity(steps);

    for j in 0..steps {
        // pick the remaining column with the largest trailing norm
        let (p, sigma) = (j..n)
            .map(|c| (c, cols[c][j..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
            .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        cols.swap(j, p);
        if sigma == 0.0 {
            pivots.extend(std::iter::repeat_n(0.0, steps - j));
            break;
        }
        pivots.push(sigma);

        let x0 = cols[j][j];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * sigma;
        let mut v: Vec<C64> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let v_norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sqr == 0.0 {
            continue;
        }
        for col in cols.iter_mut().skip(j + 1) {
            let tail = &mut col[j..];
            let s: C64 = v.iter().zip(tail.iter()).map(|(vi, ci)| vi.conj() * ci).sum();
            let f = s * (2.0 / v_norm_sqr);
            for (ci, vi) in tail.iter_mut().zip(&v) {
                *ci -= f * vi;
            }
        }
        cols[j][j] = alpha;
        for z in &mut cols[j][j + 1..] {
            *z = C64::new(0.0, 0.0);
        }
    }

    let largest = pivots.first().copied().unwrap_or(0.0);
    let rank = if largest > 0.0 {
        pivots.iter().filter(|&&p| p > tol_rel * largest).count()
    } else {
        0
    };
    RankInfo { rank, pivots }
}

pub fn matrix_rank(a: &DenseMatrix, tol_rel: f64) -> usize {
    rank_revealing(a, tol_rel).rank
}

/// Ranks backing a subspace-inclusion verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InclusionWitness {
    pub rank_container: usize,
    pub rank_joint: usize,
}

impl InclusionWitness {
    pub fn included(&self) -> bool {
        self.rank_joint == self.rank_container
    }
}

/// Rank witness for `span(a) ⊆ span(b)`.
pub fn inclusion_witness(a: &DenseMatrix, b: &DenseMatrix, tol_rel: f64) -> Result<InclusionWitness> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch {
            context: "subspace inclusion",
            expected: b.rows,
            found: a.rows,
        });
    }
    let joint = b.hstack(a)?;
    Ok(InclusionWitness {
        rank_container: matrix_rank(b, tol_rel),
        rank_joint: matrix_rank(&joint, tol_rel),
    })
}

/// `true` iff the column space of `a` lies inside the column space of `b`.
pub fn subspace_included(a: &DenseMatrix, b: &DenseMatrix, tol_rel: f64) -> Result<bool> {
    Ok(inclusion_witness(a, b, tol_rel)?.included())
}

/// Solves `a x = rhs` by LU with partial pivoting.
///
/// Fails when the smallest U pivot is below `tol_rel` times the largest; the
/// error carries the ratio of largest to smallest pivot.
pub fn solve_square(a: &DenseMatrix, rhs: &DenseMatrix, tol_rel: f64) -> Result<DenseMatrix> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::DimensionMismatch {
            context: "solve_square (square system)",
            expected: n,
            found: a.cols,
        });
    }
    if rhs.rows != n {
        return Err(Error::DimensionMismatch {
            context: "solve_square (right-hand side)",
            expected: n,
            found: rhs.rows,
        });
    }
    let mut lu = a.clone();
    let mut x = rhs.clone();
    let scale = a.max_abs();
    let mut pivot_mags = Vec::with_capacity(n);

    for j in 0..n {
        let p = (j..n)
            .max_by(|&r, &s| lu[(r, j)].norm().total_cmp(&lu[(s, j)].norm()))
            .unwrap_or(j);
        let piv = lu[(p, j)].norm();
        if !(piv > tol_rel * scale) {
            let condition_indicator = if piv > 0.0 { scale / piv } else { f64::INFINITY };
            return Err(Error::SingularMatrix { condition_indicator });
        }
        pivot_mags.push(piv);
        if p != j {
            for c in 0..n {
                lu.data.swap(p * n + c, j * n + c);
            }
            for c in 0..x.cols {
                x.data.swap(p * x.cols + c, j * x.cols + c);
            }
        }
        let inv_piv = lu[(j, j)].inv();
        for r in j + 1..n {
            let f = lu[(r, j)] * inv_piv;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            lu[(r, j)] = f;
            for c in j + 1..n {
                let u = lu[(j, c)];
                lu[(r, c)] -= f * u;
            }
            for c in 0..x.cols {
                let u = x[(j, c)];
                x[(r, c)] -= f * u;
            }
        }
    }

    let hi = pivot_mags.iter().copied().fold(0.0, f64::max);
    let lo = pivot_mags.iter().copied().fold(f64::INFINITY, f64::min);
    if n > 0 && !(lo > tol_rel * hi) {
        return Err(Error::SingularMatrix {
            condition_indicator: hi / lo,
        });
    }

    for c in 0..x.cols {
        for r in (0..n).rev() {
            let mut acc = x[(r, c)];
            for k in r + 1..n {
                acc -= lu[(r, k)] * x[(k, c)];
            }
            x[(r, c)] = acc / lu[(r, r)];
        }
    }
    Ok(x)
}

/// Inverse of a square matrix via [`solve_square`].
pub fn invert(a: &DenseMatrix, tol_rel: f64) -> Result<DenseMatrix> {
    solve_square(a, &DenseMatrix::identity(a.rows), tol_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        DenseMatrix::new(rows, cols, data).unwrap()
    }

    fn random_diag(rng: &mut ChaCha8Rng, m: usize) -> DiagonalOperator {
        DiagonalOperator::new(
            (0..m)
                .map(|_| C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect(),
        )
        .unwrap()
    }

    fn max_rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.sub(b).unwrap().max_abs() / b.max_abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn diag_apply_identity_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 4, 3);
        let out = diag_apply(&DiagonalOperator::identity(4), &a).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn diag_apply_scales_rows() {
        let d = DiagonalOperator::new(vec![c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let a = DenseMatrix::from_columns(2, &[vec![c(1.0, 0.0), c(1.0, 0.0)]]).unwrap();
        let out = diag_apply(&d, &a).unwrap();
        assert_eq!(out.column(0), vec![c(2.0, 0.0), c(3.0, 0.0)]);
    }

    #[test]
    fn diag_apply_round_trip_and_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = random_diag(&mut rng, 6);
        let a = random_matrix(&mut rng, 6, 4);
        let back = diag_apply(&d, &diag_apply(&d.inverse(DEFAULT_INV_EPS).unwrap(), &a).unwrap()).unwrap();
        assert!(max_rel_diff(&back, &a) < 1e-12);

        let err = diag_apply(&random_diag(&mut rng, 5), &a).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn diag_inverse_cases() {
        let ones = DiagonalOperator::identity(3);
        assert_eq!(diag_inverse(&ones, DEFAULT_INV_EPS).unwrap(), ones);

        let d = DiagonalOperator::new(vec![c(0.0, 2.0)]).unwrap();
        let inv = diag_inverse(&d, DEFAULT_INV_EPS).unwrap();
        assert!((inv.entries()[0] - c(0.0, -0.5)).norm() < 1e-16);

        let bad = DiagonalOperator::new(vec![c(1.0, 0.0), c(1e-14, 0.0), c(2.0, 0.0)]).unwrap();
        match diag_inverse(&bad, DEFAULT_INV_EPS) {
            Err(Error::SingularDiagonal { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn diag_inverse_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = random_diag(&mut rng, 8);
            let back = d.inverse(DEFAULT_INV_EPS).unwrap().inverse(DEFAULT_INV_EPS).unwrap();
            for (x, y) in back.entries().iter().zip(d.entries()) {
                assert!((x - y).norm() <= 1e-14 * y.norm());
            }
        }
    }

    #[test]
    fn rank_of_zero_and_orthonormal() {
        assert_eq!(matrix_rank(&DenseMatrix::zeros(4, 3), DEFAULT_RANK_TOL), 0);
        assert_eq!(matrix_rank(&DenseMatrix::zeros(0, 0), DEFAULT_RANK_TOL), 0);
        let eye = DenseMatrix::identity(5).select_columns(&[0, 2, 4]);
        assert_eq!(matrix_rank(&eye, DEFAULT_RANK_TOL), 3);
    }

    /// Plain Gaussian elimination with a hard zero threshold, used as an
    /// independent rank oracle on small exact-ish inputs.
    fn gaussian_rank(a: &DenseMatrix, thresh: f64) -> usize {
        let mut m = a.clone();
        let mut rank = 0;
        for j in 0..m.cols() {
            let Some(p) = (rank..m.rows()).find(|&r| m[(r, j)].norm() > thresh) else {
                continue;
            };
            for c in 0..m.cols() {
                let t = m[(p, c)];
                m[(p, c)] = m[(rank, c)];
                m[(rank, c)] = t;
            }
            for r in rank + 1..m.rows() {
                let f = m[(r, j)] / m[(rank, j)];
                for c in 0..m.cols() {
                    let u = m[(rank, c)];
                    m[(r, c)] -= f * u;
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn rank_detects_dependent_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = random_matrix(&mut rng, 4, 1).column(0);
        let w = random_matrix(&mut rng, 4, 1).column(0);
        let v2: Vec<C64> = v.iter().map(|z| z * 2.0).collect();
        let a = DenseMatrix::from_columns(4, &[v, v2, w]).unwrap();
        let oracle = gaussian_rank(&a, 1e-9);
        assert_eq!(oracle, 2);
        assert_eq!(matrix_rank(&a, DEFAULT_RANK_TOL), oracle);
    }

    #[test]
    fn inclusion_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 3, 2);
        assert!(subspace_included(&a, &a, DEFAULT_RANK_TOL).unwrap());

        let col = random_matrix(&mut rng, 3, 1);
        assert!(subspace_included(&col, &DenseMatrix::identity(3), DEFAULT_RANK_TOL).unwrap());

        // b spans the orthogonal complement of a random direction `x`
        let x = random_matrix(&mut rng, 3, 1).column(0);
        let xn: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let x: Vec<C64> = x.iter().map(|z| z / xn).collect();
        let mut basis = Vec::new();
        for _ in 0..2 {
            let mut y = random_matrix(&mut rng, 3, 1).column(0);
            for q in std::iter::once(&x).chain(basis.iter()) {
                let proj: C64 = q.iter().zip(&y).map(|(qi, yi)| qi.conj() * yi).sum();
                for (yi, qi) in y.iter_mut().zip(q.iter()) {
                    *yi -= proj * qi;
                }
            }
            let yn: f64 = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            basis.push(y.iter().map(|z| z / yn).collect::<Vec<_>>());
        }
        let b = DenseMatrix::from_columns(3, &basis).unwrap();
        let a = DenseMatrix::from_columns(3, &[x]).unwrap();
        assert!(!subspace_included(&a, &b, DEFAULT_RANK_TOL).unwrap());

        let err = subspace_included(&DenseMatrix::zeros(2, 1), &b, DEFAULT_RANK_TOL).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn solve_square_cases() {
        let rhs = DenseMatrix::from_columns(2, &[vec![c(2.0, 0.0), c(4.0, 0.0)]]).unwrap();
        assert_eq!(solve_square(&DenseMatrix::identity(2), &rhs, DEFAULT_RANK_TOL).unwrap(), rhs);

        let mut a = DenseMatrix::zeros(2, 2);
        a[(0, 0)] = c(2.0, 0.0);
        a[(1, 1)] = c(4.0, 0.0);
        let x = solve_square(&a, &rhs, DEFAULT_RANK_TOL).unwrap();
        assert!((x[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 12, 12);
        let rhs = random_matrix(&mut rng, 12, 3);
        let x = solve_square(&a, &rhs, DEFAULT_RANK_TOL).unwrap();
        let resid = a.matmul(&x).unwrap().sub(&rhs).unwrap().frobenius_norm() / rhs.frobenius_norm();
        assert!(resid < 1e-8, "residual {resid}");
    }

    #[test]
    fn solve_square_rejects_singular() {
        let v = vec![c(1.0, 1.0), c(2.0, -1.0)];
        let a = DenseMatrix::from_columns(2, &[v.clone(), v]).unwrap();
        let err = solve_square(&a, &DenseMatrix::identity(2), DEFAULT_RANK_TOL).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        assert!(DiagonalOperator::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(DenseMatrix::new(1, 1, vec![c(0.0, f64::INFINITY)]).is_err());
    }
}
