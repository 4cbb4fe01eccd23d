//! Small dense symmetric linear algebra.
//!
//! Everything here is sized for the problems this crate solves: correlation
//! matrices of dimension at most [`MAX_MATRIX_DIM`], stored dense and
//! row-major.

use std::fmt;
use std::ops::Index;

use crate::error::{invalid, Error, Result};

/// Pivots of a Cholesky factorization must exceed this value.
pub const PD_TOLERANCE: f64 = 1e-10;

/// Largest dimension accepted by the plain matrix routines.
pub const MAX_MATRIX_DIM: usize = 64;

/// Largest dimension accepted by subset-enumerating routines.
pub const MAX_CONE_DIM: usize = 12;

/// Absolute tolerance when checking that an input matrix is symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from nested rows, rejecting ragged or non-finite input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return invalid(format!("row {} has {} entries, expected {}", i + 1, row.len(), n_cols));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return invalid(format!("row {} contains non-finite value {}", i + 1, v));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Strictly increasing set of zero-based coordinate indices.
///
/// Displayed one-based, e.g. `{1,3}`, to match the usual mathematical
/// labelling of coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSubset(Vec<usize>);

impl IndexSubset {
    /// Sorts the members and rejects duplicates.
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return invalid(format!("duplicate index in subset {members:?}"));
        }
        Ok(Self(members))
    }

    pub fn from_one_based(members: &[usize]) -> Result<Self> {
        if members.contains(&0) {
            return invalid("one-based index 0 in subset");
        }
        Self::new(members.iter().map(|m| m - 1).collect())
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn full(d: usize) -> Self {
        Self((0..d).collect())
    }

    /// Subset whose members are the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|b| mask >> b & 1 == 1).collect())
    }

    pub fn to_mask(&self) -> u64 {
        self.0.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    /// `{0..d} \ self`.
    pub fn complement(&self, d: usize) -> Self {
        Self((0..d).filter(|i| !self.contains(*i)).collect())
    }

    /// Maps positions within `self` through `parent`, i.e. re-expresses a
    /// subset of a principal block in the coordinates of the full matrix.
    pub fn lift(&self, parent: &IndexSubset) -> Self {
        Self(self.0.iter().map(|&i| parent.0[i]).collect())
    }

    pub fn check_within(&self, d: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= d => invalid(format!("index {} out of range for dimension {}", last + 1, d)),
            _ => Ok(()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for IndexSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

/// `m[rows, cols]`.
pub fn submatrix(m: &Matrix, rows: &IndexSubset, cols: &IndexSubset) -> Result<Matrix> {
    if rows.is_empty() || cols.is_empty() {
        return invalid("submatrix index sets must be nonempty");
    }
    rows.check_within(m.rows())?;
    cols.check_within(m.cols())?;
    Ok(Matrix::from_fn(rows.len(), cols.len(), |i, j| {
        m.get(rows.0[i], cols.0[j])
    }))
}

/// Validated positive definite correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    matrix: Matrix,
}

impl CorrelationMatrix {
    /// Validates symmetry, unit diagonal, `|ρ| < 1` and positive definiteness.
    pub fn new(matrix: Matrix) -> Result<Self> {
        let d = matrix.rows();
        if d == 0 || !matrix.is_square() {
            return invalid(format!(
                "correlation matrix must be square and nonempty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            ));
        }
        if d > MAX_MATRIX_DIM {
            return Err(Error::Capacity {
                dim: d,
                max: MAX_MATRIX_DIM,
            });
        }
        for j in 0..d {
            if matrix.get(j, j) != 1.0 {
                return invalid(format!(
                    "diagonal entry ({0},{0}) is {1}, expected 1",
                    j + 1,
                    matrix.get(j, j)
                ));
            }
            for k in 0..j {
                let (a, b) = (matrix.get(j, k), matrix.get(k, j));
                if (a - b).abs() > SYMMETRY_TOLERANCE {
                    return invalid(format!(
                        "matrix is not symmetric: entry ({},{}) = {} but ({},{}) = {}",
                        j + 1,
                        k + 1,
                        a,
                        k + 1,
                        j + 1,
                        b
                    ));
                }
                if a.abs() >= 1.0 {
                    return invalid(format!(
                        "off-diagonal entry ({},{}) = {} must lie strictly inside (-1, 1)",
                        j + 1,
                        k + 1,
                        a
                    ));
                }
            }
        }
        let mut matrix = matrix;
        for j in 0..d {
            for k in 0..j {
                let v = matrix.get(j, k);
                matrix.set(k, j, v);
            }
        }
        spd_factorize(&matrix)?;
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: Matrix::identity(d),
        }
    }

    /// All off-diagonal entries equal to `rho`; requires `-1/(d-1) < rho < 1`.
    pub fn equicorrelation(d: usize, rho: f64) -> Result<Self> {
        Self::new(Matrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.matrix.get(j, k)
    }

    /// Principal block `Σ_S`, itself a valid correlation matrix.
    pub fn principal(&self, subset: &IndexSubset) -> Result<Self> {
        Ok(Self {
            matrix: submatrix(&self.matrix, subset, subset)?,
        })
    }

    /// Relabels coordinates so that new coordinate `k` is old coordinate
    /// `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return invalid(format!("{perm:?} is not a permutation of 0..{d}"));
        }
        Ok(Self {
            matrix: Matrix::from_fn(d, d, |i, j| self.matrix.get(perm[i], perm[j])),
        })
    }

    pub fn cholesky(&self) -> Cholesky {
        spd_factorize(&self.matrix).expect("validated correlation matrix is positive definite")
    }
}

/// Cholesky factorization `m = L·Lᵀ` with its log-determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: Matrix,
    log_det: f64,
}

impl Cholesky {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_spd(self, rhs)
    }
}

/// Cholesky factorization of a symmetric matrix. Only the lower triangle is
/// read after the symmetry check.
pub fn spd_factorize(m: &Matrix) -> Result<Cholesky> {
    let n = m.rows();
    if !m.is_square() {
        return invalid(format!("cannot factorize a {}x{} matrix", m.rows(), m.cols()));
    }
    if n > MAX_MATRIX_DIM {
        return Err(Error::Capacity {
            dim: n,
            max: MAX_MATRIX_DIM,
        });
    }
    if !m.is_symmetric(SYMMETRY_TOLERANCE) {
        return invalid("cannot factorize a non-symmetric matrix");
    }
    let mut l = Matrix::zeros(n, n);
    let mut log_det = 0.0;
    for j in 0..n {
        let pivot = m.get(j, j) - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(pivot > PD_TOLERANCE) {
            return Err(Error::NotPositiveDefinite { order: j + 1, pivot });
        }
        let ljj = pivot.sqrt();
        l.set(j, j, ljj);
        log_det += pivot.ln();
        for i in j + 1..n {
            let s = m.get(i, j) - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l.set(i, j, s / ljj);
        }
    }
    Ok(Cholesky { lower: l, log_det })
}

/// Solves `m·x = rhs` given the factorization of `m`.
pub fn solve_spd(fact: &Cholesky, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = fact.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let l = &fact.lower;
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (rhs[i] - dot(&l.row(i)[..i], &y[..i])) / l.get(i, i);
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l.get(k, i) * y[k]).sum();
        y[i] = (y[i] - s) / l.get(i, i);
    }
    Ok(y)
}
