//! Dense square matrices, the Metzler newtype and the three matrix norms.

use std::fmt;
use std::ops::{Deref, Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense square real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Matrix of all ones.
    pub fn ones(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![1.0; dim * dim],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Builds a matrix from rows, checking that it is square, non-empty and finite.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    /// Builds a matrix from a row-major buffer of length `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::NotSquare {
                rows: dim,
                cols: if dim == 0 { 0 } else { data.len() / dim },
            });
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: k / dim,
                col: k % dim,
            });
        }
        Ok(Matrix { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut t = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        self.map(|x| x * s)
    }

    /// Returns `self + h * I`.
    pub fn shifted(&self, h: f64) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)] += h;
        }
        m
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            let out_row = &mut out.data[i * d..(i + 1) * d];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `y = A x`, skipping stored zeros.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (yi, row) in y.iter_mut().zip(self.rows()) {
            let mut acc = 0.0;
            for (&a, &xj) in row.iter().zip(x) {
                if a != 0.0 {
                    acc += a * xj;
                }
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn is_metzler(&self) -> bool {
        self.first_metzler_violation().is_none()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }

    fn first_metzler_violation(&self) -> Option<(usize, usize, f64)> {
        let d = self.dim;
        self.data
            .iter()
            .enumerate()
            .find(|&(k, &x)| k / d != k % d && x < 0.0)
            .map(|(k, &x)| (k / d, k % d, x))
    }

    pub fn check_nonnegative(&self) -> Result<()> {
        let d = self.dim;
        match self.data.iter().position(|&x| x < 0.0) {
            None => Ok(()),
            Some(k) => Err(Error::NotNonNegative {
                row: k / d,
                col: k % d,
                value: self.data[k],
            }),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        norm(self, kind)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Matrix {
        let d = m.nrows();
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    /// Inverse by LU with partial pivoting; `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        let lu = self.to_nalgebra().lu();
        lu.try_inverse()
            .filter(|inv| inv.iter().all(|x| x.is_finite()))
            .map(|inv| Matrix::from_nalgebra(&inv))
    }

    /// Solves `A x = b`; `None` when singular.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let lu = self.to_nalgebra().lu();
        let rhs = nalgebra::DVector::from_column_slice(b);
        lu.solve(&rhs)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .map(|x| x.iter().copied().collect())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{})", self.dim, self.dim)?;
        for row in self.rows() {
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

/// A square matrix whose off-diagonal entries are all non-negative.
#[derive(Clone, PartialEq)]
pub struct MetzlerMatrix(Matrix);

impl MetzlerMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        match m.first_metzler_violation() {
            None => Ok(MetzlerMatrix(m)),
            Some((row, col, value)) => Err(Error::NotMetzler { row, col, value }),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `A + h I` stays Metzler for any real `h`.
    pub fn shifted(&self, h: f64) -> MetzlerMatrix {
        MetzlerMatrix(self.0.shifted(h))
    }

    pub fn transpose(&self) -> MetzlerMatrix {
        MetzlerMatrix(self.0.transpose())
    }

    /// Adds a non-negative matrix; the sum is Metzler.
    pub fn add_nonnegative(&self, p: &Matrix) -> Result<MetzlerMatrix> {
        p.check_nonnegative()?;
        Ok(MetzlerMatrix(self.0.add(p)))
    }
}

impl Deref for MetzlerMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl TryFrom<Matrix> for MetzlerMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        MetzlerMatrix::new(m)
    }
}

impl From<MetzlerMatrix> for Matrix {
    fn from(m: MetzlerMatrix) -> Matrix {
        m.0
    }
}

impl fmt::Debug for MetzlerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Metzler")?;
        self.0.fmt(f)
    }
}

/// Matrix norm selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormKind {
    /// Largest absolute entry.
    Max,
    /// Largest absolute row sum.
    Inf,
    /// Largest absolute column sum; handled as `Inf` on the transpose.
    One,
}

pub fn norm(a: &Matrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::Max => a.as_slice().iter().fold(0.0, |m, x| f64::max(m, x.abs())),
        NormKind::Inf => a
            .rows()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::One => norm(&a.transpose(), NormKind::Inf),
    }
}

/// Replaces negative off-diagonal entries by zero.
///
/// The closest (un)stable Metzler matrix to `a` and to `metzlerize(a)` coincide,
/// so arbitrary real input can be reduced to the Metzler case.
pub fn metzlerize(a: &Matrix) -> MetzlerMatrix {
    let d = a.dim();
    let mut m = a.clone();
    for i in 0..d {
        for j in 0..d {
            if i != j && m[(i, j)] < 0.0 {
                m[(i, j)] = 0.0;
            }
        }
    }
    MetzlerMatrix(m)
}
