//! Small dense matrices of rational functions (n ≤ 4 in practice).

use std::ops::{Index, IndexMut};

use super::{RationalFunction, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<RationalFunction>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![RationalFunction::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                RationalFunction::one()
            } else {
                RationalFunction::zero()
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> RationalFunction) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_scalars(rows: &[Vec<Scalar>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| RationalFunction::constant(rows[i][j].clone()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(RationalFunction::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map(&self, f: impl Fn(&RationalFunction) -> RationalFunction) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map(&self, f: impl Fn(&RationalFunction) -> Result<RationalFunction>) -> Result<Self> {
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn scale(&self, c: &RationalFunction) -> Self {
        self.map(|e| e * c)
    }

    pub fn add(&self, rhs: &Matrix) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Matrix) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &rhs[(i, j)])
    }

    pub fn mul(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.cols, rhs.rows);
        Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols)
                .filter(|&k| !self[(i, k)].is_zero() && !rhs[(k, j)].is_zero())
                .map(|k| &self[(i, k)] * &rhs[(k, j)])
                .sum()
        })
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Matrix {
        let n = self.rows;
        Self::from_fn(n - 1, n - 1, |i, j| {
            let r = if i < skip_row { i } else { i + 1 };
            let c = if j < skip_col { j } else { j + 1 };
            self[(r, c)].clone()
        })
    }

    /// Determinant by cofactor expansion along the sparsest row.
    pub fn det(&self) -> RationalFunction {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        match self.rows {
            0 => RationalFunction::one(),
            1 => self.data[0].clone(),
            2 => &(&self[(0, 0)] * &self[(1, 1)]) - &(&self[(0, 1)] * &self[(1, 0)]),
            n => {
                let row = (0..n)
                    .max_by_key(|&i| (0..n).filter(|&j| self[(i, j)].is_zero()).count())
                    .unwrap();
                let mut acc = RationalFunction::zero();
                for j in 0..n {
                    let a = &self[(row, j)];
                    if a.is_zero() {
                        continue;
                    }
                    let term = a * &self.minor(row, j).det();
                    acc = if (row + j) % 2 == 0 { &acc + &term } else { &acc - &term };
                }
                acc
            }
        }
    }

    pub fn adjugate(&self) -> Matrix {
        let n = self.rows;
        if n == 1 {
            return Matrix::identity(1);
        }
        Self::from_fn(n, n, |i, j| {
            let m = self.minor(j, i).det();
            if (i + j) % 2 == 0 {
                m
            } else {
                -m
            }
        })
    }

    /// Exact inverse via adjugate and determinant.
    pub fn inverse(&self) -> Result<Matrix> {
        let d = self.det();
        if d.is_zero() {
            return Err(Error::DegenerateMetric);
        }
        let inv = d.recip()?;
        Ok(self.adjugate().scale(&inv))
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)].eval_f64(point)?;
            }
        }
        Ok(m)
    }

    /// Entries that are not identically zero, with their positions.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = ((usize, usize), &RationalFunction)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(move |(k, e)| ((k / self.cols, k % self.cols), e))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = RationalFunction;
    fn index(&self, (i, j): (usize, usize)) -> &RationalFunction {
        assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut RationalFunction {
        assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> RationalFunction {
        RationalFunction::var(i)
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = Matrix::from_fn(3, 3, |i, j| {
            if i == j {
                &v(i) + &RationalFunction::one()
            } else {
                v(i + j)
            }
        });
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Matrix::identity(3));
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = Matrix::from_fn(2, 2, |_, _| v(0));
        assert_eq!(m.inverse(), Err(Error::DegenerateMetric));
    }

    #[test]
    fn det_of_four_by_four_antidiagonal() {
        let m = Matrix::from_fn(4, 4, |i, j| {
            if i + j == 3 {
                RationalFunction::one()
            } else {
                RationalFunction::zero()
            }
        });
        assert_eq!(m.det(), RationalFunction::one());
    }
}
