//! Dense row-major complex matrix used for classical inputs and oracles.

use num_complex::Complex64;

use crate::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::arg("ragged rows"));
        }
        Ok(ComplexMatrix {
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_real_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Zero-pads to the next power-of-two square size, anchored top-left.
    pub fn pad_to_power_of_two(&self) -> ComplexMatrix {
        let dim = self.rows.max(self.cols).max(1).next_power_of_two();
        if dim == self.rows && dim == self.cols {
            return self.clone();
        }
        let mut out = ComplexMatrix::zeros(dim, dim);
        for r in 0..self.rows {
            out.data[r * dim..r * dim + self.cols].copy_from_slice(self.row(r));
        }
        out
    }

    /// Number of system qubits when the matrix is a square power of two.
    pub fn qubits(&self) -> Result<u32> {
        if self.rows != self.cols || self.rows < 2 || !self.rows.is_power_of_two() {
            return Err(Error::arg(format!(
                "matrix must be square with power-of-two dimension >= 2, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.rows.trailing_zeros())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.norm_sqr() == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_anchors_top_left() {
        let m = ComplexMatrix::from_real_rows(vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ])
        .unwrap();
        let p = m.pad_to_power_of_two();
        assert_eq!((p.rows(), p.cols()), (4, 4));
        assert_eq!(p[(1, 2)].re, 6.0);
        assert_eq!(p[(3, 3)].re, 0.0);
        assert_eq!(p[(0, 3)].re, 0.0);
    }

    #[test]
    fn kron_identity() {
        let a = ComplexMatrix::from_real_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let k = a.kron(&ComplexMatrix::identity(2));
        assert_eq!(k[(0, 0)].re, 1.0);
        assert_eq!(k[(1, 1)].re, 1.0);
        assert_eq!(k[(2, 0)].re, 3.0);
        assert_eq!(k[(2, 2)].re, 4.0);
        assert_eq!(k[(0, 2)].re, 2.0);
        assert_eq!(k[(0, 1)].re, 0.0);
    }

    #[test]
    fn qubits_requires_square_power_of_two() {
        assert!(ComplexMatrix::zeros(3, 3).qubits().is_err());
        assert!(ComplexMatrix::zeros(4, 2).qubits().is_err());
        assert_eq!(ComplexMatrix::zeros(8, 8).qubits().unwrap(), 3);
    }
}
