//! Dense LU factorization with partial pivoting over [`MpComplex`]:
//! linear solves and determinants for the small systems used throughout
//! (moment Gram systems, symbol minors, coefficient interpolation).

use super::complex::MpComplex;
use super::real::MpReal;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<MpComplex>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        Matrix { rows, cols, data: vec![MpComplex::zero(prec); rows * cols] }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = Self::zeros(n, n, prec);
        for i in 0..n {
            *m.at_mut(i, i) = MpComplex::one(prec);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<MpComplex>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        assert!(rows.iter().all(|x| x.len() == c));
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn at(&self, i: usize, j: usize) -> &MpComplex {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut MpComplex {
        &mut self.data[i * self.cols + j]
    }

    pub fn prec(&self) -> u32 {
        self.data.iter().map(|c| c.prec()).max().unwrap_or(64)
    }

    /// Submatrix after deleting one row and one column (0-indexed).
    pub fn minor_matrix(&self, del_row: usize, del_col: usize) -> Matrix {
        let mut rows = Vec::with_capacity(self.rows - 1);
        for i in 0..self.rows {
            if i == del_row {
                continue;
            }
            let mut row = Vec::with_capacity(self.cols - 1);
            for j in 0..self.cols {
                if j == del_col {
                    continue;
                }
                row.push(self.at(i, j).clone());
            }
            rows.push(row);
        }
        Matrix::from_rows(rows)
    }

    /// Submatrix after deleting the first k rows and columns.
    pub fn trailing_principal(&self, k: usize) -> Matrix {
        let mut rows = Vec::new();
        for i in k..self.rows {
            let mut row = Vec::new();
            for j in k..self.cols {
                row.push(self.at(i, j).clone());
            }
            rows.push(row);
        }
        Matrix::from_rows(rows)
    }

    pub fn mat_vec(&self, v: &[MpComplex]) -> Vec<MpComplex> {
        assert_eq!(v.len(), self.cols);
        let prec = self.prec();
        (0..self.rows)
            .map(|i| {
                let mut acc = MpComplex::zero(prec);
                for j in 0..self.cols {
                    acc = acc + self.at(i, j).mul_c(&v[j]);
                }
                acc
            })
            .collect()
    }
}

/// In-place LU with partial pivoting. Returns (lu, permutation, sign).
fn lu_factor(mut a: Matrix) -> Result<(Matrix, Vec<usize>, i32)> {
    let n = a.rows;
    assert_eq!(n, a.cols);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1i32;
    for k in 0..n {
        // pivot by largest modulus
        let mut best = k;
        let mut best_mag = a.at(k, k).norm_sqr();
        for i in k + 1..n {
            let mag = a.at(i, k).norm_sqr();
            if mag > best_mag {
                best = i;
                best_mag = mag;
            }
        }
        if best_mag.is_zero() {
            return Err(Error::IllConditioned { degree: n });
        }
        if best != k {
            for j in 0..n {
                let tmp = a.at(k, j).clone();
                *a.at_mut(k, j) = a.at(best, j).clone();
                *a.at_mut(best, j) = tmp;
            }
            perm.swap(k, best);
            sign = -sign;
        }
        let pivot = a.at(k, k).clone();
        for i in k + 1..n {
            let factor = a.at(i, k).div_c(&pivot);
            *a.at_mut(i, k) = factor.clone();
            for j in k + 1..n {
                let upd = a.at(i, j).clone() - factor.mul_c(a.at(k, j));
                *a.at_mut(i, j) = upd;
            }
        }
    }
    Ok((a, perm, sign))
}

/// Solve A x = b.
pub fn solve(a: &Matrix, b: &[MpComplex]) -> Result<Vec<MpComplex>> {
    let n = a.rows;
    assert_eq!(b.len(), n);
    let (lu, perm, _) = lu_factor(a.clone())?;
    let prec = lu.prec();
    let mut y: Vec<MpComplex> = perm.iter().map(|&p| b[p].clone()).collect();
    for i in 0..n {
        let mut acc = y[i].clone();
        for j in 0..i {
            acc = acc - lu.at(i, j).mul_c(&y[j]);
        }
        y[i] = acc;
    }
    let mut x = vec![MpComplex::zero(prec); n];
    for i in (0..n).rev() {
        let mut acc = y[i].clone();
        for j in i + 1..n {
            acc = acc - lu.at(i, j).mul_c(&x[j]);
        }
        x[i] = acc.div_c(lu.at(i, i));
    }
    Ok(x)
}

/// Determinant via LU; zero pivot collapses to exact zero determinant only
/// for structurally singular input, so callers treat the error as "singular".
pub fn det(a: &Matrix) -> MpComplex {
    let n = a.rows;
    let prec = a.prec();
    if n == 0 {
        return MpComplex::one(prec);
    }
    match lu_factor(a.clone()) {
        Err(_) => MpComplex::zero(prec),
        Ok((lu, _, sign)) => {
            let mut d = MpComplex::one(prec);
            for i in 0..n {
                d = d.mul_c(lu.at(i, i));
            }
            if sign < 0 {
                -d
            } else {
                d
            }
        }
    }
}

/// Max |A x - b| over rows, for verifying solves in tests.
pub fn residual_inf(a: &Matrix, x: &[MpComplex], b: &[MpComplex]) -> MpReal {
    let ax = a.mat_vec(x);
    let prec = a.prec();
    let mut m = MpReal::zero(prec);
    for i in 0..b.len() {
        m = m.max_r(&(ax[i].clone() - &b[i]).abs());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_det_small() {
        let p = 192;
        let a = Matrix::from_rows(vec![
            vec![MpComplex::from_f64(2.0, 0.0, p), MpComplex::from_f64(1.0, 0.0, p)],
            vec![MpComplex::from_f64(1.0, 0.0, p), MpComplex::from_f64(3.0, 0.0, p)],
        ]);
        let b = vec![MpComplex::from_f64(5.0, 0.0, p), MpComplex::from_f64(10.0, 0.0, p)];
        let x = solve(&a, &b).unwrap();
        assert!((x[0].re.to_f64() - 1.0).abs() < 1e-40);
        assert!((x[1].re.to_f64() - 3.0).abs() < 1e-40);
        let d = det(&a);
        assert!((d.re.to_f64() - 5.0).abs() < 1e-40);
        assert!(residual_inf(&a, &x, &b).to_f64() < 1e-40);
    }

    #[test]
    fn empty_determinant_is_one() {
        let a = Matrix::zeros(0, 0, 128);
        assert!((det(&a).re.to_f64() - 1.0).abs() < 1e-30);
    }
}
