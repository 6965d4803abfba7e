use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

/// Inverse of a dense row-major n×n matrix by LU with partial pivoting.
pub(crate) fn invert(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, lu[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs == 0.0 {
            return Err(Error::SingularSystem { row: col });
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            perm.swap(col, pivot_row);
        }
        let p = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / p;
            lu[r * n + col] = factor;
            if factor != 0.0 {
                for j in col + 1..n {
                    lu[r * n + j] -= factor * lu[col * n + j];
                }
            }
        }
    }
    // Solve LU x = P e_j column by column; the result is stored transposed.
    let mut inv_t = vec![0.0; n * n];
    let mut x = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            x[i] = if perm[i] == j { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= lu[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= lu[i * n + k] * x[k];
            }
            x[i] = s / lu[i * n + i];
        }
        inv_t[j * n..(j + 1) * n].copy_from_slice(&x);
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            inv[i * n + j] = inv_t[j * n + i];
        }
    }
    Ok(inv)
}

/// y = A x for a real row-major matrix and complex x.
pub(crate) fn matvec(a: &[f64], n: usize, x: &[Complex64]) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            let row = &a[i * n..(i + 1) * n];
            let (mut re, mut im) = (0.0, 0.0);
            for (aij, xj) in row.iter().zip(x) {
                re += aij * xj.re;
                im += aij * xj.im;
            }
            Complex64::new(re, im)
        })
        .collect()
}

/// Pre-factored complex tridiagonal system (Thomas algorithm).
#[derive(Clone, Debug)]
pub(crate) struct Tridiagonal {
    lower: Vec<Complex64>,
    /// Modified super-diagonal c'_i.
    upper: Vec<Complex64>,
    /// Reciprocal of the eliminated diagonal.
    inv_diag: Vec<Complex64>,
}

impl Tridiagonal {
    /// `lower[i]` couples row i to i−1 (lower[0] unused), `upper[i]` row i to i+1.
    pub(crate) fn factor(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        let mut up = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_diag = vec![Complex64::new(0.0, 0.0); n];
        let mut prev_up = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let d = if i == 0 { diag[0] } else { diag[i] - lower[i] * prev_up };
            if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            let inv = d.inv();
            inv_diag[i] = inv;
            if i + 1 < n {
                up[i] = upper[i] * inv;
                prev_up = up[i];
            }
        }
        Ok(Tridiagonal { lower: lower.to_vec(), upper: up, inv_diag })
    }

    pub(crate) fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_diag[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_diag[i];
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= self.upper[i] * next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_small_matrix() {
        let a = [4.0, -2.0, 1.0, 3.0, 6.0, -4.0, 2.0, 1.0, 8.0];
        let inv = invert(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-14);
            }
        }
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2).is_err());
    }

    #[test]
    fn thomas_solves_tridiagonal() {
        let n = 7;
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let lower: Vec<_> = (0..n).map(|i| c(0.3 * i as f64, -0.1)).collect();
        let diag: Vec<_> = (0..n).map(|i| c(3.0 + i as f64, 0.5)).collect();
        let upper: Vec<_> = (0..n).map(|i| c(-0.7, 0.2 * i as f64)).collect();
        let x: Vec<_> = (0..n).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let mut b: Vec<_> = (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        Tridiagonal::factor(&lower, &diag, &upper).unwrap().solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-13);
        }
    }
}
