use super::matrix::SquareMatrix;
use crate::error::{Error, Result};

/// Relative pivot tolerance: a pivot at or below `PIVOT_TOLERANCE * max(diag)`
/// is treated as a loss of positive definiteness.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Lower-triangular factor `L` with `S = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    lower: SquareMatrix,
}

/// Cholesky factorization of a symmetric matrix. Only the lower triangle of
/// `s` is read.
pub fn cholesky(s: &SquareMatrix) -> Result<CholFactor> {
    let n = s.dim();
    let tol = PIVOT_TOLERANCE * s.max_abs_diagonal();
    let mut l = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut pivot = s[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            let (ri, rj) = (l.row(i), l.row(j));
            for k in 0..j {
                v -= ri[k] * rj[k];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(CholFactor { lower: l })
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &SquareMatrix {
        &self.lower
    }

    /// `L Lᵀ`
    pub fn recompose(&self) -> SquareMatrix {
        let n = self.dim();
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| self.lower[(i, k)] * self.lower[(j, k)]).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Overwrites `b` with `L⁻¹ b`.
    pub fn forward_substitute(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let row = self.lower.row(i);
            let mut v = b[i];
            for k in 0..i {
                v -= row[k] * b[k];
            }
            b[i] = v / row[i];
        }
    }

    /// Overwrites `b` with `L⁻ᵀ b`.
    pub fn backward_substitute(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= self.lower[(k, i)] * b[k];
            }
            b[i] = v / self.lower[(i, i)];
        }
    }

    /// Solves `S x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_substitute(&mut x);
        self.backward_substitute(&mut x);
        x
    }

    /// `ln det S`, accumulated from the diagonal of `L` so it cannot underflow.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }

    /// `S⁻¹`, symmetric by construction.
    pub fn inverse(&self) -> SquareMatrix {
        let n = self.dim();
        // L⁻¹ column by column, then S⁻¹ = L⁻ᵀ L⁻¹.
        let mut linv = SquareMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.forward_substitute(&mut e);
            for i in 0..n {
                linv[(i, j)] = e[i];
            }
        }
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                // L⁻¹ is lower triangular, so only rows k >= max(i, j) contribute.
                let v: f64 = (i..n).map(|k| linv[(k, i)] * linv[(k, j)]).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor_is_identity() {
        let l = cholesky(&SquareMatrix::identity(2)).unwrap();
        assert_eq!(l.lower(), &SquareMatrix::identity(2));
    }

    #[test]
    fn diagonal_factor_is_square_root() {
        let s = SquareMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 9.0]]).unwrap();
        let l = cholesky(&s).unwrap();
        assert_eq!(l.lower().diagonal(), vec![2.0, 3.0]);
        assert_eq!(l.lower()[(1, 0)], 0.0);
    }

    #[test]
    fn compound_symmetry_recomposes() {
        let s = SquareMatrix::compound_symmetry(3, 0.5);
        let l = cholesky(&s).unwrap();
        let back = l.recompose();
        for (a, b) in back.as_slice().iter().zip(s.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(l.lower().diagonal().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn rejects_indefinite_and_semidefinite() {
        let s = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&s), Err(Error::NotPositiveDefinite { index: 1, .. })));
        let singular = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(cholesky(&singular).is_err());
    }

    #[test]
    fn inverse_and_log_det() {
        let s = SquareMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let l = cholesky(&s).unwrap();
        let prod = s.matmul(&l.inverse()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-13);
            }
        }
        // det by cofactor expansion
        let det = 4.0 * (3.0 * 2.0 - 0.2 * 0.2) - 1.0 * (1.0 * 2.0 - 0.2 * 0.5)
            + 0.5 * (1.0 * 0.2 - 3.0 * 0.5);
        assert!((l.log_det() - f64::ln(det)).abs() < 1e-13);
        let x = l.solve(&[1.0, 2.0, 3.0]);
        let back = s.mul_vec(&x);
        for (a, b) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
