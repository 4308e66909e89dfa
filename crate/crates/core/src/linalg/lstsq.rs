use super::chol::cholesky;
use super::matrix::{DataMatrix, SquareMatrix};
use crate::error::{Error, Result};

/// Least squares fit of `y = β₀ + xᵀβ_slope + ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    /// `(β₀, β₁, …, β_d)`
    pub beta: Vec<f64>,
    /// Observed information `M = Σ f(x_i) f(x_i)ᵀ` with `f(x) = (1, xᵀ)ᵀ`.
    pub info: SquareMatrix,
}

impl LeastSquaresFit {
    pub fn slope(&self) -> &[f64] {
        &self.beta[1..]
    }
}

/// `Σ f(x_i) f(x_i)ᵀ` for the regression function `f(x) = (1, xᵀ)ᵀ`.
pub fn information_matrix(x: &DataMatrix) -> SquareMatrix {
    let p = x.cols() + 1;
    let mut m = SquareMatrix::zeros(p);
    let mut f = vec![1.0; p];
    {
        let data = m.as_mut_slice();
        for i in 0..x.rows() {
            f[1..].copy_from_slice(x.row(i));
            for a in 0..p {
                let fa = f[a];
                for b in a..p {
                    data[a * p + b] += fa * f[b];
                }
            }
        }
    }
    m.symmetrize_from_upper();
    m
}

/// Ordinary least squares through the normal equations `M β = Σ f(x_i) y_i`.
pub fn solve_least_squares(x: &DataMatrix) -> Result<LeastSquaresFit> {
    let y = x
        .response()
        .ok_or_else(|| Error::InvalidData("least squares needs a response column".into()))?;
    let p = x.cols() + 1;
    if x.rows() < p {
        return Err(Error::TooFewRows {
            needed: p,
            found: x.rows(),
        });
    }
    let info = information_matrix(x);
    let mut rhs = vec![0.0; p];
    for (i, &yi) in y.iter().enumerate() {
        rhs[0] += yi;
        for (r, xv) in rhs[1..].iter_mut().zip(x.row(i)) {
            *r += xv * yi;
        }
    }
    let chol = cholesky(&info).map_err(|_| Error::SingularInformation)?;
    let beta = chol.solve(&rhs);
    Ok(LeastSquaresFit { beta, info })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [-2.0, -1.0, 0.5, 3.0, 7.0];
        let x = DataMatrix::from_rows(&xs.iter().map(|v| vec![*v]).collect::<Vec<_>>())
            .unwrap()
            .with_response(xs.iter().map(|v| 2.0 + 3.0 * v).collect())
            .unwrap();
        let fit = solve_least_squares(&x).unwrap();
        assert!((fit.beta[0] - 2.0).abs() < 1e-12);
        assert!((fit.beta[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn interpolates_with_d_plus_one_points() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.3], vec![-0.4, 2.0]];
        let y = vec![1.0, -2.0, 0.5];
        let x = DataMatrix::from_rows(&rows).unwrap().with_response(y.clone()).unwrap();
        let fit = solve_least_squares(&x).unwrap();
        for (r, yi) in rows.iter().zip(&y) {
            let pred = fit.beta[0] + fit.beta[1] * r[0] + fit.beta[2] * r[1];
            assert!((pred - yi).abs() < 1e-12);
        }
    }

    #[test]
    fn error_paths() {
        let x = DataMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(solve_least_squares(&x).is_err());
        let too_few = x.clone().with_response(vec![1.0, 2.0]).unwrap();
        assert!(solve_least_squares(&too_few.select_rows(&[0]).unwrap()).is_err());
        let constant = DataMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]])
            .unwrap()
            .with_response(vec![1.0, 2.0, 3.0])
            .unwrap();
        assert_eq!(solve_least_squares(&constant), Err(Error::SingularInformation));
    }
}
