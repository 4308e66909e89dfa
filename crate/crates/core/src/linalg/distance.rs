//! Squared Mahalanobis distances `(x - μ)ᵀ Σ⁻¹ (x - μ)` over the rows of a
//! data matrix.
//!
//! The kernel is picked from the [`CovStructure`] tag:
//!
//! * `Diagonal`: elementwise, `O(d)` per row.
//! * `CompoundSymmetry(ρ)`: the rank-one inverse
//!   `Σ⁻¹ = (1/(1-ρ)) (I - ρ/(1-ρ+dρ) 11ᵀ)` needs only `‖u‖²` and `(1ᵀu)²`,
//!   so also `O(d)` per row.
//! * `General`: one Cholesky factorization, then a forward substitution per
//!   row, `O(d²)` per row.
//!
//! Rows are processed in fixed-size blocks. Each output entry depends only on
//! its own row, so parallel and serial runs agree bit for bit.

use rayon::prelude::*;

use super::chol::CholFactor;
use super::cov::{compound_symmetry_inverse_coefficients, CovSpec, CovStructure};
use super::matrix::DataMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_BLOCK_ROWS: usize = 4096;

/// A prepared distance evaluator for one `(μ, Σ)` pair.
#[derive(Debug, Clone)]
pub enum DistanceKernel {
    Diagonal {
        mean: Vec<f64>,
        inv_var: Vec<f64>,
    },
    CompoundSymmetry {
        mean: Vec<f64>,
        scale: f64,
        rank_one: f64,
    },
    General {
        mean: Vec<f64>,
        chol: CholFactor,
    },
}

impl DistanceKernel {
    pub fn new(cov: &CovSpec) -> Result<Self> {
        let mean = cov.mean().to_vec();
        Ok(match cov.structure() {
            CovStructure::Diagonal => Self::Diagonal {
                inv_var: cov.variances().iter().map(|v| 1.0 / v).collect(),
                mean,
            },
            CovStructure::CompoundSymmetry(rho) => {
                let (scale, rank_one) = compound_symmetry_inverse_coefficients(cov.dim(), rho);
                Self::CompoundSymmetry {
                    mean,
                    scale,
                    rank_one,
                }
            }
            CovStructure::General => Self::General {
                chol: cov.cholesky()?,
                mean,
            },
        })
    }

    /// Diagonal kernel from per-coordinate variances.
    pub fn simplified(mean: &[f64], variances: &[f64]) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: variances.len(),
            });
        }
        if let Some((index, &value)) = variances.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveVariance { index, value });
        }
        Ok(Self::Diagonal {
            mean: mean.to_vec(),
            inv_var: variances.iter().map(|v| 1.0 / v).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal { mean, .. }
            | Self::CompoundSymmetry { mean, .. }
            | Self::General { mean, .. } => mean.len(),
        }
    }

    /// Distance of one row. `scratch` must have length `d`; only the general
    /// kernel touches it.
    #[inline]
    pub fn distance(&self, row: &[f64], scratch: &mut [f64]) -> f64 {
        match self {
            Self::Diagonal { mean, inv_var } => row
                .iter()
                .zip(mean)
                .zip(inv_var)
                .map(|((x, m), w)| {
                    let u = x - m;
                    u * u * w
                })
                .sum(),
            Self::CompoundSymmetry {
                mean,
                scale,
                rank_one,
            } => {
                let (mut sq, mut sum) = (0.0, 0.0);
                for (x, m) in row.iter().zip(mean) {
                    let u = x - m;
                    sq += u * u;
                    sum += u;
                }
                (scale * (sq - rank_one * sum * sum)).max(0.0)
            }
            Self::General { mean, chol } => {
                for ((s, x), m) in scratch.iter_mut().zip(row).zip(mean) {
                    *s = x - m;
                }
                chol.forward_substitute(scratch);
                scratch.iter().map(|v| v * v).sum()
            }
        }
    }

    /// Distances of all rows, computed block by block.
    pub fn distances(&self, x: &DataMatrix, block_rows: usize) -> Result<Vec<f64>> {
        let d = self.dim();
        if x.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.cols(),
            });
        }
        let block_rows = block_rows.max(1);
        let mut out = vec![0.0; x.rows()];
        out.par_chunks_mut(block_rows)
            .zip(x.values().par_chunks(block_rows * d))
            .for_each(|(dst, src)| {
                let mut scratch = vec![0.0; d];
                for (o, row) in dst.iter_mut().zip(src.chunks_exact(d)) {
                    *o = self.distance(row, &mut scratch);
                }
            });
        Ok(out)
    }
}

/// Squared Mahalanobis distance of every row of `x` to `cov.mean()`.
pub fn mahalanobis_all(x: &DataMatrix, cov: &CovSpec) -> Result<Vec<f64>> {
    mahalanobis_all_blocked(x, cov, DEFAULT_BLOCK_ROWS)
}

pub fn mahalanobis_all_blocked(x: &DataMatrix, cov: &CovSpec, block_rows: usize) -> Result<Vec<f64>> {
    if x.cols() != cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            found: x.cols(),
        });
    }
    DistanceKernel::new(cov)?.distances(x, block_rows)
}

/// `Σ_j (x_ij - μ_j)² / σ_j²`, the distance that ignores correlation.
pub fn simplified_distance_all(x: &DataMatrix, mean: &[f64], variances: &[f64]) -> Result<Vec<f64>> {
    DistanceKernel::simplified(mean, variances)?.distances(x, DEFAULT_BLOCK_ROWS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SquareMatrix;

    #[test]
    fn centered_point_has_zero_distance() {
        let cov = CovSpec::compound_symmetry(3, 0.5)
            .unwrap()
            .with_mean(vec![1.0, 2.0, 3.0])
            .unwrap();
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(mahalanobis_all(&x, &cov).unwrap(), vec![0.0]);
        assert_eq!(mahalanobis_all(&x, &cov.as_general()).unwrap(), vec![0.0]);
    }

    #[test]
    fn ones_vector_under_compound_symmetry() {
        let cov = CovSpec::compound_symmetry(3, 0.5).unwrap();
        let x = DataMatrix::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        let fast = mahalanobis_all(&x, &cov).unwrap()[0];
        let dense = mahalanobis_all(&x, &cov.as_general()).unwrap()[0];
        assert!((fast - 1.5).abs() < 1e-14);
        assert!((dense - 1.5).abs() < 1e-14);
    }

    #[test]
    fn euclidean_under_identity() {
        let x = DataMatrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let d = mahalanobis_all(&x, &CovSpec::identity(2)).unwrap();
        assert_eq!(d, vec![25.0]);
    }

    #[test]
    fn simplified_distance_examples() {
        let x = DataMatrix::from_rows(&[vec![2.0, 0.0], vec![1.0, -2.0]]).unwrap();
        let d = simplified_distance_all(&x, &[0.0, 0.0], &[4.0, 1.0]).unwrap();
        assert_eq!(d, vec![1.0, 0.25 + 4.0]);
        let unit = simplified_distance_all(&x, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(unit, vec![4.0, 5.0]);
        assert!(matches!(
            simplified_distance_all(&x, &[0.0, 0.0], &[1.0, -1.0]),
            Err(Error::NonPositiveVariance { index: 1, .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            mahalanobis_all(&x, &CovSpec::identity(3)),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn block_size_does_not_change_results() {
        let rows: Vec<Vec<f64>> = (0..37)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos(), i as f64 * 0.01])
            .collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        let s = SquareMatrix::from_rows(&[
            vec![2.0, 0.3, 0.1],
            vec![0.3, 1.0, -0.2],
            vec![0.1, -0.2, 0.5],
        ])
        .unwrap();
        let cov = CovSpec::general(vec![0.1, -0.1, 0.0], s).unwrap();
        let a = mahalanobis_all_blocked(&x, &cov, 1).unwrap();
        let b = mahalanobis_all_blocked(&x, &cov, 5).unwrap();
        let c = mahalanobis_all_blocked(&x, &cov, 4096).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
