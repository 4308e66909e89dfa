use super::chol::{cholesky, CholFactor};
use super::matrix::SquareMatrix;
use crate::error::{Error, Result};

const STRUCTURE_TOLERANCE: f64 = 1e-12;

/// Shape of a dispersion matrix. The tag selects the distance kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovStructure {
    General,
    /// `(1 - rho) I + rho 11ᵀ`
    CompoundSymmetry(f64),
    Diagonal,
}

/// Location vector and positive-definite dispersion matrix of an elliptical
/// covariate distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CovSpec {
    mean: Vec<f64>,
    dispersion: SquareMatrix,
    structure: CovStructure,
}

impl CovSpec {
    pub fn new(mean: Vec<f64>, dispersion: SquareMatrix, structure: CovStructure) -> Result<Self> {
        let d = dispersion.dim();
        if d == 0 {
            return Err(Error::InvalidCovariance("empty dispersion matrix".into()));
        }
        if mean.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: mean.len(),
            });
        }
        if mean.iter().chain(dispersion.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        if dispersion.asymmetry() > STRUCTURE_TOLERANCE {
            return Err(Error::InvalidCovariance("dispersion is not symmetric".into()));
        }
        match structure {
            CovStructure::General => {}
            CovStructure::Diagonal => {
                for i in 0..d {
                    for j in 0..d {
                        if i != j && dispersion[(i, j)] != 0.0 {
                            return Err(Error::InvalidCovariance(format!(
                                "diagonal structure has nonzero entry at ({i}, {j})"
                            )));
                        }
                    }
                }
            }
            CovStructure::CompoundSymmetry(rho) => {
                check_rho(d, rho)?;
                let target = SquareMatrix::compound_symmetry(d, rho);
                let off = dispersion
                    .as_slice()
                    .iter()
                    .zip(target.as_slice())
                    .any(|(a, b)| (a - b).abs() > STRUCTURE_TOLERANCE);
                if off {
                    return Err(Error::InvalidCovariance(
                        "dispersion does not match compound symmetry".into(),
                    ));
                }
            }
        }
        // Positive definiteness is part of the contract.
        cholesky(&dispersion)?;
        Ok(Self {
            mean,
            dispersion,
            structure,
        })
    }

    pub fn general(mean: Vec<f64>, dispersion: SquareMatrix) -> Result<Self> {
        Self::new(mean, dispersion, CovStructure::General)
    }

    pub fn diagonal(mean: Vec<f64>, variances: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = variances.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveVariance { index, value });
        }
        Self::new(mean, SquareMatrix::from_diagonal(variances), CovStructure::Diagonal)
    }

    /// Centered compound symmetry `Σ_ρ`.
    pub fn compound_symmetry(d: usize, rho: f64) -> Result<Self> {
        check_rho(d, rho)?;
        Self::new(
            vec![0.0; d],
            SquareMatrix::compound_symmetry(d, rho),
            CovStructure::CompoundSymmetry(rho),
        )
    }

    pub fn identity(d: usize) -> Self {
        Self::diagonal(vec![0.0; d], &vec![1.0; d]).expect("identity is a valid dispersion")
    }

    /// Detects the cheapest structure tag the matrix satisfies.
    pub fn infer(mean: Vec<f64>, dispersion: SquareMatrix) -> Result<Self> {
        let d = dispersion.dim();
        let off_diag_zero = (0..d).all(|i| (0..d).all(|j| i == j || dispersion[(i, j)] == 0.0));
        if off_diag_zero {
            return Self::new(mean, dispersion, CovStructure::Diagonal);
        }
        if d > 1 {
            let rho = dispersion[(0, 1)];
            let target = SquareMatrix::compound_symmetry(d, rho);
            let matches = dispersion
                .as_slice()
                .iter()
                .zip(target.as_slice())
                .all(|(a, b)| (a - b).abs() <= STRUCTURE_TOLERANCE);
            if matches && check_rho(d, rho).is_ok() {
                return Self::new(mean, dispersion, CovStructure::CompoundSymmetry(rho));
            }
        }
        Self::new(mean, dispersion, CovStructure::General)
    }

    pub fn with_mean(mut self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: mean.len(),
            });
        }
        self.mean = mean;
        Ok(self)
    }

    /// Same matrix, tagged `General`, so every consumer takes the dense path.
    pub fn as_general(&self) -> Self {
        Self {
            mean: self.mean.clone(),
            dispersion: self.dispersion.clone(),
            structure: CovStructure::General,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn dispersion(&self) -> &SquareMatrix {
        &self.dispersion
    }

    pub fn structure(&self) -> CovStructure {
        self.structure
    }

    pub fn variances(&self) -> Vec<f64> {
        self.dispersion.diagonal()
    }

    pub fn cholesky(&self) -> Result<CholFactor> {
        cholesky(&self.dispersion)
    }

    /// `Σ⁻¹`, through the closed rank-one form for compound symmetry.
    pub fn inverse(&self) -> Result<SquareMatrix> {
        let d = self.dim();
        match self.structure {
            CovStructure::Diagonal => Ok(SquareMatrix::from_diagonal(
                &self.dispersion.diagonal().iter().map(|v| 1.0 / v).collect::<Vec<_>>(),
            )),
            CovStructure::CompoundSymmetry(rho) => {
                let (a, b) = compound_symmetry_inverse_coefficients(d, rho);
                let mut m = SquareMatrix::zeros(d);
                for i in 0..d {
                    for j in 0..d {
                        m[(i, j)] = a * (if i == j { 1.0 } else { 0.0 } - b);
                    }
                }
                Ok(m)
            }
            CovStructure::General => Ok(self.cholesky()?.inverse()),
        }
    }

    /// `ln det Σ`
    pub fn log_det(&self) -> Result<f64> {
        let d = self.dim() as f64;
        match self.structure {
            CovStructure::Diagonal => Ok(self.dispersion.diagonal().iter().map(|v| v.ln()).sum()),
            CovStructure::CompoundSymmetry(rho) => {
                Ok((d - 1.0) * (1.0 - rho).ln() + (1.0 - rho + d * rho).ln())
            }
            CovStructure::General => Ok(self.cholesky()?.log_det()),
        }
    }
}

/// `Σ_ρ⁻¹ = a (I - b 11ᵀ)` with `a = 1/(1-ρ)` and `b = ρ/(1-ρ+dρ)`.
pub(crate) fn compound_symmetry_inverse_coefficients(d: usize, rho: f64) -> (f64, f64) {
    let a = 1.0 / (1.0 - rho);
    let b = rho / (1.0 - rho + d as f64 * rho);
    (a, b)
}

fn check_rho(d: usize, rho: f64) -> Result<()> {
    let lower = if d > 1 { -1.0 / (d as f64 - 1.0) } else { f64::NEG_INFINITY };
    if !(rho < 1.0 && rho > lower) {
        return Err(Error::InvalidCovariance(format!(
            "compound-symmetry correlation {rho} outside ({lower}, 1) for d = {d}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infer_detects_structures() {
        let cs = CovSpec::infer(vec![0.0; 4], SquareMatrix::compound_symmetry(4, 0.3)).unwrap();
        assert_eq!(cs.structure(), CovStructure::CompoundSymmetry(0.3));
        let diag = CovSpec::infer(vec![0.0; 2], SquareMatrix::from_diagonal(&[2.0, 3.0])).unwrap();
        assert_eq!(diag.structure(), CovStructure::Diagonal);
        let general = CovSpec::infer(
            vec![0.0; 2],
            SquareMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(general.structure(), CovStructure::General);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CovSpec::compound_symmetry(3, -0.6).is_err());
        assert!(CovSpec::compound_symmetry(3, 1.0).is_err());
        assert!(matches!(
            CovSpec::diagonal(vec![0.0; 2], &[1.0, 0.0]),
            Err(Error::NonPositiveVariance { index: 1, .. })
        ));
        let asym = SquareMatrix::from_rows(&[vec![1.0, 0.2], vec![0.1, 1.0]]).unwrap();
        assert!(CovSpec::general(vec![0.0; 2], asym).is_err());
        let wrong_tag = CovSpec::new(
            vec![0.0; 2],
            SquareMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 1.0]]).unwrap(),
            CovStructure::Diagonal,
        );
        assert!(wrong_tag.is_err());
    }

    #[test]
    fn closed_form_inverse_matches_dense() {
        for &(d, rho) in &[(3, 0.5), (10, -0.05), (50, 0.5)] {
            let cs = CovSpec::compound_symmetry(d, rho).unwrap();
            let fast = cs.inverse().unwrap();
            let dense = cs.as_general().inverse().unwrap();
            for (a, b) in fast.as_slice().iter().zip(dense.as_slice()) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
            let ld = cs.log_det().unwrap();
            assert!((ld - cs.as_general().log_det().unwrap()).abs() < 1e-10);
        }
    }
}
