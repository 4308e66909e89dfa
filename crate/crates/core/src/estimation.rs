//! Statistics of the least squares fit on selected subdata.

use std::time::{Duration, Instant};

use rand_distr::{Distribution, StandardNormal};

use crate::design::DesignSpec;
use crate::dist::{sample_covariates_into, sample_normal_errors, special::normal_quantile, EllipticalModel, Family, RngStream};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, solve_least_squares, CovSpec, DataMatrix, SquareMatrix};
use crate::select::{
    select_iboss, select_quantile_threshold, select_top_k_leverage, select_top_k_mahalanobis,
    select_top_k_simplified, select_uniform, Method,
};

/// `C = (XᵀX − k·x̄x̄ᵀ)⁻¹` for a `k × d` subsample.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeCovariance {
    pub matrix: SquareMatrix,
    /// `det(C)^{1/d}`, from the log-determinant so it cannot underflow.
    pub standardized_det: f64,
    pub log_det: f64,
}

/// Centered Gram matrix `Σ (x_i − x̄)(x_i − x̄)ᵀ`, two-pass.
pub fn centered_gram(x: &DataMatrix) -> SquareMatrix {
    let (k, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for i in 0..k {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= k as f64;
    }
    let mut g = SquareMatrix::zeros(d);
    let mut u = vec![0.0; d];
    {
        let data = g.as_mut_slice();
        for i in 0..k {
            for ((t, v), m) in u.iter_mut().zip(x.row(i)).zip(&mean) {
                *t = v - m;
            }
            for a in 0..d {
                let ua = u[a];
                for b in a..d {
                    data[a * d + b] += ua * u[b];
                }
            }
        }
    }
    g.symmetrize_from_upper();
    g
}

pub fn slope_covariance(subsample: &DataMatrix) -> Result<SlopeCovariance> {
    let d = subsample.cols();
    if subsample.rows() < d + 1 {
        return Err(Error::TooFewRows {
            needed: d + 1,
            found: subsample.rows(),
        });
    }
    let chol = cholesky(&centered_gram(subsample)).map_err(|_| Error::SingularInformation)?;
    let log_det = -chol.log_det();
    Ok(SlopeCovariance {
        matrix: chol.inverse(),
        standardized_det: (log_det / d as f64).exp(),
        log_det,
    })
}

/// Which rows enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subdata {
    Full,
    Select(Method),
}

impl Subdata {
    pub fn name(&self) -> &'static str {
        match self {
            Subdata::Full => "full",
            Subdata::Select(m) => m.name(),
        }
    }
}

impl std::str::FromStr for Subdata {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("full") {
            Ok(Subdata::Full)
        } else {
            Ok(Subdata::Select(s.parse()?))
        }
    }
}

/// Row indices chosen by `rule` (all rows for `Full`) and the selection time.
///
/// Model-based rules use the true moments `cov`; the threshold rule uses
/// proportion `k/n`.
pub fn choose_rows(
    x: &DataMatrix,
    rule: Subdata,
    family: Family,
    cov: &CovSpec,
    k: usize,
    rng: &mut RngStream,
) -> Result<(Vec<usize>, Duration)> {
    let started = Instant::now();
    let n = x.rows();
    let result = match rule {
        Subdata::Full => return Ok(((0..n).collect(), started.elapsed())),
        Subdata::Select(Method::DOpt) => select_top_k_mahalanobis(x, cov, k)?,
        Subdata::Select(Method::DOptSimplified) => select_top_k_simplified(x, cov.mean(), &cov.variances(), k)?,
        Subdata::Select(Method::Iboss) => select_iboss(x, k)?,
        Subdata::Select(Method::Uniform) => select_uniform(x, k, rng)?,
        Subdata::Select(Method::Leverage) => select_top_k_leverage(x, k)?,
        Subdata::Select(Method::QuantileThreshold) => {
            if k >= n {
                return Ok(((0..n).collect(), started.elapsed()));
            }
            let q = crate::design::optimal_threshold(family, cov.dim(), k as f64 / n as f64)?;
            select_quantile_threshold(x, cov, q)?
        }
    };
    Ok((result.indices, started.elapsed()))
}

/// Covariate model, data size and replication for the estimation studies.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: EllipticalModel,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Error standard deviation; zero gives noiseless responses.
    pub sigma: f64,
}

impl Scenario {
    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::NonPositiveSigma(self.sigma));
        }
        if self.n == 0 {
            return Err(Error::TooFewRows { needed: 1, found: 0 });
        }
        Ok(())
    }

    fn stream(&self, replicate: usize) -> RngStream {
        RngStream::new(self.seed, replicate as u64)
    }
}

/// How the per-replicate squared error is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MseEstimator {
    /// Draw `β` and responses, fit, and take `‖β̂_slope − β_slope‖²`.
    Sampled,
    /// `σ²·tr(C_slope)`, the expectation of the sampled value given the
    /// selected covariates; needs no responses.
    Conditional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseResult {
    /// Per replicate, in replicate order.
    pub squared_errors: Vec<f64>,
    pub mse: f64,
    /// `mse / d`
    pub mse_per_dim: f64,
    /// Standard error of `mse_per_dim` across replicates.
    pub std_error_per_dim: f64,
}

fn standard_normal_vec(len: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Responses `y = β₀ + xᵀβ_slope + ε` for the chosen rows only. Errors are
/// independent of the covariates, so drawing them for unchosen rows would not
/// change the distribution of the fit.
fn subdata_with_response(x: &DataMatrix, rows: &[usize], beta: &[f64], sigma: f64, rng: &mut RngStream) -> Result<DataMatrix> {
    let sub = x.select_rows(rows)?;
    let noise = if sigma > 0.0 {
        sample_normal_errors(rows.len(), sigma, rng)?
    } else {
        vec![0.0; rows.len()]
    };
    let y = (0..sub.rows())
        .map(|i| beta[0] + sub.row(i).iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>() + noise[i])
        .collect();
    sub.with_response(y)
}

/// Mean squared error of the slope estimate over `scenario.replicates`
/// replicates, each with fresh `β ~ N(0, I_{d+1})`, covariates and errors.
pub fn simulate_mse(scenario: &Scenario, rule: Subdata, k: usize, estimator: MseEstimator) -> Result<MseResult> {
    scenario.validate()?;
    let d = scenario.model.dim();
    let mut buf = DataMatrix::zeros(1, d);
    let mut squared_errors = Vec::with_capacity(scenario.replicates);
    for v in 0..scenario.replicates {
        let stream = scenario.stream(v);
        let beta = standard_normal_vec(d + 1, &mut stream.derive(0));
        sample_covariates_into(&scenario.model, scenario.n, &mut stream.derive(1), &mut buf)?;
        let (rows, _) = choose_rows(&buf, rule, scenario.model.family, &scenario.model.cov, k, &mut stream.derive(2))?;
        let err = match estimator {
            MseEstimator::Conditional => {
                let c = slope_covariance(&buf.select_rows(&rows)?)?;
                scenario.sigma * scenario.sigma * c.matrix.trace()
            }
            MseEstimator::Sampled => {
                let sub = subdata_with_response(&buf, &rows, &beta, scenario.sigma, &mut stream.derive(3))?;
                let fit = solve_least_squares(&sub)?;
                fit.slope().iter().zip(&beta[1..]).map(|(a, b)| (a - b) * (a - b)).sum()
            }
        };
        squared_errors.push(err);
    }
    let v = squared_errors.len() as f64;
    let mse = squared_errors.iter().sum::<f64>() / v;
    let var = if squared_errors.len() > 1 {
        squared_errors.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (v - 1.0)
    } else {
        0.0
    };
    Ok(MseResult {
        mse,
        mse_per_dim: mse / d as f64,
        std_error_per_dim: (var / v).sqrt() / d as f64,
        squared_errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageResult {
    /// Coverage averaged over the `d + 1` coefficients.
    pub rate: f64,
    /// Coverage of each coefficient, intercept first.
    pub per_coefficient: Vec<f64>,
    pub replicates: usize,
}

/// Empirical coverage of `β̂_j ± z·σ·√([ (n·M(ξ*α))⁻¹ ]_jj)` under threshold
/// selection with proportion `alpha`, using the theoretical information of
/// the optimal design rather than the observed one.
pub fn coverage_check(scenario: &Scenario, alpha: f64, level: f64) -> Result<CoverageResult> {
    scenario.validate()?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidProbability(level));
    }
    let model = &scenario.model;
    let d = model.dim();
    let design = DesignSpec::optimal(model.family, model.cov.clone(), alpha)?;
    let mut info = design.information_matrix()?;
    info.scale(scenario.n as f64);
    let inv = cholesky(&info).map_err(|_| Error::SingularInformation)?.inverse();
    let z = normal_quantile(0.5 * (1.0 + level))?;
    let half: Vec<f64> = (0..=d).map(|j| z * scenario.sigma * inv[(j, j)].sqrt()).collect();

    let mut covered = vec![0usize; d + 1];
    let mut buf = DataMatrix::zeros(1, d);
    for v in 0..scenario.replicates {
        let stream = scenario.stream(v);
        let beta = standard_normal_vec(d + 1, &mut stream.derive(0));
        sample_covariates_into(model, scenario.n, &mut stream.derive(1), &mut buf)?;
        let chosen = select_quantile_threshold(&buf, &model.cov, design.q_threshold)?;
        let sub = subdata_with_response(&buf, &chosen.indices, &beta, scenario.sigma, &mut stream.derive(3))?;
        let fit = solve_least_squares(&sub)?;
        for j in 0..=d {
            // rounding slack so noiseless fits count as covered
            let slack = 1e-9 * (1.0 + beta[j].abs());
            if (fit.beta[j] - beta[j]).abs() <= half[j] + slack {
                covered[j] += 1;
            }
        }
    }
    let v = scenario.replicates as f64;
    let per_coefficient: Vec<f64> = covered.iter().map(|&c| c as f64 / v).collect();
    Ok(CoverageResult {
        rate: per_coefficient.iter().sum::<f64>() / (d + 1) as f64,
        per_coefficient,
        replicates: scenario.replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points_in_one_dimension() {
        let x = DataMatrix::from_rows(&[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let c = slope_covariance(&x).unwrap();
        assert!((c.matrix[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((c.standardized_det - 0.5).abs() < 1e-15);
    }

    #[test]
    fn too_few_or_degenerate_rows() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!(matches!(slope_covariance(&x), Err(Error::TooFewRows { .. })));
        let flat = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(slope_covariance(&flat), Err(Error::SingularInformation));
    }
}
