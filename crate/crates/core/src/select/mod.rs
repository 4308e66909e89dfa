//! Subsample selection over the rows of a [`DataMatrix`].
//!
//! All selectors return a [`SubsampleResult`] whose indices are unique and
//! sorted. Top-k rules break score ties in favour of the lower row index, so
//! every selection is deterministic.

mod iboss;
mod topk;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::index;

use crate::design::optimal_threshold;
use crate::dist::{Family, RngStream};
use crate::error::{Error, Result};
use crate::linalg::{streaming_moments, CovSpec, DataMatrix, DistanceKernel, DEFAULT_BLOCK_ROWS};

pub use topk::top_k_indices;

/// Scores are kept in the result only up to this many rows.
pub const DISTANCE_RETENTION_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    DOpt,
    DOptSimplified,
    Iboss,
    Uniform,
    Leverage,
    QuantileThreshold,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::DOpt => "dopt",
            Method::DOptSimplified => "dopt-s",
            Method::Iboss => "iboss",
            Method::Uniform => "unif",
            Method::Leverage => "leverage",
            Method::QuantileThreshold => "threshold",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "dopt" | "d-opt" => Method::DOpt,
            "dopt-s" | "d-opt-s" => Method::DOptSimplified,
            "iboss" => Method::Iboss,
            "unif" | "uniform" => Method::Uniform,
            "leverage" => Method::Leverage,
            "threshold" => Method::QuantileThreshold,
            other => return Err(Error::Config(format!("unknown method {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleResult {
    /// Selected rows, ascending.
    pub indices: Vec<usize>,
    pub k_achieved: usize,
    /// Scores of the selected rows, aligned with `indices`.
    pub distances: Option<Vec<f64>>,
    pub elapsed: Duration,
    pub method: Method,
}

impl SubsampleResult {
    fn new(indices: Vec<usize>, scores: Option<&[f64]>, started: Instant, method: Method) -> Self {
        let distances = scores
            .filter(|s| s.len() <= DISTANCE_RETENTION_LIMIT)
            .map(|s| indices.iter().map(|&i| s[i]).collect());
        Self {
            k_achieved: indices.len(),
            indices,
            distances,
            elapsed: started.elapsed(),
            method,
        }
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k > n {
        return Err(Error::KLargerThanN { k, n });
    }
    if k == 0 {
        return Err(Error::KTooSmall { k, min: 1 });
    }
    Ok(())
}

fn check_dim(x: &DataMatrix, d: usize) -> Result<()> {
    if x.cols() == d {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: d,
            found: x.cols(),
        })
    }
}

/// Accepts every row whose Mahalanobis distance is at least `q_threshold`,
/// deciding row by row in a single sequential pass.
pub fn select_quantile_threshold(x: &DataMatrix, cov: &CovSpec, q_threshold: f64) -> Result<SubsampleResult> {
    let started = Instant::now();
    check_dim(x, cov.dim())?;
    if q_threshold.is_nan() || q_threshold < 0.0 {
        return Err(Error::InvalidData(format!("threshold must be non-negative, got {q_threshold}")));
    }
    let kernel = DistanceKernel::new(cov)?;
    let mut scratch = vec![0.0; x.cols()];
    let mut indices = Vec::new();
    let mut scores = Vec::new();
    for i in 0..x.rows() {
        let dist = kernel.distance(x.row(i), &mut scratch);
        if dist >= q_threshold {
            indices.push(i);
            scores.push(dist);
        }
    }
    Ok(SubsampleResult {
        k_achieved: indices.len(),
        indices,
        distances: (x.rows() <= DISTANCE_RETENTION_LIMIT).then_some(scores),
        elapsed: started.elapsed(),
        method: Method::QuantileThreshold,
    })
}

fn top_k_by_kernel(x: &DataMatrix, kernel: &DistanceKernel, k: usize, started: Instant, method: Method) -> Result<SubsampleResult> {
    check_k(k, x.rows())?;
    let scores = kernel.distances(x, DEFAULT_BLOCK_ROWS)?;
    let indices = top_k_indices(&scores, k);
    Ok(SubsampleResult::new(indices, Some(&scores), started, method))
}

/// The `k` rows of largest Mahalanobis distance.
pub fn select_top_k_mahalanobis(x: &DataMatrix, cov: &CovSpec, k: usize) -> Result<SubsampleResult> {
    let started = Instant::now();
    check_dim(x, cov.dim())?;
    top_k_by_kernel(x, &DistanceKernel::new(cov)?, k, started, Method::DOpt)
}

/// The `k` rows of largest distance under the diagonal of the dispersion.
pub fn select_top_k_simplified(x: &DataMatrix, mean: &[f64], variances: &[f64], k: usize) -> Result<SubsampleResult> {
    let started = Instant::now();
    check_dim(x, mean.len())?;
    let kernel = DistanceKernel::simplified(mean, variances)?;
    top_k_by_kernel(x, &kernel, k, started, Method::DOptSimplified)
}

pub fn select_iboss(x: &DataMatrix, k: usize) -> Result<SubsampleResult> {
    let started = Instant::now();
    let indices = iboss::iboss_indices(x, k)?;
    Ok(SubsampleResult::new(indices, None, started, Method::Iboss))
}

/// Simple random sample of `k` rows without replacement.
pub fn select_uniform(x: &DataMatrix, k: usize, rng: &mut RngStream) -> Result<SubsampleResult> {
    let started = Instant::now();
    check_k(k, x.rows())?;
    let mut indices = index::sample(rng, x.rows(), k).into_vec();
    indices.sort_unstable();
    Ok(SubsampleResult::new(indices, None, started, Method::Uniform))
}

/// Moments of `x` as a general covariance specification.
fn estimated_cov(x: &DataMatrix) -> Result<CovSpec> {
    let (mean, cov) = streaming_moments(x)?;
    CovSpec::general(mean, cov)
}

/// Hat-matrix diagonal `h_i = (d_{S_x}(x_i, x̄) + 1)/n` of the regression with
/// intercept, computed from the moments of `x` alone.
pub fn leverages(x: &DataMatrix) -> Result<Vec<f64>> {
    let cov = estimated_cov(x).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::SingularInformation,
        other => other,
    })?;
    let n = x.rows() as f64;
    let mut h = DistanceKernel::new(&cov)?.distances(x, DEFAULT_BLOCK_ROWS)?;
    for v in h.iter_mut() {
        *v = (*v + 1.0) / n;
    }
    Ok(h)
}

/// The `k` rows of highest leverage. Scores reported are the leverages.
pub fn select_top_k_leverage(x: &DataMatrix, k: usize) -> Result<SubsampleResult> {
    let started = Instant::now();
    check_k(k, x.rows())?;
    let h = leverages(x)?;
    let indices = top_k_indices(&h, k);
    Ok(SubsampleResult::new(indices, Some(&h), started, Method::Leverage))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsampleSize {
    K(usize),
    Alpha(f64),
}

/// Where the selection moments come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CovSource {
    Known(CovSpec),
    /// Mean and covariance of the full data.
    Estimated,
    /// Mean and covariance of a uniform pilot holding this fraction of rows.
    EstimatedOnPilot(f64),
}

/// Pilot fraction giving `max(10·d², 1000)` rows, capped at one half.
pub fn default_pilot_fraction(n: usize, d: usize) -> f64 {
    ((10 * d * d).max(1000) as f64 / n as f64).min(0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    pub method: Method,
    pub size: SubsampleSize,
    pub cov_source: CovSource,
    /// Covariate family assumed when the threshold rule computes `q₁₋α`.
    pub family: Family,
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.method, self.size) {
            (Method::QuantileThreshold, SubsampleSize::K(_)) => {
                return Err(Error::Config("the threshold rule takes alpha, not k".into()))
            }
            (_, SubsampleSize::Alpha(a)) if !(a > 0.0 && a < 1.0) => return Err(Error::InvalidProportion(a)),
            _ => {}
        }
        if let CovSource::EstimatedOnPilot(f) = self.cov_source {
            if !(f > 0.0 && f <= 0.5) {
                return Err(Error::InvalidProportion(f));
            }
        }
        Ok(())
    }

    fn k_for(&self, n: usize) -> usize {
        match self.size {
            SubsampleSize::K(k) => k,
            SubsampleSize::Alpha(a) => ((n as f64 * a).floor() as usize).max(1),
        }
    }
}

fn resolve_cov(x: &DataMatrix, source: &CovSource, rng: &mut RngStream) -> Result<CovSpec> {
    match source {
        CovSource::Known(c) => Ok(c.clone()),
        CovSource::Estimated => estimated_cov(x),
        CovSource::EstimatedOnPilot(f) => {
            let n = x.rows();
            let m = ((f * n as f64).ceil() as usize).clamp(2.min(n), n);
            let mut rows = index::sample(rng, n, m).into_vec();
            rows.sort_unstable();
            estimated_cov(&x.select_rows(&rows)?)
        }
    }
}

/// Runs the configured selector. The reported time covers moment estimation
/// and selection.
pub fn select(x: &DataMatrix, config: &SelectorConfig, rng: &mut RngStream) -> Result<SubsampleResult> {
    config.validate()?;
    let started = Instant::now();
    let n = x.rows();
    let mut result = match config.method {
        Method::Iboss => select_iboss(x, config.k_for(n))?,
        Method::Uniform => select_uniform(x, config.k_for(n), rng)?,
        Method::Leverage => select_top_k_leverage(x, config.k_for(n))?,
        Method::DOpt => {
            let cov = resolve_cov(x, &config.cov_source, rng)?;
            select_top_k_mahalanobis(x, &cov, config.k_for(n))?
        }
        Method::DOptSimplified => {
            let cov = resolve_cov(x, &config.cov_source, rng)?;
            select_top_k_simplified(x, cov.mean(), &cov.variances(), config.k_for(n))?
        }
        Method::QuantileThreshold => {
            let SubsampleSize::Alpha(alpha) = config.size else {
                unreachable!("validated above")
            };
            let cov = resolve_cov(x, &config.cov_source, rng)?;
            let q = optimal_threshold(config.family, cov.dim(), alpha)?;
            select_quantile_threshold(x, &cov, q)?
        }
    };
    result.elapsed = started.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> DataMatrix {
        DataMatrix::from_rows(&values.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn top_k_one_dimensional() {
        let x = column(&[-5.0, -1.0, 0.0, 2.0, 4.0]);
        let r = select_top_k_mahalanobis(&x, &CovSpec::identity(1), 2).unwrap();
        assert_eq!(r.indices, vec![0, 4]);
        assert_eq!(r.distances.unwrap(), vec![25.0, 16.0]);
    }

    #[test]
    fn threshold_extremes() {
        let x = column(&[-2.0, 0.5, 3.0]);
        let cov = CovSpec::identity(1);
        assert_eq!(select_quantile_threshold(&x, &cov, 0.0).unwrap().k_achieved, 3);
        assert_eq!(select_quantile_threshold(&x, &cov, f64::MAX).unwrap().k_achieved, 0);
    }

    #[test]
    fn iboss_small_cases() {
        let x = column(&[1.0, 5.0, 3.0]);
        assert_eq!(select_iboss(&x, 2).unwrap().indices, vec![0, 1]);
        let y = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![10.0, 0.0],
            vec![-10.0, 0.0],
            vec![0.0, 10.0],
            vec![0.0, -10.0],
        ])
        .unwrap();
        assert_eq!(select_iboss(&y, 4).unwrap().indices, vec![1, 2, 3, 4]);
        assert!(matches!(select_iboss(&y, 3), Err(Error::KTooSmall { .. })));
        assert!(matches!(select_iboss(&y, 6), Err(Error::KLargerThanN { .. })));
    }

    #[test]
    fn uniform_all_rows() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let r = select_uniform(&x, 4, &mut RngStream::new(3, 0)).unwrap();
        assert_eq!(r.indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn config_validation() {
        let bad = SelectorConfig {
            method: Method::QuantileThreshold,
            size: SubsampleSize::K(3),
            cov_source: CovSource::Estimated,
            family: Family::Normal,
        };
        assert!(bad.validate().is_err());
        let pilot = SelectorConfig {
            method: Method::DOpt,
            size: SubsampleSize::K(3),
            cov_source: CovSource::EstimatedOnPilot(0.7),
            family: Family::Normal,
        };
        assert!(matches!(pilot.validate(), Err(Error::InvalidProportion(_))));
        assert_eq!("dopt-s".parse::<Method>().unwrap(), Method::DOptSimplified);
    }
}
