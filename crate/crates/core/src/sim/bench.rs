use std::time::Instant;

use crate::dist::{sample_covariates_into, EllipticalModel, Family, RngStream};
use crate::error::{Error, Result};
use crate::linalg::{CovSpec, DataMatrix};
use crate::select::{select_iboss, select_top_k_mahalanobis, select_top_k_simplified, Method};

/// Timing study of the selection phase. D-OPT is given the dispersion as a
/// general matrix, so it runs the `O(nd²)` kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub d: usize,
    pub rho: f64,
    pub k: usize,
    pub n_list: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            d: 50,
            rho: 0.5,
            k: 1000,
            n_list: vec![100_000, 200_000, 500_000, 1_000_000],
            repeats: 7,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub n: usize,
    pub median_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least squares slope of `ln(median time)` on `ln n`, per method.
    pub slopes: Vec<(Method, f64)>,
    /// D-OPT-s strictly faster than D-OPT at every `n`.
    pub simplified_faster: bool,
}

pub const BENCH_METHODS: [Method; 3] = [Method::DOpt, Method::DOptSimplified, Method::Iboss];

fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in points {
        let dx = x.ln() - mx;
        num += dx * (y.ln() - my);
        den += dx * dx;
    }
    num / den
}

pub fn bench_complexity(config: &BenchConfig) -> Result<BenchReport> {
    let mut sizes = config.n_list.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::Config("bench needs at least three distinct sizes in n_list".into()));
    }
    if config.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    if config.k > sizes[0] {
        return Err(Error::KLargerThanN { k: config.k, n: sizes[0] });
    }
    let cs = if config.rho == 0.0 {
        CovSpec::identity(config.d)
    } else {
        CovSpec::compound_symmetry(config.d, config.rho)?
    };
    let general = cs.as_general();
    let model = EllipticalModel::new(Family::Normal, cs.clone())?;
    let variances = cs.variances();
    let mut buf = DataMatrix::zeros(1, config.d);
    let mut rows = Vec::new();
    for &n in &sizes {
        sample_covariates_into(&model, n, &mut RngStream::new(config.seed, n as u64), &mut buf)?;
        for method in BENCH_METHODS {
            let mut times = Vec::with_capacity(config.repeats);
            for _ in 0..config.repeats {
                let started = Instant::now();
                let r = match method {
                    Method::DOpt => select_top_k_mahalanobis(&buf, &general, config.k)?,
                    Method::DOptSimplified => select_top_k_simplified(&buf, general.mean(), &variances, config.k)?,
                    _ => select_iboss(&buf, config.k)?,
                };
                times.push(started.elapsed().as_secs_f64() * 1e3);
                std::hint::black_box(r);
            }
            times.sort_by(f64::total_cmp);
            rows.push(BenchRow {
                method,
                n,
                median_ms: times[times.len() / 2],
            });
        }
    }
    let slopes = BENCH_METHODS
        .iter()
        .map(|&m| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.method == m)
                .map(|r| (r.n as f64, r.median_ms.max(1e-6)))
                .collect();
            (m, log_log_slope(&pts))
        })
        .collect();
    let time_of = |m: Method, n: usize| rows.iter().find(|r| r.method == m && r.n == n).map(|r| r.median_ms);
    let simplified_faster = sizes
        .iter()
        .all(|&n| time_of(Method::DOptSimplified, n) < time_of(Method::DOpt, n));
    Ok(BenchReport {
        rows,
        slopes,
        simplified_faster,
    })
}
