use std::time::Instant;

use super::config::ExperimentConfig;
use crate::dist::{sample_covariates_into, RngStream};
use crate::error::Result;
use crate::estimation::{choose_rows, slope_covariance, Subdata};
use crate::linalg::{cholesky, DataMatrix, SquareMatrix};
use crate::select::Method;

/// One replicate of one method at one data size.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub method: Subdata,
    pub n: usize,
    pub replicate_id: usize,
    /// `det(C_slope)^{1/d}` of this replicate.
    pub standardized_det: f64,
    pub elapsed_ms_select: f64,
    /// Selection plus slope covariance.
    pub elapsed_ms_total: f64,
}

/// Matrix-average statistic: `det((1/V)·Σ_v C^{(v)})^{1/d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixAggregate {
    pub method: Subdata,
    pub n: usize,
    pub replicates: usize,
    pub det_of_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Sorted by `(method, n, replicate_id)`.
    pub records: Vec<ExperimentRecord>,
    pub matrix_aggregates: Vec<MatrixAggregate>,
}

/// Fixed substream tag per method, so adding or removing methods from a
/// configuration does not change the draws of the others.
fn method_tag(m: Subdata) -> u64 {
    match m {
        Subdata::Full => 10,
        Subdata::Select(Method::DOpt) => 11,
        Subdata::Select(Method::DOptSimplified) => 12,
        Subdata::Select(Method::Iboss) => 13,
        Subdata::Select(Method::Uniform) => 14,
        Subdata::Select(Method::Leverage) => 15,
        Subdata::Select(Method::QuantileThreshold) => 16,
    }
}

/// Random stream of replicate `v` at data size `n`; its stream id is `v`.
pub fn replicate_stream(seed: u64, n: usize, v: usize) -> RngStream {
    RngStream::new(seed, v as u64).derive(n as u64)
}

/// Runs every `(n, replicate, method)` cell, calling `sink` with each record
/// as soon as it is complete. Data are generated once per `(n, replicate)`
/// into a reused buffer and shared by all methods.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    mut sink: impl FnMut(&ExperimentRecord) -> Result<()>,
) -> Result<Vec<MatrixAggregate>> {
    config.validate()?;
    let model = config.model()?;
    let cov = model.cov.clone();
    let d = config.d;
    let mut buf = DataMatrix::zeros(1, d);
    let mut aggregates = Vec::new();
    for &n in &config.n_list {
        let mut sums: Vec<SquareMatrix> = config.methods.iter().map(|_| SquareMatrix::zeros(d)).collect();
        for v in 0..config.replicates {
            let stream = replicate_stream(config.seed, n, v);
            sample_covariates_into(&model, n, &mut stream.derive(1), &mut buf)?;
            for (slot, &method) in config.methods.iter().enumerate() {
                let started = Instant::now();
                let mut rng = stream.derive(method_tag(method));
                let (rows, select_time) = choose_rows(&buf, method, model.family, &cov, config.k, &mut rng)?;
                let c = if rows.len() == n {
                    slope_covariance(&buf)?
                } else {
                    slope_covariance(&buf.select_rows(&rows)?)?
                };
                let total = started.elapsed();
                sums[slot].add_assign(&c.matrix);
                let ms = |t: std::time::Duration| if config.timing { t.as_secs_f64() * 1e3 } else { 0.0 };
                sink(&ExperimentRecord {
                    method,
                    n,
                    replicate_id: v,
                    standardized_det: c.standardized_det,
                    elapsed_ms_select: ms(select_time),
                    elapsed_ms_total: ms(total),
                })?;
            }
        }
        for (slot, &method) in config.methods.iter().enumerate() {
            let mut mean = sums[slot].clone();
            mean.scale(1.0 / config.replicates as f64);
            let log_det = cholesky(&mean)?.log_det();
            aggregates.push(MatrixAggregate {
                method,
                n,
                replicates: config.replicates,
                det_of_mean: (log_det / d as f64).exp(),
            });
        }
    }
    aggregates.sort_by(|a, b| (a.method, a.n).cmp(&(b.method, b.n)));
    Ok(aggregates)
}

/// Collects all records of [`run_experiment_with`], sorted by
/// `(method, n, replicate_id)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut records = Vec::new();
    let matrix_aggregates = run_experiment_with(config, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    records.sort_by(|a, b| (a.method, a.n, a.replicate_id).cmp(&(b.method, b.n, b.replicate_id)));
    Ok(ExperimentOutput {
        records,
        matrix_aggregates,
    })
}
