//! Simulation study: configuration, replicate runner, summaries, plot data
//! and the selection-time benchmark.

pub mod bench;
pub mod config;
pub mod plot;
pub mod run;
pub mod summary;

pub use bench::{bench_complexity, BenchConfig, BenchReport, BenchRow, BENCH_METHODS};
pub use config::{parse_count, ExperimentConfig};
pub use plot::{
    emit_plot_data, plot_data_csv, plot_script, theory_rows, write_theory_csv, FigureId, MseRow, PlotSeries,
    TheoryRow, THEORY_HEADER,
};
pub use run::{replicate_stream, run_experiment, run_experiment_with, ExperimentOutput, ExperimentRecord, MatrixAggregate};
pub use summary::{
    summarize, write_matrix_summary_csv, write_record_line, write_records_csv, write_summary_csv, SummaryRow,
    SUMMARY_HEADER,
};

use crate::design::slope_cov_approx;
use crate::dist::EllipticalModel;
use crate::error::Result;
use crate::estimation::{simulate_mse, MseEstimator, Scenario, Subdata};
use crate::linalg::CovSpec;
use crate::select::Method;

/// Approximate against simulated per-coordinate MSE of D-OPT subsampling with
/// identity dispersion, for every `d` in `mse_d_list` and `n` in `n_list`.
pub fn mse_study(config: &ExperimentConfig) -> Result<Vec<MseRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &d in &config.mse_d_list {
        let cov = CovSpec::identity(d);
        let model = EllipticalModel::new(config.family, cov.clone())?;
        for &n in &config.n_list {
            let approx = slope_cov_approx(config.family, n, config.k, &cov, config.sigma_eps)?;
            let scenario = Scenario {
                model: model.clone(),
                n,
                replicates: config.replicates,
                seed: config.seed,
                sigma: config.sigma_eps,
            };
            let sim = simulate_mse(&scenario, Subdata::Select(Method::DOpt), config.k, MseEstimator::Conditional)?;
            rows.push(MseRow {
                d,
                n,
                approx_mse: approx.per_coord_var,
                sim_mse: sim.mse_per_dim,
            });
        }
    }
    Ok(rows)
}
