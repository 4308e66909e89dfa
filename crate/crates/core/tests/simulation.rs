use optsub_core::dist::{EllipticalModel, Family};
use optsub_core::estimation::{coverage_check, simulate_mse, MseEstimator, Scenario, Subdata};
use optsub_core::linalg::CovSpec;
use optsub_core::select::Method;
use optsub_core::sim::{
    bench_complexity, emit_plot_data, mse_study, run_experiment, summarize, write_records_csv, write_summary_csv,
    BenchConfig, ExperimentConfig, FigureId, PlotSeries,
};
use optsub_core::Error;

fn small_config() -> ExperimentConfig {
    ExperimentConfig::parse("d = 4\nrho = 0.5\nk = 80\nn_list = 400, 2000\nV = 6\nseed = 3\ntiming = false\n").unwrap()
}

fn scenario(d: usize, n: usize, replicates: usize, sigma: f64) -> Scenario {
    Scenario {
        model: EllipticalModel::new(Family::Normal, CovSpec::identity(d)).unwrap(),
        n,
        replicates,
        seed: 17,
        sigma,
    }
}

#[test]
fn experiment_outputs_are_byte_identical_without_timing() {
    let cfg = small_config();
    let render = || {
        let out = run_experiment(&cfg).unwrap();
        let mut records = Vec::new();
        write_records_csv(&out.records, &mut records).unwrap();
        let mut summary = Vec::new();
        write_summary_csv(&summarize(&out.records).unwrap(), &mut summary).unwrap();
        (records, summary)
    };
    let first = render();
    assert_eq!(first, render());
    let text = String::from_utf8(first.0).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 2 * 6);
}

#[test]
fn method_draws_do_not_depend_on_the_method_list() {
    let all = run_experiment(&small_config()).unwrap();
    let mut only_unif = small_config();
    only_unif.methods = vec![Subdata::Select(Method::Uniform)];
    let sub = run_experiment(&only_unif).unwrap();
    let unif: Vec<_> = all.records.iter().filter(|r| r.method == Subdata::Select(Method::Uniform)).collect();
    assert_eq!(unif.len(), sub.records.len());
    for (a, b) in unif.iter().zip(&sub.records) {
        assert_eq!(a.standardized_det, b.standardized_det);
    }
}

#[test]
fn ordering_at_desk_scale() {
    let out = run_experiment(&small_config()).unwrap();
    let rows = summarize(&out.records).unwrap();
    let det = |m: Subdata, n: usize| rows.iter().find(|r| r.method == m && r.n == n).unwrap().mean_det;
    for n in [400, 2000] {
        assert!(det(Subdata::Full, n) < det(Subdata::Select(Method::DOpt), n));
        assert!(det(Subdata::Select(Method::DOpt), n) < det(Subdata::Select(Method::Uniform), n));
    }
    assert_eq!(out.matrix_aggregates.len(), 10);
}

#[test]
fn single_replicate_has_zero_spread() {
    let mut cfg = small_config();
    cfg.replicates = 1;
    let rows = summarize(&run_experiment(&cfg).unwrap().records).unwrap();
    assert!(rows.iter().all(|r| r.std_det == 0.0 && r.replicates == 1));
}

#[test]
fn sampled_and_conditional_mse_agree() {
    let s = scenario(3, 5000, 400, 1.0);
    let rule = Subdata::Select(Method::DOpt);
    let sampled = simulate_mse(&s, rule, 250, MseEstimator::Sampled).unwrap();
    let conditional = simulate_mse(&s, rule, 250, MseEstimator::Conditional).unwrap();
    let gap = (sampled.mse_per_dim - conditional.mse_per_dim).abs();
    assert!(gap < 4.0 * sampled.std_error_per_dim, "{} vs {}", sampled.mse_per_dim, conditional.mse_per_dim);
}

#[test]
fn noiseless_fits_are_exact() {
    let s = scenario(2, 2000, 5, 0.0);
    let r = simulate_mse(&s, Subdata::Select(Method::Iboss), 100, MseEstimator::Sampled).unwrap();
    assert!(r.mse < 1e-20);
    let c = coverage_check(&s, 0.1, 0.95).unwrap();
    assert_eq!(c.rate, 1.0);
    assert_eq!(c.per_coefficient.len(), 3);
}

#[test]
fn mse_study_tracks_approximation() {
    let cfg = ExperimentConfig::parse("d = 2\nk = 200\nn_list = 2000, 20000\nV = 50\nmse_d_list = 2, 5\n").unwrap();
    let rows = mse_study(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let ratio = r.sim_mse / r.approx_mse;
        assert!((0.9..1.4).contains(&ratio), "d={} n={} ratio {ratio}", r.d, r.n);
    }
}

#[test]
fn plot_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let rows = summarize(&run_experiment(&small_config()).unwrap().records).unwrap();
    let path = emit_plot_data(&PlotSeries::Summary(&rows), FigureId::NormalDet, dir.path()).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("n,method,det\n"));
    assert_eq!(text.lines().count(), 11);
    assert!(matches!(
        emit_plot_data(&PlotSeries::Mse(&[]), FigureId::MseApprox, dir.path()),
        Err(Error::MissingSeries(_))
    ));
}

#[test]
fn bench_reports_every_method_and_size() {
    let cfg = BenchConfig {
        d: 10,
        n_list: vec![20_000, 40_000, 80_000],
        repeats: 3,
        k: 200,
        ..BenchConfig::default()
    };
    let report = bench_complexity(&cfg).unwrap();
    assert_eq!(report.rows.len(), 9);
    assert!(report.slopes.iter().all(|(_, s)| s.is_finite()));
}
