//! Plot-data tables and a declarative plotting script.
//!
//! Each figure is one CSV whose columns are the figure's axes plus the
//! grouping variable. Numbers are printed in a fixed format, so identical
//! inputs give identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::summary::SummaryRow;
use crate::design::{second_moment_mc_grid, second_moment_normal, uniform_efficiency, T_MOMENT_DRAWS, T_MOMENT_SEED};
use crate::dist::{Family, RngStream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// `m₂` against `α` for several `d`.
    SecondMoment,
    /// Approximate and simulated `MSE/d` against `n`.
    MseApprox,
    /// Standardized determinant against `n`, normal covariates.
    NormalDet,
    /// Standardized determinant against `n`, t covariates.
    TDet,
    /// Standardized determinant against `n` including the simplified rule.
    SimplifiedDet,
    /// Efficiency of uniform subsampling against `α` for several `d`.
    UniformEfficiency,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [
        FigureId::SecondMoment,
        FigureId::MseApprox,
        FigureId::NormalDet,
        FigureId::TDet,
        FigureId::SimplifiedDet,
        FigureId::UniformEfficiency,
    ];

    pub fn file_stem(&self) -> &'static str {
        match self {
            FigureId::SecondMoment => "fig1_second_moment",
            FigureId::MseApprox => "fig3_mse",
            FigureId::NormalDet => "fig4_normal_det",
            FigureId::TDet => "fig5_t_det",
            FigureId::SimplifiedDet => "fig6_simplified_det",
            FigureId::UniformEfficiency => "fig7_uniform_efficiency",
        }
    }

    fn columns(&self) -> &'static str {
        match self {
            FigureId::SecondMoment => "alpha,m2,d",
            FigureId::UniformEfficiency => "alpha,eff_unif,d",
            FigureId::MseApprox => "n,approx_mse,sim_mse,d",
            FigureId::NormalDet | FigureId::TDet | FigureId::SimplifiedDet => "n,method,det",
        }
    }

    fn script(&self) -> String {
        let (x, y, group, log_x, log_y, title) = match self {
            FigureId::SecondMoment => ("alpha", "m2", "d", false, false, "second moment of the optimal design"),
            FigureId::UniformEfficiency => ("alpha", "eff_unif", "d", false, false, "efficiency of uniform subsampling"),
            FigureId::MseApprox => ("n", "approx_mse sim_mse", "d", true, true, "standardized MSE, approximation and simulation"),
            FigureId::NormalDet => ("n", "det", "method", true, true, "standardized determinant, normal covariates"),
            FigureId::TDet => ("n", "det", "method", true, true, "standardized determinant, t covariates"),
            FigureId::SimplifiedDet => ("n", "det", "method", true, true, "standardized determinant with the simplified rule"),
        };
        let scale = |log: bool| if log { "log" } else { "linear" };
        format!(
            "figure {stem}\n  data {stem}.csv\n  x {x} {}\n  y {y} {}\n  group {group}\n  title {title}\nend\n",
            scale(log_x),
            scale(log_y),
            stem = self.file_stem()
        )
    }
}

/// One row of the design-theory table.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub d: usize,
    pub alpha: f64,
    pub q: f64,
    pub m2: f64,
    pub eff_unif: f64,
    /// Asymptotic per-coordinate variance `σ²/m₂` of `√n·(β̂_j − β_j)`,
    /// with `σ = 1` and identity dispersion.
    pub approx_var: f64,
}

pub const THEORY_HEADER: &str = "d,alpha,q,m2,eff_unif,approx_var";

/// The theory table over a `d × α` grid.
pub fn theory_rows(family: Family, d_list: &[usize], alpha_list: &[f64]) -> Result<Vec<TheoryRow>> {
    let mut rows = Vec::with_capacity(d_list.len() * alpha_list.len());
    for &d in d_list {
        let m2s: Vec<f64> = match family {
            Family::Normal => alpha_list
                .iter()
                .map(|&a| second_moment_normal(d, a))
                .collect::<Result<_>>()?,
            Family::StudentT { .. } => {
                let mut rng = RngStream::new(T_MOMENT_SEED, d as u64);
                second_moment_mc_grid(family, d, alpha_list, T_MOMENT_DRAWS, &mut rng)?
                    .into_iter()
                    .map(|e| e.value)
                    .collect()
            }
        };
        for (&alpha, &m2) in alpha_list.iter().zip(&m2s) {
            let q = crate::design::optimal_threshold(family, d, alpha)?;
            let eff_unif = match family {
                Family::Normal => uniform_efficiency(family, d, alpha)?,
                Family::StudentT { .. } => alpha * family.marginal_variance() / m2,
            };
            rows.push(TheoryRow {
                d,
                alpha,
                q,
                m2,
                eff_unif,
                approx_var: 1.0 / m2,
            });
        }
    }
    Ok(rows)
}

pub fn write_theory_csv(rows: &[TheoryRow]) -> String {
    let mut s = String::from(THEORY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{:.10e},{:.10e},{:.10e},{:.10e}", r.d, r.alpha, r.q, r.m2, r.eff_unif, r.approx_var);
    }
    s
}

/// Approximate and simulated standardized MSE at one `(d, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub d: usize,
    pub n: usize,
    pub approx_mse: f64,
    pub sim_mse: f64,
}

pub enum PlotSeries<'a> {
    Theory(&'a [TheoryRow]),
    Mse(&'a [MseRow]),
    Summary(&'a [SummaryRow]),
}

/// The CSV text of `figure` built from `series`.
pub fn plot_data_csv(series: &PlotSeries<'_>, figure: FigureId) -> Result<String> {
    let missing = || Error::MissingSeries(figure.file_stem().to_string());
    let mut s = String::from(figure.columns());
    s.push('\n');
    match (figure, series) {
        (FigureId::SecondMoment, PlotSeries::Theory(rows)) if !rows.is_empty() => {
            for r in rows.iter() {
                let _ = writeln!(s, "{},{:.10e},{}", r.alpha, r.m2, r.d);
            }
        }
        (FigureId::UniformEfficiency, PlotSeries::Theory(rows)) if !rows.is_empty() => {
            for r in rows.iter() {
                let _ = writeln!(s, "{},{:.10e},{}", r.alpha, r.eff_unif, r.d);
            }
        }
        (FigureId::MseApprox, PlotSeries::Mse(rows)) if !rows.is_empty() => {
            for r in rows.iter() {
                let _ = writeln!(s, "{},{:.10e},{:.10e},{}", r.n, r.approx_mse, r.sim_mse, r.d);
            }
        }
        (FigureId::NormalDet | FigureId::TDet | FigureId::SimplifiedDet, PlotSeries::Summary(rows)) if !rows.is_empty() => {
            for r in rows.iter() {
                let _ = writeln!(s, "{},{},{:.10e}", r.n, r.method.name(), r.mean_det);
            }
        }
        _ => return Err(missing()),
    }
    Ok(s)
}

/// Writes `<dir>/<figure stem>.csv` and returns its path.
pub fn emit_plot_data(series: &PlotSeries<'_>, figure: FigureId, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let text = plot_data_csv(series, figure)?;
    let path = dir.as_ref().join(format!("{}.csv", figure.file_stem()));
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Plotting instructions for the given figures, one `figure … end` block each.
pub fn plot_script(figures: &[FigureId]) -> String {
    let mut s = String::from("# plot-data description: one block per figure\n");
    for f in figures {
        s.push_str(&f.script());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_moment_figure_row() {
        let rows = theory_rows(Family::Normal, &[2], &[0.1]).unwrap();
        let csv = plot_data_csv(&PlotSeries::Theory(&rows), FigureId::SecondMoment).unwrap();
        assert!(csv.starts_with("alpha,m2,d\n0.1,3.30258"), "{csv}");
    }

    #[test]
    fn empty_or_mismatched_series() {
        assert!(matches!(
            plot_data_csv(&PlotSeries::Summary(&[]), FigureId::NormalDet),
            Err(Error::MissingSeries(_))
        ));
        let rows = theory_rows(Family::Normal, &[2], &[0.1]).unwrap();
        assert!(plot_data_csv(&PlotSeries::Theory(&rows), FigureId::TDet).is_err());
    }
}
