use std::collections::BTreeMap;
use std::io::Write;

use super::run::{ExperimentRecord, MatrixAggregate};
use crate::error::{Error, Result};
use crate::estimation::Subdata;

/// Per `(method, n)`: mean and sample standard deviation of the per-replicate
/// standardized determinant, and selection times.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Subdata,
    pub n: usize,
    pub replicates: usize,
    pub mean_det: f64,
    /// Sample standard deviation (`V − 1` denominator); zero when `V = 1`.
    pub std_det: f64,
    pub mean_ms: f64,
    pub median_ms: f64,
}

pub const SUMMARY_HEADER: &str = "method,n,V,mean_det,std_det,mean_ms,median_ms";

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

pub fn summarize(records: &[ExperimentRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: BTreeMap<(Subdata, usize), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.n)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((method, n), mut group)| {
            group.sort_by_key(|r| r.replicate_id);
            let v = group.len() as f64;
            let mean_det = group.iter().map(|r| r.standardized_det).sum::<f64>() / v;
            let std_det = if group.len() > 1 {
                (group.iter().map(|r| (r.standardized_det - mean_det).powi(2)).sum::<f64>() / (v - 1.0)).sqrt()
            } else {
                0.0
            };
            let mut times: Vec<f64> = group.iter().map(|r| r.elapsed_ms_select).collect();
            let mean_ms = times.iter().sum::<f64>() / v;
            SummaryRow {
                method,
                n,
                replicates: group.len(),
                mean_det,
                std_det,
                mean_ms,
                median_ms: median(&mut times),
            }
        })
        .collect())
}

pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], mut w: W) -> Result<()> {
    writeln!(w, "method,n,replicate_id,standardized_det,elapsed_ms_select,elapsed_ms_total")?;
    for r in records {
        write_record_line(r, &mut w)?;
    }
    Ok(())
}

pub fn write_record_line<W: Write>(r: &ExperimentRecord, mut w: W) -> Result<()> {
    writeln!(
        w,
        "{},{},{},{:e},{:.3},{:.3}",
        r.method.name(),
        r.n,
        r.replicate_id,
        r.standardized_det,
        r.elapsed_ms_select,
        r.elapsed_ms_total
    )?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut w: W) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:e},{:e},{:.3},{:.3}",
            r.method.name(),
            r.n,
            r.replicates,
            r.mean_det,
            r.std_det,
            r.mean_ms,
            r.median_ms
        )?;
    }
    Ok(())
}

pub fn write_matrix_summary_csv<W: Write>(rows: &[MatrixAggregate], mut w: W) -> Result<()> {
    writeln!(w, "method,n,V,det_of_mean")?;
    for r in rows {
        writeln!(w, "{},{},{},{:e}", r.method.name(), r.n, r.replicates, r.det_of_mean)?;
    }
    Ok(())
}
