//! CSV ingestion for covariate tables and covariance specifications.
//!
//! Data files: UTF-8, comma separated, first row is a header naming the
//! covariates `x1..xd` and optionally a response `y`. Row and column numbers
//! in errors are 1-based and count the header as row 1.
//!
//! Covariance files: header `x1..xd`, first data row is the mean vector, the
//! next `d` rows are the dispersion matrix.

use std::io::{Read, Write};
use std::path::Path;

use super::cov::CovSpec;
use super::matrix::{DataMatrix, SquareMatrix};
use crate::error::{Error, Result};

fn covariate_index(name: &str) -> Option<usize> {
    name.strip_prefix('x')?.parse::<usize>().ok().filter(|&j| j >= 1)
}

struct Layout {
    // for each csv column: Some(j) covariate j (0-based), None for y
    slots: Vec<Option<usize>>,
    d: usize,
    has_response: bool,
}

fn parse_header(header: &csv::StringRecord) -> Result<Layout> {
    let mut slots = Vec::with_capacity(header.len());
    let mut seen = Vec::new();
    let mut has_response = false;
    for (col, name) in header.iter().enumerate() {
        let name = name.trim();
        if name == "y" {
            if has_response {
                return Err(csv_err(1, col + 1, "duplicate response column"));
            }
            has_response = true;
            slots.push(None);
        } else if let Some(j) = covariate_index(name) {
            if seen.contains(&j) {
                return Err(csv_err(1, col + 1, &format!("duplicate column {name}")));
            }
            seen.push(j);
            slots.push(Some(j - 1));
        } else {
            return Err(csv_err(1, col + 1, &format!("unexpected column name {name:?}")));
        }
    }
    let d = seen.len();
    if d == 0 {
        return Err(csv_err(1, 1, "no covariate columns (expected x1..xd)"));
    }
    seen.sort_unstable();
    if seen.iter().enumerate().any(|(i, &j)| j != i + 1) {
        return Err(csv_err(1, 1, "covariate columns must be exactly x1..xd"));
    }
    Ok(Layout {
        slots,
        d,
        has_response,
    })
}

fn csv_err(row: usize, column: usize, message: &str) -> Error {
    Error::Csv {
        row,
        column,
        message: message.to_string(),
    }
}

fn parse_cell(raw: &str, row: usize, column: usize) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| csv_err(row, column, &format!("cannot parse {raw:?} as a number")))?;
    if !v.is_finite() {
        return Err(csv_err(row, column, "value is not finite"));
    }
    Ok(v)
}

pub fn read_data_csv<R: Read>(reader: R) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| csv_err(1, 1, &e.to_string()))?
        .clone();
    let layout = parse_header(&header)?;
    let mut values = Vec::new();
    let mut response = Vec::new();
    let mut row_buf = vec![0.0; layout.d];
    let mut rows = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(line, 1, &e.to_string()))?;
        if rec.len() != layout.slots.len() {
            return Err(csv_err(
                line,
                rec.len().min(layout.slots.len()) + 1,
                &format!("expected {} fields, found {}", layout.slots.len(), rec.len()),
            ));
        }
        for (col, (raw, slot)) in rec.iter().zip(&layout.slots).enumerate() {
            let v = parse_cell(raw, line, col + 1)?;
            match slot {
                Some(j) => row_buf[*j] = v,
                None => response.push(v),
            }
        }
        values.extend_from_slice(&row_buf);
        rows += 1;
    }
    let x = DataMatrix::new(rows, layout.d, values)?;
    if layout.has_response {
        x.with_response(response)
    } else {
        Ok(x)
    }
}

pub fn read_data_csv_path(path: impl AsRef<Path>) -> Result<DataMatrix> {
    read_data_csv(std::fs::File::open(path)?)
}

pub fn write_data_csv<W: Write>(x: &DataMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=x.cols()).map(|j| format!("x{j}")).collect();
    if x.response().is_some() {
        header.push("y".into());
    }
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    for i in 0..x.rows() {
        let mut rec: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(y) = x.response() {
            rec.push(format!("{:?}", y[i]));
        }
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cov_csv<R: Read>(reader: R) -> Result<CovSpec> {
    let x = read_data_csv(reader)?;
    if x.response().is_some() {
        return Err(csv_err(1, x.cols() + 1, "covariance file must not have a y column"));
    }
    let d = x.cols();
    if x.rows() != d + 1 {
        return Err(Error::InvalidCovariance(format!(
            "expected 1 mean row and {d} dispersion rows, found {} rows",
            x.rows()
        )));
    }
    let mean = x.row(0).to_vec();
    let disp = SquareMatrix::from_row_major(d, x.values()[d..].to_vec())?;
    CovSpec::infer(mean, disp)
}

pub fn read_cov_csv_path(path: impl AsRef<Path>) -> Result<CovSpec> {
    read_cov_csv(std::fs::File::open(path)?)
}

pub fn write_cov_csv<W: Write>(cov: &CovSpec, writer: W) -> Result<()> {
    let d = cov.dim();
    let mut values = cov.mean().to_vec();
    values.extend_from_slice(cov.dispersion().as_slice());
    write_data_csv(&DataMatrix::new(d + 1, d, values)?, writer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_columns_in_any_order() {
        let text = "y,x2,x1\n1.5,2,3\n-1,0.5,0.25\n";
        let x = read_data_csv(text.as_bytes()).unwrap();
        assert_eq!(x.rows(), 2);
        assert_eq!(x.row(0), &[3.0, 2.0]);
        assert_eq!(x.response().unwrap(), &[1.5, -1.0]);
    }

    #[test]
    fn parse_failure_reports_row_and_column() {
        let text = "x1,x2\n1,2\n3,abc\n";
        match read_data_csv(text.as_bytes()) {
            Err(Error::Csv { row, column, .. }) => assert_eq!((row, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let bad_header = "x1,z\n1,2\n";
        assert!(matches!(
            read_data_csv(bad_header.as_bytes()),
            Err(Error::Csv { row: 1, column: 2, .. })
        ));
        let gap = "x1,x3\n1,2\n";
        assert!(read_data_csv(gap.as_bytes()).is_err());
    }

    #[test]
    fn data_round_trip() {
        let x = DataMatrix::from_rows(&[vec![0.1, -2.5], vec![1e-300, 3.0]])
            .unwrap()
            .with_response(vec![1.0, 2.0])
            .unwrap();
        let mut buf = Vec::new();
        write_data_csv(&x, &mut buf).unwrap();
        assert_eq!(read_data_csv(buf.as_slice()).unwrap(), x);
    }

    #[test]
    fn covariance_file() {
        let text = "x1,x2,x3\n0,0,0\n1,0.5,0.5\n0.5,1,0.5\n0.5,0.5,1\n";
        let cov = read_cov_csv(text.as_bytes()).unwrap();
        assert_eq!(
            cov.structure(),
            crate::linalg::CovStructure::CompoundSymmetry(0.5)
        );
        let mut buf = Vec::new();
        write_cov_csv(&cov, &mut buf).unwrap();
        assert_eq!(read_cov_csv(buf.as_slice()).unwrap(), cov);
    }
}
