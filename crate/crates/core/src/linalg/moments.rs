//! Single-pass mean and covariance with a mergeable accumulator.
//!
//! The covariance uses population normalization `S = (1/n) Σ (x_i - x̄)(x_i - x̄)ᵀ`.
//! Expect a factor `n/(n-1)` against textbook sample covariances.

use rayon::prelude::*;

use super::distance::DEFAULT_BLOCK_ROWS;
use super::matrix::{DataMatrix, SquareMatrix};
use crate::error::{Error, Result};

/// Welford-style accumulator for a `d`-dimensional mean and co-moment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    count: usize,
    mean: Vec<f64>,
    // upper triangle is authoritative; lower is filled on read
    comoment: SquareMatrix,
    delta: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(d: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; d],
            comoment: SquareMatrix::zeros(d),
            delta: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim());
        let d = self.dim();
        self.count += 1;
        let inv_n = 1.0 / self.count as f64;
        for j in 0..d {
            self.delta[j] = row[j] - self.mean[j];
            self.mean[j] += self.delta[j] * inv_n;
        }
        let c = self.comoment.as_mut_slice();
        for i in 0..d {
            let post = row[i] - self.mean[i];
            let base = i * d;
            for j in i..d {
                c[base + j] += self.delta[j] * post;
            }
        }
    }

    /// Combines two accumulators over disjoint data.
    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            self.clone_from(other);
            return;
        }
        let d = self.dim();
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for j in 0..d {
            self.delta[j] = other.mean[j] - self.mean[j];
        }
        let w = na * nb / n;
        let c = self.comoment.as_mut_slice();
        let oc = other.comoment.as_slice();
        for i in 0..d {
            for j in i..d {
                c[i * d + j] += oc[i * d + j] + self.delta[i] * self.delta[j] * w;
            }
        }
        for j in 0..d {
            self.mean[j] += self.delta[j] * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Population covariance.
    pub fn covariance(&self) -> SquareMatrix {
        let mut out = self.comoment.clone();
        out.symmetrize_from_upper();
        if self.count > 0 {
            out.scale(1.0 / self.count as f64);
        }
        out
    }

    pub fn variances(&self) -> Vec<f64> {
        let d = self.dim();
        let n = self.count.max(1) as f64;
        (0..d).map(|i| self.comoment[(i, i)] / n).collect()
    }
}

/// Mean and population covariance of the rows of `x`.
pub fn streaming_moments(x: &DataMatrix) -> Result<(Vec<f64>, SquareMatrix)> {
    streaming_moments_chunked(x, DEFAULT_BLOCK_ROWS)
}

/// As [`streaming_moments`], accumulating fixed-size row chunks independently
/// and merging them left to right.
pub fn streaming_moments_chunked(x: &DataMatrix, chunk_rows: usize) -> Result<(Vec<f64>, SquareMatrix)> {
    let acc = accumulate(x, chunk_rows)?;
    Ok((acc.mean().to_vec(), acc.covariance()))
}

fn accumulate(x: &DataMatrix, chunk_rows: usize) -> Result<MomentAccumulator> {
    if x.rows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: x.rows(),
        });
    }
    let d = x.cols();
    let chunk_rows = chunk_rows.max(1);
    let parts: Vec<MomentAccumulator> = x
        .values()
        .par_chunks(chunk_rows * d)
        .map(|chunk| {
            let mut acc = MomentAccumulator::new(d);
            for row in chunk.chunks_exact(d) {
                acc.push(row);
            }
            acc
        })
        .collect();
    let mut total = MomentAccumulator::new(d);
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points() {
        let x = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        let (m, s) = streaming_moments(&x).unwrap();
        assert_eq!(m, vec![1.0, 1.0]);
        assert_eq!(s.as_slice(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_row_is_rejected() {
        let x = DataMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(streaming_moments(&x), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let mut a = MomentAccumulator::new(2);
        a.push(&[1.0, 2.0]);
        a.push(&[3.0, -1.0]);
        let before = a.clone();
        a.merge(&MomentAccumulator::new(2));
        assert_eq!(a, before);
        let mut e = MomentAccumulator::new(2);
        e.merge(&before);
        assert_eq!(e.mean(), before.mean());
        assert_eq!(e.covariance(), before.covariance());
    }
}
