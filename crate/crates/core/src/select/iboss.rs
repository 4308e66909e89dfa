//! Information-based optimal subdata selection: for each covariate in turn,
//! take the most extreme rows not selected so far.
//!
//! With `r = ⌊k/(2d)⌋`, column `j` contributes its `r` smallest and then its
//! `r` largest remaining rows. When `2dr < k`, the remaining slots are filled
//! round-robin over the columns, one extra minimum then one extra maximum per
//! column, until `k` rows are selected. Ties go to the lower row index.
//!
//! Fewer than `k` rows are ever taken before any single pick, so each pick is
//! among the `k + r + 1` most extreme rows of its column on its side. One
//! row-major pass collects candidates for every column into pruned buffers;
//! the column sweep then walks the sorted candidate lists. A short list per
//! column usually suffices; if the sweep runs past the end of a short list,
//! it is repeated with lists of the full `k + r + 1`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// `(value, row)` ordered by value, then row.
#[derive(Clone, Copy, Debug)]
struct Key(f64, usize);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Collects a superset of the `cap` smallest keys seen. Candidates at or
/// below the current bound are appended; when the buffer reaches twice the
/// cap it is cut back to the `cap` smallest by introselect, which tightens
/// the bound. Amortized cost per accepted candidate is constant.
struct Smallest {
    cap: usize,
    buf: Vec<Key>,
}

impl Smallest {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            buf: Vec::with_capacity(2 * cap),
        }
    }

    #[inline]
    fn push(&mut self, v: f64, i: usize, bound: &mut f64) {
        self.buf.push(Key(v, i));
        if self.buf.len() >= 2 * self.cap {
            self.buf.select_nth_unstable(self.cap - 1);
            self.buf.truncate(self.cap);
            // values equal to the bound stay admissible; ties are settled by row
            *bound = self.buf[..self.cap].iter().map(|k| k.0).fold(f64::NEG_INFINITY, f64::max);
        }
    }

    fn into_rows(mut self) -> Vec<usize> {
        self.buf.sort_unstable();
        self.buf.truncate(self.cap);
        self.buf.into_iter().map(|k| k.1).collect()
    }
}

/// Walks a sorted candidate list, skipping rows already taken.
struct Cursor {
    rows: Vec<usize>,
    pos: usize,
}

impl Cursor {
    /// Takes up to `count` untaken rows; false if the list ran out first.
    fn take(&mut self, count: usize, selected: &mut [bool], out: &mut Vec<usize>) -> bool {
        let mut taken = 0;
        while taken < count {
            let Some(&i) = self.rows.get(self.pos) else {
                return false;
            };
            self.pos += 1;
            if !selected[i] {
                selected[i] = true;
                out.push(i);
                taken += 1;
            }
        }
        true
    }
}

/// The `cap` most extreme rows of every column on both sides, as sorted
/// candidate lists.
fn candidates(x: &DataMatrix, cap: usize) -> (Vec<Cursor>, Vec<Cursor>) {
    let d = x.cols();
    // the high side stores negated values: largest first, lower row on ties
    let mut low: Vec<Smallest> = (0..d).map(|_| Smallest::new(cap)).collect();
    let mut high: Vec<Smallest> = (0..d).map(|_| Smallest::new(cap)).collect();
    let mut low_bound = vec![f64::INFINITY; d];
    let mut high_bound = vec![f64::INFINITY; d];
    for i in 0..x.rows() {
        for (j, &v) in x.row(i).iter().enumerate() {
            if v <= low_bound[j] {
                low[j].push(v, i, &mut low_bound[j]);
            }
            if -v <= high_bound[j] {
                high[j].push(-v, i, &mut high_bound[j]);
            }
        }
    }
    let cursor = |h: Smallest| Cursor {
        rows: h.into_rows(),
        pos: 0,
    };
    (low.into_iter().map(cursor).collect(), high.into_iter().map(cursor).collect())
}

/// The column sweep over candidate lists holding `cap` rows each. `None` when
/// some list was exhausted while rows beyond it remained.
fn sweep(x: &DataMatrix, k: usize, cap: usize) -> Option<Vec<usize>> {
    let (n, d) = (x.rows(), x.cols());
    let r = k / (2 * d);
    let (mut low, mut high) = candidates(x, cap);
    let complete = cap >= n;
    let mut selected = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for j in 0..d {
        let ok = low[j].take(r, &mut selected, &mut out) && high[j].take(r, &mut selected, &mut out);
        if !ok && !complete {
            return None;
        }
    }
    let mut j = 0;
    while out.len() < k {
        let mut ok = low[j].take(1, &mut selected, &mut out);
        if out.len() < k {
            ok &= high[j].take(1, &mut selected, &mut out);
        }
        if !ok && !complete {
            return None;
        }
        j = (j + 1) % d;
    }
    out.sort_unstable();
    Some(out)
}

/// Extra candidates per list beyond the `r + 1` a column side can need when
/// nothing it holds was taken earlier.
const CANDIDATE_SLACK: usize = 64;

pub(crate) fn iboss_indices(x: &DataMatrix, k: usize) -> Result<Vec<usize>> {
    let (n, d) = (x.rows(), x.cols());
    if k > n {
        return Err(Error::KLargerThanN { k, n });
    }
    if k < 2 * d {
        return Err(Error::KTooSmall { k, min: 2 * d });
    }
    let r = k / (2 * d);
    let full = (k + r + 1).min(n);
    let short = (2 * (r + 1) + CANDIDATE_SLACK).min(full);
    if let Some(out) = sweep(x, k, short) {
        return Ok(out);
    }
    Ok(sweep(x, k, full).expect("k + r + 1 candidates always suffice"))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct transcription of the sweep: rescan the remaining rows per pick.
    fn naive(x: &DataMatrix, k: usize) -> Vec<usize> {
        let (n, d) = (x.rows(), x.cols());
        let r = k / (2 * d);
        let mut selected = vec![false; n];
        let mut out = Vec::new();
        let pick = |j: usize, largest: bool, selected: &mut Vec<bool>, out: &mut Vec<usize>| {
            let best = (0..n).filter(|&i| !selected[i]).min_by(|&a, &b| {
                let (va, vb) = (x.row(a)[j], x.row(b)[j]);
                let c = if largest { vb.total_cmp(&va) } else { va.total_cmp(&vb) };
                c.then(a.cmp(&b))
            });
            if let Some(i) = best {
                selected[i] = true;
                out.push(i);
            }
        };
        for j in 0..d {
            for _ in 0..r {
                pick(j, false, &mut selected, &mut out);
            }
            for _ in 0..r {
                pick(j, true, &mut selected, &mut out);
            }
        }
        let mut j = 0;
        while out.len() < k {
            pick(j, false, &mut selected, &mut out);
            if out.len() < k {
                pick(j, true, &mut selected, &mut out);
            }
            j = (j + 1) % d;
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn remainder_round_robin() {
        // d = 1, k = 3: r = 1 gives min and max, the extra slot takes the next minimum
        let x = DataMatrix::from_rows(&[vec![4.0], vec![1.0], vec![9.0], vec![2.0], vec![7.0]]).unwrap();
        assert_eq!(iboss_indices(&x, 3).unwrap(), vec![1, 2, 3]);
        assert_eq!(iboss_indices(&x, 4).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn matches_rescanning_sweep_with_ties() {
        // small integer grid forces many ties
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 7) as f64
        };
        for &(n, d) in &[(40usize, 3usize), (25, 2), (60, 5)] {
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| next()).collect()).collect();
            let x = DataMatrix::from_rows(&rows).unwrap();
            for k in 2 * d..=n.min(3 * d + 7) {
                assert_eq!(iboss_indices(&x, k).unwrap(), naive(&x, k), "n={n} d={d} k={k}");
            }
            assert_eq!(iboss_indices(&x, n).unwrap(), naive(&x, n));
        }
    }

    #[test]
    fn falls_back_when_short_lists_run_out() {
        // identical columns: later columns find their extremes already taken
        let mut state = 99u64;
        let rows: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((state >> 33) % 500) as f64;
                vec![v, v, v]
            })
            .collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        assert!(sweep(&x, 600, 2 * 101 + CANDIDATE_SLACK).is_none());
        assert_eq!(iboss_indices(&x, 600).unwrap(), naive(&x, 600));
        assert_eq!(iboss_indices(&x, 61).unwrap(), naive(&x, 61));
    }
}
