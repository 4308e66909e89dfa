use std::cmp::Ordering;

/// Descending score, ties to the lower index.
#[inline]
fn rank(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Indices of the `k` largest scores, sorted ascending by index.
///
/// Uses introselect on an index vector, expected `O(n)`, worst case
/// `O(n log n)`. Every returned score is at least every rejected score, and
/// among equal scores lower indices win.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let n = scores.len();
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank(scores, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}
