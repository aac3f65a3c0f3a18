//! Pairwise summation over a fixed reduction tree.
//!
//! Every reduction in the crate goes through these helpers, so a sum depends
//! only on the element order and never on how work was split across threads.

const BLOCK: usize = 64;

/// Pairwise sum of `f(0) + .. + f(n - 1)`.
#[inline]
pub fn pairwise_by<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    pairwise_range(0, n, &f)
}

fn pairwise_range<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
    if hi - lo <= BLOCK {
        let mut s = 0.0;
        for k in lo..hi {
            s += f(k);
        }
        s
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_range(lo, mid, f) + pairwise_range(mid, hi, f)
    }
}

#[inline]
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_by(xs.len(), |k| xs[k])
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// For a row-major array with the given `sizes`, the sum over every index
/// except dimension `d`, one entry per level of `d`.
pub fn slice_sums(values: &[f64], sizes: &[usize], d: usize) -> Vec<f64> {
    let n_d = sizes[d];
    let inner: usize = sizes[d + 1..].iter().product();
    let outer: usize = sizes[..d].iter().product();
    let stride = n_d * inner;
    (0..n_d)
        .map(|j| {
            if outer == 1 {
                pairwise_sum(&values[j * inner..(j + 1) * inner])
            } else if inner == 1 {
                pairwise_by(outer, |o| values[o * stride + j])
            } else {
                pairwise_by(outer * inner, |k| {
                    let o = k / inner;
                    values[o * stride + j * inner + (k - o * inner)]
                })
            }
        })
        .collect()
}
