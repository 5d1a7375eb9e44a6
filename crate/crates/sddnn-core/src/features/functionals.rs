//! Window functionals: six summary statistics per LLD column.
//!
//! Per column, in frozen order: 1st percentile, 99th percentile, their range,
//! mean, median, and population standard deviation. Percentiles use linear
//! interpolation at rank `(p/100) * (n-1)` over the sorted column; the median
//! is the 50th percentile under the same rule. This ordering is part of the
//! frame file format: column `j`, functional `f` lands at index `6j + f`.

use crate::error::{Error, Result};

/// Number of functionals per LLD column.
pub const NUM_FUNCTIONALS: usize = 6;

/// Functional names in output order.
pub const FUNCTIONAL_NAMES: [&str; NUM_FUNCTIONALS] =
    ["p1", "p99", "range", "mean", "median", "std"];

/// Linear-interpolation percentile of an ascending-sorted slice.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = (p / 100.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Computes the six functionals of one data series (any order).
pub fn functionals_of_series(series: &[f64]) -> Result<[f64; NUM_FUNCTIONALS]> {
    if series.is_empty() {
        return Err(Error::input("cannot take functionals of an empty series"));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);

    let p1 = percentile_sorted(&sorted, 1.0);
    let p99 = percentile_sorted(&sorted, 99.0);
    let median = percentile_sorted(&sorted, 50.0);

    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;

    Ok([p1, p99, p99 - p1, mean, median, var.sqrt()])
}

/// Computes functionals per column of a window (rows = time, columns = LLDs),
/// concatenated as `6 * column + functional`.
pub fn extract_functionals(window: &[Vec<f64>]) -> Result<Vec<f64>> {
    if window.is_empty() {
        return Err(Error::input("cannot extract functionals of an empty window"));
    }
    let num_cols = window[0].len();
    let mut out = Vec::with_capacity(num_cols * NUM_FUNCTIONALS);
    let mut column = Vec::with_capacity(window.len());
    for col in 0..num_cols {
        column.clear();
        column.extend(window.iter().map(|row| row[col]));
        out.extend_from_slice(&functionals_of_series(&column)?);
    }
    Ok(out)
}
