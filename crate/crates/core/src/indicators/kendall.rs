use crate::error::{Error, Result};

/// Kendall τ-b between `values` and their time index.
///
/// The index has no ties, so only value ties enter the correction:
/// `τ = (C − D) / √(n₀ (n₀ − T))` with `n₀ = n(n−1)/2` and `T` the number
/// of tied value pairs. Discordant pairs are counted by merge sort, so
/// the cost is `O(n log n)`. Returns `None` when every value is tied.
pub fn kendall_tau(values: &[f64]) -> Result<Option<f64>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::contract("kendall tau needs at least 2 values"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::contract("kendall tau input contains NaN"));
    }
    let n0 = (n as u64) * (n as u64 - 1) / 2;

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut ties = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties += run * (run - 1) / 2;
    if ties == n0 {
        return Ok(None);
    }

    let mut buf = values.to_vec();
    let mut scratch = vec![0.0; n];
    let discordant = count_inversions(&mut buf, &mut scratch);
    let numerator = n0 as f64 - ties as f64 - 2.0 * discordant as f64;
    let denominator = (n0 as f64 * (n0 - ties) as f64).sqrt();
    Ok(Some(numerator / denominator))
}

/// τ over the defined entries only, keeping their chronological order.
pub fn kendall_tau_missing(values: &[Option<f64>]) -> Result<Option<f64>> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.len() < 2 {
        return Ok(None);
    }
    kendall_tau(&defined)
}

/// Pairs `i < j` with `v[i] > v[j]`; sorts `v` ascending as a side effect.
fn count_inversions(v: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = v.split_at_mut(mid);
        let (sl, sr) = scratch.split_at_mut(mid);
        count_inversions(left, sl) + count_inversions(right, sr)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        // Equal values are not inversions: take from the left first.
        if v[i] <= v[j] {
            scratch[k] = v[i];
            i += 1;
        } else {
            scratch[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&scratch[..n]);
    count
}
