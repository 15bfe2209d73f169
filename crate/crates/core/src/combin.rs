//! Small combinatorics helpers for subset enumeration.

use alloc::vec::Vec;

/// `C(n, k)` as `f64`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    libm::round(acc)
}

/// Row `n` of Pascal's triangle, exact for `n <= 60`.
pub fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = alloc::vec![1u64; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as u64 / k as u64;
    }
    row.into_iter().map(|c| c as f64).collect()
}

/// Iterates the indices of the set bits of `mask`, lowest first.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    core::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}
