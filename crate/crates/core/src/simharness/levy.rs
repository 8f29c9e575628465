//! Exhaustive enumeration oracle for the maximal inequality behind the
//! constant boundary: for a symmetric Rademacher walk,
//! `Pr{max_n S_n >= b} <= 2 Pr{S_N >= b}` holds exactly.

use crate::error::{Error, Result};

/// Enumerates all `2^n` equiprobable +/-1 paths and returns
/// `(Pr{max_{1..n} S_m >= b}, 2 * Pr{S_n >= b})`, both exact dyadic
/// fractions. `n` is capped at 20 to bound the enumeration.
pub fn levy_oracle_enumerate(n: u32, threshold: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Domain("walk length must be >= 1".into()));
    }
    if n > 20 {
        return Err(Error::Resource(format!(
            "exhaustive enumeration is capped at n = 20, got {n}"
        )));
    }
    let paths: u64 = 1 << n;
    let mut count_max = 0u64;
    let mut count_terminal = 0u64;
    for mask in 0..paths {
        let mut s: i64 = 0;
        let mut max_s = i64::MIN;
        for bit in 0..n {
            s += if (mask >> bit) & 1 == 1 { 1 } else { -1 };
            if s > max_s {
                max_s = s;
            }
        }
        if max_s as f64 >= threshold {
            count_max += 1;
        }
        if s as f64 >= threshold {
            count_terminal += 1;
        }
    }
    Ok((
        count_max as f64 / paths as f64,
        2.0 * count_terminal as f64 / paths as f64,
    ))
}
