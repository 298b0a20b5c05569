//! Halton low-discrepancy points.

use crate::error::{Error, Result};

/// The first 25 primes, one base per Halton coordinate.
pub const PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Radical inverse of `index` in `base`.
///
/// Indexing starts at 1: index 0 is the origin in every base.
pub fn halton(index: u64, base: u64) -> Result<f64> {
    if index == 0 {
        return Err(Error::invalid("halton index starts at 1"));
    }
    if !is_prime(base) {
        return Err(Error::invalid(format!("halton base {base} is not prime")));
    }
    // digits reversed into an integer numerator over base^k, so small cases are exact
    let mut numerator: u64 = 0;
    let mut denominator: u64 = 1;
    let mut i = index;
    while i > 0 {
        let (Some(num), Some(den)) = (
            numerator.checked_mul(base).and_then(|n| n.checked_add(i % base)),
            denominator.checked_mul(base),
        ) else {
            return Err(Error::invalid(format!(
                "halton index {index} too large for base {base}"
            )));
        };
        numerator = num;
        denominator = den;
        i /= base;
    }
    Ok(numerator as f64 / denominator as f64)
}

/// Point `index` of the `dims`-dimensional Halton sequence; coordinate `d` uses the `d`-th prime.
pub fn halton_point(index: u64, dims: usize) -> Result<Vec<f64>> {
    if dims == 0 || dims > PRIMES.len() {
        return Err(Error::invalid(format!(
            "halton dimension must be in 1..={}, got {dims}",
            PRIMES.len()
        )));
    }
    PRIMES[..dims].iter().map(|&b| halton(index, b)).collect()
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_by_hand() {
        assert_eq!(halton(1, 2).unwrap(), 0.5);
        assert_eq!(halton(2, 2).unwrap(), 0.25);
        assert_eq!(halton(3, 2).unwrap(), 0.75);
        assert_eq!(halton(1, 3).unwrap(), 1.0 / 3.0);
        // 5 = 12 in base 3 → 0.21₃ = 2/3 + 1/9
        assert_eq!(halton(5, 3).unwrap(), 7.0 / 9.0);
    }

    #[test]
    fn points() {
        assert_eq!(halton_point(1, 2).unwrap(), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton_point(2, 1).unwrap(), vec![0.25]);
        assert_eq!(halton_point(1, 1).unwrap(), vec![0.5]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(halton(0, 2).is_err());
        assert!(halton(1, 4).is_err());
        assert!(halton(1, 1).is_err());
        assert!(halton_point(1, 0).is_err());
        assert!(halton_point(1, 26).is_err());
    }
}
