use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("n must be positive")]
    NoSamples,
    #[error("c = {c} exceeds n = {n}")]
    TooManyCorrect { n: u64, c: u64 },
    #[error("k = {k} outside 1..={n}")]
    BadK { n: u64, k: u64 },
}

/// Unbiased pass@k from `n` samples of which `c` are correct:
/// `1 - prod_{i=n-c+1}^{n} (1 - k/i)`, which equals
/// `1 - C(n-c, k) / C(n, k)` without forming the binomials.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, DomainError> {
    if n == 0 {
        return Err(DomainError::NoSamples);
    }
    if c > n {
        return Err(DomainError::TooManyCorrect { n, c });
    }
    if k == 0 || k > n {
        return Err(DomainError::BadK { n, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let prod: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - prod)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((pass_at_k(5, 2, 2).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(pass_at_k(2, 2, 1).unwrap(), 1.0);
        assert_eq!(pass_at_k(4, 0, 2).unwrap(), 0.0);
        assert!((pass_at_k(10, 3, 1).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert_eq!(pass_at_k(0, 0, 1), Err(DomainError::NoSamples));
        assert_eq!(pass_at_k(3, 4, 1), Err(DomainError::TooManyCorrect { n: 3, c: 4 }));
        assert_eq!(pass_at_k(3, 1, 0), Err(DomainError::BadK { n: 3, k: 0 }));
        assert_eq!(pass_at_k(3, 1, 4), Err(DomainError::BadK { n: 3, k: 4 }));
    }
}
