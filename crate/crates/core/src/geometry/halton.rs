use crate::error::{Error, Result};

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    acc
}

/// Halton point `index` in `[0,1)^dim`; coordinate `k` is the radical inverse
/// of `index` in the `k`-th prime base.
pub fn halton(index: u64, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || dim > PRIMES.len() {
        return Err(Error::Parameter(format!("Halton dimension must be in 1..=6, got {dim}")));
    }
    Ok(PRIMES[..dim].iter().map(|&p| radical_inverse(index, p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points() {
        let p = halton(1, 2).unwrap();
        assert_eq!(p[0], 0.5);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
        let p = halton(2, 2).unwrap();
        assert_eq!(p[0], 0.25);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(halton(4, 1).unwrap(), vec![0.125]);
    }

    #[test]
    fn rejects_high_dimension() {
        assert!(halton(1, 7).is_err());
    }
}
