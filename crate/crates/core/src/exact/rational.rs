//! Exact rational arithmetic for the finite closed forms, used to pin small
//! cases bit-exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poisson_binomial_pmf;
use crate::error::{RecordError, Result};
use crate::record::Dimension;

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `m^{-d}` as an exact rational.
pub fn indicator_probability(dim: Dimension, m: u64) -> Rational {
    let den = num_traits::pow(BigInt::from(m), dim.get() as usize);
    Rational::new(BigInt::one(), den)
}

/// Exact `P(R(n) = k)` through the same convolution as the float path.
pub fn record_time_pmf(dim: Dimension, n: u64, k: u64) -> Result<Rational> {
    super::check_record_time_args(n, k)?;
    if n == 1 {
        return Ok(if k == 1 {
            Rational::one()
        } else {
            Rational::zero()
        });
    }
    let probs: Vec<Rational> = (2..k).map(|m| indicator_probability(dim, m)).collect();
    let dist = poisson_binomial_pmf(&probs, (n - 2) as usize);
    Ok(indicator_probability(dim, k) * dist[(n - 2) as usize].clone())
}

/// `p_k = 1/(k(k+1))` for `d = 2`.
pub fn terminal_pmf_d2(k: u64) -> Rational {
    let k = k as i64;
    ratio(1, k * (k + 1))
}

/// `∏_{m>k}(1 - m^{-2}) = k/(k+1)`.
pub fn tail_product_d2(k: u64) -> Rational {
    let k = k as i64;
    ratio(k, k + 1)
}

/// `P(R(2) = k) = 1/(2k(k-1))` for `d = 2`.
pub fn record_time_d2_n2(k: u64) -> Rational {
    let k = k as i64;
    ratio(1, 2 * k * (k - 1))
}

/// `P(R(3) = k) = (3k² - 7k + 2)/(8k²(k-1)²)` for `d = 2`.
pub fn record_time_d2_n3(k: u64) -> Rational {
    let k = k as i64;
    ratio(3 * k * k - 7 * k + 2, 8 * k * k * (k - 1) * (k - 1))
}

/// Partial row sum `Σ_{k=j+2}^{M} k^{-d} ∏_{m=j+1}^{k-1}(1 - m^{-d}) + ∏_{m=j+1}^{M}(1 - m^{-d})`,
/// which equals `1 - (j+1)^{-d}` for every `M ≥ j+2`.
pub fn partial_row_identity(dim: Dimension, j: u64, m_upper: u64) -> Result<Rational> {
    if m_upper < j + 2 {
        return Err(RecordError::InvalidParameter(format!(
            "upper index {m_upper} must be at least j + 2 = {}",
            j + 2
        )));
    }
    let mut run = Rational::one() - indicator_probability(dim, j + 1);
    let mut sum = Rational::zero();
    for k in j + 2..=m_upper {
        let pk = indicator_probability(dim, k);
        sum += pk.clone() * run.clone();
        run *= Rational::one() - pk;
    }
    Ok(sum + run)
}

/// Exact `a(k, K, u) = Σ_{r∈K'} u^r / (r ∏_{s∈K', s≠r}(s - r))` with
/// `K' = {k} ∪ K`.
pub fn a_term(k: u64, later: &[u64], u: &Rational) -> Result<Rational> {
    crate::terminal::check_later_indices(k, later)?;
    let nodes: Vec<u64> = std::iter::once(k).chain(later.iter().copied()).collect();
    let mut total = Rational::zero();
    for &r in &nodes {
        let mut den = int(r as i64);
        for &s in nodes.iter().filter(|&&s| s != r) {
            den *= int(s as i64 - r as i64);
        }
        total += num_traits::pow(u.clone(), r as usize) / den;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_identity_base_step() {
        let d2 = Dimension::new(2).unwrap();
        // (1/16)(1 - 1/9) + (1 - 1/9)(1 - 1/16) = 1 - 1/9
        let lhs = partial_row_identity(d2, 2, 4).unwrap();
        assert_eq!(lhs, ratio(8, 9));
        for m in 4..15 {
            assert_eq!(partial_row_identity(d2, 2, m).unwrap(), ratio(8, 9));
        }
        assert!(partial_row_identity(d2, 2, 3).is_err());
    }

    #[test]
    fn record_time_closed_forms_exact() {
        let d2 = Dimension::new(2).unwrap();
        for k in 2..40 {
            assert_eq!(record_time_pmf(d2, 2, k).unwrap(), record_time_d2_n2(k));
        }
        for k in 3..40 {
            assert_eq!(record_time_pmf(d2, 3, k).unwrap(), record_time_d2_n3(k));
        }
    }

    #[test]
    fn a_term_at_one_is_reciprocal_product() {
        for k in 1..=5u64 {
            let sets: Vec<Vec<u64>> = vec![
                vec![],
                vec![k + 1],
                vec![k + 2, k + 4],
                vec![k + 1, k + 3, k + 7],
            ];
            for later in sets {
                let prod: i64 = std::iter::once(k)
                    .chain(later.iter().copied())
                    .map(|r| r as i64)
                    .product();
                assert_eq!(a_term(k, &later, &int(1)).unwrap(), ratio(1, prod));
            }
        }
    }
}
