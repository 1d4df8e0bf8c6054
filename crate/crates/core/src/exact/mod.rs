//! Exact evaluation, to a reported truncation error, of the terminal-record
//! index distribution, the record-time distribution and the record-time
//! Markov kernel.
//!
//! Infinite products `∏_{m>k}(1 - m^{-d})` are evaluated in log space. The
//! first few factors are multiplied out explicitly; the remaining log-tail
//! `Σ_{m>M} -log(1 - m^{-d}) = Σ_j ζ(dj, M+1)/j` is summed through the
//! Hurwitz zeta function, whose Euler–Maclaurin remainder gives the reported
//! error bound.

pub mod rational;

use std::ops::{Add, Mul, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{RecordError, Result};
use crate::numeric::{harmonic, hurwitz_zeta, inv_pow, Bounded, NeumaierSum};
use crate::record::Dimension;

/// Tolerances and caps shared by every infinite product or series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Absolute error budget for a truncated log-tail or series.
    pub tail_tol: f64,
    /// Cap on explicitly evaluated terms.
    pub max_terms: u64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tail_tol: 1e-12,
            max_terms: 1 << 24,
        }
    }
}

impl TruncationPolicy {
    pub fn new(tail_tol: f64, max_terms: u64) -> Result<Self> {
        let p = Self {
            tail_tol,
            max_terms,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0 && self.tail_tol <= 1.0) {
            return Err(RecordError::InvalidParameter(format!(
                "tail_tol must lie in (0, 1], got {}",
                self.tail_tol
            )));
        }
        if self.max_terms < 16 {
            return Err(RecordError::InvalidParameter(format!(
                "max_terms must be at least 16, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }
}

/// Probability mass function on `{support_start, support_start + 1, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub support_start: u64,
    pub masses: Vec<f64>,
    /// Absolute error bound of each mass.
    pub errors: Vec<f64>,
    /// Upper bound on the mass beyond the last listed point.
    pub tail_mass_bound: f64,
}

impl Pmf {
    pub fn mass(&self, k: u64) -> Option<f64> {
        k.checked_sub(self.support_start)
            .and_then(|i| self.masses.get(i as usize).copied())
    }

    pub fn listed_mass(&self) -> f64 {
        self.masses.iter().copied().collect::<NeumaierSum>().value()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64, f64)> + '_ {
        self.masses
            .iter()
            .zip(&self.errors)
            .zip(self.support_start..)
            .map(|((&p, &e), k)| (k, p, e))
    }
}

/// `∏_{m>k}(1 - m^{-d})` with its certified relative error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProduct {
    pub value: f64,
    pub rel_err: f64,
    /// Last factor multiplied out explicitly.
    pub cutoff: u64,
}

/// `Σ_{m>M} -log(1 - m^{-d})` through `Σ_j ζ(dj, M+1)/j`.
fn log_tail(d: u32, cutoff: u64) -> Bounded {
    let a = cutoff as f64 + 1.0;
    let mut sum = NeumaierSum::new();
    let mut err = 0.0;
    let mut j = 1u32;
    loop {
        let s = f64::from(d * j);
        let z = hurwitz_zeta(s, a);
        let term = z.value / f64::from(j);
        sum.add(term);
        err += z.err / f64::from(j);
        // successive terms shrink by at least a^{-d} <= 1/4
        if term <= 1e-20 * sum.value().max(f64::MIN_POSITIVE) || term == 0.0 || j > 200 {
            err += term;
            break;
        }
        j += 1;
    }
    Bounded {
        value: sum.value(),
        err,
    }
}

/// The probability `∏_{m≥k+1}(1 - m^{-d})` that no complete record occurs
/// after index `k`.
pub fn tail_product(dim: Dimension, k: u64, policy: &TruncationPolicy) -> Result<TailProduct> {
    dim.require_multivariate()?;
    policy.validate()?;
    if k == 0 {
        return Err(RecordError::InvalidParameter("k must be ≥ 1".into()));
    }
    let d = dim.get();
    let mut cutoff = k.max(8);
    let tail = loop {
        let tail = log_tail(d, cutoff);
        if tail.err <= policy.tail_tol {
            break tail;
        }
        cutoff = cutoff.saturating_mul(2);
        if cutoff - k > policy.max_terms {
            return Err(RecordError::PolicyExhausted {
                cap: policy.max_terms,
                tol: policy.tail_tol,
            });
        }
    };
    let mut log_sum = NeumaierSum::new();
    for m in k + 1..=cutoff {
        log_sum.add(-(-inv_pow(m, d)).ln_1p());
    }
    log_sum.add(tail.value);
    let l = log_sum.value();
    let eps = f64::EPSILON;
    Ok(TailProduct {
        value: (-l).exp(),
        rel_err: tail.err + 4.0 * eps * (l + 1.0),
        cutoff,
    })
}

/// `p_k = P(T = k) = k^{-d} ∏_{m>k}(1 - m^{-d})` for `k = 1..=k_max`.
///
/// The tail bound uses `Σ_{k>k_max} p_k ≤ Σ_{k>k_max} k^{-d}`.
pub fn terminal_index_pmf(dim: Dimension, k_max: u64, policy: &TruncationPolicy) -> Result<Pmf> {
    dim.require_multivariate()?;
    if k_max == 0 {
        return Err(RecordError::InvalidParameter("k_max must be ≥ 1".into()));
    }
    let d = dim.get();
    let mut masses = Vec::with_capacity(k_max as usize);
    let mut errors = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let tp = tail_product(dim, k, policy)?;
        let p = inv_pow(k, d) * tp.value;
        masses.push(p);
        errors.push(p * (tp.rel_err + f64::EPSILON));
    }
    let tail = hurwitz_zeta(f64::from(d), k_max as f64 + 1.0);
    Ok(Pmf {
        support_start: 1,
        masses,
        errors,
        tail_mass_bound: tail.value + tail.err,
    })
}

/// `Σ_k k p_k` diverges for `d = 2`: the partial sums are `H_{K+1} - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub dim: Dimension,
}

impl Divergence {
    /// Closed-form partial sum `Σ_{k≤K} k p_k = Σ_{k≤K} 1/(k+1)`.
    pub fn partial_sum(&self, cutoff: u64) -> f64 {
        harmonic(cutoff + 1) - 1.0
    }

    /// Smallest cutoff whose partial sum exceeds `level`.
    pub fn first_cutoff_exceeding(&self, level: f64) -> u64 {
        let mut hi = 1u64;
        while self.partial_sum(hi) <= level {
            hi = hi.saturating_mul(2);
        }
        let mut lo = hi / 2;
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if self.partial_sum(mid) > level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Outcome of `E(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExpectedTerminalIndex {
    Finite {
        value: f64,
        err_bound: f64,
        cutoff: u64,
    },
    Diverges(Divergence),
}

/// `E(T) = Σ_k k^{1-d} ∏_{m>k}(1 - m^{-d})`, or `Diverges` at `d = 2`.
pub fn expected_terminal_index(
    dim: Dimension,
    policy: &TruncationPolicy,
) -> Result<ExpectedTerminalIndex> {
    dim.require_multivariate()?;
    policy.validate()?;
    if dim.get() == 2 {
        return Ok(ExpectedTerminalIndex::Diverges(Divergence { dim }));
    }
    let mut cutoff = 64u64;
    while tail_correction_bound(dim.get(), cutoff) / 2.0 > policy.tail_tol / 2.0 {
        cutoff *= 2;
        if cutoff > policy.max_terms {
            return Err(RecordError::PolicyExhausted {
                cap: policy.max_terms,
                tol: policy.tail_tol,
            });
        }
    }
    expected_terminal_index_with_cutoff(dim, cutoff, policy)
}

/// Bound on `Σ_{k>K} k^{1-d}(1 - ∏_{m>k}(1 - m^{-d}))`.
fn tail_correction_bound(d: u32, cutoff: u64) -> f64 {
    let c = 1.0 / (1.0 - inv_pow(cutoff + 2, d));
    let z = hurwitz_zeta(f64::from(2 * d - 2), cutoff as f64 + 1.0);
    c * (z.value + z.err) / f64::from(d - 1)
}

/// `E(T)` summed explicitly up to `cutoff`; the remainder is
/// `ζ(d-1, cutoff+1)` minus a correction known to within half its bound.
pub fn expected_terminal_index_with_cutoff(
    dim: Dimension,
    cutoff: u64,
    policy: &TruncationPolicy,
) -> Result<ExpectedTerminalIndex> {
    dim.require_multivariate()?;
    let d = dim.get();
    if d == 2 {
        return Ok(ExpectedTerminalIndex::Diverges(Divergence { dim }));
    }
    if cutoff == 0 {
        return Err(RecordError::InvalidParameter("cutoff must be ≥ 1".into()));
    }
    let mut sum = NeumaierSum::new();
    let mut err = 0.0;
    for k in 1..=cutoff {
        let tp = tail_product(dim, k, policy)?;
        let term = inv_pow(k, d - 1) * tp.value;
        sum.add(term);
        err += term * tp.rel_err;
    }
    let head = hurwitz_zeta(f64::from(d - 1), cutoff as f64 + 1.0);
    let corr = tail_correction_bound(d, cutoff);
    sum.add(head.value);
    sum.add(-corr / 2.0);
    err += head.err + corr / 2.0 + 4.0 * f64::EPSILON * sum.value();
    Ok(ExpectedTerminalIndex::Finite {
        value: sum.value(),
        err_bound: err,
        cutoff,
    })
}

/// Distribution of `S = Σ X_i` for independent Bernoulli `X_i` with the given
/// success probabilities, truncated to counts `0..=max_count`.
///
/// Standard `O(len · max_count)` convolution with `O(max_count)` storage;
/// generic so that exact rationals and floats share the recursion.
pub fn poisson_binomial_pmf<T>(probs: &[T], max_count: usize) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    let mut dp = vec![T::zero(); max_count + 1];
    dp[0] = T::one();
    for (i, p) in probs.iter().enumerate() {
        let q = T::one() - p.clone();
        let top = (i + 1).min(max_count);
        for c in (1..=top).rev() {
            dp[c] = dp[c].clone() * q.clone() + dp[c - 1].clone() * p.clone();
        }
        dp[0] = dp[0].clone() * q;
    }
    dp
}

fn check_record_time_args(n: u64, k: u64) -> Result<()> {
    if n == 0 {
        return Err(RecordError::InvalidParameter("n must be ≥ 1".into()));
    }
    if k < n {
        return Err(RecordError::InvalidParameter(format!(
            "record time R({n}) cannot equal {k}: need k ≥ n"
        )));
    }
    Ok(())
}

/// `P(R(n) = k) = k^{-d} P(Σ_{m=2}^{k-1} I_m = n - 2)`.
///
/// The count is Poisson-Binomial with success probabilities `m^{-d}`.
pub fn record_time_pmf(dim: Dimension, n: u64, k: u64) -> Result<f64> {
    check_record_time_args(n, k)?;
    if n == 1 {
        return Ok(if k == 1 { 1.0 } else { 0.0 });
    }
    let d = dim.get();
    let probs: Vec<f64> = (2..k).map(|m| inv_pow(m, d)).collect();
    let dist = poisson_binomial_pmf(&probs, (n - 2) as usize);
    Ok(inv_pow(k, d) * dist[(n - 2) as usize])
}

/// `P(R(n) = k)` for `k = n..=k_max` as a [`Pmf`] (one DP pass); the tail
/// bound is `Σ_{k>k_max} k^{-d}`.
pub fn record_time_distribution(dim: Dimension, n: u64, k_max: u64) -> Result<Pmf> {
    check_record_time_args(n, k_max)?;
    let d = dim.get();
    let mut masses = Vec::new();
    let mut errors = Vec::new();
    if n == 1 {
        masses.push(1.0);
        errors.push(0.0);
        masses.resize(k_max as usize, 0.0);
        errors.resize(k_max as usize, 0.0);
    } else {
        let c = (n - 2) as usize;
        let mut dp = vec![0.0; c + 1];
        dp[0] = 1.0;
        for k in 2..=k_max {
            if k >= n {
                let p = inv_pow(k, d) * dp[c];
                masses.push(p);
                errors.push(p * 4.0 * f64::EPSILON * k as f64);
            }
            // fold in I_k for the next index
            let pk = inv_pow(k, d);
            for i in (1..=c).rev() {
                dp[i] = dp[i] * (1.0 - pk) + dp[i - 1] * pk;
            }
            dp[0] *= 1.0 - pk;
        }
    }
    let tail_mass_bound = if d >= 2 {
        let z = hurwitz_zeta(f64::from(d), k_max as f64 + 1.0);
        z.value + z.err
    } else {
        1.0
    };
    Ok(Pmf {
        support_start: n,
        masses,
        errors,
        tail_mass_bound,
    })
}

/// State of the record-time chain: a finite index or the absorbing `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    Finite(u64),
    Infinite,
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            State::Finite(k) => write!(f, "{k}"),
            State::Infinite => f.write_str("inf"),
        }
    }
}

/// `P(R(n) = to | R(n-1) = from)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionQuery {
    n: u64,
    from: State,
    to: State,
}

impl TransitionQuery {
    pub fn new(n: u64, from: State, to: State) -> Result<Self> {
        if n < 2 {
            return Err(RecordError::InvalidQuery(format!("n must be ≥ 2, got {n}")));
        }
        match (from, to) {
            (State::Finite(j), _) if j + 1 < n => Err(RecordError::InvalidQuery(format!(
                "R({}) = {j} is impossible: need j ≥ n - 1 = {}",
                n - 1,
                n - 1
            ))),
            (State::Finite(j), State::Finite(k)) if k <= j => Err(RecordError::InvalidQuery(
                format!("target {k} must exceed current state {j}"),
            )),
            (State::Infinite, _) if n < 3 => Err(RecordError::InvalidQuery(
                "R(1) = 1, so the chain cannot start from ∞".into(),
            )),
            _ => Ok(Self { n, from, to }),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn from(&self) -> State {
        self.from
    }

    pub fn to(&self) -> State {
        self.to
    }
}

/// One-step transition probability of the record-time chain.
pub fn transition_probability(
    dim: Dimension,
    q: &TransitionQuery,
    policy: &TruncationPolicy,
) -> Result<f64> {
    dim.require_multivariate()?;
    let d = dim.get();
    match (q.from, q.to) {
        (State::Infinite, State::Infinite) => Ok(1.0),
        (State::Infinite, State::Finite(_)) => Ok(0.0),
        (State::Finite(j), State::Infinite) => Ok(tail_product(dim, j, policy)?.value),
        (State::Finite(j), State::Finite(k)) => {
            if k - j > policy.max_terms {
                return Err(RecordError::PolicyExhausted {
                    cap: policy.max_terms,
                    tol: policy.tail_tol,
                });
            }
            let log_gap: NeumaierSum = (j + 1..k).map(|m| (-inv_pow(m, d)).ln_1p()).collect();
            Ok(inv_pow(k, d) * log_gap.value().exp())
        }
    }
}

/// `(j+1)^{-d} + Σ_{k≥j+2} P(k | j) + P(∞ | j)`, which must equal one.
///
/// The finite part is summed up to a cutoff `K`; the remaining
/// `Σ_{k>K} k^{-d} ∏_{m=K+1}^{k-1}(1 - m^{-d})` is pinned between
/// second- and third-order Bonferroni bounds in `ζ(d, K+1)`.
pub fn transition_row_sum(dim: Dimension, j: u64, policy: &TruncationPolicy) -> Result<Bounded> {
    dim.require_multivariate()?;
    policy.validate()?;
    if j == 0 {
        return Err(RecordError::InvalidParameter("j must be ≥ 1".into()));
    }
    let d = dim.get();
    let s = f64::from(d);

    let mut cutoff = (j + 2).max(64);
    let (z1, z2) = loop {
        let z1 = hurwitz_zeta(s, cutoff as f64 + 1.0);
        let z2 = hurwitz_zeta(2.0 * s, cutoff as f64 + 1.0);
        if z1.value.powi(3) / 12.0 <= policy.tail_tol / 4.0 {
            break (z1, z2);
        }
        cutoff *= 2;
        if cutoff - j > policy.max_terms {
            return Err(RecordError::PolicyExhausted {
                cap: policy.max_terms,
                tol: policy.tail_tol,
            });
        }
    };

    let mut sum = NeumaierSum::new();
    let first = inv_pow(j + 1, d);
    sum.add(first);
    // running ∏_{m=j+1}^{k-1}(1 - m^{-d})
    let mut log_run = NeumaierSum::new();
    log_run.add((-first).ln_1p());
    for k in j + 2..=cutoff {
        let pk = inv_pow(k, d);
        sum.add(pk * log_run.value().exp());
        log_run.add((-pk).ln_1p());
    }
    let run = log_run.value().exp();
    let (z1v, z2v) = (z1.value, z2.value);
    let lower = z1v - (z1v * z1v - z2v) / 2.0;
    let half_width = z1v.powi(3) / 12.0;
    sum.add(run * (lower + half_width));

    let to_inf = tail_product(dim, j, policy)?;
    sum.add(to_inf.value);

    let err = run * (half_width + z1.err + z2.err)
        + to_inf.value * to_inf.rel_err
        + 8.0 * f64::EPSILON * (cutoff - j) as f64;
    Ok(Bounded {
        value: sum.value(),
        err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(d: u32) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn tail_product_telescopes_for_d2() {
        for k in [1u64, 3, 10, 999] {
            let tp = tail_product(dim(2), k, &pol()).unwrap();
            let exact = k as f64 / (k as f64 + 1.0);
            assert!(
                (tp.value - exact).abs() <= exact * tp.rel_err + 1e-15,
                "k={k}"
            );
            assert!(tp.rel_err < 1e-12);
        }
        assert_eq!(tail_product(dim(2), 1, &pol()).unwrap().value, 0.5);
    }

    #[test]
    fn tail_product_tends_to_one_in_d() {
        let tp = tail_product(dim(40), 1, &pol()).unwrap();
        assert!((tp.value - 1.0).abs() < 1e-11);
        assert!(tp.value < 1.0);
    }

    #[test]
    fn tail_product_rejects_univariate_and_exhausts() {
        assert!(matches!(
            tail_product(dim(1), 1, &pol()),
            Err(RecordError::Dimension { .. })
        ));
        let tight = TruncationPolicy::new(1e-300, 16).unwrap();
        assert!(matches!(
            tail_product(dim(2), 1, &tight),
            Err(RecordError::PolicyExhausted { .. })
        ));
    }

    #[test]
    fn tail_product_against_explicit_truncation() {
        // oracle: product to M = 10^6 with the crude bound M^{1-d}/((d-1)(1-M^{-d}))
        let big_m = 1_000_000u64;
        for d in [3u32, 4] {
            let log: NeumaierSum = (3..=big_m).map(|m| (-inv_pow(m, d)).ln_1p()).collect();
            let approx = log.value().exp();
            let bound =
                (big_m as f64).powi(1 - d as i32) / (f64::from(d - 1) * (1.0 - inv_pow(big_m, d)));
            let tp = tail_product(dim(d), 2, &pol()).unwrap();
            assert!(tp.value <= approx + 1e-15);
            assert!(approx - tp.value <= approx * bound + 1e-15);
        }
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(0.0, 100).is_err());
        assert!(TruncationPolicy::new(2.0, 100).is_err());
        assert!(TruncationPolicy::new(1e-6, 15).is_err());
        assert!(TruncationPolicy::new(1.0, 16).is_ok());
    }

    #[test]
    fn terminal_pmf_d2_closed_forms() {
        let pmf = terminal_index_pmf(dim(2), 10, &pol()).unwrap();
        assert!((pmf.mass(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((pmf.mass(2).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((pmf.mass(10).unwrap() - 1.0 / 110.0).abs() < 1e-15);
        assert_eq!(pmf.mass(11), None);
        assert_eq!(pmf.mass(0), None);
        // true tail is 1/11; the bound is ζ(2, 11)
        assert!(pmf.tail_mass_bound >= 1.0 / 11.0);
    }

    #[test]
    fn expected_index_diverges_for_d2() {
        match expected_terminal_index(dim(2), &pol()).unwrap() {
            ExpectedTerminalIndex::Diverges(div) => {
                assert!((div.partial_sum(1) - 0.5).abs() < 1e-15);
                assert!((div.partial_sum(2) - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
                let k = div.first_cutoff_exceeding(3.0);
                assert!(div.partial_sum(k) > 3.0 && div.partial_sum(k - 1) <= 3.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn expected_index_d3_bounded_by_zeta2() {
        let ExpectedTerminalIndex::Finite {
            value, err_bound, ..
        } = expected_terminal_index(dim(3), &pol()).unwrap()
        else {
            panic!("d = 3 converges");
        };
        assert!(value < std::f64::consts::PI.powi(2) / 6.0);
        assert!(value > 1.0);
        assert!(err_bound < 1e-11);
    }

    #[test]
    fn expected_index_tends_to_one() {
        let ExpectedTerminalIndex::Finite { value, .. } =
            expected_terminal_index(dim(30), &pol()).unwrap()
        else {
            panic!()
        };
        assert!((value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn record_time_examples() {
        let d2 = dim(2);
        assert!((record_time_pmf(d2, 2, 2).unwrap() - 0.25).abs() < 1e-16);
        assert!((record_time_pmf(d2, 3, 3).unwrap() - 1.0 / 36.0).abs() < 1e-16);
        assert!((record_time_pmf(d2, 2, 5).unwrap() - 1.0 / 40.0).abs() < 1e-16);
        assert_eq!(record_time_pmf(d2, 1, 1).unwrap(), 1.0);
        assert_eq!(record_time_pmf(d2, 1, 4).unwrap(), 0.0);
        assert!(record_time_pmf(d2, 3, 2).is_err());
        assert!(record_time_pmf(d2, 0, 2).is_err());
        // d = 1 is allowed here
        assert!((record_time_pmf(dim(1), 2, 2).unwrap() - 0.5).abs() < 1e-16);
    }

    #[test]
    fn record_time_distribution_matches_pointwise() {
        for n in 1..5u64 {
            let pmf = record_time_distribution(dim(3), n, 40).unwrap();
            for (k, p, _) in pmf.iter() {
                assert!((p - record_time_pmf(dim(3), n, k).unwrap()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn poisson_binomial_sums_to_one() {
        let probs = [0.1, 0.5, 0.25, 0.9];
        let pmf = poisson_binomial_pmf(&probs, 4);
        let total: f64 = pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!((pmf[4] - 0.1 * 0.5 * 0.25 * 0.9).abs() < 1e-16);
    }

    #[test]
    fn transition_examples() {
        let d2 = dim(2);
        let q = TransitionQuery::new(2, State::Finite(1), State::Finite(2)).unwrap();
        assert_eq!(transition_probability(d2, &q, &pol()).unwrap(), 0.25);
        let q = TransitionQuery::new(2, State::Finite(1), State::Infinite).unwrap();
        assert!((transition_probability(d2, &q, &pol()).unwrap() - 0.5).abs() < 1e-15);
        let q = TransitionQuery::new(3, State::Infinite, State::Infinite).unwrap();
        assert_eq!(transition_probability(d2, &q, &pol()).unwrap(), 1.0);
        let q = TransitionQuery::new(3, State::Infinite, State::Finite(7)).unwrap();
        assert_eq!(transition_probability(d2, &q, &pol()).unwrap(), 0.0);
        // k > j+1: k^{-2} ∏_{m=j+1}^{k-1}(1 - m^{-2}) = k^{-2} · j(k)/((j+1)(k-1))
        let q = TransitionQuery::new(3, State::Finite(4), State::Finite(9)).unwrap();
        let exact = (1.0 / 81.0) * (4.0 * 9.0) / (5.0 * 8.0);
        assert!((transition_probability(d2, &q, &pol()).unwrap() - exact).abs() < 1e-16);
    }

    #[test]
    fn transition_query_validation() {
        assert!(TransitionQuery::new(1, State::Finite(1), State::Finite(2)).is_err());
        assert!(TransitionQuery::new(4, State::Finite(2), State::Finite(3)).is_err());
        assert!(TransitionQuery::new(3, State::Finite(4), State::Finite(4)).is_err());
        assert!(TransitionQuery::new(2, State::Infinite, State::Infinite).is_err());
        assert!(TransitionQuery::new(4, State::Finite(3), State::Infinite).is_ok());
    }

    #[test]
    fn row_sums_are_one() {
        for (d, j) in [(2u32, 1u64), (3, 5), (2, 50), (4, 17)] {
            let r = transition_row_sum(dim(d), j, &pol()).unwrap();
            assert!(
                (r.value - 1.0).abs() <= 2.0 * pol().tail_tol,
                "d={d} j={j}: {r:?}"
            );
        }
    }
}
