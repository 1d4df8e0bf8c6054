//! Distribution function of the terminal complete record.
//!
//! In u-space (`u_i = F_i(x_i)`) the df is a sum over the terminal index `k`
//! of `P(U_k ≤ u, I_k = 1, no complete record after k)`. Each summand is an
//! inclusion-exclusion series over finite sets `K` of later indices,
//!
//! ```text
//! ∏_i u_i^k / k^d  -  Σ_{K ≠ ∅} (-1)^{|K|-1} ∏_i a(k, K, u_i),
//! a(k, K, u) = Σ_{r ∈ K'} u^r / (r ∏_{s ∈ K', s ≠ r} (s - r)),   K' = {k} ∪ K,
//! ```
//!
//! where `a(k, K, u) = P(U_k ≤ u, e_k = 1, e_t = 1 for t ∈ K)` for a single
//! uniform component.
//!
//! Two evaluators of the `K`-sum are provided:
//!
//! * [`KSumMethod::Enumerate`] lists subsets of a window `{k+1, …, k+M}` up
//!   to a size cap, in order of size then lexicographically.
//! * [`KSumMethod::Resummed`] (`d = 2`) sums over *all* finite subsets of the
//!   infinite index set at once. Expanding each `a` over its nodes, the
//!   coefficient of a chosen node tuple `(x_1, …, x_d)` factors over the
//!   remaining indices `s`, each contributing `1 - ∏_i 1/(s - x_i)`. The
//!   resulting convergent infinite product is tabulated once per node offset.
//!
//! The window truncation of `Enumerate` misses mass of order
//! `∏ u_i^k/k^d · ζ(d, M+1)`, which is large for `d = 2`; `Auto` therefore
//! uses `Resummed` for `d = 2` and `Enumerate` otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{RecordError, Result};
use crate::margin::MarginSpec;
use crate::numeric::{hurwitz_zeta, NeumaierSum};
use crate::record::Dimension;

/// Point at which the df is evaluated, with its u-space image.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationPoint {
    pub dim: Dimension,
    pub coords: Vec<f64>,
    pub u: Vec<f64>,
}

impl EvaluationPoint {
    pub fn new(coords: Vec<f64>, margins: &[MarginSpec]) -> Result<Self> {
        let dim = Dimension::multivariate(coords.len() as u32)?;
        if margins.len() != coords.len() {
            return Err(RecordError::InvalidParameter(format!(
                "{} margins given for a {}-dimensional point",
                margins.len(),
                coords.len()
            )));
        }
        let u = coords.iter().zip(margins).map(|(&x, m)| m.cdf(x)).collect();
        Self::checked(dim, coords, u)
    }

    /// Point given directly by `u_i ∈ [0, 1]` (uniform margins).
    pub fn from_probabilities(u: Vec<f64>) -> Result<Self> {
        let dim = Dimension::multivariate(u.len() as u32)?;
        Self::checked(dim, u.clone(), u)
    }

    fn checked(dim: Dimension, coords: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if let Some(bad) = u.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(RecordError::InvalidParameter(format!(
                "u_i must lie in [0, 1], got {bad}"
            )));
        }
        Ok(Self { dim, coords, u })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KSumMethod {
    Auto,
    Enumerate,
    Resummed,
}

impl KSumMethod {
    fn resolve(self, dim: Dimension) -> Result<Self> {
        match (self, dim.get()) {
            (KSumMethod::Auto, 2) => Ok(KSumMethod::Resummed),
            (KSumMethod::Auto, _) => Ok(KSumMethod::Enumerate),
            (KSumMethod::Resummed, d) if d != 2 => Err(RecordError::InvalidParameter(format!(
                "the resummed K-sum is available for d = 2 only, got d = {d}"
            ))),
            (m, _) => Ok(m),
        }
    }
}

impl std::str::FromStr for KSumMethod {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(KSumMethod::Auto),
            "enumerate" => Ok(KSumMethod::Enumerate),
            "resummed" => Ok(KSumMethod::Resummed),
            other => Err(RecordError::InvalidParameter(format!(
                "unknown K-sum method '{other}' (expected auto, enumerate or resummed)"
            ))),
        }
    }
}

impl std::fmt::Display for KSumMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KSumMethod::Auto => "auto",
            KSumMethod::Enumerate => "enumerate",
            KSumMethod::Resummed => "resummed",
        })
    }
}

/// Truncation of the doubly infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPolicy {
    /// Largest terminal index `k` summed.
    pub k_max: u64,
    /// Enumerate: later indices are drawn from `{k+1, …, k+window}`.
    pub window: u64,
    /// Enumerate: largest `|K|`.
    pub max_subset_size: usize,
    /// Summation over `k` stops once `∏ u_i^k / k^d` drops below this.
    pub term_tol: f64,
    /// Resummed: cap on the node offset `x - k`.
    pub max_offset: u64,
    pub method: KSumMethod,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self {
            k_max: 200,
            window: 20,
            max_subset_size: 4,
            term_tol: 1e-10,
            max_offset: 2000,
            method: KSumMethod::Auto,
        }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 || self.window == 0 || self.max_subset_size == 0 || self.max_offset == 0
        {
            return Err(RecordError::InvalidParameter(
                "series caps must all be at least 1".into(),
            ));
        }
        if self.term_tol.is_nan() || self.term_tol <= 0.0 {
            return Err(RecordError::InvalidParameter(format!(
                "term_tol must be positive, got {}",
                self.term_tol
            )));
        }
        Ok(())
    }
}

/// Value of the df with a heuristic error estimate.
///
/// For `Enumerate` the estimate adds the window-tail bound, the magnitude of
/// the last subset-size level and the tail over `k`; the level term is not a
/// certified bound. For `Resummed` it adds the node-offset truncation bound,
/// the tail over `k` and a rounding allowance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfEstimate {
    pub value: f64,
    pub err_estimate: f64,
    /// Number of terminal indices summed.
    pub k_terms: u64,
    pub method: KSumMethod,
}

pub(crate) fn check_later_indices(k: u64, later: &[u64]) -> Result<()> {
    if k == 0 {
        return Err(RecordError::InvalidParameter("k must be ≥ 1".into()));
    }
    let mut prev = k;
    for &t in later {
        if t <= prev {
            return Err(RecordError::InvalidParameter(format!(
                "later indices must be strictly increasing and exceed k = {k}; got {later:?}"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// `1 / (r ∏_{s ∈ nodes, s ≠ r} (s - r))` for every node `r`.
fn node_coefficients(nodes: &[u64], out: &mut Vec<f64>) {
    out.clear();
    for &r in nodes {
        let mut den = r as f64;
        for &s in nodes {
            if s != r {
                den *= s as f64 - r as f64;
            }
        }
        out.push(1.0 / den);
    }
}

/// `P(U_k ≤ u, e_k = 1, e_t = 1 ∀ t ∈ later)` for one uniform component.
pub fn a_term(k: u64, later: &[u64], u: f64) -> Result<f64> {
    check_later_indices(k, later)?;
    if !(0.0..=1.0).contains(&u) {
        return Err(RecordError::InvalidParameter(format!(
            "u must lie in [0, 1], got {u}"
        )));
    }
    let nodes: Vec<u64> = std::iter::once(k).chain(later.iter().copied()).collect();
    let mut coef = Vec::with_capacity(nodes.len());
    node_coefficients(&nodes, &mut coef);
    let sum: NeumaierSum = nodes
        .iter()
        .zip(&coef)
        .map(|(&r, c)| c * u.powi(r as i32))
        .collect();
    Ok(sum.value())
}

/// `P(η ≤ x | η is the k-th observation and a univariate record) = exp(kx)`
/// for a standard negative exponential `η`.
pub fn conditional_record_df(k: u64, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(RecordError::InvalidParameter("k must be ≥ 1".into()));
    }
    if x.is_nan() || x > 0.0 {
        return Err(RecordError::InvalidParameter(format!(
            "x must be ≤ 0, got {x}"
        )));
    }
    Ok((k as f64 * x).exp())
}

/// Evaluates `P(X_T ≤ x)` for independent margins.
pub fn terminal_record_df(
    coords: &[f64],
    margins: &[MarginSpec],
    policy: &SeriesPolicy,
) -> Result<DfEstimate> {
    let point = EvaluationPoint::new(coords.to_vec(), margins)?;
    evaluate(&point, policy)
}

/// Evaluates `P(U_T ≤ u)` for uniform margins.
pub fn terminal_record_df_u(u: &[f64], policy: &SeriesPolicy) -> Result<DfEstimate> {
    let point = EvaluationPoint::from_probabilities(u.to_vec())?;
    evaluate(&point, policy)
}

/// Per-`k` contribution and its error allowance.
struct KTerm {
    value: f64,
    err: f64,
}

pub fn evaluate(point: &EvaluationPoint, policy: &SeriesPolicy) -> Result<DfEstimate> {
    policy.validate()?;
    let dim = point.dim;
    let method = policy.method.resolve(dim)?;
    let u = &point.u;
    let d = dim.get();
    if u.contains(&0.0) {
        return Ok(DfEstimate {
            value: 0.0,
            err_estimate: 0.0,
            k_terms: 0,
            method,
        });
    }
    let u_prod: f64 = u.iter().product();
    let head =
        |k: u64| u.iter().map(|p| p.powi(k as i32)).product::<f64>() / (k as f64).powi(d as i32);

    let mut resummed = match method {
        KSumMethod::Resummed => Some(ResummedD2::new([u[0], u[1]], policy)),
        _ => None,
    };
    let window_tail = hurwitz_zeta(f64::from(d), policy.window as f64 + 1.0);

    let mut total = NeumaierSum::new();
    let mut err = 0.0;
    let mut k = 0u64;
    let converged = loop {
        k += 1;
        let h = head(k);
        let term = match resummed.as_mut() {
            Some(r) => r.term(k),
            None => enumerate_k(k, u, policy, h, window_tail.value + window_tail.err),
        };
        total.add(term.value);
        err += term.err;
        if h < policy.term_tol {
            break true;
        }
        if k >= policy.k_max {
            break false;
        }
    };
    // Σ_{k'>k} ∏ u_i^{k'} / k'^d
    let z = hurwitz_zeta(f64::from(d), k as f64 + 1.0);
    let mut k_tail = z.value + z.err;
    if u_prod < 1.0 {
        k_tail = k_tail.min(head(k + 1) / (1.0 - u_prod));
    }
    err += k_tail;
    let value = total.value();
    if !converged {
        return Err(RecordError::NotConverged {
            value,
            err_estimate: err,
            k_reached: k,
        });
    }
    Ok(DfEstimate {
        value,
        err_estimate: err,
        k_terms: k,
        method,
    })
}

/// Visits every `size`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, size: usize, mut f: impl FnMut(&[usize])) {
    if size > n {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        f(&idx);
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - size {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Windowed, size-capped inclusion-exclusion for one `k`.
fn enumerate_k(k: u64, u: &[f64], policy: &SeriesPolicy, head: f64, zeta_window: f64) -> KTerm {
    let m = policy.window as usize;
    let cap = policy.max_subset_size.min(m);
    // pows[i][o] = u_i^{k+o}
    let pows: Vec<Vec<f64>> = u
        .iter()
        .map(|&p| {
            let base = p.powi(k as i32);
            let mut v = Vec::with_capacity(m + 1);
            let mut cur = base;
            for _ in 0..=m {
                v.push(cur);
                cur *= p;
            }
            v
        })
        .collect();

    let mut incl_excl = NeumaierSum::new();
    let mut last_level = 0.0;
    let mut nodes = Vec::with_capacity(cap + 1);
    let mut coef = Vec::with_capacity(cap + 1);
    for size in 1..=cap {
        let mut level = NeumaierSum::new();
        for_each_combination(m, size, |comb| {
            nodes.clear();
            nodes.push(k);
            nodes.extend(comb.iter().map(|&c| k + 1 + c as u64));
            node_coefficients(&nodes, &mut coef);
            let mut prod = 1.0;
            for pw in &pows {
                let a: NeumaierSum = nodes
                    .iter()
                    .zip(&coef)
                    .map(|(&r, c)| c * pw[(r - k) as usize])
                    .collect();
                prod *= a.value();
            }
            level.add(prod);
        });
        let lv = level.value();
        if size % 2 == 1 {
            incl_excl.add(lv);
        } else {
            incl_excl.add(-lv);
        }
        last_level = lv;
    }
    let cap_err = if cap < m { last_level.abs() } else { 0.0 };
    KTerm {
        value: head - incl_excl.value(),
        err: head * zeta_window + cap_err,
    }
}

/// Products `G(a, δ) = ∏_{t ≥ a, t ∉ {0, δ}} (1 - 1/(t(t - δ)))`: the factor
/// contributed by all free later indices once the two node centres are fixed,
/// written relative to the lower centre.
pub(crate) trait FreeProducts {
    fn get(&mut self, a: i64, delta: u64) -> f64;
    /// Largest later index allowed, if the index set is a finite window.
    fn window(&self) -> Option<u64>;
}

const TAIL_START: i64 = 1 << 14;

#[inline]
fn free_factor(t: i64, delta: i64) -> f64 {
    1.0 - 1.0 / ((t * (t - delta)) as f64)
}

/// Direct evaluation of `G(a, δ)` with an analytic tail beyond `t = top`.
pub(crate) fn direct_free_product(a: i64, delta: u64) -> f64 {
    let dl = delta as i64;
    let top = a.max(dl) + TAIL_START;
    let mut log = NeumaierSum::new();
    for t in a..=top {
        if t == 0 || t == dl {
            continue;
        }
        let y = 1.0 / ((t * (t - dl)) as f64);
        if y == 1.0 {
            return 0.0;
        }
        log.add((-y).ln_1p());
    }
    // Σ_{t>top} y_t, y_t = 1/(t(t-δ))
    let first = if dl == 0 {
        hurwitz_zeta(2.0, top as f64 + 1.0).value
    } else {
        let s: NeumaierSum = (top - dl + 1..=top).map(|i| 1.0 / i as f64).collect();
        s.value() / dl as f64
    };
    // Σ y_t²/2 with y_t ≈ (t - δ/2)^{-2}, by the midpoint integral
    let centre = top as f64 + 0.5 - 0.5 * dl as f64;
    log.add(-first - 1.0 / (6.0 * centre * centre * centre));
    log.value().exp()
}

/// Tables of `G(a, δ)` for `a` in a fixed range, built per `δ` on demand by
/// backward recursion from one direct evaluation.
pub(crate) struct InfiniteFreeProducts {
    a_lo: i64,
    a_hi: i64,
    tables: Vec<Option<Vec<f64>>>,
}

impl InfiniteFreeProducts {
    pub(crate) fn new(a_lo: i64, a_hi: i64) -> Self {
        Self {
            a_lo,
            a_hi,
            tables: Vec::new(),
        }
    }

    fn build(&self, delta: u64) -> Vec<f64> {
        let len = (self.a_hi - self.a_lo + 1) as usize;
        let mut vals = vec![0.0; len];
        let dl = delta as i64;
        let mut cur = direct_free_product(self.a_hi, delta);
        vals[len - 1] = cur;
        for a in (self.a_lo..self.a_hi).rev() {
            if a != 0 && a != dl {
                cur *= free_factor(a, dl);
            }
            vals[(a - self.a_lo) as usize] = cur;
        }
        vals
    }
}

impl FreeProducts for InfiniteFreeProducts {
    fn get(&mut self, a: i64, delta: u64) -> f64 {
        debug_assert!(a >= self.a_lo && a <= self.a_hi, "a = {a} outside table");
        let i = delta as usize;
        if i >= self.tables.len() {
            self.tables.resize_with(i + 1, || None);
        }
        if self.tables[i].is_none() {
            self.tables[i] = Some(self.build(delta));
        }
        self.tables[i].as_ref().unwrap()[(a - self.a_lo) as usize]
    }

    fn window(&self) -> Option<u64> {
        None
    }
}

/// Free products restricted to the window `{k+1, …, k+M}`.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct WindowFreeProducts {
    pub(crate) window: u64,
}

impl FreeProducts for WindowFreeProducts {
    fn get(&mut self, a: i64, delta: u64) -> f64 {
        let dl = delta as i64;
        (a..a + self.window as i64)
            .filter(|&t| t != 0 && t != dl)
            .map(|t| free_factor(t, dl))
            .product()
    }

    fn window(&self) -> Option<u64> {
        Some(self.window)
    }
}

/// Resummed inclusion-exclusion for `d = 2`.
///
/// For component `i` with `u_i < 1` a node `x_i ∈ {k} ∪ J` is chosen, with
/// weight `u_i^{x_i}/x_i`; a component with `u_i = 1` has no node and acts
/// as a centre at 0. Each forced index `s` (the index `k`, and every chosen
/// node, which then belongs to `K`) contributes
/// `σ(s) ∏_{i : x_i ≠ s} 1/(s - c_i)` with `σ(k) = 1`, `σ(s) = -1`
/// otherwise; every other later index contributes `1 - ∏_i 1/(s - c_i)`.
pub(crate) struct ResummedD2<F> {
    u: [f64; 2],
    active: [bool; 2],
    spans: [u64; 2],
    free: F,
}

// G(a, δ) ≤ exp(max_δ 2 H_{δ-1} / δ) = e
const FREE_PRODUCT_MAX: f64 = std::f64::consts::E;

impl ResummedD2<InfiniteFreeProducts> {
    pub(crate) fn new(u: [f64; 2], policy: &SeriesPolicy) -> Self {
        let active = [u[0] < 1.0, u[1] < 1.0];
        let spans = [0, 1].map(|i| {
            if !active[i] {
                return 0;
            }
            // u^{L+1} ≤ 1e-3 · tol · (1 - u)
            let target = (1e-3 * policy.term_tol * (1.0 - u[i])).ln();
            let l = (target / u[i].ln()).ceil().max(1.0);
            (l as u64).min(policy.max_offset)
        });
        let (a_lo, a_hi) = if active[0] && active[1] {
            (1 - spans[0].max(spans[1]) as i64, 1)
        } else {
            (2, policy.k_max as i64 + 1)
        };
        Self {
            u,
            active,
            spans,
            free: InfiniteFreeProducts::new(a_lo, a_hi),
        }
    }
}

impl<F: FreeProducts> ResummedD2<F> {
    #[cfg(test)]
    pub(crate) fn with_free_products(u: [f64; 2], spans: [u64; 2], free: F) -> Self {
        Self {
            u,
            active: [u[0] < 1.0, u[1] < 1.0],
            spans,
            free,
        }
    }

    fn node_range(&self, i: usize, k: u64) -> std::ops::RangeInclusive<u64> {
        if !self.active[i] {
            return 0..=0;
        }
        let mut hi = k + self.spans[i];
        if let Some(w) = self.free.window() {
            hi = hi.min(k + w);
        }
        k..=hi
    }

    fn term(&mut self, k: u64) -> KTerm {
        let r0 = self.node_range(0, k);
        let r1 = self.node_range(1, k);
        let pw = |i: usize, x: u64| -> f64 {
            if self.active[i] {
                self.u[i].powi(x as i32) / x as f64
            } else {
                1.0
            }
        };
        let w0: Vec<f64> = r0.clone().map(|x| pw(0, x)).collect();
        let w1: Vec<f64> = r1.clone().map(|x| pw(1, x)).collect();

        let mut sum = NeumaierSum::new();
        let mut abs_sum = 0.0;
        for (x0, &p0) in r0.clone().zip(&w0) {
            for (x1, &p1) in r1.clone().zip(&w1) {
                let x = [x0, x1];
                let c = [x0 as i64, x1 as i64];
                let coupling = self.coupling(k, x, c);
                if coupling == 0.0 {
                    continue;
                }
                let lo = c[0].min(c[1]);
                let delta = c[0].abs_diff(c[1]);
                let a = k as i64 + 1 - lo;
                let g = self.free.get(a, delta);
                let t = p0 * p1 * coupling * g;
                sum.add(t);
                abs_sum += t.abs();
            }
        }

        // neglected node tuples: |coupling| ≤ 1, 0 ≤ G ≤ e
        let mut full = 1.0;
        let mut kept = 1.0;
        for i in 0..2 {
            if self.active[i] {
                let p = self.u[i];
                let s = p.powi(k as i32) / (1.0 - p);
                let hi = *self.node_range(i, k).end();
                let t = p.powi((hi + 1) as i32) / (1.0 - p);
                full *= s / k as f64;
                kept *= (s - t) / k as f64;
            }
        }
        let trunc = if self.free.window().is_some() {
            0.0
        } else {
            FREE_PRODUCT_MAX * (full - kept).max(0.0)
        };
        KTerm {
            value: sum.value(),
            err: trunc + 4.0 * f64::EPSILON * abs_sum,
        }
    }

    fn coupling(&self, k: u64, x: [u64; 2], c: [i64; 2]) -> f64 {
        let mut nodes = [k, 0, 0];
        let mut n = 1;
        for (&active, &xi) in self.active.iter().zip(&x) {
            if active && !nodes[..n].contains(&xi) {
                nodes[n] = xi;
                n += 1;
            }
        }
        let mut f = 1.0;
        for &s in &nodes[..n] {
            if s != k {
                f = -f;
            }
            for ((&active, &xi), &ci) in self.active.iter().zip(&x).zip(&c) {
                if !(active && xi == s) {
                    f /= (s as i64 - ci) as f64;
                }
            }
        }
        f
    }
}

/// Row of [`asymptotic_ratio_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub d: u32,
    /// `P(η_T ≤ x_d)`.
    pub terminal_df: f64,
    /// Series error estimate or Monte Carlo standard error.
    pub uncertainty: f64,
    pub source: ProbeSource,
    /// `P(η_1 ≤ x_d) = exp(Σ_{i≤d} x_i)`.
    pub product_df: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeSource {
    Series,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// Set when the supplied prefix violates `|(1/d) Σ x_i| < log 2`.
    pub warning: Option<String>,
}

/// Monte Carlo used when the series estimate is too loose or fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McFallback {
    pub replications: u64,
    pub seed: u64,
    /// Series results with a larger error estimate fall back to Monte Carlo.
    pub max_series_err: f64,
}

/// Compares `P(η_T ≤ x_d)` with `P(η_1 ≤ x_d)` along a grid of dimensions for
/// standard negative exponential margins.
pub fn asymptotic_ratio_probe(
    x_seq: &dyn Fn(usize) -> f64,
    d_grid: &[u32],
    policy: &SeriesPolicy,
    fallback: Option<McFallback>,
) -> Result<ProbeReport> {
    let mut rows = Vec::with_capacity(d_grid.len());
    let mut warning = None;
    for &d in d_grid {
        let dim = Dimension::multivariate(d)?;
        let x: Vec<f64> = (1..=d as usize).map(x_seq).collect();
        if let Some(bad) = x.iter().find(|v| v.is_nan() || **v > 0.0) {
            return Err(RecordError::InvalidParameter(format!(
                "probe sequence must be nonpositive, got {bad}"
            )));
        }
        let sum: f64 = x.iter().sum();
        if (sum / f64::from(d)).abs() >= std::f64::consts::LN_2 {
            warning = Some(format!(
                "|(1/d) Σ x_i| = {:.4} ≥ log 2 at d = {d}; ratio convergence is not guaranteed",
                (sum / f64::from(d)).abs()
            ));
        }
        let margins = vec![MarginSpec::NegExponential; d as usize];
        let series = terminal_record_df(&x, &margins, policy);
        let use_series = match (&series, fallback) {
            (Ok(est), Some(fb)) => est.err_estimate <= fb.max_series_err,
            (Ok(_), None) => true,
            (Err(_), Some(_)) => false,
            (Err(e), None) => return Err(e.clone()),
        };
        let (df, unc, source) = if use_series {
            let est = series.unwrap();
            (est.value, est.err_estimate, ProbeSource::Series)
        } else {
            let fb = fallback.expect("fallback checked above");
            let cfg = crate::simulate::SimConfig::new(dim, margins, fb.replications, fb.seed)?;
            let summary = crate::simulate::simulate(&cfg, &[])?;
            let p = summary.terminal_df(&x);
            let se = (p * (1.0 - p) / fb.replications as f64).sqrt();
            (p, se, ProbeSource::MonteCarlo)
        };
        let product_df = sum.exp();
        rows.push(ProbeRow {
            d,
            terminal_df: df,
            uncertainty: unc,
            source,
            product_df,
            ratio: df / product_df,
        });
    }
    Ok(ProbeReport { rows, warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_term_examples() {
        let a = a_term(3, &[], 0.5).unwrap();
        assert!((a - 0.125 / 3.0).abs() < 1e-16);
        for k in 1..8u64 {
            let a = a_term(k, &[k + 1], 1.0).unwrap();
            assert!((a - 1.0 / (k * (k + 1)) as f64).abs() < 1e-16);
        }
    }

    #[test]
    fn a_term_validation() {
        assert!(a_term(3, &[3], 0.5).is_err());
        assert!(a_term(3, &[5, 4], 0.5).is_err());
        assert!(a_term(3, &[4], 1.5).is_err());
        assert!(a_term(0, &[], 0.5).is_err());
    }

    #[test]
    fn a_term_matches_rational() {
        use crate::exact::rational;
        use num_traits::ToPrimitive;
        let u = rational::int(7) / rational::int(10);
        for (k, later) in [(2u64, vec![3u64, 5]), (1, vec![2, 3, 4]), (4, vec![9])] {
            let exact = rational::a_term(k, &later, &u).unwrap().to_f64().unwrap();
            assert!((a_term(k, &later, 0.7).unwrap() - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn statement_factor_at_one() {
        // Σ_{r∈K'} 1/(r ∏(s - r)) already equals 1/∏ r, so the extra
        // "+1/∏ r" of the closed-form statement is the u > z branch, which
        // is empty at z = 1.
        for (k, later) in [(1u64, vec![2u64]), (2, vec![3, 5]), (3, vec![4, 6, 9])] {
            let prod: f64 = std::iter::once(k)
                .chain(later.iter().copied())
                .map(|r| r as f64)
                .product();
            let sum_part = a_term(k, &later, 1.0).unwrap();
            let statement = sum_part + 1.0 / prod;
            assert!((sum_part - 1.0 / prod).abs() < 1e-15);
            assert!((statement - 2.0 / prod).abs() < 1e-15);
        }
    }

    #[test]
    fn conditional_df() {
        assert_eq!(conditional_record_df(1, 0.0).unwrap(), 1.0);
        assert!(
            (conditional_record_df(3, -1.0).unwrap() - 0.049_787_068_367_863_944).abs() < 1e-15
        );
        assert!((conditional_record_df(2, -0.5).unwrap() - (-1.0f64).exp()).abs() < 1e-16);
        assert!(conditional_record_df(2, 0.1).is_err());
    }

    #[test]
    fn combinations_in_lex_order() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut n = 0;
        for_each_combination(5, 5, |_| n += 1);
        assert_eq!(n, 1);
        for_each_combination(3, 4, |_| panic!("no 4-subsets of 3"));
    }

    /// Σ_{K ⊆ {k+1..k+M}} (-1)^{|K|} ∏_i a(k, K, u_i), all sizes.
    fn enumerated_window(k: u64, u: &[f64], m: u64) -> f64 {
        let policy = SeriesPolicy {
            window: m,
            max_subset_size: m as usize,
            ..SeriesPolicy::default()
        };
        let d = u.len() as i32;
        let head = u.iter().map(|p| p.powi(k as i32)).product::<f64>() / (k as f64).powi(d);
        enumerate_k(k, u, &policy, head, 0.0).value
    }

    #[test]
    fn resummed_window_matches_enumeration() {
        for (u, k, m) in [
            ([0.3, 0.3], 1u64, 6u64),
            ([0.5, 0.8], 2, 7),
            ([0.9, 0.9], 1, 8),
            ([1.0, 0.7], 3, 6),
            ([1.0, 1.0], 2, 5),
            ([0.95, 0.2], 4, 9),
        ] {
            let mut r = ResummedD2::with_free_products(u, [m, m], WindowFreeProducts { window: m });
            let resummed = r.term(k).value;
            let enumerated = enumerated_window(k, &u, m);
            assert!(
                (resummed - enumerated).abs() < 1e-14,
                "u={u:?} k={k} m={m}: {resummed} vs {enumerated}"
            );
        }
    }

    #[test]
    fn free_product_table_matches_direct() {
        let mut table = InfiniteFreeProducts::new(-40, 1);
        for delta in [0u64, 1, 2, 7, 30] {
            for a in [-40i64, -13, -1, 0, 1] {
                let t = table.get(a, delta);
                let direct = direct_free_product(a, delta);
                assert!(
                    (t - direct).abs() < 1e-13,
                    "a={a} δ={delta}: {t} vs {direct}"
                );
                assert!((0.0..=FREE_PRODUCT_MAX).contains(&t));
            }
        }
        // ∏_{t≥a}(1 - 1/t²) = (a-1)/a
        let mut high = InfiniteFreeProducts::new(2, 50);
        for a in [2i64, 9, 50] {
            let g = high.get(a, 0);
            assert!((g - (a - 1) as f64 / a as f64).abs() < 1e-14, "a={a}: {g}");
        }
    }

    #[test]
    fn saturated_point_gives_terminal_pmf() {
        let mut r = ResummedD2::new([1.0, 1.0], &SeriesPolicy::default());
        for k in 1..20u64 {
            let p = r.term(k).value;
            assert!((p - 1.0 / (k * (k + 1)) as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn df_at_upper_endpoint_is_one() {
        let policy = SeriesPolicy {
            k_max: 400_000,
            ..SeriesPolicy::default()
        };
        let est = terminal_record_df_u(&[1.0, 1.0], &policy).unwrap();
        assert!((est.value - 1.0).abs() <= est.err_estimate);
        assert!(est.err_estimate < 1e-4);
    }

    #[test]
    fn not_converged_reports_partial_value() {
        let policy = SeriesPolicy {
            k_max: 10,
            ..SeriesPolicy::default()
        };
        match terminal_record_df_u(&[1.0, 1.0], &policy) {
            Err(RecordError::NotConverged {
                value, k_reached, ..
            }) => {
                assert_eq!(k_reached, 10);
                assert!((value - 10.0 / 11.0).abs() < 1e-12);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn zero_coordinate_gives_zero() {
        let est = terminal_record_df_u(&[0.0, 0.5], &SeriesPolicy::default()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn method_resolution() {
        let d3 = Dimension::new(3).unwrap();
        assert_eq!(KSumMethod::Auto.resolve(d3).unwrap(), KSumMethod::Enumerate);
        assert!(KSumMethod::Resummed.resolve(d3).is_err());
        let policy = SeriesPolicy {
            method: KSumMethod::Resummed,
            ..SeriesPolicy::default()
        };
        assert!(terminal_record_df_u(&[0.5, 0.5, 0.5], &policy).is_err());
    }

    #[test]
    fn point_validation() {
        assert!(EvaluationPoint::from_probabilities(vec![0.5]).is_err());
        assert!(EvaluationPoint::from_probabilities(vec![0.5, 1.2]).is_err());
        assert!(EvaluationPoint::new(vec![-0.1, -0.2], &[MarginSpec::NegExponential]).is_err());
        let p = EvaluationPoint::new(
            vec![-1.0, 0.5],
            &[MarginSpec::NegExponential, MarginSpec::Uniform],
        )
        .unwrap();
        assert!((p.u[0] - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(p.u[1], 0.5);
    }
}
