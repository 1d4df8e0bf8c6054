//! Small numerical kernels shared by the exact evaluators: compensated
//! summation, the Hurwitz zeta function with an Euler–Maclaurin remainder
//! bound, and harmonic numbers.

use std::ops::AddAssign;

/// Kahan–Babuška–Neumaier running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// A value together with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub err: f64,
}

// B_2, B_4, ..., B_22
const BERNOULLI_EVEN: [f64; 11] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
];

const EM_SHIFT: f64 = 10.0;

/// Hurwitz zeta `ζ(s, a) = Σ_{n≥0} (a+n)^{-s}` for `s > 1`, `a > 0`.
///
/// Sums directly until the argument reaches 10, then applies Euler–Maclaurin
/// with ten Bernoulli corrections. The reported error is the magnitude of the
/// first omitted correction, which bounds the remainder for `x^{-s}`.
pub fn hurwitz_zeta(s: f64, a: f64) -> Bounded {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    let mut direct = NeumaierSum::new();
    let mut b = a;
    while b < EM_SHIFT {
        direct.add(b.powf(-s));
        b += 1.0;
    }
    let b_s = b.powf(-s);
    direct.add(b * b_s / (s - 1.0));
    direct.add(0.5 * b_s);

    // coefficient (s)_{2j-1} / (2j)! * b^{-s-2j+1}, starting at j = 1
    let mut coef = s * b_s / (2.0 * b);
    let p = BERNOULLI_EVEN.len() - 1;
    for (j, bern) in BERNOULLI_EVEN.iter().take(p).enumerate() {
        direct.add(bern * coef);
        let jj = (j + 1) as f64;
        coef *=
            (s + 2.0 * jj - 1.0) * (s + 2.0 * jj) / ((2.0 * jj + 1.0) * (2.0 * jj + 2.0) * b * b);
    }
    let err = (BERNOULLI_EVEN[p] * coef).abs();
    Bounded {
        value: direct.value(),
        err,
    }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Harmonic number `H_n`, exact summation for small `n`, asymptotic otherwise.
pub fn harmonic(n: u64) -> f64 {
    if n < 64 {
        return (1..=n)
            .map(|i| 1.0 / i as f64)
            .collect::<NeumaierSum>()
            .value();
    }
    let x = n as f64;
    let x2 = x * x;
    x.ln() + EULER_GAMMA + 0.5 / x - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2)
        - 1.0 / (252.0 * x2 * x2 * x2)
}

/// `m^{-d}` as a float.
#[inline]
pub fn inv_pow(m: u64, d: u32) -> f64 {
    (m as f64).powi(-(d as i32))
}
