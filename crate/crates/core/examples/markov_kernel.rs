// The record times form a Markov chain on {1, 2, ...} ∪ {∞}; this prints
// one row of its kernel and checks that rows sum to one.

use complete_records::exact::{
    tail_product, transition_probability, transition_row_sum, State, TransitionQuery,
    TruncationPolicy,
};
use complete_records::numeric::Bounded;
use complete_records::{Dimension, Result};

type KernelRow = Vec<(State, f64)>;

pub fn run_example() -> Result<(KernelRow, Vec<Bounded>)> {
    let dim = Dimension::new(2)?;
    let policy = TruncationPolicy::default();
    let (n, j) = (3, 4);
    let mut row = Vec::new();
    for k in j + 1..=j + 6 {
        let q = TransitionQuery::new(n, State::Finite(j), State::Finite(k))?;
        row.push((State::Finite(k), transition_probability(dim, &q, &policy)?));
    }
    row.push((State::Infinite, tail_product(dim, j, &policy)?.value));
    let sums = (1..=6)
        .map(|j| transition_row_sum(dim, j, &policy))
        .collect::<Result<_>>()?;
    Ok((row, sums))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let (row, sums) = run_example()?;
    println!("P(R(3) = k | R(2) = 4), d = 2");
    for (k, p) in row {
        println!("  k = {k:>3}: {p:.12}");
    }
    for (j, s) in sums.iter().enumerate() {
        println!("row {} sums to {:.15} ± {:.1e}", j + 1, s.value, s.err);
    }
    Ok(())
}
