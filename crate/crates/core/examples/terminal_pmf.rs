// Law of the terminal record index T for several dimensions, and E(T).

use complete_records::exact::{
    expected_terminal_index, terminal_index_pmf, ExpectedTerminalIndex, Pmf, TruncationPolicy,
};
use complete_records::{Dimension, Result};

pub fn run_example() -> Result<Vec<(u32, Pmf, ExpectedTerminalIndex)>> {
    let policy = TruncationPolicy::default();
    (2..=5)
        .map(|d| {
            let dim = Dimension::new(d)?;
            Ok((
                d,
                terminal_index_pmf(dim, 8, &policy)?,
                expected_terminal_index(dim, &policy)?,
            ))
        })
        .collect()
}

#[allow(dead_code)]
fn main() -> Result<()> {
    for (d, pmf, mean) in run_example()? {
        let head: Vec<String> = pmf
            .iter()
            .take(4)
            .map(|(k, p, _)| format!("p_{k}={p:.6}"))
            .collect();
        println!(
            "d={d}: {} ... tail <= {:.2e}",
            head.join(" "),
            pmf.tail_mass_bound
        );
        match mean {
            ExpectedTerminalIndex::Finite {
                value, err_bound, ..
            } => {
                println!("      E(T) = {value:.12} ± {err_bound:.1e}")
            }
            ExpectedTerminalIndex::Diverges(div) => {
                let k = div.first_cutoff_exceeding(10.0);
                println!("      E(T) = ∞; partial sum passes 10 at K = {k}");
            }
        }
    }
    Ok(())
}
