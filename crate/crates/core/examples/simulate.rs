// Monte Carlo histograms of T and R(2); rerunning with the same seed
// reproduces every count.

use complete_records::simulate::{simulate, EmpiricalSummary, SimConfig};
use complete_records::{Dimension, MarginSpec, Result};

pub fn run_example() -> Result<EmpiricalSummary> {
    let cfg = SimConfig::iid(Dimension::new(2)?, MarginSpec::NegExponential, 20_000, 2024)?;
    simulate(&cfg, &[2])
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let s = run_example()?;
    println!(
        "{} replications, horizon {}, miss risk {:.1e}",
        s.replications, s.horizon, s.miss_risk
    );
    for k in 1..=5 {
        println!(
            "P(T={k}) ≈ {:.4}   exact {:.4}",
            s.t_counts.frequency(k),
            1.0 / (k * (k + 1)) as f64
        );
    }
    println!(
        "P(R(2)=2) ≈ {:.4}   exact 0.25",
        s.r_n_counts[&2].frequency(2)
    );
    println!("flagged as possibly non-terminal: {}", s.miss_count);
    Ok(())
}
