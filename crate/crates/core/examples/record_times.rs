// Arrival time R(n) of the n-th complete record, in floats and exactly.

use complete_records::exact::{rational, record_time_distribution, Pmf};
use complete_records::{Dimension, Result};

pub fn run_example() -> Result<(Pmf, Pmf, rational::Rational)> {
    let d2 = Dimension::new(2)?;
    let r2 = record_time_distribution(d2, 2, 12)?;
    let r3 = record_time_distribution(d2, 3, 12)?;
    let exact = rational::record_time_pmf(d2, 3, 5)?;
    Ok((r2, r3, exact))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let (r2, r3, exact) = run_example()?;
    println!(" k   P(R(2)=k)         P(R(3)=k)");
    for k in 3..=12 {
        println!(
            "{k:2}   {:.15}   {:.15}",
            r2.mass(k).unwrap(),
            r3.mass(k).unwrap()
        );
    }
    println!("P(R(3)=5) exactly: {exact}");
    Ok(())
}
