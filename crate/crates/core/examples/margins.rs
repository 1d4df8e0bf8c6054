// Inverse-transform sampling through uniform, exponential and custom margins.

use complete_records::{sample_margin, MarginSpec, Result};

pub fn run_example() -> Result<Vec<(String, Vec<f64>)>> {
    let gumbel = MarginSpec::generic(|p: f64| -(-p.ln()).ln());
    let specs = [
        ("uniform", MarginSpec::Uniform),
        ("neg-exponential", MarginSpec::NegExponential),
        ("gumbel", gumbel),
    ];
    let probs = [0.1, 0.37, 0.5, 0.9];
    specs
        .into_iter()
        .map(|(name, spec)| {
            let xs = probs
                .iter()
                .map(|&p| sample_margin(&spec, p))
                .collect::<Result<Vec<_>>>()?;
            Ok((name.to_string(), xs))
        })
        .collect()
}

#[allow(dead_code)]
fn main() -> Result<()> {
    for (name, xs) in run_example()? {
        println!("{name:16} {xs:.4?}");
    }
    Ok(())
}
