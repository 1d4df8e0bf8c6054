// Distribution function of the terminal complete record X_T.

use complete_records::terminal::{
    terminal_record_df, terminal_record_df_u, DfEstimate, KSumMethod, SeriesPolicy,
};
use complete_records::{MarginSpec, Result};

pub fn run_example() -> Result<Vec<(String, DfEstimate)>> {
    let policy = SeriesPolicy::default();
    let mut out = Vec::new();
    for u in [[0.3, 0.3], [0.5, 0.8], [0.9, 0.9]] {
        out.push((
            format!("uniform u={u:?}"),
            terminal_record_df_u(&u, &policy)?,
        ));
    }
    // the windowed subset enumeration, for comparison
    let windowed = SeriesPolicy {
        method: KSumMethod::Enumerate,
        ..policy
    };
    out.push((
        "windowed u=[0.9, 0.9]".into(),
        terminal_record_df_u(&[0.9, 0.9], &windowed)?,
    ));

    let x = [-0.05; 10];
    let margins = vec![MarginSpec::NegExponential; 10];
    out.push((
        "exponential d=10, sum x = -0.5".into(),
        terminal_record_df(&x, &margins, &policy)?,
    ));
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    for (label, est) in run_example()? {
        println!(
            "{label:32} {:.10} ± {:.1e} ({}, {} terms)",
            est.value, est.err_estimate, est.method, est.k_terms
        );
    }
    println!("exp(-0.5) = {:.10}", (-0.5f64).exp());
    Ok(())
}
