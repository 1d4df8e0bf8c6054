// Ratio P(η_T ≤ x) / P(η_1 ≤ x) along growing dimension for standard
// negative exponential margins.

use complete_records::terminal::{asymptotic_ratio_probe, McFallback, ProbeReport, SeriesPolicy};
use complete_records::Result;

pub fn run_example() -> Result<(ProbeReport, ProbeReport)> {
    let policy = SeriesPolicy::default();
    let fallback = Some(McFallback {
        replications: 20_000,
        seed: 3,
        max_series_err: 1e-3,
    });
    let constant = asymptotic_ratio_probe(&|_| -0.1, &[2, 3, 4, 6, 8], &policy, fallback)?;
    let geometric =
        asymptotic_ratio_probe(&|i| -(0.5f64).powi(i as i32), &[2, 4, 8], &policy, fallback)?;
    Ok((constant, geometric))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let (constant, geometric) = run_example()?;
    for (name, report) in [("x_i = -0.1", constant), ("x_i = -2^-i", geometric)] {
        println!("{name}");
        for r in &report.rows {
            println!(
                "  d={:2} df={:.6} ± {:.1e} ({:?}) product={:.6} ratio={:.6}",
                r.d, r.terminal_df, r.uncertainty, r.source, r.product_df, r.ratio
            );
        }
        if let Some(w) = report.warning {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
