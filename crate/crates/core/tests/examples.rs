//! Runs every example and checks what it computes.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }
    };
}

example!(record_detection);
example!(terminal_pmf);
example!(record_times);
example!(markov_kernel);
example!(terminal_df);
example!(simulate);
example!(compare);
example!(asymptotic_probe);
example!(margins);

use complete_records::exact::{ExpectedTerminalIndex, State};
use complete_records::terminal::KSumMethod;

#[test]
fn record_detection_example() {
    let t = record_detection::run_example().unwrap();
    assert_eq!(t.record_indices, vec![1, 2, 4, 6]);
    assert_eq!(t.nth_record(3), Some(4));
}

#[test]
fn terminal_pmf_example() {
    let rows = terminal_pmf::run_example().unwrap();
    assert_eq!(rows.len(), 4);
    let (d, pmf, mean) = &rows[0];
    assert_eq!(*d, 2);
    assert!((pmf.mass(1).unwrap() - 0.5).abs() < 1e-15);
    assert!(matches!(mean, ExpectedTerminalIndex::Diverges(_)));
    for (_, _, mean) in &rows[1..] {
        assert!(matches!(mean, ExpectedTerminalIndex::Finite { .. }));
    }
}

#[test]
fn record_times_example() {
    let (r2, r3, exact) = record_times::run_example().unwrap();
    assert!((r2.mass(2).unwrap() - 0.25).abs() < 1e-16);
    assert!((r3.mass(3).unwrap() - 1.0 / 36.0).abs() < 1e-16);
    assert_eq!(exact.to_string(), "21/1600");
}

#[test]
fn markov_kernel_example() {
    let (row, sums) = markov_kernel::run_example().unwrap();
    assert_eq!(row.first().unwrap().0, State::Finite(5));
    let (last, p_inf) = *row.last().unwrap();
    assert_eq!(last, State::Infinite);
    assert!((p_inf - 0.8).abs() < 1e-14);
    assert!(sums.iter().all(|s| (s.value - 1.0).abs() <= 1e-10));
}

#[test]
fn terminal_df_example() {
    let rows = terminal_df::run_example().unwrap();
    assert_eq!(rows[0].1.method, KSumMethod::Resummed);
    assert_eq!(rows[3].1.method, KSumMethod::Enumerate);
    let (resummed, windowed) = (rows[2].1, rows[3].1);
    assert!((resummed.value - windowed.value).abs() <= windowed.err_estimate);
    let d10 = rows[4].1;
    assert!((d10.value - (-0.5f64).exp()).abs() < 1e-2);
    assert!(d10.value < (-0.5f64).exp());
}

#[test]
fn simulate_example() {
    let s = simulate::run_example().unwrap();
    assert_eq!(s.t_counts.total(), 20_000);
    assert!((s.t_counts.frequency(1) - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
}

#[test]
fn compare_example() {
    let out = compare::run_example().unwrap();
    assert_eq!(out.flagged, 0);
    assert!(out
        .text
        .contains("\nquantity,key,exact,err_bound,empirical,se,z,flag\n"));
}

#[test]
fn asymptotic_probe_example() {
    let (constant, geometric) = asymptotic_probe::run_example().unwrap();
    assert!(constant.warning.is_none());
    let last = constant.rows.last().unwrap();
    assert!(last.ratio > 0.99 && last.ratio <= 1.0 + 1e-9);
    let g8 = geometric.rows.last().unwrap();
    assert!((g8.terminal_df - (-1.0f64).exp()).abs() < 0.01);
}

#[test]
fn margins_example() {
    let rows = margins::run_example().unwrap();
    assert_eq!(rows[0].1[1], 0.37);
    assert!((rows[1].1[2] - 0.5f64.ln()).abs() < 1e-16);
    assert!(rows[2].1.windows(2).all(|w| w[0] < w[1]));
}
