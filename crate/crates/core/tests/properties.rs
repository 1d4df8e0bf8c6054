use complete_records::exact::{
    self, poisson_binomial_pmf, rational, State, TransitionQuery, TruncationPolicy,
};
use complete_records::record::{is_complete_record, scan_timeline};
use complete_records::simulate::{simulate, SimConfig};
use complete_records::terminal::{a_term, terminal_record_df_u, KSumMethod, SeriesPolicy};
use complete_records::{Dimension, MarginSpec, VectorSequence};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn dim(d: u32) -> Dimension {
    Dimension::new(d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn timeline_matches_pointwise_check(
        d in 1u32..4,
        raw in prop::collection::vec(0u8..6, 1..120),
    ) {
        // small integer alphabet so that ties actually occur
        let width = d as usize;
        let rows: Vec<Vec<f64>> = raw.chunks_exact(width).map(|c| c.iter().map(|&v| f64::from(v)).collect()).collect();
        prop_assume!(!rows.is_empty());
        let seq = VectorSequence::from_rows(dim(d), &rows).unwrap();
        let timeline = scan_timeline(&seq).unwrap();
        let expected: Vec<u64> = (1..=seq.len())
            .filter(|&m| is_complete_record(&seq, m).unwrap())
            .map(|m| m as u64)
            .collect();
        prop_assert_eq!(&timeline.record_indices, &expected);
        prop_assert_eq!(timeline.record_indices[0], 1);
        prop_assert!(timeline.record_indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn poisson_binomial_is_a_distribution(probs in prop::collection::vec(0.0f64..=1.0, 0..40)) {
        let pmf = poisson_binomial_pmf(&probs, probs.len());
        let total: f64 = pmf.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(pmf.iter().all(|&p| p >= -1e-300));
        let mean: f64 = pmf.iter().enumerate().map(|(c, p)| c as f64 * p).sum();
        prop_assert!((mean - probs.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn record_time_float_matches_rational(d in 2u32..5, n in 1u64..6, extra in 0u64..25) {
        let k = n + extra;
        let float = exact::record_time_pmf(dim(d), n, k).unwrap();
        let exact = rational::record_time_pmf(dim(d), n, k).unwrap().to_f64().unwrap();
        prop_assert!((float - exact).abs() <= 1e-15 * exact.max(1e-300) + 1e-300);
    }

    #[test]
    fn a_term_bounded_and_monotone(
        k in 1u64..6,
        offsets in prop::collection::btree_set(1u64..8, 0..4),
        u in 0.0f64..1.0,
        du in 0.0f64..0.5,
    ) {
        let later: Vec<u64> = offsets.iter().map(|o| k + o).collect();
        let lo = a_term(k, &later, u).unwrap();
        let hi = a_term(k, &later, (u + du).min(1.0)).unwrap();
        let single = u.powi(k as i32) / k as f64;
        prop_assert!(lo >= -1e-15);
        prop_assert!(lo <= single + 1e-15);
        prop_assert!(hi >= lo - 1e-15);
    }

    #[test]
    fn kernel_rows_never_exceed_one(d in 2u32..5, j in 1u64..30, span in 1u64..40) {
        let policy = TruncationPolicy::default();
        let n = 2;
        let mut total = 0.0;
        for k in j + 1..=j + span {
            let q = TransitionQuery::new(n, State::Finite(j.max(n - 1)), State::Finite(k)).unwrap();
            total += exact::transition_probability(dim(d), &q, &policy).unwrap();
        }
        let q = TransitionQuery::new(n, State::Finite(j), State::Infinite).unwrap();
        total += exact::transition_probability(dim(d), &q, &policy).unwrap();
        prop_assert!(total <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn terminal_df_monotone_in_each_coordinate(
        u1 in 0.05f64..0.9,
        u2 in 0.05f64..0.9,
        step in 0.01f64..0.1,
    ) {
        let policy = SeriesPolicy::default();
        let base = terminal_record_df_u(&[u1, u2], &policy).unwrap();
        let up1 = terminal_record_df_u(&[u1 + step, u2], &policy).unwrap();
        let up2 = terminal_record_df_u(&[u1, u2 + step], &policy).unwrap();
        let slack = base.err_estimate + up1.err_estimate.max(up2.err_estimate);
        prop_assert!(up1.value >= base.value - slack);
        prop_assert!(up2.value >= base.value - slack);
        prop_assert!((0.0..=1.0 + base.err_estimate).contains(&base.value));
        // symmetric in the components for uniform margins
        let swapped = terminal_record_df_u(&[u2, u1], &policy).unwrap();
        prop_assert!((swapped.value - base.value).abs() <= 1e-12);
    }
}

#[test]
fn windowed_enumeration_error_covers_resummed_value() {
    let windowed = SeriesPolicy {
        method: KSumMethod::Enumerate,
        ..SeriesPolicy::default()
    };
    for u in [[0.2, 0.6], [0.5, 0.5], [0.7, 0.95], [0.9, 0.9]] {
        let r = terminal_record_df_u(&u, &SeriesPolicy::default()).unwrap();
        let e = terminal_record_df_u(&u, &windowed).unwrap();
        assert!(
            (r.value - e.value).abs() <= e.err_estimate,
            "u={u:?}: {} vs {} ± {}",
            r.value,
            e.value,
            e.err_estimate
        );
        assert!(e.value >= r.value - r.err_estimate);
    }
}

#[test]
fn higher_dimensional_series_agrees_with_monte_carlo() {
    for (d, level) in [(3u32, 0.8), (4, 0.9)] {
        let cfg = SimConfig::iid(dim(d), MarginSpec::Uniform, 100_000, 99).unwrap();
        let summary = simulate(&cfg, &[]).unwrap();
        let u = vec![level; d as usize];
        let est = terminal_record_df_u(&u, &SeriesPolicy::default()).unwrap();
        let emp = summary.terminal_df(&u);
        let se = (est.value * (1.0 - est.value) / 100_000.0).sqrt();
        assert!(
            (emp - est.value).abs() <= 3.0 * se + est.err_estimate,
            "d={d}: series {} ± {}, empirical {emp}",
            est.value,
            est.err_estimate
        );
    }
}

#[test]
fn simulated_record_count_matches_expectation() {
    let cfg = SimConfig::iid(dim(3), MarginSpec::NegExponential, 50_000, 4).unwrap();
    let summary = simulate(&cfg, &[2]).unwrap();
    let expected: f64 = (1..=cfg.horizon).map(|m| (m as f64).powi(-3)).sum();
    let (mean, se) = summary.record_count_counts.mean_and_se();
    assert!((mean - expected).abs() <= 3.0 * se);
    assert!(summary.miss_count as f64 / 50_000.0 <= cfg.miss_risk.max(1.0 / 50_000.0));
    let p = summary.r_n_counts[&2].frequency(2);
    assert!((p - 0.125).abs() <= 3.0 * (0.125f64 * 0.875 / 50_000.0).sqrt());
}
