//! Monte Carlo oracle for `T`, `R(n)` and `X_T`.
//!
//! Replication `r` draws from its own ChaCha8 stream (`seed`, stream `r`), so
//! results do not depend on how replications are spread over threads.

use std::collections::BTreeMap;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RecordError, Result};
use crate::margin::{MarginKind, MarginSpec};
use crate::record::{horizon_tail_risk, Dimension};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dim: Dimension,
    pub margins: Vec<MarginSpec>,
    pub replications: u64,
    pub horizon: u64,
    pub seed: u64,
    /// `N^{1-d}/(d-1)`, bounding the chance of a record after the horizon.
    pub miss_risk: f64,
}

/// 3000 for `d = 2`, 1000 otherwise.
pub fn default_horizon(dim: Dimension) -> u64 {
    if dim.get() == 2 {
        3000
    } else {
        1000
    }
}

impl SimConfig {
    pub fn new(
        dim: Dimension,
        margins: Vec<MarginSpec>,
        replications: u64,
        seed: u64,
    ) -> Result<Self> {
        Self::with_horizon(dim, margins, replications, seed, default_horizon(dim))
    }

    pub fn with_horizon(
        dim: Dimension,
        margins: Vec<MarginSpec>,
        replications: u64,
        seed: u64,
        horizon: u64,
    ) -> Result<Self> {
        dim.require_multivariate()?;
        if margins.len() != dim.get() as usize {
            return Err(RecordError::InvalidParameter(format!(
                "{} margins given for d = {dim}",
                margins.len()
            )));
        }
        if replications == 0 || horizon == 0 {
            return Err(RecordError::InvalidParameter(
                "replications and horizon must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            margins,
            replications,
            horizon,
            seed,
            miss_risk: horizon_tail_risk(dim, horizon),
        })
    }

    /// Identical margins in every component.
    pub fn iid(dim: Dimension, margin: MarginSpec, replications: u64, seed: u64) -> Result<Self> {
        Self::new(dim, vec![margin; dim.get() as usize], replications, seed)
    }

    /// Smallest horizon with `N^{1-d}/(d-1) ≤ miss_risk`.
    pub fn with_miss_risk(mut self, miss_risk: f64) -> Result<Self> {
        if !(miss_risk > 0.0 && miss_risk <= 1.0) {
            return Err(RecordError::InvalidParameter(format!(
                "miss_risk must lie in (0, 1], got {miss_risk}"
            )));
        }
        let d = f64::from(self.dim.get());
        let n = (miss_risk * (d - 1.0))
            .powf(-1.0 / (d - 1.0))
            .ceil()
            .max(1.0);
        let mut horizon = n as u64;
        while horizon_tail_risk(self.dim, horizon) > miss_risk {
            horizon += 1;
        }
        self.horizon = horizon;
        self.miss_risk = horizon_tail_risk(self.dim, horizon);
        Ok(self)
    }

    /// First index of the trailing buffer whose records are flagged.
    pub fn buffer_start(&self) -> u64 {
        self.horizon - self.horizon.div_ceil(10) + 1
    }
}

/// Counts over positive integers plus a bucket for "never happened".
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: BTreeMap<u64, u64>,
    pub infinite: u64,
}

impl Histogram {
    pub fn add(&mut self, value: Option<u64>) {
        match value {
            Some(v) => *self.counts.entry(v).or_insert(0) += 1,
            None => self.infinite += 1,
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (&k, &c) in &other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.infinite += other.infinite;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum::<u64>() + self.infinite
    }

    pub fn count(&self, value: u64) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    pub fn frequency(&self, value: u64) -> f64 {
        self.count(value) as f64 / self.total() as f64
    }

    /// Mean and standard error over the finite values.
    pub fn mean_and_se(&self) -> (f64, f64) {
        let n = self.counts.values().sum::<u64>() as f64;
        let mean = self
            .counts
            .iter()
            .map(|(&k, &c)| k as f64 * c as f64)
            .sum::<f64>()
            / n;
        let var = self
            .counts
            .iter()
            .map(|(&k, &c)| (k as f64 - mean).powi(2) * c as f64)
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub schema_version: u32,
    pub dim: Dimension,
    pub margins: Vec<MarginKind>,
    pub replications: u64,
    pub horizon: u64,
    pub seed: u64,
    pub miss_risk: f64,
    pub t_counts: Histogram,
    pub record_count_counts: Histogram,
    /// Keyed by `n`; the infinite bucket holds replications with fewer than
    /// `n` records within the horizon.
    pub r_n_counts: BTreeMap<u64, Histogram>,
    /// `X_T` row-major, one row of `d` values per replication in order.
    pub terminal_values: Vec<f64>,
    /// Replications with a record in the last tenth of the horizon.
    pub miss_count: u64,
}

impl EmpiricalSummary {
    pub fn terminal_value(&self, replication: usize) -> &[f64] {
        let d = self.dim.get() as usize;
        &self.terminal_values[replication * d..(replication + 1) * d]
    }

    /// Fraction of replications with `X_T ≤ x` componentwise.
    pub fn terminal_df(&self, x: &[f64]) -> f64 {
        let d = self.dim.get() as usize;
        let hits = self
            .terminal_values
            .chunks_exact(d)
            .filter(|row| row.iter().zip(x).all(|(v, b)| v <= b))
            .count();
        hits as f64 / self.replications as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub terminal_index: u64,
    pub record_count: u64,
    /// `R(n)` for each requested `n`, `None` when fewer than `n` records occurred.
    pub record_times: Vec<Option<u64>>,
    pub terminal_value: Vec<f64>,
    pub late_record: bool,
}

fn check_requested(requested_n: &[u64]) -> Result<()> {
    if let Some(n) = requested_n.iter().find(|&&n| n < 2) {
        return Err(RecordError::InvalidParameter(format!(
            "requested record numbers must be ≥ 2, got {n}"
        )));
    }
    Ok(())
}

/// Runs replication `index` of `cfg` on its own stream.
pub fn simulate_replication(cfg: &SimConfig, requested_n: &[u64], index: u64) -> Replication {
    let d = cfg.dim.get() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    // strictly increasing quantiles preserve the order of the uniforms
    let compare_raw = cfg
        .margins
        .iter()
        .all(|m| matches!(m, MarginSpec::Uniform | MarginSpec::NegExponential));

    let mut max = vec![f64::NEG_INFINITY; d];
    let mut row = vec![0.0; d];
    let mut last = vec![0.0; d];
    let mut want: Vec<(usize, u64)> = requested_n.iter().copied().enumerate().collect();
    want.sort_by_key(|&(_, n)| n);
    let mut record_times = vec![None; requested_n.len()];
    let mut next_want = 0;
    let mut count = 0u64;
    let mut terminal_index = 0u64;

    for m in 1..=cfg.horizon {
        let mut record = true;
        for i in 0..d {
            let p: f64 = rng.sample(Open01);
            let v = if compare_raw {
                p
            } else {
                cfg.margins[i].quantile_unchecked(p)
            };
            row[i] = v;
            if v > max[i] {
                max[i] = v;
            } else {
                record = false;
            }
        }
        if record || m == 1 {
            count += 1;
            terminal_index = m;
            last.copy_from_slice(&row);
            while next_want < want.len() && want[next_want].1 == count {
                record_times[want[next_want].0] = Some(m);
                next_want += 1;
            }
        }
    }
    let terminal_value = if compare_raw {
        last.iter()
            .zip(&cfg.margins)
            .map(|(&p, margin)| margin.quantile_unchecked(p))
            .collect()
    } else {
        last
    };
    Replication {
        terminal_index,
        record_count: count,
        record_times,
        terminal_value,
        late_record: terminal_index >= cfg.buffer_start(),
    }
}

/// Runs all replications, in parallel, into an [`EmpiricalSummary`].
pub fn simulate(cfg: &SimConfig, requested_n: &[u64]) -> Result<EmpiricalSummary> {
    check_requested(requested_n)?;
    let reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| simulate_replication(cfg, requested_n, r))
        .collect();

    let d = cfg.dim.get() as usize;
    let mut t_counts = Histogram::default();
    let mut record_count_counts = Histogram::default();
    let mut r_n_counts: BTreeMap<u64, Histogram> = requested_n
        .iter()
        .map(|&n| (n, Histogram::default()))
        .collect();
    let mut terminal_values = Vec::with_capacity(reps.len() * d);
    let mut miss_count = 0;
    for rep in &reps {
        t_counts.add(Some(rep.terminal_index));
        record_count_counts.add(Some(rep.record_count));
        for (&n, &time) in requested_n.iter().zip(&rep.record_times) {
            r_n_counts.get_mut(&n).expect("keyed above").add(time);
        }
        terminal_values.extend_from_slice(&rep.terminal_value);
        miss_count += u64::from(rep.late_record);
    }
    Ok(EmpiricalSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        dim: cfg.dim,
        margins: cfg.margins.iter().map(MarginSpec::kind).collect(),
        replications: cfg.replications,
        horizon: cfg.horizon,
        seed: cfg.seed,
        miss_risk: cfg.miss_risk,
        t_counts,
        record_count_counts,
        r_n_counts,
        terminal_values,
        miss_count,
    })
}
