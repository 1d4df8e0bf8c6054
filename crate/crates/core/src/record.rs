//! Complete-record detection in finite sequences of d-dimensional vectors.
//!
//! Observation `m` is a complete record when every component strictly exceeds
//! the componentwise maximum of observations `1..m`. The first observation is
//! a complete record by definition. Exact ties count as non-records.

use serde::{Deserialize, Serialize};

use crate::error::{RecordError, Result};
use crate::numeric::inv_pow;

/// Number of components of the observed vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dimension(u32);

impl Dimension {
    pub fn new(d: u32) -> Result<Self> {
        if d == 0 {
            return Err(RecordError::Dimension {
                required: 1,
                got: 0,
            });
        }
        Ok(Self(d))
    }

    /// Dimension of at least two, as needed for anything involving the
    /// terminal record.
    pub fn multivariate(d: u32) -> Result<Self> {
        let dim = Self::new(d)?;
        dim.require_multivariate()?;
        Ok(dim)
    }

    pub fn require_multivariate(self) -> Result<()> {
        if self.0 < 2 {
            return Err(RecordError::Dimension {
                required: 2,
                got: self.0,
            });
        }
        Ok(())
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Rows of d-vectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSequence {
    dim: Dimension,
    data: Vec<f64>,
}

impl VectorSequence {
    pub fn new(dim: Dimension) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: Dimension, rows: &[R]) -> Result<Self> {
        let mut seq = Self::new(dim);
        for row in rows {
            seq.push(row.as_ref())?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        let d = self.dim.get() as usize;
        if row.len() != d {
            return Err(RecordError::RowWidth {
                row: self.len(),
                got: row.len(),
                expected: d,
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.get() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row `m`, 1-based.
    pub fn row(&self, m: usize) -> &[f64] {
        let d = self.dim.get() as usize;
        &self.data[(m - 1) * d..m * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.get() as usize)
    }
}

/// Record indices found in a sequence of length `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordTimeline {
    pub dim: Dimension,
    pub horizon: u64,
    pub record_indices: Vec<u64>,
    /// Upper bound on the probability of a complete record after `horizon`.
    pub tail_risk: f64,
}

impl RecordTimeline {
    /// Index of the last observed complete record.
    pub fn last_record(&self) -> Option<u64> {
        self.record_indices.last().copied()
    }

    /// Arrival index of the `n`-th record, if it happened within the horizon.
    pub fn nth_record(&self, n: usize) -> Option<u64> {
        n.checked_sub(1)
            .and_then(|i| self.record_indices.get(i).copied())
    }
}

/// Incrementally maintained componentwise maximum.
#[derive(Debug, Clone)]
pub struct RunningMax {
    max: Vec<f64>,
    seen: u64,
}

impl RunningMax {
    pub fn new(dim: Dimension) -> Self {
        Self {
            max: vec![f64::NEG_INFINITY; dim.get() as usize],
            seen: 0,
        }
    }

    /// Feeds the next row and reports whether it is a complete record.
    #[inline]
    pub fn observe(&mut self, row: &[f64]) -> bool {
        debug_assert_eq!(row.len(), self.max.len());
        let mut record = true;
        for (m, &x) in self.max.iter_mut().zip(row) {
            if x > *m {
                *m = x;
            } else {
                record = false;
            }
        }
        self.seen += 1;
        // the first row is a record even when it contains -inf
        record || self.seen == 1
    }

    pub fn current(&self) -> &[f64] {
        &self.max
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }
}

/// Whether row `m` (1-based) is a complete record.
pub fn is_complete_record(seq: &VectorSequence, m: usize) -> Result<bool> {
    let len = seq.len();
    if m == 0 || m > len {
        return Err(RecordError::IndexOutOfRange {
            index: m as u64,
            len: len as u64,
        });
    }
    if m == 1 {
        return Ok(true);
    }
    let row = seq.row(m);
    let d = row.len();
    let mut max = vec![f64::NEG_INFINITY; d];
    for prev in seq.rows().take(m - 1) {
        for (mx, &x) in max.iter_mut().zip(prev) {
            *mx = mx.max(x);
        }
    }
    Ok(row.iter().zip(&max).all(|(x, mx)| x > mx))
}

/// Bound `N^{1-d}/(d-1)` on a complete record occurring after index `N`;
/// 1 for `d = 1`, where records never stop.
pub fn horizon_tail_risk(dim: Dimension, horizon: u64) -> f64 {
    let d = dim.get();
    if d < 2 || horizon == 0 {
        return 1.0;
    }
    let n = horizon as f64;
    (n.powi(1 - d as i32) / (d - 1) as f64).min(1.0)
}

/// Scans the sequence once, in `O(N·d)`, recording every complete record.
pub fn scan_timeline(seq: &VectorSequence) -> Result<RecordTimeline> {
    if seq.is_empty() {
        return Err(RecordError::EmptySequence);
    }
    let mut running = RunningMax::new(seq.dim());
    let record_indices = seq
        .rows()
        .zip(1u64..)
        .filter_map(|(row, m)| running.observe(row).then_some(m))
        .collect();
    let horizon = seq.len() as u64;
    Ok(RecordTimeline {
        dim: seq.dim(),
        horizon,
        record_indices,
        tail_risk: horizon_tail_risk(seq.dim(), horizon),
    })
}

/// `P(I_m = 1) = m^{-d}`.
pub fn indicator_probability(dim: Dimension, m: u64) -> Result<f64> {
    if m == 0 {
        return Err(RecordError::InvalidParameter(
            "record index m must be ≥ 1".into(),
        ));
    }
    Ok(inv_pow(m, dim.get()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq2(rows: &[[f64; 2]]) -> VectorSequence {
        VectorSequence::from_rows(Dimension::new(2).unwrap(), rows).unwrap()
    }

    #[test]
    fn first_row_is_record() {
        let s = seq2(&[[0.2, 0.9]]);
        assert!(is_complete_record(&s, 1).unwrap());
        assert_eq!(scan_timeline(&s).unwrap().record_indices, vec![1]);
    }

    #[test]
    fn second_component_blocks_record() {
        let s = seq2(&[[0.2, 0.9], [0.5, 0.4]]);
        assert!(!is_complete_record(&s, 2).unwrap());
    }

    #[test]
    fn three_row_example() {
        let s = seq2(&[[0.2, 0.9], [0.5, 0.95], [0.6, 0.1]]);
        assert!(is_complete_record(&s, 2).unwrap());
        assert!(!is_complete_record(&s, 3).unwrap());
        assert_eq!(scan_timeline(&s).unwrap().record_indices, vec![1, 2]);
    }

    #[test]
    fn ties_are_not_records() {
        let s = seq2(&[[0.5, 0.5], [0.5, 0.7]]);
        assert!(!is_complete_record(&s, 2).unwrap());
        assert_eq!(scan_timeline(&s).unwrap().record_indices, vec![1]);
    }

    #[test]
    fn index_errors() {
        let s = seq2(&[[0.2, 0.9]]);
        assert!(matches!(
            is_complete_record(&s, 0),
            Err(RecordError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            is_complete_record(&s, 2),
            Err(RecordError::IndexOutOfRange { index: 2, len: 1 })
        ));
        let empty = VectorSequence::new(Dimension::new(2).unwrap());
        assert_eq!(scan_timeline(&empty), Err(RecordError::EmptySequence));
    }

    #[test]
    fn row_width_checked() {
        let mut s = VectorSequence::new(Dimension::new(3).unwrap());
        assert!(matches!(
            s.push(&[1.0, 2.0]),
            Err(RecordError::RowWidth { .. })
        ));
    }

    #[test]
    fn tail_risk_bound() {
        let d2 = Dimension::new(2).unwrap();
        assert!((horizon_tail_risk(d2, 1000) - 0.001).abs() < 1e-15);
        assert_eq!(horizon_tail_risk(Dimension::new(1).unwrap(), 1000), 1.0);
        let d3 = Dimension::new(3).unwrap();
        assert!((horizon_tail_risk(d3, 100) - 0.5e-4).abs() < 1e-18);
    }

    #[test]
    fn indicator_values() {
        let d2 = Dimension::new(2).unwrap();
        let d3 = Dimension::new(3).unwrap();
        assert_eq!(indicator_probability(d2, 2).unwrap(), 0.25);
        assert_eq!(indicator_probability(d3, 1).unwrap(), 1.0);
        assert!((indicator_probability(d3, 3).unwrap() - 1.0 / 27.0).abs() < 1e-17);
    }

    #[test]
    fn dimension_validation() {
        assert!(Dimension::new(0).is_err());
        assert!(Dimension::new(1).is_ok());
        assert!(Dimension::multivariate(1).is_err());
        assert!(Dimension::multivariate(2).is_ok());
    }
}
