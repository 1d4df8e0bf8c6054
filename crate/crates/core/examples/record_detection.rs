// Finds the complete records of a short hand-written sequence.

use complete_records::record::{scan_timeline, RecordTimeline};
use complete_records::{Dimension, Result, VectorSequence};

pub fn run_example() -> Result<RecordTimeline> {
    let dim = Dimension::new(2)?;
    let rows = [
        [0.2, 0.9],
        [0.5, 0.95],
        [0.6, 0.1],
        [0.7, 0.97],
        [0.7, 0.99],
        [0.8, 0.991],
    ];
    let seq = VectorSequence::from_rows(dim, &rows)?;
    scan_timeline(&seq)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let timeline = run_example()?;
    println!("records at {:?}", timeline.record_indices);
    println!("terminal so far: {:?}", timeline.last_record());
    println!("chance of a later record <= {:.3}", timeline.tail_risk);
    Ok(())
}
