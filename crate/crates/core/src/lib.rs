//! Complete records of iid random vectors with independent continuous
//! components: detection, the exact law of the terminal record index and of
//! record times, the distribution function of the terminal record, and a
//! reproducible Monte Carlo simulator to cross-check them.

pub mod cli;
pub mod error;
pub mod exact;
pub mod margin;
pub mod numeric;
pub mod record;
pub mod simulate;
pub mod terminal;

pub use error::{RecordError, Result};
pub use margin::{sample_margin, MarginKind, MarginSpec};
pub use record::{Dimension, RecordTimeline, VectorSequence};
