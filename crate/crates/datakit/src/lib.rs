//! Dataset construction for multi-label binding-site prediction: genomic
//! windowing and labeling from peak files, one-hot encoding, chromosome
//! splits, deterministic batching, and a synthetic planted-motif generator
//! with explicit co-binding structure for desk-scale verification.

mod batch;
mod encode;
mod error;
pub mod files;
mod records;
mod stats;
mod synth;
mod windows;

pub use batch::{batch_iter, Batch, BatchIter};
pub use encode::one_hot_encode;
pub use error::DataError;
pub use records::{DatasetSplit, PeakRecord, SequenceRecord, SplitName};
pub use stats::{dataset_stats, stats_table, SplitStats};
pub use synth::{synth_generate, CoBindingGroup, ConditionalPair, SynthSpec};
pub use windows::{
    attach_sequences, build_windows, label_windows, split_by_chromosome, LabeledWindow,
    DEFAULT_TEST_CHROMS, DEFAULT_VALID_CHROMS,
};
