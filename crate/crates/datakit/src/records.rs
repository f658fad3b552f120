use std::collections::BTreeMap;

use crate::error::DataError;

/// One ChIP-seq peak: a half-open genomic interval for one transcription
/// factor with its significance score.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakRecord {
    pub tf_index: usize,
    pub chrom: String,
    pub start: u64,
    pub end: u64,
    pub score: f64,
}

impl PeakRecord {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.start >= self.end {
            return Err(DataError::Spec(format!(
                "peak interval [{}, {}) is empty or reversed",
                self.start, self.end
            )));
        }
        if !self.score.is_finite() {
            return Err(DataError::Spec("peak score must be finite".into()));
        }
        Ok(())
    }

    /// Fixed-length window centered on the interval midpoint (midpoint and
    /// window start round down; the start saturates at zero).
    pub fn centered_window(&self, window: u64) -> (u64, u64) {
        let mid = (self.start + self.end) / 2;
        let start = mid.saturating_sub(window / 2);
        (start, start + window)
    }
}

/// A labeled genomic window: the raw sequence and one binary label per
/// transcription factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecord {
    pub chrom: String,
    pub start: u64,
    pub sequence: String,
    pub labels: Vec<bool>,
}

impl SequenceRecord {
    pub fn positives(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.then_some(i))
            .collect()
    }

    pub fn num_positive(&self) -> usize {
        self.labels.iter().filter(|p| **p).count()
    }

    /// Label vector as 0/1 floats for the loss functions.
    pub fn label_floats<F: autodiff::Element>(&self) -> Vec<F> {
        self.labels
            .iter()
            .map(|p| if *p { F::one() } else { F::zero() })
            .collect()
    }
}

/// Which split a chromosome belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Valid => "valid",
            SplitName::Test => "test",
        }
    }
}

/// Train/valid/test record lists plus the chromosome assignment that
/// produced them.
#[derive(Debug, Clone, Default)]
pub struct DatasetSplit {
    pub train: Vec<SequenceRecord>,
    pub valid: Vec<SequenceRecord>,
    pub test: Vec<SequenceRecord>,
    pub assignment: BTreeMap<String, &'static str>,
}

impl DatasetSplit {
    pub fn part(&self, name: SplitName) -> &[SequenceRecord] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Valid => &self.valid,
            SplitName::Test => &self.test,
        }
    }
}
