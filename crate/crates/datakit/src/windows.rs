use std::collections::{BTreeMap, HashSet};

use crate::error::DataError;
use crate::records::{DatasetSplit, PeakRecord, SequenceRecord, SplitName};

/// Sliding-window starts per chromosome: `0, stride, 2*stride, ...` while the
/// full window still fits. Chromosomes shorter than the window contribute
/// nothing.
pub fn build_windows(
    chrom_lengths: &BTreeMap<String, u64>,
    window: u64,
    stride: u64,
) -> Vec<(String, u64)> {
    assert!(window > 0 && stride > 0, "window and stride must be positive");
    let mut out = Vec::new();
    for (chrom, length) in chrom_lengths {
        let mut start = 0;
        while start + window <= *length {
            out.push((chrom.clone(), start));
            start += stride;
        }
    }
    out
}

/// A window with its label vector, before sequence extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub chrom: String,
    pub start: u64,
    pub labels: Vec<bool>,
}

/// Labels every window against the peak list and drops windows that bind
/// nothing.
///
/// Peaks below `score_threshold` are ignored. Each retained peak becomes a
/// `window`-length peak-window centered on its midpoint; a genome window is
/// positive for a factor when some peak-window of that factor overlaps it by
/// strictly more than half the window length. Returns the retained windows
/// plus the count of peaks skipped for lying on unknown chromosomes.
pub fn label_windows(
    windows: &[(String, u64)],
    peaks: &[PeakRecord],
    num_labels: usize,
    window: u64,
    score_threshold: f64,
) -> (Vec<LabeledWindow>, usize) {
    let known: HashSet<&str> = windows.iter().map(|(c, _)| c.as_str()).collect();

    // peak-window starts per chromosome, sorted for range lookups
    let mut per_chrom: BTreeMap<&str, Vec<(u64, usize)>> = BTreeMap::new();
    let mut skipped_unknown = 0usize;
    for peak in peaks {
        if peak.score < score_threshold {
            continue;
        }
        if !known.contains(peak.chrom.as_str()) {
            skipped_unknown += 1;
            continue;
        }
        let (pstart, _) = peak.centered_window(window);
        per_chrom.entry(peak.chrom.as_str()).or_default().push((pstart, peak.tf_index));
    }
    for list in per_chrom.values_mut() {
        list.sort_unstable();
    }

    let mut out = Vec::new();
    for (chrom, start) in windows {
        let Some(list) = per_chrom.get(chrom.as_str()) else {
            continue;
        };
        let mut labels = vec![false; num_labels];
        // equal-length windows overlap by more than half exactly when their
        // starts differ by less than half the window
        let lo = start.saturating_sub(window.div_ceil(2).saturating_sub(1));
        let from = list.partition_point(|(s, _)| *s < lo);
        let mut any = false;
        for (pstart, tf) in &list[from..] {
            if *pstart > *start && 2 * (*pstart - *start) >= window {
                break;
            }
            let overlap = overlap_len(*start, start + window, *pstart, pstart + window);
            if 2 * overlap > window {
                labels[*tf] = true;
                any = true;
            }
        }
        if any {
            out.push(LabeledWindow {
                chrom: chrom.clone(),
                start: *start,
                labels,
            });
        }
    }
    (out, skipped_unknown)
}

fn overlap_len(a_start: u64, a_end: u64, b_start: u64, b_end: u64) -> u64 {
    let lo = a_start.max(b_start);
    let hi = a_end.min(b_end);
    hi.saturating_sub(lo)
}

/// Attaches genome sequences to labeled windows.
pub fn attach_sequences(
    labeled: &[LabeledWindow],
    genome: &BTreeMap<String, String>,
    window: u64,
) -> Result<Vec<SequenceRecord>, DataError> {
    let mut out = Vec::with_capacity(labeled.len());
    for lw in labeled {
        let chrom_seq = genome
            .get(&lw.chrom)
            .ok_or_else(|| DataError::Spec(format!("chromosome {} missing from genome", lw.chrom)))?;
        let start = lw.start as usize;
        let end = start + window as usize;
        if end > chrom_seq.len() {
            return Err(DataError::Spec(format!(
                "window [{start}, {end}) exceeds chromosome {} length {}",
                lw.chrom,
                chrom_seq.len()
            )));
        }
        out.push(SequenceRecord {
            chrom: lw.chrom.clone(),
            start: lw.start,
            sequence: chrom_seq[start..end].to_string(),
            labels: lw.labels.clone(),
        });
    }
    Ok(out)
}

/// Partitions records by chromosome membership; anything outside the valid
/// and test sets trains. A leading `chr` prefix is ignored when matching.
pub fn split_by_chromosome(
    records: Vec<SequenceRecord>,
    valid_set: &[&str],
    test_set: &[&str],
) -> DatasetSplit {
    let normalize = |c: &str| c.strip_prefix("chr").unwrap_or(c).to_string();
    let valid: HashSet<String> = valid_set.iter().map(|c| normalize(c)).collect();
    let test: HashSet<String> = test_set.iter().map(|c| normalize(c)).collect();

    let mut split = DatasetSplit::default();
    for record in records {
        let key = normalize(&record.chrom);
        let name = if valid.contains(&key) {
            SplitName::Valid
        } else if test.contains(&key) {
            SplitName::Test
        } else {
            SplitName::Train
        };
        split.assignment.insert(record.chrom.clone(), name.as_str());
        match name {
            SplitName::Train => split.train.push(record),
            SplitName::Valid => split.valid.push(record),
            SplitName::Test => split.test.push(record),
        }
    }
    split
}

/// The paper's chromosome assignment.
pub const DEFAULT_VALID_CHROMS: [&str; 3] = ["1", "8", "21"];
pub const DEFAULT_TEST_CHROMS: [&str; 3] = ["3", "12", "17"];
