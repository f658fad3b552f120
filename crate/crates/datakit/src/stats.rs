use crate::records::{DatasetSplit, SequenceRecord};

/// Summary of one split: totals, co-binding counts, and per-label positives.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStats {
    pub total: usize,
    /// Samples with more than one factor bound.
    pub co_binding: usize,
    pub mean_positives: f64,
    pub per_label_positives: Vec<usize>,
}

impl SplitStats {
    pub fn co_binding_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.co_binding as f64 / self.total as f64
        }
    }

    pub fn per_label_rates(&self) -> Vec<f64> {
        self.per_label_positives
            .iter()
            .map(|c| {
                if self.total == 0 {
                    0.0
                } else {
                    *c as f64 / self.total as f64
                }
            })
            .collect()
    }
}

/// Counts per-record and per-label positives over one record list.
pub fn dataset_stats(records: &[SequenceRecord], num_labels: usize) -> SplitStats {
    let mut per_label = vec![0usize; num_labels];
    let mut co_binding = 0usize;
    let mut positive_total = 0usize;
    for r in records {
        let n = r.num_positive();
        positive_total += n;
        if n > 1 {
            co_binding += 1;
        }
        for (i, p) in r.labels.iter().enumerate() {
            if *p {
                per_label[i] += 1;
            }
        }
    }
    SplitStats {
        total: records.len(),
        co_binding,
        mean_positives: if records.is_empty() {
            0.0
        } else {
            positive_total as f64 / records.len() as f64
        },
        per_label_positives: per_label,
    }
}

/// Tab-separated summary table over all three splits, one row per split.
pub fn stats_table(split: &DatasetSplit, num_labels: usize) -> String {
    let mut out = String::from("split\ttotal\tco_binding\tmean_positives\n");
    for (name, records) in [
        ("train", &split.train),
        ("valid", &split.valid),
        ("test", &split.test),
    ] {
        let s = dataset_stats(records, num_labels);
        out.push_str(&format!(
            "{name}\t{}\t{}\t{:.4}\n",
            s.total, s.co_binding, s.mean_positives
        ));
    }
    out
}
