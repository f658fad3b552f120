use crate::error::EvalError;
use crate::metrics::{aupr, auroc, recall_at_fdr};

/// The three ranking metrics for one label; `None` marks undefined values
/// (single-class labels), which aggregation excludes and flags.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LabelMetrics {
    pub auroc: Option<f64>,
    pub aupr: Option<f64>,
    pub recall_at_fdr50: Option<f64>,
}

/// Computes all three metrics for one label's scores.
pub fn label_metrics(scores: &[f64], labels: &[bool]) -> LabelMetrics {
    LabelMetrics {
        auroc: auroc(scores, labels),
        aupr: aupr(scores, labels),
        recall_at_fdr50: recall_at_fdr(scores, labels, 0.5),
    }
}

/// Mean/std over the defined labels, plus the percent increase over a
/// baseline mean when one was supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    /// Labels that had a defined value.
    pub defined: usize,
    pub percent_increase: Option<f64>,
}

fn summarize_values(values: &[Option<f64>], baseline_mean: Option<f64>) -> MetricSummary {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    let n = defined.len();
    let mean = if n == 0 { f64::NAN } else { defined.iter().sum::<f64>() / n as f64 };
    let std = if n < 2 {
        0.0
    } else {
        (defined.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let percent_increase = baseline_mean.map(|b| 100.0 * (mean - b) / b);
    MetricSummary {
        mean,
        std,
        defined: n,
        percent_increase,
    }
}

/// Aggregated evaluation results for one model, Table-style.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub model_name: String,
    pub per_label: Vec<LabelMetrics>,
    pub auroc: MetricSummary,
    pub aupr: MetricSummary,
    pub recall_at_fdr50: MetricSummary,
    /// Named subsets (e.g. the ten smallest-sample labels) with their own
    /// three summaries.
    pub subsets: Vec<(String, [MetricSummary; 3])>,
}

/// Aggregates per-label metrics into mean/std and percent increases over an
/// optional baseline report. With per-label sample counts supplied, also
/// summarizes the ten smallest- and ten largest-sample labels.
pub fn summarize(
    model_name: &str,
    per_label: &[LabelMetrics],
    baseline: Option<&MetricReport>,
    sample_counts: Option<&[usize]>,
) -> Result<MetricReport, EvalError> {
    if per_label.is_empty() {
        return Err(EvalError::Input("no per-label metrics to summarize".into()));
    }
    if let Some(base) = baseline {
        if base.per_label.len() != per_label.len() {
            return Err(EvalError::Input(format!(
                "baseline has {} labels, report has {}",
                base.per_label.len(),
                per_label.len()
            )));
        }
    }
    let collect = |f: fn(&LabelMetrics) -> Option<f64>| -> Vec<Option<f64>> {
        per_label.iter().map(f).collect()
    };
    let auroc_summary = summarize_values(&collect(|m| m.auroc), baseline.map(|b| b.auroc.mean));
    let aupr_summary = summarize_values(&collect(|m| m.aupr), baseline.map(|b| b.aupr.mean));
    let recall_summary = summarize_values(
        &collect(|m| m.recall_at_fdr50),
        baseline.map(|b| b.recall_at_fdr50.mean),
    );

    let mut subsets = Vec::new();
    if let Some(counts) = sample_counts {
        if counts.len() != per_label.len() {
            return Err(EvalError::Input("sample counts do not cover every label".into()));
        }
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by_key(|i| counts[*i]);
        let k = 10.min(order.len());
        for (name, indices) in [
            ("smallest10", &order[..k]),
            ("largest10", &order[order.len() - k..]),
        ] {
            let pick = |f: fn(&LabelMetrics) -> Option<f64>| -> Vec<Option<f64>> {
                indices.iter().map(|i| f(&per_label[*i])).collect()
            };
            subsets.push((
                name.to_string(),
                [
                    summarize_values(&pick(|m| m.auroc), None),
                    summarize_values(&pick(|m| m.aupr), None),
                    summarize_values(&pick(|m| m.recall_at_fdr50), None),
                ],
            ));
        }
    }

    Ok(MetricReport {
        model_name: model_name.to_string(),
        per_label: per_label.to_vec(),
        auroc: auroc_summary,
        aupr: aupr_summary,
        recall_at_fdr50: recall_summary,
        subsets,
    })
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "-".to_string(),
    }
}

impl MetricReport {
    /// Tab-separated summary row mirroring the mean/std/percent-increase
    /// column triplets per metric.
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "model\tauroc_mean\tauroc_std\tauroc_pct_increase\taupr_mean\taupr_std\taupr_pct_increase\trecall_fdr50_mean\trecall_fdr50_std\trecall_fdr50_pct_increase\n",
        );
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{}\t{:.4}\t{:.4}\t{}\t{:.4}\t{:.4}\t{}\n",
            self.model_name,
            self.auroc.mean,
            self.auroc.std,
            cell(self.auroc.percent_increase),
            self.aupr.mean,
            self.aupr.std,
            cell(self.aupr.percent_increase),
            self.recall_at_fdr50.mean,
            self.recall_at_fdr50.std,
            cell(self.recall_at_fdr50.percent_increase),
        ));
        for (name, [a, p, r]) in &self.subsets {
            out.push_str(&format!(
                "{}:{}\t{:.4}\t{:.4}\t-\t{:.4}\t{:.4}\t-\t{:.4}\t{:.4}\t-\n",
                self.model_name, name, a.mean, a.std, p.mean, p.std, r.mean, r.std
            ));
        }
        out
    }

    /// Per-label tab-separated detail table.
    pub fn per_label_table(&self) -> String {
        let mut out = String::from("label\tauroc\taupr\trecall_fdr50\n");
        for (i, m) in self.per_label.iter().enumerate() {
            out.push_str(&format!(
                "{i}\t{}\t{}\t{}\n",
                cell(m.auroc),
                cell(m.aupr),
                cell(m.recall_at_fdr50)
            ));
        }
        out
    }
}
