use std::fs;
use std::path::Path;

use evalkit::{summarize, LabelMetrics, MetricReport};
use pmn_core::{load_checkpoint, Variant};
use serde::Serialize;
use trainer::score_records;

use crate::dataset_dir::{read_dataset_dir, DatasetDir};
use crate::{runtime, usage, CliError};

#[derive(Serialize)]
struct EvalEcho {
    checkpoint: String,
    data: String,
    split: String,
    precision: String,
    baseline: Option<String>,
}

fn parse_cell(s: &str) -> Result<Option<f64>, CliError> {
    if s == "-" {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| usage(format!("bad metric value {s:?} in baseline table")))
}

/// Reads a per-label table written by a previous eval run.
pub fn read_per_label_table(path: &Path) -> Result<Vec<LabelMetrics>, CliError> {
    let text = fs::read_to_string(path).map_err(usage)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("label\tauroc\taupr\trecall_fdr50") => {}
        other => return Err(usage(format!("unexpected per-label header {other:?}"))),
    }
    let mut out = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(usage(format!("bad per-label line {line:?}")));
        }
        out.push(LabelMetrics {
            auroc: parse_cell(fields[1])?,
            aupr: parse_cell(fields[2])?,
            recall_at_fdr50: parse_cell(fields[3])?,
        });
    }
    Ok(out)
}

/// Scores one split with either a single checkpoint or an assembled
/// single-label suite, returning per-label metrics and positive counts.
fn score_split(
    checkpoint: &Path,
    dataset: &DatasetDir,
    split: &str,
    precision: &str,
) -> Result<(Vec<LabelMetrics>, Vec<usize>, f64), CliError> {
    let records = dataset.part(split)?;
    if records.is_empty() {
        return Err(usage(format!("split {split:?} is empty")));
    }
    let num_labels = dataset.labels.len();
    let mut counts = vec![0usize; num_labels];
    for r in records {
        for (i, p) in r.labels.iter().enumerate() {
            if *p {
                counts[i] += 1;
            }
        }
    }

    if checkpoint.is_dir() {
        // assembled single-label suite: label_<i>/best.pmn per label
        let mut per_label = Vec::with_capacity(num_labels);
        let mut loss_total = 0.0;
        for label in 0..num_labels {
            let path = checkpoint.join(format!("label_{label}")).join("best.pmn");
            let ckpt = load_checkpoint(&path).map_err(usage)?;
            if ckpt.config.variant != Variant::CnnSingle {
                return Err(usage(format!(
                    "{} is not a single-label checkpoint",
                    path.display()
                )));
            }
            if ckpt.config.num_labels != num_labels || ckpt.config.seq_len != records[0].sequence.len() {
                return Err(usage(format!(
                    "checkpoint {} does not match the dataset geometry",
                    path.display()
                )));
            }
            let outputs = match precision {
                "f64" => {
                    let params = ckpt.params_as::<f64>();
                    score_records(&params, &ckpt.config, records, Some(label)).map_err(runtime)?
                }
                _ => score_records(&ckpt.params, &ckpt.config, records, Some(label)).map_err(runtime)?,
            };
            per_label.push(outputs.per_label_metrics()[0]);
            loss_total += outputs.mean_loss;
        }
        return Ok((per_label, counts, loss_total / num_labels as f64));
    }

    let ckpt = load_checkpoint(checkpoint).map_err(usage)?;
    if ckpt.config.num_labels != num_labels {
        return Err(usage(format!(
            "checkpoint has {} labels, dataset has {num_labels}",
            ckpt.config.num_labels
        )));
    }
    if ckpt.config.seq_len != records[0].sequence.len() {
        return Err(usage(format!(
            "checkpoint expects length {}, dataset sequences are {}",
            ckpt.config.seq_len,
            records[0].sequence.len()
        )));
    }
    let outputs = match precision {
        "f64" => {
            let params = ckpt.params_as::<f64>();
            score_records(&params, &ckpt.config, records, None).map_err(runtime)?
        }
        _ => score_records(&ckpt.params, &ckpt.config, records, None).map_err(runtime)?,
    };
    Ok((outputs.per_label_metrics(), counts, outputs.mean_loss))
}

pub fn run(
    checkpoint: &Path,
    data: &Path,
    split: &str,
    baseline: Option<&Path>,
    out: &Path,
    precision: &str,
) -> Result<(), CliError> {
    let dataset = read_dataset_dir(data)?;
    let (per_label, counts, mean_loss) = score_split(checkpoint, &dataset, split, precision)?;

    let baseline_report: Option<MetricReport> = match baseline {
        Some(path) => {
            let base_metrics = read_per_label_table(path)?;
            Some(summarize("baseline", &base_metrics, None, None).map_err(usage)?)
        }
        None => None,
    };
    let report = summarize(
        &checkpoint.display().to_string(),
        &per_label,
        baseline_report.as_ref(),
        Some(&counts),
    )
    .map_err(usage)?;

    fs::create_dir_all(out).map_err(runtime)?;
    fs::write(out.join("summary.tsv"), report.to_table()).map_err(runtime)?;
    fs::write(out.join("per_label.tsv"), report.per_label_table()).map_err(runtime)?;
    let echo = EvalEcho {
        checkpoint: checkpoint.display().to_string(),
        data: data.display().to_string(),
        split: split.to_string(),
        precision: precision.to_string(),
        baseline: baseline.map(|p| p.display().to_string()),
    };
    fs::write(
        out.join("effective_config.toml"),
        toml::to_string_pretty(&echo).map_err(runtime)?,
    )
    .map_err(runtime)?;

    println!(
        "eval[{split}]: mean auROC {:.4}, mean auPR {:.4}, mean recall@FDR50 {:.4}, mean loss {:.4}",
        report.auroc.mean, report.aupr.mean, report.recall_at_fdr50.mean, mean_loss
    );
    Ok(())
}
