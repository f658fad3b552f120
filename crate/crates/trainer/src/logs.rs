use std::fs;
use std::path::Path;

use crate::error::TrainError;

/// One per-epoch, per-split log row (the per-epoch curve source).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    pub mean_auroc: f64,
    pub mean_aupr: f64,
    pub mean_recall_fdr50: f64,
    pub seconds: f64,
}

pub const EPOCH_LOG_HEADER: &str = "epoch,split,loss,mean_auroc,mean_aupr,mean_recall_fdr50,seconds";

/// Writes the comma-separated epoch log with its required header.
pub fn write_epoch_logs(path: &Path, logs: &[EpochLog]) -> Result<(), TrainError> {
    let mut text = String::from(EPOCH_LOG_HEADER);
    text.push('\n');
    for row in logs {
        text.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.3}\n",
            row.epoch, row.split, row.loss, row.mean_auroc, row.mean_aupr, row.mean_recall_fdr50, row.seconds
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Reads an epoch log back (used by tooling and tests).
pub fn read_epoch_logs(path: &Path) -> Result<Vec<EpochLog>, TrainError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == EPOCH_LOG_HEADER => {}
        other => {
            return Err(TrainError::Config(format!(
                "epoch log header missing or wrong: {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(TrainError::Config(format!(
                "epoch log line {}: expected 7 fields, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64, TrainError> {
            s.parse()
                .map_err(|_| TrainError::Config(format!("epoch log line {}: bad number {s:?}", lineno + 2)))
        };
        out.push(EpochLog {
            epoch: fields[0]
                .parse()
                .map_err(|_| TrainError::Config(format!("bad epoch {:?}", fields[0])))?,
            split: fields[1].to_string(),
            loss: num(fields[2])?,
            mean_auroc: num(fields[3])?,
            mean_aupr: num(fields[4])?,
            mean_recall_fdr50: num(fields[5])?,
            seconds: num(fields[6])?,
        });
    }
    Ok(out)
}

/// Best epoch by validation mean auROC; ties resolve to the earliest epoch.
pub fn select_best_epoch(logs: &[EpochLog]) -> Result<usize, TrainError> {
    let mut best: Option<(usize, f64)> = None;
    for row in logs.iter().filter(|r| r.split == "valid") {
        let better = match best {
            None => true,
            Some((_, score)) => row.mean_auroc > score,
        };
        if better {
            best = Some((row.epoch, row.mean_auroc));
        }
    }
    best.map(|(epoch, _)| epoch)
        .ok_or_else(|| TrainError::Config("no validation rows to select from".into()))
}
