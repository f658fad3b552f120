use autodiff::rng::SplitMix64;
use autodiff::Element;
use datakit::{one_hot_encode, SequenceRecord};
use evalkit::{label_metrics, LabelMetrics};
use pmn_core::{forward, ModelParams, PmnConfig};
use rayon::prelude::*;

use crate::error::TrainError;

/// Scores and bookkeeping from one evaluation pass, per output label.
#[derive(Debug, Clone)]
pub struct EvalOutputs {
    /// `scores[label][record]`.
    pub scores: Vec<Vec<f64>>,
    /// `labels[label][record]`.
    pub labels: Vec<Vec<bool>>,
    /// Mean total loss over records (same objective the trainer minimizes).
    pub mean_loss: f64,
    /// Mean `|w - y|` over labels and records, when attention weights exist.
    pub mean_w_abs_error: Option<f64>,
}

impl EvalOutputs {
    pub fn per_label_metrics(&self) -> Vec<LabelMetrics> {
        self.scores
            .iter()
            .zip(&self.labels)
            .map(|(s, l)| label_metrics(s, l))
            .collect()
    }

    pub fn mean_auroc(&self) -> f64 {
        let defined: Vec<f64> = self
            .per_label_metrics()
            .iter()
            .filter_map(|m| m.auroc)
            .collect();
        if defined.is_empty() {
            f64::NAN
        } else {
            defined.iter().sum::<f64>() / defined.len() as f64
        }
    }
}

/// The value-level counterpart of the training objective, evaluated from
/// extracted outputs: clamped binary cross entropy plus the weighted squared
/// attention mismatch.
pub fn loss_value<F: Element>(y_hat: &[F], w_final: Option<&[F]>, targets: &[F], lambda: f64) -> f64 {
    let lo = 1e-7f64;
    let hi = 1.0 - lo;
    let mut bce = 0.0f64;
    for (p, y) in y_hat.iter().zip(targets) {
        let p = p.to_f64_c().clamp(lo, hi);
        let y = y.to_f64_c();
        bce -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    let mut total = bce;
    if lambda > 0.0 {
        if let Some(w) = w_final {
            let mut sq = 0.0f64;
            for (wi, y) in w.iter().zip(targets) {
                let d = y.to_f64_c() - wi.to_f64_c();
                sq += d * d;
            }
            total += lambda * sq;
        }
    }
    total
}

/// Forward pass over every record in evaluation mode (no dropout), with
/// per-record work parallelized and results kept in record order.
pub fn score_records<F: Element>(
    params: &ModelParams<F>,
    model: &PmnConfig,
    records: &[SequenceRecord],
    single_label_index: Option<usize>,
) -> Result<EvalOutputs, TrainError> {
    struct PerRecord<F> {
        y_hat: Vec<F>,
        targets: Vec<F>,
        loss: f64,
        w_abs: Option<(f64, usize)>,
    }
    let rows: Vec<PerRecord<F>> = records
        .par_iter()
        .map(|record| -> Result<PerRecord<F>, TrainError> {
            let x = one_hot_encode::<F>(&record.sequence)?;
            let out = forward(params, model, &x, false, &mut SplitMix64::new(0))?;
            let targets: Vec<F> = record
                .labels
                .iter()
                .enumerate()
                .filter(|(i, _)| single_label_index.map_or(true, |s| *i == s))
                .map(|(_, p)| if *p { F::one() } else { F::zero() })
                .collect();
            let loss = loss_value(&out.y_hat, out.w_final.as_deref(), &targets, model.lambda);
            let w_abs = out.w_final.as_ref().map(|w| {
                let total: f64 = w
                    .iter()
                    .zip(&targets)
                    .map(|(wi, y)| (y.to_f64_c() - wi.to_f64_c()).abs())
                    .sum();
                (total, w.len())
            });
            Ok(PerRecord {
                y_hat: out.y_hat,
                targets,
                loss,
                w_abs,
            })
        })
        .collect::<Result<_, _>>()?;

    let out_dim = model_output_dim(model, single_label_index);
    let mut scores = vec![Vec::with_capacity(records.len()); out_dim];
    let mut labels = vec![Vec::with_capacity(records.len()); out_dim];
    let mut loss_total = 0.0f64;
    let mut w_total = 0.0f64;
    let mut w_count = 0usize;
    for row in &rows {
        for k in 0..out_dim {
            scores[k].push(row.y_hat[k].to_f64_c());
            labels[k].push(row.targets[k].to_f64_c() > 0.5);
        }
        loss_total += row.loss;
        if let Some((total, n)) = row.w_abs {
            w_total += total;
            w_count += n;
        }
    }
    Ok(EvalOutputs {
        scores,
        labels,
        mean_loss: if records.is_empty() { 0.0 } else { loss_total / records.len() as f64 },
        mean_w_abs_error: (w_count > 0).then(|| w_total / w_count as f64),
    })
}

fn model_output_dim(model: &PmnConfig, single_label_index: Option<usize>) -> usize {
    if single_label_index.is_some() {
        1
    } else {
        model.head_output_dim()
    }
}
