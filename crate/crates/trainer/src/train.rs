use std::path::Path;
use std::time::Instant;

use autodiff::rng::SplitMix64;
use autodiff::{adam_step, AdamParams, AdamState, Tape};
use datakit::{batch_iter, DatasetSplit};
use pmn_core::{forward_vars, save_checkpoint, total_loss, Checkpoint, CheckpointMeta, ModelParams};
use rayon::prelude::*;

use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::evaluate::score_records;
use crate::logs::EpochLog;

/// Per-sample dropout stream: decorrelated across epochs and positions,
/// reproducible from the run seed.
fn dropout_rng(seed: u64, epoch: u64, position: u64) -> SplitMix64 {
    let mixed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(epoch.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(position);
    SplitMix64::new(mixed)
}

struct SampleResult {
    grads: Vec<Vec<f32>>,
    loss: f32,
    y_hat: Vec<f32>,
}

fn sample_pass(
    params: &ModelParams<f32>,
    cfg: &TrainConfig,
    x: &autodiff::Tensor<f32>,
    targets: &[f32],
    epoch: u64,
    position: u64,
) -> Result<SampleResult, autodiff::EngineError> {
    let mut tape = Tape::<f32>::new();
    let pv = params.register(&mut tape, true);
    let xv = tape.leaf_from(x.values(), x.shape(), false)?;
    let mut rng = dropout_rng(cfg.seed, epoch, position);
    let fwd = forward_vars(&mut tape, &pv, &cfg.model, xv, true, &mut rng)
        .map_err(|e| autodiff::EngineError::Contract(e.to_string()))?;
    let loss = total_loss(&mut tape, fwd.y_hat, fwd.w_final, targets, cfg.model.lambda)
        .map_err(|e| autodiff::EngineError::Contract(e.to_string()))?;
    tape.backward(loss)?;
    let grads: Vec<Vec<f32>> = pv
        .ordered()
        .iter()
        .zip(params.named())
        .map(|(var, (_, tensor))| {
            tape.grad(*var)
                .map(|g| g.to_vec())
                .unwrap_or_else(|| vec![0.0; tensor.numel()])
        })
        .collect();
    Ok(SampleResult {
        grads,
        loss: tape.scalar_value(loss),
        y_hat: tape.value(fwd.y_hat).to_vec(),
    })
}

/// Trains one model on the split's training part, evaluating on validation
/// every epoch. Checkpoints go to `checkpoint_dir` when given (`best.pmn`
/// updated on every validation improvement, `last.pmn` every epoch). Returns
/// the best checkpoint and the full epoch logs.
///
/// Determinism: batch order, dropout masks, and the gradient reduction order
/// are all fixed by `(seed, config, dataset)`; per-sample passes may run in
/// parallel but reduce in ascending sample order.
pub fn train_model(
    split: &DatasetSplit,
    cfg: &TrainConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<(Checkpoint, Vec<EpochLog>), TrainError> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(TrainError::Config("training split is empty".into()));
    }
    if split.valid.is_empty() {
        return Err(TrainError::Config(
            "validation split is empty; best-epoch selection needs it".into(),
        ));
    }
    if split.train[0].labels.len() != cfg.model.num_labels {
        return Err(TrainError::Config(format!(
            "dataset has {} labels, model expects {}",
            split.train[0].labels.len(),
            cfg.model.num_labels
        )));
    }

    let mut params = ModelParams::<f32>::init(&cfg.model, cfg.seed)?;
    let sizes: Vec<usize> = params.named().iter().map(|(_, t)| t.numel()).collect();
    let mut adam = AdamState::<f32>::new(
        AdamParams {
            learning_rate: cfg.learning_rate,
            ..AdamParams::default()
        },
        &sizes,
    );

    let mut logs: Vec<EpochLog> = Vec::new();
    let mut best: Option<Checkpoint> = None;

    let out_dim = if cfg.single_label_index.is_some() {
        1
    } else {
        cfg.model.head_output_dim()
    };

    for epoch in 1..=cfg.epochs {
        let train_started = Instant::now();
        let mut epoch_loss = 0.0f64;
        let mut seen = 0usize;
        let mut train_scores: Vec<Vec<f64>> = vec![Vec::with_capacity(split.train.len()); out_dim];
        let mut train_labels: Vec<Vec<bool>> = vec![Vec::with_capacity(split.train.len()); out_dim];

        let mut position = 0u64;
        for (batch_index, batch) in batch_iter::<f32>(&split.train, cfg.batch_size, cfg.seed, epoch as u64).enumerate()
        {
            let batch = batch?;
            let targets: Vec<Vec<f32>> = batch
                .indices
                .iter()
                .map(|i| cfg.targets_for(&split.train[*i].labels))
                .collect();
            let positions: Vec<u64> = (0..batch.xs.len()).map(|i| position + i as u64).collect();
            position += batch.xs.len() as u64;

            let results: Vec<SampleResult> = batch
                .xs
                .par_iter()
                .zip(targets.par_iter())
                .zip(positions.par_iter())
                .map(|((x, t), pos)| sample_pass(&params, cfg, x, t, epoch as u64, *pos))
                .collect::<Result<_, _>>()
                .map_err(|source| TrainError::Step {
                    epoch,
                    batch: batch_index,
                    source,
                })?;

            // fixed ascending-sample reduction, then the mean
            let mut batch_grads: Vec<Vec<f32>> = sizes.iter().map(|n| vec![0.0f32; *n]).collect();
            let mut batch_loss = 0.0f32;
            for r in &results {
                batch_loss += r.loss;
                for (acc, g) in batch_grads.iter_mut().zip(&r.grads) {
                    for (a, v) in acc.iter_mut().zip(g) {
                        *a += *v;
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: batch_index });
            }
            let scale = 1.0f32 / results.len() as f32;
            for g in batch_grads.iter_mut() {
                for v in g.iter_mut() {
                    *v *= scale;
                }
            }
            if let Some(cap) = cfg.grad_clip {
                clip_global_norm(&mut batch_grads, cap as f32);
            }

            {
                let mut tensors: Vec<&mut autodiff::Tensor<f32>> =
                    params.named_mut().into_iter().map(|(_, t)| t).collect();
                let grad_slices: Vec<&[f32]> = batch_grads.iter().map(|g| g.as_slice()).collect();
                adam_step(&mut tensors, &grad_slices, &mut adam).map_err(|source| TrainError::Step {
                    epoch,
                    batch: batch_index,
                    source,
                })?;
            }

            epoch_loss += batch_loss as f64;
            seen += results.len();
            for (r, i) in results.iter().zip(&batch.indices) {
                let t = cfg.targets_for(&split.train[*i].labels);
                for k in 0..out_dim {
                    train_scores[k].push(r.y_hat[k] as f64);
                    train_labels[k].push(t[k] > 0.5);
                }
            }
        }

        let train_seconds = train_started.elapsed().as_secs_f64();
        let train_metrics: Vec<evalkit::LabelMetrics> = train_scores
            .iter()
            .zip(&train_labels)
            .map(|(s, l)| evalkit::label_metrics(s, l))
            .collect();
        logs.push(EpochLog {
            epoch,
            split: "train".into(),
            loss: epoch_loss / seen as f64,
            mean_auroc: mean_defined(train_metrics.iter().map(|m| m.auroc)),
            mean_aupr: mean_defined(train_metrics.iter().map(|m| m.aupr)),
            mean_recall_fdr50: mean_defined(train_metrics.iter().map(|m| m.recall_at_fdr50)),
            seconds: train_seconds,
        });

        let eval_started = Instant::now();
        let outputs = score_records(&params, &cfg.model, &split.valid, cfg.single_label_index)?;
        let metrics = outputs.per_label_metrics();
        let valid_auroc = mean_defined(metrics.iter().map(|m| m.auroc));
        logs.push(EpochLog {
            epoch,
            split: "valid".into(),
            loss: outputs.mean_loss,
            mean_auroc: valid_auroc,
            mean_aupr: mean_defined(metrics.iter().map(|m| m.aupr)),
            mean_recall_fdr50: mean_defined(metrics.iter().map(|m| m.recall_at_fdr50)),
            seconds: eval_started.elapsed().as_secs_f64(),
        });

        let improved = match &best {
            None => true,
            Some(b) => valid_auroc > b.meta.valid_auroc,
        };
        if improved {
            let checkpoint = Checkpoint {
                config: cfg.model.clone(),
                params: params.clone(),
                meta: CheckpointMeta {
                    epoch: epoch as u32,
                    valid_auroc,
                },
            };
            if let Some(dir) = checkpoint_dir {
                save_checkpoint(&dir.join("best.pmn"), &cfg.model, &checkpoint.params, &checkpoint.meta)?;
            }
            best = Some(checkpoint);
        }
        if let Some(dir) = checkpoint_dir {
            save_checkpoint(
                &dir.join("last.pmn"),
                &cfg.model,
                &params,
                &CheckpointMeta {
                    epoch: epoch as u32,
                    valid_auroc,
                },
            )?;
        }
    }

    Ok((best.expect("at least one epoch ran"), logs))
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> f64 {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    }
}

fn clip_global_norm(grads: &mut [Vec<f32>], cap: f32) {
    let mut sq = 0.0f32;
    for g in grads.iter() {
        for v in g {
            sq += v * v;
        }
    }
    let norm = sq.sqrt();
    if norm > cap {
        let scale = cap / norm;
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
}
