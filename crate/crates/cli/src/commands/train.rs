use std::fs;
use std::path::Path;

use pmn_core::Variant;
use trainer::{train_model, write_epoch_logs, TrainConfig, TrainError};

use crate::dataset_dir::read_dataset_dir;
use crate::{runtime, usage, CliError};

fn map_train_error(e: TrainError) -> CliError {
    match e {
        TrainError::Config(_) | TrainError::Data(_) | TrainError::Model(_) => usage(e),
        other => runtime(other),
    }
}

pub fn run(data: &Path, config_path: &Path, out: &Path, seed_override: Option<u64>) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path).map_err(usage)?;
    let mut cfg: TrainConfig = toml::from_str(&text).map_err(usage)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let dataset = read_dataset_dir(data)?;
    if cfg.model.num_labels != dataset.labels.len() {
        return Err(usage(format!(
            "config expects {} labels, dataset has {}",
            cfg.model.num_labels,
            dataset.labels.len()
        )));
    }
    fs::create_dir_all(out).map_err(runtime)?;

    if cfg.model.variant == Variant::CnnSingle {
        // one model per label, each in its own subdirectory
        for label in 0..dataset.labels.len() {
            let mut label_cfg = cfg.clone();
            label_cfg.single_label_index = Some(label);
            label_cfg.validate().map_err(map_train_error)?;
            let label_dir = out.join(format!("label_{label}"));
            fs::create_dir_all(&label_dir).map_err(runtime)?;
            let (best, logs) = train_model(&dataset.split, &label_cfg, Some(&label_dir)).map_err(map_train_error)?;
            write_epoch_logs(&label_dir.join("epoch_log.csv"), &logs).map_err(runtime)?;
            println!(
                "train[{}]: best epoch {} valid auROC {:.4}",
                dataset.labels[label], best.meta.epoch, best.meta.valid_auroc
            );
        }
        let echo = toml::to_string_pretty(&cfg).map_err(runtime)?;
        fs::write(out.join("effective_config.toml"), echo).map_err(runtime)?;
        return Ok(());
    }

    cfg.validate().map_err(map_train_error)?;
    let echo = toml::to_string_pretty(&cfg).map_err(runtime)?;
    fs::write(out.join("effective_config.toml"), echo).map_err(runtime)?;

    let (best, logs) = train_model(&dataset.split, &cfg, Some(out)).map_err(map_train_error)?;
    write_epoch_logs(&out.join("epoch_log.csv"), &logs).map_err(runtime)?;
    println!(
        "train: best epoch {} valid auROC {:.4} -> {}",
        best.meta.epoch,
        best.meta.valid_auroc,
        out.display()
    );
    Ok(())
}
