//! Deterministic training loop: Adam over mean-batch gradients, per-epoch
//! validation, best-validation-epoch checkpointing, and plot-ready epoch
//! logs. Per-sample forward/backward passes parallelize across the batch;
//! gradients reduce in a fixed ascending sample order, so identical seeds
//! reproduce every logged number.

mod config;
mod error;
mod evaluate;
mod logs;
mod train;

pub use config::TrainConfig;
pub use error::TrainError;
pub use evaluate::{loss_value, score_records, EvalOutputs};
pub use logs::{read_epoch_logs, select_best_epoch, write_epoch_logs, EpochLog, EPOCH_LOG_HEADER};
pub use train::train_model;

// the checkpoint format lives next to the model definition; re-exported here
// because training owns the save/load workflow
pub use pmn_core::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};
