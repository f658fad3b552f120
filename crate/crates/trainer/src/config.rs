use pmn_core::{PmnConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::error::TrainError;

/// Everything one training run needs. Evaluation runs every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Global-norm gradient clip; off by default.
    pub grad_clip: Option<f64>,
    /// For the single-label variant: which label this model trains on.
    pub single_label_index: Option<usize>,
    pub model: PmnConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            epochs: 40,
            learning_rate: 1e-3,
            seed: 0,
            grad_clip: None,
            single_label_index: None,
            model: PmnConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(TrainError::Config("learning rate must be positive".into()));
        }
        self.model.validate()?;
        match (self.model.variant, self.single_label_index) {
            (Variant::CnnSingle, None) => Err(TrainError::Config(
                "the single-label variant needs single_label_index".into(),
            )),
            (Variant::CnnSingle, Some(i)) if i >= self.model.num_labels => Err(TrainError::Config(
                format!("single_label_index {i} out of range {}", self.model.num_labels),
            )),
            (v, Some(_)) if v != Variant::CnnSingle => Err(TrainError::Config(
                "single_label_index only applies to the single-label variant".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Targets used by the loss: the full label vector, or the one selected
    /// label for a single-label model.
    pub fn targets_for(&self, labels: &[bool]) -> Vec<f32> {
        match self.single_label_index {
            Some(i) => vec![if labels[i] { 1.0 } else { 0.0 }],
            None => labels.iter().map(|p| if *p { 1.0 } else { 0.0 }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_training_protocol() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.batch_size, 512);
        assert_eq!(cfg.epochs, 40);
        assert_eq!(cfg.learning_rate, 1e-3);
    }

    #[test]
    fn single_label_rules() {
        let mut cfg = TrainConfig {
            model: PmnConfig {
                variant: Variant::CnnSingle,
                ..PmnConfig::with_labels(4)
            },
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err(), "missing index must fail");
        cfg.single_label_index = Some(2);
        cfg.validate().unwrap();
        cfg.single_label_index = Some(9);
        assert!(cfg.validate().is_err());
        cfg.model.variant = Variant::Pmn;
        cfg.single_label_index = Some(1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn targets_select_the_configured_label() {
        let cfg = TrainConfig {
            model: PmnConfig {
                variant: Variant::CnnSingle,
                ..PmnConfig::with_labels(3)
            },
            single_label_index: Some(1),
            ..TrainConfig::default()
        };
        assert_eq!(cfg.targets_for(&[true, false, true]), vec![0.0]);
        assert_eq!(cfg.targets_for(&[false, true, false]), vec![1.0]);
    }
}
