use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("epoch {epoch}, batch {batch}: {source}")]
    Step {
        epoch: usize,
        batch: usize,
        source: autodiff::EngineError,
    },

    #[error(transparent)]
    Model(#[from] pmn_core::ModelError),

    #[error(transparent)]
    Data(#[from] datakit::DataError),

    #[error(transparent)]
    Engine(#[from] autodiff::EngineError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
