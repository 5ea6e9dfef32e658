//! Margin contrastive objective, exact gradients, Adam and the training loop.

mod adam;
mod data;
mod loss;
mod run;

pub use adam::{adam_step, AdamState};
pub use data::{Pair, TrainingSet};
pub use loss::{contrastive_loss, cosine_distance, loss_gradients};
pub use run::{
    recall_at_k, train_model, write_log_csv, EpochRecord, TrainConfig, TrainOutcome, TrainStatus,
};
