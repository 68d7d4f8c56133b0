//! Training: Adam with gradient clipping, metrics, the optimization loop
//! with best-validation checkpointing, and the hyperparameter grid.

mod grid;
mod harness;
mod metrics;
mod optimizer;

pub use grid::{run_grid, GridRow, GridSpec};
pub use harness::{
    configure_for, evaluate_predictions, train_model, EpochStat, MetricsReport, Split,
    TrainConfig, TrainedModel,
};
pub use metrics::{auc_pairwise_oracle, auc_roc, mae, r2, rmse};
pub use optimizer::{adam_step, clip_grad_norm, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
