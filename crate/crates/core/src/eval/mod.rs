//! Metrics, evaluation, ablations and head-only adaptation.

pub mod ablation;
pub mod adapt;
pub mod data;
pub mod evaluate;
pub mod metrics;
pub mod run;

pub use ablation::{run_ablation, AblationTable, Axis};
pub use adapt::{adapt_head, adapt_on_dataset, select_adaptation_set, DEFAULT_N_ADAPT};
pub use data::{Dataset, InputKind, OperatingPoint};
pub use evaluate::{evaluate, write_eval, EvalResult, Prediction};
pub use metrics::{mape, pearson_r, TargetResult, MAPE_EPSILON};
pub use run::{steer_model, train_pipeline, Trained};
