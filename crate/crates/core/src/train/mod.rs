//! Mini-batch Adam training against point-cloud datasets, with loss and
//! error reporting and finite-difference gradient verification.

mod adam;
mod fit;
mod gradcheck;
mod loss;
mod report;

pub use adam::{adam_step, AdamState};
pub use fit::{fit, TrainConfig, TrainHistory, DIVERGENCE_LIMIT};
pub use gradcheck::grad_check;
pub use loss::{mse_loss, mse_upstream};
pub use report::{rmse_report, ParamGroupError, RmseReport};
