//! Learning the shrinkage spline: reverse-mode gradients through unrolled
//! ADMM, projection onto the firm-nonexpansiveness constraints and the
//! (projected) gradient-descent trainer.

mod backprop;
mod projection;
mod train;

pub use backprop::{backprop_gradient, batch_gradient, batch_loss, GradientResult};
pub use projection::{project_to_s, ConstraintSet};
pub use train::{
    knot_range_from_data, train, Init, TrainConfig, TrainOutcome, TrainingMode, TrainingReport,
    DIVERGENCE_FACTOR,
};
