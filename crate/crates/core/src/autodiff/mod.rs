//! A small reverse-mode differentiation engine and the pieces needed to train
//! shared-trunk multi-task networks with it.

pub mod checkpoint;
pub mod gradcheck;
pub mod graph;
pub mod network;
pub mod optim;
pub mod tensor;

pub use checkpoint::Checkpoint;
pub use gradcheck::{finite_diff_check, relative_error};
pub use graph::{Graph, Var};
pub use network::{
    forward, loss_and_grads, param_count, realized_width, Batch, GradientSet, LossGrads, LossMode,
    NetworkSpec, ParameterSet, Partition,
};
pub use optim::{adam_step, adam_step_groups, lr_at, OptimizerState, ScheduleKind, ScheduleSpec};
pub use tensor::Tensor;
