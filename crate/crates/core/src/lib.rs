//! Bregman proximal gradient methods for deep linear neural networks.
//!
//! The squared loss of a deep linear network,
//! `g(W) = ½‖W_1 W_2 ··· W_N X − Y‖²_F`, has no globally Lipschitz gradient,
//! but it is smooth *relative to* a polynomial kernel of the total weight norm.
//! That kernel turns the Bregman proximal step into a 1-D root-finding
//! problem, so BPG and its inertial variant CoCaIn BPG run with closed-form
//! updates and, optionally, closed-form inertia.
//!
//! Modules:
//! - [`model`]: network loss, gradient and regularizers.
//! - [`kernel`]: the kernel `h`, its gradient and the Bregman distance `D_h`.
//! - [`prox`]: the closed-form Bregman proximal map.
//! - [`optim`]: BPG, BPG-WB, CoCaIn BPG (backtracked and closed-form inertia)
//!   and the Euclidean baselines PALM, iPALM, FBS-WB and iPiano-WB.

pub mod error;
pub mod kernel;
pub mod model;
pub mod optim;
pub mod prox;
pub mod stack;

pub use error::{Error, Result};
pub use kernel::{BregmanKernel, LsmadCheck, Parity};
pub use model::{Dataset, Evaluation, Regularizer};
pub use optim::{Algorithm, OptimizerConfig, RunResult, RunTrace, TraceRow};
pub use stack::WeightStack;
