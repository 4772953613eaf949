//! Minimal differentiable substrate: dense layers, exact gradients, Adam.

mod gradcheck;
pub mod io;
mod net;
mod optim;
mod tensor;

pub use gradcheck::{finite_difference_error, grad_check, relative_error, Parameterized};
pub use net::{Activation, ForwardCache, Mlp, NamedTensor, NetSpec, ParamSet};
pub use optim::{opt_step, ModelOptimizer, OptimState};
pub use tensor::Tensor;
