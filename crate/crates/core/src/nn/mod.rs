//! The classical head: one convolution, ReLU, max-pool, dropout and two dense
//! layers with a log-softmax output, trained by Adam on NLL loss.

mod adam;
mod model;
mod tensor;
mod train;

pub use adam::{Adam, AdamConfig};
pub use model::{Cache, Mode, Model, ModelSpec, PARAM_NAMES};
pub use tensor::Tensor;
pub use train::{evaluate, predict, train, History, RunFile, TrainConfig};
