//! Small convolutional classifier with hand-written backpropagation.
//!
//! Each stage is a same-padded conv layer with ReLU followed by 2x2 max
//! pooling; the last pooled map is flattened into a dense softmax layer over
//! the seven classes. Training minimises mean sparse categorical cross-entropy
//! with bias-corrected Adam.

mod adam;
mod arch;
pub mod io;
mod layers;
mod model;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use arch::{Activation, ArchConfig, ConvSpec, StageShape};
pub use io::{load_model, save_model, SavedModel};
pub use layers::{conv_forward, dense_logits, dense_softmax_forward, maxpool_forward, maxpool_with_indices, softmax};
pub use model::{
    argmax, backward, batch_loss, features, forward, image_tensor, init_model, predict, Batch, ModelParams,
    ParamGrads, PROB_FLOOR,
};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{rows}x{cols} map is too small to pool")]
    ShapeTooSmall { rows: usize, cols: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
