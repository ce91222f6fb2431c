//! Reverse-mode automatic differentiation over scalars, the pose regressor
//! built on it, and the Adam optimizer.

mod adam;
mod checkpoint;
mod mlp;
mod tape;

pub use adam::AdamState;
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use mlp::{Activation, LayerLayout, MlpSpec, Parameters, POSE_OUTPUT_DIM};
pub use tape::{Gradients, Op, Tape, Var};
