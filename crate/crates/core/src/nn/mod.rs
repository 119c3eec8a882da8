//! Feed-forward classifiers with CGAU or ReLU hidden layers, manual
//! backpropagation and SGD.

mod checkpoint;
pub mod gradcheck;
mod layers;
mod model;
mod optim;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, read_checkpoint, save_checkpoint,
    write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use layers::{CgauCache, CgauLayer, ClientOneHot, DenseLayer};
pub use model::{
    argmax_predictions, cross_entropy, probabilities, BlockInfo, BlockRole, ClassifierModel,
    ForwardCache, Gradients, HiddenLayer, ModelSpec, Task, UnitKind,
};
pub use optim::{sgd_step, MomentumState};
