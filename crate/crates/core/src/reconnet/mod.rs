//! Reconstruction network mapping a flattened embedding (target point first)
//! back to the target's original features.

mod adam;
mod batchnorm;
mod checkpoint;
mod conv;
mod layers;
mod loss;
mod net;
mod param;
mod train;

pub use adam::{adam_update, Adam};
pub use batchnorm::BatchNorm2d;
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use conv::{convt_out_size, CenterCrop, ConvTranspose2d};
pub use layers::{Dense, Encoder, Layer, Relu};
pub use loss::{combined_loss, LossValue};
pub use net::{DecoderKind, NetConfig, ReconNet};
pub use param::Param;
pub use train::{train, EarlyStopping, EpochRecord, Samples, StopDecision, TrainReport};
