//! Utterance encoder (convolution, residual recurrent highway stack,
//! attention pooling, unit normalization) and the linear scene encoder.

mod backward;
mod config;
mod forward;
pub(crate) mod linalg;
mod params;

pub use config::EncoderConfig;
pub use forward::{
    attention_pool, conv1d_forward, encode_features, encode_scene, encode_utterance,
    rhn_layer_forward, rhn_stack_forward, LayerTrace,
};
pub use params::{
    checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint, CheckpointHeader,
    GradientSet, Parameters, RhnLayerParams, TensorEntry, CHECKPOINT_FORMAT,
};

pub(crate) use backward::{scene_backward, utterance_backward};
pub(crate) use forward::{encode_cached, scene_projection, unit};
