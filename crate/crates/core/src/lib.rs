//! Grounded-speech encoder training and layer-wise phonology probes.
//!
//! The crate is organised along the processing chain:
//!
//! - [`dsp`]: waveform framing, mel filterbank and MFCC features, WAV I/O.
//! - [`corpus`]: a procedural speech corpus with exact phoneme alignments and
//!   meaning-derived scene vectors.
//! - [`encoder`]: convolution, stacked recurrent highway layers, attention
//!   pooling and the linear scene encoder, with per-layer traces.
//! - [`train`]: the margin contrastive objective, reverse-mode gradients,
//!   Adam and the training loop.
//! - [`segment`]: maps phoneme intervals onto representation timesteps and
//!   averages them into occurrence and type vectors.
//! - [`probe`]: phoneme decoding, ABX discrimination, RSA, Ward clustering
//!   with adjusted Rand index, and synonym discrimination.
//! - [`pipeline`]: experiment configuration, the representation archive and
//!   the command implementations behind the `phonoprobe` binary.

pub mod corpus;
pub mod dsp;
pub mod encoder;
pub mod error;
pub mod pipeline;
pub mod probe;
pub mod segment;
pub mod seed;
pub mod train;

pub use error::{Error, Result};
