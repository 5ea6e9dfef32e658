use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Encoder architecture.
///
/// The utterance path is convolution, `rhn_layers` stacked recurrent highway
/// layers, attention pooling and L2 normalization. When `joint_dim` differs
/// from `rhn_dim` a bias-free linear projection follows the pooling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub input_dim: usize,
    pub conv_length: usize,
    pub conv_size: usize,
    pub conv_stride: usize,
    pub rhn_layers: usize,
    pub rhn_dim: usize,
    pub microsteps: usize,
    pub attn_hidden: usize,
    pub joint_dim: usize,
    pub scene_dim: usize,
}

impl Default for EncoderConfig {
    /// Desk-scale defaults.
    fn default() -> Self {
        Self {
            input_dim: 13,
            conv_length: 6,
            conv_size: 32,
            conv_stride: 3,
            rhn_layers: 3,
            rhn_dim: 96,
            microsteps: 2,
            attn_hidden: 32,
            joint_dim: 32,
            scene_dim: 64,
        }
    }
}

impl EncoderConfig {
    /// The full-size reference configuration (4096-d image features).
    pub fn reference() -> Self {
        Self {
            input_dim: 13,
            conv_length: 6,
            conv_size: 64,
            conv_stride: 3,
            rhn_layers: 5,
            rhn_dim: 512,
            microsteps: 2,
            attn_hidden: 512,
            joint_dim: 512,
            scene_dim: 4096,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("input_dim", self.input_dim),
            ("conv_length", self.conv_length),
            ("conv_size", self.conv_size),
            ("conv_stride", self.conv_stride),
            ("rhn_layers", self.rhn_layers),
            ("rhn_dim", self.rhn_dim),
            ("microsteps", self.microsteps),
            ("attn_hidden", self.attn_hidden),
            ("joint_dim", self.joint_dim),
            ("scene_dim", self.scene_dim),
        ];
        match fields.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(Error::Config(format!("encoder: {name} must be positive"))),
            None => Ok(()),
        }
    }

    pub fn has_projection(&self) -> bool {
        self.joint_dim != self.rhn_dim
    }

    /// Number of convolution output steps for `frames` input frames.
    pub fn output_steps(&self, frames: usize) -> Result<usize> {
        if frames < self.conv_length {
            return Err(Error::UtteranceTooShort {
                frames,
                needed: self.conv_length,
            });
        }
        Ok((frames - self.conv_length) / self.conv_stride + 1)
    }

    /// Names of the representations a trace exposes, in archive order.
    pub fn representation_names(&self) -> Vec<String> {
        let mut v = vec!["mfcc".to_string(), "conv".to_string()];
        v.extend((1..=self.rhn_layers).map(|j| format!("rec{j}")));
        v.push("embedding".to_string());
        v
    }
}
