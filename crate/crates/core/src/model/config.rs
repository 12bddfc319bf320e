use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Network variants compared in the ablation study.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Plain conv + BN + ReLU blocks, plain cosine loss.
    Base,
    /// Attention blocks, plain cosine loss.
    BaseSsa,
    /// Attention blocks, focal cosine loss.
    #[default]
    Full,
}

impl Ablation {
    pub fn attention(self) -> bool {
        !matches!(self, Ablation::Base)
    }

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Base => "base",
            Ablation::BaseSsa => "base_ssa",
            Ablation::Full => "full",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Ablation::Base),
            "base_ssa" => Ok(Ablation::BaseSsa),
            "full" => Ok(Ablation::Full),
            other => Err(Error::parse("ablation", format!("unknown ablation {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Feature width of every branch block; fused features have `2n` channels.
    pub n: usize,
    /// Spectral bands of the input; 0 means "take it from the data".
    pub input_channels: usize,
    pub rsab_count: usize,
    pub rcab_count: usize,
    /// Channel-attention bottleneck is `max(width / ca_reduction, 1)`.
    pub ca_reduction: usize,
    /// Attention blocks (`true`) or plain conv blocks (`false`).
    #[serde(skip)]
    pub attention: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { n: 64, input_channels: 0, rsab_count: 3, rcab_count: 3, ca_reduction: 4, attention: true }
    }
}

impl ModelConfig {
    pub fn new(n: usize, input_channels: usize) -> Self {
        ModelConfig { n, input_channels, ..Self::default() }
    }

    pub fn with_attention(mut self, attention: bool) -> Self {
        self.attention = attention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, detail: String| Err(Error::contract("model config", format!("{field}: {detail}")));
        if self.n < 2 {
            return bad("n", format!("must be at least 2, got {}", self.n));
        }
        if self.input_channels < 1 {
            return bad("input_channels", "must be at least 1".into());
        }
        if self.rsab_count < 1 || self.rcab_count < 1 {
            return bad("rsab_count", "block counts must be at least 1".into());
        }
        if self.ca_reduction < 1 {
            return bad("ca_reduction", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn fused_width(&self) -> usize {
        2 * self.n
    }

    pub fn bottleneck(&self, width: usize) -> usize {
        (width / self.ca_reduction).max(1)
    }
}
