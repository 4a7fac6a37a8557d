//! Learned per-link cost model.
//!
//! Three stages, mirrored by the forward/backward code:
//!
//! 1. **User preference capture** — attention pooling of the user's history
//!    sequence conditioned on the request context, producing `x^u` once per
//!    request.
//! 2. **Link representation** — per link, the static/dynamic feature
//!    vector, heat channels, an encoded familiarity-frequency matrix and
//!    the link-memory bits are concatenated and passed through a
//!    perceptron; in offline mode a single-head attention layer over dual
//!    neighbors refines the result.
//! 3. **Scenario-gated cost heads** — a softmax gate driven by `x^u`
//!    mixes several scenario-specific perceptrons over `[x^u ⊕ x^l]`; a
//!    rectifier plus an epsilon floor keeps every cost strictly positive.
//!
//! In deployment mode (no neighbor attention) each link's cost depends only
//! on `x^u`, that link's own features and its memory bits, which is what
//! makes incremental recomputation during iterative planning exact.
//!
//! All arithmetic is `f64`; forward passes cache every intermediate needed
//! for the hand-written reverse-mode gradients in [`backward`].

mod backward;
mod forward;
mod params;
pub mod preprocess;
#[cfg(test)]
#[path = "tests.rs"]
mod contract_tests;

pub use backward::{backward, GradAccum};
pub use forward::{
    ablated_user_context, compute_link_cost, compute_user, forward_all, forward_links,
    AttnLinkCache, ForwardCache, LinkArrays, LinkBaseCache, LinkCostCache, RequestView,
    UserCache, UserContext,
};
pub(crate) use forward::{link_base, scenario_cost};
pub use params::{elu, elu_grad, MlpCache, ModelParams};
pub use params::Mlp;
pub use preprocess::NormStats;

use serde::{Deserialize, Serialize};

use crate::graph::LinkId;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("invalid checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("link memory iteration {0} already recorded")]
    MemoryColumnSet(usize),
    #[error("iteration index {0} outside 1..={1}")]
    MemoryColumnRange(usize, usize),
    #[error("neighbor attention requested but the model was built without it")]
    NoAttentionParams,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint serialization: {0}")]
    Serde(String),
}

/// Cost evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Neighbor attention enabled; link costs couple across dual
    /// adjacency. Used for offline training and evaluation.
    OfflineAttention,
    /// Attention-free: per-link costs are local, enabling incremental
    /// recomputation.
    Deployment,
}

/// Every width the model depends on. `link_layers`/`head_layers` are hidden
/// widths; the head appends a final scalar output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub s_dim: usize,
    /// Channel of `x^s` holding the integer scenario code.
    pub scenario_channel: usize,
    pub scenario_vocab: usize,
    pub scenario_embed: usize,
    pub h_events: usize,
    pub h_dim: usize,
    pub link_dim: usize,
    /// Channel of `x^link` holding the integer maneuver code.
    pub maneuver_channel: usize,
    pub maneuver_embed: usize,
    pub freq_events: usize,
    pub freq_dim: usize,
    pub heat_dim: usize,
    pub k_iters: usize,
    pub attn_hidden: usize,
    pub user_dim: usize,
    pub freq_encoded: usize,
    pub link_layers: Vec<usize>,
    pub head_layers: Vec<usize>,
    pub scn_heads: usize,
    pub neighbor_attention: bool,
}

impl ModelConfig {
    /// Full-scale defaults matching the reference dataset schema.
    pub fn full() -> ModelConfig {
        ModelConfig {
            s_dim: 10,
            scenario_channel: 0,
            scenario_vocab: 8,
            scenario_embed: 4,
            h_events: 100,
            h_dim: 32,
            link_dim: 50,
            maneuver_channel: 6,
            maneuver_embed: 4,
            freq_events: 20,
            freq_dim: 7,
            heat_dim: 2,
            k_iters: 3,
            attn_hidden: 32,
            user_dim: 32,
            freq_encoded: 8,
            link_layers: vec![128, 64, 32],
            head_layers: vec![128, 64, 32],
            scn_heads: 4,
            neighbor_attention: true,
        }
    }

    /// Scaled-down widths for fast experiments and test suites.
    pub fn desk() -> ModelConfig {
        ModelConfig {
            s_dim: 10,
            scenario_channel: 0,
            scenario_vocab: 8,
            scenario_embed: 3,
            h_events: 20,
            h_dim: 12,
            link_dim: 10,
            maneuver_channel: 6,
            maneuver_embed: 3,
            freq_events: 5,
            freq_dim: 7,
            heat_dim: 2,
            k_iters: 3,
            attn_hidden: 16,
            user_dim: 20,
            freq_encoded: 6,
            link_layers: vec![48, 24],
            head_layers: vec![32, 16],
            scn_heads: 4,
            neighbor_attention: true,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ModelError::BadConfig(msg.to_string()))
            }
        };
        check(self.s_dim >= 1, "s_dim must be positive")?;
        check(
            self.scenario_channel < self.s_dim,
            "scenario channel outside x^s",
        )?;
        check(self.scenario_vocab >= 1, "scenario vocab empty")?;
        check(self.link_dim >= 1, "link_dim must be positive")?;
        check(
            self.maneuver_channel < self.link_dim,
            "maneuver channel outside x^link",
        )?;
        check(self.k_iters >= 1, "k_iters must be at least 1")?;
        check(!self.link_layers.is_empty(), "link MLP needs layers")?;
        check(!self.head_layers.is_empty(), "head MLP needs layers")?;
        check(self.scn_heads >= 1, "need at least one scenario head")?;
        check(self.h_events >= 1, "h_events must be positive")?;
        check(self.freq_events >= 1, "freq_events must be positive")?;
        Ok(())
    }

    /// Processed context width: embedded scenario plus standardized
    /// continuous channels.
    pub fn s_proc_dim(&self) -> usize {
        self.scenario_embed + self.s_dim - 1
    }

    /// Continuous link-feature width after swapping the maneuver channel
    /// for its embedding.
    pub fn link_cont_dim(&self) -> usize {
        self.link_dim - 1
    }

    pub fn link_concat_dim(&self) -> usize {
        self.maneuver_embed + self.link_cont_dim() + self.heat_dim + self.freq_encoded
            + self.k_iters
    }

    pub fn link_out_dim(&self) -> usize {
        *self.link_layers.last().unwrap()
    }
}

/// Per-link record of which planning iterations selected the link: an
/// `n × k` 0/1 matrix whose column `k` is written exactly once, after
/// iteration `k` completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMemory {
    n: usize,
    k: usize,
    bits: Vec<u8>,
}

impl LinkMemory {
    pub fn new(n: usize, k: usize) -> LinkMemory {
        LinkMemory {
            n,
            k,
            bits: vec![0; n * k],
        }
    }

    pub fn num_links(&self) -> usize {
        self.n
    }

    pub fn k_iters(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, link: LinkId) -> &[u8] {
        &self.bits[link.idx() * self.k..(link.idx() + 1) * self.k]
    }

    /// Records iteration `k_idx` (1-based): sets bit `k_idx` for every link
    /// of the route. Rejects double updates of one column.
    pub fn set_iteration(&mut self, route_links: &[LinkId], k_idx: usize) -> Result<(), ModelError> {
        if k_idx < 1 || k_idx > self.k {
            return Err(ModelError::MemoryColumnRange(k_idx, self.k));
        }
        let col = k_idx - 1;
        for i in 0..self.n {
            if self.bits[i * self.k + col] != 0 {
                return Err(ModelError::MemoryColumnSet(k_idx));
            }
        }
        for l in route_links {
            self.bits[l.idx() * self.k + col] = 1;
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.bits.fill(0);
    }
}

/// Versioned parameter checkpoint: config, normalization statistics and the
/// flat parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ModelConfig,
    pub stats: NormStats,
    pub flat_params: Vec<f64>,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn new(params: &ModelParams, stats: &NormStats) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: params.config.clone(),
            stats: stats.clone(),
            flat_params: params.flatten(),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ModelError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| ModelError::Serde(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Checkpoint, ModelError> {
        let file = std::fs::File::open(path)?;
        let ckpt: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| ModelError::Serde(e.to_string()))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(ModelError::BadCheckpoint(format!(
                "unsupported version {}",
                ckpt.version
            )));
        }
        ckpt.config.validate()?;
        ckpt.stats.check_dims(&ckpt.config)?;
        Ok(ckpt)
    }

    /// Materializes the parameter struct, validating the flat length.
    pub fn params(&self) -> Result<ModelParams, ModelError> {
        ModelParams::from_flat(&self.config, &self.flat_params)
    }
}
