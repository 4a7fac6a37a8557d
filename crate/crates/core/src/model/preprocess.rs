//! Feature standardization. Continuous channels are shifted and scaled by
//! per-channel statistics fitted on the training split; categorical
//! channels (scenario code, maneuver code) bypass standardization and are
//! embedded inside the model instead.

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel means and standard deviations. Standard deviations are
/// floored at [`STD_FLOOR`] when fitted, so constant channels standardize
/// to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// Continuous context channels (all of `x^s` except the scenario code).
    pub s_mean: Vec<f64>,
    pub s_std: Vec<f64>,
    pub h_mean: Vec<f64>,
    pub h_std: Vec<f64>,
    /// Continuous link channels (all of `x^link` except the maneuver code).
    pub link_mean: Vec<f64>,
    pub link_std: Vec<f64>,
    pub freq_mean: Vec<f64>,
    pub freq_std: Vec<f64>,
    pub heat_mean: Vec<f64>,
    pub heat_std: Vec<f64>,
}

impl NormStats {
    /// Neutral statistics (mean 0, std 1) for tests and fresh models.
    pub fn identity(config: &ModelConfig) -> NormStats {
        NormStats {
            s_mean: vec![0.0; config.s_dim - 1],
            s_std: vec![1.0; config.s_dim - 1],
            h_mean: vec![0.0; config.h_dim],
            h_std: vec![1.0; config.h_dim],
            link_mean: vec![0.0; config.link_dim - 1],
            link_std: vec![1.0; config.link_dim - 1],
            freq_mean: vec![0.0; config.freq_dim],
            freq_std: vec![1.0; config.freq_dim],
            heat_mean: vec![0.0; config.heat_dim],
            heat_std: vec![1.0; config.heat_dim],
        }
    }

    pub fn check_dims(&self, config: &ModelConfig) -> Result<(), ModelError> {
        let pairs = [
            ("s stats", self.s_mean.len(), config.s_dim - 1),
            ("h stats", self.h_mean.len(), config.h_dim),
            ("link stats", self.link_mean.len(), config.link_dim - 1),
            ("freq stats", self.freq_mean.len(), config.freq_dim),
            ("heat stats", self.heat_mean.len(), config.heat_dim),
        ];
        for (what, actual, expected) in pairs {
            if actual != expected {
                return Err(ModelError::DimMismatch {
                    what: match what {
                        "s stats" => "s stats",
                        "h stats" => "h stats",
                        "link stats" => "link stats",
                        "freq stats" => "freq stats",
                        _ => "heat stats",
                    },
                    expected,
                    actual,
                });
            }
        }
        for (m, s) in [
            (&self.s_mean, &self.s_std),
            (&self.h_mean, &self.h_std),
            (&self.link_mean, &self.link_std),
            (&self.freq_mean, &self.freq_std),
            (&self.heat_mean, &self.heat_std),
        ] {
            if m.len() != s.len() {
                return Err(ModelError::BadConfig(
                    "mismatched mean/std lengths".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One accumulator per channel; call [`ChannelStats::push`] with every
/// training-split value, then [`ChannelStats::finish`].
#[derive(Debug, Clone, Default)]
pub struct ChannelStats {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl ChannelStats {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn finish(&self) -> (f64, f64) {
        if self.n == 0 {
            return (0.0, 1.0);
        }
        let mean = self.sum / self.n as f64;
        let var = (self.sum_sq / self.n as f64 - mean * mean).max(0.0);
        (mean, var.sqrt().max(STD_FLOOR))
    }
}

#[inline]
pub fn standardize(v: f64, mean: f64, std: f64) -> f64 {
    (v - mean) / std
}

#[inline]
pub fn destandardize(z: f64, mean: f64, std: f64) -> f64 {
    z * std + mean
}

pub fn standardize_slice(values: &[f64], mean: &[f64], std: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for ((v, m), s) in values.iter().zip(mean).zip(std) {
        out.push(standardize(*v, *m, *s));
    }
}
