//! Training: route-set sampling, route probabilities, the boosted
//! iteration loss, and the optimization loop.

mod loss;
mod sampler;
mod trainer;

pub use loss::{boost_weight, iteration_loss, label_index, route_probs};
pub use sampler::{sample_training_routes, SamplerConfig};
pub use trainer::{frozen_sample_loss, run_sample, train, EpochLog, SampleTrace, TrainConfig, TrainOutcome};

use crate::graph::{DualGraph, LinkId, Route};
use crate::model::ModelError;
use crate::search::SearchError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("origin {0} cannot reach destination {1}")]
    Unreachable(LinkId, LinkId),
    #[error("route {route} uses link {link} outside the sample graph")]
    BadRouteLink { route: usize, link: u32 },
    #[error("training sample has no routes")]
    EmptyRouteSet,
    #[error("non-finite loss at epoch {epoch}, sample {sample}: {value}")]
    NonFiniteLoss {
        epoch: usize,
        sample: usize,
        value: f64,
    },
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// One request ready for the trainer: sample-local graph, raw feature
/// arrays, pre-sampled route set with coverages, and the supervision
/// label.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub graph: DualGraph,
    pub origin: LinkId,
    pub destination: LinkId,
    pub xs: Vec<f64>,
    pub xh: Vec<f64>,
    pub xlink: Vec<f64>,
    pub xfreq: Vec<f64>,
    pub xheat: Vec<f64>,
    pub lengths: Vec<f64>,
    pub routes: Vec<Route>,
    pub covs: Vec<f64>,
    pub label: usize,
    pub r_u: Vec<LinkId>,
    /// Links appearing in any sampled route, ascending; training evaluates
    /// costs only for these.
    pub union_links: Vec<LinkId>,
    pub in_set2: bool,
    pub in_set3: bool,
}

impl PreparedSample {
    pub fn feature_view(&self) -> crate::model::LinkArrays<'_> {
        crate::model::LinkArrays {
            n: self.graph.num_links(),
            xlink: &self.xlink,
            xfreq: &self.xfreq,
            xheat: &self.xheat,
        }
    }

    pub fn request_view(&self) -> crate::model::RequestView<'_> {
        crate::model::RequestView {
            xs: &self.xs,
            xh: &self.xh,
        }
    }

    pub fn compute_union(routes: &[Route]) -> Vec<LinkId> {
        let mut union: Vec<LinkId> = routes
            .iter()
            .flat_map(|r| r.links().iter().copied())
            .collect();
        union.sort();
        union.dedup();
        union
    }

    /// Split membership per the evaluation protocol: `set1` is everything,
    /// `set2` requires familiarity records, `set3` history, `set4` either.
    pub fn splits(&self) -> Vec<&'static str> {
        let mut out = vec!["set1"];
        if self.in_set2 {
            out.push("set2");
        }
        if self.in_set3 {
            out.push("set3");
        }
        if self.in_set2 || self.in_set3 {
            out.push("set4");
        }
        out
    }
}
