//! Shortest-path and alternative-route search over the dual graph.
//!
//! All searches are pure functions of immutable inputs: each call owns its
//! private queues and label sets, so concurrent searches over one shared
//! graph are safe.
//!
//! Determinism contract: given identical inputs every search returns an
//! identical route. Cost ties are broken toward the lexicographically
//! smallest link-id sequence; the guarantee is exact for strictly positive
//! costs (cost producers floor at [`COST_EPSILON`], so this holds for every
//! model-driven search).

mod dijkstra;
mod dominance;
mod mosp;
mod penalty;

pub use dijkstra::{bidirectional_dijkstra, bounded_distances, shortest_path, IncrementalDijkstra};
pub use dominance::{dominance_filter, dominates};
pub use mosp::{mosp, objective_column, MospResult};
pub use penalty::penalty_alternatives;

use crate::graph::{GraphError, LinkId};

/// Lower bound applied by all cost producers. Keeps route totals strictly
/// ordered and rules out zero-cost cycles.
pub const COST_EPSILON: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("link {link} has negative cost {value}")]
    NegativeCost { link: u32, value: f64 },
    #[error("link {link} has non-finite cost")]
    NonFiniteCost { link: u32 },
    #[error("cost vector has {actual} entries, graph has {expected} links")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Per-link scalar costs, validated non-negative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(costs: Vec<f64>) -> Result<CostVector, SearchError> {
        for (i, &c) in costs.iter().enumerate() {
            if !c.is_finite() {
                return Err(SearchError::NonFiniteCost { link: i as u32 });
            }
            if c < 0.0 {
                return Err(SearchError::NegativeCost {
                    link: i as u32,
                    value: c,
                });
            }
        }
        Ok(CostVector(costs))
    }

    /// Builds from raw values, flooring every entry at [`COST_EPSILON`].
    pub fn floored(costs: Vec<f64>) -> Result<CostVector, SearchError> {
        Self::new(costs.into_iter().map(|c| c.max(COST_EPSILON)).collect())
    }

    #[inline]
    pub fn get(&self, link: LinkId) -> f64 {
        self.0[link.idx()]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn route_cost(&self, links: &[LinkId]) -> f64 {
        links.iter().map(|l| self.get(*l)).sum()
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<(), SearchError> {
        if self.0.len() != expected {
            return Err(SearchError::LengthMismatch {
                expected,
                actual: self.0.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn scale_link(&mut self, link: LinkId, factor: f64) {
        self.0[link.idx()] *= factor;
    }
}

/// Per-link vectors of `dims` non-negative objectives, row-major.
#[derive(Debug, Clone)]
pub struct MultiCost {
    dims: usize,
    data: Vec<f64>,
}

impl MultiCost {
    pub fn new(dims: usize, data: Vec<f64>) -> Result<MultiCost, SearchError> {
        if dims < 1 {
            return Err(SearchError::InvalidParameter(
                "objective count must be at least 1".into(),
            ));
        }
        if data.len() % dims != 0 {
            return Err(SearchError::InvalidParameter(format!(
                "data length {} not divisible by dims {dims}",
                data.len()
            )));
        }
        for (i, &c) in data.iter().enumerate() {
            if !c.is_finite() {
                return Err(SearchError::NonFiniteCost {
                    link: (i / dims) as u32,
                });
            }
            if c < 0.0 {
                return Err(SearchError::NegativeCost {
                    link: (i / dims) as u32,
                    value: c,
                });
            }
        }
        Ok(MultiCost { dims, data })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_links(&self) -> usize {
        self.data.len() / self.dims
    }

    #[inline]
    pub fn get(&self, link: LinkId) -> &[f64] {
        let base = link.idx() * self.dims;
        &self.data[base..base + self.dims]
    }
}
