//! Core engine for generative multi-route planning over road networks:
//! dual-graph representation, single- and multi-objective search, learned
//! link-cost model with manual gradients, iterative route generation with
//! link memory, sub-network extraction, evaluation metrics, and a synthetic
//! dataset generator with planted user preferences.

pub mod attributes;
pub mod dataset;
pub mod eval;
pub mod graph;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod oracles;
pub mod search;
pub mod stc;
pub mod training;

pub use graph::{
    Direction, DualGraph, DualLink, DualOptions, GraphError, LinkId, Maneuver, NodeId,
    PrimalEdge, PrimalGraph, PrimalNode, Route,
};
pub use search::{
    bidirectional_dijkstra, dominance_filter, mosp, penalty_alternatives, shortest_path,
    CostVector, MospResult, MultiCost, SearchError, COST_EPSILON,
};
