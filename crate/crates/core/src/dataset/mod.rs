//! Request-level dataset: a self-describing JSON-lines schema, loading
//! with validation, evaluation splits, and a synthetic generator with
//! planted per-user preferences.
//!
//! Files written per dataset directory:
//!  - `graph.jsonl`   full city road network (nodes then edges)
//!  - `samples.jsonl` one header record, then one record per request
//!  - `stats.json`    normalization statistics fitted on the training role
//!  - `splits.json`   train/test roles and the evaluation set memberships

mod io;
mod synth;

pub use io::{
    fit_stats, load_samples, save_samples, split_sets, LoadIssue, LoadedDataset, SplitSets,
};
pub use synth::{generate, write_dataset, Archetype, CityNetwork, SynthConfig, SynthOutput};

use serde::{Deserialize, Serialize};

use crate::attributes::LinkAttributeTable;
use crate::graph::{DualGraph, GraphError, LinkId, Route};
use crate::model::ModelError;
use crate::training::{label_index, PreparedSample, TrainError};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {msg}")]
    Record { line: usize, msg: String },
    #[error("missing dataset header")]
    MissingHeader,
    #[error("sample {id}: {msg}")]
    Sample { id: u64, msg: String },
    #[error("infeasible generator config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(String),
}

/// Indices into `x^link` used to build route attribute vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttrChannels {
    pub length: usize,
    pub fftime: usize,
    pub toll: usize,
    pub light: usize,
    pub rough: usize,
    pub road_class: usize,
}

/// First record of `samples.jsonl`: declares every dimension and channel
/// name so the file is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub version: u32,
    pub s_dim: usize,
    pub scenario_channel: usize,
    pub h_events: usize,
    pub h_dim: usize,
    pub link_dim: usize,
    pub maneuver_channel: usize,
    pub freq_events: usize,
    pub freq_dim: usize,
    pub heat_dim: usize,
    pub s_channels: Vec<String>,
    pub h_channels: Vec<String>,
    pub link_channels: Vec<String>,
    pub freq_channels: Vec<String>,
    pub heat_channels: Vec<String>,
    pub attr_channels: AttrChannels,
}

pub const DATASET_VERSION: u32 = 1;

/// Sparse familiarity events for one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreqEntry {
    pub link: u32,
    /// Up to `freq_events` rows of `freq_dim` values each.
    pub events: Vec<Vec<f64>>,
}

/// One planning request with its sub-network, features, pre-sampled route
/// set and the user's trajectory. Link ids are sample-local in `[0, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: u64,
    pub user: u64,
    /// Planted preference family for synthetic data; empty otherwise.
    pub archetype: String,
    pub origin: u32,
    pub destination: u32,
    pub adjacency: Vec<[u32; 2]>,
    pub lengths: Vec<f64>,
    pub xs: Vec<f64>,
    pub xh: Vec<f64>,
    pub xlink: Vec<f64>,
    /// Sparse x^freq; links absent here have no familiarity events.
    pub freq: Vec<FreqEntry>,
    pub xheat: Vec<f64>,
    pub routes: Vec<Vec<u32>>,
    pub covs: Vec<f64>,
    pub r_u: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RecordLine {
    Header(DatasetHeader),
    Sample(SampleRecord),
}

/// Train/test role plus derived evaluation sets, persisted as
/// `splits.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitFile {
    pub seed: u64,
    pub train_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
    pub set2_ids: Vec<u64>,
    pub set3_ids: Vec<u64>,
}

impl SampleRecord {
    pub fn num_links(&self) -> usize {
        self.lengths.len()
    }

    pub fn has_familiarity(&self) -> bool {
        self.freq.iter().any(|f| !f.events.is_empty())
    }

    pub fn has_history(&self) -> bool {
        self.xh.iter().any(|&v| v != 0.0)
    }

    /// Dense `n × freq_events × freq_dim` expansion of the sparse entries.
    pub fn dense_freq(&self, header: &DatasetHeader) -> Vec<f64> {
        let n = self.num_links();
        let mut out = vec![0.0; n * header.freq_events * header.freq_dim];
        for entry in &self.freq {
            let base = entry.link as usize * header.freq_events * header.freq_dim;
            for (e, ev) in entry.events.iter().take(header.freq_events).enumerate() {
                for (d, &v) in ev.iter().take(header.freq_dim).enumerate() {
                    out[base + e * header.freq_dim + d] = v;
                }
            }
        }
        out
    }

    pub fn attribute_table(&self, header: &DatasetHeader) -> LinkAttributeTable {
        let n = self.num_links();
        let ch = &header.attr_channels;
        let get = |i: usize, c: usize| self.xlink[i * header.link_dim + c];
        let mut familiar = vec![0.0; n];
        for entry in &self.freq {
            if !entry.events.is_empty() {
                familiar[entry.link as usize] = self.lengths[entry.link as usize];
            }
        }
        LinkAttributeTable {
            time_s: (0..n).map(|i| get(i, ch.fftime)).collect(),
            length_m: self.lengths.clone(),
            toll: (0..n).map(|i| get(i, ch.toll)).collect(),
            familiar_len: familiar,
            lights: (0..n).map(|i| get(i, ch.light)).collect(),
            rough_len: (0..n).map(|i| get(i, ch.rough)).collect(),
        }
    }

    /// Builds the training-ready view: local graph, dense features, routes
    /// with attributes, coverage label.
    pub fn prepare(&self, header: &DatasetHeader) -> Result<PreparedSample, DataError> {
        let adjacency: Vec<(LinkId, LinkId)> = self
            .adjacency
            .iter()
            .map(|&[a, b]| (LinkId(a), LinkId(b)))
            .collect();
        let graph = DualGraph::from_adjacency(&self.lengths, &adjacency)?;
        let table = self.attribute_table(header);
        let mut routes = Vec::with_capacity(self.routes.len());
        for ids in &self.routes {
            let links: Vec<LinkId> = ids.iter().map(|&i| LinkId(i)).collect();
            let mut route = Route::new(links, &graph).map_err(|e| DataError::Sample {
                id: self.id,
                msg: e.to_string(),
            })?;
            table.set_route_attrs(&mut route);
            routes.push(route);
        }
        if routes.is_empty() {
            return Err(DataError::Sample {
                id: self.id,
                msg: "sample has no routes".into(),
            });
        }
        let label = label_index(&self.covs, &routes);
        let union_links = PreparedSample::compute_union(&routes);
        Ok(PreparedSample {
            graph,
            origin: LinkId(self.origin),
            destination: LinkId(self.destination),
            xs: self.xs.clone(),
            xh: self.xh.clone(),
            xlink: self.xlink.clone(),
            xfreq: self.dense_freq(header),
            xheat: self.xheat.clone(),
            lengths: self.lengths.clone(),
            covs: self.covs.clone(),
            label,
            r_u: self.r_u.iter().map(|&i| LinkId(i)).collect(),
            union_links,
            in_set2: self.has_familiarity(),
            in_set3: self.has_history(),
            routes,
        })
    }
}
