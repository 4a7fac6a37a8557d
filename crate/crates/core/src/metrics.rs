//! Evaluation metrics. All quantities compare generated routes against the
//! user's actual trajectory by length-weighted link overlap; routes are
//! treated as link *sets* (duplicate links inside a looping route collapse),
//! so every metric is invariant to link order within a route.

use std::collections::BTreeSet;
use std::io::Write;

use crate::graph::LinkId;

/// Route attribute vector layout: the six per-route quantities used for
/// Pareto reasoning and ranking.
pub mod attrs {
    pub const TIME: usize = 0;
    pub const DIST: usize = 1;
    pub const TOLL: usize = 2;
    /// Stored as the familiar-road *proportion* (higher is better); flipped
    /// to `1 − p` wherever a minimization sense is required.
    pub const FAMILIAR_PROP: usize = 3;
    pub const LIGHTS: usize = 4;
    pub const ROUGH: usize = 5;
    pub const DIMS: usize = 6;

    /// Orientation for dominance checks: smaller preferred in every
    /// component.
    pub fn minimize_view(a: &[f64; DIMS]) -> [f64; DIMS] {
        let mut v = *a;
        v[FAMILIAR_PROP] = 1.0 - v[FAMILIAR_PROP];
        v
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("unknown link id {0} (have lengths for {1} links)")]
    UnknownLink(u32, usize),
    #[error("route is empty")]
    EmptyRoute,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn link_set(route: &[LinkId], n: usize) -> Result<BTreeSet<u32>, MetricsError> {
    if route.is_empty() {
        return Err(MetricsError::EmptyRoute);
    }
    let mut set = BTreeSet::new();
    for l in route {
        if l.idx() >= n {
            return Err(MetricsError::UnknownLink(l.0, n));
        }
        set.insert(l.0);
    }
    Ok(set)
}

fn set_length(set: &BTreeSet<u32>, lengths: &[f64]) -> f64 {
    set.iter().map(|&l| lengths[l as usize]).sum()
}

/// Length-weighted Jaccard overlap of two routes in `[0, 1]`. Symmetric in
/// its route arguments.
pub fn coverage(r_u: &[LinkId], r_i: &[LinkId], lengths: &[f64]) -> Result<f64, MetricsError> {
    let a = link_set(r_u, lengths.len())?;
    let b = link_set(r_i, lengths.len())?;
    let inter: BTreeSet<u32> = a.intersection(&b).copied().collect();
    let union: BTreeSet<u32> = a.union(&b).copied().collect();
    Ok(set_length(&inter, lengths) / set_length(&union, lengths))
}

/// Maximum coverage over a route set; empty sets score 0.
pub fn cov_k<R: AsRef<[LinkId]>>(
    routes: &[R],
    r_u: &[LinkId],
    lengths: &[f64],
) -> Result<f64, MetricsError> {
    let mut best: f64 = 0.0;
    for r in routes {
        best = best.max(coverage(r_u, r.as_ref(), lengths)?);
    }
    Ok(best)
}

/// Mean pairwise coverage over unordered distinct pairs `i < j`. Undefined
/// for fewer than two routes (reported as `None`).
pub fn similarity<R: AsRef<[LinkId]>>(
    routes: &[R],
    lengths: &[f64],
) -> Result<Option<f64>, MetricsError> {
    if routes.len() < 2 {
        return Ok(None);
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..routes.len() {
        for j in i + 1..routes.len() {
            sum += coverage(routes[i].as_ref(), routes[j].as_ref(), lengths)?;
            pairs += 1;
        }
    }
    Ok(Some(sum / pairs as f64))
}

/// Number of routes whose attribute vector is non-dominated within the set
/// (minimization sense after orienting every dimension).
pub fn n_pareto(attr_vectors: &[[f64; attrs::DIMS]]) -> usize {
    let oriented: Vec<Vec<f64>> = attr_vectors
        .iter()
        .map(|a| attrs::minimize_view(a).to_vec())
        .collect();
    crate::search::dominance_filter(&oriented).len()
}

/// Trajectory coverage of the union of generated links: length of `r_u`'s
/// links lying in the union of all routes' links, over the union's total
/// length. An empty route set scores 0.
pub fn cov_net<R: AsRef<[LinkId]>>(
    routes: &[R],
    r_u: &[LinkId],
    lengths: &[f64],
) -> Result<f64, MetricsError> {
    let mut union: BTreeSet<u32> = BTreeSet::new();
    for r in routes {
        union.extend(link_set(r.as_ref(), lengths.len())?);
    }
    if union.is_empty() {
        return Ok(0.0);
    }
    let traj = link_set(r_u, lengths.len())?;
    let inter: BTreeSet<u32> = traj.intersection(&union).copied().collect();
    Ok(set_length(&inter, lengths) / set_length(&union, lengths))
}

/// All per-sample metrics for one method's generated route set.
#[derive(Debug, Clone, Copy)]
pub struct SampleMetrics {
    pub cov1: f64,
    pub cov_k: f64,
    pub sim: Option<f64>,
    pub n_pareto: usize,
    pub cov_net: f64,
}

/// Computes every metric for one route set against the trajectory. The
/// first route is taken as the method's primary recommendation.
pub fn evaluate_route_set<R: AsRef<[LinkId]>>(
    routes: &[R],
    attr_vectors: &[[f64; attrs::DIMS]],
    r_u: &[LinkId],
    lengths: &[f64],
) -> Result<SampleMetrics, MetricsError> {
    let cov1 = match routes.first() {
        Some(r) => coverage(r_u, r.as_ref(), lengths)?,
        None => 0.0,
    };
    Ok(SampleMetrics {
        cov1,
        cov_k: cov_k(routes, r_u, lengths)?,
        sim: similarity(routes, lengths)?,
        n_pareto: n_pareto(attr_vectors),
        cov_net: cov_net(routes, r_u, lengths)?,
    })
}

/// Mean metrics for one (method, split) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: String,
    pub split: String,
    pub n: usize,
    pub cov1: f64,
    pub cov_k: f64,
    /// Absent when no sample in the cell had two or more routes.
    pub sim: Option<f64>,
    pub n_pareto: f64,
    pub cov_net: f64,
}

use serde::{Deserialize, Serialize};

#[derive(Default)]
struct CellAccum {
    n: usize,
    cov1: f64,
    cov_k: f64,
    sim_sum: f64,
    sim_n: usize,
    np: f64,
    cov_net: f64,
}

/// Accumulates per-sample metrics into per-(method, split) means.
/// Rows come out in first-insertion order, so a fixed evaluation order
/// yields a byte-stable report.
#[derive(Default)]
pub struct ReportBuilder {
    order: Vec<(String, String)>,
    cells: std::collections::HashMap<(String, String), CellAccum>,
}

impl ReportBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, method: &str, split: &str, m: &SampleMetrics) {
        let key = (method.to_string(), split.to_string());
        if !self.cells.contains_key(&key) {
            self.order.push(key.clone());
        }
        let cell = self.cells.entry(key).or_default();
        cell.n += 1;
        cell.cov1 += m.cov1;
        cell.cov_k += m.cov_k;
        if let Some(s) = m.sim {
            cell.sim_sum += s;
            cell.sim_n += 1;
        }
        cell.np += m.n_pareto as f64;
        cell.cov_net += m.cov_net;
    }

    pub fn finish(self) -> EvalReport {
        let mut rows = Vec::new();
        for key in self.order {
            let cell = &self.cells[&key];
            let n = cell.n.max(1) as f64;
            rows.push(EvalRow {
                method: key.0,
                split: key.1,
                n: cell.n,
                cov1: cell.cov1 / n,
                cov_k: cell.cov_k / n,
                sim: (cell.sim_n > 0).then(|| cell.sim_sum / cell.sim_n as f64),
                n_pareto: cell.np / n,
                cov_net: cell.cov_net / n,
            });
        }
        EvalReport { rows }
    }
}

/// One row per (method, split) with mean metrics and sample counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "method,split,n,cov1,cov_k,sim,n_pareto,cov_net";

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<(), MetricsError> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            let sim = r.sim.map(|s| format!("{s:.6}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{:.6},{:.6},{},{:.4},{:.6}",
                r.method, r.split, r.n, r.cov1, r.cov_k, sim, r.n_pareto, r.cov_net
            )?;
        }
        Ok(())
    }

    pub fn row(&self, method: &str, split: &str) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.split == split)
    }
}
