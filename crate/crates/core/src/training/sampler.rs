//! Training route-set sampling: a candidate pool built from the
//! six-objective Pareto search plus perturbed shortest paths, a Pareto
//! filter over route attribute vectors, and the fixed selection rule
//! (top-rated, per-dimension optima, random survivors).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attributes::LinkAttributeTable;
use crate::graph::{DualGraph, LinkId, Route};
use crate::metrics::attrs;
use crate::search::{
    bidirectional_dijkstra, dominance_filter, mosp, objective_column, shortest_path, CostVector,
};

use super::TrainError;

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Candidate pool size before Pareto filtering.
    pub pool_target: usize,
    /// Label cap per node for the multi-objective pool search.
    pub mosp_cap: usize,
    /// Top-rated routes kept by the scoring rule.
    pub top_scored: usize,
    /// Uniform-random survivors added after scoring.
    pub random_picks: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            pool_target: 100,
            mosp_cap: 24,
            top_scored: 10,
            random_picks: 10,
        }
    }
}

/// Samples the training route set for one request. `score_fn` rates a
/// route attribute vector (higher is better); the returned set is the
/// union of the top-rated survivors, the six per-dimension optimal routes,
/// and seeded random survivors, deduplicated, each carrying its attribute
/// vector. Deterministic for a fixed seed.
pub fn sample_training_routes(
    graph: &DualGraph,
    table: &LinkAttributeTable,
    origin: LinkId,
    destination: LinkId,
    score_fn: &dyn Fn(&[f64; attrs::DIMS]) -> f64,
    seed: u64,
    config: &SamplerConfig,
) -> Result<Vec<Route>, TrainError> {
    let mc = table.pareto_multicost()?;
    let pareto = mosp(graph, &mc, origin, destination, config.mosp_cap)?;
    if pareto.routes.is_empty() {
        return Err(TrainError::Unreachable(origin, destination));
    }
    let mut pool: Vec<Route> = pareto.routes;

    // exact single-objective optima
    let mut optima: Vec<Route> = Vec::with_capacity(attrs::DIMS);
    for dim in 0..attrs::DIMS {
        let costs = objective_column(&mc, dim)?;
        // zero-cost ties (e.g. toll-free regions) are broken toward the
        // lexicographically smallest sequence by the search itself
        let floored = CostVector::floored(costs.values().to_vec())?;
        if let Some(r) = shortest_path(graph, &floored, origin, destination)? {
            optima.push(r);
        }
    }
    for r in &optima {
        if !pool.contains(r) {
            pool.push(r.clone());
        }
    }

    // fill the pool with perturbed scalarized shortest paths: a random
    // positive weighting of the six objectives, jittered per link, spreads
    // candidates across the whole trade-off surface
    let columns: Vec<CostVector> = (0..attrs::DIMS)
        .map(|d| objective_column(&mc, d))
        .collect::<Result<_, _>>()?;
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| {
            let m = c.values().iter().cloned().fold(0.0, f64::max);
            if m > 0.0 {
                1.0 / m
            } else {
                0.0
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = table.num_links();
    let mut attempts = 0usize;
    while pool.len() < config.pool_target && attempts < 2 * config.pool_target {
        attempts += 1;
        let mut w = [0.0; attrs::DIMS];
        for v in w.iter_mut() {
            *v = rng.gen_range(0.0..1.0);
        }
        let mut perturbed = Vec::with_capacity(n);
        for i in 0..n {
            let link = LinkId(i as u32);
            let mut c = 0.0;
            for d in 0..attrs::DIMS {
                c += w[d] * scales[d] * columns[d].get(link);
            }
            perturbed.push(c * rng.gen_range(1.0..3.0));
        }
        let costs = CostVector::floored(perturbed)?;
        if let Some(r) = bidirectional_dijkstra(graph, &costs, origin, destination)? {
            if !pool.contains(&r) {
                pool.push(r);
            }
        }
    }

    // Pareto filter over route attribute vectors
    let pool_attrs: Vec<[f64; attrs::DIMS]> = pool
        .iter()
        .map(|r| table.route_attrs(r.links()))
        .collect();
    let oriented: Vec<Vec<f64>> = pool_attrs
        .iter()
        .map(|a| attrs::minimize_view(a).to_vec())
        .collect();
    let survivor_idx = dominance_filter(&oriented);

    // top-rated survivors; score ties resolve toward the smaller sequence
    let mut scored: Vec<usize> = survivor_idx.clone();
    scored.sort_by(|&a, &b| {
        score_fn(&pool_attrs[b])
            .total_cmp(&score_fn(&pool_attrs[a]))
            .then_with(|| pool[a].links().cmp(pool[b].links()))
    });
    let mut selected: Vec<Route> = Vec::new();
    let push_unique = |sel: &mut Vec<Route>, r: &Route| {
        if !sel.contains(r) {
            let mut r = r.clone();
            table.set_route_attrs(&mut r);
            sel.push(r);
        }
    };
    for &i in scored.iter().take(config.top_scored) {
        push_unique(&mut selected, &pool[i]);
    }
    // per-dimension optima among the survivors; the exact optima seeded the
    // pool, so each dimension's optimal value is represented even when the
    // optimum route itself was dominated
    for dim in 0..attrs::DIMS {
        let best = survivor_idx.iter().copied().min_by(|&a, &b| {
            oriented[a][dim]
                .total_cmp(&oriented[b][dim])
                .then_with(|| pool[a].links().cmp(pool[b].links()))
        });
        if let Some(i) = best {
            push_unique(&mut selected, &pool[i]);
        }
    }
    let remaining: Vec<usize> = survivor_idx
        .iter()
        .copied()
        .filter(|&i| !selected.iter().any(|s| s == &pool[i]))
        .collect();
    let mut remaining_pool = remaining;
    for _ in 0..config.random_picks.min(remaining_pool.len()) {
        let pick = rng.gen_range(0..remaining_pool.len());
        let idx = remaining_pool.swap_remove(pick);
        push_unique(&mut selected, &pool[idx]);
    }
    Ok(selected)
}
