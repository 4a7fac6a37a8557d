//! Optimization loop: per-sample boosted iterations, gradient
//! accumulation in fixed order, adaptive-moment updates with global-norm
//! clipping, and early stopping on held-out set coverage.
//!
//! Route selection and link-memory updates are treated as non-differentiable
//! constants inside each iteration: gradients flow only through the link
//! costs of that iteration's probability term.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{LinkId, Route};
use crate::metrics::coverage;
use crate::model::{
    ablated_user_context, backward, compute_user, forward_links, link_base, scenario_cost,
    GradAccum, LinkBaseCache, LinkCostCache, LinkMemory, Mode, ModelParams, NormStats, UserCache,
    UserContext,
};
use crate::search::{bidirectional_dijkstra, CostVector};

use super::loss::{boost_weight, iteration_loss};
use super::{PreparedSample, TrainError};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub k: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub mode: Mode,
    pub clip_norm: f64,
    pub patience: usize,
    pub holdout_frac: f64,
    /// Train with a constant unit weight instead of the coverage-gap
    /// weight.
    pub ablate_boost_weight: bool,
    /// Train with the user-preference module detached.
    pub ablate_user_pref: bool,
    /// Realize each iteration's "minimum total cost" route by running the
    /// actual search over the sample graph and add it to the candidate set
    /// as a hard negative (or a better positive) when it is new. Aligns
    /// training dynamics with inference; disable to rank only the
    /// pre-sampled set.
    pub mine_search_negatives: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 3,
            epochs: 10,
            lr: 1e-3,
            batch_size: 32,
            seed: 0,
            mode: Mode::Deployment,
            clip_norm: 10.0,
            patience: 3,
            holdout_frac: 0.1,
            ablate_boost_weight: false,
            ablate_user_pref: false,
            mine_search_negatives: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub cov1: f64,
    pub cov_k: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// Record of one sample's boosted iterations: which route each iteration
/// selected and the weight its loss term carried.
#[derive(Debug, Clone)]
pub struct SampleTrace {
    /// Selected route per iteration, indexing the extended candidate set.
    pub chosen: Vec<usize>,
    pub weights: Vec<f64>,
    /// Label index used by each iteration (it can move when mining finds a
    /// higher-coverage route).
    pub labels: Vec<usize>,
    /// Candidate-set size at each iteration's probability term.
    pub set_sizes: Vec<usize>,
    /// Routes mined from the search, in discovery order.
    pub mined: Vec<crate::graph::Route>,
    /// Per-iteration loss terms.
    pub losses: Vec<f64>,
    /// Running best coverage after each iteration.
    pub cov_after: Vec<f64>,
    pub loss: f64,
    pub cov_final: f64,
}

fn user_for(
    params: &ModelParams,
    stats: &NormStats,
    sample: &PreparedSample,
    ablate_user: bool,
) -> Result<(UserContext, UserCache), TrainError> {
    if ablate_user {
        Ok(ablated_user_context(params))
    } else {
        Ok(compute_user(params, stats, &sample.request_view())?)
    }
}

fn softmax_neg(totals: &[f64]) -> Vec<f64> {
    let mut scores: Vec<f64> = totals.iter().map(|t| -t).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
    scores
}

fn argmax(probs: &[f64]) -> usize {
    let mut best = 0usize;
    for i in 1..probs.len() {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    best
}

/// The per-iteration cost evaluation scope: when mining, the search needs
/// every link priced; otherwise only the candidate routes' links matter.
struct Scope {
    links: Vec<LinkId>,
    pos: HashMap<u32, usize>,
}

impl Scope {
    fn new(links: Vec<LinkId>) -> Scope {
        let pos = links.iter().enumerate().map(|(i, l)| (l.0, i)).collect();
        Scope { links, pos }
    }
}

/// Runs the boosted iterations for one sample, optionally accumulating
/// gradients, and returns the trace.
pub fn run_sample(
    params: &ModelParams,
    stats: &NormStats,
    sample: &PreparedSample,
    config: &TrainConfig,
    mut accum: Option<&mut GradAccum>,
) -> Result<SampleTrace, TrainError> {
    if sample.routes.is_empty() {
        return Err(TrainError::EmptyRouteSet);
    }
    let (ctx, user) = user_for(params, stats, sample, config.ablate_user_pref)?;
    let feats = sample.feature_view();
    let n = sample.graph.num_links();
    let mining = config.mine_search_negatives;
    let scope = if mining {
        Scope::new((0..n as u32).map(LinkId).collect())
    } else {
        Scope::new(sample.union_links.clone())
    };

    let mut routes: Vec<Route> = sample.routes.clone();
    let mut covs: Vec<f64> = sample.covs.clone();
    let mut label = super::loss::label_index(&covs, &routes);

    let mut lm = LinkMemory::new(n, params.config.k_iters);
    let mut cov_prev = 0.0f64;
    let mut trace = SampleTrace {
        chosen: Vec::new(),
        weights: Vec::new(),
        labels: Vec::new(),
        set_sizes: Vec::new(),
        mined: Vec::new(),
        losses: Vec::new(),
        cov_after: Vec::new(),
        loss: 0.0,
        cov_final: 0.0,
    };

    // deployment-mode link evaluations are local, so entries stay valid
    // until the link's memory row changes
    let incremental = config.mode == Mode::Deployment;
    let mut entries: Vec<Option<(LinkBaseCache, LinkCostCache)>> = vec![None; scope.links.len()];
    let mut costs = vec![0.0; scope.links.len()];
    let mut stale: Vec<LinkId> = scope.links.clone();
    let mut offline_cache: Option<crate::model::ForwardCache> = None;

    for k_idx in 1..=config.k {
        let cov_star = covs[label];
        if cov_prev == cov_star {
            break;
        }
        if incremental {
            for l in &stale {
                if let Some(&p) = scope.pos.get(&l.0) {
                    let base = link_base(params, stats, &feats, &lm, *l);
                    let head = scenario_cost(params, &ctx, base.base.clone());
                    costs[p] = head.cost;
                    entries[p] = Some((base, head));
                }
            }
            stale.clear();
        } else {
            let (vals, cache) = forward_links(
                params,
                stats,
                config.mode,
                &sample.graph,
                &feats,
                &lm,
                &ctx,
                &user,
                &scope.links,
            )?;
            costs.copy_from_slice(&vals);
            offline_cache = Some(cache);
        }

        if mining {
            let vector = CostVector::new(costs.clone())?;
            let found =
                bidirectional_dijkstra(&sample.graph, &vector, sample.origin, sample.destination)?
                    .ok_or(TrainError::Unreachable(sample.origin, sample.destination))?;
            // the search's next-favorite alternative (its best route once
            // the favorite is penalized) supervises the diversification
            // regime the later iterations operate in
            let mut penalized = vector.clone();
            for l in found.links() {
                penalized.scale_link(*l, 1.4);
            }
            let runner_up = bidirectional_dijkstra(
                &sample.graph,
                &penalized,
                sample.origin,
                sample.destination,
            )?;
            for new_route in std::iter::once(found).chain(runner_up) {
                if !routes.contains(&new_route) {
                    let cov = coverage(&sample.r_u, new_route.links(), &sample.lengths)
                        .map_err(|e| TrainError::BadConfig(e.to_string()))?;
                    trace.mined.push(new_route.clone());
                    routes.push(new_route);
                    covs.push(cov);
                }
            }
            label = super::loss::label_index(&covs, &routes);
        }
        let cov_star = covs[label];
        if cov_prev == cov_star {
            break;
        }

        let totals: Vec<f64> = routes
            .iter()
            .map(|r| r.links().iter().map(|l| costs[scope.pos[&l.0]]).sum())
            .collect();
        let probs = softmax_neg(&totals);
        let chosen = argmax(&probs);
        let w = if config.ablate_boost_weight {
            1.0
        } else {
            boost_weight(cov_star, cov_prev)
        };
        let l_k = iteration_loss(&probs, label, w);
        trace.loss += l_k;
        trace.losses.push(l_k);
        trace.chosen.push(chosen);
        trace.weights.push(w);
        trace.labels.push(label);
        trace.set_sizes.push(routes.len());

        if let Some(acc) = accum.as_deref_mut() {
            if w > 0.0 {
                let mut g_costs = vec![0.0; scope.links.len()];
                for (j, r) in routes.iter().enumerate() {
                    let y = if j == label { 1.0 } else { 0.0 };
                    // dL/d(route cost) = w(Y_j − p_j) through the negated
                    // softmax: the label route's links carry positive
                    // gradient, every other route's links negative
                    let coef = w * (y - probs[j]);
                    if coef == 0.0 {
                        continue;
                    }
                    for l in r.links() {
                        g_costs[scope.pos[&l.0]] += coef;
                    }
                }
                if incremental {
                    // assemble a cache holding only links with gradient
                    let mut link_ids = Vec::new();
                    let mut bases = Vec::new();
                    let mut heads = Vec::new();
                    let mut g_sub = Vec::new();
                    for (p, g) in g_costs.iter().enumerate() {
                        if *g != 0.0 {
                            let (base, head) = entries[p].as_ref().expect("entry computed");
                            link_ids.push(scope.links[p]);
                            bases.push(base.clone());
                            heads.push(head.clone());
                            g_sub.push(*g);
                        }
                    }
                    let cache = crate::model::ForwardCache {
                        mode: config.mode,
                        user: user.clone(),
                        user_ablated: ctx.ablated,
                        gate: ctx.gate.clone(),
                        link_ids,
                        bases,
                        closure_ids: Vec::new(),
                        closure_bases: Vec::new(),
                        attn: None,
                        heads,
                    };
                    backward(params, &cache, &g_sub, acc)?;
                } else {
                    backward(
                        params,
                        offline_cache.as_ref().expect("offline cache stored"),
                        &g_costs,
                        acc,
                    )?;
                }
            }
        }

        lm.set_iteration(routes[chosen].links(), k_idx)?;
        if incremental {
            stale.extend_from_slice(routes[chosen].links());
        }
        cov_prev = cov_prev.max(covs[chosen]);
        trace.cov_after.push(cov_prev);
    }
    trace.cov_final = cov_prev;
    Ok(trace)
}

/// Total loss with selections, weights and link-memory evolution frozen to
/// a previously recorded trace. This is the function whose gradient the
/// analytic backward pass computes, so finite differences of it validate
/// the trainer's gradients.
pub fn frozen_sample_loss(
    params: &ModelParams,
    stats: &NormStats,
    sample: &PreparedSample,
    config: &TrainConfig,
    trace: &SampleTrace,
) -> Result<f64, TrainError> {
    let (ctx, user) = user_for(params, stats, sample, config.ablate_user_pref)?;
    let feats = sample.feature_view();
    let mut routes: Vec<Route> = sample.routes.clone();
    routes.extend(trace.mined.iter().cloned());
    let mut scope_links: Vec<LinkId> = routes
        .iter()
        .flat_map(|r| r.links().iter().copied())
        .collect();
    scope_links.sort();
    scope_links.dedup();
    let scope = Scope::new(scope_links);

    let mut lm = LinkMemory::new(sample.graph.num_links(), params.config.k_iters);
    let mut loss = 0.0;
    for it in 0..trace.chosen.len() {
        let (costs, _) = forward_links(
            params,
            stats,
            config.mode,
            &sample.graph,
            &feats,
            &lm,
            &ctx,
            &user,
            &scope.links,
        )?;
        let support = &routes[..trace.set_sizes[it]];
        let totals: Vec<f64> = support
            .iter()
            .map(|r| r.links().iter().map(|l| costs[scope.pos[&l.0]]).sum())
            .collect();
        let probs = softmax_neg(&totals);
        loss += iteration_loss(&probs, trace.labels[it], trace.weights[it]);
        lm.set_iteration(routes[trace.chosen[it]].links(), it + 1)?;
    }
    Ok(loss)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bc1 = 1.0 - B1.powi(self.t as i32);
        let bc2 = 1.0 - B2.powi(self.t as i32);
        for i in 0..theta.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            theta[i] -= self.lr * mhat / (vhat.sqrt() + EPS);
        }
    }
}

fn clip_global_norm(grad: &mut [f64], max_norm: f64) {
    let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= scale;
        }
    }
}

/// Trains the model. Gradient reduction runs in fixed sample order; the
/// returned parameters are the best held-out-coverage epoch (the final
/// epoch when no holdout exists).
pub fn train(
    samples: &[PreparedSample],
    init: ModelParams,
    stats: &NormStats,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::BadConfig("no training samples".into()));
    }
    if config.k != init.config.k_iters {
        return Err(TrainError::BadConfig(format!(
            "config.k = {} but the model has k_iters = {}",
            config.k, init.config.k_iters
        )));
    }
    if config.mode == Mode::OfflineAttention && !init.config.neighbor_attention {
        return Err(TrainError::BadConfig(
            "offline mode requires a model built with neighbor attention".into(),
        ));
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let holdout_n = ((samples.len() as f64 * config.holdout_frac) as usize)
        .min(samples.len().saturating_sub(1));
    let (holdout_idx, train_idx) = order.split_at(holdout_n);
    let holdout_idx = holdout_idx.to_vec();
    let mut train_idx = train_idx.to_vec();

    let mut theta = init.flatten();
    let mut adam = Adam::new(theta.len(), config.lr);
    let mut history = Vec::new();
    let mut best_covk = f64::NEG_INFINITY;
    let mut best_theta = theta.clone();
    let mut best_epoch = 0usize;
    let mut bad_epochs = 0usize;

    for epoch in 1..=config.epochs {
        // step decay sharpens the endgame once the ranking is shaped
        adam.lr = config.lr * if epoch * 5 > config.epochs * 3 { 0.5 } else { 1.0 };
        // fresh deterministic shuffle per epoch
        let mut erng = ChaCha8Rng::seed_from_u64(config.seed ^ (epoch as u64).wrapping_mul(0x9e37));
        for i in (1..train_idx.len()).rev() {
            let j = erng.gen_range(0..=i);
            train_idx.swap(i, j);
        }

        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            let params = ModelParams::from_flat(&init.config, &theta)?;
            let mut accum = GradAccum::new(&params);
            let mut batch_loss = 0.0;
            for &si in batch {
                let trace = run_sample(&params, stats, &samples[si], config, Some(&mut accum))?;
                if !trace.loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        epoch,
                        sample: si,
                        value: trace.loss,
                    });
                }
                batch_loss += trace.loss;
            }
            epoch_loss += batch_loss;
            let mut grad = accum.g.flatten();
            let inv = 1.0 / batch.len() as f64;
            for g in grad.iter_mut() {
                *g *= inv;
            }
            clip_global_norm(&mut grad, config.clip_norm);
            adam.step(&mut theta, &grad);
        }
        let mean_loss = epoch_loss / train_idx.len().max(1) as f64;

        // holdout coverage under the current parameters
        let params = ModelParams::from_flat(&init.config, &theta)?;
        let (mut cov1, mut covk) = (0.0, 0.0);
        if !holdout_idx.is_empty() {
            for &si in &holdout_idx {
                let trace = run_sample(&params, stats, &samples[si], config, None)?;
                // cov_after[0] is the coverage of the first selected route,
                // cov_final the best across iterations; both are 0 when no
                // iteration ran, which only happens when nothing covers
                cov1 += trace.cov_after.first().copied().unwrap_or(0.0);
                covk += trace.cov_final;
            }
            cov1 /= holdout_idx.len() as f64;
            covk /= holdout_idx.len() as f64;
        }
        history.push(EpochLog {
            epoch,
            loss: mean_loss,
            cov1,
            cov_k: covk,
        });

        let score = if holdout_idx.is_empty() { -mean_loss } else { covk };
        if score > best_covk {
            best_covk = score;
            best_theta = theta.clone();
            best_epoch = epoch;
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs >= config.patience {
                break;
            }
        }
    }

    let params = ModelParams::from_flat(&init.config, &best_theta)?;
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DualGraph, LinkId, Route};
    use crate::model::ModelConfig;
    use crate::training::loss::label_index;

    fn braided_graph() -> DualGraph {
        let edges = [
            (0u32, 1u32),
            (0, 2),
            (1, 3),
            (2, 3),
            (1, 4),
            (2, 5),
            (4, 6),
            (5, 6),
            (3, 6),
            (3, 7),
            (6, 7),
        ];
        let adj: Vec<(LinkId, LinkId)> = edges.iter().map(|&(a, b)| (LinkId(a), LinkId(b))).collect();
        DualGraph::from_adjacency(&[100.0; 8], &adj).unwrap()
    }

    fn prepared_sample(config: &ModelConfig, seed: u64) -> PreparedSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = braided_graph();
        let n = graph.num_links();
        let routes: Vec<Route> = [
            vec![0u32, 2, 3, 7],
            vec![0, 1, 3, 7],
            vec![0, 1, 4, 6, 7],
            vec![0, 2, 5, 6, 7],
        ]
        .iter()
        .map(|ids| Route::new(ids.iter().map(|&i| LinkId(i)).collect(), &graph).unwrap())
        .collect();
        let covs = vec![0.9, 0.6, 0.3, 0.2];
        let label = label_index(&covs, &routes);
        let mut xs: Vec<f64> = (0..config.s_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        xs[config.scenario_channel] = 2.0;
        let mut xh = vec![0.0; config.h_events * config.h_dim];
        for j in 0..4 {
            for d in 0..config.h_dim {
                xh[j * config.h_dim + d] = rng.gen_range(-1.0..1.0);
            }
        }
        let mut xlink = vec![0.0; n * config.link_dim];
        for i in 0..n {
            for d in 0..config.link_dim {
                xlink[i * config.link_dim + d] = if d == config.maneuver_channel {
                    (i % 3) as f64
                } else {
                    rng.gen_range(-1.0..1.0)
                };
            }
        }
        let mut xfreq = vec![0.0; n * config.freq_events * config.freq_dim];
        for e in 0..2 {
            for d in 0..config.freq_dim {
                xfreq[(0 * config.freq_events + e) * config.freq_dim + d] = rng.gen_range(0.1..1.0);
            }
        }
        let xheat: Vec<f64> = (0..n * config.heat_dim).map(|_| rng.gen_range(0.0..2.0)).collect();
        let union_links = PreparedSample::compute_union(&routes);
        PreparedSample {
            graph,
            origin: LinkId(0),
            destination: LinkId(7),
            xs,
            xh,
            xlink,
            xfreq,
            xheat,
            lengths: vec![100.0; n],
            routes,
            covs,
            label,
            r_u: vec![LinkId(0), LinkId(2), LinkId(3), LinkId(7)],
            union_links,
            in_set2: true,
            in_set3: true,
        }
    }

    fn gradcheck(mode: Mode) {
        let config = ModelConfig::desk();
        let params = ModelParams::init(&config, 7).unwrap();
        let stats = NormStats::identity(&config);
        let sample = prepared_sample(&config, 13);
        let tcfg = TrainConfig {
            mode,
            ..TrainConfig::default()
        };
        let mut accum = GradAccum::new(&params);
        let trace = run_sample(&params, &stats, &sample, &tcfg, Some(&mut accum)).unwrap();
        assert!(trace.loss > 0.0);
        let analytic = accum.g.flatten();
        let flat = params.flatten();
        let h = 1e-5;
        let stride = (flat.len() / 128).max(1);
        for idx in (0..flat.len()).step_by(stride) {
            let mut plus = flat.clone();
            plus[idx] += h;
            let mut minus = flat.clone();
            minus[idx] -= h;
            let lp = frozen_sample_loss(
                &ModelParams::from_flat(&config, &plus).unwrap(),
                &stats,
                &sample,
                &tcfg,
                &trace,
            )
            .unwrap();
            let lm = frozen_sample_loss(
                &ModelParams::from_flat(&config, &minus).unwrap(),
                &stats,
                &sample,
                &tcfg,
                &trace,
            )
            .unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let a = analytic[idx];
            let rel = (a - fd).abs() / (a.abs() + fd.abs()).max(1e-6);
            assert!(rel < 1e-4, "coord {idx}: analytic {a} vs fd {fd}");
        }
    }

    #[test]
    fn boosted_loss_gradients_match_finite_differences_deployment() {
        gradcheck(Mode::Deployment);
    }

    #[test]
    fn boosted_loss_gradients_match_finite_differences_offline() {
        gradcheck(Mode::OfflineAttention);
    }

    #[test]
    fn k1_matches_plain_weighted_cross_entropy() {
        let config = ModelConfig::desk();
        let params = ModelParams::init(&config, 3).unwrap();
        let stats = NormStats::identity(&config);
        let sample = prepared_sample(&config, 17);
        let tcfg = TrainConfig {
            k: 1,
            ..TrainConfig::default()
        };
        let trace = run_sample(&params, &stats, &sample, &tcfg, None).unwrap();

        // independent single-iteration implementation over the full graph
        let (ctx, user) = compute_user(&params, &stats, &sample.request_view()).unwrap();
        let lm = LinkMemory::new(sample.graph.num_links(), config.k_iters);
        let all: Vec<LinkId> = (0..sample.graph.num_links() as u32).map(LinkId).collect();
        let (costs, _) = forward_links(
            &params,
            &stats,
            Mode::Deployment,
            &sample.graph,
            &sample.feature_view(),
            &lm,
            &ctx,
            &user,
            &all,
        )
        .unwrap();
        let totals: Vec<f64> = sample
            .routes
            .iter()
            .map(|r| r.links().iter().map(|l| costs[l.idx()]).sum::<f64>())
            .collect();
        let max = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = totals.iter().map(|t| (-(t - max)).exp()).sum();
        let p_label = (-(totals[sample.label] - max)).exp() / z;
        let expected = -sample.covs[sample.label] * p_label.ln();
        assert!(
            (trace.loss - expected).abs() < 1e-12,
            "{} vs {expected}",
            trace.loss
        );
    }

    #[test]
    fn training_is_deterministic_and_learns_the_fixture() {
        let config = ModelConfig::desk();
        let stats = NormStats::identity(&config);
        let samples: Vec<PreparedSample> = (0..8).map(|i| prepared_sample(&config, 100 + i)).collect();
        let tcfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            holdout_frac: 0.25,
            seed: 5,
            ..TrainConfig::default()
        };
        let run = |seed| {
            let init = ModelParams::init(&config, seed).unwrap();
            train(&samples, init, &stats, &tcfg).unwrap()
        };
        let a = run(1);
        let b = run(1);
        let la: Vec<f64> = a.history.iter().map(|e| e.loss).collect();
        let lb: Vec<f64> = b.history.iter().map(|e| e.loss).collect();
        assert_eq!(la, lb, "loss curve must be bitwise identical");
        assert_eq!(a.params.flatten(), b.params.flatten());
        assert!(a.history.last().unwrap().loss < a.history.first().unwrap().loss);
    }
}
