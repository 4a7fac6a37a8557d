//! Iterative route planning: alternate the cost model with shortest-path
//! search, conditioning each round on the links already selected.
//!
//! Deployment-mode costs are local per link, so after the first round only
//! links whose memory bits changed (the previous route's links) are
//! re-evaluated; the produced cost vectors are bit-identical to a full
//! recomputation. Offline mode re-evaluates everything each round because
//! neighbor attention couples adjacent links.

use std::time::{Duration, Instant};

use crate::attributes::LinkAttributeTable;
use crate::graph::{DualGraph, LinkId, Route};
use crate::metrics::attrs;
use crate::model::{
    ablated_user_context, compute_link_cost, compute_user, forward_links, LinkArrays, LinkMemory,
    Mode, ModelError, ModelParams, NormStats, RequestView,
};

use crate::search::{
    bidirectional_dijkstra, mosp, penalty_alternatives, CostVector, MultiCost, SearchError,
};
use crate::training::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("origin {0} cannot reach destination {1}")]
    Unreachable(LinkId, LinkId),
    #[error("iteration count must be at least 1")]
    KTooSmall,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Clone)]
pub struct PlanConfig {
    pub k: usize,
    pub mode: Mode,
    /// Re-evaluate only memory-changed links after the first round
    /// (deployment mode only; offline mode always recomputes everything).
    pub incremental: bool,
    /// Evaluate with the user-preference module detached.
    pub ablate_user_pref: bool,
    /// Keep the per-round cost vectors in the result (test oracles).
    pub keep_cost_vectors: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            k: 3,
            mode: Mode::Deployment,
            incremental: true,
            ablate_user_pref: false,
            keep_cost_vectors: false,
        }
    }
}

/// Planning output: up to `k` distinct routes (first is the primary
/// recommendation), the number of link-cost evaluations per round, and the
/// wall-clock duration.
#[derive(Debug, Clone)]
pub struct PlanResult {
    pub routes: Vec<Route>,
    /// One route per round, duplicates included (`routes` deduplicates).
    pub round_routes: Vec<Route>,
    pub eval_counts: Vec<usize>,
    pub duration: Duration,
    pub cost_vectors: Option<Vec<Vec<f64>>>,
}

/// Plans `k` rounds over the request sub-network. Duplicate routes are
/// dropped from the output but still advance the link memory, raising the
/// revisit cost of their links in later rounds.
pub fn plan(
    graph: &DualGraph,
    feats: &LinkArrays<'_>,
    request: &RequestView<'_>,
    params: &ModelParams,
    stats: &NormStats,
    origin: LinkId,
    destination: LinkId,
    config: &PlanConfig,
) -> Result<PlanResult, PlanError> {
    if config.k < 1 {
        return Err(PlanError::KTooSmall);
    }
    let start = Instant::now();
    let n = graph.num_links();
    let (ctx, user) = if config.ablate_user_pref {
        ablated_user_context(params)
    } else {
        compute_user(params, stats, request)?
    };
    let mut lm = LinkMemory::new(n, params.config.k_iters);
    let mut costs: Vec<f64> = vec![0.0; n];
    let mut routes: Vec<Route> = Vec::new();
    let mut round_routes: Vec<Route> = Vec::new();
    let mut eval_counts = Vec::with_capacity(config.k);
    let mut cost_vectors = config.keep_cost_vectors.then(Vec::new);
    let all_links: Vec<LinkId> = (0..n as u32).map(LinkId).collect();
    let mut prev_route: Option<Route> = None;

    for round in 1..=config.k {
        let evals = match (config.mode, round) {
            (Mode::Deployment, r) if r > 1 && config.incremental => {
                let changed = prev_route.as_ref().expect("previous round ran").links();
                for l in changed {
                    costs[l.idx()] = compute_link_cost(params, stats, feats, &lm, &ctx, *l);
                }
                changed.len()
            }
            (Mode::Deployment, _) => {
                for l in &all_links {
                    costs[l.idx()] = compute_link_cost(params, stats, feats, &lm, &ctx, *l);
                }
                n
            }
            (Mode::OfflineAttention, _) => {
                let (vals, _) = forward_links(
                    params,
                    stats,
                    config.mode,
                    graph,
                    feats,
                    &lm,
                    &ctx,
                    &user,
                    &all_links,
                )?;
                costs.copy_from_slice(&vals);
                n
            }
        };
        eval_counts.push(evals);
        if let Some(cv) = cost_vectors.as_mut() {
            cv.push(costs.clone());
        }
        let vector = CostVector::new(costs.clone())?;
        let route = bidirectional_dijkstra(graph, &vector, origin, destination)?
            .ok_or(PlanError::Unreachable(origin, destination))?;
        lm.set_iteration(route.links(), round)?;
        if !routes.contains(&route) {
            routes.push(route.clone());
        }
        round_routes.push(route.clone());
        prev_route = Some(route);
    }

    Ok(PlanResult {
        routes,
        round_routes,
        eval_counts,
        duration: start.elapsed(),
        cost_vectors,
    })
}

/// Offline reference baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    /// Shortest free-flow travel time.
    St,
    /// Shortest distance.
    Sd,
    /// Minimum toll; degenerate ties resolve to fewest links, then the
    /// lexicographically smallest sequence (the epsilon cost floor makes
    /// link count the secondary criterion).
    Mt,
    /// Highest familiarity: length discounted on familiar links.
    Hf,
    Kst,
    Ksd,
    Kmt,
    Khf,
    /// Two-objective Pareto routes over (time, distance).
    TwoDp,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 9] = [
        BaselineMethod::St,
        BaselineMethod::Sd,
        BaselineMethod::Mt,
        BaselineMethod::Hf,
        BaselineMethod::Kst,
        BaselineMethod::Ksd,
        BaselineMethod::Kmt,
        BaselineMethod::Khf,
        BaselineMethod::TwoDp,
    ];

    pub const SINGLE_ROUTE: [BaselineMethod; 4] = [
        BaselineMethod::St,
        BaselineMethod::Sd,
        BaselineMethod::Mt,
        BaselineMethod::Hf,
    ];

    pub const MULTI_ROUTE: [BaselineMethod; 5] = [
        BaselineMethod::Kst,
        BaselineMethod::Ksd,
        BaselineMethod::Kmt,
        BaselineMethod::Khf,
        BaselineMethod::TwoDp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::St => "st",
            BaselineMethod::Sd => "sd",
            BaselineMethod::Mt => "mt",
            BaselineMethod::Hf => "hf",
            BaselineMethod::Kst => "kst",
            BaselineMethod::Ksd => "ksd",
            BaselineMethod::Kmt => "kmt",
            BaselineMethod::Khf => "khf",
            BaselineMethod::TwoDp => "2dp",
        }
    }

    pub fn parse(name: &str) -> Option<BaselineMethod> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub k: usize,
    pub penalty_factor: f64,
    pub hf_lambda: f64,
    pub mosp_cap: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            k: 3,
            penalty_factor: 1.4,
            hf_lambda: 0.5,
            mosp_cap: 512,
        }
    }
}

/// Runs one baseline over the request sub-network. Route attribute vectors
/// are filled from the table.
pub fn plan_baseline(
    graph: &DualGraph,
    table: &LinkAttributeTable,
    origin: LinkId,
    destination: LinkId,
    method: BaselineMethod,
    config: &BaselineConfig,
) -> Result<PlanResult, PlanError> {
    let start = Instant::now();
    let single = |costs: CostVector| -> Result<Vec<Route>, PlanError> {
        Ok(bidirectional_dijkstra(graph, &costs, origin, destination)?
            .map(|r| vec![r])
            .unwrap_or_default())
    };
    let multi = |costs: CostVector| -> Result<Vec<Route>, PlanError> {
        Ok(penalty_alternatives(
            graph,
            &costs,
            origin,
            destination,
            config.k,
            config.penalty_factor,
        )?)
    };
    let mut routes = match method {
        BaselineMethod::St => single(table.objective(attrs::TIME)?)?,
        BaselineMethod::Sd => single(table.objective(attrs::DIST)?)?,
        BaselineMethod::Mt => single(table.objective(attrs::TOLL)?)?,
        BaselineMethod::Hf => single(table.familiarity_cost(config.hf_lambda)?)?,
        BaselineMethod::Kst => multi(table.objective(attrs::TIME)?)?,
        BaselineMethod::Ksd => multi(table.objective(attrs::DIST)?)?,
        BaselineMethod::Kmt => multi(table.objective(attrs::TOLL)?)?,
        BaselineMethod::Khf => multi(table.familiarity_cost(config.hf_lambda)?)?,
        BaselineMethod::TwoDp => {
            let n = table.num_links();
            let mut data = Vec::with_capacity(2 * n);
            for i in 0..n {
                data.push(table.time_s[i]);
                data.push(table.length_m[i]);
            }
            let mc = MultiCost::new(2, data)?;
            // keep zero-cost regions searchable but strictly positive
            let mc = {
                let mut floored = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let c = mc.get(LinkId(i as u32));
                    floored.push(objective_floor(c[0]));
                    floored.push(objective_floor(c[1]));
                }
                MultiCost::new(2, floored)?
            };
            let result = mosp(graph, &mc, origin, destination, config.mosp_cap)?;
            // representative spread over the front (sorted by the first
            // objective): first, evenly spaced interior, last
            let m = result.routes.len();
            let want = config.k.min(m);
            let mut picks = Vec::with_capacity(want);
            for i in 0..want {
                let idx = if want == 1 {
                    0
                } else {
                    (i * (m - 1)) / (want - 1)
                };
                if !picks.contains(&idx) {
                    picks.push(idx);
                }
            }
            picks.into_iter().map(|i| result.routes[i].clone()).collect()
        }
    };
    for r in routes.iter_mut() {
        table.set_route_attrs(r);
    }
    Ok(PlanResult {
        round_routes: routes.clone(),
        routes,
        eval_counts: Vec::new(),
        duration: start.elapsed(),
        cost_vectors: None,
    })
}

fn objective_floor(v: f64) -> f64 {
    v.max(crate::search::COST_EPSILON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn braided() -> DualGraph {
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
        let adj: Vec<(LinkId, LinkId)> =
            edges.iter().map(|&(a, b)| (LinkId(a), LinkId(b))).collect();
        DualGraph::from_adjacency(&[100.0; 8], &adj).unwrap()
    }

    struct Feats {
        xlink: Vec<f64>,
        xfreq: Vec<f64>,
        xheat: Vec<f64>,
        xs: Vec<f64>,
        xh: Vec<f64>,
    }

    fn feats(config: &ModelConfig, n: usize, seed: u64) -> Feats {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut xlink = vec![0.0; n * config.link_dim];
        for (i, v) in xlink.iter_mut().enumerate() {
            *v = if i % config.link_dim == config.maneuver_channel {
                ((i / config.link_dim) % 4) as f64
            } else {
                rng.gen_range(-1.0..1.0)
            };
        }
        let mut xs: Vec<f64> = (0..config.s_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        xs[config.scenario_channel] = 0.0;
        let mut xh = vec![0.0; config.h_events * config.h_dim];
        for d in 0..2 * config.h_dim {
            xh[d] = rng.gen_range(-1.0..1.0);
        }
        Feats {
            xlink,
            xfreq: vec![0.0; n * config.freq_events * config.freq_dim],
            xheat: (0..n * config.heat_dim).map(|_| rng.gen_range(0.0..1.0)).collect(),
            xs,
            xh,
        }
    }

    fn constant_cost_params(config: &ModelConfig) -> ModelParams {
        let zero = ModelParams::init(config, 0).unwrap();
        let flat = vec![0.0; zero.param_count()];
        let mut p = ModelParams::from_flat(config, &flat).unwrap();
        for head in p.heads.iter_mut() {
            let n = head.bs.len();
            head.bs[n - 1][0] = 1.0;
        }
        p
    }

    #[test]
    fn constant_model_matches_plain_search_and_counts_evals() {
        let config = ModelConfig::desk();
        let graph = braided();
        let n = graph.num_links();
        let f = feats(&config, n, 3);
        let params = constant_cost_params(&config);
        let stats = NormStats::identity(&config);
        let view = LinkArrays {
            n,
            xlink: &f.xlink,
            xfreq: &f.xfreq,
            xheat: &f.xheat,
        };
        let request = RequestView { xs: &f.xs, xh: &f.xh };

        let res = plan(
            &graph,
            &view,
            &request,
            &params,
            &stats,
            LinkId(0),
            LinkId(7),
            &PlanConfig::default(),
        )
        .unwrap();
        // constant costs: every round finds the same route; duplicates
        // dropped, memory still advances
        assert_eq!(res.routes.len(), 1);
        let uniform = CostVector::new(vec![1.0; n]).unwrap();
        let expect = bidirectional_dijkstra(&graph, &uniform, LinkId(0), LinkId(7))
            .unwrap()
            .unwrap();
        assert_eq!(res.routes[0], expect);
        let r_len = expect.len();
        assert_eq!(res.eval_counts, vec![n, r_len, r_len]);

        let res1 = plan(
            &graph,
            &view,
            &request,
            &params,
            &stats,
            LinkId(0),
            LinkId(7),
            &PlanConfig {
                k: 1,
                ..PlanConfig::default()
            },
        )
        .unwrap();
        assert_eq!(res1.routes.len(), 1);
        assert_eq!(res1.eval_counts, vec![n]);
    }

    #[test]
    fn incremental_matches_full_recompute_bit_for_bit() {
        let config = ModelConfig::desk();
        let graph = braided();
        let n = graph.num_links();
        let f = feats(&config, n, 9);
        let params = ModelParams::init(&config, 21).unwrap();
        let stats = NormStats::identity(&config);
        let view = LinkArrays {
            n,
            xlink: &f.xlink,
            xfreq: &f.xfreq,
            xheat: &f.xheat,
        };
        let request = RequestView { xs: &f.xs, xh: &f.xh };
        let run = |incremental: bool| {
            plan(
                &graph,
                &view,
                &request,
                &params,
                &stats,
                LinkId(0),
                LinkId(7),
                &PlanConfig {
                    incremental,
                    keep_cost_vectors: true,
                    ..PlanConfig::default()
                },
            )
            .unwrap()
        };
        let inc = run(true);
        let full = run(false);
        assert_eq!(inc.routes, full.routes);
        assert_eq!(inc.cost_vectors, full.cost_vectors);
        assert_eq!(full.eval_counts, vec![n, n, n]);
        assert!(inc.eval_counts[0] == n && inc.eval_counts[1] < n);
    }

    #[test]
    fn k_zero_rejected_and_unreachable_reported() {
        let config = ModelConfig::desk();
        let graph = DualGraph::from_adjacency(&[100.0, 100.0], &[]).unwrap();
        let f = feats(&config, 2, 1);
        let params = constant_cost_params(&config);
        let stats = NormStats::identity(&config);
        let view = LinkArrays {
            n: 2,
            xlink: &f.xlink[..2 * config.link_dim],
            xfreq: &f.xfreq[..2 * config.freq_events * config.freq_dim],
            xheat: &f.xheat[..2 * config.heat_dim],
        };
        let request = RequestView { xs: &f.xs, xh: &f.xh };
        let bad = plan(
            &graph,
            &view,
            &request,
            &params,
            &stats,
            LinkId(0),
            LinkId(1),
            &PlanConfig {
                k: 0,
                ..PlanConfig::default()
            },
        );
        assert!(matches!(bad, Err(PlanError::KTooSmall)));
        let unreachable = plan(
            &graph,
            &view,
            &request,
            &params,
            &stats,
            LinkId(0),
            LinkId(1),
            &PlanConfig::default(),
        );
        assert!(matches!(unreachable, Err(PlanError::Unreachable(..))));
    }

    fn diamond_table() -> (DualGraph, LinkAttributeTable) {
        let graph = DualGraph::from_adjacency(
            &[100.0; 4],
            &[
                (LinkId(0), LinkId(1)),
                (LinkId(0), LinkId(2)),
                (LinkId(1), LinkId(3)),
                (LinkId(2), LinkId(3)),
            ],
        )
        .unwrap();
        let table = LinkAttributeTable {
            time_s: vec![10.0, 10.0, 10.0, 10.0],
            length_m: vec![100.0, 100.0, 100.0, 100.0],
            toll: vec![0.0, 0.0, 0.0, 0.0],
            familiar_len: vec![0.0, 0.0, 100.0, 0.0],
            lights: vec![0.0; 4],
            rough_len: vec![0.0; 4],
        };
        (graph, table)
    }

    #[test]
    fn uniform_speeds_make_st_equal_sd() {
        let (graph, table) = diamond_table();
        let cfg = BaselineConfig::default();
        let st = plan_baseline(&graph, &table, LinkId(0), LinkId(3), BaselineMethod::St, &cfg)
            .unwrap();
        let sd = plan_baseline(&graph, &table, LinkId(0), LinkId(3), BaselineMethod::Sd, &cfg)
            .unwrap();
        assert_eq!(st.routes, sd.routes);
        assert!(st.routes[0].attributes.is_some());
    }

    #[test]
    fn toll_free_mt_returns_lexicographically_smallest() {
        let (graph, table) = diamond_table();
        let cfg = BaselineConfig::default();
        let mt = plan_baseline(&graph, &table, LinkId(0), LinkId(3), BaselineMethod::Mt, &cfg)
            .unwrap();
        assert_eq!(
            mt.routes[0].links(),
            &[LinkId(0), LinkId(1), LinkId(3)]
        );
    }

    #[test]
    fn hf_prefers_the_familiar_branch() {
        let (graph, table) = diamond_table();
        let cfg = BaselineConfig::default();
        let hf = plan_baseline(&graph, &table, LinkId(0), LinkId(3), BaselineMethod::Hf, &cfg)
            .unwrap();
        // discounted: branch via l2 costs 100+50+100, via l1 300
        assert_eq!(hf.routes[0].links(), &[LinkId(0), LinkId(2), LinkId(3)]);
    }

    #[test]
    fn two_dp_returns_front_representatives() {
        let graph = DualGraph::from_adjacency(
            &[100.0; 4],
            &[
                (LinkId(0), LinkId(1)),
                (LinkId(0), LinkId(2)),
                (LinkId(1), LinkId(3)),
                (LinkId(2), LinkId(3)),
            ],
        )
        .unwrap();
        let table = LinkAttributeTable {
            time_s: vec![1.0, 1.0, 3.0, 1.0],
            length_m: vec![10.0, 30.0, 10.0, 10.0],
            toll: vec![0.0; 4],
            familiar_len: vec![0.0; 4],
            lights: vec![0.0; 4],
            rough_len: vec![0.0; 4],
        };
        let res = plan_baseline(
            &graph,
            &table,
            LinkId(0),
            LinkId(3),
            BaselineMethod::TwoDp,
            &BaselineConfig::default(),
        )
        .unwrap();
        assert_eq!(res.routes.len(), 2);
    }
}
