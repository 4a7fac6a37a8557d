//! Synthetic city + request generator with planted user preferences.
//!
//! The road network is a jittered grid with arterial rows/columns and a
//! tolled highway ring. Each user belongs to one of four preference
//! archetypes (time-minimizer, toll-avoider, comfort-seeker,
//! familiarity-seeker); their trajectory for every request is the optimal
//! route under the archetype's latent per-link utility on the full city,
//! with familiarity accumulated from their own earlier trips. Requests are
//! reduced to sub-networks with the skeleton-to-capillary extractor, then
//! training route sets are sampled inside the sub-network with the user's
//! planted utility as the rating function.
//!
//! Everything derives from one root seed: identical configs produce
//! byte-identical dataset files.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attributes::LinkAttributeTable;
use crate::graph::{DualGraph, DualOptions, LinkId, PrimalEdge, PrimalGraph, PrimalNode, Route};
use crate::metrics::{attrs, coverage};
use crate::model::ModelConfig;
use crate::search::{shortest_path, CostVector};
use crate::stc::{
    build_skeleton, expand_capillary, sample_candidate_routes, CapillaryFeatures, StcConfig,
};
use crate::training::{sample_training_routes, SamplerConfig};

use super::{
    fit_stats, AttrChannels, DataError, DatasetHeader, FreqEntry, SampleRecord, SplitFile,
    DATASET_VERSION,
};

/// Everything one generation run produces, in memory.
#[derive(Debug)]
pub struct SynthOutput {
    pub header: DatasetHeader,
    pub samples: Vec<SampleRecord>,
    pub split: SplitFile,
    pub stats: crate::model::NormStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Archetype {
    Time,
    Toll,
    Comfort,
    Familiar,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::Time,
        Archetype::Toll,
        Archetype::Comfort,
        Archetype::Familiar,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Archetype::Time => "time",
            Archetype::Toll => "toll",
            Archetype::Comfort => "comfort",
            Archetype::Familiar => "familiar",
        }
    }

    /// The single-objective baseline this archetype is planted to match.
    pub fn matching_baseline(&self) -> crate::inference::BaselineMethod {
        use crate::inference::BaselineMethod::*;
        match self {
            Archetype::Time => St,
            Archetype::Toll => Mt,
            Archetype::Comfort => Sd,
            Archetype::Familiar => Hf,
        }
    }

    /// Latent route utility from an attribute vector (lower is better).
    pub fn utility(&self, a: &[f64; attrs::DIMS]) -> f64 {
        match self {
            Archetype::Time => a[attrs::TIME],
            Archetype::Toll => a[attrs::TOLL] + 1e-5 * a[attrs::TIME],
            Archetype::Comfort => a[attrs::DIST] + 0.015 * a[attrs::ROUGH],
            Archetype::Familiar => {
                a[attrs::DIST] * (1.0 - 0.5 * a[attrs::FAMILIAR_PROP])
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    pub spacing_m: f64,
    pub users: usize,
    pub samples_per_user: usize,
    /// Share of users with no request history at all.
    pub anonymous_frac: f64,
    pub od_min_cells: usize,
    pub od_max_cells: usize,
    /// Share of requests drawn from the popular origin/destination pool.
    pub popular_od_frac: f64,
    pub popular_pool: usize,
    pub test_count: usize,
    pub stc: StcConfig,
    pub sampler: SamplerConfig,
    pub model: ModelConfig,
    pub seed: u64,
}

impl SynthConfig {
    /// Desk-scale city with full request generation. The extraction
    /// thresholds here are looser than the planner defaults: the generator
    /// wants sub-networks in the hundreds of links, and heat accumulated
    /// over the simulated request stream densifies them like real traffic
    /// history would.
    pub fn desk(users: usize, samples_per_user: usize, test_count: usize, seed: u64) -> SynthConfig {
        let mut stc = StcConfig::default();
        stc.thresholds = crate::stc::StcThresholds {
            l0: 0.3,
            s0: 0.98,
            d0: 2.0,
        };
        stc.candidates = 48;
        stc.heat_threshold = 2.0;
        SynthConfig {
            grid_w: 32,
            grid_h: 32,
            spacing_m: 100.0,
            users,
            samples_per_user,
            anonymous_frac: 0.2,
            od_min_cells: 14,
            od_max_cells: 30,
            popular_od_frac: 0.3,
            popular_pool: 50,
            test_count,
            stc,
            sampler: SamplerConfig {
                pool_target: 40,
                mosp_cap: 12,
                top_scored: 10,
                random_picks: 10,
            },
            model: ModelConfig::desk(),
            seed,
        }
    }

    /// Large city (over 20k links) for sub-network extraction studies.
    pub fn city_large(seed: u64) -> SynthConfig {
        let mut cfg = SynthConfig::desk(0, 0, 0, seed);
        cfg.grid_w = 75;
        cfg.grid_h = 75;
        cfg.stc.candidates = 32;
        cfg
    }
}

/// The generated road network plus the per-link channels the dataset
/// exposes.
#[derive(Debug)]
pub struct CityNetwork {
    pub primal: PrimalGraph,
    pub dual: DualGraph,
    pub toll_cost: Vec<f64>,
    pub rough_len: Vec<f64>,
    pub lights: Vec<f64>,
    pub maneuver_code: Vec<f64>,
    pub base_time_costs: CostVector,
}

fn q(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

impl CityNetwork {
    pub fn build(config: &SynthConfig) -> Result<CityNetwork, DataError> {
        let (w, h) = (config.grid_w, config.grid_h);
        if w < 6 || h < 6 {
            return Err(DataError::BadConfig("grid must be at least 6x6".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xC17B);
        let spacing = config.spacing_m;
        let mut nodes = Vec::with_capacity(w * h);
        for j in 0..h {
            for i in 0..w {
                nodes.push(PrimalNode {
                    id: (j * w + i) as u32,
                    x: q(i as f64 * spacing + rng.gen_range(-8.0..8.0), 2),
                    y: q(j as f64 * spacing + rng.gen_range(-8.0..8.0), 2),
                });
            }
        }
        let node_at = |i: usize, j: usize| (j * w + i) as u32;
        // road class per undirected corridor: arterial rows/cols every
        // fifth line, highway ring two cells in from the border
        let on_ring = |i: usize, j: usize| -> bool {
            let (ri, rj) = (2, 2);
            let (re, rb) = (w - 3, h - 3);
            (j == rj || j == rb) && (ri..=re).contains(&i)
                || (i == ri || i == re) && (rj..=rb).contains(&j)
        };
        let corridor_class = |a: (usize, usize), b: (usize, usize)| -> u8 {
            if on_ring(a.0, a.1) && on_ring(b.0, b.1) {
                2
            } else if (a.1 == b.1 && a.1 % 5 == 2) || (a.0 == b.0 && a.0 % 5 == 2) {
                1
            } else {
                0
            }
        };
        let mut edges = Vec::new();
        let mut toll_cost = Vec::new();
        let mut rough_len = Vec::new();
        let mut lights = Vec::new();
        let push_pair =
            |edges: &mut Vec<PrimalEdge>,
             toll_cost: &mut Vec<f64>,
             rough_len: &mut Vec<f64>,
             lights: &mut Vec<f64>,
             rng: &mut ChaCha8Rng,
             a: (usize, usize),
             b: (usize, usize)| {
                if rng.gen_range(0.0..1.0) < 0.03 {
                    return; // missing street
                }
                let class = corridor_class(a, b);
                let (na, nb) = (node_at(a.0, a.1), node_at(b.0, b.1));
                let (pa, pb) = (&nodes[na as usize], &nodes[nb as usize]);
                let length = q(((pa.x - pb.x).powi(2) + (pa.y - pb.y).powi(2)).sqrt(), 2);
                let speed = match class {
                    2 => 25.0,
                    1 => 16.0,
                    _ => 10.0,
                } * rng.gen_range(0.9..1.1);
                let toll_rate = match class {
                    2 => 0.03,
                    1 => 0.003,
                    _ => 0.002,
                };
                let rough = match class {
                    0 if rng.gen_range(0.0..1.0) < 0.35 => {
                        q(length * rng.gen_range(0.4..0.9), 2)
                    }
                    1 if rng.gen_range(0.0..1.0) < 0.1 => q(length * 0.2, 2),
                    _ => 0.0,
                };
                let light = match class {
                    0 => (rng.gen_range(0.0..1.0) < 0.4) as u8 as f64,
                    1 => (rng.gen_range(0.0..1.0) < 0.25) as u8 as f64,
                    _ => 0.0,
                };
                for (from, to) in [(na, nb), (nb, na)] {
                    edges.push(PrimalEdge {
                        id: edges.len() as u32,
                        from,
                        to,
                        length_m: length,
                        road_class: class,
                        fftime_s: q(length / speed, 3),
                        toll: class == 2,
                    });
                    toll_cost.push(q(length * toll_rate * rng.gen_range(0.95..1.05), 4));
                    rough_len.push(rough);
                    lights.push(light);
                }
            };
        for j in 0..h {
            for i in 0..w {
                if i + 1 < w {
                    push_pair(
                        &mut edges,
                        &mut toll_cost,
                        &mut rough_len,
                        &mut lights,
                        &mut rng,
                        (i, j),
                        (i + 1, j),
                    );
                }
                if j + 1 < h {
                    push_pair(
                        &mut edges,
                        &mut toll_cost,
                        &mut rough_len,
                        &mut lights,
                        &mut rng,
                        (i, j),
                        (i, j + 1),
                    );
                }
            }
        }
        let primal = PrimalGraph::build(nodes, edges)?;
        let dual = DualGraph::from_primal(&primal, DualOptions::default());
        let maneuver_code: Vec<f64> = (0..dual.num_links())
            .map(|i| dual.modal_incoming_maneuver(LinkId(i as u32)).code() as f64)
            .collect();
        let base_time_costs = CostVector::floored(
            dual.links().iter().map(|l| l.fftime_s).collect(),
        )
        .map_err(|e| DataError::BadConfig(e.to_string()))?;
        Ok(CityNetwork {
            primal,
            dual,
            toll_cost,
            rough_len,
            lights,
            maneuver_code,
            base_time_costs,
        })
    }

    /// Latent per-link utility costs for one archetype given the user's
    /// current familiarity set.
    pub fn utility_costs(
        &self,
        archetype: Archetype,
        familiar: &dyn Fn(u32) -> bool,
    ) -> CostVector {
        let n = self.dual.num_links();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let link = self.dual.link(LinkId(i as u32));
            let v = match archetype {
                Archetype::Time => link.fftime_s,
                Archetype::Toll => self.toll_cost[i] + 1e-5 * link.fftime_s,
                Archetype::Comfort => link.length_m + 0.015 * self.rough_len[i],
                Archetype::Familiar => {
                    let f = if familiar(i as u32) { 0.5 } else { 0.0 };
                    link.length_m * (1.0 - f)
                }
            };
            out.push(v);
        }
        CostVector::floored(out).expect("utility costs are positive")
    }
}

pub fn desk_header(model: &ModelConfig) -> DatasetHeader {
    DatasetHeader {
        version: DATASET_VERSION,
        s_dim: model.s_dim,
        scenario_channel: model.scenario_channel,
        h_events: model.h_events,
        h_dim: model.h_dim,
        link_dim: model.link_dim,
        maneuver_channel: model.maneuver_channel,
        freq_events: model.freq_events,
        freq_dim: model.freq_dim,
        heat_dim: model.heat_dim,
        s_channels: vec![
            "scenario_code".into(),
            "od_dist_km".into(),
            "hour_sin".into(),
            "hour_cos".into(),
            "weekday_flag".into(),
            "night_flag".into(),
            "history_len_frac".into(),
            "familiar_frac".into(),
            "popular_od_flag".into(),
            "bias".into(),
        ],
        h_channels: vec![
            "time_s".into(),
            "dist_m".into(),
            "toll".into(),
            "familiar_prop".into(),
            "lights".into(),
            "rough_len".into(),
            "scenario_code".into(),
            "od_dist_km".into(),
            "strategy_code".into(),
            "weekday".into(),
            "route_links".into(),
            "bias".into(),
        ],
        link_channels: vec![
            "length_m".into(),
            "fftime_s".into(),
            "toll_cost".into(),
            "light_flag".into(),
            "rough_len".into(),
            "road_class".into(),
            "maneuver_code".into(),
            "speed_mps".into(),
            "highway_flag".into(),
            "log_length".into(),
        ],
        freq_channels: vec![
            "recency_days".into(),
            "od_dist_to_o_km".into(),
            "od_dist_to_d_km".into(),
            "hour".into(),
            "weekday_flag".into(),
            "traversal_count".into(),
            "route_pos_frac".into(),
        ],
        heat_channels: vec!["same_od_count".into(), "global_count".into()],
        attr_channels: AttrChannels {
            length: 0,
            fftime: 1,
            toll: 2,
            light: 3,
            rough: 4,
            road_class: 5,
        },
    }
}

struct TraversalEvent {
    day: usize,
    o_pos: (f64, f64),
    d_pos: (f64, f64),
    hour: f64,
    weekday: f64,
    pos_frac: f64,
}

#[derive(Default)]
struct UserState {
    history: Vec<[f64; 12]>,
    link_log: HashMap<u32, Vec<TraversalEvent>>,
    link_count: HashMap<u32, u32>,
    day: usize,
}

fn scenario_draw(rng: &mut ChaCha8Rng) -> (u8, f64, f64) {
    let r = rng.gen_range(0.0..1.0);
    let scenario = if r < 0.5 {
        0u8
    } else if r < 0.7 {
        1
    } else if r < 0.9 {
        2
    } else {
        3
    };
    let hour = match scenario {
        0 => {
            if rng.gen_bool(0.5) {
                8.0
            } else {
                18.0
            }
        }
        1 => 11.0,
        2 => 14.0,
        _ => rng.gen_range(0..24) as f64,
    };
    let weekday = if scenario == 1 {
        0.0
    } else {
        rng.gen_bool(5.0 / 7.0) as u8 as f64
    };
    (scenario, hour, weekday)
}

/// Generates the dataset and writes nothing; see [`write_dataset`].
pub fn generate(config: &SynthConfig) -> Result<(SynthOutput, CityNetwork), DataError> {
    config
        .model
        .validate()
        .map_err(|e| DataError::BadConfig(e.to_string()))?;
    if config.model.link_dim != 10 {
        return Err(DataError::BadConfig(
            "the synthetic schema defines exactly 10 link channels".into(),
        ));
    }
    let total = config.users * config.samples_per_user;
    if config.test_count >= total && total > 0 {
        return Err(DataError::BadConfig(format!(
            "test_count {} must be below total sample count {total}",
            config.test_count
        )));
    }
    let city = CityNetwork::build(config)?;
    let n_city = city.dual.num_links();
    let header = desk_header(&config.model);

    // popular OD pool
    let mut pool_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x0D00);
    let mut popular: Vec<(LinkId, LinkId)> = Vec::new();
    let draw_od = |rng: &mut ChaCha8Rng| -> Option<(LinkId, LinkId)> {
        for _ in 0..64 {
            let o = LinkId(rng.gen_range(0..n_city as u32));
            let d = LinkId(rng.gen_range(0..n_city as u32));
            if o == d {
                continue;
            }
            let (po, pd) = (
                city.dual.link(o).tail,
                city.dual.link(d).tail,
            );
            let (na, nb) = (
                &city.primal.nodes()[po.idx()],
                &city.primal.nodes()[pd.idx()],
            );
            let cells = ((na.x - nb.x).abs() + (na.y - nb.y).abs()) / config.spacing_m;
            if cells < config.od_min_cells as f64 || cells > config.od_max_cells as f64 {
                continue;
            }
            if shortest_path(&city.dual, &city.base_time_costs, o, d)
                .ok()
                .flatten()
                .is_some()
            {
                return Some((o, d));
            }
        }
        None
    };
    while popular.len() < config.popular_pool {
        match draw_od(&mut pool_rng) {
            Some(od) => popular.push(od),
            None => {
                return Err(DataError::BadConfig(
                    "could not find feasible popular OD pairs".into(),
                ))
            }
        }
    }

    // per-user assignment
    let mut assign_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xA551);
    let users: Vec<(Archetype, bool)> = (0..config.users)
        .map(|u| {
            let archetype = Archetype::ALL[u % 4];
            let anonymous = assign_rng.gen_range(0.0..1.0) < config.anonymous_frac;
            (archetype, anonymous)
        })
        .collect();

    let mut global_heat: Vec<u32> = vec![0; n_city];
    let mut popular_heat: Vec<Vec<u32>> = vec![Vec::new(); popular.len()];
    for ph in popular_heat.iter_mut() {
        *ph = vec![0; n_city];
    }
    let mut states: Vec<UserState> = (0..config.users).map(|_| UserState::default()).collect();

    let pos_of = |l: LinkId| -> (f64, f64) {
        let node = city.dual.link(l).tail;
        let p = &city.primal.nodes()[node.idx()];
        (p.x, p.y)
    };

    let mut samples: Vec<SampleRecord> = Vec::with_capacity(total);
    // users interleaved round-robin so familiarity grows over a user's
    // sample index, not over the global file order
    for _round in 0..config.samples_per_user {
        for (uid, &(archetype, anonymous)) in users.iter().enumerate() {
            let sample_id = samples.len() as u64;
            let mut rng =
                ChaCha8Rng::seed_from_u64(config.seed ^ sample_id.wrapping_mul(0x9E3779B97F4A7C15));
            let (scenario, hour, weekday) = scenario_draw(&mut rng);
            let use_popular = rng.gen_range(0.0..1.0) < config.popular_od_frac;
            let pool_idx = use_popular.then(|| rng.gen_range(0..popular.len()));
            let (origin, destination) = match pool_idx {
                Some(pi) => popular[pi],
                None => draw_od(&mut rng).ok_or_else(|| {
                    DataError::BadConfig("could not draw a feasible OD pair".into())
                })?,
            };

            let state = &states[uid];
            let familiar = |l: u32| state.link_count.contains_key(&l);
            let utility = city.utility_costs(archetype, &familiar);
            let r_u_global = shortest_path(&city.dual, &utility, origin, destination)
                .map_err(|e| DataError::BadConfig(e.to_string()))?
                .expect("OD pair pre-checked reachable");
            // the selection strategy a logging system would infer: which
            // single-objective reference route (time / distance / toll /
            // familiarity priority) lies closest to the chosen trajectory
            let strategy_code = {
                let n = city.dual.num_links();
                let mut best = (0usize, -1.0f64);
                let full_lengths: Vec<f64> =
                    city.dual.links().iter().map(|l| l.length_m).collect();
                for code in 0..4usize {
                    let raw: Vec<f64> = (0..n)
                        .map(|i| {
                            let link = city.dual.link(LinkId(i as u32));
                            match code {
                                0 => link.fftime_s,
                                1 => link.length_m,
                                2 => city.toll_cost[i],
                                _ => {
                                    let f = if familiar(i as u32) { 0.5 } else { 0.0 };
                                    link.length_m * (1.0 - f)
                                }
                            }
                        })
                        .collect();
                    let costs = CostVector::floored(raw)
                        .map_err(|e| DataError::BadConfig(e.to_string()))?;
                    if let Ok(Some(route)) =
                        shortest_path(&city.dual, &costs, origin, destination)
                    {
                        let cov = coverage(r_u_global.links(), route.links(), &full_lengths)
                            .unwrap_or(0.0);
                        if cov > best.1 {
                            best = (code, cov);
                        }
                    }
                }
                best.0 as f64
            };

            // request sub-network: skeleton, capillaries, forced trajectory.
            // capillary heat reads the global traversal counts: as the
            // simulation progresses, popular corridors densify the
            // sub-networks the way months of real traffic would
            let heat_ch0: Vec<f64> = match pool_idx {
                Some(pi) => popular_heat[pi].iter().map(|&c| c as f64).collect(),
                None => vec![0.0; n_city],
            };
            let heat_global: Vec<f64> = global_heat.iter().map(|&c| c as f64).collect();
            let familiar_flags: Vec<bool> =
                (0..n_city as u32).map(|l| familiar(l)).collect();
            let candidates = sample_candidate_routes(
                &city.dual,
                &city.base_time_costs,
                origin,
                destination,
                config.stc.candidates,
                config.seed ^ sample_id.wrapping_mul(0x5851F42D),
            )
            .map_err(|e| DataError::BadConfig(e.to_string()))?;
            let skeleton = build_skeleton(
                &candidates,
                &candidates[0],
                &config.stc.thresholds,
                &city.dual,
                &city.base_time_costs,
            )
            .map_err(|e| DataError::BadConfig(e.to_string()))?;
            let features = CapillaryFeatures {
                heat: &heat_global,
                familiar: &familiar_flags,
            };
            let strategies = config.stc.strategies_for(scenario);
            let sub = expand_capillary(&skeleton, &city.dual, &features, &strategies, &config.stc);

            let mut members: Vec<LinkId> = sub.links.clone();
            members.extend_from_slice(r_u_global.links());
            members.sort();
            members.dedup();
            let (local_graph, to_global) = city.dual.induced(&members)?;
            let local_of: HashMap<u32, u32> = to_global
                .iter()
                .enumerate()
                .map(|(i, g)| (g.0, i as u32))
                .collect();
            let n = local_graph.num_links();

            let lengths: Vec<f64> = to_global
                .iter()
                .map(|g| city.dual.link(*g).length_m)
                .collect();
            let mut xlink = Vec::with_capacity(n * header.link_dim);
            for g in &to_global {
                let link = city.dual.link(*g);
                let gi = g.idx();
                xlink.extend_from_slice(&[
                    link.length_m,
                    link.fftime_s,
                    city.toll_cost[gi],
                    city.lights[gi],
                    city.rough_len[gi],
                    link.road_class as f64,
                    city.maneuver_code[gi],
                    q(link.length_m / link.fftime_s, 3),
                    (link.road_class == 2) as u8 as f64,
                    q(link.length_m.ln(), 4),
                ]);
            }
            let mut xheat = Vec::with_capacity(n * header.heat_dim);
            for g in &to_global {
                xheat.push(heat_ch0[g.idx()]);
                xheat.push(global_heat[g.idx()] as f64);
            }
            let (opos, dpos) = (pos_of(origin), pos_of(destination));
            let od_dist_km =
                q(((opos.0 - dpos.0).powi(2) + (opos.1 - dpos.1).powi(2)).sqrt() / 1000.0, 4);
            let mut freq: Vec<FreqEntry> = Vec::new();
            for (li, g) in to_global.iter().enumerate() {
                let Some(events) = state.link_log.get(&g.0) else {
                    continue;
                };
                let count = state.link_count[&g.0] as f64;
                let rows: Vec<Vec<f64>> = events
                    .iter()
                    .rev()
                    .take(header.freq_events)
                    .map(|ev| {
                        let do_km = |p: (f64, f64), qq: (f64, f64)| {
                            q(((p.0 - qq.0).powi(2) + (p.1 - qq.1).powi(2)).sqrt() / 1000.0, 4)
                        };
                        vec![
                            (state.day - ev.day) as f64,
                            do_km(ev.o_pos, opos),
                            do_km(ev.d_pos, dpos),
                            ev.hour,
                            ev.weekday,
                            count,
                            q(ev.pos_frac, 4),
                        ]
                    })
                    .collect();
                if !rows.is_empty() {
                    freq.push(FreqEntry {
                        link: li as u32,
                        events: rows,
                    });
                }
            }
            let xs = vec![
                scenario as f64,
                od_dist_km,
                q((hour / 24.0 * std::f64::consts::TAU).sin(), 6),
                q((hour / 24.0 * std::f64::consts::TAU).cos(), 6),
                weekday,
                (hour >= 21.0 || hour <= 5.0) as u8 as f64,
                q(state.history.len().min(header.h_events) as f64
                    / header.h_events as f64, 4),
                q((state.link_count.len() as f64 / 500.0).min(1.0), 4),
                pool_idx.is_some() as u8 as f64,
                1.0,
            ];
            let mut xh = vec![0.0; header.h_events * header.h_dim];
            for (j, ev) in state
                .history
                .iter()
                .rev()
                .take(header.h_events)
                .enumerate()
            {
                xh[j * header.h_dim..(j + 1) * header.h_dim].copy_from_slice(ev);
            }

            // local trajectory and training route set
            let r_u_local: Vec<LinkId> = r_u_global
                .links()
                .iter()
                .map(|g| LinkId(local_of[&g.0]))
                .collect();
            let record_shell = SampleRecord {
                id: sample_id,
                user: uid as u64,
                archetype: archetype.name().to_string(),
                origin: local_of[&origin.0],
                destination: local_of[&destination.0],
                adjacency: local_graph
                    .all_adjacency_pairs()
                    .into_iter()
                    .map(|(a, b)| [a.0, b.0])
                    .collect(),
                lengths,
                xs,
                xh,
                xlink,
                freq,
                xheat,
                routes: Vec::new(),
                covs: Vec::new(),
                r_u: r_u_local.iter().map(|l| l.0).collect(),
            };
            let table = record_shell.attribute_table(&header);
            let score = |a: &[f64; attrs::DIMS]| -> f64 { -archetype.utility(a) };
            let routes = sample_training_routes(
                &local_graph,
                &table,
                LinkId(record_shell.origin),
                LinkId(record_shell.destination),
                &score,
                config.seed ^ sample_id.wrapping_mul(0xDA3E39CB),
                &config.sampler,
            )
            .map_err(|e| DataError::BadConfig(e.to_string()))?;
            let covs: Vec<f64> = routes
                .iter()
                .map(|r| coverage(&r_u_local, r.links(), &record_shell.lengths))
                .collect::<Result<_, _>>()
                .map_err(|e| DataError::BadConfig(e.to_string()))?;
            let mut record = record_shell;
            record.routes = routes
                .iter()
                .map(|r| r.links().iter().map(|l| l.0).collect())
                .collect();
            record.covs = covs;
            samples.push(record);

            // state updates: history event, familiarity log, heat
            let state = &mut states[uid];
            let len_r = r_u_global.len();
            let r_attrs = route_attrs_city(&city, &r_u_global);
            if !anonymous {
                state.history.push([
                    r_attrs[attrs::TIME],
                    r_attrs[attrs::DIST],
                    r_attrs[attrs::TOLL],
                    q(r_attrs[attrs::FAMILIAR_PROP], 6),
                    r_attrs[attrs::LIGHTS],
                    r_attrs[attrs::ROUGH],
                    scenario as f64,
                    od_dist_km,
                    strategy_code,
                    weekday,
                    len_r as f64,
                    1.0,
                ]);
                for (pi, g) in r_u_global.links().iter().enumerate() {
                    let events = state.link_log.entry(g.0).or_default();
                    events.push(TraversalEvent {
                        day: state.day,
                        o_pos: opos,
                        d_pos: dpos,
                        hour,
                        weekday,
                        pos_frac: pi as f64 / len_r.max(1) as f64,
                    });
                    let cap = header.freq_events;
                    if events.len() > cap {
                        let drop = events.len() - cap;
                        events.drain(0..drop);
                    }
                    *state.link_count.entry(g.0).or_insert(0) += 1;
                }
            }
            state.day += 1;
            for g in r_u_global.links() {
                global_heat[g.idx()] += 1;
                if let Some(pi) = pool_idx {
                    popular_heat[pi][g.idx()] += 1;
                }
            }
        }
    }

    // roles
    let mut order: Vec<u64> = (0..samples.len() as u64).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5917);
    for i in (1..order.len()).rev() {
        let j = split_rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let (test_ids, train_ids) = order.split_at(config.test_count.min(order.len()));
    let mut train_ids = train_ids.to_vec();
    let mut test_ids = test_ids.to_vec();
    train_ids.sort();
    test_ids.sort();
    let sets = super::split_sets(&samples);
    let split = SplitFile {
        seed: config.seed,
        train_ids: train_ids.clone(),
        test_ids,
        set2_ids: sets.set2.iter().copied().collect(),
        set3_ids: sets.set3.iter().copied().collect(),
    };

    let train_set: Vec<SampleRecord> = samples
        .iter()
        .filter(|s| train_ids.binary_search(&s.id).is_ok())
        .cloned()
        .collect();
    let stats = fit_stats(&train_set, &header, &config.model);

    Ok((
        SynthOutput {
            header,
            samples,
            split,
            stats,
        },
        city,
    ))
}

fn route_attrs_city(city: &CityNetwork, route: &Route) -> [f64; attrs::DIMS] {
    let table = LinkAttributeTable {
        time_s: city.dual.links().iter().map(|l| l.fftime_s).collect(),
        length_m: city.dual.links().iter().map(|l| l.length_m).collect(),
        toll: city.toll_cost.clone(),
        familiar_len: vec![0.0; city.dual.num_links()],
        lights: city.lights.clone(),
        rough_len: city.rough_len.clone(),
    };
    table.route_attrs(route.links())
}

/// Writes `graph.jsonl`, `samples.jsonl`, `stats.json` and `splits.json`.
pub fn write_dataset(
    dir: &Path,
    output: &SynthOutput,
    city: &CityNetwork,
) -> Result<(), DataError> {
    std::fs::create_dir_all(dir)?;
    city.primal.save_jsonl(&dir.join("graph.jsonl"))?;
    super::save_samples(&dir.join("samples.jsonl"), &output.header, &output.samples)?;
    let stats_file = std::fs::File::create(dir.join("stats.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(stats_file), &output.stats)
        .map_err(|e| DataError::Serde(e.to_string()))?;
    let splits_file = std::fs::File::create(dir.join("splits.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(splits_file), &output.split)
        .map_err(|e| DataError::Serde(e.to_string()))?;
    Ok(())
}
