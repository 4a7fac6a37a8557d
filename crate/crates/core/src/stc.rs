//! Skeleton-to-capillary extraction of a request-level sub-network.
//!
//! A large pool of feasible candidate routes is sampled around the
//! free-flow-shortest route, filtered by three per-route coefficients
//! (local-optimality, similarity to the shortest route, detour ratio) into
//! a skeleton, then expanded with short capillary paths between skeleton
//! intersections whose links are hot, familiar to the user, or highways.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Direction, DualGraph, GraphError, LinkId, NodeId, Route};
use crate::search::{bidirectional_dijkstra, CostVector, IncrementalDijkstra, SearchError};

#[derive(Debug, thiserror::Error)]
pub enum StcError {
    #[error("origin {0} cannot reach destination {1}")]
    Unreachable(LinkId, LinkId),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Filter thresholds for skeleton construction. A candidate survives when
/// its local-optimal proportion is at least `l0`, its similarity to the
/// shortest route at most `s0`, and its detour ratio at most `d0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StcThresholds {
    pub l0: f64,
    pub s0: f64,
    pub d0: f64,
}

impl Default for StcThresholds {
    fn default() -> Self {
        StcThresholds {
            l0: 0.7,
            s0: 0.95,
            d0: 1.5,
        }
    }
}

impl StcThresholds {
    pub fn validate(&self) -> Result<(), StcError> {
        if !(self.l0 > 0.0 && self.l0 <= 1.0) {
            return Err(StcError::InvalidThresholds(format!(
                "l0 must be in (0, 1], got {}",
                self.l0
            )));
        }
        if !(self.s0 > 0.0 && self.s0 <= 1.0) {
            return Err(StcError::InvalidThresholds(format!(
                "s0 must be in (0, 1], got {}",
                self.s0
            )));
        }
        if !(self.d0 >= 1.0) {
            return Err(StcError::InvalidThresholds(format!(
                "d0 must be at least 1, got {}",
                self.d0
            )));
        }
        Ok(())
    }

    /// The per-route survival predicate.
    pub fn keeps(&self, l: f64, s: f64, d: f64) -> bool {
        l >= self.l0 && s <= self.s0 && d <= self.d0
    }
}

/// Capillary expansion strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Heat,
    Familiar,
    Highway,
}

pub const ALL_STRATEGIES: [Strategy; 3] = [Strategy::Heat, Strategy::Familiar, Strategy::Highway];

/// How each link entered the sub-network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Skeleton,
    CapillaryHeat,
    CapillaryFamiliar,
    CapillaryHighway,
}

/// Extraction parameters. The scenario table maps the request's scenario
/// code to the strategies applied in capillary expansion; codes without an
/// entry use all three.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StcConfig {
    pub thresholds: StcThresholds,
    /// Candidate routes sampled around the shortest route (including it).
    pub candidates: usize,
    /// Maximum number of links in one capillary path.
    pub hop_limit: usize,
    /// Minimum heat value for [`Strategy::Heat`].
    pub heat_threshold: f64,
    /// Road classes treated as highways by [`Strategy::Highway`].
    pub highway_classes: Vec<u8>,
    pub scenario_strategies: Vec<(u8, Vec<Strategy>)>,
}

impl Default for StcConfig {
    fn default() -> Self {
        StcConfig {
            thresholds: StcThresholds::default(),
            candidates: 32,
            hop_limit: 8,
            heat_threshold: 1.0,
            highway_classes: vec![2],
            scenario_strategies: Vec::new(),
        }
    }
}

impl StcConfig {
    pub fn strategies_for(&self, scenario_code: u8) -> Vec<Strategy> {
        self.scenario_strategies
            .iter()
            .find(|(code, _)| *code == scenario_code)
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| ALL_STRATEGIES.to_vec())
    }
}

/// Link subset of the dual graph with per-link provenance. The induced
/// adjacency is recovered through [`DualGraph::induced`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubNetwork {
    /// Sorted global link ids.
    pub links: Vec<LinkId>,
    /// Parallel to `links`.
    pub tags: Vec<Provenance>,
}

impl SubNetwork {
    fn from_map(map: HashMap<LinkId, Provenance>) -> SubNetwork {
        let mut entries: Vec<(LinkId, Provenance)> = map.into_iter().collect();
        entries.sort_by_key(|(l, _)| *l);
        SubNetwork {
            links: entries.iter().map(|(l, _)| *l).collect(),
            tags: entries.iter().map(|(_, t)| *t).collect(),
        }
    }

    pub fn contains(&self, link: LinkId) -> bool {
        self.links.binary_search(&link).is_ok()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Materializes the induced dual graph; returns it with the
    /// local→global id map.
    pub fn to_local(&self, graph: &DualGraph) -> Result<(DualGraph, Vec<LinkId>), GraphError> {
        graph.induced(&self.links)
    }
}

/// Per-link inputs consulted by capillary strategies.
pub struct CapillaryFeatures<'a> {
    /// Heat channel (same-OD request counts or similar).
    pub heat: &'a [f64],
    /// Whether the user has familiarity records on the link.
    pub familiar: &'a [bool],
}

/// The shortest route plus up to `n − 1` distinct feasible routes, each
/// found by shortest-path search under base costs scaled per-link by
/// independent uniform factors in `[1, 3]` (fresh draws per candidate).
/// Reproducible for a fixed seed.
pub fn sample_candidate_routes(
    graph: &DualGraph,
    base_costs: &CostVector,
    origin: LinkId,
    destination: LinkId,
    n: usize,
    seed: u64,
) -> Result<Vec<Route>, StcError> {
    let r_star = bidirectional_dijkstra(graph, base_costs, origin, destination)?
        .ok_or(StcError::Unreachable(origin, destination))?;
    let mut routes = vec![r_star];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 1..n {
        let perturbed: Vec<f64> = base_costs
            .values()
            .iter()
            .map(|&c| c * rng.gen_range(1.0..3.0))
            .collect();
        let costs = CostVector::new(perturbed)?;
        let route = bidirectional_dijkstra(graph, &costs, origin, destination)?
            .expect("destination reachable under scaled costs");
        if !routes.contains(&route) {
            routes.push(route);
        }
    }
    Ok(routes)
}

/// The three skeleton coefficients of `route` against `r_star`:
/// local-optimal proportion `l`, similarity `s`, and detour ratio `d`.
///
/// `l` is the length share of the longest contiguous sub-route that is
/// itself a shortest path (under `base_costs`) between its own endpoint
/// links. Optimality of a window is checked against an on-demand bounded
/// search from its first link; windows shrink-proof by the sub-path
/// property, so a two-pointer sweep suffices.
pub fn stc_coefficients(
    route: &Route,
    r_star: &Route,
    graph: &DualGraph,
    base_costs: &CostVector,
) -> Result<(f64, f64, f64), StcError> {
    if route.is_empty() || r_star.is_empty() {
        return Err(StcError::Graph(GraphError::EmptyRoute));
    }
    let lengths: Vec<f64> = graph.links().iter().map(|l| l.length_m).collect();

    // similarity: length of shared links over the shortest route's length
    let star_set: BTreeSet<LinkId> = r_star.links().iter().copied().collect();
    let route_set: BTreeSet<LinkId> = route.links().iter().copied().collect();
    let shared: f64 = star_set
        .intersection(&route_set)
        .map(|l| lengths[l.idx()])
        .sum();
    let star_len: f64 = star_set.iter().map(|l| lengths[l.idx()]).sum();
    let s = shared / star_len;

    let d = route.length_m() / r_star.length_m();

    // longest locally-optimal window by two-pointer sweep
    let seq = route.links();
    let window_len = |i: usize, j: usize| -> f64 {
        seq[i..=j].iter().map(|l| lengths[l.idx()]).sum()
    };
    let mut best_len = lengths[seq[0].idx()];
    let mut i = 0usize;
    let mut j = 0usize;
    let mut search: Option<IncrementalDijkstra> = None;
    // running window cost, accumulated in traversal order so it matches the
    // search's own accumulation bit for bit
    let mut window_cost = base_costs.get(seq[0]);
    while i < seq.len() {
        if search.is_none() {
            search = Some(IncrementalDijkstra::new(graph, base_costs, seq[i])?);
            window_cost = base_costs.get(seq[i]);
            for l in &seq[i + 1..=j] {
                window_cost += base_costs.get(*l);
            }
        }
        let extended = if j + 1 < seq.len() {
            let next_cost = window_cost + base_costs.get(seq[j + 1]);
            let dij = search.as_mut().unwrap();
            match dij.dist_within(seq[j + 1], next_cost) {
                Some(d) if d == next_cost => {
                    j += 1;
                    window_cost = next_cost;
                    true
                }
                _ => false,
            }
        } else {
            false
        };
        if extended {
            best_len = best_len.max(window_len(i, j));
        } else {
            best_len = best_len.max(window_len(i, j));
            i += 1;
            if i > j {
                j = i;
            }
            search = None;
            if i >= seq.len() {
                break;
            }
        }
    }
    let l = best_len / route.length_m();
    Ok((l, s, d))
}

/// Union of the shortest route and every candidate passing the threshold
/// predicate. The shortest route is always retained.
pub fn build_skeleton(
    candidates: &[Route],
    r_star: &Route,
    thresholds: &StcThresholds,
    graph: &DualGraph,
    base_costs: &CostVector,
) -> Result<SubNetwork, StcError> {
    thresholds.validate()?;
    let mut map: HashMap<LinkId, Provenance> = HashMap::new();
    for l in r_star.links() {
        map.insert(*l, Provenance::Skeleton);
    }
    for cand in candidates {
        if cand == r_star {
            continue;
        }
        let (l, s, d) = stc_coefficients(cand, r_star, graph, base_costs)?;
        if thresholds.keeps(l, s, d) {
            for link in cand.links() {
                map.insert(*link, Provenance::Skeleton);
            }
        }
    }
    Ok(SubNetwork::from_map(map))
}

/// Adds capillary links: for every active strategy, links outside the
/// skeleton that satisfy the strategy predicate and lie on a qualifying
/// path of at most `hop_limit` links between two skeleton intersections.
/// Strategies are applied in a fixed order (heat, familiar, highway); the
/// first one admitting a link sets its provenance tag.
pub fn expand_capillary(
    sub: &SubNetwork,
    graph: &DualGraph,
    features: &CapillaryFeatures<'_>,
    strategies: &[Strategy],
    config: &StcConfig,
) -> SubNetwork {
    let n = graph.num_links();
    let mut map: HashMap<LinkId, Provenance> = sub
        .links
        .iter()
        .zip(&sub.tags)
        .map(|(l, t)| (*l, *t))
        .collect();

    let mut skeleton_nodes: BTreeSet<NodeId> = BTreeSet::new();
    for l in &sub.links {
        skeleton_nodes.insert(graph.link(*l).tail);
        skeleton_nodes.insert(graph.link(*l).head);
    }

    for strategy in ALL_STRATEGIES {
        if !strategies.contains(&strategy) {
            continue;
        }
        let qualifies = |l: LinkId| -> bool {
            if sub.contains(l) {
                return false;
            }
            match strategy {
                Strategy::Heat => features.heat[l.idx()] >= config.heat_threshold,
                Strategy::Familiar => features.familiar[l.idx()],
                Strategy::Highway => config.highway_classes.contains(&graph.link(l).road_class),
            }
        };
        // hop distance from a skeleton intersection through qualifying
        // links, and symmetrically back to one
        let bfs = |dir: Direction| -> Vec<u32> {
            let mut dist = vec![u32::MAX; n];
            let mut queue = VecDeque::new();
            for i in 0..n {
                let link = LinkId(i as u32);
                if !qualifies(link) {
                    continue;
                }
                let anchor = match dir {
                    Direction::Forward => graph.link(link).tail,
                    Direction::Backward => graph.link(link).head,
                };
                if skeleton_nodes.contains(&anchor) {
                    dist[i] = 1;
                    queue.push_back(link);
                }
            }
            while let Some(u) = queue.pop_front() {
                let du = dist[u.idx()];
                if du as usize >= config.hop_limit {
                    continue;
                }
                for arc in graph.arcs(u, dir) {
                    let v = arc.to;
                    if qualifies(v) && dist[v.idx()] == u32::MAX {
                        dist[v.idx()] = du + 1;
                        queue.push_back(v);
                    }
                }
            }
            dist
        };
        let df = bfs(Direction::Forward);
        let db = bfs(Direction::Backward);
        for i in 0..n {
            let link = LinkId(i as u32);
            if df[i] == u32::MAX || db[i] == u32::MAX {
                continue;
            }
            if (df[i] + db[i] - 1) as usize <= config.hop_limit {
                let tag = match strategy {
                    Strategy::Heat => Provenance::CapillaryHeat,
                    Strategy::Familiar => Provenance::CapillaryFamiliar,
                    Strategy::Highway => Provenance::CapillaryHighway,
                };
                map.entry(link).or_insert(tag);
            }
        }
    }
    SubNetwork::from_map(map)
}

/// Full extraction: candidate sampling, skeleton filtering, capillary
/// expansion.
pub fn extract_subnetwork(
    graph: &DualGraph,
    base_costs: &CostVector,
    origin: LinkId,
    destination: LinkId,
    features: &CapillaryFeatures<'_>,
    scenario_code: u8,
    config: &StcConfig,
    seed: u64,
) -> Result<SubNetwork, StcError> {
    let candidates = sample_candidate_routes(
        graph,
        base_costs,
        origin,
        destination,
        config.candidates.max(1),
        seed,
    )?;
    let r_star = &candidates[0];
    let skeleton = build_skeleton(&candidates, r_star, &config.thresholds, graph, base_costs)?;
    let strategies = config.strategies_for(scenario_code);
    Ok(expand_capillary(
        &skeleton, graph, features, &strategies, config,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DualOptions, PrimalEdge, PrimalGraph, PrimalNode};

    fn chain_with_shortcuts() -> (DualGraph, CostVector) {
        // nodes 0..=6 on a line; edges e0..e5 chain them; e6 shortcuts 1->3
        // (entered from e0) and e7 shortcuts 3->5 (entered from e2 or e6),
        // so the longest locally optimal window of the chain is e1..e4
        let nodes: Vec<PrimalNode> = (0..7)
            .map(|i| PrimalNode {
                id: i,
                x: i as f64 * 100.0,
                y: 0.0,
            })
            .collect();
        let mut edges: Vec<PrimalEdge> = (0..6)
            .map(|i| PrimalEdge {
                id: i,
                from: i,
                to: i + 1,
                length_m: 100.0,
                road_class: 0,
                fftime_s: 10.0,
                toll: false,
            })
            .collect();
        for (id, from, to) in [(6, 1, 3), (7, 3, 5)] {
            edges.push(PrimalEdge {
                id,
                from,
                to,
                length_m: 100.0,
                road_class: 0,
                fftime_s: 5.0,
                toll: false,
            });
        }
        let primal = PrimalGraph::build(nodes, edges).unwrap();
        let dual = DualGraph::from_primal(&primal, DualOptions::default());
        let costs =
            CostVector::new(vec![10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 5.0, 5.0]).unwrap();
        (dual, costs)
    }

    #[test]
    fn coefficients_identity() {
        // plain chain: the route is the only (hence optimal) path
        let dual = DualGraph::from_adjacency(
            &[100.0, 100.0, 100.0],
            &[(LinkId(0), LinkId(1)), (LinkId(1), LinkId(2))],
        )
        .unwrap();
        let costs = CostVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let r = Route::new(vec![LinkId(0), LinkId(1), LinkId(2)], &dual).unwrap();
        let (l, s, d) = stc_coefficients(&r, &r, &dual, &costs).unwrap();
        assert_eq!((l, s, d), (1.0, 1.0, 1.0));
    }

    #[test]
    fn coefficients_disjoint_similarity_zero() {
        let dual = DualGraph::from_adjacency(
            &[100.0; 4],
            &[(LinkId(0), LinkId(1)), (LinkId(2), LinkId(3))],
        )
        .unwrap();
        let costs = CostVector::new(vec![1.0; 4]).unwrap();
        let a = Route::new(vec![LinkId(0), LinkId(1)], &dual).unwrap();
        let b = Route::new(vec![LinkId(2), LinkId(3)], &dual).unwrap();
        let (_, s, _) = stc_coefficients(&a, &b, &dual, &costs).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn local_optimal_window_four_of_six() {
        let (dual, costs) = chain_with_shortcuts();
        let route = Route::new(
            (0..6).map(LinkId).collect(),
            &dual,
        )
        .unwrap();
        let (l, _, _) = stc_coefficients(&route, &route, &dual, &costs).unwrap();
        assert!((l - 4.0 / 6.0).abs() < 1e-12, "l = {l}");
    }

    #[test]
    fn skeleton_predicate_filters() {
        let t = StcThresholds {
            l0: 0.5,
            s0: 0.8,
            d0: 1.5,
        };
        assert!(t.keeps(0.5, 0.8, 1.5));
        assert!(!t.keeps(0.49, 0.8, 1.5));
        assert!(!t.keeps(0.5, 0.81, 1.5));
        assert!(!t.keeps(0.5, 0.8, 1.51));
    }

    #[test]
    fn trivial_thresholds_keep_everything_or_only_r_star() {
        let (dual, costs) = chain_with_shortcuts();
        let r_star = bidirectional_dijkstra(&dual, &costs, LinkId(0), LinkId(5))
            .unwrap()
            .unwrap();
        let detour = Route::new((0..6).map(LinkId).collect(), &dual).unwrap();
        let candidates = vec![r_star.clone(), detour.clone()];

        let keep_all = StcThresholds {
            l0: 1e-9,
            s0: 1.0,
            d0: f64::INFINITY,
        };
        let sub = build_skeleton(&candidates, &r_star, &keep_all, &dual, &costs).unwrap();
        let mut expect: Vec<LinkId> = r_star
            .links()
            .iter()
            .chain(detour.links())
            .copied()
            .collect();
        expect.sort();
        expect.dedup();
        assert_eq!(sub.links, expect);

        let only_star = StcThresholds {
            l0: 1.0,
            s0: 1e-9,
            d0: 1.0,
        };
        let sub = build_skeleton(&candidates, &r_star, &only_star, &dual, &costs).unwrap();
        let mut expect: Vec<LinkId> = r_star.links().to_vec();
        expect.sort();
        assert_eq!(sub.links, expect);
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let (dual, costs) = chain_with_shortcuts();
        let a = sample_candidate_routes(&dual, &costs, LinkId(0), LinkId(5), 16, 7).unwrap();
        let b = sample_candidate_routes(&dual, &costs, LinkId(0), LinkId(5), 16, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a[0],
            bidirectional_dijkstra(&dual, &costs, LinkId(0), LinkId(5))
                .unwrap()
                .unwrap()
        );
        for r in &a {
            Route::new(r.links().to_vec(), &dual).unwrap();
        }
        let single = sample_candidate_routes(&dual, &costs, LinkId(0), LinkId(5), 1, 7).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn unreachable_od_is_an_error() {
        let dual = DualGraph::from_adjacency(&[1.0, 1.0], &[]).unwrap();
        let costs = CostVector::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            sample_candidate_routes(&dual, &costs, LinkId(0), LinkId(1), 4, 0),
            Err(StcError::Unreachable(..))
        ));
    }

    #[test]
    fn capillary_adds_highway_detour() {
        // skeleton chain 0->1->2 over local roads; highway pair 3,4 detours
        // from the head of link 0 back to the tail of link 2
        let nodes: Vec<PrimalNode> = vec![
            PrimalNode { id: 0, x: 0.0, y: 0.0 },
            PrimalNode { id: 1, x: 100.0, y: 0.0 },
            PrimalNode { id: 2, x: 200.0, y: 0.0 },
            PrimalNode { id: 3, x: 300.0, y: 0.0 },
            PrimalNode { id: 4, x: 150.0, y: 80.0 },
        ];
        let mk = |id, from, to, class| PrimalEdge {
            id,
            from,
            to,
            length_m: 100.0,
            road_class: class,
            fftime_s: 10.0,
            toll: false,
        };
        let edges = vec![
            mk(0, 0, 1, 0),
            mk(1, 1, 2, 0),
            mk(2, 2, 3, 0),
            mk(3, 1, 4, 2),
            mk(4, 4, 2, 2),
        ];
        let primal = PrimalGraph::build(nodes, edges).unwrap();
        let dual = DualGraph::from_primal(&primal, DualOptions::default());
        let sub = SubNetwork {
            links: vec![LinkId(0), LinkId(1), LinkId(2)],
            tags: vec![Provenance::Skeleton; 3],
        };
        let heat = vec![0.0; 5];
        let familiar = vec![false; 5];
        let features = CapillaryFeatures {
            heat: &heat,
            familiar: &familiar,
        };
        let config = StcConfig::default();

        let expanded = expand_capillary(&sub, &dual, &features, &[Strategy::Highway], &config);
        assert_eq!(expanded.links, vec![LinkId(0), LinkId(1), LinkId(2), LinkId(3), LinkId(4)]);
        assert_eq!(expanded.tags[3], Provenance::CapillaryHighway);
        assert_eq!(expanded.tags[4], Provenance::CapillaryHighway);

        // no strategy, or no qualifying link: unchanged
        let unchanged = expand_capillary(&sub, &dual, &features, &[], &config);
        assert_eq!(unchanged.links, sub.links);
        let unchanged = expand_capillary(&sub, &dual, &features, &[Strategy::Heat], &config);
        assert_eq!(unchanged.links, sub.links);
    }
}
