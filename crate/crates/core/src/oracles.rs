//! Reference implementations for verification. Everything here is written
//! independently of the production search/metric code paths — simple
//! array scans and exhaustive enumeration — and exists solely so tests and
//! the self-check command can compare the two routes to the same answer.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Direction, DualGraph, LinkId};
use crate::search::CostVector;

/// Textbook single-source Dijkstra with an O(n²) linear-scan frontier and
/// no tie handling beyond scan order. Returns the minimum total cost of an
/// origin→destination route (endpoints inclusive).
pub fn dijkstra_reference_cost(
    graph: &DualGraph,
    costs: &CostVector,
    origin: LinkId,
    destination: LinkId,
) -> Option<f64> {
    let n = graph.num_links();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[origin.idx()] = costs.get(origin);
    loop {
        let mut u = None;
        let mut best = f64::INFINITY;
        for i in 0..n {
            if !done[i] && dist[i] < best {
                best = dist[i];
                u = Some(i);
            }
        }
        let Some(u) = u else { break };
        done[u] = true;
        if u == destination.idx() {
            return Some(dist[u]);
        }
        for arc in graph.arcs(LinkId(u as u32), Direction::Forward) {
            let v = arc.to.idx();
            let cand = dist[u] + costs.get(arc.to);
            if cand < dist[v] {
                dist[v] = cand;
            }
        }
    }
    None
}

/// All simple origin→destination link paths, by depth-first enumeration.
/// Intended for graphs of at most a dozen links.
pub fn enumerate_simple_paths(
    graph: &DualGraph,
    origin: LinkId,
    destination: LinkId,
) -> Vec<Vec<LinkId>> {
    let mut out = Vec::new();
    let mut stack = vec![origin];
    let mut on_path = vec![false; graph.num_links()];
    on_path[origin.idx()] = true;
    fn dfs(
        graph: &DualGraph,
        destination: LinkId,
        stack: &mut Vec<LinkId>,
        on_path: &mut Vec<bool>,
        out: &mut Vec<Vec<LinkId>>,
    ) {
        let cur = *stack.last().unwrap();
        if cur == destination {
            out.push(stack.clone());
            return;
        }
        for arc in graph.arcs(cur, Direction::Forward) {
            if on_path[arc.to.idx()] {
                continue;
            }
            on_path[arc.to.idx()] = true;
            stack.push(arc.to);
            dfs(graph, destination, stack, on_path, out);
            stack.pop();
            on_path[arc.to.idx()] = false;
        }
    }
    dfs(graph, destination, &mut stack, &mut on_path, &mut out);
    out
}

/// Exhaustive minimum: cost, then lexicographically smallest sequence.
pub fn brute_force_shortest(
    graph: &DualGraph,
    costs: &CostVector,
    origin: LinkId,
    destination: LinkId,
) -> Option<(f64, Vec<LinkId>)> {
    let mut best: Option<(f64, Vec<LinkId>)> = None;
    for path in enumerate_simple_paths(graph, origin, destination) {
        let c: f64 = path.iter().map(|l| costs.get(*l)).sum();
        let better = match &best {
            None => true,
            Some((bc, bp)) => c < *bc || (c == *bc && path < *bp),
        };
        if better {
            best = Some((c, path));
        }
    }
    best
}

/// Exhaustive Pareto set over all simple paths: one representative per
/// non-dominated objective vector, the lexicographically smallest route.
/// Output sorted by vector.
pub fn brute_force_pareto_routes(
    graph: &DualGraph,
    mc: &crate::search::MultiCost,
    origin: LinkId,
    destination: LinkId,
) -> Vec<(Vec<f64>, Vec<LinkId>)> {
    let paths = enumerate_simple_paths(graph, origin, destination);
    let mut scored: Vec<(Vec<f64>, Vec<LinkId>)> = paths
        .into_iter()
        .map(|p| {
            let mut total = vec![0.0; mc.dims()];
            for l in &p {
                for (t, c) in total.iter_mut().zip(mc.get(*l)) {
                    *t += c;
                }
            }
            (total, p)
        })
        .collect();
    // dominance by pairwise comparison
    let dominated = |a: &[f64], b: &[f64]| -> bool {
        a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
    };
    let mut keep: Vec<(Vec<f64>, Vec<LinkId>)> = Vec::new();
    scored.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != std::cmp::Ordering::Equal)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(&b.1))
    });
    'outer: for (vec, path) in scored {
        for (kv, _) in &keep {
            if dominated(kv, &vec) || *kv == vec {
                continue 'outer;
            }
        }
        keep.retain(|(kv, _)| !dominated(&vec, kv));
        keep.push((vec, path));
    }
    keep.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != std::cmp::Ordering::Equal)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    keep
}

/// Independent quadratic non-domination filter (minimization): index kept
/// when no other point is no-worse everywhere and better somewhere, and no
/// earlier point equals it.
pub fn pareto_filter_reference(points: &[Vec<f64>]) -> Vec<usize> {
    let mut keep = Vec::new();
    for j in 0..points.len() {
        let mut alive = true;
        for i in 0..points.len() {
            if i == j {
                continue;
            }
            let le = points[i].iter().zip(&points[j]).all(|(a, b)| a <= b);
            let lt = points[i].iter().zip(&points[j]).any(|(a, b)| a < b);
            if le && lt {
                alive = false;
                break;
            }
            if points[i] == points[j] && i < j {
                alive = false;
                break;
            }
        }
        if alive {
            keep.push(j);
        }
    }
    keep
}

/// Random connected-ish dual graph with up to `max_links` links, plus a
/// matching positive cost vector. Integer-valued costs keep float sums
/// exact so cross-implementation comparisons can demand equality.
pub fn random_dual_graph(
    seed: u64,
    max_links: usize,
    integer_costs: bool,
) -> (DualGraph, CostVector, LinkId, LinkId) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_links.max(2));
    let mut adjacency = Vec::new();
    // a random chain backbone guarantees reachability, extra arcs add
    // alternative paths
    let mut order: Vec<u32> = (0..n as u32).collect();
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    for w in order.windows(2) {
        adjacency.push((LinkId(w[0]), LinkId(w[1])));
    }
    let extra = rng.gen_range(0..=2 * n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if a != b {
            adjacency.push((LinkId(a), LinkId(b)));
        }
    }
    adjacency.sort();
    adjacency.dedup();
    let lengths = vec![100.0; n];
    let graph = DualGraph::from_adjacency(&lengths, &adjacency).unwrap();
    let costs: Vec<f64> = (0..n)
        .map(|_| {
            if integer_costs {
                rng.gen_range(1..=9) as f64
            } else {
                rng.gen_range(0.1..10.0)
            }
        })
        .collect();
    let origin = LinkId(order[0]);
    let destination = LinkId(order[n - 1]);
    (
        graph,
        CostVector::new(costs).unwrap(),
        origin,
        destination,
    )
}
