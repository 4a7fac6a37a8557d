//! Single-objective shortest paths: unidirectional and bidirectional
//! Dijkstra over link-weighted dual graphs.
//!
//! Distances are node-weighted: the cost of a route includes every member
//! link, origin and destination inclusive. `dist[v]` in a forward search is
//! the cheapest origin→v path including both endpoint costs; the backward
//! search runs over reversed arcs keyed on the cost *after* v (excluding v
//! itself), which makes the classic bidirectional stopping rule apply
//! unchanged.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::{Direction, DualGraph, LinkId, Route};

use super::{CostVector, SearchError};

const UNREACHED: f64 = f64::INFINITY;
const NO_PRED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    link: LinkId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: reverse for min-by-(dist, id)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.link.cmp(&self.link))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One directed half of a search. For `Direction::Backward` the key is the
/// cost from the link's successor onward to the target (excluding the link
/// itself), i.e. plain Dijkstra over reversed arcs with arc weight equal to
/// the source link's cost.
struct Half {
    dir: Direction,
    dist: Vec<f64>,
    pred: Vec<u32>,
    settled: Vec<bool>,
    heap: BinaryHeap<HeapEntry>,
    ties_seen: bool,
}

impl Half {
    fn new(n: usize, start: LinkId, start_dist: f64, dir: Direction) -> Half {
        let mut half = Half {
            dir,
            dist: vec![UNREACHED; n],
            pred: vec![NO_PRED; n],
            settled: vec![false; n],
            heap: BinaryHeap::new(),
            ties_seen: false,
        };
        half.dist[start.idx()] = start_dist;
        half.heap.push(HeapEntry {
            dist: start_dist,
            link: start,
        });
        half
    }

    fn top(&mut self) -> Option<HeapEntry> {
        while let Some(&e) = self.heap.peek() {
            if self.settled[e.link.idx()] {
                self.heap.pop();
            } else {
                return Some(e);
            }
        }
        None
    }

    /// Sequence from the search start to `link` in start→link order for the
    /// forward half, and from `link` toward the target (link first) for the
    /// backward half.
    fn path(&self, link: LinkId) -> Vec<LinkId> {
        let mut seq = vec![link];
        let mut cur = link;
        while self.pred[cur.idx()] != NO_PRED {
            cur = LinkId(self.pred[cur.idx()]);
            seq.push(cur);
        }
        if self.dir == Direction::Forward {
            seq.reverse();
        }
        seq
    }

    /// Pops and settles the best entry, relaxing its arcs. Returns the
    /// settled entry. Ties between equal-cost candidate paths into one link
    /// are broken toward the lexicographically smaller link sequence.
    fn settle(&mut self, graph: &DualGraph, costs: &CostVector) -> Option<HeapEntry> {
        let entry = self.top()?;
        self.heap.pop();
        let u = entry.link;
        self.settled[u.idx()] = true;
        for arc in graph.arcs(u, self.dir) {
            let v = arc.to;
            if self.settled[v.idx()] {
                continue;
            }
            let step = match self.dir {
                Direction::Forward => costs.get(v),
                Direction::Backward => costs.get(u),
            };
            let cand = entry.dist + step;
            let cur = self.dist[v.idx()];
            if cand < cur {
                self.dist[v.idx()] = cand;
                self.pred[v.idx()] = u.0;
                self.heap.push(HeapEntry {
                    dist: cand,
                    link: v,
                });
            } else if cand == cur {
                self.ties_seen = true;
                let old_pred = self.pred[v.idx()];
                if old_pred != NO_PRED && old_pred != u.0 {
                    let candidate = self.candidate_path(u, v);
                    let incumbent = self.candidate_path(LinkId(old_pred), v);
                    if candidate < incumbent {
                        self.pred[v.idx()] = u.0;
                    }
                }
            }
        }
        Some(entry)
    }

    /// The full sequence the label at `v` would have with predecessor `u`,
    /// oriented origin→v regardless of direction, for lexicographic
    /// comparison.
    fn candidate_path(&self, u: LinkId, v: LinkId) -> Vec<LinkId> {
        let mut p = self.path(u);
        match self.dir {
            Direction::Forward => p.push(v),
            Direction::Backward => p.insert(0, v),
        }
        p
    }
}

fn validate(
    graph: &DualGraph,
    costs: &CostVector,
    origin: LinkId,
    destination: LinkId,
) -> Result<(), SearchError> {
    costs.check_len(graph.num_links())?;
    graph.check_link(origin)?;
    graph.check_link(destination)?;
    Ok(())
}

/// Unidirectional Dijkstra from `origin` to `destination`, both links
/// inclusive. Returns `None` when unreachable. Among minimum-cost routes the
/// lexicographically smallest link-id sequence is returned (exact for
/// strictly positive costs).
pub fn shortest_path(
    graph: &DualGraph,
    costs: &CostVector,
    origin: LinkId,
    destination: LinkId,
) -> Result<Option<Route>, SearchError> {
    validate(graph, costs, origin, destination)?;
    if origin == destination {
        return Ok(Some(Route::from_search(vec![origin], graph)));
    }
    let mut fwd = Half::new(
        graph.num_links(),
        origin,
        costs.get(origin),
        Direction::Forward,
    );
    while let Some(entry) = fwd.settle(graph, costs) {
        if entry.link == destination {
            return Ok(Some(Route::from_search(fwd.path(destination), graph)));
        }
    }
    Ok(None)
}

/// Distances from `origin` to every link reachable within `bound` (total
/// route cost, both endpoints inclusive). Used by sub-network extraction for
/// local-optimality checks.
pub fn bounded_distances(
    graph: &DualGraph,
    costs: &CostVector,
    origin: LinkId,
    bound: f64,
) -> Result<Vec<f64>, SearchError> {
    costs.check_len(graph.num_links())?;
    graph.check_link(origin)?;
    let mut fwd = Half::new(
        graph.num_links(),
        origin,
        costs.get(origin),
        Direction::Forward,
    );
    while let Some(top) = fwd.top() {
        if top.dist > bound {
            break;
        }
        fwd.settle(graph, costs);
    }
    Ok(fwd.dist)
}

/// Lazily-extended single-source Dijkstra. Settles only as far as each
/// query's bound requires and keeps state across queries, so repeated
/// distance probes from one source cost a single bounded sweep overall.
pub struct IncrementalDijkstra<'g> {
    graph: &'g DualGraph,
    costs: &'g CostVector,
    half: Half,
}

impl<'g> IncrementalDijkstra<'g> {
    pub fn new(
        graph: &'g DualGraph,
        costs: &'g CostVector,
        source: LinkId,
    ) -> Result<IncrementalDijkstra<'g>, SearchError> {
        costs.check_len(graph.num_links())?;
        graph.check_link(source)?;
        let half = Half::new(
            graph.num_links(),
            source,
            costs.get(source),
            Direction::Forward,
        );
        Ok(IncrementalDijkstra { graph, costs, half })
    }

    /// Exact distance (source and target inclusive) if it is ≤ `bound`,
    /// else `None`.
    pub fn dist_within(&mut self, target: LinkId, bound: f64) -> Option<f64> {
        loop {
            if self.half.settled[target.idx()] {
                let d = self.half.dist[target.idx()];
                return (d <= bound).then_some(d);
            }
            match self.half.top() {
                Some(top) if top.dist <= bound => {
                    self.half.settle(self.graph, self.costs);
                }
                _ => return None,
            }
        }
    }
}

/// Bidirectional Dijkstra. Equivalent to [`shortest_path`] in cost and (for
/// strictly positive costs) in the returned route.
///
/// Both halves advance by smaller frontier key; meeting candidates are
/// scored during arc relaxation and the search stops once the frontier keys
/// prove no better meeting exists. If any exact cost tie was observed the
/// meeting-based route may not be the lexicographically smallest
/// minimum-cost route, so the path is re-derived by a unidirectional pass;
/// with real-valued model costs this fallback is essentially never taken.
pub fn bidirectional_dijkstra(
    graph: &DualGraph,
    costs: &CostVector,
    origin: LinkId,
    destination: LinkId,
) -> Result<Option<Route>, SearchError> {
    validate(graph, costs, origin, destination)?;
    if origin == destination {
        return Ok(Some(Route::from_search(vec![origin], graph)));
    }
    let n = graph.num_links();
    let mut fwd = Half::new(n, origin, costs.get(origin), Direction::Forward);
    // backward key excludes the link's own cost, so dist_b(v) + cost(v) is
    // the cheapest v→destination route and both halves are plain
    // edge-weighted Dijkstras, which the classic stopping rule assumes
    let mut bwd = Half::new(n, destination, 0.0, Direction::Backward);

    let mut best_total = UNREACHED;
    // (forward-tree link, backward-tree link); the route is the forward
    // path to the first joined with the backward path from the second
    let mut best_meet: Option<(LinkId, LinkId)> = None;
    let mut ties_at_best = false;

    let offer = |total: f64,
                     meet: (LinkId, LinkId),
                     best_total: &mut f64,
                     best_meet: &mut Option<(LinkId, LinkId)>,
                     ties_at_best: &mut bool| {
        if total < *best_total {
            *best_total = total;
            *best_meet = Some(meet);
            *ties_at_best = false;
        } else if total == *best_total {
            *ties_at_best = true;
        }
    };

    loop {
        let tf = fwd.top();
        let tb = bwd.top();
        let (tf, tb) = match (tf, tb) {
            (Some(a), Some(b)) => (a, b),
            _ => break,
        };
        if tf.dist + tb.dist >= best_total {
            break;
        }
        // advance the smaller frontier; ties go forward
        if tf.dist <= tb.dist {
            let entry = fwd.settle(graph, costs).unwrap();
            let u = entry.link;
            if bwd.dist[u.idx()] < UNREACHED {
                let total = entry.dist + bwd.dist[u.idx()];
                offer(total, (u, u), &mut best_total, &mut best_meet, &mut ties_at_best);
            }
            for arc in graph.arcs(u, Direction::Forward) {
                let v = arc.to;
                if bwd.dist[v.idx()] < UNREACHED {
                    let total = entry.dist + costs.get(v) + bwd.dist[v.idx()];
                    offer(total, (u, v), &mut best_total, &mut best_meet, &mut ties_at_best);
                }
            }
        } else {
            let entry = bwd.settle(graph, costs).unwrap();
            let v = entry.link;
            if fwd.dist[v.idx()] < UNREACHED {
                let total = fwd.dist[v.idx()] + entry.dist;
                offer(total, (v, v), &mut best_total, &mut best_meet, &mut ties_at_best);
            }
            for arc in graph.arcs(v, Direction::Backward) {
                let u = arc.to;
                if fwd.dist[u.idx()] < UNREACHED {
                    let total = fwd.dist[u.idx()] + costs.get(v) + entry.dist;
                    offer(total, (u, v), &mut best_total, &mut best_meet, &mut ties_at_best);
                }
            }
        }
    }

    let Some((fu, bu)) = best_meet else {
        return Ok(None);
    };

    if fwd.ties_seen || bwd.ties_seen || ties_at_best {
        // exact ties observed: re-derive the route so the lexicographic
        // tie-break is applied globally
        return shortest_path(graph, costs, origin, destination);
    }

    let mut links = fwd.path(fu);
    if fu == bu {
        let tail = bwd.path(bu);
        links.extend_from_slice(&tail[1..]);
    } else {
        links.extend_from_slice(&bwd.path(bu));
    }
    Ok(Some(Route::from_search(links, graph)))
}
