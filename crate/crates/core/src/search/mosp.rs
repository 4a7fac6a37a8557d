//! Multi-objective shortest paths by Pareto label correcting.
//!
//! Every node keeps the set of mutually non-dominated objective vectors
//! discovered so far; labels are expanded in lexicographic cost order.
//! With strictly positive first-dimension costs this degenerates to label
//! setting, but correctness only needs non-negative objectives.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::{Direction, DualGraph, LinkId, Route};

use super::{dominates, CostVector, MultiCost, SearchError};

const NO_PRED: u32 = u32::MAX;

/// Pareto routes between one origin/destination pair.
#[derive(Debug, Clone)]
pub struct MospResult {
    /// One route per distinct non-dominated objective vector, sorted by
    /// vector (lexicographically); among routes sharing a vector the
    /// lexicographically smallest link sequence is kept.
    pub routes: Vec<Route>,
    /// Set when the per-node label cap was hit; the result may then omit
    /// part of the true Pareto set.
    pub approximate: bool,
}

struct Label {
    cost: Vec<f64>,
    link: LinkId,
    pred: u32,
    alive: bool,
}

struct QEntry {
    cost: Vec<f64>,
    link: LinkId,
    idx: u32,
}

impl PartialEq for QEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for QEntry {}

impl Ord for QEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed lexicographic cost order for a min-heap
        for (a, b) in self.cost.iter().zip(&other.cost) {
            match b.total_cmp(a) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        other
            .link
            .cmp(&self.link)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for QEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn label_route(arena: &[Label], mut idx: u32) -> Vec<LinkId> {
    let mut seq = Vec::new();
    loop {
        let l = &arena[idx as usize];
        seq.push(l.link);
        if l.pred == NO_PRED {
            break;
        }
        idx = l.pred;
    }
    seq.reverse();
    seq
}

/// The set of Pareto-optimal routes from `origin` to `destination` under
/// `mc`. `max_labels_per_node` caps the per-node frontier; hitting it flags
/// the result approximate. Unreachable pairs yield an empty route list.
pub fn mosp(
    graph: &DualGraph,
    mc: &MultiCost,
    origin: LinkId,
    destination: LinkId,
    max_labels_per_node: usize,
) -> Result<MospResult, SearchError> {
    if mc.dims() < 2 {
        return Err(SearchError::InvalidParameter(
            "mosp needs at least 2 objectives".into(),
        ));
    }
    if mc.num_links() != graph.num_links() {
        return Err(SearchError::LengthMismatch {
            expected: graph.num_links(),
            actual: mc.num_links(),
        });
    }
    graph.check_link(origin)?;
    graph.check_link(destination)?;
    if max_labels_per_node == 0 {
        return Err(SearchError::InvalidParameter(
            "label cap must be positive".into(),
        ));
    }

    let n = graph.num_links();
    let mut arena: Vec<Label> = Vec::new();
    let mut frontier: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut heap: BinaryHeap<QEntry> = BinaryHeap::new();
    let mut approximate = false;

    let root_cost = mc.get(origin).to_vec();
    arena.push(Label {
        cost: root_cost.clone(),
        link: origin,
        pred: NO_PRED,
        alive: true,
    });
    frontier[origin.idx()].push(0);
    heap.push(QEntry {
        cost: root_cost,
        link: origin,
        idx: 0,
    });

    while let Some(entry) = heap.pop() {
        if !arena[entry.idx as usize].alive {
            continue;
        }
        if entry.link == destination {
            // extensions would leave and re-enter the destination; they are
            // dominated or equal-with-longer-route, so never expanded
            continue;
        }
        for arc in graph.arcs(entry.link, Direction::Forward) {
            let v = arc.to;
            let step = mc.get(v);
            let child_cost: Vec<f64> = entry
                .cost
                .iter()
                .zip(step)
                .map(|(a, b)| a + b)
                .collect();

            // prune against the destination frontier: strictly worse labels
            // cannot complete into anything non-dominated
            if frontier[destination.idx()]
                .iter()
                .any(|&i| dominates(&arena[i as usize].cost, &child_cost))
            {
                continue;
            }

            let mut dead_equal: Option<u32> = None;
            let mut dominated = false;
            for &i in &frontier[v.idx()] {
                let inc = &arena[i as usize];
                if dominates(&inc.cost, &child_cost) {
                    dominated = true;
                    break;
                }
                if inc.cost == child_cost {
                    // identical vector: keep the lexicographically smaller
                    // link sequence
                    let cand_route = {
                        let mut r = label_route(&arena, entry.idx);
                        r.push(v);
                        r
                    };
                    let inc_route = label_route(&arena, i);
                    if cand_route < inc_route {
                        dead_equal = Some(i);
                    } else {
                        dominated = true;
                    }
                    break;
                }
            }
            if dominated {
                continue;
            }
            if let Some(i) = dead_equal {
                arena[i as usize].alive = false;
                frontier[v.idx()].retain(|&x| x != i);
            } else {
                // drop frontier labels the child dominates
                let dominated_now: Vec<u32> = frontier[v.idx()]
                    .iter()
                    .copied()
                    .filter(|&i| dominates(&child_cost, &arena[i as usize].cost))
                    .collect();
                for i in dominated_now {
                    arena[i as usize].alive = false;
                    frontier[v.idx()].retain(|&x| x != i);
                }
            }
            if frontier[v.idx()].len() >= max_labels_per_node {
                approximate = true;
                continue;
            }
            let idx = arena.len() as u32;
            arena.push(Label {
                cost: child_cost.clone(),
                link: v,
                pred: entry.idx,
                alive: true,
            });
            frontier[v.idx()].push(idx);
            heap.push(QEntry {
                cost: child_cost,
                link: v,
                idx,
            });
        }
    }

    let mut finals: Vec<u32> = frontier[destination.idx()].clone();
    finals.sort_by(|&a, &b| {
        let (la, lb) = (&arena[a as usize], &arena[b as usize]);
        la.cost
            .iter()
            .zip(&lb.cost)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let routes = finals
        .into_iter()
        .map(|i| Route::from_search(label_route(&arena, i), graph))
        .collect();
    Ok(MospResult {
        routes,
        approximate,
    })
}

/// Convenience wrapper extracting one objective column as scalar costs.
pub fn objective_column(mc: &MultiCost, dim: usize) -> Result<CostVector, SearchError> {
    if dim >= mc.dims() {
        return Err(SearchError::InvalidParameter(format!(
            "objective {dim} out of range ({} dims)",
            mc.dims()
        )));
    }
    let n = mc.num_links();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(mc.get(LinkId(i as u32))[dim]);
    }
    CostVector::new(out)
}
