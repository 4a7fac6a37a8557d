//! Penalty-based alternative routes: after each shortest-path round the
//! working costs of the links just used are multiplied by a penalty factor,
//! steering later rounds onto different links.

use crate::graph::{DualGraph, LinkId, Route};

use super::{bidirectional_dijkstra, CostVector, SearchError};

/// Extra search rounds allowed per requested route before giving up on
/// finding more distinct alternatives.
const ROUNDS_PER_ROUTE: usize = 4;

/// Up to `k` distinct routes from `origin` to `destination`. The first is
/// the plain shortest route; duplicates produced by later rounds are
/// dropped. The caller's cost vector is never modified. Unreachable pairs
/// yield an empty list.
pub fn penalty_alternatives(
    graph: &DualGraph,
    costs: &CostVector,
    origin: LinkId,
    destination: LinkId,
    k: usize,
    penalty_factor: f64,
) -> Result<Vec<Route>, SearchError> {
    if k < 1 {
        return Err(SearchError::InvalidParameter(
            "k must be at least 1".into(),
        ));
    }
    if !(penalty_factor > 1.0) {
        return Err(SearchError::InvalidParameter(format!(
            "penalty factor must exceed 1, got {penalty_factor}"
        )));
    }
    let mut working = costs.clone();
    let mut routes: Vec<Route> = Vec::new();
    for _ in 0..k.saturating_mul(ROUNDS_PER_ROUTE) {
        let Some(route) = bidirectional_dijkstra(graph, &working, origin, destination)? else {
            break;
        };
        for &link in route.links() {
            working.scale_link(link, penalty_factor);
        }
        if !routes.contains(&route) {
            routes.push(route);
            if routes.len() == k {
                break;
            }
        }
    }
    Ok(routes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DualGraph;

    fn diamond() -> DualGraph {
        DualGraph::from_adjacency(
            &[1.0; 4],
            &[
                (LinkId(0), LinkId(1)),
                (LinkId(0), LinkId(2)),
                (LinkId(1), LinkId(3)),
                (LinkId(2), LinkId(3)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn k1_is_plain_shortest() {
        let g = diamond();
        let costs = CostVector::new(vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        let routes = penalty_alternatives(&g, &costs, LinkId(0), LinkId(3), 1, 1.4).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].links(), &[LinkId(0), LinkId(1), LinkId(3)]);
    }

    #[test]
    fn both_diamond_branches_found() {
        let g = diamond();
        let costs = CostVector::new(vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        let routes = penalty_alternatives(&g, &costs, LinkId(0), LinkId(3), 2, 1.5).unwrap();
        assert_eq!(routes.len(), 2);
        assert_eq!(routes[0].links(), &[LinkId(0), LinkId(1), LinkId(3)]);
        assert_eq!(routes[1].links(), &[LinkId(0), LinkId(2), LinkId(3)]);
        // caller costs untouched
        assert_eq!(costs.values(), &[1.0, 2.0, 4.0, 1.0]);
    }

    #[test]
    fn single_path_graph_yields_one_route() {
        let g = DualGraph::from_adjacency(&[1.0, 1.0], &[(LinkId(0), LinkId(1))]).unwrap();
        let costs = CostVector::new(vec![1.0, 1.0]).unwrap();
        let routes = penalty_alternatives(&g, &costs, LinkId(0), LinkId(1), 3, 1.4).unwrap();
        assert_eq!(routes.len(), 1);
    }

    #[test]
    fn unreachable_yields_empty() {
        let g = DualGraph::from_adjacency(&[1.0, 1.0], &[]).unwrap();
        let costs = CostVector::new(vec![1.0, 1.0]).unwrap();
        let routes = penalty_alternatives(&g, &costs, LinkId(0), LinkId(1), 2, 1.4).unwrap();
        assert!(routes.is_empty());
    }

    #[test]
    fn bad_parameters_rejected() {
        let g = diamond();
        let costs = CostVector::new(vec![1.0; 4]).unwrap();
        assert!(penalty_alternatives(&g, &costs, LinkId(0), LinkId(3), 0, 1.4).is_err());
        assert!(penalty_alternatives(&g, &costs, LinkId(0), LinkId(3), 2, 1.0).is_err());
    }
}
