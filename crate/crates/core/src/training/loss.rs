//! Route probabilities, boosting weight and the per-iteration loss term.

use crate::graph::Route;
use crate::search::CostVector;

use super::TrainError;

pub const LOG_FLOOR: f64 = 1e-12;

/// Softmax over negated route totals (max-subtraction stabilized). Route
/// cost is the sum of its member link costs.
pub fn route_probs(costs: &CostVector, routes: &[Route]) -> Result<Vec<f64>, TrainError> {
    if routes.is_empty() {
        return Err(TrainError::EmptyRouteSet);
    }
    let mut scores = Vec::with_capacity(routes.len());
    for (ri, r) in routes.iter().enumerate() {
        let mut total = 0.0;
        for l in r.links() {
            if l.idx() >= costs.len() {
                return Err(TrainError::BadRouteLink {
                    route: ri,
                    link: l.0,
                });
            }
            total += costs.get(*l);
        }
        scores.push(-total);
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
    Ok(scores)
}

/// Marginal coverage still missing after the previous iterations. The
/// running maximum never exceeds the best achievable coverage, so the
/// clamp is a defensive assertion rather than expected behavior.
pub fn boost_weight(cov_star: f64, cov_prev: f64) -> f64 {
    debug_assert!(cov_star + 1e-12 >= cov_prev);
    (cov_star - cov_prev).max(0.0)
}

/// Weighted cross-entropy term for one iteration.
pub fn iteration_loss(probs: &[f64], label: usize, weight: f64) -> f64 {
    -weight * probs[label].max(LOG_FLOOR).ln()
}

/// Index of the supervision route: maximum coverage, ties resolved toward
/// the shorter route, then the lower index.
pub fn label_index(covs: &[f64], routes: &[Route]) -> usize {
    let mut best = 0usize;
    for i in 1..covs.len() {
        let better = covs[i] > covs[best]
            || (covs[i] == covs[best] && routes[i].length_m() < routes[best].length_m());
        if better {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DualGraph, LinkId};

    fn two_route_fixture(costs: Vec<f64>) -> (CostVector, Vec<Route>) {
        let g = DualGraph::from_adjacency(
            &[1.0; 4],
            &[
                (LinkId(0), LinkId(1)),
                (LinkId(0), LinkId(2)),
                (LinkId(1), LinkId(3)),
                (LinkId(2), LinkId(3)),
            ],
        )
        .unwrap();
        let routes = vec![
            Route::new(vec![LinkId(0), LinkId(1), LinkId(3)], &g).unwrap(),
            Route::new(vec![LinkId(0), LinkId(2), LinkId(3)], &g).unwrap(),
        ];
        (CostVector::new(costs).unwrap(), routes)
    }

    #[test]
    fn equal_costs_split_evenly() {
        let (costs, routes) = two_route_fixture(vec![1.0, 2.0, 2.0, 1.0]);
        let p = route_probs(&costs, &routes).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ln3_gap_gives_three_to_one() {
        // costs (c, c + ln 3) -> probabilities (0.75, 0.25)
        let (costs, routes) = two_route_fixture(vec![1.0, 2.0, 2.0 + 3f64.ln(), 1.0]);
        let p = route_probs(&costs, &routes).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn singleton_distribution() {
        let (costs, routes) = two_route_fixture(vec![1.0, 1.0, 1.0, 1.0]);
        let p = route_probs(&costs, &routes[..1]).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn invalid_link_is_rejected() {
        let (_, routes) = two_route_fixture(vec![1.0; 4]);
        let short = CostVector::new(vec![1.0; 2]).unwrap();
        assert!(matches!(
            route_probs(&short, &routes),
            Err(TrainError::BadRouteLink { .. })
        ));
    }

    #[test]
    fn boost_weight_cases() {
        assert_eq!(boost_weight(0.8, 0.0), 0.8);
        assert_eq!(boost_weight(0.8, 0.8), 0.0);
        assert!((boost_weight(0.8, 0.5) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn loss_cases() {
        assert_eq!(iteration_loss(&[0.25, 0.75], 0, 0.0), 0.0);
        assert_eq!(iteration_loss(&[1.0], 0, 0.7), 0.0);
        let l = iteration_loss(&[0.25, 0.75], 0, 0.5);
        assert!((l - 0.5 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn label_tie_breaks() {
        let (_, routes) = two_route_fixture(vec![1.0; 4]);
        assert_eq!(label_index(&[0.3, 0.7], &routes), 1);
        // exact tie, equal lengths: lowest index
        assert_eq!(label_index(&[0.7, 0.7], &routes), 0);
    }
}
