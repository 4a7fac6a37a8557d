//! Pareto dominance over objective vectors (minimization sense).

/// `a` dominates `b` when it is no worse in every component and strictly
/// better in at least one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the non-dominated points, in input order. Among exact
/// duplicates only the lowest index survives. Empty input yields an empty
/// output.
pub fn dominance_filter(points: &[Vec<f64>]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (j, p) in points.iter().enumerate() {
        for (i, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            if dominates(q, p) || (i < j && q == p) {
                continue 'outer;
            }
        }
        keep.push(j);
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_front() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(dominance_filter(&pts), vec![0, 1]);
    }

    #[test]
    fn single_point_survives() {
        assert_eq!(dominance_filter(&[vec![3.0, 3.0]]), vec![0]);
    }

    #[test]
    fn duplicates_keep_first() {
        let pts = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(dominance_filter(&pts), vec![0]);
    }

    #[test]
    fn empty_input() {
        assert!(dominance_filter(&[]).is_empty());
    }

    #[test]
    fn no_self_domination() {
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]));
        assert!(dominates(&[1.0, 1.0], &[1.0, 2.0]));
        assert!(!dominates(&[1.0, 3.0], &[2.0, 2.0]));
    }
}
