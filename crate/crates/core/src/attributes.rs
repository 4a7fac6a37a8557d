//! Per-link attribute channels and the six-dimensional route attribute
//! vector (travel time, distance, toll cost, familiar-road proportion,
//! traffic-light count, rough-road length) built from them.

use crate::graph::{LinkId, Route};
use crate::metrics::attrs;
use crate::search::{CostVector, MultiCost, SearchError};

/// Raw per-link quantities. `familiar_len` is the link length where the
/// user has familiarity records and zero elsewhere, so both the familiar
/// proportion and its minimization complement are plain sums.
#[derive(Debug, Clone)]
pub struct LinkAttributeTable {
    pub time_s: Vec<f64>,
    pub length_m: Vec<f64>,
    pub toll: Vec<f64>,
    pub familiar_len: Vec<f64>,
    pub lights: Vec<f64>,
    pub rough_len: Vec<f64>,
}

impl LinkAttributeTable {
    pub fn num_links(&self) -> usize {
        self.time_s.len()
    }

    /// Route attribute vector; index [`attrs::FAMILIAR_PROP`] carries the
    /// familiar-length share of the route.
    pub fn route_attrs(&self, links: &[LinkId]) -> [f64; attrs::DIMS] {
        let mut time = 0.0;
        let mut len = 0.0;
        let mut toll = 0.0;
        let mut fam = 0.0;
        let mut lights = 0.0;
        let mut rough = 0.0;
        for l in links {
            let i = l.idx();
            time += self.time_s[i];
            len += self.length_m[i];
            toll += self.toll[i];
            fam += self.familiar_len[i];
            lights += self.lights[i];
            rough += self.rough_len[i];
        }
        let mut a = [0.0; attrs::DIMS];
        a[attrs::TIME] = time;
        a[attrs::DIST] = len;
        a[attrs::TOLL] = toll;
        a[attrs::FAMILIAR_PROP] = if len > 0.0 { fam / len } else { 0.0 };
        a[attrs::LIGHTS] = lights;
        a[attrs::ROUGH] = rough;
        a
    }

    pub fn set_route_attrs(&self, route: &mut Route) {
        route.attributes = Some(self.route_attrs(route.links()));
    }

    /// Six per-link objectives oriented for minimization (familiarity
    /// enters as unfamiliar length).
    pub fn pareto_multicost(&self) -> Result<MultiCost, SearchError> {
        let n = self.num_links();
        let mut data = Vec::with_capacity(n * attrs::DIMS);
        for i in 0..n {
            data.push(self.time_s[i]);
            data.push(self.length_m[i]);
            data.push(self.toll[i]);
            data.push((self.length_m[i] - self.familiar_len[i]).max(0.0));
            data.push(self.lights[i]);
            data.push(self.rough_len[i]);
        }
        MultiCost::new(attrs::DIMS, data)
    }

    /// Scalar per-link costs for one oriented objective dimension.
    pub fn objective(&self, dim: usize) -> Result<CostVector, SearchError> {
        let pick = |i: usize| -> f64 {
            match dim {
                attrs::TIME => self.time_s[i],
                attrs::DIST => self.length_m[i],
                attrs::TOLL => self.toll[i],
                attrs::FAMILIAR_PROP => (self.length_m[i] - self.familiar_len[i]).max(0.0),
                attrs::LIGHTS => self.lights[i],
                _ => self.rough_len[i],
            }
        };
        CostVector::floored((0..self.num_links()).map(pick).collect())
    }

    /// Familiarity-discounted length: `length × (1 − λ · familiar)`.
    pub fn familiarity_cost(&self, lambda: f64) -> Result<CostVector, SearchError> {
        let n = self.num_links();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let familiar = if self.familiar_len[i] > 0.0 { 1.0 } else { 0.0 };
            out.push(self.length_m[i] * (1.0 - lambda * familiar));
        }
        CostVector::floored(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> LinkAttributeTable {
        LinkAttributeTable {
            time_s: vec![10.0, 20.0, 5.0],
            length_m: vec![100.0, 200.0, 50.0],
            toll: vec![0.0, 2.0, 0.0],
            familiar_len: vec![100.0, 0.0, 0.0],
            lights: vec![1.0, 0.0, 1.0],
            rough_len: vec![0.0, 30.0, 0.0],
        }
    }

    #[test]
    fn route_attrs_sum_and_ratio() {
        let t = table();
        let a = t.route_attrs(&[LinkId(0), LinkId(1)]);
        assert_eq!(a[attrs::TIME], 30.0);
        assert_eq!(a[attrs::DIST], 300.0);
        assert_eq!(a[attrs::TOLL], 2.0);
        assert!((a[attrs::FAMILIAR_PROP] - 100.0 / 300.0).abs() < 1e-12);
        assert_eq!(a[attrs::LIGHTS], 1.0);
        assert_eq!(a[attrs::ROUGH], 30.0);
    }

    #[test]
    fn pareto_cost_orients_familiarity() {
        let t = table();
        let mc = t.pareto_multicost().unwrap();
        assert_eq!(mc.get(LinkId(0))[attrs::FAMILIAR_PROP], 0.0);
        assert_eq!(mc.get(LinkId(1))[attrs::FAMILIAR_PROP], 200.0);
    }

    #[test]
    fn familiarity_cost_discounts() {
        let t = table();
        let c = t.familiarity_cost(0.5).unwrap();
        assert_eq!(c.get(LinkId(0)), 50.0);
        assert_eq!(c.get(LinkId(1)), 200.0);
    }
}
