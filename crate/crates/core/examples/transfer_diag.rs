//! Where does coverage drop: in-set ranking, or search over the sub-network?
use genmrp_core::dataset::{generate, SynthConfig};
use genmrp_core::inference::{plan, PlanConfig};
use genmrp_core::metrics::coverage;
use genmrp_core::model::*;
use genmrp_core::training::{train, TrainConfig};
use genmrp_core::search::CostVector;
use genmrp_core::LinkId;

fn main() {
    let cfg = SynthConfig::desk(100, 8, 100, 2026);
    let (out, _city) = generate(&cfg).unwrap();
    let test_ids: std::collections::HashSet<u64> = out.split.test_ids.iter().copied().collect();
    let mut train_p = Vec::new();
    let mut test_p = Vec::new();
    for s in &out.samples {
        let p = s.prepare(&out.header).unwrap();
        if test_ids.contains(&s.id) { test_p.push(p) } else { train_p.push(p) }
    }
    let tcfg = TrainConfig { lr: 1e-3, epochs: 14, patience: 5, seed: 9, ..TrainConfig::default() };
    let init = ModelParams::init(&cfg.model, 11).unwrap();
    let outcome = train(&train_p, init, &out.stats, &tcfg).unwrap();
    let params = &outcome.params;

    let (mut inset_cov, mut plan_cov, mut cheaper, mut n) = (0.0, 0.0, 0usize, 0usize);
    let mut cost_gap = 0.0;
    for p in &test_p {
        let feats = LinkArrays { n: p.graph.num_links(), xlink: &p.xlink, xfreq: &p.xfreq, xheat: &p.xheat };
        let request = RequestView { xs: &p.xs, xh: &p.xh };
        let (ctx, user) = compute_user(params, &out.stats, &request).unwrap();
        let lm = LinkMemory::new(p.graph.num_links(), params.config.k_iters);
        let all: Vec<LinkId> = (0..p.graph.num_links() as u32).map(LinkId).collect();
        let (costs, _) = forward_links(params, &out.stats, Mode::Deployment, &p.graph, &feats, &lm, &ctx, &user, &all).unwrap();
        // in-set argmin under model costs
        let totals: Vec<f64> = p.routes.iter().map(|r| r.links().iter().map(|l| costs[l.idx()]).sum()).collect();
        let best_idx = (0..totals.len()).min_by(|&a, &b| totals[a].total_cmp(&totals[b])).unwrap();
        inset_cov += coverage(&p.r_u, p.routes[best_idx].links(), &p.lengths).unwrap();
        // search route under the same costs
        let cv = CostVector::new(costs.clone()).unwrap();
        let dij = genmrp_core::bidirectional_dijkstra(&p.graph, &cv, p.origin, p.destination).unwrap().unwrap();
        plan_cov += coverage(&p.r_u, dij.links(), &p.lengths).unwrap();
        let dij_cost: f64 = dij.links().iter().map(|l| costs[l.idx()]).sum();
        if dij_cost < totals[best_idx] - 1e-9 { cheaper += 1; cost_gap += totals[best_idx] - dij_cost; }
        n += 1;
    }
    println!("iteration-1: in-set cov1={:.3} search cov1={:.3} (search cheaper than best set route on {}/{} samples, mean gap {:.3})",
        inset_cov / n as f64, plan_cov / n as f64, cheaper, n, cost_gap / (cheaper.max(1)) as f64);
    // full plan for covK comparison
    let mut covk = 0.0;
    for p in &test_p {
        let feats = LinkArrays { n: p.graph.num_links(), xlink: &p.xlink, xfreq: &p.xfreq, xheat: &p.xheat };
        let request = RequestView { xs: &p.xs, xh: &p.xh };
        let res = plan(&p.graph, &feats, &request, params, &out.stats, p.origin, p.destination, &PlanConfig::default()).unwrap();
        let routes: Vec<&[LinkId]> = res.routes.iter().map(|r| r.links()).collect();
        covk += genmrp_core::metrics::cov_k(&routes, &p.r_u, &p.lengths).unwrap();
    }
    println!("plan covK={:.3}", covk / test_p.len() as f64);
}
