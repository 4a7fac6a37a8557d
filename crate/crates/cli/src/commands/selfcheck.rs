use clap::Args;

use genmrp_core::dataset::{generate, SynthConfig};
use genmrp_core::inference::{plan, PlanConfig};
use genmrp_core::model::{GradAccum, LinkArrays, Mode, ModelParams, RequestView};
use genmrp_core::oracles;
use genmrp_core::search::{
    bidirectional_dijkstra, dominance_filter, mosp, shortest_path, MultiCost,
};
use genmrp_core::training::{frozen_sample_loss, run_sample, TrainConfig};
use genmrp_core::LinkId;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::runctx::print_header;
use crate::CliError;

#[derive(Args, Debug)]
pub struct SelfcheckArgs {
    /// Reduce instance counts for a quick smoke pass.
    #[arg(long)]
    pub fast: bool,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn search_equivalence(n_graphs: u64, seed: u64) -> Check {
    for s in 0..n_graphs {
        let (graph, costs, o, d) = oracles::random_dual_graph(seed ^ s, 12, true);
        let brute = oracles::brute_force_shortest(&graph, &costs, o, d);
        let reference = oracles::dijkstra_reference_cost(&graph, &costs, o, d);
        let uni = shortest_path(&graph, &costs, o, d).unwrap();
        let bidi = bidirectional_dijkstra(&graph, &costs, o, d).unwrap();
        let ok = match (&brute, &reference, &uni, &bidi) {
            (Some((bc, bp)), Some(rc), Some(u), Some(b)) => {
                bc == rc
                    && costs.route_cost(u.links()) == *bc
                    && costs.route_cost(b.links()) == *bc
                    && u.links() == &bp[..]
                    && b.links() == &bp[..]
            }
            (None, None, None, None) => true,
            _ => false,
        };
        if !ok {
            return Check {
                name: "search-equivalence",
                passed: false,
                detail: format!("divergence on random graph seed {s}"),
            };
        }
    }
    Check {
        name: "search-equivalence",
        passed: true,
        detail: format!("{n_graphs} random graphs, exact cost and route agreement"),
    }
}

fn pareto_equivalence(n_graphs: u64, seed: u64) -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9A);
    for s in 0..n_graphs {
        let (graph, _, o, d) = oracles::random_dual_graph(seed ^ 0x515 ^ s, 10, true);
        let n = graph.num_links();
        let data: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(1..=6) as f64).collect();
        let mc = MultiCost::new(2, data).unwrap();
        let got = mosp(&graph, &mc, o, d, 4096).unwrap();
        let want = oracles::brute_force_pareto_routes(&graph, &mc, o, d);
        let got_pairs: Vec<(Vec<f64>, Vec<LinkId>)> = got
            .routes
            .iter()
            .map(|r| {
                let mut total = vec![0.0; 2];
                for l in r.links() {
                    for (t, c) in total.iter_mut().zip(mc.get(*l)) {
                        *t += c;
                    }
                }
                (total, r.links().to_vec())
            })
            .collect();
        if got.approximate || got_pairs != want {
            return Check {
                name: "pareto-equivalence",
                passed: false,
                detail: format!("mosp mismatch on instance {s}"),
            };
        }
        // dominance filter against the reference on random points
        let points: Vec<Vec<f64>> = (0..rng.gen_range(1..30))
            .map(|_| (0..3).map(|_| rng.gen_range(0..5) as f64).collect())
            .collect();
        if dominance_filter(&points) != oracles::pareto_filter_reference(&points) {
            return Check {
                name: "pareto-equivalence",
                passed: false,
                detail: format!("dominance filter mismatch on instance {s}"),
            };
        }
    }
    Check {
        name: "pareto-equivalence",
        passed: true,
        detail: format!("{n_graphs} instances, exact front agreement"),
    }
}

fn metric_oracles(cases: usize, seed: u64) -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x77);
    for _ in 0..cases {
        let n = rng.gen_range(3..30usize);
        let lengths: Vec<f64> = (0..n).map(|_| rng.gen_range(10.0..500.0)).collect();
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<LinkId> {
            let len = rng.gen_range(1..=n);
            let mut ids: Vec<u32> = (0..n as u32).collect();
            for i in (1..ids.len()).rev() {
                let j = rng.gen_range(0..=i);
                ids.swap(i, j);
            }
            ids.truncate(len);
            ids.into_iter().map(LinkId).collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let got = genmrp_core::metrics::coverage(&a, &b, &lengths).unwrap();
        // independent set arithmetic over boolean membership arrays
        let mut in_a = vec![false; n];
        let mut in_b = vec![false; n];
        for l in &a {
            in_a[l.idx()] = true;
        }
        for l in &b {
            in_b[l.idx()] = true;
        }
        let mut inter = 0.0;
        let mut union = 0.0;
        for i in 0..n {
            if in_a[i] && in_b[i] {
                inter += lengths[i];
            }
            if in_a[i] || in_b[i] {
                union += lengths[i];
            }
        }
        if (got - inter / union).abs() > 1e-9 {
            return Check {
                name: "metric-oracles",
                passed: false,
                detail: "coverage disagrees with set arithmetic".into(),
            };
        }
        if genmrp_core::metrics::coverage(&a, &a, &lengths).unwrap() != 1.0 {
            return Check {
                name: "metric-oracles",
                passed: false,
                detail: "identity coverage not exactly 1".into(),
            };
        }
    }
    Check {
        name: "metric-oracles",
        passed: true,
        detail: format!("{cases} random route pairs within 1e-9"),
    }
}

fn tiny_dataset(seed: u64) -> (genmrp_core::dataset::SynthOutput, SynthConfig) {
    let mut cfg = SynthConfig::desk(8, 2, 4, seed);
    cfg.grid_w = 14;
    cfg.grid_h = 14;
    cfg.od_min_cells = 5;
    cfg.od_max_cells = 10;
    cfg.popular_pool = 6;
    cfg.stc.candidates = 8;
    cfg.sampler.pool_target = 16;
    cfg.sampler.mosp_cap = 8;
    let (out, _) = generate(&cfg).unwrap();
    (out, cfg)
}

fn gradient_check(seed: u64, coords: usize) -> Check {
    let (out, cfg) = tiny_dataset(seed);
    let sample = out.samples[out.samples.len() - 1]
        .prepare(&out.header)
        .unwrap();
    let params = ModelParams::init(&cfg.model, seed).unwrap();
    let tcfg = TrainConfig::default();
    let mut accum = GradAccum::new(&params);
    let trace = run_sample(&params, &out.stats, &sample, &tcfg, Some(&mut accum)).unwrap();
    let analytic = accum.g.flatten();
    let flat = params.flatten();
    let h = 1e-5;
    let stride = (flat.len() / coords).max(1);
    let mut worst: f64 = 0.0;
    for idx in (0..flat.len()).step_by(stride) {
        let mut plus = flat.clone();
        plus[idx] += h;
        let mut minus = flat.clone();
        minus[idx] -= h;
        let lp = frozen_sample_loss(
            &ModelParams::from_flat(&cfg.model, &plus).unwrap(),
            &out.stats,
            &sample,
            &tcfg,
            &trace,
        )
        .unwrap();
        let lm = frozen_sample_loss(
            &ModelParams::from_flat(&cfg.model, &minus).unwrap(),
            &out.stats,
            &sample,
            &tcfg,
            &trace,
        )
        .unwrap();
        let fd = (lp - lm) / (2.0 * h);
        let a = analytic[idx];
        let rel = (a - fd).abs() / (a.abs() + fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Check {
        name: "gradient-check",
        passed: worst < 1e-4,
        detail: format!("max relative error {worst:.2e} over sampled coordinates"),
    }
}

fn incremental_identity(seed: u64) -> Check {
    let (out, cfg) = tiny_dataset(seed ^ 0x33);
    let params = ModelParams::init(&cfg.model, seed).unwrap();
    for record in out.samples.iter().take(6) {
        let p = record.prepare(&out.header).unwrap();
        let feats = LinkArrays {
            n: p.graph.num_links(),
            xlink: &p.xlink,
            xfreq: &p.xfreq,
            xheat: &p.xheat,
        };
        let request = RequestView {
            xs: &p.xs,
            xh: &p.xh,
        };
        let run = |incremental: bool| {
            plan(
                &p.graph,
                &feats,
                &request,
                &params,
                &out.stats,
                p.origin,
                p.destination,
                &PlanConfig {
                    incremental,
                    keep_cost_vectors: true,
                    mode: Mode::Deployment,
                    ..PlanConfig::default()
                },
            )
            .unwrap()
        };
        let inc = run(true);
        let full = run(false);
        let expected: usize = p.graph.num_links()
            + inc.eval_counts[1..].iter().sum::<usize>();
        let counted: usize = inc.eval_counts.iter().sum();
        if inc.routes != full.routes
            || inc.cost_vectors != full.cost_vectors
            || counted != expected
        {
            return Check {
                name: "incremental-identity",
                passed: false,
                detail: format!("divergence on sample {}", record.id),
            };
        }
    }
    Check {
        name: "incremental-identity",
        passed: true,
        detail: "incremental and full recomputation bit-identical".into(),
    }
}

pub fn run(args: SelfcheckArgs) -> Result<(), CliError> {
    print_header("selfcheck", args.seed);
    let (graphs, cases, coords) = if args.fast { (40, 100, 16) } else { (200, 400, 48) };
    let checks = vec![
        search_equivalence(graphs, args.seed),
        pareto_equivalence(graphs / 2, args.seed),
        metric_oracles(cases, args.seed),
        gradient_check(args.seed, coords),
        incremental_identity(args.seed),
    ];
    let mut failed = 0;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        if !c.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::Internal(format!("{failed} check(s) failed")));
    }
    Ok(())
}
