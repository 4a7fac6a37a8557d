use genmrp_core::dataset::{generate, SynthConfig};
use genmrp_core::stc::StcThresholds;
use std::time::Instant;

fn main() {
    for (thresh, hops) in [(2.0, 8), (4.0, 8), (4.0, 6)] {
        let mut cfg = SynthConfig::desk(40, 8, 40, 7);
        cfg.grid_w = 32;
        cfg.grid_h = 32;
        cfg.od_min_cells = 14;
        cfg.od_max_cells = 30;
        cfg.stc.thresholds = StcThresholds { l0: 0.3, s0: 0.98, d0: 2.0 };
        cfg.stc.candidates = 48;
        cfg.stc.hop_limit = hops;
        cfg.stc.heat_threshold = thresh;
        let t = Instant::now();
        let (out, _city) = generate(&cfg).unwrap();
        let dt = t.elapsed();
        let n = out.samples.len();
        let links: Vec<usize> = out.samples.iter().map(|s| s.num_links()).collect();
        let early: f64 = links[..n/4].iter().sum::<usize>() as f64 / (n/4) as f64;
        let late: f64 = links[3*n/4..].iter().sum::<usize>() as f64 / (n - 3*n/4) as f64;
        let mean: f64 = links.iter().sum::<usize>() as f64 / n as f64;
        println!(
            "heat_thresh={thresh} hops={hops}: per_sample={:.1}ms links mean={mean:.0} early={early:.0} late={late:.0} max={}",
            dt.as_secs_f64() * 1000.0 / n as f64, links.iter().max().unwrap()
        );
    }
}
