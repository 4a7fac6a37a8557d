//! Shared fixtures for the benchmark suite: one deterministic synthetic
//! dataset and city network, built once per process.

use genmrp_core::dataset::{generate, CityNetwork, SynthConfig, SynthOutput};
use genmrp_core::model::{ModelParams, NormStats};
use genmrp_core::training::PreparedSample;

pub struct BenchFixture {
    pub output: SynthOutput,
    pub city: CityNetwork,
    pub samples: Vec<PreparedSample>,
    pub params: ModelParams,
    pub stats: NormStats,
}

/// Small but non-trivial fixture: a 20x20 city with a short simulated
/// request stream and randomly initialized model parameters (benchmarks
/// measure arithmetic, not model quality).
pub fn fixture() -> BenchFixture {
    let mut cfg = SynthConfig::desk(24, 4, 12, 99);
    cfg.grid_w = 20;
    cfg.grid_h = 20;
    cfg.od_min_cells = 8;
    cfg.od_max_cells = 16;
    cfg.stc.candidates = 16;
    cfg.sampler.pool_target = 24;
    let (output, city) = generate(&cfg).expect("bench fixture generation");
    let samples: Vec<PreparedSample> = output
        .samples
        .iter()
        .rev()
        .take(12)
        .map(|s| s.prepare(&output.header).expect("bench fixture prepare"))
        .collect();
    let params = ModelParams::init(&cfg.model, 5).expect("bench fixture params");
    let stats = output.stats.clone();
    BenchFixture {
        output,
        city,
        samples,
        params,
        stats,
    }
}
