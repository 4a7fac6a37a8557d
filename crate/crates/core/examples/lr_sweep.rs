use genmrp_core::dataset::{generate, SynthConfig};
use genmrp_core::model::ModelParams;
use genmrp_core::training::{train, TrainConfig};

fn main() {
    let cfg = SynthConfig::desk(100, 8, 100, 2026);
    let (out, _city) = generate(&cfg).unwrap();
    let prepared: Vec<_> = out
        .samples
        .iter()
        .filter(|s| !out.split.test_ids.contains(&s.id))
        .map(|s| s.prepare(&out.header).unwrap())
        .collect();
    eprintln!("train n={}", prepared.len());
    for (lr, batch, epochs) in [(1e-3, 32, 25), (3e-3, 32, 25), (3e-3, 16, 25), (1e-2, 32, 25)] {
        let tcfg = TrainConfig { lr, batch_size: batch, epochs, patience: 8, seed: 9, ..TrainConfig::default() };
        let init = ModelParams::init(&cfg.model, 11).unwrap();
        let outcome = train(&prepared, init, &out.stats, &tcfg).unwrap();
        let tail: Vec<String> = outcome.history.iter().map(|e| format!("{:.2}/{:.2}", e.loss, e.cov_k)).collect();
        println!("lr={lr} batch={batch}: best_ep={} last covK={:.3} cov1={:.3} | {}",
            outcome.best_epoch,
            outcome.history.last().unwrap().cov_k,
            outcome.history.last().unwrap().cov1,
            tail.join(" "));
    }
}
