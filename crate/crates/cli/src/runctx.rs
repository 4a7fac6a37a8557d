//! Shared helpers: dataset directory loading and run headers.

use std::path::Path;

use genmrp_core::dataset::{load_samples, LoadedDataset, SplitFile};
use genmrp_core::model::{Checkpoint, ModelConfig, NormStats};

use crate::{validation, CliError};

pub struct DatasetDir {
    pub data: LoadedDataset,
    pub split: SplitFile,
    pub stats: NormStats,
}

pub fn load_dataset_dir(dir: &Path) -> Result<DatasetDir, CliError> {
    let data = load_samples(&dir.join("samples.jsonl")).map_err(validation)?;
    for issue in &data.issues {
        eprintln!("warning: {issue:?}");
    }
    let split: SplitFile = read_json(&dir.join("splits.json"))?;
    let stats: NormStats = read_json(&dir.join("stats.json"))?;
    Ok(DatasetDir {
        data,
        split,
        stats,
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    Checkpoint::load(path).map_err(validation)
}

/// Every subcommand prints one header line with its root seed so runs can
/// be reproduced exactly.
pub fn print_header(cmd: &str, seed: u64) {
    println!("# genmrp {cmd} seed={seed}");
}

/// Model dimensions from a dataset header plus architecture knobs.
pub fn model_config_from_header(
    header: &genmrp_core::dataset::DatasetHeader,
    base: &ModelConfig,
) -> ModelConfig {
    let mut config = base.clone();
    config.s_dim = header.s_dim;
    config.scenario_channel = header.scenario_channel;
    config.h_events = header.h_events;
    config.h_dim = header.h_dim;
    config.link_dim = header.link_dim;
    config.maneuver_channel = header.maneuver_channel;
    config.freq_events = header.freq_events;
    config.freq_dim = header.freq_dim;
    config.heat_dim = header.heat_dim;
    config
}

pub fn cpu_model() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".into())
}
