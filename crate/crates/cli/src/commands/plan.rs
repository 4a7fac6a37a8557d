use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use genmrp_core::inference::{plan, PlanConfig};
use genmrp_core::model::{LinkArrays, RequestView};

use crate::commands::train::parse_mode;
use crate::runctx::{load_checkpoint, load_dataset_dir, print_header};
use crate::{validation, CliError};

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Sample id within the dataset.
    #[arg(long)]
    pub sample: u64,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value = "deployment")]
    pub mode: String,
    /// Recompute every link cost each iteration instead of only
    /// memory-changed links.
    #[arg(long)]
    pub no_incremental: bool,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
struct PlanOutput {
    sample: u64,
    routes: Vec<Vec<u32>>,
    eval_counts: Vec<usize>,
    duration_ms: f64,
}

pub fn run(args: PlanArgs) -> Result<(), CliError> {
    print_header("plan", args.seed);
    let mode = parse_mode(&args.mode)?;
    let ds = load_dataset_dir(&args.data)?;
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let params = ckpt.params().map_err(validation)?;
    let record = ds
        .data
        .samples
        .iter()
        .find(|s| s.id == args.sample)
        .ok_or_else(|| CliError::Validation(format!("sample {} not found", args.sample)))?;
    let prepared = record.prepare(&ds.data.header).map_err(validation)?;
    let feats = LinkArrays {
        n: prepared.graph.num_links(),
        xlink: &prepared.xlink,
        xfreq: &prepared.xfreq,
        xheat: &prepared.xheat,
    };
    let request = RequestView {
        xs: &prepared.xs,
        xh: &prepared.xh,
    };
    let result = plan(
        &prepared.graph,
        &feats,
        &request,
        &params,
        &ckpt.stats,
        prepared.origin,
        prepared.destination,
        &PlanConfig {
            k: args.k,
            mode,
            incremental: !args.no_incremental,
            ..PlanConfig::default()
        },
    )
    .map_err(validation)?;
    let output = PlanOutput {
        sample: args.sample,
        routes: result
            .routes
            .iter()
            .map(|r| r.links().iter().map(|l| l.0).collect())
            .collect(),
        eval_counts: result.eval_counts,
        duration_ms: result.duration.as_secs_f64() * 1e3,
    };
    let json = serde_json::to_string_pretty(&output).map_err(validation)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, json).map_err(validation)?;
            println!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}
