use std::path::PathBuf;

use clap::Args;

use genmrp_core::attributes::LinkAttributeTable;
use genmrp_core::eval::{evaluate_methods, PlannerVariant};
use genmrp_core::inference::BaselineMethod;
use genmrp_core::training::PreparedSample;

use crate::commands::train::parse_mode;
use crate::runctx::{load_checkpoint, load_dataset_dir, print_header, DatasetDir};
use crate::{validation, CliError};

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output CSV (method, split, n, cov1, cov_k, sim, n_pareto, cov_net).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value = "deployment")]
    pub mode: String,
    /// Comma-separated method list; `all` runs the planner plus every
    /// baseline.
    #[arg(long, default_value = "all")]
    pub methods: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn test_split(ds: &DatasetDir) -> Result<(Vec<PreparedSample>, Vec<LinkAttributeTable>), CliError> {
    let mut samples = Vec::new();
    let mut tables = Vec::new();
    for s in &ds.data.samples {
        if ds.split.test_ids.binary_search(&s.id).is_ok() {
            tables.push(s.attribute_table(&ds.data.header));
            samples.push(s.prepare(&ds.data.header).map_err(validation)?);
        }
    }
    if samples.is_empty() {
        return Err(CliError::Validation("test split is empty".into()));
    }
    Ok((samples, tables))
}

pub fn parse_methods(spec: &str) -> Result<(bool, Vec<BaselineMethod>), CliError> {
    if spec == "all" {
        return Ok((true, BaselineMethod::ALL.to_vec()));
    }
    let mut genmrp = false;
    let mut baselines = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "genmrp" {
            genmrp = true;
        } else if let Some(m) = BaselineMethod::parse(name) {
            baselines.push(m);
        } else {
            return Err(CliError::Usage(format!("unknown method {name:?}")));
        }
    }
    Ok((genmrp, baselines))
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    print_header("eval", args.seed);
    let mode = parse_mode(&args.mode)?;
    let ds = load_dataset_dir(&args.data)?;
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let params = ckpt.params().map_err(validation)?;
    let (samples, tables) = test_split(&ds)?;
    let (with_genmrp, baselines) = parse_methods(&args.methods)?;

    let mut variants = Vec::new();
    if with_genmrp {
        variants.push(PlannerVariant {
            name: "genmrp",
            params: &params,
            stats: &ckpt.stats,
            mode,
            ablate_user_pref: false,
        });
    }
    let report =
        evaluate_methods(&samples, &tables, &variants, &baselines, args.k).map_err(validation)?;
    let mut out = std::fs::File::create(&args.out).map_err(validation)?;
    report.write_csv(&mut out).map_err(validation)?;
    println!("evaluated {} test samples", samples.len());
    for row in &report.rows {
        if row.split == "set1" {
            println!(
                "{:8} cov1={:.4} covK={:.4} sim={} np={:.2} covnet={:.4} (n={})",
                row.method,
                row.cov1,
                row.cov_k,
                row.sim
                    .map(|s| format!("{s:.4}"))
                    .unwrap_or_else(|| "-".into()),
                row.n_pareto,
                row.cov_net,
                row.n
            );
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
