use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use genmrp_core::model::{Checkpoint, Mode, ModelConfig, ModelParams};
use genmrp_core::training::{train, TrainConfig};

use crate::runctx::{load_dataset_dir, model_config_from_header, print_header};
use crate::{validation, CliError};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory (from gen-data).
    #[arg(long)]
    pub data: PathBuf,
    /// Output checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log CSV (epoch, loss, cov1, covK).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 12)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// deployment (local costs) or offline (neighbor attention).
    #[arg(long, default_value = "deployment")]
    pub mode: String,
    #[arg(long, default_value_t = 4)]
    pub scn_heads: usize,
    /// Build the model without neighbor-attention parameters.
    #[arg(long)]
    pub no_attention: bool,
    /// Train with a constant unit loss weight.
    #[arg(long)]
    pub ablate_boost_weight: bool,
    /// Train with the user-preference module detached.
    #[arg(long)]
    pub ablate_user_pref: bool,
    /// Rank only the pre-sampled route set instead of also mining the
    /// search route of each iteration as a hard negative.
    #[arg(long)]
    pub no_mining: bool,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.1)]
    pub holdout_frac: f64,
}

pub fn parse_mode(s: &str) -> Result<Mode, CliError> {
    match s {
        "deployment" => Ok(Mode::Deployment),
        "offline" => Ok(Mode::OfflineAttention),
        other => Err(CliError::Usage(format!(
            "unknown mode {other:?} (expected deployment|offline)"
        ))),
    }
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    print_header("train", args.seed);
    let mode = parse_mode(&args.mode)?;
    let ds = load_dataset_dir(&args.data)?;

    let mut config = model_config_from_header(&ds.data.header, &ModelConfig::desk());
    config.k_iters = args.k;
    config.scn_heads = args.scn_heads;
    config.neighbor_attention = !args.no_attention;
    config.validate().map_err(validation)?;

    let train_ids = &ds.split.train_ids;
    let mut prepared = Vec::with_capacity(train_ids.len());
    for s in &ds.data.samples {
        if train_ids.binary_search(&s.id).is_ok() {
            prepared.push(s.prepare(&ds.data.header).map_err(validation)?);
        }
    }
    if prepared.is_empty() {
        return Err(CliError::Validation("no training samples".into()));
    }
    println!("training on {} samples, mode={}", prepared.len(), args.mode);

    let tcfg = TrainConfig {
        k: args.k,
        epochs: args.epochs,
        lr: args.lr,
        batch_size: args.batch,
        seed: args.seed,
        mode,
        patience: args.patience,
        holdout_frac: args.holdout_frac,
        ablate_boost_weight: args.ablate_boost_weight,
        ablate_user_pref: args.ablate_user_pref,
        mine_search_negatives: !args.no_mining,
        ..TrainConfig::default()
    };
    let init = ModelParams::init(&config, args.seed).map_err(validation)?;
    let outcome = train(&prepared, init, &ds.stats, &tcfg).map_err(validation)?;
    for e in &outcome.history {
        println!(
            "epoch={} loss={:.6} holdout_cov1={:.4} holdout_covK={:.4}",
            e.epoch, e.loss, e.cov1, e.cov_k
        );
    }
    println!("best_epoch={}", outcome.best_epoch);

    if let Some(log) = &args.log {
        let mut f = std::fs::File::create(log).map_err(validation)?;
        writeln!(f, "epoch,loss,cov1,covK").map_err(validation)?;
        for e in &outcome.history {
            writeln!(f, "{},{:.9},{:.6},{:.6}", e.epoch, e.loss, e.cov1, e.cov_k)
                .map_err(validation)?;
        }
    }
    Checkpoint::new(&outcome.params, &ds.stats)
        .save(&args.out)
        .map_err(validation)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
