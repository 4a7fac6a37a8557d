use std::path::PathBuf;

use clap::Args;
use genmrp_core::dataset::{generate, write_dataset, SynthConfig};

use crate::runctx::print_header;
use crate::{validation, CliError};

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// Output directory for graph.jsonl, samples.jsonl, stats.json,
    /// splits.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 600)]
    pub users: usize,
    #[arg(long, default_value_t = 10)]
    pub samples_per_user: usize,
    /// Samples reserved for the test role (default: one sixth).
    #[arg(long)]
    pub test_count: Option<usize>,
    /// Street grid width/height in cells.
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long, default_value_t = 2026)]
    pub seed: u64,
    /// Share of users with no accumulated history.
    #[arg(long, default_value_t = 0.2)]
    pub anonymous_frac: f64,
}

pub fn run(args: GenDataArgs) -> Result<(), CliError> {
    print_header("gen-data", args.seed);
    let total = args.users * args.samples_per_user;
    let test_count = args.test_count.unwrap_or(total / 6);
    let mut config = SynthConfig::desk(args.users, args.samples_per_user, test_count, args.seed);
    config.grid_w = args.grid;
    config.grid_h = args.grid;
    config.anonymous_frac = args.anonymous_frac;
    let (output, city) = generate(&config).map_err(validation)?;
    write_dataset(&args.out, &output, &city).map_err(validation)?;
    let mean_links: f64 = output
        .samples
        .iter()
        .map(|s| s.num_links() as f64)
        .sum::<f64>()
        / output.samples.len().max(1) as f64;
    println!(
        "samples={} train={} test={} city_links={} mean_sample_links={mean_links:.0}",
        output.samples.len(),
        output.split.train_ids.len(),
        output.split.test_ids.len(),
        city.dual.num_links()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}
