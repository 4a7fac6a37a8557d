use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use genmrp_core::eval::{bench_methods, PlannerVariant};

use crate::commands::eval::{parse_methods, test_split};
use crate::commands::train::parse_mode;
use crate::runctx::{cpu_model, load_checkpoint, load_dataset_dir, print_header};
use crate::{validation, CliError};

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Number of test requests to time.
    #[arg(long, default_value_t = 100)]
    pub requests: usize,
    /// Output CSV; timing rows plus hardware comment lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value = "deployment")]
    pub mode: String,
    #[arg(long, default_value = "all")]
    pub methods: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    print_header("bench", args.seed);
    let mode = parse_mode(&args.mode)?;
    let ds = load_dataset_dir(&args.data)?;
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let params = ckpt.params().map_err(validation)?;
    let (samples, tables) = test_split(&ds)?;
    let n = args.requests.min(samples.len());
    let samples = &samples[..n];
    let tables = &tables[..n];
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
    let rows = bench_methods(samples, tables, &variants, &baselines, args.k).map_err(validation)?;

    let header = format!(
        "# cpu={}\n# threads=1 k={} mode={}\nmethod,requests,mean_ms,median_ms",
        cpu_model(),
        args.k,
        args.mode
    );
    let mut body = String::new();
    for r in &rows {
        body.push_str(&format!(
            "{},{},{:.4},{:.4}\n",
            r.method, r.requests, r.mean_ms, r.median_ms
        ));
    }
    println!("{header}");
    print!("{body}");
    if let Some(path) = &args.out {
        let mut f = std::fs::File::create(path).map_err(validation)?;
        writeln!(f, "{header}").map_err(validation)?;
        f.write_all(body.as_bytes()).map_err(validation)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
