use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use genmrp_core::graph::{DualGraph, DualOptions, LinkId, PrimalGraph};
use genmrp_core::search::CostVector;
use genmrp_core::stc::{extract_subnetwork, CapillaryFeatures, StcConfig, StcThresholds};

use crate::runctx::print_header;
use crate::{validation, CliError};

#[derive(Args, Debug)]
pub struct StcArgs {
    /// Primal road graph (JSON lines).
    #[arg(long)]
    pub graph: PathBuf,
    /// Request JSON: {"origin": id, "destination": id, "scenario": code,
    /// optional "heat": [...], "familiar_links": [...]}.
    #[arg(long)]
    pub request: PathBuf,
    /// Output sub-network JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    pub l0: f64,
    #[arg(long, default_value_t = 0.95)]
    pub s0: f64,
    #[arg(long, default_value_t = 1.5)]
    pub d0: f64,
    #[arg(long, default_value_t = 32)]
    pub candidates: usize,
    #[arg(long, default_value_t = 8)]
    pub hop_limit: usize,
    #[arg(long, default_value_t = 1.0)]
    pub heat_threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestSpec {
    origin: u32,
    destination: u32,
    #[serde(default)]
    scenario: u8,
    #[serde(default)]
    heat: Option<Vec<f64>>,
    #[serde(default)]
    familiar_links: Option<Vec<u32>>,
}

pub fn run(args: StcArgs) -> Result<(), CliError> {
    print_header("stc", args.seed);
    let primal = PrimalGraph::load_jsonl(&args.graph).map_err(validation)?;
    let dual = DualGraph::from_primal(&primal, DualOptions::default());
    let request: RequestSpec = crate::runctx::read_json(&args.request)?;
    let n = dual.num_links();
    for id in [request.origin, request.destination] {
        if id as usize >= n {
            return Err(CliError::Validation(format!(
                "request link {id} outside graph ({n} links)"
            )));
        }
    }
    let heat = request.heat.unwrap_or_else(|| vec![0.0; n]);
    if heat.len() != n {
        return Err(CliError::Validation(format!(
            "heat has {} entries, graph has {n} links",
            heat.len()
        )));
    }
    let mut familiar = vec![false; n];
    for l in request.familiar_links.unwrap_or_default() {
        if (l as usize) < n {
            familiar[l as usize] = true;
        }
    }
    let base_costs =
        CostVector::floored(dual.links().iter().map(|l| l.fftime_s).collect())
            .map_err(validation)?;
    let config = StcConfig {
        thresholds: StcThresholds {
            l0: args.l0,
            s0: args.s0,
            d0: args.d0,
        },
        candidates: args.candidates,
        hop_limit: args.hop_limit,
        heat_threshold: args.heat_threshold,
        ..StcConfig::default()
    };
    let features = CapillaryFeatures {
        heat: &heat,
        familiar: &familiar,
    };
    let sub = extract_subnetwork(
        &dual,
        &base_costs,
        LinkId(request.origin),
        LinkId(request.destination),
        &features,
        request.scenario,
        &config,
        args.seed,
    )
    .map_err(validation)?;
    let file = std::fs::File::create(&args.out).map_err(validation)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &sub).map_err(validation)?;
    println!(
        "input_links={} output_links={} reduction={:.1}%",
        n,
        sub.len(),
        100.0 * (1.0 - sub.len() as f64 / n as f64)
    );
    Ok(())
}
