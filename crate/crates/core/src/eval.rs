//! Experiment protocol: run the trained planner and the reference
//! baselines over a test split, compute per-sample metrics against the
//! user trajectory, and aggregate per (method, evaluation set).

use std::time::Instant;

use crate::attributes::LinkAttributeTable;
use crate::inference::{plan, plan_baseline, BaselineConfig, BaselineMethod, PlanConfig, PlanError};
use crate::metrics::{attrs, evaluate_route_set, EvalReport, ReportBuilder};
use crate::model::{LinkArrays, Mode, ModelParams, NormStats, RequestView};
use crate::training::PreparedSample;

/// One trained planner entry in the comparison table.
pub struct PlannerVariant<'a> {
    pub name: &'a str,
    pub params: &'a ModelParams,
    pub stats: &'a NormStats,
    pub mode: Mode,
    pub ablate_user_pref: bool,
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: String,
    pub requests: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
}

fn route_attr_vectors(
    routes: &[crate::graph::Route],
    table: &LinkAttributeTable,
) -> Vec<[f64; attrs::DIMS]> {
    routes
        .iter()
        .map(|r| {
            r.attributes
                .unwrap_or_else(|| table.route_attrs(r.links()))
        })
        .collect()
}

/// Evaluates every variant and baseline over the samples, aggregating into
/// per-(method, split) means. Samples must carry their attribute tables in
/// the same order.
pub fn evaluate_methods(
    samples: &[PreparedSample],
    tables: &[LinkAttributeTable],
    variants: &[PlannerVariant<'_>],
    baselines: &[BaselineMethod],
    k: usize,
) -> Result<EvalReport, PlanError> {
    let mut builder = ReportBuilder::new();
    let bcfg = BaselineConfig {
        k,
        ..BaselineConfig::default()
    };
    for (sample, table) in samples.iter().zip(tables) {
        let splits = sample.splits();
        let feats = LinkArrays {
            n: sample.graph.num_links(),
            xlink: &sample.xlink,
            xfreq: &sample.xfreq,
            xheat: &sample.xheat,
        };
        let request = RequestView {
            xs: &sample.xs,
            xh: &sample.xh,
        };
        for variant in variants {
            let result = plan(
                &sample.graph,
                &feats,
                &request,
                variant.params,
                variant.stats,
                sample.origin,
                sample.destination,
                &PlanConfig {
                    k,
                    mode: variant.mode,
                    ablate_user_pref: variant.ablate_user_pref,
                    ..PlanConfig::default()
                },
            )?;
            let attr_vecs = route_attr_vectors(&result.routes, table);
            let links: Vec<&[crate::graph::LinkId]> =
                result.routes.iter().map(|r| r.links()).collect();
            let metrics = evaluate_route_set(&links, &attr_vecs, &sample.r_u, &sample.lengths)
                .expect("sample-local ids validated at load");
            for split in &splits {
                builder.add(variant.name, split, &metrics);
            }
        }
        for method in baselines {
            let result = plan_baseline(
                &sample.graph,
                table,
                sample.origin,
                sample.destination,
                *method,
                &bcfg,
            )?;
            if result.routes.is_empty() {
                continue;
            }
            let attr_vecs = route_attr_vectors(&result.routes, table);
            let links: Vec<&[crate::graph::LinkId]> =
                result.routes.iter().map(|r| r.links()).collect();
            let metrics = evaluate_route_set(&links, &attr_vecs, &sample.r_u, &sample.lengths)
                .expect("sample-local ids validated at load");
            for split in &splits {
                builder.add(method.name(), split, &metrics);
            }
        }
    }
    Ok(builder.finish())
}

/// Single-threaded wall-clock timing per method over the samples.
pub fn bench_methods(
    samples: &[PreparedSample],
    tables: &[LinkAttributeTable],
    variants: &[PlannerVariant<'_>],
    baselines: &[BaselineMethod],
    k: usize,
) -> Result<Vec<BenchRow>, PlanError> {
    let bcfg = BaselineConfig {
        k,
        ..BaselineConfig::default()
    };
    let mut rows = Vec::new();
    let summarize = |method: &str, mut times: Vec<f64>| -> BenchRow {
        times.sort_by(f64::total_cmp);
        let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
        let median = if times.is_empty() {
            0.0
        } else {
            times[times.len() / 2]
        };
        BenchRow {
            method: method.to_string(),
            requests: times.len(),
            mean_ms: mean,
            median_ms: median,
        }
    };
    for variant in variants {
        let mut times = Vec::with_capacity(samples.len());
        for sample in samples {
            let feats = LinkArrays {
                n: sample.graph.num_links(),
                xlink: &sample.xlink,
                xfreq: &sample.xfreq,
                xheat: &sample.xheat,
            };
            let request = RequestView {
                xs: &sample.xs,
                xh: &sample.xh,
            };
            let start = Instant::now();
            let _ = plan(
                &sample.graph,
                &feats,
                &request,
                variant.params,
                variant.stats,
                sample.origin,
                sample.destination,
                &PlanConfig {
                    k,
                    mode: variant.mode,
                    ablate_user_pref: variant.ablate_user_pref,
                    ..PlanConfig::default()
                },
            )?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        rows.push(summarize(variant.name, times));
    }
    for method in baselines {
        let mut times = Vec::with_capacity(samples.len());
        for (sample, table) in samples.iter().zip(tables) {
            let start = Instant::now();
            let _ = plan_baseline(
                &sample.graph,
                table,
                sample.origin,
                sample.destination,
                *method,
                &bcfg,
            )?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        rows.push(summarize(method.name(), times));
    }
    Ok(rows)
}
