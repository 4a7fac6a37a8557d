//! Dataset file IO: streaming JSON-lines loading with per-record
//! validation, coverage cross-checks, split derivation and normalization
//! statistics.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::graph::LinkId;
use crate::metrics::coverage;
use crate::model::{ModelConfig, NormStats};
use crate::model::preprocess::ChannelStats;

use super::{DataError, DatasetHeader, RecordLine, SampleRecord};

pub const COV_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum LoadIssue {
    /// Record skipped entirely.
    Rejected { line: usize, msg: String },
    /// Stored coverage disagrees with recomputation from the trajectory.
    CovMismatch {
        line: usize,
        sample: u64,
        route: usize,
        stored: f64,
        computed: f64,
    },
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub header: DatasetHeader,
    pub samples: Vec<SampleRecord>,
    pub issues: Vec<LoadIssue>,
}

fn validate_record(record: &SampleRecord, header: &DatasetHeader) -> Result<(), String> {
    let n = record.num_links();
    if record.origin as usize >= n || record.destination as usize >= n {
        return Err("origin/destination outside link range".into());
    }
    for &[a, b] in &record.adjacency {
        if a as usize >= n || b as usize >= n {
            return Err(format!("adjacency pair ({a},{b}) outside link range"));
        }
    }
    for (what, len, expect) in [
        ("x^s", record.xs.len(), header.s_dim),
        ("x^h", record.xh.len(), header.h_events * header.h_dim),
        ("x^link", record.xlink.len(), n * header.link_dim),
        ("x^heat", record.xheat.len(), n * header.heat_dim),
    ] {
        if len != expect {
            return Err(format!("{what} has {len} values, expected {expect}"));
        }
    }
    for entry in &record.freq {
        if entry.link as usize >= n {
            return Err(format!("freq entry for unknown link {}", entry.link));
        }
        if entry.events.len() > header.freq_events {
            return Err(format!(
                "freq entry for link {} has {} events, cap is {}",
                entry.link,
                entry.events.len(),
                header.freq_events
            ));
        }
        for ev in &entry.events {
            if ev.len() != header.freq_dim {
                return Err(format!(
                    "freq event for link {} has {} dims, expected {}",
                    entry.link,
                    ev.len(),
                    header.freq_dim
                ));
            }
        }
    }
    if record.routes.len() != record.covs.len() {
        return Err(format!(
            "{} routes but {} coverage values",
            record.routes.len(),
            record.covs.len()
        ));
    }
    if record.routes.is_empty() {
        return Err("no routes".into());
    }
    for (ri, route) in record.routes.iter().enumerate() {
        if route.is_empty() {
            return Err(format!("route {ri} is empty"));
        }
        if route.iter().any(|&l| l as usize >= n) {
            return Err(format!("route {ri} references a link outside range"));
        }
    }
    if record.r_u.is_empty() || record.r_u.iter().any(|&l| l as usize >= n) {
        return Err("trajectory missing or outside link range".into());
    }
    if record.lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err("non-positive link length".into());
    }
    Ok(())
}

/// Streams `samples.jsonl`. Malformed or dimensionally invalid records are
/// rejected individually with their line numbers; stored coverages are
/// cross-checked against the trajectory and flagged when they disagree by
/// more than [`COV_TOLERANCE`].
pub fn load_samples(path: &Path) -> Result<LoadedDataset, DataError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut header: Option<DatasetHeader> = None;
    let mut samples = Vec::new();
    let mut issues = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Result<RecordLine, _> = serde_json::from_str(&line);
        match parsed {
            Err(e) => {
                if header.is_none() {
                    return Err(DataError::Record {
                        line: lineno,
                        msg: e.to_string(),
                    });
                }
                issues.push(LoadIssue::Rejected {
                    line: lineno,
                    msg: e.to_string(),
                });
            }
            Ok(RecordLine::Header(h)) => {
                if header.is_some() {
                    issues.push(LoadIssue::Rejected {
                        line: lineno,
                        msg: "duplicate header".into(),
                    });
                } else {
                    header = Some(h);
                }
            }
            Ok(RecordLine::Sample(record)) => {
                let Some(h) = header.as_ref() else {
                    return Err(DataError::MissingHeader);
                };
                match validate_record(&record, h) {
                    Err(msg) => issues.push(LoadIssue::Rejected { line: lineno, msg }),
                    Ok(()) => {
                        let r_u: Vec<LinkId> =
                            record.r_u.iter().map(|&i| LinkId(i)).collect();
                        for (ri, (route, &stored)) in
                            record.routes.iter().zip(&record.covs).enumerate()
                        {
                            let links: Vec<LinkId> =
                                route.iter().map(|&i| LinkId(i)).collect();
                            let computed = coverage(&r_u, &links, &record.lengths)
                                .map_err(|e| DataError::Record {
                                    line: lineno,
                                    msg: e.to_string(),
                                })?;
                            if (computed - stored).abs() > COV_TOLERANCE {
                                issues.push(LoadIssue::CovMismatch {
                                    line: lineno,
                                    sample: record.id,
                                    route: ri,
                                    stored,
                                    computed,
                                });
                            }
                        }
                        samples.push(record);
                    }
                }
            }
        }
    }
    let header = header.ok_or(DataError::MissingHeader)?;
    Ok(LoadedDataset {
        header,
        samples,
        issues,
    })
}

pub fn save_samples(
    path: &Path,
    header: &DatasetHeader,
    samples: &[SampleRecord],
) -> Result<(), DataError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let write_line = |out: &mut dyn Write, line: &RecordLine| -> Result<(), DataError> {
        let s = serde_json::to_string(line).map_err(|e| DataError::Serde(e.to_string()))?;
        writeln!(out, "{s}").map_err(DataError::from)
    };
    write_line(&mut out, &RecordLine::Header(header.clone()))?;
    for s in samples {
        write_line(&mut out, &RecordLine::Sample(s.clone()))?;
    }
    Ok(())
}

/// Evaluation-set memberships derived from record contents.
#[derive(Debug, Clone)]
pub struct SplitSets {
    pub set2: BTreeSet<u64>,
    pub set3: BTreeSet<u64>,
}

impl SplitSets {
    pub fn set4(&self) -> BTreeSet<u64> {
        self.set2.union(&self.set3).copied().collect()
    }
}

/// `set2`: non-empty familiarity frequency; `set3`: non-empty history;
/// `set1` is every sample and `set4` the union of the two.
pub fn split_sets(samples: &[SampleRecord]) -> SplitSets {
    let mut set2 = BTreeSet::new();
    let mut set3 = BTreeSet::new();
    for s in samples {
        if s.has_familiarity() {
            set2.insert(s.id);
        }
        if s.has_history() {
            set3.insert(s.id);
        }
    }
    SplitSets { set2, set3 }
}

/// Fits normalization statistics on the given samples (training role
/// only). History rows and frequency events that are entirely zero are
/// treated as missing and excluded, matching the model's masking.
pub fn fit_stats(
    samples: &[SampleRecord],
    header: &DatasetHeader,
    config: &ModelConfig,
) -> NormStats {
    let mut s_acc = vec![ChannelStats::default(); header.s_dim - 1];
    let mut h_acc = vec![ChannelStats::default(); header.h_dim];
    let mut link_acc = vec![ChannelStats::default(); header.link_dim - 1];
    let mut freq_acc = vec![ChannelStats::default(); header.freq_dim];
    let mut heat_acc = vec![ChannelStats::default(); header.heat_dim];

    for s in samples {
        let mut ci = 0;
        for (ch, &v) in s.xs.iter().enumerate() {
            if ch == config.scenario_channel {
                continue;
            }
            s_acc[ci].push(v);
            ci += 1;
        }
        for row in s.xh.chunks(header.h_dim) {
            if row.iter().any(|&v| v != 0.0) {
                for (d, &v) in row.iter().enumerate() {
                    h_acc[d].push(v);
                }
            }
        }
        for row in s.xlink.chunks(header.link_dim) {
            let mut ci = 0;
            for (ch, &v) in row.iter().enumerate() {
                if ch == config.maneuver_channel {
                    continue;
                }
                link_acc[ci].push(v);
                ci += 1;
            }
        }
        for entry in &s.freq {
            for ev in &entry.events {
                if ev.iter().any(|&v| v != 0.0) {
                    for (d, &v) in ev.iter().enumerate() {
                        freq_acc[d].push(v);
                    }
                }
            }
        }
        for row in s.xheat.chunks(header.heat_dim) {
            for (d, &v) in row.iter().enumerate() {
                heat_acc[d].push(v);
            }
        }
    }
    let finish = |acc: &[ChannelStats]| -> (Vec<f64>, Vec<f64>) {
        let mut means = Vec::with_capacity(acc.len());
        let mut stds = Vec::with_capacity(acc.len());
        for a in acc {
            let (m, s) = a.finish();
            means.push(m);
            stds.push(s);
        }
        (means, stds)
    };
    let (s_mean, s_std) = finish(&s_acc);
    let (h_mean, h_std) = finish(&h_acc);
    let (link_mean, link_std) = finish(&link_acc);
    let (freq_mean, freq_std) = finish(&freq_acc);
    let (heat_mean, heat_std) = finish(&heat_acc);
    NormStats {
        s_mean,
        s_std,
        h_mean,
        h_std,
        link_mean,
        link_std,
        freq_mean,
        freq_std,
        heat_mean,
        heat_std,
    }
}
