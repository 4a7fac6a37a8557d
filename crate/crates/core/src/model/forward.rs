//! Forward evaluation with caches for reverse-mode differentiation.

use ndarray::Array1;

use crate::graph::{Direction, DualGraph, LinkId};
use crate::model::preprocess::{standardize, standardize_slice};
use crate::search::{CostVector, COST_EPSILON};

use super::params::elu;
use super::{LinkMemory, MlpCache, Mode, ModelError, ModelParams, NormStats};

/// Raw request-level features. All-zero history rows count as missing.
#[derive(Debug, Clone, Copy)]
pub struct RequestView<'a> {
    /// `s_dim` values; the scenario channel holds an integer code.
    pub xs: &'a [f64],
    /// `h_events × h_dim`, row-major.
    pub xh: &'a [f64],
}

/// Raw per-link feature arrays for `n` links.
#[derive(Debug, Clone, Copy)]
pub struct LinkArrays<'a> {
    pub n: usize,
    /// `n × link_dim`; the maneuver channel holds an integer code.
    pub xlink: &'a [f64],
    /// `n × freq_events × freq_dim`; all-zero events count as missing.
    pub xfreq: &'a [f64],
    /// `n × heat_dim`.
    pub xheat: &'a [f64],
}

impl<'a> LinkArrays<'a> {
    pub fn check_dims(&self, p: &ModelParams) -> Result<(), ModelError> {
        let c = &p.config;
        let checks = [
            ("x^link", self.xlink.len(), self.n * c.link_dim),
            (
                "x^freq",
                self.xfreq.len(),
                self.n * c.freq_events * c.freq_dim,
            ),
            ("x^heat", self.xheat.len(), self.n * c.heat_dim),
        ];
        for (what, actual, expected) in checks {
            if actual != expected {
                return Err(ModelError::DimMismatch {
                    what: match what {
                        "x^link" => "x^link",
                        "x^freq" => "x^freq",
                        _ => "x^heat",
                    },
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }

    fn xlink_row(&self, i: usize, dim: usize) -> &[f64] {
        &self.xlink[i * dim..(i + 1) * dim]
    }

    fn xfreq_row(&self, i: usize, events: usize, dim: usize) -> &[f64] {
        &self.xfreq[i * events * dim..(i + 1) * events * dim]
    }

    fn xheat_row(&self, i: usize, dim: usize) -> &[f64] {
        &self.xheat[i * dim..(i + 1) * dim]
    }
}

/// Request-level quantities shared by every link cost: the preference
/// vector and the scenario gate.
#[derive(Debug, Clone)]
pub struct UserContext {
    pub xu: Array1<f64>,
    pub gate: Array1<f64>,
    /// Set when the user-preference module is ablated; backward then leaves
    /// that module untouched.
    pub ablated: bool,
}

/// Context with the user-preference module switched off: zero preference
/// vector, gate driven by its bias alone.
pub fn ablated_user_context(params: &ModelParams) -> (UserContext, UserCache) {
    let c = &params.config;
    let mut gate_scores: Vec<f64> = params.gate_b.to_vec();
    softmax_inplace(&mut gate_scores);
    let ctx = UserContext {
        xu: Array1::zeros(c.user_dim),
        gate: Array1::from_vec(gate_scores),
        ablated: true,
    };
    let cache = UserCache {
        scen_idx: c.scenario_vocab,
        s_full: Array1::zeros(c.s_proc_dim()),
        proj: Array1::zeros(c.h_dim),
        present: Vec::new(),
        h_rows: Vec::new(),
        z: Vec::new(),
        t: Vec::new(),
        alpha: Vec::new(),
        pooled: Array1::zeros(c.h_dim),
        empty_flag: 1.0,
        u_in: Array1::zeros(c.h_dim + c.s_proc_dim() + 1),
        user_pre: Array1::zeros(c.user_dim),
        xu: Array1::zeros(c.user_dim),
    };
    (ctx, cache)
}

#[derive(Debug, Clone)]
pub struct UserCache {
    pub scen_idx: usize,
    pub s_full: Array1<f64>,
    pub proj: Array1<f64>,
    pub present: Vec<usize>,
    pub h_rows: Vec<Array1<f64>>,
    pub z: Vec<Array1<f64>>,
    pub t: Vec<Array1<f64>>,
    pub alpha: Vec<f64>,
    pub pooled: Array1<f64>,
    pub empty_flag: f64,
    pub u_in: Array1<f64>,
    pub user_pre: Array1<f64>,
    pub xu: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LinkBaseCache {
    pub man_idx: usize,
    pub freq_in: Vec<Array1<f64>>,
    pub freq_pre: Vec<Array1<f64>>,
    pub mlp: MlpCache,
    pub base: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct AttnLinkCache {
    /// Slot indices into the combined `[subset ⊕ closure]` base table.
    pub nbr_slots: Vec<usize>,
    pub t: Vec<Array1<f64>>,
    pub alpha: Vec<f64>,
    pub messages: Vec<Array1<f64>>,
}

#[derive(Debug, Clone)]
pub struct LinkCostCache {
    pub xl: Array1<f64>,
    pub head_in: Array1<f64>,
    pub head_caches: Vec<MlpCache>,
    pub head_outs: Vec<f64>,
    pub combined: f64,
    pub cost: f64,
}

/// Everything the backward pass needs for one forward evaluation over a
/// link subset.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub mode: Mode,
    pub user: UserCache,
    pub user_ablated: bool,
    pub gate: Array1<f64>,
    pub link_ids: Vec<LinkId>,
    pub bases: Vec<LinkBaseCache>,
    pub closure_ids: Vec<LinkId>,
    pub closure_bases: Vec<LinkBaseCache>,
    pub attn: Option<Vec<AttnLinkCache>>,
    pub heads: Vec<LinkCostCache>,
}

fn softmax_inplace(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

fn categorical_index(value: f64, vocab: usize) -> usize {
    let code = value.round();
    if code >= 0.0 && (code as usize) < vocab && code.fract() == 0.0 {
        code as usize
    } else {
        vocab // UNK row
    }
}

/// User preference capture: attention pooling of the (standardized)
/// history rows conditioned on the processed context vector.
pub fn compute_user(
    params: &ModelParams,
    stats: &NormStats,
    request: &RequestView<'_>,
) -> Result<(UserContext, UserCache), ModelError> {
    let c = &params.config;
    if request.xs.len() != c.s_dim {
        return Err(ModelError::DimMismatch {
            what: "x^s",
            expected: c.s_dim,
            actual: request.xs.len(),
        });
    }
    if request.xh.len() != c.h_events * c.h_dim {
        return Err(ModelError::DimMismatch {
            what: "x^h",
            expected: c.h_events * c.h_dim,
            actual: request.xh.len(),
        });
    }

    let scen_idx = categorical_index(request.xs[c.scenario_channel], c.scenario_vocab);
    let mut s_full = Vec::with_capacity(c.s_proc_dim());
    s_full.extend(params.scenario_table.row(scen_idx).iter());
    let mut cont_idx = 0usize;
    for (ch, &v) in request.xs.iter().enumerate() {
        if ch == c.scenario_channel {
            continue;
        }
        s_full.push(standardize(v, stats.s_mean[cont_idx], stats.s_std[cont_idx]));
        cont_idx += 1;
    }
    let s_full = Array1::from_vec(s_full);
    let proj = params.proj_w.dot(&s_full);

    let mut present = Vec::new();
    let mut h_rows = Vec::new();
    for j in 0..c.h_events {
        let row = &request.xh[j * c.h_dim..(j + 1) * c.h_dim];
        if row.iter().any(|&v| v != 0.0) {
            present.push(j);
            let std_row: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(d, &v)| standardize(v, stats.h_mean[d], stats.h_std[d]))
                .collect();
            h_rows.push(Array1::from_vec(std_row));
        }
    }

    let mut z = Vec::with_capacity(h_rows.len());
    let mut t = Vec::with_capacity(h_rows.len());
    let mut scores = Vec::with_capacity(h_rows.len());
    for h in &h_rows {
        let mut zj = Vec::with_capacity(2 * c.h_dim + c.s_proc_dim());
        zj.extend(h.iter());
        zj.extend(s_full.iter());
        zj.extend(h.iter().zip(proj.iter()).map(|(a, b)| a * b));
        let zj = Array1::from_vec(zj);
        let mut tj = params.attn_w.dot(&zj) + &params.attn_b;
        tj.mapv_inplace(f64::tanh);
        scores.push(params.attn_v.dot(&tj));
        z.push(zj);
        t.push(tj);
    }
    let mut alpha = scores;
    let empty = alpha.is_empty();
    if !empty {
        softmax_inplace(&mut alpha);
    }
    let mut pooled = Array1::zeros(c.h_dim);
    for (a, h) in alpha.iter().zip(&h_rows) {
        pooled.scaled_add(*a, h);
    }
    let empty_flag = if empty { 1.0 } else { 0.0 };

    let mut u_in = Vec::with_capacity(c.h_dim + c.s_proc_dim() + 1);
    u_in.extend(pooled.iter());
    u_in.extend(s_full.iter());
    u_in.push(empty_flag);
    let u_in = Array1::from_vec(u_in);
    let user_pre = params.user_w.dot(&u_in) + &params.user_b;
    let xu = user_pre.mapv(elu);

    let mut gate_scores: Vec<f64> = (params.gate_w.dot(&xu) + &params.gate_b).to_vec();
    softmax_inplace(&mut gate_scores);
    let gate = Array1::from_vec(gate_scores);

    let cache = UserCache {
        scen_idx,
        s_full,
        proj,
        present,
        h_rows,
        z,
        t,
        alpha,
        pooled,
        empty_flag,
        u_in,
        user_pre,
        xu: xu.clone(),
    };
    Ok((UserContext { xu, gate, ablated: false }, cache))
}

pub(crate) fn link_base(
    params: &ModelParams,
    stats: &NormStats,
    feats: &LinkArrays<'_>,
    lm: &LinkMemory,
    link: LinkId,
) -> LinkBaseCache {
    let c = &params.config;
    let i = link.idx();
    let raw_link = feats.xlink_row(i, c.link_dim);
    let man_idx = categorical_index(raw_link[c.maneuver_channel], crate::graph::Maneuver::VOCAB);

    let mut concat = Vec::with_capacity(c.link_concat_dim());
    concat.extend(params.maneuver_table.row(man_idx).iter());
    let mut cont_idx = 0usize;
    for (ch, &v) in raw_link.iter().enumerate() {
        if ch == c.maneuver_channel {
            continue;
        }
        concat.push(standardize(
            v,
            stats.link_mean[cont_idx],
            stats.link_std[cont_idx],
        ));
        cont_idx += 1;
    }
    let mut heat_std = Vec::new();
    standardize_slice(
        feats.xheat_row(i, c.heat_dim),
        &stats.heat_mean,
        &stats.heat_std,
        &mut heat_std,
    );
    concat.extend_from_slice(&heat_std);

    // familiarity-frequency encoder: shared single layer per event, masked
    // mean pooling; with no events present the encoder's zero-input output
    // is used so the channel stays defined
    let raw_freq = feats.xfreq_row(i, c.freq_events, c.freq_dim);
    let mut freq_in = Vec::new();
    for e in 0..c.freq_events {
        let ev = &raw_freq[e * c.freq_dim..(e + 1) * c.freq_dim];
        if ev.iter().any(|&v| v != 0.0) {
            let std_ev: Vec<f64> = ev
                .iter()
                .enumerate()
                .map(|(d, &v)| standardize(v, stats.freq_mean[d], stats.freq_std[d]))
                .collect();
            freq_in.push(Array1::from_vec(std_ev));
        }
    }
    if freq_in.is_empty() {
        freq_in.push(Array1::zeros(c.freq_dim));
    }
    let mut freq_pre = Vec::with_capacity(freq_in.len());
    let mut pooled: Array1<f64> = Array1::zeros(c.freq_encoded);
    for ev in &freq_in {
        let pre = params.freq_w.dot(ev) + &params.freq_b;
        pooled += &pre.mapv(elu);
        freq_pre.push(pre);
    }
    pooled.mapv_inplace(|v| v / freq_in.len() as f64);
    concat.extend(pooled.iter());

    for &bit in lm.row(link) {
        concat.push(bit as f64);
    }

    let concat = Array1::from_vec(concat);
    let (base, mlp) = params.link_mlp.forward(&concat);
    LinkBaseCache {
        man_idx,
        freq_in,
        freq_pre,
        mlp,
        base,
    }
}

pub(crate) fn scenario_cost(
    params: &ModelParams,
    ctx: &UserContext,
    xl: Array1<f64>,
) -> LinkCostCache {
    let c = &params.config;
    let mut head_in = Vec::with_capacity(c.user_dim + c.link_out_dim());
    head_in.extend(ctx.xu.iter());
    head_in.extend(xl.iter());
    let head_in = Array1::from_vec(head_in);
    let mut head_caches = Vec::with_capacity(c.scn_heads);
    let mut head_outs = Vec::with_capacity(c.scn_heads);
    let mut combined = 0.0;
    for (s, head) in params.heads.iter().enumerate() {
        let (out, cache) = head.forward(&head_in);
        let y = out[0];
        combined += ctx.gate[s] * y;
        head_caches.push(cache);
        head_outs.push(y);
    }
    let cost = combined.max(0.0).max(COST_EPSILON);
    LinkCostCache {
        xl,
        head_in,
        head_caches,
        head_outs,
        combined,
        cost,
    }
}

/// Sorted union of a link's dual in/out neighbors, excluding itself.
fn neighbor_ids(graph: &DualGraph, link: LinkId) -> Vec<LinkId> {
    let mut ids: Vec<LinkId> = graph
        .arcs(link, Direction::Forward)
        .iter()
        .chain(graph.arcs(link, Direction::Backward))
        .map(|a| a.to)
        .filter(|&x| x != link)
        .collect();
    ids.sort();
    ids.dedup();
    ids
}

/// Costs for `links` in one forward sweep. In offline mode base
/// representations are additionally computed for dual neighbors of the
/// subset so the attention layer sees its full context; in deployment mode
/// each link is evaluated independently.
pub fn forward_links(
    params: &ModelParams,
    stats: &NormStats,
    mode: Mode,
    graph: &DualGraph,
    feats: &LinkArrays<'_>,
    lm: &LinkMemory,
    ctx: &UserContext,
    user: &UserCache,
    links: &[LinkId],
) -> Result<(Vec<f64>, ForwardCache), ModelError> {
    feats.check_dims(params)?;
    stats.check_dims(&params.config)?;
    if lm.k_iters() != params.config.k_iters {
        return Err(ModelError::DimMismatch {
            what: "link memory width",
            expected: params.config.k_iters,
            actual: lm.k_iters(),
        });
    }
    if mode == Mode::OfflineAttention && !params.config.neighbor_attention {
        return Err(ModelError::NoAttentionParams);
    }

    let bases: Vec<LinkBaseCache> = links
        .iter()
        .map(|&l| link_base(params, stats, feats, lm, l))
        .collect();

    let (closure_ids, closure_bases, attn, xls) = if mode == Mode::OfflineAttention {
        let mut slot_of = std::collections::HashMap::new();
        for (i, &l) in links.iter().enumerate() {
            slot_of.insert(l, i);
        }
        let mut closure_ids: Vec<LinkId> = Vec::new();
        let nbr_lists: Vec<Vec<LinkId>> =
            links.iter().map(|&l| neighbor_ids(graph, l)).collect();
        for nbrs in &nbr_lists {
            for &nb in nbrs {
                if !slot_of.contains_key(&nb) {
                    slot_of.insert(nb, links.len() + closure_ids.len());
                    closure_ids.push(nb);
                }
            }
        }
        let closure_bases: Vec<LinkBaseCache> = closure_ids
            .iter()
            .map(|&l| link_base(params, stats, feats, lm, l))
            .collect();
        let base_at = |slot: usize| -> &Array1<f64> {
            if slot < links.len() {
                &bases[slot].base
            } else {
                &closure_bases[slot - links.len()].base
            }
        };

        let mut attn_caches = Vec::with_capacity(links.len());
        let mut xls = Vec::with_capacity(links.len());
        for (i, nbrs) in nbr_lists.iter().enumerate() {
            let bi = &bases[i].base;
            if nbrs.is_empty() {
                attn_caches.push(AttnLinkCache {
                    nbr_slots: Vec::new(),
                    t: Vec::new(),
                    alpha: Vec::new(),
                    messages: Vec::new(),
                });
                xls.push(bi.clone());
                continue;
            }
            let mut t_list = Vec::with_capacity(nbrs.len());
            let mut scores = Vec::with_capacity(nbrs.len());
            let mut slots = Vec::with_capacity(nbrs.len());
            for &nb in nbrs {
                let slot = slot_of[&nb];
                let bj = base_at(slot);
                let mut pair = Vec::with_capacity(2 * bi.len());
                pair.extend(bi.iter());
                pair.extend(bj.iter());
                let pair = Array1::from_vec(pair);
                let mut tij = params.nbr_w.dot(&pair) + &params.nbr_b;
                tij.mapv_inplace(f64::tanh);
                scores.push(params.nbr_v.dot(&tij));
                t_list.push(tij);
                slots.push(slot);
            }
            softmax_inplace(&mut scores);
            let mut xl = bi.clone();
            let mut messages = Vec::with_capacity(nbrs.len());
            for (a, &slot) in scores.iter().zip(&slots) {
                let msg = params.nbr_val.dot(base_at(slot));
                xl.scaled_add(*a, &msg);
                messages.push(msg);
            }
            attn_caches.push(AttnLinkCache {
                nbr_slots: slots,
                t: t_list,
                alpha: scores,
                messages,
            });
            xls.push(xl);
        }
        (closure_ids, closure_bases, Some(attn_caches), xls)
    } else {
        let xls = bases.iter().map(|b| b.base.clone()).collect();
        (Vec::new(), Vec::new(), None, xls)
    };

    let heads: Vec<LinkCostCache> = xls
        .into_iter()
        .map(|xl| scenario_cost(params, ctx, xl))
        .collect();
    let costs: Vec<f64> = heads.iter().map(|h| h.cost).collect();

    Ok((
        costs,
        ForwardCache {
            mode,
            user: user.clone(),
            user_ablated: ctx.ablated,
            gate: ctx.gate.clone(),
            link_ids: links.to_vec(),
            bases,
            closure_ids,
            closure_bases,
            attn,
            heads,
        },
    ))
}

/// Single-link deployment-mode cost. The cost depends only on the shared
/// user context and this link's own features and memory bits.
pub fn compute_link_cost(
    params: &ModelParams,
    stats: &NormStats,
    feats: &LinkArrays<'_>,
    lm: &LinkMemory,
    ctx: &UserContext,
    link: LinkId,
) -> f64 {
    let base = link_base(params, stats, feats, lm, link);
    scenario_cost(params, ctx, base.base).cost
}

/// Full per-link cost vector for a request.
pub fn forward_all(
    params: &ModelParams,
    stats: &NormStats,
    mode: Mode,
    graph: &DualGraph,
    feats: &LinkArrays<'_>,
    lm: &LinkMemory,
    request: &RequestView<'_>,
) -> Result<(CostVector, ForwardCache), ModelError> {
    let (ctx, user) = compute_user(params, stats, request)?;
    let links: Vec<LinkId> = (0..graph.num_links() as u32).map(LinkId).collect();
    let (costs, cache) =
        forward_links(params, stats, mode, graph, feats, lm, &ctx, &user, &links)?;
    Ok((
        CostVector::new(costs).expect("costs are floored positive"),
        cache,
    ))
}
