//! Reverse-mode gradients for the cost model. Consumes the caches produced
//! by the forward pass and accumulates parameter gradients; feature inputs
//! and link-memory bits are data, so their gradients are discarded.

use ndarray::Array1;

use crate::search::COST_EPSILON;

use super::forward::{ForwardCache, LinkBaseCache};
use super::params::elu_grad;
use super::{Mode, ModelError, ModelParams};

/// Parameter-shaped gradient accumulator.
pub struct GradAccum {
    pub g: ModelParams,
}

impl GradAccum {
    pub fn new(params: &ModelParams) -> GradAccum {
        GradAccum {
            g: params.zeros_like(),
        }
    }
}

fn outer_add(acc: &mut ndarray::Array2<f64>, g: &Array1<f64>, x: &Array1<f64>) {
    for (r, &gr) in g.iter().enumerate() {
        let mut row = acc.row_mut(r);
        for (c, &xc) in x.iter().enumerate() {
            row[c] += gr * xc;
        }
    }
}

/// Softmax gradient: returns g wrt logits given outputs `s` and output
/// gradient `g_s`.
fn softmax_backward(s: &[f64], g_s: &[f64]) -> Vec<f64> {
    let dot: f64 = s.iter().zip(g_s).map(|(a, b)| a * b).sum();
    s.iter().zip(g_s).map(|(si, gi)| si * (gi - dot)).collect()
}

fn base_backward(
    params: &ModelParams,
    cache: &LinkBaseCache,
    accum: &mut GradAccum,
    g_base: &Array1<f64>,
) {
    let c = &params.config;
    let g_concat = params
        .link_mlp
        .backward(&cache.mlp, &mut accum.g.link_mlp, g_base);

    let me = c.maneuver_embed;
    let freq_off = me + c.link_cont_dim() + c.heat_dim;
    {
        let mut row = accum.g.maneuver_table.row_mut(cache.man_idx);
        for d in 0..me {
            row[d] += g_concat[d];
        }
    }
    // masked mean pooling over the encoded events
    let m = cache.freq_in.len() as f64;
    for (ev_in, pre) in cache.freq_in.iter().zip(&cache.freq_pre) {
        let mut g_pre = Array1::zeros(c.freq_encoded);
        for d in 0..c.freq_encoded {
            g_pre[d] = g_concat[freq_off + d] / m * elu_grad(pre[d]);
        }
        outer_add(&mut accum.g.freq_w, &g_pre, ev_in);
        accum.g.freq_b += &g_pre;
    }
}

/// Accumulates parameter gradients for one forward evaluation given the
/// loss gradient at each link cost (ordered as `cache.link_ids`).
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    g_costs: &[f64],
    accum: &mut GradAccum,
) -> Result<(), ModelError> {
    if g_costs.len() != cache.link_ids.len() {
        return Err(ModelError::DimMismatch {
            what: "cost gradients",
            expected: cache.link_ids.len(),
            actual: g_costs.len(),
        });
    }
    let c = &params.config;
    let link_out = c.link_out_dim();
    let n_subset = cache.link_ids.len();
    let mut g_bases: Vec<Array1<f64>> =
        vec![Array1::zeros(link_out); n_subset + cache.closure_ids.len()];
    let mut g_xu: Array1<f64> = Array1::zeros(c.user_dim);
    let mut g_gate = vec![0.0; c.scn_heads];

    let base_at = |slot: usize| -> &Array1<f64> {
        if slot < n_subset {
            &cache.bases[slot].base
        } else {
            &cache.closure_bases[slot - n_subset].base
        }
    };

    for (i, &g_c) in g_costs.iter().enumerate() {
        if g_c == 0.0 {
            continue;
        }
        let h = &cache.heads[i];
        // cost = max(ε, relu(combined)): gradient passes only above the
        // floor
        if h.combined <= COST_EPSILON {
            continue;
        }
        let g_comb = g_c;
        let mut g_head_in = Array1::zeros(c.user_dim + link_out);
        for (s, head) in params.heads.iter().enumerate() {
            g_gate[s] += g_comb * h.head_outs[s];
            let g_y = g_comb * cache.gate[s];
            let g_in = head.backward(
                &h.head_caches[s],
                &mut accum.g.heads[s],
                &Array1::from_vec(vec![g_y]),
            );
            g_head_in += &g_in;
        }
        for d in 0..c.user_dim {
            g_xu[d] += g_head_in[d];
        }
        let g_xl = g_head_in.slice(ndarray::s![c.user_dim..]).to_owned();

        match (cache.mode, cache.attn.as_ref()) {
            (Mode::OfflineAttention, Some(attn)) => {
                let a = &attn[i];
                g_bases[i] += &g_xl; // residual term
                if !a.nbr_slots.is_empty() {
                    let mut g_alpha = Vec::with_capacity(a.nbr_slots.len());
                    for (n, &slot) in a.nbr_slots.iter().enumerate() {
                        // message path: xl += alpha_n * (V b_j)
                        g_alpha.push(g_xl.dot(&a.messages[n]));
                        let g_msg = a.alpha[n] * &g_xl;
                        outer_add(&mut accum.g.nbr_val, &g_msg, base_at(slot));
                        g_bases[slot] += &params.nbr_val.t().dot(&g_msg);
                    }
                    let g_scores = softmax_backward(&a.alpha, &g_alpha);
                    for (n, &slot) in a.nbr_slots.iter().enumerate() {
                        let t = &a.t[n];
                        for d in 0..t.len() {
                            accum.g.nbr_v[d] += g_scores[n] * t[d];
                        }
                        let mut g_pre = Array1::zeros(t.len());
                        for d in 0..t.len() {
                            g_pre[d] = g_scores[n] * params.nbr_v[d] * (1.0 - t[d] * t[d]);
                        }
                        let mut pair = Vec::with_capacity(2 * link_out);
                        pair.extend(cache.bases[i].base.iter());
                        pair.extend(base_at(slot).iter());
                        let pair = Array1::from_vec(pair);
                        outer_add(&mut accum.g.nbr_w, &g_pre, &pair);
                        accum.g.nbr_b += &g_pre;
                        let g_pair = params.nbr_w.t().dot(&g_pre);
                        for d in 0..link_out {
                            g_bases[i][d] += g_pair[d];
                            g_bases[slot][d] += g_pair[link_out + d];
                        }
                    }
                }
            }
            _ => {
                g_bases[i] += &g_xl;
            }
        }
    }

    for (slot, g_base) in g_bases.iter().enumerate() {
        if g_base.iter().all(|&v| v == 0.0) {
            continue;
        }
        let base = if slot < n_subset {
            &cache.bases[slot]
        } else {
            &cache.closure_bases[slot - n_subset]
        };
        base_backward(params, base, accum, g_base);
    }

    // gate softmax
    let g_logits = softmax_backward(cache.gate.as_slice().unwrap(), &g_gate);
    let g_logits = Array1::from_vec(g_logits);
    outer_add(&mut accum.g.gate_w, &g_logits, &cache.user.xu);
    accum.g.gate_b += &g_logits;
    if cache.user_ablated {
        // the preference module is detached; nothing flows into it
        return Ok(());
    }
    g_xu += &params.gate_w.t().dot(&g_logits);

    // user preference module
    let u = &cache.user;
    let mut g_user_pre = Array1::zeros(c.user_dim);
    for d in 0..c.user_dim {
        g_user_pre[d] = g_xu[d] * elu_grad(u.user_pre[d]);
    }
    outer_add(&mut accum.g.user_w, &g_user_pre, &u.u_in);
    accum.g.user_b += &g_user_pre;
    let g_u_in = params.user_w.t().dot(&g_user_pre);

    let mut g_pooled = Array1::zeros(c.h_dim);
    for d in 0..c.h_dim {
        g_pooled[d] = g_u_in[d];
    }
    let mut g_s_full: Array1<f64> = Array1::zeros(c.s_proc_dim());
    for d in 0..c.s_proc_dim() {
        g_s_full[d] = g_u_in[c.h_dim + d];
    }

    if !u.h_rows.is_empty() {
        let mut g_proj: Array1<f64> = Array1::zeros(c.h_dim);
        let g_alpha: Vec<f64> = u.h_rows.iter().map(|h| g_pooled.dot(h)).collect();
        let g_scores = softmax_backward(&u.alpha, &g_alpha);
        for (j, h) in u.h_rows.iter().enumerate() {
            let t = &u.t[j];
            for d in 0..t.len() {
                accum.g.attn_v[d] += g_scores[j] * t[d];
            }
            let mut g_pre = Array1::zeros(t.len());
            for d in 0..t.len() {
                g_pre[d] = g_scores[j] * params.attn_v[d] * (1.0 - t[d] * t[d]);
            }
            outer_add(&mut accum.g.attn_w, &g_pre, &u.z[j]);
            accum.g.attn_b += &g_pre;
            let g_z = params.attn_w.t().dot(&g_pre);
            // z = [h ⊕ s_full ⊕ h ⊙ proj]
            for d in 0..c.s_proc_dim() {
                g_s_full[d] += g_z[c.h_dim + d];
            }
            for d in 0..c.h_dim {
                g_proj[d] += g_z[c.h_dim + c.s_proc_dim() + d] * h[d];
            }
        }
        outer_add(&mut accum.g.proj_w, &g_proj, &u.s_full);
        g_s_full += &params.proj_w.t().dot(&g_proj);
    }

    {
        let mut row = accum.g.scenario_table.row_mut(u.scen_idx);
        for d in 0..c.scenario_embed {
            row[d] += g_s_full[d];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DualGraph, LinkId};
    use crate::model::forward::{compute_user, forward_links, LinkArrays, RequestView};
    use crate::model::{LinkMemory, Mode, ModelConfig, NormStats};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        graph: DualGraph,
        xs: Vec<f64>,
        xh: Vec<f64>,
        xlink: Vec<f64>,
        xfreq: Vec<f64>,
        xheat: Vec<f64>,
        lm: LinkMemory,
    }

    fn fixture(config: &ModelConfig, seed: u64, empty_history: bool) -> Fixture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = DualGraph::from_adjacency(
            &[100.0; 5],
            &[
                (LinkId(0), LinkId(1)),
                (LinkId(1), LinkId(2)),
                (LinkId(1), LinkId(3)),
                (LinkId(3), LinkId(4)),
                (LinkId(2), LinkId(4)),
            ],
        )
        .unwrap();
        let n = graph.num_links();
        let mut xs: Vec<f64> = (0..config.s_dim)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        xs[config.scenario_channel] = 1.0;
        let mut xh = vec![0.0; config.h_events * config.h_dim];
        if !empty_history {
            for j in 0..3 {
                for d in 0..config.h_dim {
                    xh[j * config.h_dim + d] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let mut xlink = vec![0.0; n * config.link_dim];
        for i in 0..n {
            for d in 0..config.link_dim {
                xlink[i * config.link_dim + d] = if d == config.maneuver_channel {
                    (i % 4) as f64
                } else {
                    rng.gen_range(-1.0..1.0)
                };
            }
        }
        let mut xfreq = vec![0.0; n * config.freq_events * config.freq_dim];
        // half the links get familiarity events
        for i in 0..n / 2 {
            for e in 0..2 {
                for d in 0..config.freq_dim {
                    xfreq[(i * config.freq_events + e) * config.freq_dim + d] =
                        rng.gen_range(0.1..1.0);
                }
            }
        }
        let xheat: Vec<f64> = (0..n * config.heat_dim)
            .map(|_| rng.gen_range(0.0..3.0))
            .collect();
        let mut lm = LinkMemory::new(n, config.k_iters);
        lm.set_iteration(&[LinkId(0), LinkId(1), LinkId(2)], 1).unwrap();
        Fixture {
            graph,
            xs,
            xh,
            xlink,
            xfreq,
            xheat,
            lm,
        }
    }

    fn weighted_cost_loss(
        params: &crate::model::ModelParams,
        stats: &NormStats,
        mode: Mode,
        fx: &Fixture,
        weights: &[f64],
    ) -> f64 {
        let request = RequestView {
            xs: &fx.xs,
            xh: &fx.xh,
        };
        let feats = LinkArrays {
            n: fx.graph.num_links(),
            xlink: &fx.xlink,
            xfreq: &fx.xfreq,
            xheat: &fx.xheat,
        };
        let (ctx, user) = compute_user(params, stats, &request).unwrap();
        let links: Vec<LinkId> = (0..fx.graph.num_links() as u32).map(LinkId).collect();
        let (costs, _) = forward_links(
            params, stats, mode, &fx.graph, &feats, &fx.lm, &ctx, &user, &links,
        )
        .unwrap();
        costs.iter().zip(weights).map(|(c, w)| c * w).sum()
    }

    fn check_mode(mode: Mode, empty_history: bool) {
        let config = ModelConfig::desk();
        let params = crate::model::ModelParams::init(&config, 11).unwrap();
        let stats = NormStats::identity(&config);
        let fx = fixture(&config, 22, empty_history);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let weights: Vec<f64> = (0..fx.graph.num_links())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();

        // analytic
        let request = RequestView {
            xs: &fx.xs,
            xh: &fx.xh,
        };
        let feats = LinkArrays {
            n: fx.graph.num_links(),
            xlink: &fx.xlink,
            xfreq: &fx.xfreq,
            xheat: &fx.xheat,
        };
        let (ctx, user) = compute_user(&params, &stats, &request).unwrap();
        let links: Vec<LinkId> = (0..fx.graph.num_links() as u32).map(LinkId).collect();
        let (_, cache) = forward_links(
            &params, &stats, mode, &fx.graph, &feats, &fx.lm, &ctx, &user, &links,
        )
        .unwrap();
        let mut accum = GradAccum::new(&params);
        backward(&params, &cache, &weights, &mut accum).unwrap();
        let analytic = accum.g.flatten();

        // central differences over sampled coordinates
        let flat = params.flatten();
        let h = 1e-5;
        let mut worst = 0.0f64;
        let stride = (flat.len() / 160).max(1);
        for idx in (0..flat.len()).step_by(stride) {
            let mut plus = flat.clone();
            plus[idx] += h;
            let mut minus = flat.clone();
            minus[idx] -= h;
            let pp = crate::model::ModelParams::from_flat(&config, &plus).unwrap();
            let pm = crate::model::ModelParams::from_flat(&config, &minus).unwrap();
            let fd = (weighted_cost_loss(&pp, &stats, mode, &fx, &weights)
                - weighted_cost_loss(&pm, &stats, mode, &fx, &weights))
                / (2.0 * h);
            let a = analytic[idx];
            let rel = (a - fd).abs() / (a.abs() + fd.abs()).max(1e-6);
            worst = worst.max(rel);
            assert!(
                rel < 1e-4,
                "coordinate {idx}: analytic {a} vs fd {fd} (rel {rel})"
            );
        }
        assert!(worst.is_finite());
    }

    #[test]
    fn deployment_gradients_match_finite_differences() {
        check_mode(Mode::Deployment, false);
    }

    #[test]
    fn offline_attention_gradients_match_finite_differences() {
        check_mode(Mode::OfflineAttention, false);
    }

    #[test]
    fn empty_history_gradients_match_finite_differences() {
        check_mode(Mode::Deployment, true);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_parameter_gradient() {
        let config = ModelConfig::desk();
        let params = crate::model::ModelParams::init(&config, 4).unwrap();
        let stats = NormStats::identity(&config);
        let fx = fixture(&config, 5, false);
        let request = RequestView {
            xs: &fx.xs,
            xh: &fx.xh,
        };
        let feats = LinkArrays {
            n: fx.graph.num_links(),
            xlink: &fx.xlink,
            xfreq: &fx.xfreq,
            xheat: &fx.xheat,
        };
        let (ctx, user) = compute_user(&params, &stats, &request).unwrap();
        let links: Vec<LinkId> = (0..fx.graph.num_links() as u32).map(LinkId).collect();
        let (_, cache) = forward_links(
            &params,
            &stats,
            Mode::Deployment,
            &fx.graph,
            &feats,
            &fx.lm,
            &ctx,
            &user,
            &links,
        )
        .unwrap();
        let mut accum = GradAccum::new(&params);
        backward(&params, &cache, &vec![0.0; links.len()], &mut accum).unwrap();
        assert!(accum.g.flatten().iter().all(|&v| v == 0.0));
    }
}
