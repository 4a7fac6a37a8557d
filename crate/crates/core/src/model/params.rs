//! Model parameters: embedding tables, attention weights, perceptrons, and
//! the flattened view used by the optimizer and by gradient checks.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelError};

/// Multi-layer perceptron; ELU after every layer except (optionally) the
/// last.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub ws: Vec<Array2<f64>>,
    pub bs: Vec<Array1<f64>>,
    pub final_linear: bool,
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

pub fn elu_grad(pre: f64) -> f64 {
    if pre > 0.0 {
        1.0
    } else {
        pre.exp()
    }
}

/// Per-layer inputs and pre-activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub inputs: Vec<Array1<f64>>,
    pub pre: Vec<Array1<f64>>,
}

impl Mlp {
    fn init(rng: &mut ChaCha8Rng, sizes: &[usize], final_linear: bool) -> Mlp {
        let mut ws = Vec::new();
        let mut bs = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = (6.0 / (fan_in + fan_out) as f64).sqrt();
            ws.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.gen_range(-scale..scale)
            }));
            bs.push(Array1::zeros(fan_out));
        }
        Mlp {
            ws,
            bs,
            final_linear,
        }
    }

    pub fn forward(&self, x: &Array1<f64>) -> (Array1<f64>, MlpCache) {
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.ws.len()),
            pre: Vec::with_capacity(self.ws.len()),
        };
        let mut cur = x.clone();
        for (i, (w, b)) in self.ws.iter().zip(&self.bs).enumerate() {
            cache.inputs.push(cur.clone());
            let mut pre = w.dot(&cur) + b;
            cache.pre.push(pre.clone());
            let last = i + 1 == self.ws.len();
            if !(last && self.final_linear) {
                pre.mapv_inplace(elu);
            }
            cur = pre;
        }
        (cur, cache)
    }

    /// Accumulates parameter gradients into `grads` and returns the input
    /// gradient.
    pub fn backward(
        &self,
        cache: &MlpCache,
        grads: &mut Mlp,
        g_out: &Array1<f64>,
    ) -> Array1<f64> {
        let mut g = g_out.clone();
        for i in (0..self.ws.len()).rev() {
            let last = i + 1 == self.ws.len();
            if !(last && self.final_linear) {
                let pre = &cache.pre[i];
                for (gi, &p) in g.iter_mut().zip(pre.iter()) {
                    *gi *= elu_grad(p);
                }
            }
            let x = &cache.inputs[i];
            for (r, &gr) in g.iter().enumerate() {
                grads.bs[i][r] += gr;
                let mut row = grads.ws[i].row_mut(r);
                for (c, &xc) in x.iter().enumerate() {
                    row[c] += gr * xc;
                }
            }
            g = self.ws[i].t().dot(&g);
        }
        g
    }

    pub fn zeros_like(&self) -> Mlp {
        Mlp {
            ws: self.ws.iter().map(|w| Array2::zeros(w.dim())).collect(),
            bs: self.bs.iter().map(|b| Array1::zeros(b.dim())).collect(),
            final_linear: self.final_linear,
        }
    }
}

/// All learnable parameters. The flattened order is fixed by
/// [`ModelParams::for_each_slice`]; it defines the checkpoint layout and
/// the coordinate indexing used in gradient checks.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// `(scenario_vocab + 1) × scenario_embed`; last row is the UNK bucket.
    pub scenario_table: Array2<f64>,
    /// `(maneuver_vocab + 1) × maneuver_embed`; last row is the UNK bucket.
    pub maneuver_table: Array2<f64>,
    // user preference capture
    pub proj_w: Array2<f64>,
    pub attn_w: Array2<f64>,
    pub attn_b: Array1<f64>,
    pub attn_v: Array1<f64>,
    pub user_w: Array2<f64>,
    pub user_b: Array1<f64>,
    // familiarity-frequency encoder
    pub freq_w: Array2<f64>,
    pub freq_b: Array1<f64>,
    // link representation
    pub link_mlp: Mlp,
    // single-head neighbor attention (empty when disabled)
    pub nbr_w: Array2<f64>,
    pub nbr_b: Array1<f64>,
    pub nbr_v: Array1<f64>,
    pub nbr_val: Array2<f64>,
    // scenario-gated heads
    pub gate_w: Array2<f64>,
    pub gate_b: Array1<f64>,
    pub heads: Vec<Mlp>,
}

impl ModelParams {
    /// Deterministic seeded initialization.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<ModelParams, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let emb = |rng: &mut ChaCha8Rng, rows: usize, cols: usize| {
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-0.1..0.1))
        };
        let lin = |rng: &mut ChaCha8Rng, out: usize, inp: usize| {
            let scale = (6.0 / (out + inp) as f64).sqrt();
            Array2::from_shape_fn((out, inp), |_| rng.gen_range(-scale..scale))
        };
        let vecp = |rng: &mut ChaCha8Rng, n: usize| {
            let scale = (3.0 / n as f64).sqrt();
            Array1::from_shape_fn(n, |_| rng.gen_range(-scale..scale))
        };

        let scenario_table = emb(&mut rng, config.scenario_vocab + 1, config.scenario_embed);
        let maneuver_table = emb(&mut rng, crate::graph::Maneuver::VOCAB + 1, config.maneuver_embed);

        let s_proc = config.s_proc_dim();
        let proj_w = lin(&mut rng, config.h_dim, s_proc);
        let attn_in = 2 * config.h_dim + s_proc;
        let attn_w = lin(&mut rng, config.attn_hidden, attn_in);
        let attn_b = Array1::zeros(config.attn_hidden);
        let attn_v = vecp(&mut rng, config.attn_hidden);
        let user_in = config.h_dim + s_proc + 1;
        let user_w = lin(&mut rng, config.user_dim, user_in);
        let user_b = Array1::zeros(config.user_dim);

        let freq_w = lin(&mut rng, config.freq_encoded, config.freq_dim);
        let freq_b = Array1::zeros(config.freq_encoded);

        let mut link_sizes = vec![config.link_concat_dim()];
        link_sizes.extend_from_slice(&config.link_layers);
        let link_mlp = Mlp::init(&mut rng, &link_sizes, false);
        let link_out = config.link_out_dim();

        let (nbr_w, nbr_b, nbr_v, nbr_val) = if config.neighbor_attention {
            (
                lin(&mut rng, config.attn_hidden, 2 * link_out),
                Array1::zeros(config.attn_hidden),
                vecp(&mut rng, config.attn_hidden),
                lin(&mut rng, link_out, link_out),
            )
        } else {
            (
                Array2::zeros((0, 0)),
                Array1::zeros(0),
                Array1::zeros(0),
                Array2::zeros((0, 0)),
            )
        };

        let gate_w = lin(&mut rng, config.scn_heads, config.user_dim);
        let gate_b = Array1::zeros(config.scn_heads);
        let mut heads = Vec::with_capacity(config.scn_heads);
        for _ in 0..config.scn_heads {
            let mut sizes = vec![config.user_dim + link_out];
            sizes.extend_from_slice(&config.head_layers);
            sizes.push(1);
            let mut head = Mlp::init(&mut rng, &sizes, true);
            // a small positive output bias keeps untrained costs clear of
            // the rectifier floor without saturating the route softmax,
            // whose logits are sums over dozens of links
            let n = head.bs.len();
            head.bs[n - 1][0] = 0.1;
            heads.push(head);
        }

        Ok(ModelParams {
            config: config.clone(),
            scenario_table,
            maneuver_table,
            proj_w,
            attn_w,
            attn_b,
            attn_v,
            user_w,
            user_b,
            freq_w,
            freq_b,
            link_mlp,
            nbr_w,
            nbr_b,
            nbr_v,
            nbr_val,
            gate_w,
            gate_b,
            heads,
        })
    }

    pub fn zeros_like(&self) -> ModelParams {
        let z2 = |a: &Array2<f64>| Array2::zeros(a.dim());
        let z1 = |a: &Array1<f64>| Array1::zeros(a.dim());
        ModelParams {
            config: self.config.clone(),
            scenario_table: z2(&self.scenario_table),
            maneuver_table: z2(&self.maneuver_table),
            proj_w: z2(&self.proj_w),
            attn_w: z2(&self.attn_w),
            attn_b: z1(&self.attn_b),
            attn_v: z1(&self.attn_v),
            user_w: z2(&self.user_w),
            user_b: z1(&self.user_b),
            freq_w: z2(&self.freq_w),
            freq_b: z1(&self.freq_b),
            link_mlp: self.link_mlp.zeros_like(),
            nbr_w: z2(&self.nbr_w),
            nbr_b: z1(&self.nbr_b),
            nbr_v: z1(&self.nbr_v),
            nbr_val: z2(&self.nbr_val),
            gate_w: z2(&self.gate_w),
            gate_b: z1(&self.gate_b),
            heads: self.heads.iter().map(Mlp::zeros_like).collect(),
        }
    }

    fn for_each_slice<'a>(&'a self, out: &mut Vec<&'a [f64]>) {
        let s2 = |a: &'a Array2<f64>| a.as_slice().expect("standard layout");
        let s1 = |a: &'a Array1<f64>| a.as_slice().expect("standard layout");
        out.push(s2(&self.scenario_table));
        out.push(s2(&self.maneuver_table));
        out.push(s2(&self.proj_w));
        out.push(s2(&self.attn_w));
        out.push(s1(&self.attn_b));
        out.push(s1(&self.attn_v));
        out.push(s2(&self.user_w));
        out.push(s1(&self.user_b));
        out.push(s2(&self.freq_w));
        out.push(s1(&self.freq_b));
        for (w, b) in self.link_mlp.ws.iter().zip(&self.link_mlp.bs) {
            out.push(s2(w));
            out.push(s1(b));
        }
        out.push(s2(&self.nbr_w));
        out.push(s1(&self.nbr_b));
        out.push(s1(&self.nbr_v));
        out.push(s2(&self.nbr_val));
        out.push(s2(&self.gate_w));
        out.push(s1(&self.gate_b));
        for head in &self.heads {
            for (w, b) in head.ws.iter().zip(&head.bs) {
                out.push(s2(w));
                out.push(s1(b));
            }
        }
    }

    fn for_each_slice_mut(&mut self, mut f: impl FnMut(&mut [f64])) {
        f(self.scenario_table.as_slice_mut().unwrap());
        f(self.maneuver_table.as_slice_mut().unwrap());
        f(self.proj_w.as_slice_mut().unwrap());
        f(self.attn_w.as_slice_mut().unwrap());
        f(self.attn_b.as_slice_mut().unwrap());
        f(self.attn_v.as_slice_mut().unwrap());
        f(self.user_w.as_slice_mut().unwrap());
        f(self.user_b.as_slice_mut().unwrap());
        f(self.freq_w.as_slice_mut().unwrap());
        f(self.freq_b.as_slice_mut().unwrap());
        for i in 0..self.link_mlp.ws.len() {
            f(self.link_mlp.ws[i].as_slice_mut().unwrap());
            f(self.link_mlp.bs[i].as_slice_mut().unwrap());
        }
        f(self.nbr_w.as_slice_mut().unwrap());
        f(self.nbr_b.as_slice_mut().unwrap());
        f(self.nbr_v.as_slice_mut().unwrap());
        f(self.nbr_val.as_slice_mut().unwrap());
        f(self.gate_w.as_slice_mut().unwrap());
        f(self.gate_b.as_slice_mut().unwrap());
        for h in 0..self.heads.len() {
            for i in 0..self.heads[h].ws.len() {
                f(self.heads[h].ws[i].as_slice_mut().unwrap());
                f(self.heads[h].bs[i].as_slice_mut().unwrap());
            }
        }
    }

    pub fn param_count(&self) -> usize {
        let mut slices = Vec::new();
        self.for_each_slice(&mut slices);
        slices.iter().map(|s| s.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut slices = Vec::new();
        self.for_each_slice(&mut slices);
        let mut out = Vec::with_capacity(slices.iter().map(|s| s.len()).sum());
        for s in slices {
            out.extend_from_slice(s);
        }
        out
    }

    /// Rebuilds parameters from a flat coordinate vector in the canonical
    /// order. Length must match exactly.
    pub fn from_flat(config: &ModelConfig, flat: &[f64]) -> Result<ModelParams, ModelError> {
        let mut params = ModelParams::init(config, 0)?;
        let expected = params.param_count();
        if flat.len() != expected {
            return Err(ModelError::BadCheckpoint(format!(
                "flat parameter vector has {} entries, model needs {expected}",
                flat.len()
            )));
        }
        let mut offset = 0usize;
        params.for_each_slice_mut(|s| {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        });
        Ok(params)
    }

    /// `self += alpha * other`, matching shapes required.
    pub fn axpy(&mut self, alpha: f64, other: &ModelParams) {
        let mut other_slices = Vec::new();
        other.for_each_slice(&mut other_slices);
        let mut idx = 0usize;
        self.for_each_slice_mut(|s| {
            let o = other_slices[idx];
            for (a, b) in s.iter_mut().zip(o) {
                *a += alpha * b;
            }
            idx += 1;
        });
    }

    pub fn all_finite(&self) -> bool {
        let mut slices = Vec::new();
        self.for_each_slice(&mut slices);
        slices.iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}
