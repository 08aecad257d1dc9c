//! Actor-critic network over circuit graphs, with hand written backward.
//!
//! Architecture: a linear projection lifts the 8 node features to the
//! hidden width, then `layers` rounds of GINE-style message passing run
//!
//! ```text
//! m_v = (1 + eps) * h_v + sum over incident edges of relu(h_u + embed(e_uv))
//! h_v <- h_v + MLP(m_v)
//! ```
//!
//! where each edge is consumed in both directions and the reversed
//! direction swaps the two role halves of the edge feature.  Mean pooling
//! over each graph's nodes feeds two 2-layer heads: the actor producing
//! one logit per registered pass, and the critic producing a state value.
//! There is no dropout or normalisation, so forward passes are
//! deterministic functions of the weights.
//!
//! Gradients are accumulated into a second `PolicyParams` of identical
//! shape; `AdamState` applies global-norm clipping followed by bias
//! corrected Adam updates.

use crate::graph::{GraphBatch, EDGE_FEATURES, NODE_FEATURES};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;
use rlpass_core::passes::Action;
use serde::{Deserialize, Serialize};

/// Network shape; the action count is pinned to the pass registry size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub hidden: usize,
    pub layers: usize,
    pub n_actions: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig { hidden: 128, layers: 4, n_actions: Action::COUNT }
    }
}

impl ArchConfig {
    pub fn with_size(hidden: usize, layers: usize) -> Self {
        ArchConfig { hidden, layers, n_actions: Action::COUNT }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S> {
    /// in x out; applied as y = x.w + b.
    pub w: Array2<S>,
    pub b: Array1<S>,
}

impl<S: Scalar> Dense<S> {
    fn init(n_in: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let w = Array2::from_shape_fn((n_in, n_out), |_| {
            S::from_f64(rng.gen_range(-limit..limit))
        });
        Dense { w, b: Array1::zeros(n_out) }
    }

    fn apply(&self, x: &Array2<S>) -> Array2<S> {
        x.dot(&self.w) + &self.b
    }

    /// Returns dx and accumulates weight gradients.
    fn backward(&self, x: &Array2<S>, dy: &Array2<S>, grad: &mut Dense<S>) -> Array2<S> {
        grad.w = &grad.w + &x.t().dot(dy);
        grad.b = &grad.b + &dy.sum_axis(Axis(0));
        dy.dot(&self.w.t())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S> {
    pub fc1: Dense<S>,
    pub fc2: Dense<S>,
}

impl<S: Scalar> Mlp<S> {
    fn init(n_in: usize, n_hidden: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        Mlp { fc1: Dense::init(n_in, n_hidden, rng), fc2: Dense::init(n_hidden, n_out, rng) }
    }

    /// Returns (pre-activation hidden, output).
    fn apply(&self, x: &Array2<S>) -> (Array2<S>, Array2<S>) {
        let u = self.fc1.apply(x);
        let y = self.fc2.apply(&relu(&u));
        (u, y)
    }

    fn backward(
        &self,
        x: &Array2<S>,
        u: &Array2<S>,
        dy: &Array2<S>,
        grad: &mut Mlp<S>,
    ) -> Array2<S> {
        let dz = self.fc2.backward(&relu(u), dy, &mut grad.fc2);
        let du = &dz * &relu_mask(u);
        self.fc1.backward(x, &du, &mut grad.fc1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GineLayer<S> {
    pub edge: Dense<S>,
    /// Length-1 tensor holding the learnable self-loop weight.
    pub eps: Array1<S>,
    pub mlp: Mlp<S>,
}

/// All learnable tensors; doubles as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<S> {
    pub arch: ArchConfig,
    pub input: Dense<S>,
    pub layers: Vec<GineLayer<S>>,
    pub actor: Mlp<S>,
    pub critic: Mlp<S>,
}

impl<S: Scalar> PolicyParams<S> {
    pub fn init(arch: ArchConfig, rng: &mut impl Rng) -> Self {
        let h = arch.hidden;
        let input = Dense::init(NODE_FEATURES, h, rng);
        let layers = (0..arch.layers)
            .map(|_| GineLayer {
                edge: Dense::init(EDGE_FEATURES, h, rng),
                eps: Array1::zeros(1),
                mlp: Mlp::init(h, h, h, rng),
            })
            .collect();
        let actor = Mlp::init(h, h, arch.n_actions, rng);
        let critic = Mlp::init(h, h, 1, rng);
        PolicyParams { arch, input, layers, actor, critic }
    }

    pub fn zeros_like(&self) -> Self {
        let mut copy = self.clone();
        for (_, mut t) in copy.tensors_mut() {
            t.fill(S::zero());
        }
        copy
    }

    /// Named views over every tensor, in a fixed serialisation order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, S>)> {
        let mut out: Vec<(String, ArrayViewD<'_, S>)> = vec![
            ("input.w".into(), self.input.w.view().into_dyn()),
            ("input.b".into(), self.input.b.view().into_dyn()),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            out.push((format!("layer{i}.edge.w"), layer.edge.w.view().into_dyn()));
            out.push((format!("layer{i}.edge.b"), layer.edge.b.view().into_dyn()));
            out.push((format!("layer{i}.eps"), layer.eps.view().into_dyn()));
            out.push((format!("layer{i}.mlp.fc1.w"), layer.mlp.fc1.w.view().into_dyn()));
            out.push((format!("layer{i}.mlp.fc1.b"), layer.mlp.fc1.b.view().into_dyn()));
            out.push((format!("layer{i}.mlp.fc2.w"), layer.mlp.fc2.w.view().into_dyn()));
            out.push((format!("layer{i}.mlp.fc2.b"), layer.mlp.fc2.b.view().into_dyn()));
        }
        for (name, mlp) in [("actor", &self.actor), ("critic", &self.critic)] {
            out.push((format!("{name}.fc1.w"), mlp.fc1.w.view().into_dyn()));
            out.push((format!("{name}.fc1.b"), mlp.fc1.b.view().into_dyn()));
            out.push((format!("{name}.fc2.w"), mlp.fc2.w.view().into_dyn()));
            out.push((format!("{name}.fc2.b"), mlp.fc2.b.view().into_dyn()));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, S>)> {
        let mut out: Vec<(String, ArrayViewMutD<'_, S>)> = vec![
            ("input.w".into(), self.input.w.view_mut().into_dyn()),
            ("input.b".into(), self.input.b.view_mut().into_dyn()),
        ];
        for (i, layer) in self.layers.iter_mut().enumerate() {
            out.push((format!("layer{i}.edge.w"), layer.edge.w.view_mut().into_dyn()));
            out.push((format!("layer{i}.edge.b"), layer.edge.b.view_mut().into_dyn()));
            out.push((format!("layer{i}.eps"), layer.eps.view_mut().into_dyn()));
            out.push((format!("layer{i}.mlp.fc1.w"), layer.mlp.fc1.w.view_mut().into_dyn()));
            out.push((format!("layer{i}.mlp.fc1.b"), layer.mlp.fc1.b.view_mut().into_dyn()));
            out.push((format!("layer{i}.mlp.fc2.w"), layer.mlp.fc2.w.view_mut().into_dyn()));
            out.push((format!("layer{i}.mlp.fc2.b"), layer.mlp.fc2.b.view_mut().into_dyn()));
        }
        for (name, mlp) in [("actor", &mut self.actor), ("critic", &mut self.critic)] {
            out.push((format!("{name}.fc1.w"), mlp.fc1.w.view_mut().into_dyn()));
            out.push((format!("{name}.fc1.b"), mlp.fc1.b.view_mut().into_dyn()));
            out.push((format!("{name}.fc2.w"), mlp.fc2.w.view_mut().into_dyn()));
            out.push((format!("{name}.fc2.b"), mlp.fc2.b.view_mut().into_dyn()));
        }
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<S> {
        let mut flat = Vec::with_capacity(self.n_params());
        for (_, t) in self.tensors() {
            flat.extend(t.iter().copied());
        }
        flat
    }

    pub fn load_flat(&mut self, flat: &[S]) {
        let mut k = 0;
        for (_, mut t) in self.tensors_mut() {
            for x in t.iter_mut() {
                *x = flat[k];
                k += 1;
            }
        }
        assert_eq!(k, flat.len(), "flat parameter vector length mismatch");
    }

    pub fn forward(&self, batch: &GraphBatch<S>) -> PolicyOutput<S> {
        self.forward_cached(batch).0
    }

    pub fn forward_cached(&self, batch: &GraphBatch<S>) -> (PolicyOutput<S>, ForwardCache<S>) {
        let (src, dst) = edge_endpoints(batch);
        let swapped = batch.swapped_edge_features();
        let mut h = self.input.apply(&batch.node_features);
        let mut cache = ForwardCache {
            hs: Vec::with_capacity(self.layers.len() + 1),
            pre_f: Vec::new(),
            pre_r: Vec::new(),
            m: Vec::new(),
            u_mlp: Vec::new(),
            pooled: Array2::zeros((0, 0)),
            u_actor: Array2::zeros((0, 0)),
            u_critic: Array2::zeros((0, 0)),
            swapped,
        };
        for layer in &self.layers {
            cache.hs.push(h.clone());
            let a = cache.hs.last().unwrap();
            let emb_f = layer.edge.apply(&batch.edge_features);
            let emb_r = layer.edge.apply(&cache.swapped);
            let pre_f = &a.select(Axis(0), &src) + &emb_f;
            let pre_r = &a.select(Axis(0), &dst) + &emb_r;
            let mut m = a * (S::one() + layer.eps[0]);
            scatter_add(&mut m, &dst, &relu(&pre_f));
            scatter_add(&mut m, &src, &relu(&pre_r));
            let (u, z) = layer.mlp.apply(&m);
            h = a + &z;
            cache.pre_f.push(pre_f);
            cache.pre_r.push(pre_r);
            cache.m.push(m);
            cache.u_mlp.push(u);
        }
        cache.hs.push(h);
        let pooled = batch.mean_pool(cache.hs.last().unwrap());
        let (ua, logits) = self.actor.apply(&pooled);
        let (uc, value) = self.critic.apply(&pooled);
        cache.pooled = pooled;
        cache.u_actor = ua;
        cache.u_critic = uc;
        let values = value.column(0).to_owned();
        (PolicyOutput { logits, values }, cache)
    }

    /// Gradient of a scalar loss given its derivatives w.r.t. the heads.
    pub fn backward(
        &self,
        batch: &GraphBatch<S>,
        cache: &ForwardCache<S>,
        dlogits: &Array2<S>,
        dvalues: &Array1<S>,
    ) -> PolicyParams<S> {
        let (src, dst) = edge_endpoints(batch);
        let mut grad = self.zeros_like();
        let dvalue_col = dvalues.clone().insert_axis(Axis(1));
        let dp_actor =
            self.actor.backward(&cache.pooled, &cache.u_actor, dlogits, &mut grad.actor);
        let dp_critic =
            self.critic.backward(&cache.pooled, &cache.u_critic, &dvalue_col, &mut grad.critic);
        let dpooled = dp_actor + dp_critic;
        let mut dh = batch.mean_pool_backward(&dpooled);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let a = &cache.hs[l];
            let glayer = &mut grad.layers[l];
            let dm = layer.mlp.backward(&cache.m[l], &cache.u_mlp[l], &dh, &mut glayer.mlp);
            glayer.eps[0] += (&dm * a).sum();
            let mut da = dh + &(&dm * (S::one() + layer.eps[0]));
            let dpre_f = &dm.select(Axis(0), &dst) * &relu_mask(&cache.pre_f[l]);
            let dpre_r = &dm.select(Axis(0), &src) * &relu_mask(&cache.pre_r[l]);
            scatter_add(&mut da, &src, &dpre_f);
            scatter_add(&mut da, &dst, &dpre_r);
            glayer.edge.w = &glayer.edge.w
                + &(batch.edge_features.t().dot(&dpre_f) + cache.swapped.t().dot(&dpre_r));
            glayer.edge.b =
                &glayer.edge.b + &(dpre_f.sum_axis(Axis(0)) + dpre_r.sum_axis(Axis(0)));
            dh = da;
        }
        self.input.backward(&batch.node_features, &dh, &mut grad.input);
        grad
    }

    /// Elementwise a += c * b over every tensor pair.
    pub fn axpy(&mut self, c: S, other: &PolicyParams<S>) {
        let mut mine = self.tensors_mut();
        for ((_, t), (_, o)) in mine.iter_mut().zip(other.tensors()) {
            ndarray::Zip::from(t).and(&o).for_each(|x, &y| *x += c * y);
        }
    }
}

pub struct PolicyOutput<S> {
    /// One row per graph, one column per registered pass.
    pub logits: Array2<S>,
    pub values: Array1<S>,
}

/// Intermediate activations retained for the backward pass.
pub struct ForwardCache<S> {
    hs: Vec<Array2<S>>,
    pre_f: Vec<Array2<S>>,
    pre_r: Vec<Array2<S>>,
    m: Vec<Array2<S>>,
    u_mlp: Vec<Array2<S>>,
    pooled: Array2<S>,
    u_actor: Array2<S>,
    u_critic: Array2<S>,
    swapped: Array2<S>,
}

fn edge_endpoints<S: Scalar>(batch: &GraphBatch<S>) -> (Vec<usize>, Vec<usize>) {
    let src = batch.edge_index.iter().map(|e| e[0]).collect();
    let dst = batch.edge_index.iter().map(|e| e[1]).collect();
    (src, dst)
}

fn relu<S: Scalar>(x: &Array2<S>) -> Array2<S> {
    x.mapv(|v| if v > S::zero() { v } else { S::zero() })
}

fn relu_mask<S: Scalar>(x: &Array2<S>) -> Array2<S> {
    x.mapv(|v| if v > S::zero() { S::one() } else { S::zero() })
}

fn scatter_add<S: Scalar>(target: &mut Array2<S>, rows: &[usize], values: &Array2<S>) {
    for (e, &r) in rows.iter().enumerate() {
        let mut row = target.row_mut(r);
        row += &values.row(e);
    }
}

/// Row-wise log softmax with max subtraction.
pub fn log_softmax<S: Scalar>(logits: &Array2<S>) -> Array2<S> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(S::neg_infinity(), S::max);
        row.mapv_inplace(|x| x - max);
        let lse = row.iter().map(|x| x.exp()).sum::<S>().ln();
        row.mapv_inplace(|x| x - lse);
    }
    out
}

pub fn softmax<S: Scalar>(logits: &Array2<S>) -> Array2<S> {
    log_softmax(logits).mapv(|x| x.exp())
}

/// Sum of squared elements across every tensor, in f64.
pub fn global_grad_norm<S: Scalar>(grads: &PolicyParams<S>) -> f64 {
    let mut acc = 0.0;
    for (_, t) in grads.tensors() {
        for &x in t.iter() {
            let x = x.into_f64();
            acc += x * x;
        }
    }
    acc.sqrt()
}

/// Scales gradients so their global norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_grad_norm<S: Scalar>(grads: &mut PolicyParams<S>, max_norm: f64) -> f64 {
    let norm = global_grad_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let scale = S::from_f64(max_norm / norm);
        for (_, mut t) in grads.tensors_mut() {
            t.mapv_inplace(|x| x * scale);
        }
    }
    norm
}

/// Adam with bias correction; gradient clipping happens before the
/// moment updates.
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    m: PolicyParams<S>,
    v: PolicyParams<S>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &PolicyParams<S>, lr: f64) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut PolicyParams<S>, grads: &mut PolicyParams<S>, clip: f64) {
        clip_grad_norm(grads, clip);
        self.t += 1;
        let b1 = S::from_f64(self.beta1);
        let b2 = S::from_f64(self.beta2);
        let one = S::one();
        let corr1 = S::from_f64(1.0 - self.beta1.powi(self.t as i32));
        let corr2 = S::from_f64(1.0 - self.beta2.powi(self.t as i32));
        let lr = S::from_f64(self.lr);
        let eps = S::from_f64(self.eps);
        let mut p = params.tensors_mut();
        let g = grads.tensors_mut();
        let mut m = self.m.tensors_mut();
        let mut v = self.v.tensors_mut();
        for k in 0..p.len() {
            ndarray::Zip::from(&mut p[k].1)
                .and(&g[k].1)
                .and(&mut m[k].1)
                .and(&mut v[k].1)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    let mhat = *m / corr1;
                    let vhat = *v / corr2;
                    *p = *p - lr * mhat / (vhat.sqrt() + eps);
                });
        }
    }
}
