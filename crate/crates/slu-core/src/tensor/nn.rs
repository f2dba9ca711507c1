//! Layers built from graph primitives: linear projections, LSTM cells,
//! bidirectional wrappers, text convolutions, and multi-head self-attention.
//!
//! Each layer follows the same two-phase pattern: `init_params` registers
//! tensors in a [`ParameterStore`] once per model, and `bind` creates the
//! parameter leaves in a fresh [`Graph`] so a sequence of applications
//! shares one leaf per tensor (gradients accumulate correctly when a cell
//! is unrolled over time).

use rand_chacha::ChaCha12Rng;

use super::store::{Init, ParameterStore};
use super::{Graph, NodeId};

/// Initialization scale for recurrent (hidden-to-hidden) matrices.
const RECURRENT_SCALE: f64 = 0.08;

/// Fully connected layer `y = x W + b`.
pub struct Linear {
    w: NodeId,
    b: Option<NodeId>,
}

impl Linear {
    pub fn init_params(
        store: &mut ParameterStore,
        rng: &mut ChaCha12Rng,
        name: &str,
        input: usize,
        output: usize,
        bias: bool,
    ) {
        store.init(&format!("{name}.w"), input, output, Init::FanIn, rng);
        if bias {
            store.init(&format!("{name}.b"), 1, output, Init::Zeros, rng);
        }
    }

    pub fn bind(g: &mut Graph, store: &ParameterStore, name: &str) -> Self {
        let w = g.param(store, &format!("{name}.w"));
        let b_name = format!("{name}.b");
        let b = store.value(&b_name).map(|_| g.param(store, &b_name));
        Linear { w, b }
    }

    pub fn apply(&self, g: &mut Graph, x: NodeId) -> NodeId {
        let y = g.matmul(x, self.w);
        match self.b {
            Some(b) => g.add_row(y, b),
            None => y,
        }
    }
}

/// Single-direction LSTM cell with combined gate matrices.
///
/// The gate layout along the `4H` axis is input, forget, candidate,
/// output. The forget-gate bias initializes to one.
pub struct LstmCell {
    wx: NodeId,
    wh: NodeId,
    b: NodeId,
    hidden: usize,
}

impl LstmCell {
    pub fn init_params(
        store: &mut ParameterStore,
        rng: &mut ChaCha12Rng,
        name: &str,
        input: usize,
        hidden: usize,
    ) {
        store.init(&format!("{name}.wx"), input, 4 * hidden, Init::FanIn, rng);
        store.init(
            &format!("{name}.wh"),
            hidden,
            4 * hidden,
            Init::Uniform(RECURRENT_SCALE),
            rng,
        );
        let b_name = format!("{name}.b");
        store.init(&b_name, 1, 4 * hidden, Init::Zeros, rng);
        if let Some(b) = store.value_mut(&b_name) {
            for i in hidden..2 * hidden {
                b.data[i] = 1.0;
            }
        }
    }

    pub fn bind(g: &mut Graph, store: &ParameterStore, name: &str, hidden: usize) -> Self {
        LstmCell {
            wx: g.param(store, &format!("{name}.wx")),
            wh: g.param(store, &format!("{name}.wh")),
            b: g.param(store, &format!("{name}.b")),
            hidden,
        }
    }

    /// Advance one step from `(h, c)` given input row `x`.
    pub fn step(&self, g: &mut Graph, x: NodeId, h: NodeId, c: NodeId) -> (NodeId, NodeId) {
        let hh = self.hidden;
        let from_x = g.matmul(x, self.wx);
        let from_h = g.matmul(h, self.wh);
        let gates = g.add(from_x, from_h);
        let gates = g.add_row(gates, self.b);
        let i_gate = g.slice_cols(gates, 0, hh);
        let i_gate = g.sigmoid(i_gate);
        let f_gate = g.slice_cols(gates, hh, 2 * hh);
        let f_gate = g.sigmoid(f_gate);
        let cand = g.slice_cols(gates, 2 * hh, 3 * hh);
        let cand = g.tanh(cand);
        let o_gate = g.slice_cols(gates, 3 * hh, 4 * hh);
        let o_gate = g.sigmoid(o_gate);
        let kept = g.mul(f_gate, c);
        let fresh = g.mul(i_gate, cand);
        let c_next = g.add(kept, fresh);
        let c_act = g.tanh(c_next);
        let h_next = g.mul(o_gate, c_act);
        (h_next, c_next)
    }

    /// Run over a sequence from zero state; returns every hidden state.
    pub fn run(&self, g: &mut Graph, inputs: &[NodeId]) -> Vec<NodeId> {
        let mut h = g.constant(super::Tensor::zeros(1, self.hidden));
        let mut c = g.constant(super::Tensor::zeros(1, self.hidden));
        let mut states = Vec::with_capacity(inputs.len());
        for x in inputs {
            let (h2, c2) = self.step(g, *x, h, c);
            h = h2;
            c = c2;
            states.push(h);
        }
        states
    }
}

/// Forward and backward LSTMs over the same sequence; per-step outputs are
/// the `[1, 2H]` concatenation of both directions.
pub struct BiLstm {
    fwd: LstmCell,
    bwd: LstmCell,
    pub hidden: usize,
}

impl BiLstm {
    pub fn init_params(
        store: &mut ParameterStore,
        rng: &mut ChaCha12Rng,
        name: &str,
        input: usize,
        hidden: usize,
    ) {
        LstmCell::init_params(store, rng, &format!("{name}.fwd"), input, hidden);
        LstmCell::init_params(store, rng, &format!("{name}.bwd"), input, hidden);
    }

    pub fn bind(g: &mut Graph, store: &ParameterStore, name: &str, hidden: usize) -> Self {
        BiLstm {
            fwd: LstmCell::bind(g, store, &format!("{name}.fwd"), hidden),
            bwd: LstmCell::bind(g, store, &format!("{name}.bwd"), hidden),
            hidden,
        }
    }

    pub fn run(&self, g: &mut Graph, inputs: &[NodeId]) -> Vec<NodeId> {
        let fwd_states = self.fwd.run(g, inputs);
        let reversed: Vec<NodeId> = inputs.iter().rev().cloned().collect();
        let mut bwd_states = self.bwd.run(g, &reversed);
        bwd_states.reverse();
        fwd_states
            .iter()
            .zip(&bwd_states)
            .map(|(f, b)| g.concat_cols(&[*f, *b]))
            .collect()
    }

    /// `[1, 2H]` summary: forward state at the end, backward state at the
    /// start.
    pub fn final_summary(&self, g: &mut Graph, states: &[NodeId]) -> NodeId {
        let last_fwd = g.slice_cols(states[states.len() - 1], 0, self.hidden);
        let first_bwd = g.slice_cols(states[0], self.hidden, 2 * self.hidden);
        g.concat_cols(&[last_fwd, first_bwd])
    }
}

/// Parallel same-padding text convolutions of several widths, each
/// followed by a bias and ReLU, concatenated feature-wise.
pub struct ConvBlock {
    filters: Vec<(usize, NodeId, NodeId)>,
}

impl ConvBlock {
    pub fn init_params(
        store: &mut ParameterStore,
        rng: &mut ChaCha12Rng,
        name: &str,
        input: usize,
        widths: &[usize],
        filters_per_width: usize,
    ) {
        for width in widths {
            store.init(
                &format!("{name}.w{width}"),
                width * input,
                filters_per_width,
                Init::FanIn,
                rng,
            );
            store.init(&format!("{name}.b{width}"), 1, filters_per_width, Init::Zeros, rng);
        }
    }

    pub fn bind(g: &mut Graph, store: &ParameterStore, name: &str, widths: &[usize]) -> Self {
        let filters = widths
            .iter()
            .map(|width| {
                (
                    *width,
                    g.param(store, &format!("{name}.w{width}")),
                    g.param(store, &format!("{name}.b{width}")),
                )
            })
            .collect();
        ConvBlock { filters }
    }

    /// `[T, E] -> [T, widths.len() * filters_per_width]`
    pub fn apply(&self, g: &mut Graph, x: NodeId) -> NodeId {
        let parts: Vec<NodeId> = self
            .filters
            .iter()
            .map(|(width, w, b)| {
                let y = g.conv1d_same(x, *w, *width);
                let y = g.add_row(y, *b);
                g.relu(y)
            })
            .collect();
        if parts.len() == 1 {
            parts[0]
        } else {
            g.concat_cols(&parts)
        }
    }
}

/// Scaled dot-product multi-head self-attention without masking.
pub struct MultiheadAttention {
    wq: NodeId,
    wk: NodeId,
    wv: NodeId,
    wo: NodeId,
    heads: usize,
    dim: usize,
}

impl MultiheadAttention {
    pub fn init_params(
        store: &mut ParameterStore,
        rng: &mut ChaCha12Rng,
        name: &str,
        dim: usize,
    ) {
        for proj in ["wq", "wk", "wv", "wo"] {
            store.init(&format!("{name}.{proj}"), dim, dim, Init::FanIn, rng);
        }
    }

    pub fn bind(
        g: &mut Graph,
        store: &ParameterStore,
        name: &str,
        dim: usize,
        heads: usize,
    ) -> Self {
        assert!(heads > 0 && dim % heads == 0, "dim {dim} not divisible by {heads} heads");
        MultiheadAttention {
            wq: g.param(store, &format!("{name}.wq")),
            wk: g.param(store, &format!("{name}.wk")),
            wv: g.param(store, &format!("{name}.wv")),
            wo: g.param(store, &format!("{name}.wo")),
            heads,
            dim,
        }
    }

    /// `[T, d] -> ([T, d], per-head [T, T] attention weights)`.
    pub fn apply(&self, g: &mut Graph, x: NodeId) -> (NodeId, Vec<NodeId>) {
        let dk = self.dim / self.heads;
        let q = g.matmul(x, self.wq);
        let k = g.matmul(x, self.wk);
        let v = g.matmul(x, self.wv);
        let mut outputs = Vec::with_capacity(self.heads);
        let mut attentions = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let (from, to) = (h * dk, (h + 1) * dk);
            let qh = g.slice_cols(q, from, to);
            let kh = g.slice_cols(k, from, to);
            let vh = g.slice_cols(v, from, to);
            let kt = g.transpose(kh);
            let scores = g.matmul(qh, kt);
            let scores = g.scale(scores, 1.0 / (dk as f64).sqrt());
            let attn = g.softmax_rows(scores);
            outputs.push(g.matmul(attn, vh));
            attentions.push(attn);
        }
        let merged = if outputs.len() == 1 { outputs[0] } else { g.concat_cols(&outputs) };
        (g.matmul(merged, self.wo), attentions)
    }
}
