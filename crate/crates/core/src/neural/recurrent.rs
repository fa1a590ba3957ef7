use super::arch::{Architecture, RecurrentSpec};
use super::feedforward::{split_two, LossStats};
use super::layout::Layout;
use super::losses::{bce_with_logit, policy_loss, PROB_FLOOR};
use super::ops::{dense_backward, dense_forward, entropy, relu_backward, relu_in_place, sigmoid, softmax};
use crate::error::{contract, Result};

/// LSTM hidden and cell vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(size: usize) -> Self {
        Self {
            h: vec![0.0; size],
            c: vec![0.0; size],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentOutput {
    pub policy: Vec<f64>,
    pub value: f64,
    /// Sigmoid auxiliary predictions.
    pub aux: Vec<f64>,
    pub state: LstmState,
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    /// Outputs of the dense layers, `acts[0]` = layer 1.
    acts: Vec<Vec<f64>>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    h_prev: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
    logits: Vec<f64>,
    value: f64,
    aux_logits: Vec<f64>,
}

/// Targets of one training sequence.
#[derive(Debug, Clone, Copy)]
pub struct SequenceTargets<'t> {
    pub actions: &'t [usize],
    pub returns: &'t [f64],
    /// Held fixed while differentiating.
    pub advantages: &'t [f64],
    /// `aux_labels[t][k] ∈ {0, 1}`.
    pub aux_labels: &'t [Vec<f64>],
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub entropy: f64,
    pub value: f64,
    pub aux: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            entropy: 0.01,
            value: 0.5,
            aux: 0.1,
        }
    }
}

/// Dense stack, LSTM and heads evaluated on flat parameters.
#[derive(Debug, Clone)]
pub struct RecurrentNet<'a> {
    pub spec: &'a RecurrentSpec,
    layout: Layout,
    fc: Vec<(usize, usize)>,
    shortcut: usize,
    wx: usize,
    wh: usize,
    bl: usize,
    heads: [(usize, usize); 3],
}

impl<'a> RecurrentNet<'a> {
    pub fn new(spec: &'a RecurrentSpec) -> Self {
        let layout = Architecture::Recurrent(spec.clone()).layout();
        let idx = |n: &str| layout.index_of(n).expect("layout block");
        let fc = (1..=spec.depth)
            .map(|k| (idx(&format!("fc{k}.w")), idx(&format!("fc{k}.b"))))
            .collect();
        Self {
            spec,
            fc,
            shortcut: idx("shortcut.w"),
            wx: idx("lstm.wx"),
            wh: idx("lstm.wh"),
            bl: idx("lstm.b"),
            heads: [
                (idx("policy.w"), idx("policy.b")),
                (idx("value.w"), idx("value.b")),
                (idx("aux.w"), idx("aux.b")),
            ],
            layout,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn initial_state(&self) -> LstmState {
        LstmState::zeros(self.spec.lstm)
    }

    fn p<'p>(&self, params: &'p [f64], block: usize) -> &'p [f64] {
        &params[self.layout.range(block)]
    }

    fn step_cache(&self, params: &[f64], obs: &[f64], state: &LstmState) -> Result<StepCache> {
        let s = self.spec;
        if obs.len() != s.inputs || obs.iter().any(|v| !v.is_finite()) {
            return Err(contract("observation must be finite with the network's input size"));
        }
        if state.h.len() != s.lstm || state.c.len() != s.lstm {
            return Err(contract("lstm state has the wrong size"));
        }
        let x: Vec<f64> = obs.iter().zip(&s.input_scale).map(|(o, k)| o * k).collect();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(s.depth);
        for (k, &(w, b)) in self.fc.iter().enumerate() {
            let input = if k == 0 { &x } else { &acts[k - 1] };
            let mut y = vec![0.0; s.width];
            dense_forward(self.p(params, w), self.p(params, b), input, &mut y);
            if k + 1 == s.shortcut_layer {
                let zero = vec![0.0; s.width];
                let mut proj = vec![0.0; s.width];
                dense_forward(self.p(params, self.shortcut), &zero, &x, &mut proj);
                for (a, b) in y.iter_mut().zip(&proj) {
                    *a += b;
                }
            }
            relu_in_place(&mut y);
            acts.push(y);
        }
        let hsz = s.lstm;
        let mut z = vec![0.0; 4 * hsz];
        dense_forward(self.p(params, self.wx), self.p(params, self.bl), acts.last().unwrap(), &mut z);
        let mut zh = vec![0.0; 4 * hsz];
        let zeros = vec![0.0; 4 * hsz];
        dense_forward(self.p(params, self.wh), &zeros, &state.h, &mut zh);
        for (a, b) in z.iter_mut().zip(&zh) {
            *a += b;
        }
        let i: Vec<f64> = z[..hsz].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[hsz..2 * hsz].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[2 * hsz..3 * hsz].iter().map(|&v| v.tanh()).collect();
        let o: Vec<f64> = z[3 * hsz..].iter().map(|&v| sigmoid(v)).collect();
        let c: Vec<f64> = (0..hsz).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..hsz).map(|k| o[k] * tanh_c[k]).collect();

        let mut logits = vec![0.0; s.actions];
        dense_forward(self.p(params, self.heads[0].0), self.p(params, self.heads[0].1), &h, &mut logits);
        let mut value = [0.0];
        dense_forward(self.p(params, self.heads[1].0), self.p(params, self.heads[1].1), &h, &mut value);
        let mut aux_logits = vec![0.0; s.aux];
        dense_forward(self.p(params, self.heads[2].0), self.p(params, self.heads[2].1), &h, &mut aux_logits);
        Ok(StepCache {
            x,
            acts,
            i,
            f,
            g,
            o,
            c_prev: state.c.clone(),
            h_prev: state.h.clone(),
            tanh_c,
            h,
            c,
            logits,
            value: value[0],
            aux_logits,
        })
    }

    pub fn step(&self, params: &[f64], obs: &[f64], state: &LstmState) -> Result<RecurrentOutput> {
        let c = self.step_cache(params, obs, state)?;
        Ok(RecurrentOutput {
            policy: softmax(&c.logits),
            value: c.value,
            aux: c.aux_logits.iter().map(|&z| sigmoid(z)).collect(),
            state: LstmState { h: c.h, c: c.c },
        })
    }

    /// Runs a sequence from `state`, returning every step's output.
    pub fn run(&self, params: &[f64], obs: &[Vec<f64>], state: &LstmState) -> Result<Vec<RecurrentOutput>> {
        let mut s = state.clone();
        let mut out = Vec::with_capacity(obs.len());
        for o in obs {
            let r = self.step(params, o, &s)?;
            s = r.state.clone();
            out.push(r);
        }
        Ok(out)
    }

    fn check_targets(&self, obs: &[Vec<f64>], t: &SequenceTargets) -> Result<()> {
        let n = obs.len();
        if t.actions.len() != n || t.returns.len() != n || t.advantages.len() != n || t.aux_labels.len() != n {
            return Err(contract("sequence targets must match the observation count"));
        }
        if t.aux_labels.iter().any(|l| l.len() != self.spec.aux) {
            return Err(contract("auxiliary label width mismatch"));
        }
        Ok(())
    }

    /// Total loss of a sequence, with advantages held fixed:
    /// `Σ −(log π(a)·A + κH) + c_v Σ (R − V)² + c_a Σ BCE(aux)`.
    pub fn loss(
        &self,
        params: &[f64],
        obs: &[Vec<f64>],
        state: &LstmState,
        targets: &SequenceTargets,
        w: LossWeights,
    ) -> Result<f64> {
        self.check_targets(obs, targets)?;
        let mut s = state.clone();
        let mut total = 0.0;
        for t in 0..obs.len() {
            let c = self.step_cache(params, &obs[t], &s)?;
            let pi = softmax(&c.logits);
            total -= pi[targets.actions[t]].max(PROB_FLOOR).ln() * targets.advantages[t] + w.entropy * entropy(&pi);
            total += w.value * (targets.returns[t] - c.value).powi(2);
            for (k, &z) in c.aux_logits.iter().enumerate() {
                total += w.aux * bce_with_logit(z, targets.aux_labels[t][k]).0;
            }
            s = LstmState { h: c.h, c: c.c };
        }
        Ok(total)
    }

    /// Backpropagation through the whole sequence; accumulates into `grad`.
    pub fn loss_and_gradient(
        &self,
        params: &[f64],
        obs: &[Vec<f64>],
        state: &LstmState,
        targets: &SequenceTargets,
        w: LossWeights,
        grad: &mut [f64],
    ) -> Result<LossStats> {
        self.check_targets(obs, targets)?;
        if grad.len() != self.layout.total {
            return Err(contract("gradient buffer has the wrong size"));
        }
        let s = self.spec;
        let hsz = s.lstm;
        let mut caches = Vec::with_capacity(obs.len());
        let mut st = state.clone();
        for o in obs {
            let c = self.step_cache(params, o, &st)?;
            st = LstmState {
                h: c.h.clone(),
                c: c.c.clone(),
            };
            caches.push(c);
        }

        let mut stats = LossStats {
            steps: obs.len(),
            ..LossStats::default()
        };
        let mut dh_next = vec![0.0; hsz];
        let mut dc_next = vec![0.0; hsz];
        for t in (0..obs.len()).rev() {
            let c = &caches[t];
            let pi = softmax(&c.logits);
            let (obj, mut dlogits) = policy_loss(&pi, targets.actions[t], targets.advantages[t], w.entropy);
            stats.policy_objective += obj;
            stats.entropy += entropy(&pi);
            let err = targets.returns[t] - c.value;
            stats.value_loss += err * err;
            let dvalue = [-2.0 * w.value * err];
            let mut daux = vec![0.0; s.aux];
            for k in 0..s.aux {
                let (l, g) = bce_with_logit(c.aux_logits[k], targets.aux_labels[t][k]);
                stats.aux_loss += l;
                daux[k] = w.aux * g;
            }
            // Heads.
            let mut dh = dh_next.clone();
            for (head, dy) in [(0usize, &mut dlogits[..]), (1, &mut dvalue.clone()[..]), (2, &mut daux[..])] {
                let (wb, bb) = self.heads[head];
                let (gw, gb) = split_two(grad, self.layout.range(wb), self.layout.range(bb));
                dense_backward(self.p(params, wb), &c.h, dy, gw, gb, Some(&mut dh));
            }
            // LSTM cell.
            let mut dz = vec![0.0; 4 * hsz];
            let mut dc_prev = vec![0.0; hsz];
            for k in 0..hsz {
                let do_ = dh[k] * c.tanh_c[k];
                let dc = dh[k] * c.o[k] * (1.0 - c.tanh_c[k] * c.tanh_c[k]) + dc_next[k];
                let di = dc * c.g[k];
                let dg = dc * c.i[k];
                let df = dc * c.c_prev[k];
                dc_prev[k] = dc * c.f[k];
                dz[k] = di * c.i[k] * (1.0 - c.i[k]);
                dz[hsz + k] = df * c.f[k] * (1.0 - c.f[k]);
                dz[2 * hsz + k] = dg * (1.0 - c.g[k] * c.g[k]);
                dz[3 * hsz + k] = do_ * c.o[k] * (1.0 - c.o[k]);
            }
            let top = c.acts.last().unwrap();
            let mut dtop = vec![0.0; s.width];
            {
                let (gw, gb) = split_two(grad, self.layout.range(self.wx), self.layout.range(self.bl));
                dense_backward(self.p(params, self.wx), top, &dz, gw, gb, Some(&mut dtop));
            }
            let mut dh_prev = vec![0.0; hsz];
            {
                let gw = &mut grad[self.layout.range(self.wh)];
                let mut scratch = vec![0.0; 4 * hsz];
                dense_backward(self.p(params, self.wh), &c.h_prev, &dz, gw, &mut scratch, Some(&mut dh_prev));
            }
            // Dense stack.
            let mut dy = dtop;
            for k in (0..s.depth).rev() {
                relu_backward(&c.acts[k], &mut dy);
                if k + 1 == s.shortcut_layer {
                    let gw = &mut grad[self.layout.range(self.shortcut)];
                    let mut scratch = vec![0.0; s.width];
                    dense_backward(self.p(params, self.shortcut), &c.x, &dy, gw, &mut scratch, None);
                }
                let (wb, bb) = self.fc[k];
                let input = if k == 0 { &c.x } else { &c.acts[k - 1] };
                let mut dx = vec![0.0; input.len()];
                let (gw, gb) = split_two(grad, self.layout.range(wb), self.layout.range(bb));
                dense_backward(self.p(params, wb), input, &dy, gw, gb, if k > 0 { Some(&mut dx) } else { None });
                dy = dx;
            }
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        Ok(stats)
    }

    /// Signs of all ReLU pre-activations along the sequence.
    pub fn relu_pattern(&self, params: &[f64], obs: &[Vec<f64>], state: &LstmState) -> Result<Vec<bool>> {
        let mut out = Vec::new();
        let mut st = state.clone();
        for o in obs {
            let c = self.step_cache(params, o, &st)?;
            for a in &c.acts {
                out.extend(a.iter().map(|&v| v > 0.0));
            }
            st = LstmState { h: c.h, c: c.c };
        }
        Ok(out)
    }
}
