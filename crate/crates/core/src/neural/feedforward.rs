use super::arch::FeedforwardSpec;
use super::layout::Layout;
use super::losses::{policy_loss, PROB_FLOOR};
use super::ops::{dense_backward, dense_forward, entropy, relu_backward, relu_in_place, softmax};
use crate::error::{contract, Result};

/// Activations of one tower for one input.
#[derive(Debug, Clone)]
struct TowerCache {
    /// `acts[0]` is the scaled input, `acts[k]` the output of layer `k`.
    acts: Vec<Vec<f64>>,
}

/// Actor-critic pair with separate towers.
#[derive(Debug, Clone)]
pub struct FeedforwardNet<'a> {
    pub spec: &'a FeedforwardSpec,
    layout: Layout,
}

/// Actor and critic outputs for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardOutput {
    pub policy: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    /// Sum of the actor objective `log π(a)·A + κH` over the steps.
    pub policy_objective: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub aux_loss: f64,
    pub steps: usize,
}

impl LossStats {
    pub fn mean_entropy(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.entropy / self.steps as f64
        }
    }
}

impl<'a> FeedforwardNet<'a> {
    pub fn new(spec: &'a FeedforwardSpec) -> Self {
        let layout = super::arch::Architecture::Feedforward(spec.clone()).layout();
        Self { spec, layout }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn layers(&self, tower: usize) -> std::ops::Range<usize> {
        let n = self.spec.hidden.len() + 1;
        tower * n..(tower + 1) * n
    }

    fn tower(&self, params: &[f64], tower: usize, x: &[f64]) -> TowerCache {
        let mut acts = vec![x.to_vec()];
        let range = self.layers(tower);
        let last = range.end - 1;
        for layer in range {
            let w = &params[self.layout.range(2 * layer)];
            let b = &params[self.layout.range(2 * layer + 1)];
            let mut y = vec![0.0; b.len()];
            dense_forward(w, b, acts.last().unwrap(), &mut y);
            // The actor's last layer stays linear (logits); the critic's keeps its ReLU.
            if layer != last || tower == 1 {
                relu_in_place(&mut y);
            }
            acts.push(y);
        }
        TowerCache { acts }
    }

    fn scaled(&self, obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.spec.inputs || obs.iter().any(|v| !v.is_finite()) {
            return Err(contract("observation must be finite with the network's input size"));
        }
        Ok(obs.iter().zip(&self.spec.input_scale).map(|(o, s)| o * s).collect())
    }

    pub fn forward(&self, params: &[f64], obs: &[f64]) -> Result<FeedforwardOutput> {
        let x = self.scaled(obs)?;
        let actor = self.tower(params, 0, &x);
        let critic = self.tower(params, 1, &x);
        Ok(FeedforwardOutput {
            policy: softmax(actor.acts.last().unwrap()),
            value: critic.acts.last().unwrap()[0],
        })
    }

    /// Critic values for a batch of observations.
    pub fn values(&self, params: &[f64], obs: &[Vec<f64>]) -> Result<Vec<f64>> {
        obs.iter().map(|o| Ok(self.forward(params, o)?.value)).collect()
    }

    fn tower_backward(&self, params: &[f64], tower: usize, cache: &TowerCache, dout: Vec<f64>, grad: &mut [f64]) {
        let range = self.layers(tower);
        let last = range.end - 1;
        let mut dy = dout;
        for layer in range.rev() {
            let k = layer - self.layers(tower).start;
            let out = &cache.acts[k + 1];
            if layer != last || tower == 1 {
                relu_backward(out, &mut dy);
            }
            let x = &cache.acts[k];
            let wr = self.layout.range(2 * layer);
            let br = self.layout.range(2 * layer + 1);
            let mut dx = vec![0.0; x.len()];
            let (gw, gb) = split_two(grad, wr.clone(), br);
            dense_backward(&params[wr], x, &dy, gw, gb, if k > 0 { Some(&mut dx) } else { None });
            dy = dx;
        }
    }

    /// Loss `Σ −(log π(a)·A + κH) + Σ (R − V)²` with the advantages held
    /// fixed, and its gradient accumulated into `grad`.
    pub fn loss_and_gradient(
        &self,
        params: &[f64],
        obs: &[Vec<f64>],
        actions: &[usize],
        returns: &[f64],
        advantages: &[f64],
        kappa: f64,
        grad: &mut [f64],
    ) -> Result<LossStats> {
        let n = obs.len();
        if actions.len() != n || returns.len() != n || advantages.len() != n {
            return Err(contract("rollout vectors must have equal lengths"));
        }
        if grad.len() != self.layout.total {
            return Err(contract("gradient buffer has the wrong size"));
        }
        let mut stats = LossStats {
            steps: n,
            ..LossStats::default()
        };
        for t in 0..n {
            let x = self.scaled(&obs[t])?;
            let actor = self.tower(params, 0, &x);
            let policy = softmax(actor.acts.last().unwrap());
            let (obj, dlogits) = policy_loss(&policy, actions[t], advantages[t], kappa);
            stats.policy_objective += obj;
            stats.entropy += entropy(&policy);
            self.tower_backward(params, 0, &actor, dlogits, grad);

            let critic = self.tower(params, 1, &x);
            let v = critic.acts.last().unwrap()[0];
            stats.value_loss += (returns[t] - v).powi(2);
            self.tower_backward(params, 1, &critic, vec![-2.0 * (returns[t] - v)], grad);
        }
        Ok(stats)
    }

    /// Scalar loss matching [`Self::loss_and_gradient`].
    pub fn loss(
        &self,
        params: &[f64],
        obs: &[Vec<f64>],
        actions: &[usize],
        returns: &[f64],
        advantages: &[f64],
        kappa: f64,
    ) -> Result<f64> {
        let mut total = 0.0;
        for t in 0..obs.len() {
            let out = self.forward(params, &obs[t])?;
            let h = entropy(&out.policy);
            total -= out.policy[actions[t]].max(PROB_FLOOR).ln() * advantages[t] + kappa * h;
            total += (returns[t] - out.value).powi(2);
        }
        Ok(total)
    }

    /// Signs of every ReLU pre-activation, used to skip finite-difference
    /// probes that cross a kink.
    pub fn relu_pattern(&self, params: &[f64], obs: &[Vec<f64>]) -> Result<Vec<bool>> {
        let mut out = Vec::new();
        for o in obs {
            let x = self.scaled(o)?;
            for tower in 0..2 {
                let c = self.tower(params, tower, &x);
                let skip_last = tower == 0;
                let upto = if skip_last { c.acts.len() - 1 } else { c.acts.len() };
                for a in &c.acts[1..upto] {
                    out.extend(a.iter().map(|&v| v > 0.0));
                }
            }
        }
        Ok(out)
    }
}

/// Disjoint mutable views of two ranges of one buffer.
pub(crate) fn split_two(
    buf: &mut [f64],
    a: std::ops::Range<usize>,
    b: std::ops::Range<usize>,
) -> (&mut [f64], &mut [f64]) {
    assert!(a.end <= b.start, "ranges must be ordered and disjoint");
    let (left, right) = buf.split_at_mut(b.start);
    (&mut left[a], &mut right[..b.end - b.start])
}
