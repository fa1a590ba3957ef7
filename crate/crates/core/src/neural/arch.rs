use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layout::{dense_blocks, Block, Layout};
use crate::error::{Error, Result};

/// Two separate feed-forward towers: a softmax actor and a critic with a
/// ReLU output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedforwardSpec {
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub actions: usize,
    /// Fixed per-input scale applied before the first layer.
    pub input_scale: Vec<f64>,
}

/// Dense ReLU stack with an input shortcut into one layer, an LSTM, and
/// policy, value and sigmoid auxiliary heads on the LSTM output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrentSpec {
    pub inputs: usize,
    pub width: usize,
    pub depth: usize,
    /// 1-based index of the dense layer that receives the input projection.
    pub shortcut_layer: usize,
    pub lstm: usize,
    pub actions: usize,
    pub aux: usize,
    pub input_scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Feedforward(FeedforwardSpec),
    Recurrent(RecurrentSpec),
}

impl FeedforwardSpec {
    /// Snake controller: 7 inputs, hidden 64 and 32, nine actions.
    pub fn snake() -> Self {
        Self {
            inputs: 7,
            hidden: vec![64, 32],
            actions: 9,
            input_scale: vec![1.0, 1.0, 0.1, 1.0, 1.0, 1.0, 0.1],
        }
    }
}

impl RecurrentSpec {
    /// Per-leg controller: 7 inputs, five 128-wide layers, LSTM 128, three
    /// actions, two auxiliary predictions.
    pub fn leg() -> Self {
        Self {
            inputs: 7,
            width: 128,
            depth: 5,
            shortcut_layer: 4,
            lstm: 128,
            actions: 3,
            aux: 2,
            input_scale: vec![1.0, 1.0, 1.0, 20.0, 0.5, 0.5, 0.5],
        }
    }

    /// Single agent over all six legs: doubled width and `3⁶` joint actions.
    pub fn centralized() -> Self {
        let leg = Self::leg();
        Self {
            inputs: 42,
            width: 256,
            lstm: 256,
            actions: 729,
            input_scale: leg.input_scale.repeat(6),
            ..leg
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Architecture::Feedforward(s) => {
                s.inputs > 0
                    && s.actions > 1
                    && s.hidden.iter().all(|&h| h > 0)
                    && s.input_scale.len() == s.inputs
            }
            Architecture::Recurrent(s) => {
                s.inputs > 0
                    && s.width > 0
                    && s.depth > 0
                    && (1..=s.depth).contains(&s.shortcut_layer)
                    && s.lstm > 0
                    && s.actions > 1
                    && s.input_scale.len() == s.inputs
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("inconsistent network architecture".into()))
        }
    }

    pub fn actions(&self) -> usize {
        match self {
            Architecture::Feedforward(s) => s.actions,
            Architecture::Recurrent(s) => s.actions,
        }
    }

    pub fn layout(&self) -> Layout {
        let mut blocks = Vec::new();
        match self {
            Architecture::Feedforward(s) => {
                for tower in ["actor", "critic"] {
                    let out = if tower == "actor" { s.actions } else { 1 };
                    let mut prev = s.inputs;
                    for (k, &h) in s.hidden.iter().chain(std::iter::once(&out)).enumerate() {
                        dense_blocks(&mut blocks, &format!("{tower}.{k}"), prev, h);
                        prev = h;
                    }
                }
            }
            Architecture::Recurrent(s) => {
                let mut prev = s.inputs;
                for k in 1..=s.depth {
                    dense_blocks(&mut blocks, &format!("fc{k}"), prev, s.width);
                    prev = s.width;
                }
                blocks.push(Block {
                    name: "shortcut.w".into(),
                    rows: s.width,
                    cols: s.inputs,
                });
                blocks.push(Block {
                    name: "lstm.wx".into(),
                    rows: 4 * s.lstm,
                    cols: s.width,
                });
                blocks.push(Block {
                    name: "lstm.wh".into(),
                    rows: 4 * s.lstm,
                    cols: s.lstm,
                });
                blocks.push(Block {
                    name: "lstm.b".into(),
                    rows: 4 * s.lstm,
                    cols: 1,
                });
                dense_blocks(&mut blocks, "policy", s.lstm, s.actions);
                dense_blocks(&mut blocks, "value", s.lstm, 1);
                dense_blocks(&mut blocks, "aux", s.lstm, s.aux);
            }
        }
        Layout::new(blocks)
    }
}

/// Flat parameters of one network with a version counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub arch: Architecture,
    pub params: Vec<f64>,
    pub version: u64,
}

impl Weights {
    pub fn zeros(arch: Architecture) -> Self {
        let n = arch.layout().total;
        Self {
            arch,
            params: vec![0.0; n],
            version: 0,
        }
    }

    /// Fan-in scaled uniform weights; small output heads so the initial
    /// policy is close to uniform; LSTM forget-gate bias 1; snake critic
    /// output bias 0.1 so its ReLU starts active.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout();
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (k, b) in layout.blocks.iter().enumerate() {
            let r = layout.range(k);
            let slice = &mut params[r];
            let is_bias = b.name.ends_with(".b");
            let head = matches!(b.name.as_str(), "policy.w" | "value.w" | "aux.w")
                || is_output_layer(&arch, &b.name);
            if is_bias {
                if b.name == "lstm.b" {
                    let h = b.rows / 4;
                    slice[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
                }
                if b.name.starts_with("critic.") && is_output_layer(&arch, &b.name) {
                    slice.iter_mut().for_each(|v| *v = 0.1);
                }
                continue;
            }
            let limit = if b.name.starts_with("lstm.") {
                1.0 / (b.cols as f64).sqrt()
            } else if head {
                0.1 / (b.cols as f64).sqrt()
            } else {
                (6.0 / b.cols as f64).sqrt()
            };
            for v in slice.iter_mut() {
                *v = rng.random_range(-limit..limit);
            }
        }
        Ok(Self {
            arch,
            params,
            version: 0,
        })
    }

    pub fn layout(&self) -> Layout {
        self.arch.layout()
    }
}

fn is_output_layer(arch: &Architecture, name: &str) -> bool {
    match arch {
        Architecture::Feedforward(s) => {
            let last = s.hidden.len();
            name == format!("actor.{last}.w")
                || name == format!("actor.{last}.b")
                || name == format!("critic.{last}.w")
                || name == format!("critic.{last}.b")
        }
        Architecture::Recurrent(_) => false,
    }
}
