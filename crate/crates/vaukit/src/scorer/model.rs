//! The desk-scale anomaly scorer: a temporal encoder with global and
//! windowed local self-attention, optional dual memory banks, and a logistic
//! score head.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::autograd::{NodeId, Tape};
use super::FeatureSequence;
use crate::timeline::ScoreTimeline;
use crate::{Error, Result};

/// Architecture knobs. Defaults follow the small reference configuration:
/// single-head global plus single-head local attention (window 5), one
/// encoder block, hidden dim 32, 8 prototypes per memory bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Input feature dimension D.
    pub input_dim: usize,
    /// Encoder hidden dimension.
    pub hidden: usize,
    /// Local-attention half-window W: frame i attends to [i-W, i+W].
    pub window: usize,
    /// Prototype count per memory bank.
    pub memory_slots: usize,
    /// Disable to score raw features with the logistic head alone.
    pub use_encoder: bool,
    pub use_global_attention: bool,
    pub use_local_attention: bool,
    /// Dual memory banks plus read concatenation before the head.
    pub use_memory: bool,
}

impl ModelConfig {
    pub fn new(input_dim: usize) -> Self {
        ModelConfig {
            input_dim,
            hidden: 32,
            window: 5,
            memory_slots: 8,
            use_encoder: true,
            use_global_attention: true,
            use_local_attention: true,
            use_memory: true,
        }
    }

    /// Logistic regression on raw features; no encoder, no banks.
    pub fn logistic(input_dim: usize) -> Self {
        ModelConfig {
            input_dim,
            hidden: 0,
            window: 0,
            memory_slots: 0,
            use_encoder: false,
            use_global_attention: false,
            use_local_attention: false,
            use_memory: false,
        }
    }

    /// Dimension of the per-frame encoding the head and banks see.
    pub fn encoding_dim(&self) -> usize {
        if self.use_encoder {
            self.hidden
        } else {
            self.input_dim
        }
    }

    fn head_input_dim(&self) -> usize {
        let e = self.encoding_dim();
        if self.use_memory {
            3 * e
        } else {
            e
        }
    }

    /// Named parameter shapes, in storage order.
    pub fn param_shapes(&self) -> Vec<(&'static str, (usize, usize))> {
        let mut shapes = Vec::new();
        let (d, h) = (self.input_dim, self.hidden);
        if self.use_encoder {
            shapes.push(("embed_w", (d, h)));
            shapes.push(("embed_b", (1, h)));
            if self.use_global_attention {
                shapes.push(("global_q", (h, h)));
                shapes.push(("global_k", (h, h)));
                shapes.push(("global_v", (h, h)));
            }
            if self.use_local_attention {
                shapes.push(("local_q", (h, h)));
                shapes.push(("local_k", (h, h)));
                shapes.push(("local_v", (h, h)));
            }
            shapes.push(("out_w", (h, h)));
            shapes.push(("out_b", (1, h)));
        }
        let e = self.encoding_dim();
        if self.use_memory {
            shapes.push(("memory_normal", (self.memory_slots, e)));
            shapes.push(("memory_abnormal", (self.memory_slots, e)));
        }
        shapes.push(("head_w", (self.head_input_dim(), 1)));
        shapes.push(("head_b", (1, 1)));
        shapes
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::parameter("input_dim must be >= 1"));
        }
        if self.use_encoder && self.hidden == 0 {
            return Err(Error::parameter("hidden must be >= 1 when the encoder is enabled"));
        }
        if self.use_memory && self.memory_slots == 0 {
            return Err(Error::parameter("memory_slots must be >= 1 when banks are enabled"));
        }
        Ok(())
    }
}

/// Trainable scorer. Parameters are stored in the order given by
/// [`ModelConfig::param_shapes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    pub config: ModelConfig,
    pub params: Vec<Array2<f64>>,
}

/// Node ids of the interesting intermediate tensors of one forward pass.
#[derive(Debug)]
pub struct Forward {
    /// (T x 1) scores in (0, 1).
    pub scores: NodeId,
    /// (T x enc) per-frame encoding.
    pub encoding: NodeId,
    /// (T x enc) read from the normal bank, when banks are enabled.
    pub normal_read: Option<NodeId>,
    pub abnormal_read: Option<NodeId>,
    /// Ids of the parameter input nodes, aligned with `model.params`.
    pub param_ids: Vec<NodeId>,
}

impl ScorerModel {
    /// Seeded initialization: uniform in +-1/sqrt(fan_in) per matrix,
    /// biases zero.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = config
            .param_shapes()
            .iter()
            .map(|&(name, (rows, cols))| {
                if name.ends_with("_b") {
                    Array2::zeros((rows, cols))
                } else {
                    let bound = 1.0 / (rows as f64).sqrt();
                    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
                }
            })
            .collect();
        Ok(ScorerModel { config, params })
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.config.param_shapes().iter().position(|&(n, _)| n == name)
    }

    fn check_features(&self, features: &Array2<f64>) -> Result<()> {
        if features.ncols() != self.config.input_dim {
            return Err(Error::Shape {
                expected: format!("D={}", self.config.input_dim),
                actual: format!("D={}", features.ncols()),
            });
        }
        if features.nrows() == 0 {
            return Err(Error::validation("empty feature sequence"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite feature entry"));
        }
        Ok(())
    }

    /// Builds the forward graph on `tape`. Parameters enter as inputs so the
    /// caller can read their gradients after `backward`.
    pub fn forward(&self, tape: &mut Tape, features: &Array2<f64>) -> Result<Forward> {
        self.check_features(features)?;
        let t_len = features.nrows();
        let param_ids: Vec<NodeId> =
            self.params.iter().map(|p| tape.input(p.clone())).collect();
        let shapes = self.config.param_shapes();
        let id_of = |name: &str| -> NodeId {
            param_ids[shapes.iter().position(|&(n, _)| n == name).expect("known param")]
        };

        let x0 = tape.input(features.clone());
        let encoding = if self.config.use_encoder {
            let h = tape.matmul(x0, id_of("embed_w"));
            let h = tape.add_row(h, id_of("embed_b"));
            let h = tape.tanh(h);
            let scale = 1.0 / (self.config.hidden as f64).sqrt();
            let mut acc = h;
            if self.config.use_global_attention {
                let att = attention(tape, h, id_of("global_q"), id_of("global_k"), id_of("global_v"), scale, None);
                acc = tape.add(acc, att);
            }
            if self.config.use_local_attention {
                let mask = local_mask(t_len, self.config.window);
                let att = attention(tape, h, id_of("local_q"), id_of("local_k"), id_of("local_v"), scale, Some(&mask));
                acc = tape.add(acc, att);
            }
            let out = tape.matmul(acc, id_of("out_w"));
            let out = tape.add_row(out, id_of("out_b"));
            tape.tanh(out)
        } else {
            x0
        };

        let (head_in, normal_read, abnormal_read) = if self.config.use_memory {
            let rn = memory_read(tape, encoding, id_of("memory_normal"));
            let ra = memory_read(tape, encoding, id_of("memory_abnormal"));
            (tape.concat_cols(&[encoding, rn, ra]), Some(rn), Some(ra))
        } else {
            (encoding, None, None)
        };

        let logits = tape.matmul(head_in, id_of("head_w"));
        let logits = tape.add_row(logits, id_of("head_b"));
        let scores = tape.sigmoid(logits);
        Ok(Forward { scores, encoding, normal_read, abnormal_read, param_ids })
    }

    /// Scores a feature sequence. Deterministic; one score per frame.
    pub fn score(&self, f: &FeatureSequence, stride: u32, fps: f64) -> Result<ScoreTimeline> {
        let mut tape = Tape::new();
        let fwd = self.forward(&mut tape, &f.features)?;
        let scores = tape.value(fwd.scores).column(0).to_vec();
        ScoreTimeline::new(scores, stride, fps)
    }
}

/// Single-head attention: softmax((XQ)(XK)^T * scale + mask) (XV).
fn attention(
    tape: &mut Tape,
    x: NodeId,
    wq: NodeId,
    wk: NodeId,
    wv: NodeId,
    scale: f64,
    mask: Option<&Array2<f64>>,
) -> NodeId {
    let q = tape.matmul(x, wq);
    let k = tape.matmul(x, wk);
    let v = tape.matmul(x, wv);
    let logits = tape.matmul_nt(q, k);
    let logits = tape.scale(logits, scale);
    let probs = tape.softmax_rows(logits, mask);
    tape.matmul(probs, v)
}

/// Additive attention mask restricting frame i to [i-w, i+w].
fn local_mask(t_len: usize, w: usize) -> Array2<f64> {
    Array2::from_shape_fn((t_len, t_len), |(i, j)| {
        if i.abs_diff(j) <= w {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    })
}

/// Attention read over bank prototypes: softmax(E B^T) B.
fn memory_read(tape: &mut Tape, encoding: NodeId, bank: NodeId) -> NodeId {
    let logits = tape.matmul_nt(encoding, bank);
    let probs = tape.softmax_rows(logits, None);
    tape.matmul(probs, bank)
}
