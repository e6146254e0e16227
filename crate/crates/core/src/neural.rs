//! A small dense Q-network built from scratch: one hidden layer with linear
//! activation, four outputs, squared-error training on the selected action's
//! value, and RMSprop updates.
//!
//! Parameter layout is fixed and documented for the checkpoint format:
//! hidden weights row-major `[hidden][input]`, hidden bias, output weights
//! row-major `[4][hidden]`, output bias.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Number of output units, one Q-value per action.
pub const OUTPUT_DIM: usize = 4;

/// Checkpoint container version.
const CHECKPOINT_VERSION: u32 = 1;

/// Output head. The softmax head mirrors the reference architecture; the
/// linear head leaves the logits unbounded so they can represent Bellman
/// targets of arbitrary magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadMode {
    Linear,
    Softmax,
}

impl Default for HeadMode {
    fn default() -> Self {
        HeadMode::Linear
    }
}

impl std::fmt::Display for HeadMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HeadMode::Linear => f.write_str("linear"),
            HeadMode::Softmax => f.write_str("softmax"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NeuralError {
    DimensionMismatch { expected: usize, got: usize },
    EmptyBatch,
    NonFiniteGradient,
    NonFiniteTarget,
    BadActionIndex(usize),
}

impl std::fmt::Display for NeuralError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::DimensionMismatch { expected, got } => {
                write!(f, "input has length {got}, expected {expected}")
            }
            Self::EmptyBatch => write!(f, "training batch is empty"),
            Self::NonFiniteGradient => write!(f, "gradient is not finite; training diverged"),
            Self::NonFiniteTarget => write!(f, "training target is not finite"),
            Self::BadActionIndex(a) => write!(f, "action index {a} out of range 0..4"),
        }
    }
}

impl std::error::Error for NeuralError {}

#[derive(Debug, Clone, PartialEq)]
pub enum FormatError {
    Io(String),
    Parse(String),
    UnsupportedVersion(u32),
    ShapeMismatch(String),
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(e) => write!(f, "checkpoint io error: {e}"),
            Self::Parse(e) => write!(f, "checkpoint parse error: {e}"),
            Self::UnsupportedVersion(v) => write!(f, "unsupported checkpoint version {v}"),
            Self::ShapeMismatch(what) => write!(f, "checkpoint shape mismatch: {what}"),
        }
    }
}

impl std::error::Error for FormatError {}

/// Two-layer dense Q-network.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub head_mode: HeadMode,
    /// Hidden weights, row-major `[hidden_dim][input_dim]`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Output weights, row-major `[OUTPUT_DIM][hidden_dim]`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// One training example: input, the action whose Q-value is regressed, and
/// its target value.
#[derive(Debug, Clone, Copy)]
pub struct TrainExample<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub target: f64,
}

/// Parameter gradients, same layout as the network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl QNetwork {
    /// Glorot-uniform weights (`±sqrt(6 / (fan_in + fan_out))`), zero biases.
    /// Draw order is fixed (w1 row-major, then w2 row-major) so a seeded rng
    /// reproduces the parameters bit for bit.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, head_mode: HeadMode, rng: &mut R) -> Self {
        let limit1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let limit2 = (6.0 / (hidden_dim + OUTPUT_DIM) as f64).sqrt();
        let w1 = (0..hidden_dim * input_dim)
            .map(|_| rng.gen_range(-limit1..limit1))
            .collect();
        let w2 = (0..OUTPUT_DIM * hidden_dim)
            .map(|_| rng.gen_range(-limit2..limit2))
            .collect();
        Self {
            input_dim,
            hidden_dim,
            head_mode,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; OUTPUT_DIM],
        }
    }

    /// All-zero parameters; useful for tests with hand-set weights.
    pub fn zeros(input_dim: usize, hidden_dim: usize, head_mode: HeadMode) -> Self {
        Self {
            input_dim,
            hidden_dim,
            head_mode,
            w1: vec![0.0; hidden_dim * input_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; OUTPUT_DIM * hidden_dim],
            b2: vec![0.0; OUTPUT_DIM],
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        let mut h = self.b1.clone();
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *hj += acc;
        }
        h
    }

    fn logits_from_hidden(&self, h: &[f64]) -> [f64; OUTPUT_DIM] {
        let mut logits = [0.0; OUTPUT_DIM];
        for (k, logit) in logits.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
            let mut acc = self.b2[k];
            for (w, hj) in row.iter().zip(h) {
                acc += w * hj;
            }
            *logit = acc;
        }
        logits
    }

    /// Q-values for an observation: softmax of the logits in softmax mode,
    /// the raw logits otherwise.
    pub fn forward(&self, x: &[f64]) -> Result<[f64; OUTPUT_DIM], NeuralError> {
        if x.len() != self.input_dim {
            return Err(NeuralError::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let h = self.hidden(x);
        let logits = self.logits_from_hidden(&h);
        Ok(match self.head_mode {
            HeadMode::Linear => logits,
            HeadMode::Softmax => softmax(logits),
        })
    }

    /// Mean squared error of the selected-action outputs against targets.
    pub fn batch_loss(&self, batch: &[TrainExample<'_>]) -> Result<f64, NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let mut total = 0.0;
        for ex in batch {
            if ex.action >= OUTPUT_DIM {
                return Err(NeuralError::BadActionIndex(ex.action));
            }
            let q = self.forward(ex.input)?;
            let diff = q[ex.action] - ex.target;
            total += diff * diff;
        }
        Ok(total / batch.len() as f64)
    }

    /// Analytic gradients of [`Self::batch_loss`] with respect to every
    /// parameter. Only the selected action's output carries loss, so in
    /// linear mode exactly one logit per example receives gradient; the
    /// softmax head couples all four through the normalizer.
    pub fn gradients(&self, batch: &[TrainExample<'_>]) -> Result<(f64, Gradients), NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let mut grads = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        };
        let inv_batch = 1.0 / batch.len() as f64;
        let mut total_loss = 0.0;
        for ex in batch {
            if ex.action >= OUTPUT_DIM {
                return Err(NeuralError::BadActionIndex(ex.action));
            }
            if !ex.target.is_finite() {
                return Err(NeuralError::NonFiniteTarget);
            }
            if ex.input.len() != self.input_dim {
                return Err(NeuralError::DimensionMismatch {
                    expected: self.input_dim,
                    got: ex.input.len(),
                });
            }
            let h = self.hidden(ex.input);
            let logits = self.logits_from_hidden(&h);
            let mut dlogits = [0.0; OUTPUT_DIM];
            match self.head_mode {
                HeadMode::Linear => {
                    let diff = logits[ex.action] - ex.target;
                    total_loss += diff * diff * inv_batch;
                    dlogits[ex.action] = 2.0 * diff * inv_batch;
                }
                HeadMode::Softmax => {
                    let q = softmax(logits);
                    let diff = q[ex.action] - ex.target;
                    total_loss += diff * diff * inv_batch;
                    let upstream = 2.0 * diff * inv_batch;
                    for (k, d) in dlogits.iter_mut().enumerate() {
                        let kronecker = if k == ex.action { 1.0 } else { 0.0 };
                        *d = upstream * q[ex.action] * (kronecker - q[k]);
                    }
                }
            }
            // Backprop through the output layer into the hidden vector.
            let mut dh = vec![0.0; self.hidden_dim];
            for k in 0..OUTPUT_DIM {
                let d = dlogits[k];
                if d == 0.0 {
                    continue;
                }
                grads.b2[k] += d;
                let w2_row = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
                let g2_row = &mut grads.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
                for j in 0..self.hidden_dim {
                    g2_row[j] += d * h[j];
                    dh[j] += d * w2_row[j];
                }
            }
            // Hidden activation is the identity, so dh passes straight through.
            for j in 0..self.hidden_dim {
                let d = dh[j];
                if d == 0.0 {
                    continue;
                }
                grads.b1[j] += d;
                let g1_row = &mut grads.w1[j * self.input_dim..(j + 1) * self.input_dim];
                for (g, xi) in g1_row.iter_mut().zip(ex.input) {
                    *g += d * xi;
                }
            }
        }
        let finite = grads.w1.iter().all(|g| g.is_finite())
            && grads.b1.iter().all(|g| g.is_finite())
            && grads.w2.iter().all(|g| g.is_finite())
            && grads.b2.iter().all(|g| g.is_finite());
        if !finite || !total_loss.is_finite() {
            return Err(NeuralError::NonFiniteGradient);
        }
        Ok((total_loss, grads))
    }

    /// One training step: compute gradients, apply one RMSprop update, and
    /// return the pre-update mean loss.
    pub fn train_step(
        &mut self,
        opt: &mut RmsPropState,
        batch: &[TrainExample<'_>],
    ) -> Result<f64, NeuralError> {
        let (loss, grads) = self.gradients(batch)?;
        opt.apply(self, &grads);
        Ok(loss)
    }

    /// Writes a self-describing JSON checkpoint. Parameters round-trip bit
    /// for bit (shortest-representation float encoding).
    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            head_mode: self.head_mode,
            w1: self.w1.clone(),
            b1: self.b1.clone(),
            w2: self.w2.clone(),
            b2: self.b2.clone(),
        };
        let body = serde_json::to_string(&file).map_err(|e| FormatError::Parse(e.to_string()))?;
        fs::write(path, body).map_err(|e| FormatError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let body = fs::read_to_string(path).map_err(|e| FormatError::Io(e.to_string()))?;
        let file: CheckpointFile =
            serde_json::from_str(&body).map_err(|e| FormatError::Parse(e.to_string()))?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(FormatError::Parse(format!("unknown format tag {:?}", file.format)));
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(FormatError::UnsupportedVersion(file.version));
        }
        if file.w1.len() != file.hidden_dim * file.input_dim {
            return Err(FormatError::ShapeMismatch("hidden weights".into()));
        }
        if file.b1.len() != file.hidden_dim {
            return Err(FormatError::ShapeMismatch("hidden bias".into()));
        }
        if file.w2.len() != OUTPUT_DIM * file.hidden_dim {
            return Err(FormatError::ShapeMismatch("output weights".into()));
        }
        if file.b2.len() != OUTPUT_DIM {
            return Err(FormatError::ShapeMismatch("output bias".into()));
        }
        Ok(Self {
            input_dim: file.input_dim,
            hidden_dim: file.hidden_dim,
            head_mode: file.head_mode,
            w1: file.w1,
            b1: file.b1,
            w2: file.w2,
            b2: file.b2,
        })
    }
}

const CHECKPOINT_FORMAT: &str = "skycover-qnet";

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    input_dim: usize,
    hidden_dim: usize,
    head_mode: HeadMode,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Numerically stable softmax with max-logit subtraction.
fn softmax(logits: [f64; OUTPUT_DIM]) -> [f64; OUTPUT_DIM] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; OUTPUT_DIM];
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(&logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

/// RMSprop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    /// Step settings tuned on the 5x5 coverage baseline: the textbook
    /// 1e-3/0.9 pair tracks the Bellman targets (magnitudes in the hundreds)
    /// too slowly to solve episodes within a 500-step budget.
    fn default() -> Self {
        Self { learning_rate: 0.3, rho: 0.5, epsilon: 1e-8 }
    }
}

/// Per-parameter mean-square accumulators plus the step settings.
#[derive(Debug, Clone)]
pub struct RmsPropState {
    pub config: RmsPropConfig,
    pub v_w1: Vec<f64>,
    pub v_b1: Vec<f64>,
    pub v_w2: Vec<f64>,
    pub v_b2: Vec<f64>,
}

impl RmsPropState {
    pub fn for_network(net: &QNetwork, config: RmsPropConfig) -> Self {
        Self {
            config,
            v_w1: vec![0.0; net.w1.len()],
            v_b1: vec![0.0; net.b1.len()],
            v_w2: vec![0.0; net.w2.len()],
            v_b2: vec![0.0; net.b2.len()],
        }
    }

    fn apply(&mut self, net: &mut QNetwork, grads: &Gradients) {
        let c = self.config;
        rmsprop_update(&mut net.w1, &grads.w1, &mut self.v_w1, c);
        rmsprop_update(&mut net.b1, &grads.b1, &mut self.v_b1, c);
        rmsprop_update(&mut net.w2, &grads.w2, &mut self.v_w2, c);
        rmsprop_update(&mut net.b2, &grads.b2, &mut self.v_b2, c);
    }
}

/// One RMSprop update for a scalar parameter:
/// `v' = rho*v + (1-rho)*g^2; p' = p - lr*g/(sqrt(v') + eps)`.
pub fn rmsprop_scalar(param: f64, grad: f64, v: f64, config: RmsPropConfig) -> (f64, f64) {
    let v_next = config.rho * v + (1.0 - config.rho) * grad * grad;
    let param_next = param - config.learning_rate * grad / (v_next.sqrt() + config.epsilon);
    (param_next, v_next)
}

/// Elementwise RMSprop over a parameter slice.
pub fn rmsprop_update(params: &mut [f64], grads: &[f64], v: &mut [f64], config: RmsPropConfig) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), v.len());
    for ((p, &g), vi) in params.iter_mut().zip(grads).zip(v.iter_mut()) {
        let (pn, vn) = rmsprop_scalar(*p, g, *vi, config);
        *p = pn;
        *vi = vn;
    }
}
