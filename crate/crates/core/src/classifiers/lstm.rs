//! Single-layer LSTM over frozen embeddings with a softmax head on the
//! final hidden state. Gate blocks are stacked in the order input, forget,
//! cell candidate, output.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_labels, log_sum_exp, softmax_in_place, FeatureContract, Features};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Per-step gradients are rescaled to at most this global L2 norm.
    pub clip_norm: f64,
    /// Longer sequences keep only their first `max_seq_len` tokens.
    pub max_seq_len: usize,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            epochs: 30,
            learning_rate: 0.05,
            clip_norm: 5.0,
            max_seq_len: 200,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.epochs == 0 || self.max_seq_len == 0 {
            return Err(Error::Config("lstm hidden_dim, epochs and max_seq_len must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::Config("lstm learning_rate and clip_norm must be positive".into()));
        }
        Ok(())
    }
}

/// Trainable weights, or a gradient with the same shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// Input weights, `4H x D`.
    pub w: Array2<f64>,
    /// Recurrent weights, `4H x H`.
    pub u: Array2<f64>,
    /// Gate biases, `4H`.
    pub b: Array1<f64>,
    /// Head weights, `C x H`.
    pub head_w: Array2<f64>,
    /// Head biases, `C`.
    pub head_b: Array1<f64>,
}

impl LstmParams {
    /// Weights uniform in `±1/√H`, forget-gate bias 1, other biases 0.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, n_classes: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut draw = |r: usize, c: usize| Array2::from_shape_simple_fn((r, c), || rng.random_range(-bound..bound));
        let w = draw(4 * hidden, input_dim);
        let u = draw(4 * hidden, hidden);
        let head_w = draw(n_classes, hidden);
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        Self {
            w,
            u,
            b,
            head_w,
            head_b: Array1::zeros(n_classes),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            w: Array2::zeros(self.w.raw_dim()),
            u: Array2::zeros(self.u.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
            head_w: Array2::zeros(self.head_w.raw_dim()),
            head_b: Array1::zeros(self.head_b.raw_dim()),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn squared_norm(&self) -> f64 {
        let sq = |v: &f64| v * v;
        self.w.iter().map(sq).sum::<f64>()
            + self.u.iter().map(sq).sum::<f64>()
            + self.b.iter().map(sq).sum::<f64>()
            + self.head_w.iter().map(sq).sum::<f64>()
            + self.head_b.iter().map(sq).sum::<f64>()
    }

    fn scaled_add(&mut self, a: f64, other: &Self) {
        self.w.scaled_add(a, &other.w);
        self.u.scaled_add(a, &other.u);
        self.b.scaled_add(a, &other.b);
        self.head_w.scaled_add(a, &other.head_w);
        self.head_b.scaled_add(a, &other.head_b);
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Step {
    i: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
    o: Array1<f64>,
    c_prev: Array1<f64>,
    tanh_c: Array1<f64>,
    h_prev: Array1<f64>,
}

struct Forward {
    inputs: Array2<f64>,
    steps: Vec<Step>,
    h: Array1<f64>,
    logits: Array1<f64>,
}

fn forward(p: &LstmParams, embeddings: &Array2<f64>, seq: &[usize]) -> Forward {
    let hd = p.hidden_dim();
    let inputs = embeddings.select(Axis(0), seq);
    let zx = inputs.dot(&p.w.t());
    let mut h = Array1::<f64>::zeros(hd);
    let mut c = Array1::<f64>::zeros(hd);
    let mut steps = Vec::with_capacity(seq.len());
    for t in 0..seq.len() {
        let z = &zx.row(t) + &p.u.dot(&h) + &p.b;
        let i = z.slice(s![0..hd]).mapv(sigmoid);
        let f = z.slice(s![hd..2 * hd]).mapv(sigmoid);
        let g = z.slice(s![2 * hd..3 * hd]).mapv(f64::tanh);
        let o = z.slice(s![3 * hd..]).mapv(sigmoid);
        let c_new = &f * &c + &i * &g;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        steps.push(Step {
            i,
            f,
            g,
            o,
            c_prev: std::mem::replace(&mut c, c_new),
            tanh_c,
            h_prev: std::mem::replace(&mut h, h_new),
        });
    }
    let logits = p.head_w.dot(&h) + &p.head_b;
    Forward {
        inputs,
        steps,
        h,
        logits,
    }
}

fn outer(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Array2<f64> {
    let a2 = a.insert_axis(Axis(1));
    let b2 = b.insert_axis(Axis(0));
    a2.dot(&b2)
}

/// Cross-entropy of one sequence and its gradient by backpropagation
/// through time. Embeddings are constants.
pub fn loss_and_gradient(p: &LstmParams, embeddings: &Array2<f64>, seq: &[usize], label: usize) -> (f64, LstmParams) {
    let hd = p.hidden_dim();
    let fw = forward(p, embeddings, seq);
    let mut logits = fw.logits.to_vec();
    let loss = log_sum_exp(&logits) - logits[label];
    softmax_in_place(&mut logits);
    logits[label] -= 1.0;
    let dlogits = Array1::from(logits);

    let mut grad = p.zeros_like();
    grad.head_w = outer(dlogits.view(), fw.h.view());
    grad.head_b = dlogits.clone();
    let mut dh = p.head_w.t().dot(&dlogits);
    let mut dc = Array1::<f64>::zeros(hd);
    let mut dz_all = Array2::<f64>::zeros((seq.len(), 4 * hd));
    for (t, st) in fw.steps.iter().enumerate().rev() {
        let d_o = &dh * &st.tanh_c;
        let dct = &dc + &(&dh * &st.o * &st.tanh_c.mapv(|v| 1.0 - v * v));
        let di = &dct * &st.g;
        let dg = &dct * &st.i;
        let df = &dct * &st.c_prev;
        dc = &dct * &st.f;
        let mut dz = dz_all.row_mut(t);
        dz.slice_mut(s![0..hd]).assign(&(&di * &st.i.mapv(|v| v * (1.0 - v))));
        dz.slice_mut(s![hd..2 * hd]).assign(&(&df * &st.f.mapv(|v| v * (1.0 - v))));
        dz.slice_mut(s![2 * hd..3 * hd]).assign(&(&dg * &st.g.mapv(|v| 1.0 - v * v)));
        dz.slice_mut(s![3 * hd..]).assign(&(&d_o * &st.o.mapv(|v| v * (1.0 - v))));
        dh = p.u.t().dot(&dz_all.row(t));
    }
    if !seq.is_empty() {
        let mut h_prev = Array2::<f64>::zeros((seq.len(), hd));
        for (mut row, st) in h_prev.rows_mut().into_iter().zip(&fw.steps) {
            row.assign(&st.h_prev);
        }
        grad.b = dz_all.sum_axis(Axis(0));
        grad.w = dz_all.t().dot(&fw.inputs);
        grad.u = dz_all.t().dot(&h_prev);
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    params: LstmParams,
    /// Frozen copy of the embedding vectors the sequences index into.
    embeddings: Array2<f64>,
    max_seq_len: usize,
}

fn truncated(seq: &[usize], max_len: usize) -> &[usize] {
    &seq[..seq.len().min(max_len)]
}

fn mean_loss(p: &LstmParams, embeddings: &Array2<f64>, seqs: &[&[usize]], labels: &[usize]) -> f64 {
    let losses = par::map_range(seqs.len(), |n| {
        let fw = forward(p, embeddings, seqs[n]);
        let logits = fw.logits.as_slice().expect("contiguous");
        log_sum_exp(logits) - logits[labels[n]]
    });
    losses.iter().sum::<f64>() / seqs.len() as f64
}

impl Lstm {
    /// Per-example SGD in a freshly shuffled order each epoch. The trace
    /// holds the mean training loss before training and after each epoch.
    pub fn fit(
        x: &Features,
        labels: &[usize],
        n_classes: usize,
        table: &EmbeddingTable,
        config: &LstmConfig,
        seed: u64,
    ) -> Result<(Self, Vec<f64>)> {
        config.validate()?;
        x.expect(FeatureContract::TokenSequence)?;
        let Features::Sequences(seqs) = x else { unreachable!() };
        if seqs.is_empty() {
            return Err(Error::EmptyCorpus("no training sequences".into()));
        }
        check_labels(labels, seqs.len(), n_classes)?;
        if let Some(&bad) = seqs.iter().flatten().find(|&&id| id >= table.len()) {
            return Err(Error::TokenNotFound(format!("embedding row {bad}")));
        }
        let embeddings = table.vectors().clone();
        let seqs: Vec<&[usize]> = seqs.iter().map(|s| truncated(s, config.max_seq_len)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = LstmParams::init(table.dim(), config.hidden_dim, n_classes, &mut rng);
        let mut trace = vec![mean_loss(&params, &embeddings, &seqs, labels)];
        let mut order: Vec<usize> = (0..seqs.len()).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &n in &order {
                let (_, grad) = loss_and_gradient(&params, &embeddings, seqs[n], labels[n]);
                let norm = grad.squared_norm().sqrt();
                let scale = if norm > config.clip_norm { config.clip_norm / norm } else { 1.0 };
                params.scaled_add(-config.learning_rate * scale, &grad);
            }
            let loss = mean_loss(&params, &embeddings, &seqs, labels);
            if !loss.is_finite() {
                return Err(Error::NonFinite("lstm training loss"));
            }
            trace.push(loss);
        }
        Ok((
            Self {
                params,
                embeddings,
                max_seq_len: config.max_seq_len,
            },
            trace,
        ))
    }

    pub fn params(&self) -> &LstmParams {
        &self.params
    }

    pub fn n_classes(&self) -> usize {
        self.params.head_b.len()
    }

    pub fn predict_proba(&self, x: &Features) -> Result<Array2<f64>> {
        x.expect(FeatureContract::TokenSequence)?;
        let Features::Sequences(seqs) = x else { unreachable!() };
        if let Some(&bad) = seqs.iter().flatten().find(|&&id| id >= self.embeddings.nrows()) {
            return Err(Error::TokenNotFound(format!("embedding row {bad}")));
        }
        let rows = par::map(seqs, |s| {
            let mut l = forward(&self.params, &self.embeddings, truncated(s, self.max_seq_len)).logits.to_vec();
            softmax_in_place(&mut l);
            l
        });
        let c = self.n_classes();
        Ok(Array2::from_shape_vec((rows.len(), c), rows.concat()).expect("row lengths match"))
    }
}
