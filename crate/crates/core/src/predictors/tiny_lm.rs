//! A minimal feed-forward softmax next-token model.
//!
//! Inputs are one-hot token slots for the trailing `context_len` positions
//! (absent positions in short contexts contribute nothing), followed by one
//! tanh hidden layer and a softmax readout. Updates are single plain-SGD
//! steps on the cross-entropy at a fixed learning rate; gradients are
//! analytic and checked against finite differences in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::PredictorError;

/// Weight-initialization half-range; small enough that a fresh model is
/// near-uniform over the vocabulary.
const INIT_RANGE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TinyLm {
    vocab_size: u32,
    context_len: usize,
    hidden: usize,
    bit_width: u8,
    seed: u64,
    learning_rate: f64,
    /// hidden x (context_len * vocab), row-major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// vocab x hidden, row-major.
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl TinyLm {
    pub const DEFAULT_LEARNING_RATE: f64 = 0.05;

    pub fn new(
        vocab_size: u32,
        context_len: usize,
        hidden: usize,
        bit_width: u8,
        seed: u64,
        learning_rate: f64,
    ) -> Result<Self, PredictorError> {
        if vocab_size < 2 {
            return Err(PredictorError::VocabTooSmall {
                got: vocab_size,
                min: 2,
            });
        }
        if context_len == 0 {
            return Err(PredictorError::ZeroDimension {
                name: "context_len",
            });
        }
        if hidden == 0 {
            return Err(PredictorError::ZeroDimension { name: "hidden" });
        }
        if bit_width == 0 || bit_width > 64 {
            return Err(PredictorError::BadWeightWidth(bit_width));
        }
        let v = vocab_size as usize;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * INIT_RANGE)
                .collect()
        };
        Ok(TinyLm {
            vocab_size,
            context_len,
            hidden,
            bit_width,
            seed,
            learning_rate,
            w1: draw(hidden * context_len * v),
            b1: draw(hidden),
            w2: draw(v * hidden),
            b2: draw(v),
        })
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn context_len(&self) -> usize {
        self.context_len
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn bit_width(&self) -> u8 {
        self.bit_width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn weight_count(&self) -> u64 {
        (self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()) as u64
    }

    pub fn param_bits(&self) -> u64 {
        self.weight_count() * u64::from(self.bit_width)
    }

    /// Active one-hot input columns for the trailing context window.
    fn active_columns(&self, context: &[u32]) -> Vec<usize> {
        let v = self.vocab_size as usize;
        let take = context.len().min(self.context_len);
        let tail = &context[context.len() - take..];
        // Right-align the window so "last token" is always the same slot.
        let offset = self.context_len - take;
        tail.iter()
            .enumerate()
            .map(|(i, &t)| (offset + i) * v + t as usize)
            .collect()
    }

    fn forward(&self, context: &[u32]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let cols = self.active_columns(context);
        let in_dim = self.context_len * self.vocab_size as usize;
        let mut hidden = self.b1.clone();
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = j * in_dim;
            for &c in &cols {
                *h += self.w1[row + c];
            }
            *h = h.tanh();
        }
        let v = self.vocab_size as usize;
        let mut logits = self.b2.clone();
        for (o, l) in logits.iter_mut().enumerate() {
            let row = o * self.hidden;
            for (j, hj) in hidden.iter().enumerate() {
                *l += self.w2[row + j] * hj;
            }
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = vec![0.0; v];
        let mut total = 0.0;
        for (p, &l) in probs.iter_mut().zip(&logits) {
            *p = (l - max).exp();
            total += *p;
        }
        for p in &mut probs {
            *p /= total;
        }
        (cols, hidden, probs)
    }

    pub fn predict(&self, context: &[u32]) -> Vec<f64> {
        self.forward(context).2
    }

    /// One SGD step on the cross-entropy at `(context, token)`.
    pub fn update(&mut self, context: &[u32], token: u32) {
        let (cols, hidden, probs) = self.forward(context);
        let v = self.vocab_size as usize;
        let lr = self.learning_rate;

        // d(loss)/d(logit_o) = p_o - [o == token], loss in nats.
        let mut dlogits = probs;
        dlogits[token as usize] -= 1.0;

        // Backprop into the hidden layer with the pre-update weights.
        let mut dhidden = vec![0.0; self.hidden];
        for (o, &dl) in dlogits.iter().enumerate() {
            let row = o * self.hidden;
            for (j, dh) in dhidden.iter_mut().enumerate() {
                *dh += self.w2[row + j] * dl;
            }
        }

        for (o, &dl) in dlogits.iter().enumerate() {
            let row = o * self.hidden;
            for (j, &hj) in hidden.iter().enumerate() {
                self.w2[row + j] -= lr * dl * hj;
            }
            self.b2[o] -= lr * dl;
        }

        let in_dim = self.context_len * v;
        for j in 0..self.hidden {
            let dpre = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
            let row = j * in_dim;
            for &c in &cols {
                self.w1[row + c] -= lr * dpre;
            }
            self.b1[j] -= lr * dpre;
        }
    }

    pub fn loss_bits(&self, context: &[u32], token: u32) -> f64 {
        -self.predict(context)[token as usize].log2()
    }

    /// Quantize every weight tensor to `width` bits: symmetric uniform with
    /// per-tensor max-abs scale (sign times scale at width 1). Weights keep
    /// their f64 storage but take only representable values; `param_bits`
    /// accounting moves to the new width.
    pub fn quantize_weights(&mut self, width: u8) -> Result<(), PredictorError> {
        if width == 0 || width > 64 {
            return Err(PredictorError::BadWeightWidth(width));
        }
        let tensors: [&mut Vec<f64>; 4] = [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2];
        for tensor in tensors {
            let scale = tensor.iter().fold(0.0f64, |m, &w| m.max(w.abs()));
            if scale == 0.0 {
                continue;
            }
            if width == 1 {
                for w in tensor.iter_mut() {
                    *w = if *w >= 0.0 { scale } else { -scale };
                }
            } else {
                let qmax = ((1u128 << (width - 1)) - 1) as f64;
                let delta = scale / qmax;
                for w in tensor.iter_mut() {
                    *w = (*w / delta).round() * delta;
                }
            }
        }
        self.bit_width = width;
        Ok(())
    }

    // Flat-weight access in (w1, b1, w2, b2) order, for the
    // finite-difference gradient oracle.

    pub(crate) fn flat_len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub(crate) fn flat_get(&self, i: usize) -> f64 {
        let mut i = i;
        for tensor in [&self.w1, &self.b1, &self.w2, &self.b2] {
            if i < tensor.len() {
                return tensor[i];
            }
            i -= tensor.len();
        }
        panic!("flat index out of range");
    }

    pub(crate) fn flat_add(&mut self, i: usize, delta: f64) {
        let w = self.flat_get(i);
        self.flat_set(i, w + delta);
    }

    pub(crate) fn flat_set(&mut self, i: usize, value: f64) {
        let mut i = i;
        for tensor in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            if i < tensor.len() {
                tensor[i] = value;
                return;
            }
            i -= tensor.len();
        }
        panic!("flat index out of range");
    }

    /// Analytic gradient of the loss in nats at `(context, token)`, flat in
    /// (w1, b1, w2, b2) order.
    pub(crate) fn gradient_nats_flat(&self, context: &[u32], token: u32) -> Vec<f64> {
        let (cols, hidden, probs) = self.forward(context);
        let v = self.vocab_size as usize;
        let in_dim = self.context_len * v;

        let mut dlogits = probs;
        dlogits[token as usize] -= 1.0;

        let mut dhidden = vec![0.0; self.hidden];
        for (o, &dl) in dlogits.iter().enumerate() {
            let row = o * self.hidden;
            for (j, dh) in dhidden.iter_mut().enumerate() {
                *dh += self.w2[row + j] * dl;
            }
        }

        let mut g_w1 = vec![0.0; self.w1.len()];
        let mut g_b1 = vec![0.0; self.b1.len()];
        for j in 0..self.hidden {
            let dpre = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
            let row = j * in_dim;
            for &c in &cols {
                g_w1[row + c] = dpre;
            }
            g_b1[j] = dpre;
        }
        let mut g_w2 = vec![0.0; self.w2.len()];
        let mut g_b2 = vec![0.0; self.b2.len()];
        for (o, &dl) in dlogits.iter().enumerate() {
            let row = o * self.hidden;
            for (j, &hj) in hidden.iter().enumerate() {
                g_w2[row + j] = dl * hj;
            }
            g_b2[o] = dl;
        }

        let mut flat = g_w1;
        flat.extend(g_b1);
        flat.extend(g_w2);
        flat.extend(g_b2);
        flat
    }
}
