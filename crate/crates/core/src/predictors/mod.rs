//! Autoregressive predictors with online updates and parameter accounting.
//!
//! A [`Predictor`] exposes a strictly positive next-token distribution for
//! any context, an online `update` applied after a token is observed, and a
//! `param_bits` accounting `N` that is fixed by the architecture and never
//! changes under updates. Four kinds are provided:
//!
//! - `Uniform`: the knowledge-free baseline, `N = 0`.
//! - `NGram`: additive-smoothed counts over a pre-declared dense table of
//!   `|V|^(k+1)` cells; `N` counts allocated cells times the count width.
//! - `TinyLm`: a seeded one-hidden-layer softmax network trained by plain
//!   SGD with analytic gradients.
//! - `Oracle`: the true conditional distribution of a known [`Source`] —
//!   the in-lab stand-in for a baseline that codes at the source entropy.
//!
//! The average cross-entropy of a stream under a predictor, in bits per
//! token, equals the ideal codelength per token of the codec module; the two
//! are computed by separate accumulation paths and checked against each
//! other in tests.

mod checkpoint;
mod ngram;
mod oracle;
mod tiny_lm;

pub use checkpoint::{checkpoint_hash, from_checkpoint_bytes, to_checkpoint_bytes};
pub use ngram::NGramPredictor;
pub use oracle::OraclePredictor;
pub use tiny_lm::TinyLm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sources::{Source, TokenStream};

/// Losses above this are clamped (probability underflow guard).
pub const MAX_TOKEN_BITS: f64 = 64.0;

/// Smallest probability a predictor may assign before the distribution is
/// re-floored to keep every symbol codable.
pub const MIN_PROB: f64 = 1e-12;

/// Errors from predictor construction and evaluation.
#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("vocab_size must be at least {min}, got {got}")]
    VocabTooSmall { got: u32, min: u32 },
    #[error("token {token} out of range for vocab_size {vocab_size}")]
    TokenOutOfRange { token: u32, vocab_size: u32 },
    #[error("smoothing alpha must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("count width must be in 1..=32 bits, got {0}")]
    BadCountWidth(u8),
    #[error("weight width must be in 1..=64 bits, got {0}")]
    BadWeightWidth(u8),
    #[error("n-gram table needs {cells} cells, over the {max}-cell limit")]
    TableTooLarge { cells: u128, max: usize },
    #[error("model dimension {name} must be at least 1")]
    ZeroDimension { name: &'static str },
    #[error("stream vocab {stream} does not match predictor vocab {predictor}")]
    VocabMismatch { stream: u32, predictor: u32 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("oracle source error: {0}")]
    Source(#[from] crate::sources::SourceError),
}

/// Whether `update` runs after each coded token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    /// The predictor state is left untouched; identical contexts always get
    /// identical distributions.
    Frozen,
    /// Prequential evaluation: the predictor is updated on each token right
    /// after that token is scored/coded.
    Online,
}

/// An autoregressive next-token model.
#[derive(Debug, Clone)]
pub enum Predictor {
    Uniform(UniformPredictor),
    NGram(NGramPredictor),
    TinyLm(TinyLm),
    Oracle(OraclePredictor),
}

/// Maximum-entropy baseline: every token gets `1/|V|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformPredictor {
    vocab_size: u32,
}

impl UniformPredictor {
    pub fn new(vocab_size: u32) -> Result<Self, PredictorError> {
        if vocab_size < 2 {
            return Err(PredictorError::VocabTooSmall {
                got: vocab_size,
                min: 2,
            });
        }
        Ok(UniformPredictor { vocab_size })
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }
}

/// The uniform baseline predictor (`N = 0`).
pub fn uniform_predictor(vocab_size: u32) -> Result<Predictor, PredictorError> {
    Ok(Predictor::Uniform(UniformPredictor::new(vocab_size)?))
}

/// Additive-smoothed n-gram predictor with a dense 32-bit count table.
pub fn ngram_predictor(vocab_size: u32, order: usize, alpha: f64) -> Result<Predictor, PredictorError> {
    Ok(Predictor::NGram(NGramPredictor::new(
        vocab_size, order, alpha, 32,
    )?))
}

/// Seeded one-hidden-layer softmax LM trained by plain SGD.
pub fn tiny_lm_predictor(
    vocab_size: u32,
    context_len: usize,
    hidden: usize,
    bit_width: u8,
    seed: u64,
) -> Result<Predictor, PredictorError> {
    Ok(Predictor::TinyLm(TinyLm::new(
        vocab_size,
        context_len,
        hidden,
        bit_width,
        seed,
        TinyLm::DEFAULT_LEARNING_RATE,
    )?))
}

/// Oracle over a known source: predicts with the true conditionals.
pub fn oracle_predictor(source: &Source) -> Result<Predictor, PredictorError> {
    Ok(Predictor::Oracle(OraclePredictor::new(source.clone())?))
}

impl Predictor {
    pub fn vocab_size(&self) -> u32 {
        match self {
            Predictor::Uniform(p) => p.vocab_size,
            Predictor::NGram(p) => p.vocab_size(),
            Predictor::TinyLm(p) => p.vocab_size(),
            Predictor::Oracle(p) => p.vocab_size(),
        }
    }

    /// Short label for reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Predictor::Uniform(_) => "uniform",
            Predictor::NGram(_) => "ngram",
            Predictor::TinyLm(_) => "tinylm",
            Predictor::Oracle(_) => "oracle",
        }
    }

    /// Next-token distribution given `context` (the stream prefix).
    ///
    /// The output has `|V|` strictly positive entries summing to 1 within
    /// 1e-9; each kind reads only the trailing window its architecture
    /// defines.
    pub fn predict(&self, context: &[u32]) -> Result<Vec<f64>, PredictorError> {
        let vocab = self.vocab_size();
        for &t in context {
            if t >= vocab {
                return Err(PredictorError::TokenOutOfRange {
                    token: t,
                    vocab_size: vocab,
                });
            }
        }
        let mut probs = match self {
            Predictor::Uniform(p) => vec![1.0 / f64::from(p.vocab_size); p.vocab_size as usize],
            Predictor::NGram(p) => p.predict(context),
            Predictor::TinyLm(p) => p.predict(context),
            Predictor::Oracle(p) => p.predict(context),
        };
        floor_distribution(&mut probs);
        Ok(probs)
    }

    /// Apply one observation `(context, token)`. No-op for `Uniform` and
    /// `Oracle`; a count increment for `NGram`; one SGD step for `TinyLm`.
    /// `param_bits` is unchanged by updates for every kind.
    pub fn update(&mut self, context: &[u32], token: u32) -> Result<(), PredictorError> {
        let vocab = self.vocab_size();
        if token >= vocab {
            return Err(PredictorError::TokenOutOfRange {
                token,
                vocab_size: vocab,
            });
        }
        match self {
            Predictor::Uniform(_) | Predictor::Oracle(_) => {}
            Predictor::NGram(p) => p.update(context, token),
            Predictor::TinyLm(p) => p.update(context, token),
        }
        Ok(())
    }

    /// Parameter size `N` in bits: allocated cells times their width.
    /// Deterministic for a fixed architecture; baselines report 0.
    pub fn param_bits(&self) -> u64 {
        match self {
            Predictor::Uniform(_) | Predictor::Oracle(_) => 0,
            Predictor::NGram(p) => p.param_bits(),
            Predictor::TinyLm(p) => p.param_bits(),
        }
    }
}

/// Re-floor a distribution so every entry is at least [`MIN_PROB`].
///
/// Leaves already-positive distributions untouched; oracle rows for
/// deterministic sources carry exact zeros that must become codable.
pub(crate) fn floor_distribution(probs: &mut [f64]) {
    if probs.iter().all(|&p| p >= MIN_PROB) {
        return;
    }
    let v = probs.len() as f64;
    let denom = 1.0 + MIN_PROB * v;
    for p in probs.iter_mut() {
        *p = (*p + MIN_PROB) / denom;
    }
}

/// Result of scoring a stream under a predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEntropyReport {
    /// Average loss in bits per token (`ell(f_a)` of the loss-equivalence
    /// identity).
    pub average_bits: f64,
    /// Total bits, `sum_t -log2 P(x_t | x_{1:t-1})`.
    pub total_bits: f64,
    /// Per-token losses in coding order.
    pub per_token_bits: Vec<f64>,
    /// Tokens whose loss hit the [`MAX_TOKEN_BITS`] underflow clamp.
    pub clamped_tokens: u64,
}

/// Average cross-entropy of `stream` under `predictor`, in bits per token.
///
/// In [`UpdateMode::Online`] the predictor is updated after each scored
/// token (prequential evaluation); in [`UpdateMode::Frozen`] it is left
/// untouched.
pub fn average_cross_entropy(
    stream: &TokenStream,
    predictor: &mut Predictor,
    mode: UpdateMode,
) -> Result<CrossEntropyReport, PredictorError> {
    if stream.vocab_size() != predictor.vocab_size() {
        return Err(PredictorError::VocabMismatch {
            stream: stream.vocab_size(),
            predictor: predictor.vocab_size(),
        });
    }
    let tokens = stream.tokens();
    let mut per_token_bits = Vec::with_capacity(tokens.len());
    let mut total = 0.0f64;
    let mut clamped = 0u64;
    for (t, &token) in tokens.iter().enumerate() {
        let context = &tokens[..t];
        let probs = predictor.predict(context)?;
        let mut bits = -probs[token as usize].log2();
        if bits > MAX_TOKEN_BITS {
            bits = MAX_TOKEN_BITS;
            clamped += 1;
        }
        per_token_bits.push(bits);
        total += bits;
        if mode == UpdateMode::Online {
            predictor.update(context, token)?;
        }
    }
    let average = if tokens.is_empty() {
        0.0
    } else {
        total / tokens.len() as f64
    };
    Ok(CrossEntropyReport {
        average_bits: average,
        total_bits: total,
        per_token_bits,
        clamped_tokens: clamped,
    })
}

/// Declarative predictor description, as used in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PredictorSpec {
    Uniform,
    Ngram {
        order: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_count_bits")]
        count_bits: u8,
    },
    Tinylm {
        context_len: usize,
        hidden: usize,
        #[serde(default = "default_bit_width")]
        bit_width: u8,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
    },
    Oracle,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_count_bits() -> u8 {
    32
}

fn default_bit_width() -> u8 {
    32
}

fn default_learning_rate() -> f64 {
    TinyLm::DEFAULT_LEARNING_RATE
}

impl PredictorSpec {
    /// Instantiate the predictor for the given vocabulary. `Oracle` needs
    /// the generating source.
    pub fn build(
        &self,
        vocab_size: u32,
        source: Option<&Source>,
    ) -> Result<Predictor, PredictorError> {
        match self {
            PredictorSpec::Uniform => uniform_predictor(vocab_size),
            PredictorSpec::Ngram {
                order,
                alpha,
                count_bits,
            } => Ok(Predictor::NGram(NGramPredictor::new(
                vocab_size,
                *order,
                *alpha,
                *count_bits,
            )?)),
            PredictorSpec::Tinylm {
                context_len,
                hidden,
                bit_width,
                seed,
                learning_rate,
            } => Ok(Predictor::TinyLm(TinyLm::new(
                vocab_size,
                *context_len,
                *hidden,
                *bit_width,
                *seed,
                *learning_rate,
            )?)),
            PredictorSpec::Oracle => {
                let source = source.ok_or_else(|| {
                    PredictorError::Checkpoint(
                        "oracle predictor requires a known source".to_string(),
                    )
                })?;
                oracle_predictor(source)
            }
        }
    }
}
