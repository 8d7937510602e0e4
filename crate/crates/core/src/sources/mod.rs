//! Synthetic token sources with exactly computable entropy rates.
//!
//! A [`Source`] is a generative specification over a fixed vocabulary:
//! independent draws (`Iid`), a finite-order Markov chain (`Markov`), or a
//! repeating cycle (`Deterministic`). Every kind admits a closed-form
//! per-token entropy rate in bits, which is the ground truth against which
//! codelengths and capacity accounting are checked:
//!
//! - Iid: `H = -sum_i p_i log2 p_i`
//! - Markov: `H = -sum_c pi(c) sum_j P(j|c) log2 P(j|c)` with `pi` the
//!   stationary distribution over length-k contexts
//! - Deterministic: `H = 0`
//!
//! Sampling is a pure function of `(source, length, seed)`; the generator is
//! ChaCha12 seeded from the 64-bit seed, and categorical draws use an
//! inverse-CDF walk, so streams reproduce bit-identically across platforms.
//! Markov streams start from a context drawn from the stationary
//! distribution, so they are stationary from the first token.

mod markov;
mod stream;

pub use markov::ContextChain;
pub use stream::TokenStream;

use std::collections::BTreeMap;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for probability vectors summing to one.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// Errors from source validation, sampling, and entropy estimation.
#[derive(Debug, Error)]
pub enum SourceError {
    #[error("probability vector sums to {sum}, expected 1 within {PROB_SUM_TOLERANCE}")]
    ProbabilitySum { sum: f64 },
    #[error("probability at index {index} is {value}, expected a finite value >= 0")]
    BadProbability { index: usize, value: f64 },
    #[error("probability vector has {got} entries, expected vocab_size = {expected}")]
    WrongRowLength { got: usize, expected: usize },
    #[error("vocab_size must be at least 1, got {0}")]
    VocabTooSmall(u32),
    #[error("token {token} out of range for vocab_size {vocab_size}")]
    TokenOutOfRange { token: u32, vocab_size: u32 },
    #[error("markov order must be at least 1")]
    ZeroOrder,
    #[error("markov transition map is empty")]
    EmptyTransitions,
    #[error("context {context:?} has length {got}, expected order = {expected}")]
    WrongContextLength {
        context: Vec<u32>,
        got: usize,
        expected: usize,
    },
    #[error(
        "context {context:?} is reachable (from {from:?} on token {token}) but missing from the transition map"
    )]
    MissingContext {
        from: Vec<u32>,
        token: u32,
        context: Vec<u32>,
    },
    #[error(
        "chain has no unique stationary distribution: {count} disjoint closed context classes: {classes}"
    )]
    MultipleClosedClasses { count: usize, classes: String },
    #[error("stationary distribution did not converge within {max_iters} iterations")]
    StationaryDiverged { max_iters: usize },
    #[error("deterministic cycle must be non-empty")]
    EmptyCycle,
    #[error("stream length must be at least 1")]
    EmptyLength,
    #[error("stream is empty")]
    EmptyStream,
    #[error("stream length {len} must exceed estimator order {order}")]
    StreamTooShort { len: usize, order: usize },
    #[error("bad stream file magic: expected {expected:?}, got {got:?}")]
    BadMagic { expected: [u8; 8], got: [u8; 8] },
    #[error("unsupported stream file token width {0}")]
    BadTokenWidth(u8),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("source JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Generative kind of a [`Source`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SourceKind {
    /// Independent draws from a fixed distribution over the vocabulary.
    Iid { probabilities: Vec<f64> },
    /// Order-k Markov chain; `transitions` maps each length-k context to a
    /// distribution over the next token. Context keys serialize as
    /// comma-separated token lists (for example `"0,1"`).
    Markov {
        order: usize,
        #[serde(with = "context_map")]
        transitions: BTreeMap<Vec<u32>, Vec<f64>>,
    },
    /// Fixed repeating token cycle, starting at the first element.
    Deterministic { cycle: Vec<u32> },
}

/// A validated generative source over a fixed vocabulary.
///
/// Construction (direct or via JSON) checks that every probability vector is
/// non-negative and sums to 1 within [`PROB_SUM_TOLERANCE`], that all tokens
/// are in range, and that a Markov transition map covers every context
/// reachable from its own entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SourceDoc", into = "SourceDoc")]
pub struct Source {
    vocab_size: u32,
    kind: SourceKind,
}

/// Serde mirror of [`Source`]; deserialization funnels through validation.
#[derive(Serialize, Deserialize)]
struct SourceDoc {
    vocab_size: u32,
    kind: SourceKind,
}

impl TryFrom<SourceDoc> for Source {
    type Error = SourceError;
    fn try_from(doc: SourceDoc) -> Result<Self, SourceError> {
        Source::new(doc.vocab_size, doc.kind)
    }
}

impl From<Source> for SourceDoc {
    fn from(s: Source) -> Self {
        SourceDoc {
            vocab_size: s.vocab_size,
            kind: s.kind,
        }
    }
}

mod context_map {
    //! Comma-separated context keys for the Markov transition map.

    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<Vec<u32>, Vec<f64>>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let keyed: BTreeMap<String, &Vec<f64>> = map
            .iter()
            .map(|(ctx, row)| {
                let key = ctx
                    .iter()
                    .map(|t| t.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                (key, row)
            })
            .collect();
        serde::Serialize::serialize(&keyed, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<Vec<u32>, Vec<f64>>, D::Error> {
        let keyed: BTreeMap<String, Vec<f64>> = Deserialize::deserialize(de)?;
        keyed
            .into_iter()
            .map(|(key, row)| {
                let ctx = key
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.trim()
                            .parse::<u32>()
                            .map_err(|e| D::Error::custom(format!("context key {key:?}: {e}")))
                    })
                    .collect::<Result<Vec<u32>, _>>()?;
                Ok((ctx, row))
            })
            .collect()
    }
}

fn validate_prob_row(row: &[f64], vocab_size: u32) -> Result<(), SourceError> {
    if row.len() != vocab_size as usize {
        return Err(SourceError::WrongRowLength {
            got: row.len(),
            expected: vocab_size as usize,
        });
    }
    for (index, &value) in row.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(SourceError::BadProbability { index, value });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(SourceError::ProbabilitySum { sum });
    }
    Ok(())
}

impl Source {
    /// Validate and build a source of the given kind.
    pub fn new(vocab_size: u32, kind: SourceKind) -> Result<Self, SourceError> {
        if vocab_size == 0 {
            return Err(SourceError::VocabTooSmall(vocab_size));
        }
        match &kind {
            SourceKind::Iid { probabilities } => validate_prob_row(probabilities, vocab_size)?,
            SourceKind::Markov { order, transitions } => {
                if *order == 0 {
                    return Err(SourceError::ZeroOrder);
                }
                if transitions.is_empty() {
                    return Err(SourceError::EmptyTransitions);
                }
                for (context, row) in transitions {
                    if context.len() != *order {
                        return Err(SourceError::WrongContextLength {
                            context: context.clone(),
                            got: context.len(),
                            expected: *order,
                        });
                    }
                    for &t in context {
                        if t >= vocab_size {
                            return Err(SourceError::TokenOutOfRange {
                                token: t,
                                vocab_size,
                            });
                        }
                    }
                    validate_prob_row(row, vocab_size)?;
                }
                // Closure: every context reachable with positive probability
                // must itself be in the map.
                for (context, row) in transitions {
                    for (token, &p) in row.iter().enumerate() {
                        if p > 0.0 {
                            let mut next = context[1..].to_vec();
                            next.push(token as u32);
                            if !transitions.contains_key(&next) {
                                return Err(SourceError::MissingContext {
                                    from: context.clone(),
                                    token: token as u32,
                                    context: next,
                                });
                            }
                        }
                    }
                }
            }
            SourceKind::Deterministic { cycle } => {
                if cycle.is_empty() {
                    return Err(SourceError::EmptyCycle);
                }
                for &t in cycle {
                    if t >= vocab_size {
                        return Err(SourceError::TokenOutOfRange {
                            token: t,
                            vocab_size,
                        });
                    }
                }
            }
        }
        Ok(Source { vocab_size, kind })
    }

    /// IID source; vocabulary size is the length of the probability vector.
    pub fn iid(probabilities: Vec<f64>) -> Result<Self, SourceError> {
        let vocab = probabilities.len() as u32;
        Source::new(vocab, SourceKind::Iid { probabilities })
    }

    /// Uniform IID source over `vocab_size` tokens.
    pub fn iid_uniform(vocab_size: u32) -> Result<Self, SourceError> {
        if vocab_size == 0 {
            return Err(SourceError::VocabTooSmall(vocab_size));
        }
        let p = 1.0 / f64::from(vocab_size);
        Source::iid(vec![p; vocab_size as usize])
    }

    /// Order-k Markov source from an explicit transition map.
    pub fn markov(
        vocab_size: u32,
        order: usize,
        transitions: BTreeMap<Vec<u32>, Vec<f64>>,
    ) -> Result<Self, SourceError> {
        Source::new(vocab_size, SourceKind::Markov { order, transitions })
    }

    /// Binary order-1 chain that keeps its current symbol with probability
    /// `stay`. The stationary distribution is uniform by symmetry.
    pub fn binary_switch(stay: f64) -> Result<Self, SourceError> {
        let mut transitions = BTreeMap::new();
        transitions.insert(vec![0], vec![stay, 1.0 - stay]);
        transitions.insert(vec![1], vec![1.0 - stay, stay]);
        Source::markov(2, 1, transitions)
    }

    /// Deterministic repeating cycle.
    pub fn deterministic(vocab_size: u32, cycle: Vec<u32>) -> Result<Self, SourceError> {
        Source::new(vocab_size, SourceKind::Deterministic { cycle })
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    /// Serialize the source spec as a JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("source serializes")
    }

    /// Parse and validate a source spec from JSON.
    pub fn from_json(text: &str) -> Result<Self, SourceError> {
        Ok(serde_json::from_str(text)?)
    }

    /// The context chain of a Markov source (contexts, rows, stationary
    /// distribution machinery). `None` for other kinds.
    pub fn context_chain(&self) -> Option<ContextChain> {
        match &self.kind {
            SourceKind::Markov { transitions, .. } => Some(ContextChain::new(
                self.vocab_size as usize,
                transitions.clone(),
            )),
            _ => None,
        }
    }
}

/// How an entropy figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EntropyMethod {
    /// Closed form from a known source.
    Exact,
    /// Empirical conditional entropy from context/next-token counts.
    Plugin { order: usize },
    /// Mean loss over the first records of a training trace (Corollary-style
    /// estimate; carries a caveat because initialization is not free).
    InitialLoss { window: usize },
}

/// An entropy rate in bits per token, tagged with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Bits per token.
    pub value: f64,
    #[serde(flatten)]
    pub method: EntropyMethod,
    /// Standard error in bits per token, when the method provides one.
    pub standard_error: Option<f64>,
}

/// Draw `length` tokens from `source`. Pure in `(source, length, seed)`.
pub fn sample_stream(source: &Source, length: usize, seed: u64) -> Result<TokenStream, SourceError> {
    if length == 0 {
        return Err(SourceError::EmptyLength);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut tokens = Vec::with_capacity(length);
    match source.kind() {
        SourceKind::Iid { probabilities } => {
            for _ in 0..length {
                tokens.push(sample_categorical(probabilities, &mut rng));
            }
        }
        SourceKind::Markov { order, transitions } => {
            let chain = source.context_chain().expect("markov kind");
            let pi = chain.stationary()?;
            let start = sample_weighted_index(&pi, &mut rng);
            let mut context = chain.context(start).to_vec();
            for &t in context.iter().take(length.min(*order)) {
                tokens.push(t);
            }
            while tokens.len() < length {
                let row = &transitions[&context];
                let next = sample_categorical(row, &mut rng);
                tokens.push(next);
                context.remove(0);
                context.push(next);
            }
        }
        SourceKind::Deterministic { cycle } => {
            for i in 0..length {
                tokens.push(cycle[i % cycle.len()]);
            }
        }
    }
    TokenStream::new(source.vocab_size(), tokens)
}

/// Inverse-CDF draw from a probability row.
fn sample_categorical(probabilities: &[f64], rng: &mut ChaCha12Rng) -> u32 {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        cum += p;
        if u < cum {
            return i as u32;
        }
    }
    // Float slop can leave u marginally above the final cumulative sum.
    (probabilities.len() - 1) as u32
}

/// Inverse-CDF draw over arbitrary non-negative weights summing to ~1.
fn sample_weighted_index(weights: &[f64], rng: &mut ChaCha12Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights.len() - 1
}

/// Exact per-token entropy rate of a source, in bits.
pub fn exact_entropy_rate(source: &Source) -> Result<EntropyEstimate, SourceError> {
    let value = match source.kind() {
        SourceKind::Iid { probabilities } => row_entropy_bits(probabilities),
        SourceKind::Markov { .. } => {
            let chain = source.context_chain().expect("markov kind");
            let pi = chain.stationary()?;
            let mut h = 0.0;
            for state in 0..chain.len() {
                if pi[state] > 0.0 {
                    h += pi[state] * row_entropy_bits(chain.row(state));
                }
            }
            h
        }
        SourceKind::Deterministic { .. } => 0.0,
    };
    Ok(EntropyEstimate {
        value,
        method: EntropyMethod::Exact,
        standard_error: None,
    })
}

/// `-sum p log2 p` with the `0 log 0 = 0` convention.
fn row_entropy_bits(row: &[f64]) -> f64 {
    row.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Empirical conditional entropy of the given order, in bits per token.
///
/// Counts (length-`order` context, next token) pairs over the stream and
/// evaluates `-1/M sum_{c,j} n_cj log2(n_cj / n_c)` where `M` is the number
/// of windows.
pub fn plugin_entropy(stream: &TokenStream, order: usize) -> Result<EntropyEstimate, SourceError> {
    if stream.is_empty() {
        return Err(SourceError::EmptyStream);
    }
    if stream.len() <= order {
        return Err(SourceError::StreamTooShort {
            len: stream.len(),
            order,
        });
    }
    let tokens = stream.tokens();
    let mut counts: HashMap<&[u32], HashMap<u32, u64>> = HashMap::new();
    for t in order..tokens.len() {
        let context = &tokens[t - order..t];
        *counts.entry(context).or_default().entry(tokens[t]).or_insert(0) += 1;
    }
    let windows = (tokens.len() - order) as f64;
    let mut h = 0.0;
    for next_counts in counts.values() {
        let total: u64 = next_counts.values().sum();
        for &n in next_counts.values() {
            let p = n as f64 / total as f64;
            h -= (n as f64) * p.log2();
        }
    }
    Ok(EntropyEstimate {
        value: h / windows,
        method: EntropyMethod::Plugin { order },
        standard_error: None,
    })
}

#[cfg(test)]
mod tests;
