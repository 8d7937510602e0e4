//! The source oracle: predicts with the true conditional distribution.
//!
//! Only meaningful in the lab, where the generating source is known; it
//! stands in for a baseline that codes the stream at the source entropy
//! rate. For a Markov source the first `k` predictions condition on the
//! stationary context distribution (streams are sampled with a stationary
//! start), so the oracle is exact from the first token.

use crate::sources::{ContextChain, Source, SourceKind};

use super::PredictorError;

#[derive(Debug, Clone)]
pub struct OraclePredictor {
    source: Source,
    /// Context machinery for Markov sources, with the stationary
    /// distribution precomputed.
    chain: Option<(ContextChain, Vec<f64>)>,
}

impl OraclePredictor {
    pub fn new(source: Source) -> Result<Self, PredictorError> {
        let chain = match source.context_chain() {
            Some(chain) => {
                let pi = chain.stationary()?;
                Some((chain, pi))
            }
            None => None,
        };
        Ok(OraclePredictor { source, chain })
    }

    pub fn vocab_size(&self) -> u32 {
        self.source.vocab_size()
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn predict(&self, context: &[u32]) -> Vec<f64> {
        let v = self.source.vocab_size() as usize;
        match self.source.kind() {
            SourceKind::Iid { probabilities } => probabilities.clone(),
            SourceKind::Deterministic { cycle } => {
                let mut probs = vec![0.0; v];
                probs[cycle[context.len() % cycle.len()] as usize] = 1.0;
                probs
            }
            SourceKind::Markov { order, transitions } => {
                if context.len() >= *order {
                    let tail = &context[context.len() - order..];
                    match transitions.get(tail) {
                        Some(row) => row.clone(),
                        // Context unreachable under this source (foreign
                        // stream): no conditional is defined, fall back to
                        // ignorance.
                        None => vec![1.0 / v as f64; v],
                    }
                } else {
                    self.prefix_conditional(context, v)
                }
            }
        }
    }

    /// `P(next | first t tokens)` for `t < k`, marginalizing the stationary
    /// context distribution over contexts that start with the prefix.
    fn prefix_conditional(&self, prefix: &[u32], v: usize) -> Vec<f64> {
        let (chain, pi) = self.chain.as_ref().expect("markov oracle has chain");
        let mut mass = vec![0.0f64; v];
        let mut total = 0.0f64;
        for state in 0..chain.len() {
            let ctx = chain.context(state);
            if ctx.starts_with(prefix) {
                mass[ctx[prefix.len()] as usize] += pi[state];
                total += pi[state];
            }
        }
        if total <= 0.0 {
            return vec![1.0 / v as f64; v];
        }
        for m in &mut mass {
            *m /= total;
        }
        mass
    }
}
