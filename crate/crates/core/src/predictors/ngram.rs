//! Additive-smoothed n-gram counts over a pre-declared dense table.

use super::PredictorError;

/// Cap on dense table size (cells), 256 MiB of 32-bit counts.
pub const MAX_TABLE_CELLS: usize = 1 << 26;

/// Order-k count model: `P(j | c) = (n_cj + alpha) / (n_c + alpha |V|)`.
///
/// The table is dense over all `|V|^k` contexts so the parameter accounting
/// `N = cells * count_width` is fixed at construction, independent of which
/// cells training happens to touch. Contexts shorter than `k` (the first
/// tokens of a stream) fall back to the uniform distribution and are not
/// counted.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramPredictor {
    vocab_size: u32,
    order: usize,
    alpha: f64,
    count_width: u8,
    counts: Vec<u32>,
}

impl NGramPredictor {
    pub fn new(
        vocab_size: u32,
        order: usize,
        alpha: f64,
        count_width: u8,
    ) -> Result<Self, PredictorError> {
        if vocab_size < 2 {
            return Err(PredictorError::VocabTooSmall {
                got: vocab_size,
                min: 2,
            });
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(PredictorError::BadAlpha(alpha));
        }
        if count_width == 0 || count_width > 32 {
            return Err(PredictorError::BadCountWidth(count_width));
        }
        let cells = (u128::from(vocab_size)).pow(order as u32 + 1);
        if cells > MAX_TABLE_CELLS as u128 {
            return Err(PredictorError::TableTooLarge {
                cells,
                max: MAX_TABLE_CELLS,
            });
        }
        Ok(NGramPredictor {
            vocab_size,
            order,
            alpha,
            count_width,
            counts: vec![0; cells as usize],
        })
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn count_width(&self) -> u8 {
        self.count_width
    }

    pub(crate) fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub(crate) fn from_parts(
        vocab_size: u32,
        order: usize,
        alpha: f64,
        count_width: u8,
        counts: Vec<u32>,
    ) -> Result<Self, PredictorError> {
        let mut p = NGramPredictor::new(vocab_size, order, alpha, count_width)?;
        if counts.len() != p.counts.len() {
            return Err(PredictorError::Checkpoint(format!(
                "n-gram table length {} does not match {} cells",
                counts.len(),
                p.counts.len()
            )));
        }
        p.counts = counts;
        Ok(p)
    }

    /// Row offset of the trailing-k context, or `None` when the context is
    /// shorter than the order.
    fn row_of(&self, context: &[u32]) -> Option<usize> {
        if context.len() < self.order {
            return None;
        }
        let tail = &context[context.len() - self.order..];
        let mut idx = 0usize;
        for &t in tail {
            idx = idx * self.vocab_size as usize + t as usize;
        }
        Some(idx * self.vocab_size as usize)
    }

    pub fn predict(&self, context: &[u32]) -> Vec<f64> {
        let v = self.vocab_size as usize;
        match self.row_of(context) {
            None => vec![1.0 / v as f64; v],
            Some(row) => {
                let counts = &self.counts[row..row + v];
                let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
                let denom = total as f64 + self.alpha * v as f64;
                counts
                    .iter()
                    .map(|&c| (c as f64 + self.alpha) / denom)
                    .collect()
            }
        }
    }

    /// Increment one `(context, token)` cell, saturating at the count
    /// width's maximum.
    pub fn update(&mut self, context: &[u32], token: u32) {
        if let Some(row) = self.row_of(context) {
            let cap = self.count_cap();
            let cell = &mut self.counts[row + token as usize];
            if *cell < cap {
                *cell += 1;
            }
        }
    }

    fn count_cap(&self) -> u32 {
        if self.count_width >= 32 {
            u32::MAX
        } else {
            (1u32 << self.count_width) - 1
        }
    }

    pub fn param_bits(&self) -> u64 {
        self.counts.len() as u64 * u64::from(self.count_width)
    }

    /// Truncate counts to `width` bits: shift every count right until the
    /// largest fits, then re-declare the table at the new width. Probability
    /// renormalization is implicit in the smoothed ratio.
    pub fn truncate_counts_to_width(&mut self, width: u8) -> Result<(), PredictorError> {
        if width == 0 || width > 32 {
            return Err(PredictorError::BadCountWidth(width));
        }
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let need = 32 - max.leading_zeros(); // bits to represent max
        let shift = need.saturating_sub(u32::from(width));
        if shift > 0 {
            for c in &mut self.counts {
                *c >>= shift;
            }
        }
        self.count_width = width;
        Ok(())
    }
}
