//! Shared probability quantization for encoder and decoder.
//!
//! Predictor probabilities become integer frequencies over a fixed total of
//! `2^16`, every symbol floored at frequency 1 so any token stays codable.
//! Both coding directions call this one routine on the same predictor
//! output, which makes the coded distribution bit-identical on both sides —
//! prequential decoding breaks under any divergence.

/// Log2 of the frequency total.
pub const FREQ_BITS: u32 = 16;

/// All frequencies sum to exactly this.
pub const FREQ_TOTAL: u32 = 1 << FREQ_BITS;

/// Quantize a probability vector to integer frequencies summing to
/// [`FREQ_TOTAL`], each at least 1.
///
/// Floors `p * 2^16`, then settles the residual deterministically: a
/// deficit goes one unit each to the symbols with the largest fractional
/// remainders (ties to the lower index); a surplus is taken from the
/// largest frequencies first, never pushing a symbol below 1.
pub fn quantize_distribution(probs: &[f64]) -> Vec<u32> {
    let v = probs.len();
    debug_assert!(v >= 1 && v as u32 <= FREQ_TOTAL);
    let mut freqs = Vec::with_capacity(v);
    let mut remainders = Vec::with_capacity(v);
    let mut sum: u64 = 0;
    for (i, &p) in probs.iter().enumerate() {
        let raw = p * f64::from(FREQ_TOTAL);
        let floor = raw.floor();
        let f = (floor as u32).max(1);
        remainders.push((raw - floor, i));
        sum += u64::from(f);
        freqs.push(f);
    }
    match sum.cmp(&u64::from(FREQ_TOTAL)) {
        std::cmp::Ordering::Less => {
            let mut deficit = (u64::from(FREQ_TOTAL) - sum) as usize;
            // Largest remainder first, index ascending on ties.
            remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, i) in &remainders {
                if deficit == 0 {
                    break;
                }
                freqs[i] += 1;
                deficit -= 1;
            }
            // More deficit than symbols: spread the rest round-robin.
            while deficit > 0 {
                for f in freqs.iter_mut() {
                    if deficit == 0 {
                        break;
                    }
                    *f += 1;
                    deficit -= 1;
                }
            }
        }
        std::cmp::Ordering::Greater => {
            let mut surplus = (sum - u64::from(FREQ_TOTAL)) as u32;
            // Largest frequency first, index ascending on ties.
            let mut order: Vec<usize> = (0..v).collect();
            order.sort_by(|&a, &b| freqs[b].cmp(&freqs[a]).then(a.cmp(&b)));
            for &i in &order {
                if surplus == 0 {
                    break;
                }
                let take = surplus.min(freqs[i] - 1);
                freqs[i] -= take;
                surplus -= take;
            }
            debug_assert_eq!(surplus, 0, "surplus exceeds reducible mass");
        }
        std::cmp::Ordering::Equal => {}
    }
    debug_assert_eq!(freqs.iter().map(|&f| u64::from(f)).sum::<u64>(), u64::from(FREQ_TOTAL));
    freqs
}

/// Cumulative bounds `(cum_lo, cum_hi)` of `symbol` under `freqs`.
pub fn symbol_interval(freqs: &[u32], symbol: usize) -> (u32, u32) {
    let mut cum = 0u32;
    for &f in &freqs[..symbol] {
        cum += f;
    }
    (cum, cum + freqs[symbol])
}

/// The symbol whose cumulative interval contains `target`.
pub fn symbol_of_target(freqs: &[u32], target: u32) -> (usize, u32, u32) {
    let mut cum = 0u32;
    for (i, &f) in freqs.iter().enumerate() {
        if target < cum + f {
            return (i, cum, cum + f);
        }
        cum += f;
    }
    // target < FREQ_TOTAL and frequencies sum to FREQ_TOTAL, so the loop
    // always returns; keep the last symbol as a defensive fallback.
    let last = freqs.len() - 1;
    (last, cum - freqs[last], cum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(freqs: &[u32]) -> u64 {
        freqs.iter().map(|&f| u64::from(f)).sum()
    }

    #[test]
    fn exact_powers_of_two_quantize_exactly() {
        for v in [2usize, 4, 256] {
            let probs = vec![1.0 / v as f64; v];
            let freqs = quantize_distribution(&probs);
            assert!(freqs.iter().all(|&f| f == FREQ_TOTAL / v as u32));
        }
    }

    #[test]
    fn near_delta_keeps_every_symbol_codable() {
        let mut probs = vec![1e-15; 256];
        probs[17] = 1.0 - 255e-15;
        let freqs = quantize_distribution(&probs);
        assert_eq!(total(&freqs), u64::from(FREQ_TOTAL));
        assert!(freqs.iter().all(|&f| f >= 1));
        assert_eq!(freqs[17], FREQ_TOTAL - 255);
    }

    #[test]
    fn interval_lookup_agrees_with_search() {
        let probs = [0.9, 0.05, 0.04, 0.01];
        let freqs = quantize_distribution(&probs);
        assert_eq!(total(&freqs), u64::from(FREQ_TOTAL));
        for s in 0..4 {
            let (lo, hi) = symbol_interval(&freqs, s);
            let (s2, lo2, hi2) = symbol_of_target(&freqs, lo);
            assert_eq!((s2, lo2, hi2), (s, lo, hi));
            let (s3, ..) = symbol_of_target(&freqs, hi - 1);
            assert_eq!(s3, s);
        }
    }
}
