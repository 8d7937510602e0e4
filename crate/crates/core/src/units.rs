//! Unit conventions and conversions.
//!
//! All entropies and codelengths are held in bits (log base 2) internally.
//! Quantities logged in nats convert on ingestion via [`nats_to_bits`].

use serde::{Deserialize, Serialize};

/// Boltzmann constant in joules per kelvin (2019 SI exact value).
pub const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;

/// Unit of a logged loss value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossUnit {
    Bits,
    Nats,
}

/// Convert nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Convert bits to nats.
pub fn bits_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_nat_is_log2e_bits() {
        assert!((nats_to_bits(1.0) - std::f64::consts::LOG2_E).abs() < 1e-15);
    }

    #[test]
    fn conversion_roundtrip() {
        let x = 3.25;
        assert!((bits_to_nats(nats_to_bits(x)) - x).abs() < 1e-12);
    }
}
