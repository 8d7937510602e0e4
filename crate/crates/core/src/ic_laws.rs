//! Capacity accounting: conservation, capacity, energy, quantization.
//!
//! The central identity is the conservation form
//! `effective_information = D * (H - L)` — the gap between a baseline
//! codelength `D * H` and the model codelength `D * L` is information that
//! moved into the model — together with the capacity ratio
//! `eta = D * (H - L) / N` for a model of `N` parameter bits. `L` is the
//! prequential (online, training-order) average codelength per token, the
//! unique choice under which `D * L` is an actual transmitted bit count;
//! held-out or post-training losses can be reported alongside but are a
//! different quantity.
//!
//! Out-of-range results are never clamped: negative effective information
//! (the model codes worse than the baseline) and `eta > 1` (the baseline
//! `H` overestimates what the data can teach, or `N` undercounts storage)
//! are real diagnoses and get flags instead of silent repair.
//!
//! The energy side is the Landauer bound `E0 = bits * k_B * T * ln 2`, and
//! the quantization side the pair of width conditions
//! `eta * b <= eta' * b'` (full) and `eta * b <= b'` (necessary, since
//! `eta' <= 1`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sources::{EntropyEstimate, EntropyMethod};
use crate::units::{nats_to_bits, LossUnit, BOLTZMANN_J_PER_K};

/// Caveat attached to every initial-loss entropy estimate: a freshly
/// initialized model already carries information, so the estimate is for
/// estimation purposes only.
pub const INITIAL_LOSS_CAVEAT: &str =
    "initial-loss estimate: initialization already carries information; estimation use only";

#[derive(Debug, Error)]
pub enum IcError {
    #[error("capacity is undefined for N = 0 (no-capacity baseline)")]
    CapacityUndefined,
    #[error("effective information is negative ({bits} bits); resolve the conservation flag before the energy bound")]
    NegativeInformation { bits: f64 },
    #[error("temperature must be positive, got {0} K")]
    BadTemperature(f64),
    #[error("training trace is empty")]
    EmptyTrace,
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("window {window} exceeds trace length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("trace record {index}: tokens_seen {current} does not increase over {previous}")]
    NonMonotoneTrace {
        index: usize,
        previous: u64,
        current: u64,
    },
    #[error("trace record {index}: loss {value} must be finite and >= 0")]
    BadLoss { index: usize, value: f64 },
    #[error("trace record {index} is in nats; convert to bits before capacity accounting")]
    UnitMismatch { index: usize },
    #[error("quantization spec: {0}")]
    BadQuantSpec(String),
}

/// One training-trace record: average loss over the first `tokens_seen`
/// tokens, in the stated unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tokens_seen: u64,
    pub loss: f64,
    pub loss_unit: LossUnit,
}

/// A validated time series of `(tokens_seen, loss)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TraceRecord>", into = "Vec<TraceRecord>")]
pub struct TrainingTrace {
    records: Vec<TraceRecord>,
}

impl TryFrom<Vec<TraceRecord>> for TrainingTrace {
    type Error = IcError;
    fn try_from(records: Vec<TraceRecord>) -> Result<Self, IcError> {
        TrainingTrace::new(records)
    }
}

impl From<TrainingTrace> for Vec<TraceRecord> {
    fn from(t: TrainingTrace) -> Self {
        t.records
    }
}

impl TrainingTrace {
    /// Validate ordering and losses. `tokens_seen` must strictly increase
    /// and losses must be finite and non-negative.
    pub fn new(records: Vec<TraceRecord>) -> Result<Self, IcError> {
        if records.is_empty() {
            return Err(IcError::EmptyTrace);
        }
        let mut previous = 0u64;
        for (index, r) in records.iter().enumerate() {
            if !r.loss.is_finite() || r.loss < 0.0 {
                return Err(IcError::BadLoss {
                    index,
                    value: r.loss,
                });
            }
            if index > 0 && r.tokens_seen <= previous {
                return Err(IcError::NonMonotoneTrace {
                    index,
                    previous,
                    current: r.tokens_seen,
                });
            }
            previous = r.tokens_seen;
        }
        Ok(TrainingTrace { records })
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// A copy with every record converted to bits.
    pub fn to_bits(&self) -> TrainingTrace {
        let records = self
            .records
            .iter()
            .map(|r| TraceRecord {
                tokens_seen: r.tokens_seen,
                loss: match r.loss_unit {
                    LossUnit::Bits => r.loss,
                    LossUnit::Nats => nats_to_bits(r.loss),
                },
                loss_unit: LossUnit::Bits,
            })
            .collect();
        TrainingTrace { records }
    }

    fn ensure_bits(&self) -> Result<(), IcError> {
        for (index, r) in self.records.iter().enumerate() {
            if r.loss_unit != LossUnit::Bits {
                return Err(IcError::UnitMismatch { index });
            }
        }
        Ok(())
    }

    pub fn terminal(&self) -> &TraceRecord {
        self.records.last().expect("trace is non-empty")
    }
}

/// Effective information `D * (H - L)` in bits.
///
/// `H` and `L` are bits per token. The result is signed: a model that codes
/// worse than the baseline yields a negative value, which downstream
/// reports flag rather than clamp.
pub fn effective_information(tokens: u64, entropy_bits: f64, loss_bits: f64) -> f64 {
    tokens as f64 * (entropy_bits - loss_bits)
}

/// Information capacity `eta = D * (H - L) / N`.
///
/// Errors for `N = 0`: a parameterless baseline has no capacity to fill.
/// Values outside `[0, 1]` are returned as-is; [`ICState`] carries the
/// diagnostic flags.
pub fn information_capacity(
    tokens: u64,
    entropy_bits: f64,
    loss_bits: f64,
    param_bits: u64,
) -> Result<f64, IcError> {
    if param_bits == 0 {
        return Err(IcError::CapacityUndefined);
    }
    Ok(effective_information(tokens, entropy_bits, loss_bits) / param_bits as f64)
}

/// Diagnostic flags for capacity accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcFlags {
    /// `L > H`: the model codes worse than the baseline entropy; effective
    /// information is negative.
    pub negative_information: bool,
    /// `eta > 1`: `H` was overestimated or `N` undercounted.
    pub eta_above_one: bool,
}

/// A capacity state `(D, H, L, N)` with its derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ICState {
    pub tokens: u64,
    pub entropy_bits_per_token: f64,
    pub loss_bits_per_token: f64,
    pub param_bits: u64,
    /// `D * (H - L)`, signed.
    pub effective_info_bits: f64,
    /// `eta`; `None` when `N = 0` (no-capacity baseline).
    pub eta: Option<f64>,
    pub flags: IcFlags,
}

impl ICState {
    pub fn new(tokens: u64, entropy_bits: f64, loss_bits: f64, param_bits: u64) -> ICState {
        let effective = effective_information(tokens, entropy_bits, loss_bits);
        let eta = if param_bits > 0 {
            Some(effective / param_bits as f64)
        } else {
            None
        };
        ICState {
            tokens,
            entropy_bits_per_token: entropy_bits,
            loss_bits_per_token: loss_bits,
            param_bits,
            effective_info_bits: effective,
            eta,
            flags: IcFlags {
                negative_information: effective < 0.0,
                eta_above_one: eta.is_some_and(|e| e > 1.0),
            },
        }
    }
}

/// One point of a capacity trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub tokens_seen: u64,
    pub loss_bits_per_token: f64,
    pub eta: f64,
}

/// Capacity along a training trace: `eta_t = D_t (H - L_t) / N` with `L_t`
/// the prequential average loss over the first `D_t` tokens.
pub fn capacity_trajectory(
    trace: &TrainingTrace,
    entropy_bits: f64,
    param_bits: u64,
) -> Result<Vec<TrajectoryPoint>, IcError> {
    if param_bits == 0 {
        return Err(IcError::CapacityUndefined);
    }
    trace.ensure_bits()?;
    Ok(trace
        .records()
        .iter()
        .map(|r| TrajectoryPoint {
            tokens_seen: r.tokens_seen,
            loss_bits_per_token: r.loss,
            eta: effective_information(r.tokens_seen, entropy_bits, r.loss) / param_bits as f64,
        })
        .collect())
}

/// Physical parameters for the energy bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauerParams {
    pub temperature_kelvin: f64,
    pub boltzmann_j_per_k: f64,
}

impl LandauerParams {
    pub fn at_temperature(temperature_kelvin: f64) -> LandauerParams {
        LandauerParams {
            temperature_kelvin,
            boltzmann_j_per_k: BOLTZMANN_J_PER_K,
        }
    }
}

/// Minimum energy in joules to transfer `effective_info_bits` of
/// information at the given temperature: `bits * k_B * T * ln 2`.
pub fn landauer_bound(effective_info_bits: f64, params: LandauerParams) -> Result<f64, IcError> {
    if !(params.temperature_kelvin > 0.0) {
        return Err(IcError::BadTemperature(params.temperature_kelvin));
    }
    if effective_info_bits < 0.0 {
        return Err(IcError::NegativeInformation {
            bits: effective_info_bits,
        });
    }
    Ok(effective_info_bits
        * params.boltzmann_j_per_k
        * params.temperature_kelvin
        * std::f64::consts::LN_2)
}

/// Entropy estimate from the first `window` records of a training trace.
///
/// The returned estimate is tagged `initial_loss`; [`INITIAL_LOSS_CAVEAT`]
/// applies to every use.
pub fn entropy_from_initial_loss(
    trace: &TrainingTrace,
    window: usize,
) -> Result<EntropyEstimate, IcError> {
    if window == 0 {
        return Err(IcError::ZeroWindow);
    }
    if trace.len() < window {
        return Err(IcError::WindowTooLarge {
            window,
            len: trace.len(),
        });
    }
    let bits = trace.to_bits();
    let head = &bits.records()[..window];
    let mean = head.iter().map(|r| r.loss).sum::<f64>() / window as f64;
    let standard_error = if window >= 2 {
        let var = head.iter().map(|r| (r.loss - mean).powi(2)).sum::<f64>() / (window - 1) as f64;
        Some((var / window as f64).sqrt())
    } else {
        None
    };
    Ok(EntropyEstimate {
        value: mean,
        method: EntropyMethod::InitialLoss { window },
        standard_error,
    })
}

/// Bit widths and capacities around a quantization step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    /// Source weight width in bits.
    pub b: u32,
    /// Target weight width in bits.
    pub b_prime: u32,
    /// Capacity before quantization.
    pub eta: f64,
    /// Capacity after quantization, when measured; at most 1.
    pub eta_prime: Option<f64>,
}

impl QuantizationSpec {
    pub fn validate(&self) -> Result<(), IcError> {
        if self.b < 1 || self.b_prime < 1 {
            return Err(IcError::BadQuantSpec(format!(
                "widths must be at least 1 bit, got b = {}, b' = {}",
                self.b, self.b_prime
            )));
        }
        if let Some(ep) = self.eta_prime {
            if !(0.0..=1.0).contains(&ep) {
                return Err(IcError::BadQuantSpec(format!(
                    "eta' must lie in [0, 1], got {ep}"
                )));
            }
        }
        Ok(())
    }
}

/// Verdict of the lossless-quantization conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationVerdict {
    /// The operative condition: the full form `eta * b <= eta' * b'` when
    /// `eta'` is supplied, the necessary form `eta * b <= b'` otherwise.
    pub lossless_possible: bool,
    /// `b' - eta * b`, slack of the necessary condition.
    pub necessary_margin: f64,
    /// Necessary condition `eta * b <= b'` on its own.
    pub necessary_holds: bool,
    /// Full condition `eta * b <= eta' * b'`, when `eta'` is supplied.
    pub full_holds: Option<bool>,
}

/// Check the lossless-quantization conditions for a spec.
pub fn quantization_condition(spec: &QuantizationSpec) -> Result<QuantizationVerdict, IcError> {
    spec.validate()?;
    let demand = spec.eta * f64::from(spec.b);
    let necessary_margin = f64::from(spec.b_prime) - demand;
    let necessary_holds = demand <= f64::from(spec.b_prime);
    let full_holds = spec
        .eta_prime
        .map(|ep| demand <= ep * f64::from(spec.b_prime));
    Ok(QuantizationVerdict {
        lossless_possible: full_holds.unwrap_or(necessary_holds),
        necessary_margin,
        necessary_holds,
        full_holds,
    })
}

/// Two-route conservation check: `D*H - ideal_bits` against
/// `effective_information(D, H, ideal_bits / D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationCheck {
    pub lhs_bits: f64,
    pub rhs_bits: f64,
    pub difference: f64,
}

pub fn conservation_check(tokens: u64, entropy_bits: f64, ideal_bits: f64) -> ConservationCheck {
    let lhs = tokens as f64 * entropy_bits - ideal_bits;
    let loss = if tokens == 0 {
        0.0
    } else {
        ideal_bits / tokens as f64
    };
    let rhs = effective_information(tokens, entropy_bits, loss);
    ConservationCheck {
        lhs_bits: lhs,
        rhs_bits: rhs,
        difference: lhs - rhs,
    }
}
