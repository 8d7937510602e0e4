//! Experiment orchestration and reporting.
//!
//! [`run_experiment`] drives one experiment from a declarative
//! [`RunConfig`]: either an internal run (sample a known source, code it
//! online through the arithmetic-coder accounting, derive the capacity
//! state from first principles) or an external one (ingest a training log
//! and account against a user-supplied baseline entropy). The resulting
//! [`ICReportDocument`] is deterministic for a fixed config — identical
//! configs produce byte-identical JSON — and renders to JSON, a fixed text
//! summary, or a `(D, L, eta)` CSV series.
//!
//! Internal runs take `L` from the codec's ideal codelength, one source of
//! truth, and include the two-route conservation check. External logs have
//! no codec behind them: their reports are marked `external-telemetry` and
//! skip the conservation check instead of faking it.

mod log_parse;
mod report;

pub use log_parse::parse_training_log;
pub use report::{render_csv, render_json, render_text, write_report_files, ReportOutputs};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{ideal_codelength, CodecError};
use crate::ic_laws::{
    capacity_trajectory, conservation_check, entropy_from_initial_loss, landauer_bound,
    quantization_condition, ConservationCheck, ICState, IcError, LandauerParams,
    QuantizationSpec, TraceRecord, TrainingTrace, TrajectoryPoint, INITIAL_LOSS_CAVEAT,
};
use crate::predictors::{Predictor, PredictorError, PredictorSpec, UpdateMode};
use crate::quantlab::QuantlabError;
use crate::sources::{
    exact_entropy_rate, plugin_entropy, sample_stream, EntropyEstimate, Source, SourceError,
};
use crate::units::LossUnit;

/// Default heat-reservoir temperature for the energy bound.
pub const DEFAULT_TEMPERATURE_KELVIN: f64 = 300.0;

/// Initial-loss estimates further than this from a known exact entropy get
/// the bias flag.
pub const INITIAL_LOSS_BIAS_THRESHOLD: f64 = 0.1;

/// Errors from experiment orchestration, tagged by stage.
#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("config: {0}")]
    Config(String),
    #[error("training log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error("sources: {0}")]
    Source(#[from] SourceError),
    #[error("predictors: {0}")]
    Predictor(#[from] PredictorError),
    #[error("codec: {0}")]
    Codec(#[from] CodecError),
    #[error("capacity: {0}")]
    IcLaws(#[from] IcError),
    #[error("quantlab: {0}")]
    Quantlab(#[from] QuantlabError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn default_mode() -> UpdateMode {
    UpdateMode::Online
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE_KELVIN
}

/// Declarative description of one experiment.
///
/// Exactly one of `source` (internal run) and `log_path` (external
/// telemetry) must be present. Internal runs also need `predictor` and
/// `stream_length`; external runs need `entropy_bits` (the baseline `H`
/// is not derivable from a bare loss curve) and, for capacity, `param_bits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictor: Option<PredictorSpec>,
    #[serde(default = "default_mode")]
    pub mode: UpdateMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream_length: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_temperature")]
    pub temperature_kelvin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_bits: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_bits: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<ReportOutputs>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        match (&self.source, &self.log_path) {
            (Some(_), Some(_)) => Err(TelemetryError::Config(
                "config must name either a source or a log path, not both".to_string(),
            )),
            (None, None) => Err(TelemetryError::Config(
                "config must name a source spec or a log path".to_string(),
            )),
            (Some(_), None) => {
                if self.predictor.is_none() {
                    return Err(TelemetryError::Config(
                        "internal runs need a predictor spec".to_string(),
                    ));
                }
                if self.stream_length.is_none() {
                    return Err(TelemetryError::Config(
                        "internal runs need a stream length".to_string(),
                    ));
                }
                Ok(())
            }
            (None, Some(_)) => {
                if self.entropy_bits.is_none() {
                    return Err(TelemetryError::Config(
                        "external-log runs need entropy_bits (user-supplied H)".to_string(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Where a report's numbers came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Sampled, coded, and accounted inside this process.
    InternalRun,
    /// Ingested from a training log; no codec behind the numbers.
    ExternalTelemetry,
}

/// How the report's headline `H` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum HProvenance {
    Exact,
    Plugin { order: usize },
    InitialLoss { window: usize },
    UserSupplied,
}

/// The entropy inputs of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySection {
    pub h_bits_per_token: f64,
    #[serde(flatten)]
    pub provenance: HProvenance,
    /// Auxiliary estimates (plug-in, initial-loss) reported alongside.
    pub estimates: Vec<EntropyEstimate>,
}

/// The energy side of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandauerSection {
    pub temperature_kelvin: f64,
    /// Minimum transfer energy; absent while effective information is
    /// negative (resolve the conservation flag first).
    pub energy_joules: Option<f64>,
}

/// Width outlook for the terminal capacity state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationOutlook {
    pub b: u32,
    pub b_prime: u32,
    pub lossless_possible: bool,
    pub necessary_margin_bits: f64,
}

/// Entropy read as a data-quality score: at a fixed token budget, higher
/// entropy means more information on offer per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetQuality {
    pub entropy_bits_per_token: f64,
    pub note: String,
}

/// Diagnostic flags carried by a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFlags {
    /// Terminal `L > H`.
    pub negative_information: bool,
    /// Terminal `eta > 1`.
    pub eta_above_one: bool,
    /// The predictor has no parameters; capacity is undefined.
    pub no_capacity_baseline: bool,
    /// Standing caveat on every initial-loss estimate.
    pub initial_loss_caveat: String,
    /// Gap between the initial-loss estimate and a known exact entropy,
    /// when it exceeds [`INITIAL_LOSS_BIAS_THRESHOLD`].
    pub initial_loss_bias_bits: Option<f64>,
}

/// The full machine-readable result of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ICReportDocument {
    pub provenance: Provenance,
    pub config: RunConfig,
    pub entropy: EntropySection,
    pub trace: TrainingTrace,
    /// `(D, eta)` along the trace; empty when capacity is undefined.
    pub trajectory: Vec<TrajectoryPoint>,
    pub terminal: ICState,
    pub landauer: LandauerSection,
    /// Two-route conservation check; internal runs only.
    pub conservation: Option<ConservationCheck>,
    /// Necessary-condition verdicts for standard target widths.
    pub quantization: Vec<QuantizationOutlook>,
    pub dataset_quality: DatasetQuality,
    pub flags: ReportFlags,
}

/// Geometric checkpoint cadence (every doubling of tokens) plus the
/// terminal point.
fn checkpoint_tokens(total: usize) -> Vec<usize> {
    let mut points = Vec::new();
    let mut t = 1usize;
    while t < total {
        points.push(t);
        t *= 2;
    }
    points.push(total);
    points
}

fn trace_from_per_token_bits(per_token: &[f64]) -> TrainingTrace {
    let mut records = Vec::new();
    let mut cumulative = 0.0f64;
    let checkpoints = checkpoint_tokens(per_token.len());
    let mut next = 0usize;
    for (i, bits) in per_token.iter().enumerate() {
        cumulative += bits;
        if next < checkpoints.len() && i + 1 == checkpoints[next] {
            records.push(TraceRecord {
                tokens_seen: (i + 1) as u64,
                loss: cumulative / (i + 1) as f64,
                loss_unit: LossUnit::Bits,
            });
            next += 1;
        }
    }
    TrainingTrace::new(records).expect("checkpoints are strictly increasing")
}

const QUANT_OUTLOOK_WIDTHS: [u32; 5] = [1, 2, 4, 8, 16];

fn quantization_outlook(eta: Option<f64>, width: Option<u32>) -> Vec<QuantizationOutlook> {
    let (Some(eta), Some(b)) = (eta, width) else {
        return Vec::new();
    };
    QUANT_OUTLOOK_WIDTHS
        .iter()
        .map(|&b_prime| {
            let verdict = quantization_condition(&QuantizationSpec {
                b,
                b_prime,
                eta: eta.max(0.0),
                eta_prime: None,
            })
            .expect("widths are positive");
            QuantizationOutlook {
                b,
                b_prime,
                lossless_possible: verdict.lossless_possible,
                necessary_margin_bits: verdict.necessary_margin,
            }
        })
        .collect()
}

fn dataset_quality_note(h: f64) -> DatasetQuality {
    DatasetQuality {
        entropy_bits_per_token: h,
        note: "at a fixed token budget, higher entropy offers the model more to learn per token"
            .to_string(),
    }
}

/// Run one experiment to a full report. Deterministic in the config.
pub fn run_experiment(config: &RunConfig) -> Result<ICReportDocument, TelemetryError> {
    config.validate()?;
    if let Some(source) = &config.source {
        run_internal(config, source)
    } else {
        let path = config.log_path.as_ref().expect("validated");
        let file = std::fs::File::open(path)?;
        let trace = parse_training_log(file)?;
        run_external(config, trace)
    }
}

/// External-log variant with the trace already in hand (the CLI's
/// `analyze-log` path).
pub fn run_external(
    config: &RunConfig,
    trace: TrainingTrace,
) -> Result<ICReportDocument, TelemetryError> {
    let h = config.entropy_bits.ok_or_else(|| {
        TelemetryError::Config("external-log runs need entropy_bits (user-supplied H)".to_string())
    })?;
    let trace = trace.to_bits();
    let param_bits = config.param_bits.unwrap_or(0);
    let terminal_record = *trace.terminal();
    let terminal = ICState::new(
        terminal_record.tokens_seen,
        h,
        terminal_record.loss,
        param_bits,
    );
    let trajectory = if param_bits > 0 {
        capacity_trajectory(&trace, h, param_bits)?
    } else {
        Vec::new()
    };
    let initial_est = entropy_from_initial_loss(&trace, trace.len().min(4))?;
    let energy = effective_energy(&terminal, config.temperature_kelvin)?;
    let flags = ReportFlags {
        negative_information: terminal.flags.negative_information,
        eta_above_one: terminal.flags.eta_above_one,
        no_capacity_baseline: param_bits == 0,
        initial_loss_caveat: INITIAL_LOSS_CAVEAT.to_string(),
        initial_loss_bias_bits: None,
    };
    Ok(ICReportDocument {
        provenance: Provenance::ExternalTelemetry,
        config: config.clone(),
        entropy: EntropySection {
            h_bits_per_token: h,
            provenance: HProvenance::UserSupplied,
            estimates: vec![initial_est],
        },
        trajectory,
        terminal,
        landauer: LandauerSection {
            temperature_kelvin: config.temperature_kelvin,
            energy_joules: energy,
        },
        conservation: None,
        quantization: Vec::new(),
        dataset_quality: dataset_quality_note(h),
        flags,
        trace,
    })
}

fn effective_energy(terminal: &ICState, temperature: f64) -> Result<Option<f64>, TelemetryError> {
    if terminal.effective_info_bits < 0.0 {
        return Ok(None);
    }
    Ok(Some(landauer_bound(
        terminal.effective_info_bits,
        LandauerParams::at_temperature(temperature),
    )?))
}

fn run_internal(config: &RunConfig, source: &Source) -> Result<ICReportDocument, TelemetryError> {
    let length = config.stream_length.expect("validated");
    if length == 0 {
        return Err(TelemetryError::Config(
            "stream length must be at least 1".to_string(),
        ));
    }
    let spec = config.predictor.as_ref().expect("validated");
    let stream = sample_stream(source, length, config.seed)?;
    let mut predictor = spec.build(source.vocab_size(), Some(source))?;
    let param_bits = predictor.param_bits();

    let code_report = ideal_codelength(&stream, &mut predictor, config.mode)?;
    let per_token = code_report
        .per_token_bits
        .as_ref()
        .expect("ideal_codelength fills per-token bits");
    let trace = trace_from_per_token_bits(per_token);

    let exact = exact_entropy_rate(source)?;
    let plugin0 = plugin_entropy(&stream, 0)?;
    let initial_window = trace.len().min(4);
    let initial_est = entropy_from_initial_loss(&trace, initial_window)?;
    let bias = (initial_est.value - exact.value).abs();
    let initial_loss_bias_bits = (bias > INITIAL_LOSS_BIAS_THRESHOLD).then_some(bias);

    let h = exact.value;
    let terminal = ICState::new(
        stream.len() as u64,
        h,
        code_report.bits_per_token(),
        param_bits,
    );
    let trajectory = if param_bits > 0 {
        capacity_trajectory(&trace, h, param_bits)?
    } else {
        Vec::new()
    };
    let energy = effective_energy(&terminal, config.temperature_kelvin)?;
    let conservation = conservation_check(stream.len() as u64, h, code_report.ideal_bits);
    let width = match &predictor {
        Predictor::TinyLm(lm) => Some(u32::from(lm.bit_width())),
        Predictor::NGram(ng) => Some(u32::from(ng.count_width())),
        _ => None,
    };
    let flags = ReportFlags {
        negative_information: terminal.flags.negative_information,
        eta_above_one: terminal.flags.eta_above_one,
        no_capacity_baseline: param_bits == 0,
        initial_loss_caveat: INITIAL_LOSS_CAVEAT.to_string(),
        initial_loss_bias_bits,
    };
    Ok(ICReportDocument {
        provenance: Provenance::InternalRun,
        config: config.clone(),
        entropy: EntropySection {
            h_bits_per_token: h,
            provenance: HProvenance::Exact,
            estimates: vec![exact, plugin0, initial_est],
        },
        quantization: quantization_outlook(terminal.eta, width),
        trajectory,
        landauer: LandauerSection {
            temperature_kelvin: config.temperature_kelvin,
            energy_joules: energy,
        },
        conservation: Some(conservation),
        dataset_quality: dataset_quality_note(h),
        flags,
        terminal,
        trace,
    })
}
