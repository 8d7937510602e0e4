//! Laboratory for the information accounting of next-token prediction.
//!
//! The crate treats an autoregressive predictor as the shared codebook of a
//! lossless transmission scheme: the cost of sending a token stream through
//! an arithmetic coder driven by the predictor is the stream's codelength
//! under that model, and the gap between a baseline codelength and the model
//! codelength is the information that training moved into the model.
//!
//! Modules:
//!
//! - [`sources`]: synthetic token sources with exactly known entropy rates,
//!   plus empirical (plug-in) entropy estimation.
//! - [`predictors`]: autoregressive predictors (uniform, n-gram, a tiny
//!   feed-forward LM, and a source oracle) with online updates and a
//!   parameter-size accounting in bits.
//! - [`codec`]: an integer-range arithmetic coder driven by any predictor;
//!   ideal (real-valued) and actual (emitted) codelengths.
//! - [`ic_laws`]: capacity algebra — effective information `D(H - L)`,
//!   capacity `eta = D(H - L)/N`, the Landauer energy bound, and the
//!   lossless-quantization conditions.
//! - [`scaling`]: power-law fitting and the token-ratio consistency algebra.
//! - [`quantlab`]: post-training quantization of predictors and measured
//!   loss-degradation experiments.
//! - [`telemetry`]: experiment orchestration, training-log ingestion, and
//!   report emission; the programmatic surface behind the CLI.

pub mod codec;
pub mod ic_laws;
pub mod predictors;
pub mod quantlab;
pub mod scaling;
pub mod sources;
pub mod telemetry;
pub mod units;
