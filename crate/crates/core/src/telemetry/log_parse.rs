//! Training-log ingestion.
//!
//! Logs are JSONL, one record per line:
//!
//! ```text
//! {"tokens_seen": 100, "loss": 6.931, "loss_unit": "nats"}
//! ```
//!
//! `loss_unit` defaults to nats (the common training-loop convention);
//! everything is converted to bits on ingestion. `loss` is the average
//! loss over the first `tokens_seen` tokens.

use std::io::{BufRead, BufReader, Read};

use serde::Deserialize;

use crate::ic_laws::{TraceRecord, TrainingTrace};
use crate::units::LossUnit;

use super::TelemetryError;

#[derive(Deserialize)]
struct LogLine {
    tokens_seen: u64,
    loss: f64,
    #[serde(default = "default_unit")]
    loss_unit: LossUnit,
}

fn default_unit() -> LossUnit {
    LossUnit::Nats
}

/// Parse a training log, validating monotonicity and converting losses to
/// bits. Errors carry 1-based line numbers.
pub fn parse_training_log<R: Read>(reader: R) -> Result<TrainingTrace, TelemetryError> {
    let buf = BufReader::new(reader);
    let mut records = Vec::new();
    let mut previous: Option<u64> = None;
    for (i, line) in buf.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(TelemetryError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line).map_err(|e| TelemetryError::Log {
            line: line_no,
            message: e.to_string(),
        })?;
        if !parsed.loss.is_finite() || parsed.loss < 0.0 {
            return Err(TelemetryError::Log {
                line: line_no,
                message: format!("loss {} must be finite and >= 0", parsed.loss),
            });
        }
        if let Some(prev) = previous {
            if parsed.tokens_seen <= prev {
                return Err(TelemetryError::Log {
                    line: line_no,
                    message: format!(
                        "tokens_seen {} does not increase over {prev}",
                        parsed.tokens_seen
                    ),
                });
            }
        }
        previous = Some(parsed.tokens_seen);
        records.push(TraceRecord {
            tokens_seen: parsed.tokens_seen,
            loss: parsed.loss,
            loss_unit: parsed.loss_unit,
        });
    }
    if records.is_empty() {
        return Err(TelemetryError::Log {
            line: 0,
            message: "empty trace".to_string(),
        });
    }
    Ok(TrainingTrace::new(records)
        .map_err(TelemetryError::IcLaws)?
        .to_bits())
}
