//! Report rendering: stable JSON, a fixed text summary, and a CSV series.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{ICReportDocument, TelemetryError};

/// Output destinations for a run's report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportOutputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// Schema-stable JSON with fixed key order; identical documents render to
/// identical bytes.
pub fn render_json(doc: &ICReportDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
    s.push('\n');
    s
}

/// Fixed-layout human summary.
pub fn render_text(doc: &ICReportDocument) -> String {
    let mut out = String::new();
    let t = &doc.terminal;
    let push = |out: &mut String, line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    push(&mut out, format!("provenance        {:?}", doc.provenance));
    push(
        &mut out,
        format!(
            "entropy H         {:.6} bits/token ({:?})",
            doc.entropy.h_bits_per_token, doc.entropy.provenance
        ),
    );
    push(&mut out, format!("tokens D          {}", t.tokens));
    push(
        &mut out,
        format!("loss L            {:.6} bits/token", t.loss_bits_per_token),
    );
    push(&mut out, format!("params N          {} bits", t.param_bits));
    push(
        &mut out,
        format!("effective info    {:.6} bits", t.effective_info_bits),
    );
    match t.eta {
        Some(eta) => push(&mut out, format!("capacity eta      {eta:.6}")),
        None => push(
            &mut out,
            "capacity eta      undefined (no-capacity baseline)".to_string(),
        ),
    }
    match doc.landauer.energy_joules {
        Some(e) => push(
            &mut out,
            format!(
                "landauer E0       {e:.6e} J at {} K",
                doc.landauer.temperature_kelvin
            ),
        ),
        None => push(
            &mut out,
            "landauer E0       undefined (negative effective information)".to_string(),
        ),
    }
    if let Some(c) = &doc.conservation {
        push(
            &mut out,
            format!(
                "conservation      |D*H - ideal_bits - D*(H-L)| = {:.3e} bits",
                c.difference.abs()
            ),
        );
    }
    let flags = &doc.flags;
    push(
        &mut out,
        format!(
            "flags             negative_info={} eta_above_one={} no_capacity={}",
            flags.negative_information, flags.eta_above_one, flags.no_capacity_baseline
        ),
    );
    if let Some(bias) = flags.initial_loss_bias_bits {
        push(
            &mut out,
            format!("initial-loss bias {bias:.4} bits vs exact entropy"),
        );
    }
    for q in &doc.quantization {
        push(
            &mut out,
            format!(
                "quant b'={:<2}       lossless_possible={} margin={:+.3} bits",
                q.b_prime, q.lossless_possible, q.necessary_margin_bits
            ),
        );
    }
    out
}

/// `(tokens_seen, loss, eta)` rows, one per trace record; the eta column
/// is empty when capacity is undefined.
pub fn render_csv(doc: &ICReportDocument) -> String {
    let mut out = String::from("tokens_seen,loss_bits_per_token,eta\n");
    for (i, record) in doc.trace.records().iter().enumerate() {
        let eta = doc
            .trajectory
            .get(i)
            .map(|p| p.eta.to_string())
            .unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", record.tokens_seen, record.loss, eta));
    }
    out
}

/// Write whichever outputs the config names.
pub fn write_report_files(
    doc: &ICReportDocument,
    outputs: &ReportOutputs,
) -> Result<(), TelemetryError> {
    if let Some(path) = &outputs.json {
        let mut f = std::fs::File::create(path)?;
        f.write_all(render_json(doc).as_bytes())?;
    }
    if let Some(path) = &outputs.text {
        let mut f = std::fs::File::create(path)?;
        f.write_all(render_text(doc).as_bytes())?;
    }
    if let Some(path) = &outputs.csv {
        let mut f = std::fs::File::create(path)?;
        f.write_all(render_csv(doc).as_bytes())?;
    }
    Ok(())
}
