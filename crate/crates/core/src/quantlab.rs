//! Post-training quantization bench.
//!
//! Quantizes trained predictors to narrower widths, measures the loss
//! degradation on a held-out evaluation stream, and confronts the outcome
//! with the width conditions of the capacity algebra: a cell is marked
//! `condition_pass` when `eta * b <= b'` and `degraded` when the frozen
//! loss rises by more than [`DEGRADATION_TOLERANCE`] bits per token. The
//! tolerance sits well above coder noise and well below the half-bit-plus
//! collapses that width truncation causes on saturated models.
//!
//! The necessary condition is one-directional: passing it promises
//! nothing, but measurable degradation without a violated condition would
//! contradict the accounting. The [`standard_matrix`] experiment (three
//! training lengths by four target widths on a small trained network)
//! exercises exactly that contrapositive.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{ideal_codelength, CodecError};
use crate::ic_laws::ICState;
use crate::predictors::{Predictor, PredictorError, TinyLm, UpdateMode};
use crate::sources::{plugin_entropy, sample_stream, Source, SourceError, TokenStream};

/// Loss increase on the evaluation stream that counts as degradation, in
/// bits per token.
pub const DEGRADATION_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum QuantlabError {
    #[error("predictor kind {0} does not support weight quantization")]
    UnsupportedPredictor(&'static str),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Quantize a copy of `predictor` to `width` bits per parameter.
///
/// TinyLm weights get symmetric uniform quantization with per-tensor
/// max-abs scale; n-gram counts are truncated to the width. Parameterless
/// kinds (uniform, oracle) have nothing to quantize.
pub fn quantize_predictor(predictor: &Predictor, width: u8) -> Result<Predictor, QuantlabError> {
    match predictor {
        Predictor::TinyLm(lm) => {
            let mut q = lm.clone();
            q.quantize_weights(width)?;
            Ok(Predictor::TinyLm(q))
        }
        Predictor::NGram(ng) => {
            let mut q = ng.clone();
            q.truncate_counts_to_width(width)?;
            Ok(Predictor::NGram(q))
        }
        other => Err(QuantlabError::UnsupportedPredictor(other.kind_name())),
    }
}

/// One `(checkpoint, target width)` cell of a degradation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub b_prime: u8,
    /// Frozen loss of the unquantized predictor on the evaluation stream.
    pub l_before: f64,
    /// Frozen loss of the quantized predictor on the same stream.
    pub l_after: f64,
    pub degradation: f64,
    pub degraded: bool,
    pub eta_before: f64,
    /// `eta * b`, the bits per parameter the model is using.
    pub demand_bits: f64,
    /// Necessary condition `eta * b <= b'`.
    pub condition_pass: bool,
    /// Capacity re-measured with the quantized model's loss and width.
    pub eta_after: f64,
    /// Full condition `eta * b <= eta' * b'` with the measured `eta'`.
    pub full_condition_pass: bool,
}

/// Inputs for one degradation experiment.
#[derive(Debug, Clone)]
pub struct DegradationExperiment<'a> {
    /// The trained predictor under test.
    pub predictor: &'a Predictor,
    /// Source weight width `b` (bits per parameter before quantization).
    pub source_width: u8,
    /// Capacity of the training run that produced the predictor.
    pub eta_before: f64,
    /// Held-out stream the losses are measured on.
    pub eval_stream: &'a TokenStream,
    /// Baseline entropy (bits/token) used to re-measure capacity after
    /// quantization.
    pub entropy_bits: f64,
    pub target_widths: &'a [u8],
    pub tolerance: f64,
}

impl DegradationExperiment<'_> {
    /// Measure every requested width against the unquantized baseline.
    pub fn run(&self) -> Result<Vec<ExperimentCell>, QuantlabError> {
        let mut baseline = self.predictor.clone();
        let before =
            ideal_codelength(self.eval_stream, &mut baseline, UpdateMode::Frozen)?;
        let l_before = before.bits_per_token();
        let demand = self.eta_before * f64::from(self.source_width);
        let d = self.eval_stream.len() as u64;
        let mut cells = Vec::with_capacity(self.target_widths.len());
        for &width in self.target_widths {
            let mut quantized = quantize_predictor(self.predictor, width)?;
            let after = ideal_codelength(self.eval_stream, &mut quantized, UpdateMode::Frozen)?;
            let l_after = after.bits_per_token();
            let state_after = ICState::new(d, self.entropy_bits, l_after, quantized.param_bits());
            let eta_after = state_after.eta.unwrap_or(0.0);
            let degradation = l_after - l_before;
            cells.push(ExperimentCell {
                b_prime: width,
                l_before,
                l_after,
                degradation,
                degraded: degradation > self.tolerance,
                eta_before: self.eta_before,
                demand_bits: demand,
                condition_pass: demand <= f64::from(width),
                eta_after,
                full_condition_pass: demand <= eta_after.max(0.0) * f64::from(width),
            });
        }
        Ok(cells)
    }
}

/// One training length of the standard matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRun {
    pub training_tokens: u64,
    /// Prequential average loss of the training run, bits/token.
    pub training_loss: f64,
    /// Baseline entropy (order-0 plug-in on the training stream).
    pub entropy_bits: f64,
    pub eta_before: f64,
    pub cells: Vec<ExperimentCell>,
}

/// The standard degradation matrix report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardMatrix {
    pub runs: Vec<MatrixRun>,
}

impl StandardMatrix {
    /// Contrapositive of the necessary condition over the whole matrix:
    /// every cell below the degradation tolerance satisfies
    /// `eta * b <= b'`.
    pub fn contrapositive_holds(&self) -> bool {
        self.runs
            .iter()
            .flat_map(|r| &r.cells)
            .all(|c| c.degraded || c.condition_pass)
    }

    /// At least one cell violates the condition and measurably degrades.
    pub fn has_degraded_violation(&self) -> bool {
        self.runs
            .iter()
            .flat_map(|r| &r.cells)
            .any(|c| !c.condition_pass && c.degraded)
    }

    /// Largest compression ratio `b / b'` that stays undegraded, per run.
    /// `None` when every tested width degrades.
    pub fn max_undegraded_ratios(&self, source_width: u8) -> Vec<Option<f64>> {
        self.runs
            .iter()
            .map(|r| {
                r.cells
                    .iter()
                    .filter(|c| !c.degraded)
                    .map(|c| f64::from(source_width) / f64::from(c.b_prime))
                    .fold(None, |acc: Option<f64>, ratio| {
                        Some(acc.map_or(ratio, |a| a.max(ratio)))
                    })
            })
            .collect()
    }
}

/// Training lengths of the standard matrix. The longest run is sized so
/// its capacity demand `eta * b` sits between 1 and 2 bits: the 1-bit cell
/// violates the width condition (and collapses measurably), while 2 bits
/// and up stay inside it.
pub const STANDARD_LENGTHS: [usize; 3] = [40, 220, 400];

/// Target widths of the standard matrix.
pub const STANDARD_WIDTHS: [u8; 4] = [1, 2, 4, 8];

/// Source weight width of the standard matrix's network.
pub const STANDARD_SOURCE_WIDTH: u8 = 32;

/// Run the standard experiment: a small network trained online on a
/// structured binary source for three lengths, then quantized to four
/// widths.
///
/// Capacity is accounted against the order-0 (memoryless) entropy of the
/// training stream — the baseline a knowledge-free coder would pay — so a
/// model that captures the source's temporal structure shows a genuinely
/// positive `eta`.
pub fn standard_matrix() -> Result<StandardMatrix, QuantlabError> {
    let source = Source::binary_switch(0.9)?;
    let eval_stream = sample_stream(&source, 2000, 9001)?;
    let mut runs = Vec::new();
    for (i, &len) in STANDARD_LENGTHS.iter().enumerate() {
        let train_stream = sample_stream(&source, len, 7700 + i as u64)?;
        let entropy_bits = plugin_entropy(&train_stream, 0)?.value;
        let mut lm = Predictor::TinyLm(TinyLm::new(
            2,
            3,
            8,
            STANDARD_SOURCE_WIDTH,
            424_242,
            TinyLm::DEFAULT_LEARNING_RATE,
        )?);
        let report = ideal_codelength(&train_stream, &mut lm, UpdateMode::Online)?;
        let training_loss = report.bits_per_token();
        let state = ICState::new(len as u64, entropy_bits, training_loss, lm.param_bits());
        let eta_before = state.eta.unwrap_or(0.0);
        let cells = DegradationExperiment {
            predictor: &lm,
            source_width: STANDARD_SOURCE_WIDTH,
            eta_before,
            eval_stream: &eval_stream,
            entropy_bits,
            target_widths: &STANDARD_WIDTHS,
            tolerance: DEGRADATION_TOLERANCE,
        }
        .run()?;
        runs.push(MatrixRun {
            training_tokens: len as u64,
            training_loss,
            entropy_bits,
            eta_before,
            cells,
        });
    }
    Ok(StandardMatrix { runs })
}

/// Append experiment cells to a JSONL sink, one record per line.
pub fn write_results_jsonl<W: Write>(
    mut w: W,
    run_label: &str,
    cells: &[ExperimentCell],
) -> Result<(), QuantlabError> {
    for cell in cells {
        let mut value = serde_json::to_value(cell).expect("cell serializes");
        value
            .as_object_mut()
            .expect("cell is an object")
            .insert("run".to_string(), serde_json::Value::from(run_label));
        writeln!(w, "{value}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use crate::predictors::{ngram_predictor, tiny_lm_predictor, uniform_predictor};

    use super::*;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} within {tol}"
        );
    }

    fn trained_tiny_lm(tokens: usize) -> (Predictor, TokenStream) {
        let source = Source::binary_switch(0.9).unwrap();
        let train = sample_stream(&source, tokens, 5).unwrap();
        let eval = sample_stream(&source, 2000, 6).unwrap();
        let mut lm = tiny_lm_predictor(2, 3, 8, 32, 17).unwrap();
        ideal_codelength(&train, &mut lm, UpdateMode::Online).unwrap();
        (lm, eval)
    }

    #[test]
    fn identity_quantization_changes_nothing_measurable() {
        let (lm, eval) = trained_tiny_lm(500);
        let same = quantize_predictor(&lm, 32).unwrap();
        let ctx = eval.tokens();
        for t in [0usize, 3, 17, 200] {
            let a = lm.predict(&ctx[..t]).unwrap();
            let b = same.predict(&ctx[..t]).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_close(*x, *y, 1e-9);
            }
        }
        let mut a = lm.clone();
        let mut b = same.clone();
        let la = ideal_codelength(&eval, &mut a, UpdateMode::Frozen).unwrap();
        let lb = ideal_codelength(&eval, &mut b, UpdateMode::Frozen).unwrap();
        assert_close(la.bits_per_token(), lb.bits_per_token(), 1e-9);
    }

    #[test]
    fn one_bit_quantization_keeps_distributions_valid() {
        let (lm, eval) = trained_tiny_lm(500);
        let q = quantize_predictor(&lm, 1).unwrap();
        for t in [0usize, 1, 5, 42] {
            let probs = q.predict(&eval.tokens()[..t]).unwrap();
            assert!(probs.iter().all(|&p| p > 0.0));
            let sum: f64 = probs.iter().sum();
            assert_close(sum, 1.0, 1e-9);
        }
    }

    #[test]
    fn quantization_rejects_parameterless_kinds() {
        let u = uniform_predictor(4).unwrap();
        assert!(matches!(
            quantize_predictor(&u, 8),
            Err(QuantlabError::UnsupportedPredictor("uniform"))
        ));
    }

    #[test]
    fn tiny_lm_eight_bit_quantization_measured() {
        // Train to a low loss on a memorizable (structured) stream, then
        // measure the 8-bit loss; the cell records both sides.
        let source = Source::deterministic(2, vec![0, 1]).unwrap();
        let train = sample_stream(&source, 800, 0).unwrap();
        let eval = sample_stream(&source, 1000, 0).unwrap();
        let mut lm = tiny_lm_predictor(2, 3, 8, 32, 23).unwrap();
        let rep = ideal_codelength(&train, &mut lm, UpdateMode::Online).unwrap();
        assert!(rep.bits_per_token() < 0.5, "training failed to converge");
        let cells = DegradationExperiment {
            predictor: &lm,
            source_width: 32,
            eta_before: 0.2,
            eval_stream: &eval,
            entropy_bits: 1.0,
            target_widths: &[8],
            tolerance: DEGRADATION_TOLERANCE,
        }
        .run()
        .unwrap();
        assert_eq!(cells.len(), 1);
        assert!(cells[0].l_after >= 0.0);
        assert!(cells[0].l_before < 0.5);
    }

    #[test]
    fn untrained_predictor_passes_everywhere_without_degradation() {
        let source = Source::binary_switch(0.9).unwrap();
        let eval = sample_stream(&source, 2000, 8).unwrap();
        let fresh = tiny_lm_predictor(2, 3, 8, 32, 31).unwrap();
        let cells = DegradationExperiment {
            predictor: &fresh,
            source_width: 32,
            eta_before: 0.0,
            eval_stream: &eval,
            entropy_bits: 1.0,
            target_widths: &STANDARD_WIDTHS,
            tolerance: DEGRADATION_TOLERANCE,
        }
        .run()
        .unwrap();
        for cell in &cells {
            assert!(cell.condition_pass, "b' = {}", cell.b_prime);
            assert!(
                cell.degradation <= DEGRADATION_TOLERANCE,
                "b' = {}: fresh model degraded by {}",
                cell.b_prime,
                cell.degradation
            );
        }
    }

    #[test]
    fn saturated_ngram_degrades_when_counts_are_wiped() {
        // A k=1 table saturated on the switch source stores its structure
        // in count magnitudes; truncating to 1 bit wipes the minority
        // counts and measurably degrades the loss. Capacity accounted
        // against the memoryless baseline is far above 1/b here, so the
        // violated condition and the degradation agree.
        let source = Source::binary_switch(0.9).unwrap();
        let train = sample_stream(&source, 10_000, 12).unwrap();
        let eval = sample_stream(&source, 2000, 13).unwrap();
        let mut ng = ngram_predictor(2, 1, 0.5).unwrap();
        let rep = ideal_codelength(&train, &mut ng, UpdateMode::Online).unwrap();
        let h0 = plugin_entropy(&train, 0).unwrap().value;
        let eta = ICState::new(10_000, h0, rep.bits_per_token(), ng.param_bits())
            .eta
            .unwrap();
        let cells = DegradationExperiment {
            predictor: &ng,
            source_width: 32,
            eta_before: eta,
            eval_stream: &eval,
            entropy_bits: h0,
            target_widths: &[1],
            tolerance: DEGRADATION_TOLERANCE,
        }
        .run()
        .unwrap();
        let cell = &cells[0];
        assert!(
            cell.demand_bits > f64::from(cell.b_prime),
            "premise: eta*b = {} must exceed b' = {}",
            cell.demand_bits,
            cell.b_prime
        );
        assert!(
            cell.degraded,
            "expected degradation, got {}",
            cell.degradation
        );
    }

    #[test]
    fn standard_matrix_shape_and_consistency() {
        let matrix = standard_matrix().unwrap();
        assert_eq!(matrix.runs.len(), 3);
        for run in &matrix.runs {
            assert_eq!(run.cells.len(), 4);
        }
        // Capacity grows with training length.
        let etas: Vec<f64> = matrix.runs.iter().map(|r| r.eta_before).collect();
        assert!(etas[0] < etas[1] && etas[1] < etas[2], "etas {etas:?}");
        assert!(matrix.contrapositive_holds(), "{matrix:#?}");
        assert!(matrix.has_degraded_violation(), "{matrix:#?}");
        // Longer training shrinks the safe compression ratio (weakly).
        let ratios = matrix.max_undegraded_ratios(STANDARD_SOURCE_WIDTH);
        for pair in ratios.windows(2) {
            let a = pair[0].unwrap_or(0.0);
            let b = pair[1].unwrap_or(0.0);
            assert!(a >= b, "ratios not non-increasing: {ratios:?}");
        }
    }

    #[test]
    fn jsonl_results_one_line_per_cell() {
        let (lm, eval) = trained_tiny_lm(200);
        let cells = DegradationExperiment {
            predictor: &lm,
            source_width: 32,
            eta_before: 0.01,
            eval_stream: &eval,
            entropy_bits: 1.0,
            target_widths: &[4, 8],
            tolerance: DEGRADATION_TOLERANCE,
        }
        .run()
        .unwrap();
        let mut buf = Vec::new();
        write_results_jsonl(&mut buf, "unit", &cells).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["run"], "unit");
        }
    }
}
