use iclab::telemetry::*;
use iclab::predictors::{PredictorSpec, UpdateMode};
use iclab::sources::Source;
fn main() {
    let config = RunConfig {
        source: Some(Source::binary_switch(0.9).unwrap()),
        log_path: None,
        predictor: Some(PredictorSpec::Ngram { order: 1, alpha: 0.5, count_bits: 32 }),
        mode: UpdateMode::Online,
        stream_length: Some(50),
        seed: 5,
        temperature_kelvin: 300.0,
        entropy_bits: None,
        param_bits: None,
        outputs: None,
    };
    let doc = run_experiment(&config).unwrap();
    let json = render_json(&doc);
    let back: ICReportDocument = serde_json::from_str(&json).unwrap();
    if doc != back {
        let json2 = render_json(&back);
        for (a, b) in json.lines().zip(json2.lines()) {
            if a != b { println!("A: {a}\nB: {b}"); }
        }
    } else { println!("equal"); }
}
