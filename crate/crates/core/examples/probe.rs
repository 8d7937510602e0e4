use iclab::codec::{ideal_codelength};
use iclab::ic_laws::ICState;
use iclab::predictors::{Predictor, TinyLm, UpdateMode};
use iclab::quantlab::{quantize_predictor};
use iclab::sources::{plugin_entropy, sample_stream, Source};

fn main() {
    let source = Source::binary_switch(0.9).unwrap();
    let eval = sample_stream(&source, 2000, 9001).unwrap();
    for len in [40usize, 120, 220, 260, 300, 340, 380, 420, 500, 700] {
        let train = sample_stream(&source, len, 7700).unwrap();
        let h0 = plugin_entropy(&train, 0).unwrap().value;
        let mut lm = Predictor::TinyLm(TinyLm::new(2, 3, 8, 32, 424_242, 0.05).unwrap());
        let rep = ideal_codelength(&train, &mut lm, UpdateMode::Online).unwrap();
        let eta = ICState::new(len as u64, h0, rep.bits_per_token(), lm.param_bits()).eta.unwrap();
        let mut base = lm.clone();
        let lb = ideal_codelength(&eval, &mut base, UpdateMode::Frozen).unwrap().bits_per_token();
        print!("len {len:4} h0 {h0:.4} Lbar {:.4} eta {eta:+.5} demand {:+.3} Lfrozen {lb:.4}", rep.bits_per_token(), eta*32.0);
        for w in [1u8, 2, 4, 8] {
            let mut q = quantize_predictor(&lm, w).unwrap();
            let la = ideal_codelength(&eval, &mut q, UpdateMode::Frozen).unwrap().bits_per_token();
            print!("  d{w}={:+.4}", la - lb);
        }
        println!();
    }
}
