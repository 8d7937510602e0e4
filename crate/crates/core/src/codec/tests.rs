use proptest::prelude::*;

use crate::predictors::{
    average_cross_entropy, ngram_predictor, oracle_predictor, tiny_lm_predictor,
    to_checkpoint_bytes, uniform_predictor, Predictor, UpdateMode,
};
use crate::sources::{exact_entropy_rate, sample_stream, Source, TokenStream};

use super::*;

fn assert_close(got: f64, want: f64, tol: f64) {
    assert!(
        (got - want).abs() <= tol,
        "got {got}, want {want} within {tol}"
    );
}

/// The coder's contractual overhead bound.
fn overhead_bound(ideal_bits: f64) -> f64 {
    32.0 + 2e-4 * ideal_bits
}

fn roundtrip_case(stream: &TokenStream, initial: &Predictor, mode: UpdateMode) -> CodeReport {
    let mut encoder_state = initial.clone();
    let (bits, report) = encode(stream, &mut encoder_state, mode).unwrap();
    let total = report.total_bits.unwrap() as f64;
    assert!(total >= report.ideal_bits - 1e-6, "total {total} under ideal");
    assert!(
        total - report.ideal_bits <= overhead_bound(report.ideal_bits),
        "overhead {} over bound {} (ideal {})",
        total - report.ideal_bits,
        overhead_bound(report.ideal_bits),
        report.ideal_bits
    );

    let mut decoder_state = initial.clone();
    let decoded = decode(&bits, &mut decoder_state, mode, stream.len() as u64).unwrap();
    assert_eq!(&decoded, stream, "roundtrip mismatch");
    assert_eq!(
        to_checkpoint_bytes(&encoder_state),
        to_checkpoint_bytes(&decoder_state),
        "encoder and decoder end states differ"
    );
    report
}

#[test]
fn uniform_ideal_codelength_is_exact() {
    let stream = sample_stream(&Source::iid_uniform(4).unwrap(), 100, 0).unwrap();
    let mut p = uniform_predictor(4).unwrap();
    let report = ideal_codelength(&stream, &mut p, UpdateMode::Frozen).unwrap();
    assert_eq!(report.ideal_bits, 200.0);
    assert_eq!(report.token_count, 100);
    assert_eq!(report.clamped_tokens, 0);
}

#[test]
fn empty_stream_codes_to_a_few_bits() {
    let stream = TokenStream::empty(4).unwrap();
    let mut p = uniform_predictor(4).unwrap();
    let (bits, report) = encode(&stream, &mut p, UpdateMode::Online).unwrap();
    assert!(report.total_bits.unwrap() <= 40);
    let mut q = uniform_predictor(4).unwrap();
    let decoded = decode(&bits, &mut q, UpdateMode::Online, 0).unwrap();
    assert!(decoded.is_empty());
}

#[test]
fn single_token_roundtrip() {
    let stream = TokenStream::new(4, vec![2]).unwrap();
    let p = ngram_predictor(4, 1, 0.5).unwrap();
    for mode in [UpdateMode::Frozen, UpdateMode::Online] {
        roundtrip_case(&stream, &p, mode);
    }
}

#[test]
fn uniform_predictor_total_bits_bound() {
    // |V| = 2^m: the uniform distribution quantizes exactly, so the coder
    // spends m bits per token plus termination.
    for m in [1u32, 2, 8] {
        let vocab = 1u32 << m;
        let source = Source::iid_uniform(vocab).unwrap();
        let stream = sample_stream(&source, 1000, u64::from(m)).unwrap();
        let p = uniform_predictor(vocab).unwrap();
        let report = roundtrip_case(&stream, &p, UpdateMode::Frozen);
        let total = report.total_bits.unwrap();
        assert!(
            total <= u64::from(m) * 1000 + 40,
            "m = {m}: {total} bits over {}",
            u64::from(m) * 1000 + 40
        );
    }
}

#[test]
fn oracle_rate_approaches_source_entropy() {
    let source = Source::binary_switch(0.9).unwrap();
    let h = exact_entropy_rate(&source).unwrap().value;
    let stream = sample_stream(&source, 100_000, 21).unwrap();
    let p = oracle_predictor(&source).unwrap();
    let report = roundtrip_case(&stream, &p, UpdateMode::Frozen);
    assert_close(report.bits_per_token(), h, 0.01);
    let total_per_token = report.total_bits.unwrap() as f64 / 100_000.0;
    assert_close(total_per_token, h, 0.02);
    assert!(total_per_token < 1.0, "must beat the 1 bit/token naive bound");
}

#[test]
fn online_ngram_learns_alternating_stream() {
    let source = Source::deterministic(2, vec![0, 1]).unwrap();
    let stream = sample_stream(&source, 1000, 0).unwrap();
    let mut p = ngram_predictor(2, 1, 0.5).unwrap();
    let report = ideal_codelength(&stream, &mut p, UpdateMode::Online).unwrap();
    assert!(
        report.bits_per_token() < 0.1,
        "prequential rate {} too high",
        report.bits_per_token()
    );
}

#[test]
fn roundtrip_across_kinds_and_modes() {
    let markov = Source::binary_switch(0.85).unwrap();
    let iid = Source::iid(vec![0.6, 0.25, 0.1, 0.05]).unwrap();
    let cases: Vec<(Predictor, TokenStream)> = vec![
        (
            uniform_predictor(2).unwrap(),
            sample_stream(&markov, 700, 1).unwrap(),
        ),
        (
            ngram_predictor(2, 1, 0.5).unwrap(),
            sample_stream(&markov, 700, 2).unwrap(),
        ),
        (
            ngram_predictor(4, 2, 0.25).unwrap(),
            sample_stream(&iid, 700, 3).unwrap(),
        ),
        (
            tiny_lm_predictor(4, 2, 6, 16, 9).unwrap(),
            sample_stream(&iid, 300, 4).unwrap(),
        ),
        (
            oracle_predictor(&markov).unwrap(),
            sample_stream(&markov, 700, 5).unwrap(),
        ),
    ];
    for (initial, stream) in &cases {
        for mode in [UpdateMode::Frozen, UpdateMode::Online] {
            roundtrip_case(stream, initial, mode);
        }
    }
}

#[test]
fn prequential_end_states_match_ideal_codelength() {
    let source = Source::binary_switch(0.9).unwrap();
    let stream = sample_stream(&source, 2000, 6).unwrap();
    let initial = ngram_predictor(2, 1, 0.5).unwrap();

    let mut via_encode = initial.clone();
    encode(&stream, &mut via_encode, UpdateMode::Online).unwrap();
    let mut via_ideal = initial.clone();
    ideal_codelength(&stream, &mut via_ideal, UpdateMode::Online).unwrap();
    assert_eq!(
        to_checkpoint_bytes(&via_encode),
        to_checkpoint_bytes(&via_ideal)
    );
}

#[test]
fn sharp_distributions_stay_within_overhead_bound() {
    // Near-delta rows over a 256-token vocabulary pay the frequency floor
    // for 255 symbols; the constant term of the bound absorbs it at this
    // length.
    let cycle: Vec<u32> = (0..256u32).collect();
    let source = Source::deterministic(256, cycle).unwrap();
    let stream = sample_stream(&source, 1000, 0).unwrap();
    let p = oracle_predictor(&source).unwrap();
    let report = roundtrip_case(&stream, &p, UpdateMode::Frozen);
    // The stream is fully predictable: the ideal rate is ~0.
    assert!(report.ideal_bits < 1e-6);
}

#[test]
fn ideal_codelength_matches_cross_entropy_path() {
    let source = Source::binary_switch(0.8).unwrap();
    let stream = sample_stream(&source, 5000, 7).unwrap();
    for mode in [UpdateMode::Frozen, UpdateMode::Online] {
        let mut a = ngram_predictor(2, 1, 0.5).unwrap();
        let codec_report = ideal_codelength(&stream, &mut a, mode).unwrap();
        let mut b = ngram_predictor(2, 1, 0.5).unwrap();
        let ce = average_cross_entropy(&stream, &mut b, mode).unwrap();
        assert_close(codec_report.bits_per_token(), ce.average_bits, 1e-9);
    }
}

#[test]
fn truncated_bitstream_is_detected() {
    let source = Source::iid_uniform(16).unwrap();
    let stream = sample_stream(&source, 400, 8).unwrap();
    let mut p = uniform_predictor(16).unwrap();
    let (bits, _) = encode(&stream, &mut p, UpdateMode::Frozen).unwrap();
    // Keep only the first few bytes.
    let truncated = CodeBits {
        bytes: bits.bytes[..4].to_vec(),
        bit_len: 32,
    };
    let mut q = uniform_predictor(16).unwrap();
    let result = decode(&truncated, &mut q, UpdateMode::Frozen, 400);
    assert!(
        matches!(result, Err(CodecError::TruncatedBitstream { .. })),
        "expected truncation error, got {result:?}"
    );
}

#[test]
fn vocab_guards() {
    let stream = TokenStream::new(4, vec![0, 1]).unwrap();
    let mut p = uniform_predictor(2).unwrap();
    assert!(matches!(
        ideal_codelength(&stream, &mut p, UpdateMode::Frozen),
        Err(CodecError::VocabMismatch { .. })
    ));
}

#[test]
fn container_roundtrip() {
    let source = Source::binary_switch(0.9).unwrap();
    let stream = sample_stream(&source, 500, 9).unwrap();
    let initial = ngram_predictor(2, 1, 0.5).unwrap();
    let mut state = initial.clone();
    let (bits, _) = encode(&stream, &mut state, UpdateMode::Online).unwrap();
    let enc = EncodedStream {
        mode: UpdateMode::Online,
        checkpoint_hash: crate::predictors::checkpoint_hash(&initial),
        token_count: stream.len() as u64,
        vocab_size: stream.vocab_size(),
        bits,
    };
    let mut buf = Vec::new();
    write_container(&mut buf, &enc).unwrap();
    let back = read_container(buf.as_slice()).unwrap();
    assert_eq!(enc, back);

    let mut decoder_state = initial.clone();
    let decoded = decode(&back.bits, &mut decoder_state, back.mode, back.token_count).unwrap();
    assert_eq!(decoded, stream);
}

#[test]
fn container_rejects_corruption() {
    let enc = EncodedStream {
        mode: UpdateMode::Frozen,
        checkpoint_hash: [0u8; 32],
        token_count: 0,
        vocab_size: 2,
        bits: CodeBits::empty(),
    };
    let mut buf = Vec::new();
    write_container(&mut buf, &enc).unwrap();
    buf[0] = b'Z';
    assert!(matches!(
        read_container(buf.as_slice()),
        Err(CodecError::BadMagic(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Lossless roundtrip with an online n-gram (the model evolves during
    // both encode and decode) over arbitrary token content.
    #[test]
    fn prop_online_ngram_roundtrip(
        tokens in proptest::collection::vec(0u32..5, 1..300),
        alpha in 0.05f64..2.0,
    ) {
        let stream = TokenStream::new(5, tokens).unwrap();
        let initial = ngram_predictor(5, 1, alpha).unwrap();
        let mut enc_state = initial.clone();
        let (bits, report) = encode(&stream, &mut enc_state, UpdateMode::Online).unwrap();
        let mut dec_state = initial.clone();
        let decoded = decode(&bits, &mut dec_state, UpdateMode::Online, stream.len() as u64).unwrap();
        prop_assert_eq!(&decoded, &stream);
        let total = report.total_bits.unwrap() as f64;
        prop_assert!(total - report.ideal_bits <= overhead_bound(report.ideal_bits));
        prop_assert!(total >= report.ideal_bits - 1e-6);
    }

    // Frozen tiny LM: softmax distributions with arbitrary contexts.
    #[test]
    fn prop_frozen_tiny_lm_roundtrip(
        tokens in proptest::collection::vec(0u32..3, 1..120),
        seed in any::<u64>(),
    ) {
        let stream = TokenStream::new(3, tokens).unwrap();
        let initial = tiny_lm_predictor(3, 2, 4, 16, seed).unwrap();
        let mut enc_state = initial.clone();
        let (bits, _) = encode(&stream, &mut enc_state, UpdateMode::Frozen).unwrap();
        let mut dec_state = initial.clone();
        let decoded = decode(&bits, &mut dec_state, UpdateMode::Frozen, stream.len() as u64).unwrap();
        prop_assert_eq!(decoded, stream);
    }
}
