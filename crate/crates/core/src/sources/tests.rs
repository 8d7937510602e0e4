use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;

fn assert_close(got: f64, want: f64, tol: f64) {
    assert!(
        (got - want).abs() <= tol,
        "got {got}, want {want} within {tol}"
    );
}

/// Direct-arithmetic oracle for the binary stay/switch chain: the stationary
/// distribution is uniform by symmetry, so the rate is the row entropy.
fn switch_chain_entropy(stay: f64) -> f64 {
    -(stay * stay.log2() + (1.0 - stay) * (1.0 - stay).log2())
}

#[test]
fn deterministic_cycle_sampling() {
    let source = Source::deterministic(2, vec![0, 1]).unwrap();
    for seed in [0u64, 7, 123456789] {
        let stream = sample_stream(&source, 4, seed).unwrap();
        assert_eq!(stream.tokens(), &[0, 1, 0, 1]);
    }
}

#[test]
fn iid_uniform_frequencies_by_direct_count() {
    let source = Source::iid_uniform(4).unwrap();
    let stream = sample_stream(&source, 100_000, 7).unwrap();
    let mut counts = [0u64; 4];
    for &t in stream.tokens() {
        counts[t as usize] += 1;
    }
    for &c in &counts {
        let freq = c as f64 / 100_000.0;
        assert_close(freq, 0.25, 0.01);
    }
}

#[test]
fn sampling_is_pure_in_inputs() {
    let source = Source::binary_switch(0.9).unwrap();
    let a = sample_stream(&source, 5_000, 7).unwrap();
    let b = sample_stream(&source, 5_000, 7).unwrap();
    assert_eq!(a, b);
    let c = sample_stream(&source, 5_000, 8).unwrap();
    assert_ne!(a, c);
}

#[test]
fn exact_entropy_iid_uniform() {
    let source = Source::iid_uniform(4).unwrap();
    let h = exact_entropy_rate(&source).unwrap();
    assert_eq!(h.method, EntropyMethod::Exact);
    assert_close(h.value, 2.0, 1e-12);
}

#[test]
fn exact_entropy_deterministic_is_zero() {
    let source = Source::deterministic(3, vec![0, 1, 2, 1]).unwrap();
    assert_eq!(exact_entropy_rate(&source).unwrap().value, 0.0);
}

#[test]
fn exact_entropy_binary_switch_chain() {
    let source = Source::binary_switch(0.9).unwrap();
    let h = exact_entropy_rate(&source).unwrap();
    let oracle = switch_chain_entropy(0.9);
    assert_close(h.value, oracle, 1e-12);
    assert_close(h.value, 0.4690, 5e-5);
}

#[test]
fn stationary_of_asymmetric_chain() {
    // pi P = pi with P = [[0.5, 0.5], [0.25, 0.75]] gives pi = (1/3, 2/3).
    let mut transitions = BTreeMap::new();
    transitions.insert(vec![0], vec![0.5, 0.5]);
    transitions.insert(vec![1], vec![0.25, 0.75]);
    let source = Source::markov(2, 1, transitions).unwrap();
    let chain = source.context_chain().unwrap();
    let pi = chain.stationary().unwrap();
    assert_close(pi[0], 1.0 / 3.0, 1e-12);
    assert_close(pi[1], 2.0 / 3.0, 1e-12);
}

#[test]
fn periodic_irreducible_chain_still_has_unique_stationary() {
    // Deterministic two-cycle as a Markov chain: periodic but irreducible.
    let mut transitions = BTreeMap::new();
    transitions.insert(vec![0], vec![0.0, 1.0]);
    transitions.insert(vec![1], vec![1.0, 0.0]);
    let source = Source::markov(2, 1, transitions).unwrap();
    let chain = source.context_chain().unwrap();
    let pi = chain.stationary().unwrap();
    assert_close(pi[0], 0.5, 1e-12);
    assert_close(pi[1], 0.5, 1e-12);
    assert_close(exact_entropy_rate(&source).unwrap().value, 0.0, 1e-12);
}

#[test]
fn reducible_chain_with_two_closed_classes_errors() {
    let mut transitions = BTreeMap::new();
    transitions.insert(vec![0], vec![1.0, 0.0]);
    transitions.insert(vec![1], vec![0.0, 1.0]);
    let source = Source::markov(2, 1, transitions).unwrap();
    let err = exact_entropy_rate(&source).unwrap_err();
    match err {
        SourceError::MultipleClosedClasses { count, classes } => {
            assert_eq!(count, 2);
            assert!(classes.contains("[0]") && classes.contains("[1]"), "{classes}");
        }
        other => panic!("expected MultipleClosedClasses, got {other}"),
    }
}

#[test]
fn transient_contexts_get_zero_stationary_mass() {
    // From context [1] the chain can only move to [0]; [0] keeps itself.
    let mut transitions = BTreeMap::new();
    transitions.insert(vec![0], vec![1.0, 0.0]);
    transitions.insert(vec![1], vec![1.0, 0.0]);
    let source = Source::markov(2, 1, transitions).unwrap();
    let chain = source.context_chain().unwrap();
    let pi = chain.stationary().unwrap();
    assert_close(pi[0], 1.0, 1e-12);
    assert_close(pi[1], 0.0, 1e-12);
}

#[test]
fn probability_sum_mismatch_rejected() {
    let err = Source::iid(vec![0.5, 0.6]).unwrap_err();
    assert!(matches!(err, SourceError::ProbabilitySum { .. }));
}

#[test]
fn missing_reachable_context_rejected() {
    let mut transitions = BTreeMap::new();
    transitions.insert(vec![0], vec![0.5, 0.5]);
    // Context [1] is reachable from [0] but absent.
    let err = Source::markov(2, 1, transitions).unwrap_err();
    assert!(matches!(err, SourceError::MissingContext { .. }));
}

#[test]
fn plugin_entropy_alternating_is_zero() {
    let source = Source::deterministic(2, vec![0, 1]).unwrap();
    let stream = sample_stream(&source, 10_000, 0).unwrap();
    let h = plugin_entropy(&stream, 1).unwrap();
    assert_eq!(h.method, EntropyMethod::Plugin { order: 1 });
    assert_close(h.value, 0.0, 1e-12);
}

#[test]
fn plugin_entropy_iid_uniform_order0() {
    let source = Source::iid_uniform(4).unwrap();
    let stream = sample_stream(&source, 100_000, 11).unwrap();
    let h = plugin_entropy(&stream, 0).unwrap();
    assert_close(h.value, 2.0, 0.01);
}

#[test]
fn plugin_entropy_matches_exact_rate_on_markov_stream() {
    let source = Source::binary_switch(0.9).unwrap();
    let exact = exact_entropy_rate(&source).unwrap().value;
    let stream = sample_stream(&source, 100_000, 3).unwrap();
    let h = plugin_entropy(&stream, 1).unwrap();
    assert_close(h.value, exact, 0.02);
}

#[test]
fn plugin_entropy_non_increasing_in_order() {
    for (source, seed) in [
        (Source::binary_switch(0.9).unwrap(), 5u64),
        (Source::iid_uniform(4).unwrap(), 6u64),
    ] {
        let stream = sample_stream(&source, 100_000, seed).unwrap();
        let mut prev = f64::INFINITY;
        for order in 0..4 {
            let h = plugin_entropy(&stream, order).unwrap().value;
            assert!(
                h <= prev + 0.01,
                "order {order}: {h} > previous {prev} + 0.01"
            );
            prev = h;
        }
    }
}

#[test]
fn plugin_entropy_rejects_empty_and_short_streams() {
    let empty = TokenStream::empty(2).unwrap();
    assert!(matches!(
        plugin_entropy(&empty, 0),
        Err(SourceError::EmptyStream)
    ));
    let short = TokenStream::new(2, vec![0, 1]).unwrap();
    assert!(matches!(
        plugin_entropy(&short, 2),
        Err(SourceError::StreamTooShort { .. })
    ));
}

#[test]
fn entropy_bounds_hold_for_test_sources() {
    let sources = [
        Source::iid_uniform(4).unwrap(),
        Source::iid(vec![0.7, 0.1, 0.1, 0.1]).unwrap(),
        Source::binary_switch(0.9).unwrap(),
        Source::deterministic(4, vec![0, 3, 2]).unwrap(),
    ];
    for source in &sources {
        let h = exact_entropy_rate(source).unwrap().value;
        let cap = f64::from(source.vocab_size()).log2();
        assert!(h >= 0.0 && h <= cap + 1e-9, "H = {h} outside [0, {cap}]");
    }
}

#[test]
fn source_json_roundtrip() {
    let source = Source::binary_switch(0.9).unwrap();
    let json = source.to_json();
    let back = Source::from_json(&json).unwrap();
    assert_eq!(source, back);
    // Context keys are comma-separated token lists.
    assert!(json.contains("\"transitions\""));
    assert!(json.contains("\"0\""));
}

#[test]
fn source_json_rejects_invalid_spec() {
    let bad = r#"{"vocab_size": 2, "kind": {"type": "iid", "probabilities": [0.5, 0.6]}}"#;
    assert!(Source::from_json(bad).is_err());
}

#[test]
fn markov_stream_starts_from_stationary_context() {
    // With a stationary start, first-token frequencies match pi from the
    // first position, no burn-in: check token 0 frequency over seeds.
    let mut transitions = BTreeMap::new();
    transitions.insert(vec![0], vec![0.5, 0.5]);
    transitions.insert(vec![1], vec![0.25, 0.75]);
    let source = Source::markov(2, 1, transitions).unwrap();
    let mut zeros = 0u32;
    let trials = 4_000;
    for seed in 0..trials {
        let stream = sample_stream(&source, 1, seed as u64).unwrap();
        if stream.tokens()[0] == 0 {
            zeros += 1;
        }
    }
    let freq = f64::from(zeros) / f64::from(trials);
    assert_close(freq, 1.0 / 3.0, 0.03);
}

#[test]
fn stream_file_roundtrip_all_widths() {
    for vocab in [2u32, 300, 70_000] {
        let tokens: Vec<u32> = (0..500u32).map(|i| (i * 7919) % vocab).collect();
        let stream = TokenStream::new(vocab, tokens).unwrap();
        let mut buf = Vec::new();
        stream.write_to(&mut buf).unwrap();
        let back = TokenStream::read_from(buf.as_slice()).unwrap();
        assert_eq!(stream, back);
    }
}

#[test]
fn stream_file_rejects_bad_magic() {
    let stream = TokenStream::new(4, vec![0, 1, 2, 3]).unwrap();
    let mut buf = Vec::new();
    stream.write_to(&mut buf).unwrap();
    buf[0] = b'X';
    assert!(matches!(
        TokenStream::read_from(buf.as_slice()),
        Err(SourceError::BadMagic { .. })
    ));
}

#[test]
fn stream_rejects_out_of_range_tokens() {
    assert!(matches!(
        TokenStream::new(2, vec![0, 2]),
        Err(SourceError::TokenOutOfRange { .. })
    ));
}

proptest! {
    #[test]
    fn prop_sample_stream_is_deterministic(seed in any::<u64>(), len in 1usize..200) {
        let source = Source::binary_switch(0.8).unwrap();
        let a = sample_stream(&source, len, seed).unwrap();
        let b = sample_stream(&source, len, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn prop_iid_entropy_below_log_vocab(raw in proptest::collection::vec(0.01f64..1.0, 2..9)) {
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let source = Source::iid(probs).unwrap();
        let h = exact_entropy_rate(&source).unwrap().value;
        let cap = (source.vocab_size() as f64).log2();
        prop_assert!(h >= 0.0 && h <= cap + 1e-9);
    }

    #[test]
    fn prop_stream_file_roundtrip(vocab in 2u32..1000, len in 0usize..128, seed in any::<u64>()) {
        let mut state = seed;
        let tokens: Vec<u32> = (0..len).map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as u32 % vocab
        }).collect();
        let stream = TokenStream::new(vocab, tokens).unwrap();
        let mut buf = Vec::new();
        stream.write_to(&mut buf).unwrap();
        let back = TokenStream::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(stream, back);
    }
}
