use iclab::quantlab::standard_matrix;
fn main() {
    let m = standard_matrix().unwrap();
    for r in &m.runs {
        print!("len {:4} h0 {:.4} Lbar {:.4} eta {:+.5} demand {:+.3}", r.training_tokens, r.entropy_bits, r.training_loss, r.eta_before, r.eta_before*32.0);
        for c in &r.cells {
            print!("  b'{}: d={:+.4} pass={} deg={}", c.b_prime, c.degradation, c.condition_pass, c.degraded);
        }
        println!();
    }
    println!("contrapositive: {}  violation-exists: {}", m.contrapositive_holds(), m.has_degraded_violation());
    println!("ratios: {:?}", m.max_undegraded_ratios(32));
}
