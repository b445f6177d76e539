mod common;

use common::{hand_support, lp_transport, random_dist};
use opinion_align::metrics::{wasserstein_1d, OrdinalSupport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_matches_transport_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let ordinal = rng.gen_range(2..=5);
        let hedge = rng.gen_bool(0.5);
        let support = hand_support(ordinal, hedge);
        let p = random_dist(&mut rng, support.len());
        let q = random_dist(&mut rng, support.len());
        let fast = wasserstein_1d(&p, &q, &support).unwrap();
        let lp = lp_transport(&p, &q, &support);
        assert!(
            (fast - lp).abs() < 1e-9,
            "support {support:?} p {p:?} q {q:?}: {fast} vs {lp}"
        );
    }
}

#[test]
fn support_matches_hand_construction() {
    for ordinal in 2..=5 {
        for hedge in [false, true] {
            for refusal in [false, true] {
                let q = common::question("Q", ordinal, hedge, refusal);
                assert_eq!(OrdinalSupport::for_question(&q).values, hand_support(ordinal, hedge));
            }
        }
    }
}

#[test]
fn lp_oracle_on_hand_cases() {
    assert!((lp_transport(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]) - 2.0).abs() < 1e-12);
    assert!((lp_transport(&[0.5, 0.5], &[0.5, 0.5], &[1.0, 2.0])).abs() < 1e-12);
    assert!((lp_transport(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[1.0, 2.0, 1.5]) - 0.5).abs() < 1e-12);
}
