#[path = "support/oracle.rs"]
mod oracle;

use proptest::prelude::*;
use quadsim_verify::{expected_reward, reach_probability, Opt, SolveOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_strategy_enumeration() {
    let worst = oracle::max_disagreement(200, 2024);
    assert!(worst < 1e-9, "worst disagreement {worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn min_below_max(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, t) = oracle::random_mdp(&mut rng, 12, 3);
        let o = SolveOptions::default();
        let lo = reach_probability(&m, &t, Opt::Min, &o).unwrap();
        let hi = reach_probability(&m, &t, Opt::Max, &o).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(*a >= 0.0 && *b <= 1.0 && *a <= *b + 1e-9);
        }
        let r = m.reward("r").unwrap();
        let rlo = expected_reward(&m, r, &t, Opt::Min, &o).unwrap();
        let rhi = expected_reward(&m, r, &t, Opt::Max, &o).unwrap();
        for (s, (a, b)) in rlo.iter().zip(&rhi).enumerate() {
            prop_assert!(*a <= *b * (1.0 + 1e-9) + 1e-9);
            prop_assert_eq!(a.is_finite(), hi[s] > 1.0 - 1e-9);
            prop_assert_eq!(b.is_finite(), lo[s] > 1.0 - 1e-9);
        }
    }
}
