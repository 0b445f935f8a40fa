use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cellfree::evaluation::empirical_cdf;
use cellfree::harness::format_sig10;
use cellfree::linalg::{complex_normal, max_abs_diff, CMat};
use cellfree::oracle::{random_pi, stacked_team_solve};
use cellfree::precoding::{effective_channel, local_mmse_stage, solve_team_stages, TeamStages};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stage_solver_residual(seed in any::<u64>(), aps in 1usize..=6, k in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi: Vec<CMat> = (0..aps).map(|_| random_pi(k, 0.95, &mut rng)).collect();
        let stages = TeamStages::from_pi(pi.clone()).unwrap();
        prop_assert!(stages.residual() < 1e-10);
        let slow = stacked_team_solve(&pi).unwrap();
        for (a, b) in stages.c.iter().zip(&slow) {
            prop_assert!(max_abs_diff(a, b) < 1e-10);
        }
    }

    #[test]
    fn effective_channel_is_a_contraction(seed in any::<u64>(), n in 1usize..=4, k in 1usize..=6, sigma in 0.01f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = CMat::from_fn(n, k, |_, _| complex_normal(&mut rng, 3.0));
        let p_sqrt: Vec<f64> = (0..k).map(|i| 0.5 + i as f64 * 0.25).collect();
        let pi = effective_channel(&h, &p_sqrt, sigma);
        let eig = pi.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&e| e > -1e-12 && e < 1.0));
        prop_assert!(solve_team_stages(&[pi.clone(), pi]).is_ok());
        let f = local_mmse_stage(&h, &p_sqrt, sigma);
        prop_assert_eq!(f.shape(), (n, k));
    }

    #[test]
    fn cdf_is_monotone(rates in prop::collection::vec(0.0f64..20.0, 1..200)) {
        let cdf = empirical_cdf(&rates).unwrap();
        prop_assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(cdf.last().unwrap().1, 1.0);
    }

    #[test]
    fn ten_digits_round_trip(x in 1e-6f64..1e6) {
        let s = format_sig10(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!(((back - x) / x).abs() < 1e-9, "{} -> {}", x, s);
    }
}
