mod common;

use common::{random_orthogonal, random_source, rng};
use mtrd_core::berger_tung::{conditional_structure, TestChannelSpec};
use mtrd_core::centralized::r_centralized;
use mtrd_core::closed::{r_two_terminal, r_two_terminal_general, trusted_radius};
use mtrd_core::opt::{objective_and_gradient, solve_rd, NoisePattern, SolverConfig};
use mtrd_core::{gap_coefficient, Cover, GaussianSource, SymMatrix, Topology};
use proptest::prelude::*;

fn cover_strategy() -> impl Strategy<Value = Cover> {
    (1usize..=6).prop_flat_map(|l| {
        let full = (1u32 << l) - 1;
        prop::collection::vec(1..=full, 1..6).prop_map(move |masks| {
            let union = masks.iter().fold(0, |a, m| a | m);
            let mut sets: Vec<Vec<usize>> = masks
                .iter()
                .map(|m| (0..l).filter(|i| m >> i & 1 == 1).collect())
                .collect();
            sets.extend((0..l).filter(|i| union >> i & 1 == 0).map(|i| vec![i]));
            Cover::new(l, &sets).unwrap()
        })
    })
}

fn cover_triple() -> impl Strategy<Value = (Cover, Cover, Cover)> {
    (1usize..=4).prop_flat_map(|l| {
        let one = move || {
            let full = (1u32 << l) - 1;
            prop::collection::vec(1..=full, 1..5).prop_map(move |masks| {
                let union = masks.iter().fold(0, |a, m| a | m);
                let mut sets: Vec<Vec<usize>> = masks
                    .iter()
                    .map(|m| (0..l).filter(|i| m >> i & 1 == 1).collect())
                    .collect();
                sets.extend((0..l).filter(|i| union >> i & 1 == 0).map(|i| vec![i]));
                Cover::new(l, &sets).unwrap()
            })
        };
        (one(), one(), one())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn reduce_is_canonical(c in cover_strategy()) {
        let r = c.reduce();
        prop_assert_eq!(r.reduce(), r.clone());
        prop_assert!(r.is_non_redundant());
        prop_assert!(r.equivalent(&c).unwrap());
        prop_assert!(c.dominates(&c).unwrap());
        let mut perm: Vec<usize> = (0..c.num_sources()).collect();
        perm.rotate_left(1);
        let moved = c.relabel(&perm).unwrap();
        prop_assert_eq!(moved.reduce(), r.relabel(&perm).unwrap());
    }

    #[test]
    fn dominance_is_a_preorder((a, b, c) in cover_triple()) {
        if a.dominates(&b).unwrap() && b.dominates(&c).unwrap() {
            prop_assert!(a.dominates(&c).unwrap());
        }
        let ab = a.dominates(&b).unwrap() && b.dominates(&a).unwrap();
        prop_assert_eq!(ab, a.reduce() == b.reduce());
        prop_assert_eq!(ab, a.equivalent(&b).unwrap());
    }

    #[test]
    fn uncovered_pairs_shrink_under_dominance((a, b, _c) in cover_triple(), seed in any::<u64>()) {
        let src = random_source(&mut rng(seed), a.num_sources(), 0.2, 5.0);
        if a.dominates(&b).unwrap() {
            let pa = a.uncovered_pairs();
            prop_assert!(pa.iter().all(|p| b.uncovered_pairs().contains(p)));
            prop_assert!(gap_coefficient(&src, &a).unwrap() <= gap_coefficient(&src, &b).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn logdet_is_sum_of_log_eigenvalues(seed in any::<u64>(), n in 1usize..=8) {
        let s = random_source(&mut rng(seed), n, 0.05, 20.0);
        let from_eigs: f64 = s.spectrum().iter().map(|l| l.ln()).sum();
        prop_assert!((s.logdet_gamma() - from_eigs).abs() < 1e-10 * (1.0 + from_eigs.abs()));
    }

    #[test]
    fn inverse_round_trip(seed in any::<u64>(), n in 1usize..=8) {
        let s = random_source(&mut rng(seed), n, 0.05, 20.0);
        let prod = s.gamma().mul(s.theta()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((prod[i][j] - target).abs() < 1e-11);
            }
        }
        prop_assert!(s.theta().inverse().unwrap().max_abs_diff(s.gamma()) < 1e-10 * s.gamma().max_abs());
    }

    #[test]
    fn centralized_rate_is_orthogonally_invariant(seed in any::<u64>(), n in 1usize..=6, d in 0.01f64..3.0) {
        let mut r = rng(seed);
        let s = random_source(&mut r, n, 0.1, 5.0);
        let q = random_orthogonal(&mut r, n);
        let g = s.gamma().to_rows();
        let mut rotated = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc += q[i][a] * g[a][b] * q[j][b];
                    }
                }
                rotated[i][j] = acc;
            }
        }
        let t = GaussianSource::new(SymMatrix::symmetrize(&rotated).unwrap()).unwrap();
        let (a, b) = (r_centralized(&s, d).unwrap().rate, r_centralized(&t, d).unwrap().rate);
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn two_terminal_sandwich(seed in any::<u64>(), frac in 0.05f64..0.75) {
        let s = random_source(&mut rng(seed), 2, 0.1, 5.0);
        let d = frac * trusted_radius(&s);
        let r = r_two_terminal(&s, d).unwrap();
        let rc = r_centralized(&s, d).unwrap().rate;
        prop_assert!(r.rate >= rc - 1e-12);
        let swapped = s.permuted(&[1, 0]).unwrap();
        let a = r_two_terminal_general(&s, 0.7 * d, 1.3 * d).unwrap();
        let b = r_two_terminal_general(&swapped, 1.3 * d, 0.7 * d).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn test_channel_factorization(
        seed in any::<u64>(),
        lambda in 0.05f64..0.95,
        alphas in prop::array::uniform3(0.0f64..20.0),
        triangle in any::<bool>(),
    ) {
        let s = random_source(&mut rng(seed), 3, 0.1, 5.0);
        let topology = if triangle { Topology::Triangle } else { Topology::TwoPairs };
        let spec = TestChannelSpec::new(&s, topology, lambda, alphas).unwrap();
        let r = conditional_structure(&s, &spec).unwrap();
        prop_assert!(r.structure_residual <= 1e-9);
        prop_assert!(r.markov_residual <= 1e-9);
        let mean = r.distortions.iter().sum::<f64>() / 3.0;
        prop_assert!(r.rate >= r_centralized(&s, mean).unwrap().rate - 1e-9);
    }

    #[test]
    fn objective_dominates_centralized(seed in any::<u64>(), scale in 0.01f64..1.0) {
        let mut r = rng(seed);
        let s = random_source(&mut r, 3, 0.1, 5.0);
        let shape = random_source(&mut r, 3, 0.5, 2.0);
        let mut xi = SymMatrix::from_diag(&shape.gamma().diag()).unwrap().scale(scale);
        xi.set(1, 0, 0.3 * (xi.get(0, 0) * xi.get(1, 1)).sqrt());
        let pattern = NoisePattern::pair_plus_singleton();
        let (f, _) = objective_and_gradient(&s, &xi, &pattern).unwrap();
        let tr = mtrd_core::opt::compute_d(s.theta(), &xi).unwrap().trace();
        prop_assert!(f >= r_centralized(&s, tr / 3.0).unwrap().rate - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_respects_sandwich(seed in any::<u64>(), frac in 0.05f64..1.0, pair in any::<bool>()) {
        let s = random_source(&mut rng(seed), 3, 0.1, 5.0);
        let d = frac * trusted_radius(&s);
        let pattern = if pair { NoisePattern::pair_plus_singleton() } else { NoisePattern::distributed(3) };
        let cfg = SolverConfig::default();
        let r = solve_rd(&s, &pattern, d, &cfg).unwrap();
        prop_assert!(r.rate >= r_centralized(&s, d).unwrap().rate - 1e-9);
        prop_assert!(r.trace_gap >= -cfg.trace_slack_tol);
        prop_assert!(r.trace_gap < 1e-6 * d);
        let recomputed = 0.5 * (s.logdet_gamma() - r.d_star.logdet().unwrap());
        prop_assert!((recomputed - r.rate).abs() < 1e-12);
        prop_assert!(r.xi_star.is_positive_definite() && r.d_star.is_positive_definite());
    }
}
