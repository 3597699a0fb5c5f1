use std::sync::Arc;

use proptest::prelude::*;

use mterm_lab::greedy::{wrga_run, SelectionPolicy, WeaknessSequence};
use mterm_lab::oracle::{sigma_m_bruteforce, sigma_m_canonical};
use mterm_lab::space::dot;
use mterm_lab::systems::sample_hull;
use mterm_lab::{LpSpace, SymmetricSystem};

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(2.0), 1.1f64..6.0]
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norming_functional_attains_norm(p in exponent(), f in vector(7)) {
        prop_assume!(f.iter().any(|v| v.abs() > 1e-3));
        let space = LpSpace::new(7, p).unwrap();
        let g = space.norming_functional(&f).unwrap();
        let nf = space.norm(&f).unwrap();
        prop_assert!((dot(&g, &f) - nf).abs() <= 1e-9 * nf.max(1.0));
        prop_assert!((space.dual_norm(&g).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn segment_min_beats_endpoints_and_grid(
        p in exponent(), f in vector(5), a in vector(5), b in vector(5),
    ) {
        let space = LpSpace::new(5, p).unwrap();
        let r = space.segment_min(&f, &a, &b, 1e-12).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.lambda));
        for k in 0..=50 {
            let lam = k as f64 / 50.0;
            let x: Vec<f64> = (0..5).map(|i| f[i] - ((1.0 - lam) * a[i] + lam * b[i])).collect();
            prop_assert!(r.value <= space.norm(&x).unwrap() + 1e-9);
        }
    }

    #[test]
    fn wrga_residuals_decrease_and_weights_stay_in_hull(
        p in exponent(), seed in any::<u64>(), t in 0.3f64..=1.0,
    ) {
        let space = LpSpace::new(12, p).unwrap();
        let sys = Arc::new(SymmetricSystem::random(space, 20, seed).unwrap());
        let f = sample_hull(&sys, 1.0, seed.wrapping_add(1)).unwrap().synthesize();
        let tau = WeaknessSequence::constant(t).unwrap();
        let trace = wrga_run(&sys, &f, &tau, 25, SelectionPolicy::LazyWeak, None, seed).unwrap();
        let norms = trace.residual_norms();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert!(trace.weights.total() <= 1.0 + 1e-9);
        prop_assert!(trace.weights.min_weight() >= -1e-15);
        let recon = sys.synthesize(&trace.weights.signed_coefs()).unwrap();
        for (x, y) in recon.iter().zip(&trace.approximant) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn sigma_is_monotone_in_m(p in exponent(), x in vector(9)) {
        let mut prev = f64::INFINITY;
        for m in 0..=9 {
            let e = sigma_m_canonical(&x, m, p).unwrap().error;
            prop_assert!(e <= prev + 1e-12);
            prev = e;
        }
        prop_assert!(prev <= 1e-12);
    }

    #[test]
    fn brute_force_matches_canonical_in_hilbert_case(x in vector(6), m in 1usize..=3) {
        let sys = SymmetricSystem::canonical(LpSpace::new(6, 2.0).unwrap());
        let c = sigma_m_canonical(&x, m, 2.0).unwrap().error;
        let b = sigma_m_bruteforce(&sys, &x, m).unwrap().error;
        prop_assert!((c - b).abs() <= 1e-10);
    }
}
