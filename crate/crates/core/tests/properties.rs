use cpal::dynamics::{integrate, policy, SimConfig, Simulator};
use cpal::equilibrium::{enumerate_pure_ve, find_all, reduce_1d, Classification, MultiStart};
use cpal::fixtures;
use cpal::stability::{discs_cover, eigenvalues, gershgorin, jacobian, report, row_sum_defect};
use cpal::tree::reduce;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_preserves_total_probability(seed in any::<u64>(), states in 1usize..8, classes in 1usize..5) {
        let raw = fixtures::random_raw(&mut rng(seed), states, classes);
        let t = reduce(&raw).unwrap();
        let total: f64 = t.states().iter().map(|s| s.prob()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_payoffs_lie_in_raw_hull(seed in any::<u64>()) {
        let raw = fixtures::random_raw(&mut rng(seed), 6, 3);
        let t = reduce(&raw).unwrap();
        for st in t.states() {
            for (&c, &x) in st.members().iter().zip(st.payoffs()) {
                let name = &t.classes()[c];
                let pays = raw.states().iter().enumerate()
                    .filter(|(k, _)| raw.state_mask(*k) == st.mask())
                    .flat_map(|(_, s)| s.alternatives.iter().filter(|a| &a.class == name).map(|a| a.payoff));
                let (lo, hi) = pays.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p), h.max(p)));
                prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn unary_shift_round_trip_is_exact(seed in any::<u64>(), a in -1e3f64..1e3) {
        let t = fixtures::random_full_support(&mut rng(seed), 3);
        let back = t.shift_unary_payoffs(a).shift_unary_payoffs(-a);
        for (x, y) in t.states().iter().zip(back.states()) {
            for (p, q) in x.payoffs().iter().zip(y.payoffs()) {
                prop_assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }

    #[test]
    fn unary_shift_moves_only_unary_payoffs(seed in any::<u64>(), z in -200f64..200.0) {
        let t = fixtures::random_full_support(&mut rng(seed), 3);
        let s = t.shift_unary_payoffs(z);
        for (x, y) in t.states().iter().zip(s.states()) {
            for (p, q) in x.payoffs().iter().zip(y.payoffs()) {
                if x.is_unary() {
                    prop_assert!((q - p - z).abs() < 1e-12);
                } else {
                    prop_assert_eq!(p, q);
                }
            }
        }
    }

    #[test]
    fn g_lies_in_payoff_box(seed in any::<u64>(), beta in 0.0f64..1e3) {
        let mut r = rng(seed);
        let t = fixtures::random_full_support(&mut r, 3);
        let bx = t.payoff_box();
        for _ in 0..20 {
            let v: Vec<f64> = (0..3).map(|_| r.gen_range(-3.0..3.0)).collect();
            prop_assert!(bx.contains(&cpal::dynamics::g_map(&v, &t, beta), 1e-12));
        }
    }

    #[test]
    fn policy_translation_invariance(seed in any::<u64>(), c in -100f64..100.0, beta in 0.0f64..50.0) {
        let mut r = rng(seed);
        let t = fixtures::random_full_support(&mut r, 4);
        let v: Vec<f64> = (0..4).map(|_| r.gen::<f64>()).collect();
        let w: Vec<f64> = v.iter().map(|x| x + c).collect();
        let (a, b) = (policy(&v, &t, beta), policy(&w, &t, beta));
        for (x, y) in a.per_state.iter().flatten().zip(b.per_state.iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rk4_stays_in_box(seed in any::<u64>(), beta in 0.0f64..100.0, h in 0.001f64..0.1) {
        let mut r = rng(seed);
        let t = fixtures::random_low_order(&mut r, 3);
        let bx = t.payoff_box();
        let v0: Vec<f64> = (0..3).map(|s| bx.lo[s] + r.gen::<f64>() * (bx.hi[s] - bx.lo[s])).collect();
        let tr = integrate(&v0, &t, beta, 5.0, h).unwrap();
        for v in &tr.snapshots {
            prop_assert!(bx.contains(v, 1e-9));
        }
    }

    #[test]
    fn discrete_process_stays_in_hull(seed in any::<u64>(), beta in 0.0f64..20.0) {
        let mut r = rng(seed);
        let t = fixtures::random_full_support(&mut r, 3);
        let bx = t.payoff_box();
        let v0: Vec<f64> = (0..3).map(|s| bx.lo[s] + r.gen::<f64>() * (bx.hi[s] - bx.lo[s])).collect();
        let cfg = SimConfig { beta, horizon: 2_000, seed, record_every: 50, ..SimConfig::default() };
        let tr = Simulator::new(&t, cfg, None).unwrap().run(&v0);
        for v in &tr.snapshots {
            prop_assert!(bx.contains(v, 1e-12));
        }
    }

    #[test]
    fn row_sums_are_minus_one(seed in any::<u64>(), beta in 0.0f64..1e3) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let t = fixtures::random_full_support(&mut r, n);
        let bx = t.payoff_box();
        let v: Vec<f64> = (0..n).map(|s| bx.lo[s] + r.gen::<f64>() * (bx.hi[s] - bx.lo[s])).collect();
        let j = jacobian(&v, &t, beta).unwrap().matrix;
        prop_assert!(row_sum_defect(&j) < 1e-9);
        let ones = nalgebra::DVector::from_element(n, 1.0);
        let jv = &j * ones;
        prop_assert!(jv.iter().all(|x| (x + 1.0).abs() < 1e-9));
    }

    #[test]
    fn spectrum_inside_gershgorin_discs(seed in any::<u64>(), beta in 0.0f64..100.0) {
        let mut r = rng(seed);
        let t = fixtures::random_full_support(&mut r, 4);
        let v: Vec<f64> = (0..4).map(|_| r.gen::<f64>()).collect();
        let j = jacobian(&v, &t, beta).unwrap().matrix;
        prop_assert!(discs_cover(&gershgorin(&j), &eigenvalues(&j).unwrap(), 1e-8));
    }

    #[test]
    fn verdict_matches_abscissa(seed in any::<u64>(), beta in 0.0f64..60.0) {
        let mut r = rng(seed);
        let t = fixtures::random_two_class(&mut r);
        let v = [r.gen::<f64>(), r.gen::<f64>()];
        let rep = report(&v, &t, beta).unwrap();
        let expected = cpal::stability::Verdict::from_abscissa(rep.spectral_abscissa);
        prop_assert_eq!(rep.verdict, expected);
        prop_assert!(rep.discs_cover_spectrum);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn beta_zero_has_unique_equilibrium(seed in any::<u64>()) {
        let t = fixtures::random_full_support(&mut rng(seed), 3);
        let eqs = find_all(&t, 0.0, &MultiStart::default()).unwrap();
        prop_assert_eq!(eqs.len(), 1);
    }

    #[test]
    fn equilibria_are_in_box_with_small_residual(seed in any::<u64>(), beta in 0.0f64..60.0) {
        let t = fixtures::random_low_order(&mut rng(seed), 3);
        let bx = t.payoff_box();
        for e in find_all(&t, beta, &MultiStart::default()).unwrap() {
            prop_assert!(e.residual < 1e-12);
            prop_assert!(bx.contains(&e.v_star, 1e-12));
            let mut all: Vec<usize> = e.indifference_groups.concat();
            all.sort_unstable();
            prop_assert_eq!(all, vec![0, 1, 2]);
        }
    }

    #[test]
    fn translating_payoffs_translates_equilibria(seed in any::<u64>(), c in -20f64..20.0) {
        let t = fixtures::random_two_class(&mut rng(seed));
        let a = find_all(&t, 10.0, &MultiStart::default()).unwrap();
        let b = find_all(&t.translate_payoffs(c), 10.0, &MultiStart::default()).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            for (p, q) in x.v_star.iter().zip(y.v_star.iter()) {
                prop_assert!((q - p - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scalar_roots_match_planar_equilibria(seed in any::<u64>(), beta in 1.0f64..80.0) {
        let t = fixtures::random_two_class(&mut rng(seed));
        let roots = reduce_1d(&t, beta).unwrap().roots();
        let eqs = find_all(&t, beta, &MultiStart::default()).unwrap();
        prop_assert_eq!(roots.len(), eqs.len());
        let mut xs: Vec<f64> = eqs.iter().map(|e| e.v_star[0] - e.v_star[1]).collect();
        xs.sort_by(f64::total_cmp);
        for (r, x) in roots.iter().zip(&xs) {
            prop_assert!((r.x - x).abs() < 1e-6);
        }
    }
}

fn enumeration_agrees(t: &cpal::tree::ReducedTree) {
    let ves = enumerate_pure_ve(t).unwrap();
    let eqs = find_all(t, 1e3, &MultiStart::default()).unwrap();
    for ve in ves.iter().filter(|v| v.strict) {
        let d = eqs.iter().map(|e| e.v_star.dist(&ve.valuations)).fold(f64::INFINITY, f64::min);
        assert!(d < 0.02, "enumerated {:?} has no equilibrium nearby ({d})", ve.valuations);
    }
    for e in eqs.iter().filter(|e| e.classification == Classification::StrictPure) {
        let d = ves.iter().map(|v| e.v_star.dist(&v.valuations)).fold(f64::INFINITY, f64::min);
        assert!(d < 0.02, "equilibrium {:?} matches no enumerated VE ({d})", e.v_star);
    }
}

#[test]
fn enumeration_agrees_with_large_beta_solutions() {
    let mut r = rng(31);
    for _ in 0..50 {
        enumeration_agrees(&fixtures::random_two_class(&mut r));
    }
    for _ in 0..20 {
        enumeration_agrees(&fixtures::random_full_support(&mut r, 3));
    }
}

#[test]
fn cooperative_flow_preserves_order() {
    let mut r = rng(41);
    for _ in 0..10 {
        let t = fixtures::random_full_support(&mut r, 3).shift_unary_payoffs(100.0);
        let beta = r.gen_range(0.1..2.0);
        let bx = t.payoff_box();
        for _ in 0..5 {
            let a: Vec<f64> = (0..3).map(|s| bx.lo[s] + r.gen::<f64>() * (bx.hi[s] - bx.lo[s])).collect();
            let b: Vec<f64> = a.iter().zip(0..3).map(|(x, s)| x + r.gen::<f64>() * (bx.hi[s] - x)).collect();
            let ta = integrate(&a, &t, beta, 10.0, 0.01).unwrap();
            let tb = integrate(&b, &t, beta, 10.0, 0.01).unwrap();
            for (x, y) in ta.snapshots.iter().zip(&tb.snapshots) {
                assert!(x.iter().zip(y.iter()).all(|(p, q)| p <= &(q + 1e-9)));
            }
        }
    }
}
