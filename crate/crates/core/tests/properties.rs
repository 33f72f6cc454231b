use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

use qortho::connect::Pair;
use qortho::densities::DensityId;
use qortho::polyfam::{max_bound, Family};
use qortho::qcore::q_binomial;
use qortho::sampler::{sample, SamplerConfig};
use qortho::scalar::{rat, Rational};
use qortho::verify::{run_all, RunConfig, Suite};

fn small_rat() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=7).prop_map(|(n, d)| rat(n, d))
}

/// q in (-1, 1) as a rational.
fn open_q() -> impl Strategy<Value = Rational> {
    (-8i64..=8).prop_map(|n| rat(n, 9))
}

fn unit_rho() -> impl Strategy<Value = Rational> {
    (-8i64..=8).prop_map(|n| rat(n, 9))
}

fn exact_family() -> impl Strategy<Value = Family<Rational>> {
    prop_oneof![
        open_q().prop_map(|q| Family::QHermite { q }),
        (unit_rho(), open_q()).prop_map(|(beta, q)| Family::Rogers { beta, q }),
        (small_rat(), unit_rho(), open_q()).prop_map(|(y, rho, q)| Family::Asc { y, rho, q }),
        open_q().prop_map(|q| Family::ChebUHat { q }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_matches_expanded_polynomials(f in exact_family(), x in small_rat()) {
        let values = f.eval_all(8, &x).unwrap();
        let polys = f.coeffs_all(8).unwrap();
        for (v, p) in values.iter().zip(&polys) {
            prop_assert_eq!(v, &p.eval(&x));
        }
    }

    #[test]
    fn float_recurrence_tracks_exact(f in exact_family(), x in small_rat()) {
        let exact = f.eval_all(8, &x).unwrap();
        let float = f.to_f64().eval_all(8, &x.to_f64().unwrap()).unwrap();
        for (e, v) in exact.iter().zip(&float) {
            let e = e.to_f64().unwrap();
            prop_assert!((e - v).abs() <= 1e-9 * e.abs().max(1.0), "{} vs {}", e, v);
        }
    }

    #[test]
    fn q_binomial_pascal_and_symmetry(n in 1i64..15, k in 0i64..15, q in open_q()) {
        let k = k.min(n);
        let b = q_binomial(n, k, &q);
        prop_assert_eq!(&b, &q_binomial(n, n - k, &q));
        if k >= 1 {
            let qk = (0..k).fold(Rational::one(), |acc, _| acc * q.clone());
            let pascal = q_binomial(n - 1, k - 1, &q) + qk * q_binomial(n - 1, k, &q);
            prop_assert_eq!(b, pascal);
        }
    }

    #[test]
    fn hermite_asc_round_trip(y in small_rat(), rho in unit_rho(), q in open_q()) {
        let there = Pair::AscToHermite { y: y.clone(), rho: rho.clone(), q: q.clone() }.matrix(8).unwrap();
        let back = Pair::HermiteToAsc { y, rho, q }.matrix(8).unwrap();
        prop_assert!(there.compose(&back).is_identity());
        prop_assert!(back.compose(&there).is_identity());
    }

    #[test]
    fn rogers_connection_composes(beta in unit_rho(), gamma in unit_rho(), q in open_q()) {
        let to_h = Pair::RogersToHermite { gamma: gamma.clone(), q: q.clone() }.matrix(8).unwrap();
        let from_h = Pair::HermiteToRogers { beta: beta.clone(), q: q.clone() }.matrix(8).unwrap();
        let direct = Pair::RogersToRogers { gamma, beta, q }.matrix(8).unwrap();
        prop_assert_eq!(to_h.compose(&from_h).rows, direct.rows);
    }

    #[test]
    fn hermite_within_bound(qn in -9i64..=9, t in -1.0f64..=1.0, n in 0usize..25) {
        let q = qn as f64 / 10.0;
        let a = 2.0 / (1.0 - q).sqrt();
        let f = Family::QHermite { q };
        let v = f.eval(n, &(a * t)).unwrap();
        prop_assert!(v.abs() <= max_bound(&f, n).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn rogers_within_bound(qn in -9i64..=9, bn in -9i64..=9, t in -1.0f64..=1.0, n in 0usize..25) {
        let (q, beta) = (qn as f64 / 10.0, bn as f64 / 10.0);
        let a = 2.0 / (1.0 - q).sqrt();
        let f = Family::Rogers { beta, q };
        let v = f.eval(n, &(a * t)).unwrap();
        prop_assert!(v.abs() <= max_bound(&f, n).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn densities_nonnegative_and_even(qn in -9i64..=9, bn in -9i64..=9, t in -1.0f64..=1.0) {
        let (q, beta) = (qn as f64 / 10.0, bn as f64 / 10.0);
        let x = 2.0 / (1.0 - q).sqrt() * t;
        for d in [DensityId::n(q), DensityId::u(q), DensityId::t(q), DensityId::r(beta, q)] {
            let v = d.eval(x).unwrap();
            prop_assert!(v >= 0.0);
            let w = d.eval(-x).unwrap();
            prop_assert!((v - w).abs() <= 1e-12 * v.max(1.0));
        }
    }

    #[test]
    fn conditional_density_nonnegative(qn in -9i64..=9, rn in -9i64..=9, s in -1.0f64..=1.0, t in -1.0f64..=1.0) {
        let (q, rho) = (qn as f64 / 10.0, rn as f64 / 10.0);
        let a = 2.0 / (1.0 - q).sqrt();
        prop_assert!(DensityId::cn(a * s, rho, q).eval(a * t).unwrap() >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sampler_is_deterministic(seed in any::<u64>(), qn in -5i64..=7) {
        let d = DensityId::n(qn as f64 / 10.0);
        let mut cfg = SamplerConfig::new(d, seed).unwrap();
        cfg.batch = 512;
        let a = sample(&cfg, 2000).unwrap();
        let b = sample(&cfg, 2000).unwrap();
        prop_assert_eq!(&a, &b);
        let half = 1.0 / (1.0 - qn as f64 / 10.0).sqrt() * 2.0;
        prop_assert!(a.iter().all(|x| x.abs() <= half));
    }
}

#[test]
fn reports_are_sorted_and_reproducible() {
    let cfg = RunConfig { suite: Suite::Projection, ..RunConfig::default() };
    let a = run_all(&cfg);
    let keys: Vec<_> = a.iter().map(|r| (r.check_id.clone(), r.params.to_string())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let b = run_all(&cfg);
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| x.residual.to_bits() == y.residual.to_bits()));
    assert!(a.iter().all(|r| r.pass));
}
