use optinet::bound::{default_delta, q, q3prime_profile, q_bound, BoundQuery, CompressionRule};
use proptest::prelude::*;

fn even_m() -> impl Strategy<Value = usize> {
    (1usize..600).prop_map(|h| 2 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn increasing_in_alpha(n in 1usize..1_000, a in 0.0f64..=1.0, b in 0.0f64..=1.0, m in even_m(), delta in 1e-9f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(q(n, lo, m, delta).unwrap() <= q(n, hi, m, delta).unwrap());
    }

    #[test]
    fn increasing_in_m(n in 1usize..1_000, a in 0.0f64..=1.0, m1 in even_m(), m2 in even_m(), delta in 1e-9f64..0.99) {
        let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        prop_assert!(q(n, a, lo, delta).unwrap() <= q(n, a, hi, delta).unwrap());
    }

    #[test]
    fn never_below_alpha(n in 1usize..100_000, a in 0.0f64..=1.0, m in even_m(), delta in 1e-12f64..0.99) {
        let v = q_bound(&BoundQuery { n, alpha: a, m, delta }).unwrap();
        prop_assert!(v.q >= a);
        prop_assert!(v.q.is_finite());
        prop_assert_eq!(v.clamped, m + 2 > n);
        if v.clamped {
            prop_assert!(v.q >= 1.0);
        }
    }

    #[test]
    fn smaller_delta_is_looser(n in 3usize..1_000, a in 0.0f64..=1.0, m in even_m(), d1 in 1e-9f64..0.99, d2 in 1e-9f64..0.99) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(q(n, a, m, lo).unwrap() >= q(n, a, m, hi).unwrap());
    }
}

#[test]
fn frozen_values() {
    // evaluated in 50-digit arithmetic
    assert!((q(100, 0.0, 2, 0.01).unwrap() - 1.939_025_013_475_620_4).abs() < 1e-12);
    assert!((q(4, 0.5, 2, 1.0 / 16.0).unwrap() - 50.515_499_447_616_35).abs() < 1e-11);
    assert!((q(4, 0.0, 4, 1.0 / 16.0).unwrap() - 43.310_785_437_717_29).abs() < 1e-11);
    assert_eq!(q(4, 0.0, 4, 1.0 / 16.0).unwrap(), q(4, 0.0, 8, 1.0 / 16.0).unwrap());
}

#[test]
fn rejects_bad_queries() {
    assert!(q(0, 0.0, 2, 0.1).is_err());
    assert!(q(10, -0.1, 2, 0.1).is_err());
    assert!(q(10, 1.1, 2, 0.1).is_err());
    assert!(q(10, f64::NAN, 2, 0.1).is_err());
    assert!(q(10, 0.0, 3, 0.1).is_err());
    assert!(q(10, 0.0, 0, 0.1).is_err());
    assert!(q(10, 0.0, 2, 0.0).is_err());
    assert!(q(10, 0.0, 2, 1.0).is_err());
}

#[test]
fn tiny_samples_use_the_clamp() {
    for n in 1..=3 {
        let v = q_bound(&BoundQuery { n, alpha: 0.0, m: 2, delta: 0.5 }).unwrap();
        assert!(v.clamped && v.q >= 1.0, "n {n}");
    }
    assert!(!q_bound(&BoundQuery { n: 4, alpha: 0.0, m: 2, delta: 0.5 }).unwrap().clamped);
}

#[test]
fn default_schedule() {
    assert_eq!(default_delta(1), 0.5);
    assert_eq!(default_delta(2), 0.25);
    assert_eq!(default_delta(100), 1e-4);
}

#[test]
fn linear_compression_does_not_vanish() {
    let grid = [1_000, 10_000, 100_000];
    let p = q3prime_profile(&grid, CompressionRule::NMinus(10), &[0.0, 0.5, 1.0]).unwrap();
    assert!(p.iter().all(|g| g.gap > 0.5), "{p:?}");
}
