//! Randomized invariants of the geometric primitives and closed-form rates.

use obslab::geometry::{make_lattice_centers, Point, Torus};
use obslab::theory::{capacity_regime, exponents, rate_neu_fading, tau, Regime};
use proptest::prelude::*;

fn point(side: f64, m: usize) -> impl Strategy<Value = Point> {
    prop::array::uniform3(0.0..side).prop_map(move |mut p| {
        if m == 2 {
            p[2] = 0.0;
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn torus_distance_is_a_metric(
        m in 2usize..=3,
        side in 0.5f64..4.0,
        seed in 0u64..u64::MAX,
    ) {
        use rand::{Rng, SeedableRng};
        let torus = Torus::new(m, side).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = || -> Point {
            let mut q = [0.0; 3];
            for c in q.iter_mut().take(m) {
                *c = rng.gen::<f64>() * side;
            }
            q
        };
        let (x, y, z) = (p(), p(), p());
        let (dxy, dyx) = (torus.distance(&x, &y), torus.distance(&y, &x));
        prop_assert!((dxy - dyx).abs() <= 1e-12);
        prop_assert!(torus.distance(&x, &x) == 0.0);
        // triangle inequality with a rounding allowance
        prop_assert!(dxy <= torus.distance(&x, &z) + torus.distance(&z, &y) + 1e-12);
        // diameter of the flat torus
        prop_assert!(dxy <= side * (m as f64).sqrt() / 2.0 + 1e-12);
    }

    #[test]
    fn torus_distance_is_translation_invariant(
        x in point(1.0, 2),
        y in point(1.0, 2),
        shift in point(1.0, 2),
    ) {
        let torus = Torus::new(2, 1.0).unwrap();
        let t = |p: &Point| -> Point {
            [(p[0] + shift[0]).rem_euclid(1.0), (p[1] + shift[1]).rem_euclid(1.0), 0.0]
        };
        let d = torus.distance(&x, &y);
        let ds = torus.distance(&t(&x), &t(&y));
        prop_assert!((d - ds).abs() <= 1e-12, "{d} vs {ds}");
    }

    #[test]
    fn lattice_centers_respect_spacing(m in 2usize..=3, c in 1usize..=4) {
        let torus = Torus::new(m, 1.0).unwrap();
        let spacing = 1.0 / c as f64;
        let set = make_lattice_centers(&torus, spacing).unwrap();
        prop_assert_eq!(set.centers().len(), c.pow(m as u32));
        for (i, a) in set.centers().iter().enumerate() {
            for b in &set.centers()[i + 1..] {
                prop_assert!(torus.distance(a, b) >= spacing - 1e-12);
            }
        }
    }

    #[test]
    fn tau_is_monotone_in_the_radius_ratio(
        m in 2usize..=3,
        lo in 0.01f64..0.4,
        step in 0.001f64..0.09,
    ) {
        // a larger inner-to-outer ratio leaves less room, so the
        // non-concentration bound can only grow
        let a = tau(m, lo).unwrap();
        let b = tau(m, lo + step).unwrap();
        prop_assert!(b >= a - 1e-12, "tau({lo}) = {a} > tau({}) = {b}", lo + step);
    }

    #[test]
    fn neu_fading_rate_improves_with_smaller_holes(
        m in 2usize..=3,
        eta in 0.1f64..0.4,
        eps_hi in 0.001f64..0.04,
        shrink in 0.1f64..0.9,
    ) {
        let hi = rate_neu_fading(m, eps_hi, eta);
        let lo = rate_neu_fading(m, eps_hi * shrink, eta);
        prop_assert!(hi > 0.0 && lo > 0.0);
        prop_assert!(lo <= hi + 1e-12, "rate grew when eps shrank: {lo} > {hi}");
    }

    #[test]
    fn capacity_regime_is_a_trichotomy(m in 3usize..=6, alpha in 0.0f64..1.0) {
        let thr = (m as f64 - 2.0) / m as f64;
        let regime = capacity_regime(m, alpha);
        if (alpha - thr).abs() > 1e-9 {
            let want = if alpha < thr { Regime::Fading } else { Regime::Solidifying };
            prop_assert_eq!(regime, want);
        }
    }

    #[test]
    fn exponent_tables_are_consistent(m in 2usize..=8) {
        let e = exponents(m);
        prop_assert!(e.p > 0.0 && e.q > 0.0 && e.a > 0.0);
        // p and q are Hoelder conjugates
        prop_assert!((1.0 / e.p + 1.0 / e.q - 1.0).abs() <= 1e-12);
    }
}
