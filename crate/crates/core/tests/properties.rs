//! Invariants checked on randomly drawn two-scale systems.

use std::sync::Arc;

use proptest::prelude::*;
use thermofrac_core::numeric::{bisect, linspace, log_sum_exp, lower_convex_envelope};
use thermofrac_core::oracle::exponent_range_violations;
use thermofrac_core::spectrum::{legendre_via_temperature, temperature};
use thermofrac_core::{
    bowen_dimension, build_ladder, check_sandwich, find_primitivity, geometric_potential, instances, legendre_value,
    level_histogram, pressure_curve, sample_orbit, CurveDomain, DrivingSystem, Placement, PressureOptions, RatioTable,
    Rcgdms, SymbolicSystem,
};

fn two_maps(r0: f64, r1: f64) -> Rcgdms {
    Rcgdms::similarity(
        "two-maps",
        SymbolicSystem::full_shift(2).unwrap(),
        DrivingSystem::deterministic(0),
        vec![(0.0, 1.0)],
        Arc::new(RatioTable::uniform(&[0], vec![r0, r1]).unwrap()),
        Placement::Packed,
    )
    .unwrap()
}

fn curve(g: &Rcgdms) -> thermofrac_core::PressureCurve {
    pressure_curve(g, &CurveDomain::Full, &linspace(-3.0, 5.0, 33), &PressureOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn log_sum_exp_matches_naive(xs in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(&xs) - naive).abs() < 1e-12 * naive.abs().max(1.0));
    }

    #[test]
    fn convex_envelope_is_convex_minorant(ys in prop::collection::vec(-5.0f64..5.0, 3..30)) {
        let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
        let hull = lower_convex_envelope(&xs, &ys);
        for (h, y) in hull.iter().zip(&ys) {
            prop_assert!(*h <= *y + 1e-12);
        }
        for w in hull.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
    }

    #[test]
    fn bowen_root_solves_moran_equation(r0 in 0.05f64..0.45, r1 in 0.05f64..0.45) {
        let s = bowen_dimension(&curve(&two_maps(r0, r1))).unwrap();
        let oracle = bisect(|s| r0.powf(s) + r1.powf(s) - 1.0, 0.0, 1.0, 1e-15, 0.0).unwrap();
        prop_assert!((s - oracle).abs() < 1e-8);
    }

    #[test]
    fn curve_is_convex_and_decreasing(r0 in 0.05f64..0.45, r1 in 0.05f64..0.45) {
        let c = curve(&two_maps(r0, r1));
        prop_assert!(c.strictly_decreasing());
        prop_assert!(c.max_correction <= 1e-9);
        prop_assert!(c.slope_bound_holds(1e-9));
        prop_assert!(c.second_differences().iter().all(|d| *d >= -1e-9));
    }

    #[test]
    fn spectrum_is_bounded_by_bowen_root(r0 in 0.05f64..0.3, r1 in 0.32f64..0.45, t in 0.01f64..0.99) {
        let c = curve(&two_maps(r0, r1));
        let s_star = bowen_dimension(&c).unwrap();
        let (lo, hi) = c.validity();
        let beta = lo + t * (hi - lo);
        let (l, _) = legendre_value(&c, beta).unwrap();
        prop_assert!(l >= -1e-12 && l <= s_star + 1e-12);
        let via_t = legendre_via_temperature(&c, beta).unwrap();
        prop_assert!((l - via_t).abs() < 1e-6);
    }

    #[test]
    fn temperature_fixed_points(r0 in 0.05f64..0.45, r1 in 0.05f64..0.45) {
        let c = curve(&two_maps(r0, r1));
        prop_assert!(temperature(&c, 1.0).unwrap().abs() < 1e-8);
        prop_assert!((temperature(&c, 0.0).unwrap() - bowen_dimension(&c).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn sandwich_holds(r0 in 0.05f64..0.45, r1 in 0.05f64..0.45, s in 0.0f64..1.0, n in 1usize..6) {
        let g = two_maps(r0, r1);
        let witness = find_primitivity(&g.symbolic, &[0, 1], 8).unwrap().unwrap();
        let orbit = sample_orbit(&g.driving, 0);
        let pot = geometric_potential(&g).unwrap().scaled(s);
        let r = check_sandwich(&g.symbolic, &g.driving, &[0, 1], pot.as_ref(), &orbit, 0, 0, n, &witness).unwrap();
        prop_assert!(r.holds);
    }

    #[test]
    fn histogram_counts_every_word(r0 in 0.05f64..0.45, r1 in 0.05f64..0.45, n in 1usize..12) {
        let g = two_maps(r0, r1);
        let orbit = sample_orbit(&g.driving, 0);
        let h = level_histogram(&g, &orbit, 0, &[0, 1], n, 16).unwrap();
        prop_assert_eq!(h.total, 1u64 << n);
        let c = curve(&g);
        let (lo, hi) = c.validity();
        prop_assert_eq!(exponent_range_violations(&g, &orbit, 0, &[0, 1], n, lo, hi, 1e-9).unwrap(), 0);
    }

    #[test]
    fn rung_pressures_increase(s in 0.05f64..2.0) {
        let g = instances::pure_tail(64);
        let ladder = build_ladder(&g.symbolic, &[], &[2, 4, 8, 16, 32, 64]).unwrap();
        let c = pressure_curve(&g, &CurveDomain::Ladder(ladder), &[s, s + 0.5], &PressureOptions::default()).unwrap();
        prop_assert!(c.rungs_monotone());
    }
}
