use std::time::Instant;

use thermofrac_core::numeric::linspace;
use thermofrac_core::{
    bowen_dimension, build_paper_example, cofinite_regularity, geometric_potential, log_uniform_sum, pressure,
    pressure_curve, CurveDomain, PressureOptions,
};

#[test]
fn worked_example() {
    let start = Instant::now();
    let g = build_paper_example(1 << 10).unwrap();
    let opts = PressureOptions::default();
    let zeta = geometric_potential(&g).unwrap();
    let p1 = pressure(&g.symbolic, &g.driving, None, zeta.as_ref(), &opts).unwrap().value;
    assert!(p1 <= -2f64.ln() + 1e-6, "P(zeta) = {p1}");

    assert!((log_uniform_sum(&g, 1.0).unwrap().exp() - 0.5).abs() < 1e-9);
    for s in [0.25, 0.5, 0.75] {
        assert_eq!(log_uniform_sum(&g, s).unwrap(), f64::INFINITY, "s = {s}");
    }

    let curve = pressure_curve(&g, &CurveDomain::Full, &linspace(0.05, 2.0, 40), &opts).unwrap();
    let s_star = bowen_dimension(&curve).unwrap();
    assert!(s_star > 0.0 && s_star < 1.0, "{s_star}");
    assert_eq!(curve.cofinitely_regular, Some(true));

    let cof = cofinite_regularity(&g, &opts).unwrap();
    assert!(cof.applicable && cof.regular);
    assert!(cof.s_infinity.abs() < 1e-5);
    eprintln!("P(zeta) = {p1}, s* = {s_star}, elapsed {:?}", start.elapsed());
    assert!(start.elapsed().as_secs_f64() < 30.0);
}
