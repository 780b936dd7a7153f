//! Shared fixtures for the benchmarks in `benches/`.

use thermofrac_core::numeric::linspace;
use thermofrac_core::{instances, PressureOptions, Rcgdms};

/// Named systems covering each pressure route.
pub fn systems() -> Vec<(&'static str, Rcgdms)> {
    vec![
        ("closed-form/twoscale", instances::twoscale()),
        ("transfer/golden-mean", instances::golden_mean(0.4, 0.3)),
        ("orbit/random-golden-mean", random_golden_mean()),
    ]
}

/// Golden-mean incidence under i.i.d. driving; forces the orbit-average route.
pub fn random_golden_mean() -> Rcgdms {
    let periodic = instances::golden_mean_periodic();
    Rcgdms::similarity(
        "random-golden-mean",
        periodic.symbolic.clone(),
        thermofrac_core::DrivingSystem::bernoulli(vec![0, 1], vec![0.5, 0.5], 0.0).unwrap(),
        periodic.vertex_intervals.clone(),
        periodic.similarity_maps().unwrap().schedule.clone(),
        thermofrac_core::Placement::Packed,
    )
    .unwrap()
}

pub fn s_grid() -> Vec<f64> {
    linspace(-1.0, 3.0, 21)
}

/// Lighter Monte Carlo settings so one iteration stays well under a second.
pub fn quick_options() -> PressureOptions {
    PressureOptions { orbit_count: 4, depths: vec![100, 200, 400], ..PressureOptions::default() }
}
