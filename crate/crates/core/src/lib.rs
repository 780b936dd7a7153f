//! Thermodynamic formalism for random conformal graph directed Markov systems
//! on countable alphabets.
//!
//! The crate computes relative topological pressure, Hausdorff dimension via
//! Bowen's formula and the Lyapunov multifractal spectrum, together with
//! brute-force oracles used to cross-check them.
//!
//! ```
//! use thermofrac_core::{bowen_dimension, instances, pressure_curve, CurveDomain, PressureOptions};
//!
//! let cantor = instances::cantor();
//! let grid: Vec<f64> = (0..=20).map(|i| -1.0 + 0.2 * i as f64).collect();
//! let curve = pressure_curve(&cantor, &CurveDomain::Full, &grid, &PressureOptions::default()).unwrap();
//! let s = bowen_dimension(&curve).unwrap();
//! assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driving;
pub mod error;
pub mod gdms;
pub mod measures;
pub mod numeric;
pub mod oracle;
pub mod potentials;
pub mod shift;
pub mod spectrum;
pub mod thermo;

pub use driving::{orbit_seeds, sample_orbit, DrivingOrbit, DrivingSystem, State};
pub use error::{Error, Result};
pub use gdms::{
    build_paper_example, check_rbsc, code_point, instances, sample_limit_set, CodedPoint, LimitSetSample, Placement,
    RatioSchedule, RatioTable, Rcgdms, RbscReport, Sampler,
};
pub use measures::{conformal_measures, conformality_residual, ladder_convergence, ChainMethod, ConformalChain};
pub use oracle::{
    box_counting, compare_with_spectrum, exponent_range_violations, level_histogram, local_dimension_samples,
    BoxCountEstimate, LevelHistogram, LocalDimensionSample,
};
pub use potentials::{
    geometric_potential, log_uniform_sum, ruelle_bounds, s_infinity, summability, RandomPotential, SummabilityReport,
};
pub use shift::{build_ladder, find_primitivity, PrimitivityWitness, SubalphabetLadder, Symbol, SymbolicSystem, Word};
pub use spectrum::{
    bowen_dimension, cofinite_regularity, legendre_spectrum, legendre_value, pressure_curve, tq_analysis, CurveDomain,
    PressureCurve, SpectrumResult, TqAnalysis,
};
pub use thermo::{
    check_gibbs, check_sandwich, partition_sums, pressure, pressure_compact_approx, PressureEstimate, PressureOptions,
    PressureRoute,
};
