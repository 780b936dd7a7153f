//! Random locally Hölder potentials at cylinder resolution.
//!
//! A potential is seen only through `(inf, sup)` bounds of `f(·, ω)` on
//! 1-cylinders plus its distortion constant; Birkhoff sums over longer
//! cylinders are assembled by [`word_bounds`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::driving::{DrivingOrbit, DrivingSystem, State};
use crate::error::{Error, Result};
use crate::gdms::{MapFamily, RatioSchedule, Rcgdms};
use crate::numeric::{log_add, LogAccumulator};
use crate::shift::{Incidence, Symbol, SymbolicSystem};

/// Hölder data `(β̂, v_β(f))` of a potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Holder {
    pub exponent: f64,
    pub constant: f64,
}

impl Holder {
    pub const LOCALLY_CONSTANT: Holder = Holder { exponent: 1.0, constant: 0.0 };

    /// `log B_f = v_β Σ_{k≥0} e^{-kβ̂}`.
    pub fn log_distortion(&self) -> f64 {
        if self.constant == 0.0 {
            0.0
        } else {
            self.constant / -(-self.exponent).exp_m1()
        }
    }

    pub fn scaled(&self, s: f64) -> Holder {
        Holder { exponent: self.exponent, constant: s.abs() * self.constant }
    }
}

pub trait RandomPotential: Send + Sync + fmt::Debug {
    /// Number of materialized symbols.
    fn cutoff(&self) -> usize;

    /// `(inf, sup)` of `f(·, ω)` on the cylinder `[e]` in a fiber with this state.
    fn symbol_bounds(&self, state: State, e: Symbol) -> (f64, f64);

    fn holder(&self) -> Holder;

    /// `f(τ, ω)` depends on `τ_0` only.
    fn is_first_symbol(&self) -> bool;

    /// `log Σ_{e ≥ cutoff} exp(sup f(·, ω)|[e])`; `None` when the alphabet is
    /// finite, `+inf` when the series diverges.
    fn log_tail_sum(&self, _state: State) -> Option<f64> {
        None
    }

    /// `log Σ_{e ≥ cutoff} exp(ess sup_ω sup f(·, ω)|[e])`.
    fn log_sup_tail_sum(&self) -> Option<f64> {
        None
    }

    /// The potential `s·f`, sharing the evaluator.
    fn scaled(&self, s: f64) -> Arc<dyn RandomPotential>;

    fn log_distortion(&self) -> f64 {
        self.holder().log_distortion()
    }

    /// `B_f`.
    fn distortion(&self) -> f64 {
        self.log_distortion().exp()
    }
}

/// `s·ζ` for a similarity system: `s·log r_{τ_0}(ω)`, exact and locally constant.
#[derive(Clone, Debug)]
pub struct SimilarityPotential {
    schedule: Arc<dyn RatioSchedule>,
    scale: f64,
}

impl SimilarityPotential {
    pub fn new(schedule: Arc<dyn RatioSchedule>, scale: f64) -> Self {
        Self { schedule, scale }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl RandomPotential for SimilarityPotential {
    fn cutoff(&self) -> usize {
        self.schedule.cutoff()
    }

    fn symbol_bounds(&self, state: State, e: Symbol) -> (f64, f64) {
        let v = self.scale * self.schedule.log_ratio(state, e);
        (v, v)
    }

    fn holder(&self) -> Holder {
        Holder::LOCALLY_CONSTANT
    }

    fn is_first_symbol(&self) -> bool {
        true
    }

    fn log_tail_sum(&self, state: State) -> Option<f64> {
        self.schedule.log_tail_sum(state, self.scale)
    }

    fn log_sup_tail_sum(&self) -> Option<f64> {
        self.schedule.log_sup_tail_sum(self.scale)
    }

    fn scaled(&self, s: f64) -> Arc<dyn RandomPotential> {
        Arc::new(Self { schedule: self.schedule.clone(), scale: self.scale * s })
    }
}

/// `s·log|φ'|` known through declared derivative bounds.
#[derive(Clone, Debug)]
pub struct DeclaredBoundsPotential {
    /// `(log inf |φ'|, log sup |φ'|)` per state and edge.
    log_bounds: Arc<BTreeMap<State, Vec<(f64, f64)>>>,
    log_k: f64,
    exponent: f64,
    scale: f64,
}

impl RandomPotential for DeclaredBoundsPotential {
    fn cutoff(&self) -> usize {
        self.log_bounds.values().next().map_or(0, Vec::len)
    }

    fn symbol_bounds(&self, state: State, e: Symbol) -> (f64, f64) {
        let (lo, hi) = self.log_bounds[&state][e];
        let (a, b) = (self.scale * lo, self.scale * hi);
        (a.min(b), a.max(b))
    }

    fn holder(&self) -> Holder {
        // chosen so that log B_f = |s| log K_bd
        let exponent = self.exponent;
        Holder { exponent, constant: self.scale.abs() * self.log_k * -(-exponent).exp_m1() }
    }

    fn is_first_symbol(&self) -> bool {
        self.log_k == 0.0
    }

    fn scaled(&self, s: f64) -> Arc<dyn RandomPotential> {
        Arc::new(Self { scale: self.scale * s, ..self.clone() })
    }
}

/// User-supplied first-symbol potential `f(τ, ω) = table[ω][τ_0]`.
#[derive(Clone, Debug)]
pub struct FirstSymbolTable {
    values: Arc<BTreeMap<State, Vec<f64>>>,
    scale: f64,
}

impl FirstSymbolTable {
    pub fn new(values: BTreeMap<State, Vec<f64>>) -> Result<Self> {
        let len = values.values().next().map_or(0, Vec::len);
        if len == 0 || values.values().any(|v| v.len() != len || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidSystem("potential table rows must be finite and of equal length".into()));
        }
        Ok(Self { values: Arc::new(values), scale: 1.0 })
    }

    /// The zero potential on `cutoff` symbols for the given states.
    pub fn zero(states: &[State], cutoff: usize) -> Self {
        Self { values: Arc::new(states.iter().map(|&s| (s, vec![0.0; cutoff])).collect()), scale: 1.0 }
    }
}

impl RandomPotential for FirstSymbolTable {
    fn cutoff(&self) -> usize {
        self.values.values().next().map_or(0, Vec::len)
    }

    fn symbol_bounds(&self, state: State, e: Symbol) -> (f64, f64) {
        let v = match self.values.get(&state) {
            Some(row) => self.scale * row[e],
            None => panic!("potential table has no row for state {state}"),
        };
        (v, v)
    }

    fn holder(&self) -> Holder {
        Holder::LOCALLY_CONSTANT
    }

    fn is_first_symbol(&self) -> bool {
        true
    }

    fn scaled(&self, s: f64) -> Arc<dyn RandomPotential> {
        Arc::new(Self { values: self.values.clone(), scale: self.scale * s })
    }
}

/// The geometric potential `ζ` (scale 1) of a system.
pub fn geometric_potential(gdms: &Rcgdms) -> Result<Arc<dyn RandomPotential>> {
    match &gdms.maps {
        MapFamily::Similarity(maps) => Ok(Arc::new(SimilarityPotential::new(maps.schedule.clone(), 1.0))),
        MapFamily::Conformal(maps) => {
            let mut log_bounds = BTreeMap::new();
            for (&state, row) in &maps.bounds {
                let mut out = Vec::with_capacity(row.len());
                for (edge, b) in row.iter().enumerate() {
                    let (lo, hi) = b.ok_or(Error::MissingDerivativeBounds { edge })?;
                    out.push((lo.ln(), hi.ln()));
                }
                log_bounds.insert(state, out);
            }
            Ok(Arc::new(DeclaredBoundsPotential {
                log_bounds: Arc::new(log_bounds),
                log_k: maps.distortion.ln(),
                exponent: -maps.alpha * gdms.constants.kappa.ln(),
                scale: 1.0,
            }))
        }
    }
}

/// Birkhoff-sum bounds of a potential over a cylinder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WordBounds {
    pub inf: f64,
    pub sup: f64,
    /// Value used for `S_n f` at a point of the cylinder: exact for
    /// first-symbol potentials, the midpoint of the enclosure otherwise.
    pub point: f64,
}

/// `inf/sup S_n f` on `[τ]` in the fiber `θ^start ω`.
pub fn word_bounds(pot: &dyn RandomPotential, orbit: &DrivingOrbit, start: i64, word: &[Symbol]) -> WordBounds {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (j, &e) in word.iter().enumerate() {
        let (a, b) = pot.symbol_bounds(orbit.state(start + j as i64), e);
        lo += a;
        hi += b;
    }
    tighten(lo, hi, pot.log_distortion())
}

/// Only per-symbol bounds are declared, so the enclosure is the sum of them;
/// the true oscillation on the cylinder is at most `log B_f` but its position
/// inside `[inf, sup]` is unknown.
pub(crate) fn tighten(lo: f64, hi: f64, _log_b: f64) -> WordBounds {
    WordBounds { inf: lo, sup: hi, point: 0.5 * (lo + hi) }
}

/// Per-state `log M_f(ω) = log sup_τ L(1)(τ)` and `log M̲_f(ω)`, restricted
/// to `alphabet` (or the whole alphabet with its tail when `None`).
pub fn ruelle_bounds(
    pot: &dyn RandomPotential,
    sys: &SymbolicSystem,
    state: State,
    alphabet: Option<&[Symbol]>,
) -> (f64, f64) {
    let symbols: Vec<Symbol> = match alphabet {
        Some(a) => a.to_vec(),
        None => sys.all_symbols(),
    };
    let tail = if alphabet.is_none() { pot.log_tail_sum(state) } else { None };
    let column = |b: Symbol| {
        let mut hi = LogAccumulator::new();
        let mut lo = LogAccumulator::new();
        for &e in &symbols {
            if sys.allows(e, b) {
                let (a, s) = pot.symbol_bounds(state, e);
                hi.push(s);
                lo.push(a);
            }
        }
        (hi.value(), lo.value())
    };
    let (hi, lo) = match sys.incidence() {
        Incidence::Full => column(symbols[0]),
        _ => {
            let cols: Vec<(f64, f64)> = symbols.iter().map(|&b| column(b)).collect();
            (
                cols.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max),
                cols.iter().map(|c| c.1).fold(f64::INFINITY, f64::min),
            )
        }
    };
    match tail {
        // a tail only exists on a full shift, and inf ≤ sup there, so the
        // tail bound is added to both sides for first-symbol potentials
        Some(t) => (log_add(hi, t), if pot.is_first_symbol() { log_add(lo, t) } else { lo }),
        None => (hi, lo),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberSummability {
    pub state: State,
    pub weight: f64,
    pub log_m_sup: f64,
    pub log_m_inf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub fibers: Vec<FiberSummability>,
    /// `∫ log M_f dP`.
    pub expected_log_m_sup: f64,
    /// `∫ log M̲_f dP`.
    pub expected_log_m_inf: f64,
    pub summable: bool,
    pub normal_summable: bool,
}

/// Exact per-fiber `M_f`, `M̲_f` over the driving marginal (every supported
/// driving system has a finite closed-form marginal).
pub fn summability(pot: &dyn RandomPotential, gdms: &Rcgdms) -> SummabilityReport {
    summability_on(pot, &gdms.symbolic, &gdms.driving, None)
}

pub fn summability_on(
    pot: &dyn RandomPotential,
    sys: &SymbolicSystem,
    driving: &DrivingSystem,
    alphabet: Option<&[Symbol]>,
) -> SummabilityReport {
    let fibers: Vec<FiberSummability> = driving
        .marginal()
        .into_iter()
        .filter(|p| p.1 > 0.0)
        .map(|(state, weight)| {
            let (log_m_sup, log_m_inf) = ruelle_bounds(pot, sys, state, alphabet);
            FiberSummability { state, weight, log_m_sup, log_m_inf }
        })
        .collect();
    let expect = |g: &dyn Fn(&FiberSummability) -> f64| {
        fibers.iter().map(|f| {
            let v = g(f);
            if v.is_infinite() {
                v
            } else {
                f.weight * v
            }
        })
        .sum::<f64>()
    };
    let expected_log_m_sup = expect(&|f| f.log_m_sup);
    let expected_log_m_inf = expect(&|f| f.log_m_inf);
    let summable = expected_log_m_sup < f64::INFINITY;
    SummabilityReport {
        fibers,
        expected_log_m_sup,
        expected_log_m_inf,
        summable,
        normal_summable: summable && expected_log_m_inf > f64::NEG_INFINITY,
    }
}

/// `s_∞ = inf{s : sζ summable}`, by bisection to `1e-6`; `-inf` for finite
/// alphabets.
pub fn s_infinity(gdms: &Rcgdms) -> Result<f64> {
    if !gdms.symbolic.has_tail() {
        return Ok(f64::NEG_INFINITY);
    }
    let zeta = geometric_potential(gdms)?;
    let summable = |s: f64| summability(zeta.scaled(s).as_ref(), gdms).summable;
    let mut hi = 1.0;
    while !summable(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Divergent { s: hi });
        }
    }
    let mut lo = hi - 1.0;
    while summable(lo) {
        lo -= 2.0 * (hi - lo);
        if lo < -1e6 {
            return Ok(f64::NEG_INFINITY);
        }
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if summable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `log M_RU(s) = log Σ_e ess sup_ω ‖φ'_{e,ω}‖^s` for similarity systems.
pub fn log_uniform_sum(gdms: &Rcgdms, s: f64) -> Result<f64> {
    let schedule = gdms.similarity_maps()?.schedule.clone();
    let mut acc = LogAccumulator::new();
    for e in 0..schedule.cutoff() {
        acc.push(s * schedule.log_sup_ratio(e));
    }
    Ok(match schedule.log_sup_tail_sum(s) {
        Some(t) => log_add(acc.value(), t),
        None => acc.value(),
    })
}

/// `K_{f,F}`: `sup_ω ‖f|_F‖_∞` over the supported fiber states.
pub fn subalphabet_bound(pot: &dyn RandomPotential, driving: &DrivingSystem, alphabet: &[Symbol]) -> f64 {
    driving
        .support()
        .into_iter()
        .flat_map(|state| alphabet.iter().map(move |&e| (state, e)))
        .map(|(state, e)| {
            let (a, b) = pot.symbol_bounds(state, e);
            a.abs().max(b.abs())
        })
        .fold(0.0, f64::max)
}
