//! Pressure curves `s ↦ P(sζ)`, Bowen's root, the temperature function
//! `T(q)` and the Legendre-transform Lyapunov spectrum.
//!
//! A curve always carries its grid values. When the pressure of `sζ` can be
//! evaluated exactly (closed form or periodic transfer operator) the curve
//! also carries that evaluator, and root finding and minimization use it
//! instead of interpolating the grid.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::driving::DrivingSystem;
use crate::error::{Error, Result};
use crate::gdms::Rcgdms;
use crate::numeric::{bisect, golden_section_min, lower_convex_envelope};
use crate::potentials::{geometric_potential, s_infinity, RandomPotential};
use crate::shift::{build_ladder, SubalphabetLadder, Symbol, SymbolicSystem};
use crate::thermo::{is_product, pressure, PressureOptions, PressureRoute, MONOTONE_SLACK};

/// Abscissa used for the asymptotic slopes `p'(±∞)`: the secant over
/// `[F, 2F]` differs from the limit by `O(e^{-F·gap})`.
pub const FAR_FIELD: f64 = 1e4;

/// Bracket expansion stops here; a minimizer still running away at this
/// point means `β` sits on an endpoint of the admissible range.
pub const EXPANSION_LIMIT: f64 = 1e4;

const ENDPOINT_TOL: f64 = 1e-9;

/// Alphabet over which a curve is computed.
#[derive(Clone, Debug)]
pub enum CurveDomain {
    /// Every symbol, tail included.
    Full,
    /// A finite subalphabet `F`.
    Finite(Vec<Symbol>),
    /// Compact approximation along a ladder. The curve stores the limit and
    /// keeps the rung values for monotonicity diagnostics.
    Ladder(SubalphabetLadder),
}

type EvalFn = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// Exact pressure evaluator `s ↦ P(sζ)`.
#[derive(Clone)]
pub struct Evaluator(Arc<EvalFn>);

impl Evaluator {
    pub fn new<F: Fn(f64) -> Result<f64> + Send + Sync + 'static>(f: F) -> Self {
        Evaluator(Arc::new(f))
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        (self.0)(s)
    }
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Evaluator(..)")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureCurve {
    pub s: Vec<f64>,
    /// Estimates as computed; `+inf` at or below `s_∞`.
    pub raw: Vec<f64>,
    /// Lower convex hull of the finite raw values.
    pub repaired: Vec<f64>,
    /// Largest `raw - repaired` over the grid.
    pub max_correction: f64,
    pub rung_sizes: Vec<usize>,
    /// `rungs[j][k]` is the rung-`k` pressure at `s[j]` (ladder curves only).
    pub rungs: Vec<Vec<f64>>,
    /// `(left, right)` secant slopes of the repaired curve at each grid point.
    pub slopes: Vec<(f64, f64)>,
    pub s_infinity: f64,
    /// `p'(+∞)`.
    pub slope_at_infinity: f64,
    /// `p'(s_∞⁺)`, or `p'(-∞)` when the alphabet is finite.
    pub slope_at_left_end: f64,
    pub finite_alphabet: bool,
    /// `None` when not applicable (finite alphabet).
    pub cofinitely_regular: Option<bool>,
    /// Largest `log` contraction ratio; every secant is at most this.
    pub log_kappa: f64,
    /// Whether an exact evaluator backs the curve.
    pub exact: bool,
    #[serde(skip)]
    evaluator: Option<Evaluator>,
}

fn alphabet_of(domain: &CurveDomain) -> Option<Vec<Symbol>> {
    match domain {
        CurveDomain::Full => None,
        CurveDomain::Finite(f) => Some(f.clone()),
        CurveDomain::Ladder(l) => Some(l.last().to_vec()),
    }
}

fn log_kappa(zeta: &dyn RandomPotential, sys: &SymbolicSystem, driving: &DrivingSystem, alphabet: &Option<Vec<Symbol>>) -> f64 {
    let symbols = alphabet.clone().unwrap_or_else(|| sys.all_symbols());
    let mut best = f64::NEG_INFINITY;
    for state in driving.support() {
        for &e in &symbols {
            let (_, sup) = zeta.symbol_bounds(state, e);
            if sup.is_finite() {
                best = best.max(sup);
            }
        }
    }
    best
}

/// Builds `p(s) = P(sζ)` on `s_grid`.
pub fn pressure_curve(gdms: &Rcgdms, domain: &CurveDomain, s_grid: &[f64], opts: &PressureOptions) -> Result<PressureCurve> {
    if s_grid.len() < 2 || s_grid.windows(2).any(|w| w[0] >= w[1]) || s_grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidGrid("s grid needs two or more strictly increasing finite values".into()));
    }
    let sys = &gdms.symbolic;
    let driving = &gdms.driving;
    let zeta = geometric_potential(gdms)?;
    // the ladder limit of a product potential is the full closed form
    let full_limit = matches!(domain, CurveDomain::Ladder(_)) && is_product(sys, zeta.as_ref());
    let finite_alphabet = !sys.has_tail() || matches!(domain, CurveDomain::Finite(_)) || (matches!(domain, CurveDomain::Ladder(_)) && !full_limit);
    let s_inf = if finite_alphabet { f64::NEG_INFINITY } else { s_infinity(gdms)? };

    let points: Vec<(f64, Vec<f64>)> = s_grid
        .par_iter()
        .map(|&s| -> Result<(f64, Vec<f64>)> {
            let pot = zeta.scaled(s);
            match domain {
                CurveDomain::Full if s <= s_inf => Ok((f64::INFINITY, Vec::new())),
                CurveDomain::Full => Ok((pressure(sys, driving, None, pot.as_ref(), opts)?.value, Vec::new())),
                CurveDomain::Finite(f) => Ok((pressure(sys, driving, Some(f), pot.as_ref(), opts)?.value, Vec::new())),
                CurveDomain::Ladder(ladder) => {
                    let rungs: Vec<f64> = ladder
                        .rungs
                        .iter()
                        .map(|r| pressure(sys, driving, Some(r), pot.as_ref(), opts).map(|p| p.value))
                        .collect::<Result<_>>()?;
                    if !full_limit {
                        Ok((*rungs.last().unwrap(), rungs))
                    } else if s <= s_inf {
                        Ok((f64::INFINITY, rungs))
                    } else {
                        Ok((pressure(sys, driving, None, pot.as_ref(), opts)?.value, rungs))
                    }
                }
            }
        })
        .collect::<Result<_>>()?;
    let raw: Vec<f64> = points.iter().map(|p| p.0).collect();
    let rungs: Vec<Vec<f64>> = points.into_iter().map(|p| p.1).collect();

    let finite: Vec<usize> = (0..raw.len()).filter(|&j| raw[j].is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::InvalidGrid(format!("every grid point lies at or below s_inf = {s_inf}")));
    }
    let xs: Vec<f64> = finite.iter().map(|&j| s_grid[j]).collect();
    let ys: Vec<f64> = finite.iter().map(|&j| raw[j]).collect();
    let hull = lower_convex_envelope(&xs, &ys);
    let mut repaired = vec![f64::INFINITY; raw.len()];
    let mut max_correction: f64 = 0.0;
    for (i, &j) in finite.iter().enumerate() {
        repaired[j] = hull[i];
        max_correction = max_correction.max(raw[j] - hull[i]);
    }

    let mut slopes = vec![(f64::NAN, f64::NAN); raw.len()];
    for w in finite.windows(2) {
        let slope = (repaired[w[1]] - repaired[w[0]]) / (s_grid[w[1]] - s_grid[w[0]]);
        slopes[w[0]].1 = slope;
        slopes[w[1]].0 = slope;
    }

    // exact evaluator when the route is closed form or periodic transfer
    let alphabet = alphabet_of(domain);
    let eval_alphabet = if full_limit { None } else { alphabet.clone() };
    let probe = pressure(sys, driving, eval_alphabet.as_deref(), zeta.scaled(xs[0]).as_ref(), opts);
    let exact = matches!(
        probe.map(|p| p.route),
        Ok(PressureRoute::ClosedForm) | Ok(PressureRoute::PeriodicTransfer)
    );
    let eval_s_inf = if eval_alphabet.is_none() && sys.has_tail() { s_infinity(gdms)? } else { s_inf };
    let evaluator = exact.then(|| {
        let sys = sys.clone();
        let driving = driving.clone();
        let zeta = zeta.clone();
        let opts = opts.clone();
        let alphabet = eval_alphabet.clone();
        Evaluator::new(move |s| {
            if s <= eval_s_inf {
                return Ok(f64::INFINITY);
            }
            Ok(pressure(&sys, &driving, alphabet.as_deref(), zeta.scaled(s).as_ref(), &opts)?.value)
        })
    });

    let first = finite[0];
    let last = *finite.last().unwrap();
    let outer_left = if finite.len() >= 2 { slopes[first].1 } else { f64::NAN };
    let outer_right = if finite.len() >= 2 { slopes[last].0 } else { f64::NAN };

    let cofinitely_regular = if finite_alphabet { None } else { Some(cofinite_regularity(gdms, opts)?.regular) };

    let (slope_at_infinity, slope_at_left_end) = match &evaluator {
        Some(ev) => {
            let right = (ev.eval(2.0 * FAR_FIELD)? - ev.eval(FAR_FIELD)?) / FAR_FIELD;
            let left = if finite_alphabet {
                (ev.eval(-FAR_FIELD)? - ev.eval(-2.0 * FAR_FIELD)?) / FAR_FIELD
            } else if cofinitely_regular == Some(true) {
                f64::NEG_INFINITY
            } else {
                let d = 1e-4_f64.max(1e-3 * s_inf.abs());
                (ev.eval(s_inf + 2.0 * d)? - ev.eval(s_inf + d)?) / d
            };
            (right, left)
        }
        None => {
            let left = if cofinitely_regular == Some(true) { f64::NEG_INFINITY } else { outer_left };
            (outer_right, left)
        }
    };

    Ok(PressureCurve {
        s: s_grid.to_vec(),
        raw,
        repaired,
        max_correction,
        rung_sizes: match domain {
            CurveDomain::Ladder(l) => l.rungs.iter().map(Vec::len).collect(),
            _ => Vec::new(),
        },
        rungs,
        slopes,
        s_infinity: s_inf,
        slope_at_infinity,
        slope_at_left_end,
        finite_alphabet,
        cofinitely_regular,
        log_kappa: log_kappa(zeta.as_ref(), sys, driving, &alphabet),
        exact,
        evaluator,
    })
}

impl PressureCurve {
    pub fn evaluator(&self) -> Option<&Evaluator> {
        self.evaluator.as_ref()
    }

    /// Same curve without its evaluator, for checking grid-only code paths.
    pub fn grid_only(&self) -> PressureCurve {
        PressureCurve { evaluator: None, exact: false, ..self.clone() }
    }

    fn finite_points(&self) -> (Vec<f64>, Vec<f64>) {
        self.s
            .iter()
            .zip(&self.repaired)
            .filter(|(_, p)| p.is_finite())
            .map(|(&s, &p)| (s, p))
            .unzip()
    }

    /// `p(s)`: exact when an evaluator is attached, otherwise piecewise
    /// linear in the repaired values with the endpoint slopes beyond the grid.
    pub fn value_at(&self, s: f64) -> Result<f64> {
        if s <= self.s_infinity {
            return Ok(f64::INFINITY);
        }
        if let Some(ev) = &self.evaluator {
            return ev.eval(s);
        }
        let (xs, ys) = self.finite_points();
        let n = xs.len();
        if n == 1 {
            return Ok(ys[0]);
        }
        if s <= xs[0] {
            let slope = if self.slope_at_left_end.is_finite() { self.slope_at_left_end } else { (ys[1] - ys[0]) / (xs[1] - xs[0]) };
            if self.s_infinity.is_finite() && s < xs[0] && self.slope_at_left_end == f64::NEG_INFINITY {
                // unknown growth towards the blow-up; stay with the secant
                return Ok(ys[0] + (s - xs[0]) * (ys[1] - ys[0]) / (xs[1] - xs[0]));
            }
            return Ok(ys[0] + (s - xs[0]) * slope);
        }
        if s >= xs[n - 1] {
            return Ok(ys[n - 1] + (s - xs[n - 1]) * self.slope_at_infinity);
        }
        let i = xs.partition_point(|&x| x <= s) - 1;
        let t = (s - xs[i]) / (xs[i + 1] - xs[i]);
        Ok(ys[i] + t * (ys[i + 1] - ys[i]))
    }

    /// Finite repaired values strictly decrease along the grid.
    pub fn strictly_decreasing(&self) -> bool {
        let (_, ys) = self.finite_points();
        ys.windows(2).all(|w| w[1] < w[0])
    }

    /// Every secant slope is at most `log κ` (up to `tol`).
    pub fn slope_bound_holds(&self, tol: f64) -> bool {
        self.slopes.iter().all(|&(l, r)| !(l > self.log_kappa + tol) && !(r > self.log_kappa + tol))
    }

    /// Largest `p_{F_k}(s) - p_{F_{k+1}}(s)` over the grid; `<= 0` when the
    /// rungs increase.
    pub fn rung_violation(&self) -> f64 {
        self.rungs
            .iter()
            .flat_map(|r| r.windows(2).map(|w| w[0] - w[1]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rungs_monotone(&self) -> bool {
        !(self.rung_violation() > MONOTONE_SLACK)
    }

    /// Central second differences of the raw values (non-uniform grid).
    pub fn second_differences(&self) -> Vec<f64> {
        let pts: Vec<(f64, f64)> = self.s.iter().zip(&self.raw).filter(|(_, p)| p.is_finite()).map(|(&s, &p)| (s, p)).collect();
        pts.windows(3)
            .map(|w| {
                let left = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                let right = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
                2.0 * (right - left) / (w[2].0 - w[0].0)
            })
            .collect()
    }

    /// `(-p'(+∞), -p'(s_∞))`.
    pub fn validity(&self) -> (f64, f64) {
        (-self.slope_at_infinity, -self.slope_at_left_end)
    }
}

/// Minimizes a convex function by stepping from `x0` until it turns up, then
/// golden-section on the final bracket.
fn minimize_convex<F: FnMut(f64) -> f64>(mut h: F, x0: f64, step0: f64, tol: f64) -> (f64, f64) {
    let step0 = step0.max(1e-6);
    let f0 = h(x0);
    let right = h(x0 + step0);
    let dir = if right < f0 {
        1.0
    } else if h(x0 - step0) < f0 {
        -1.0
    } else {
        return golden_section_min(h, x0 - step0, x0 + step0, tol);
    };
    let mut prev = x0;
    let mut cur = x0 + dir * step0;
    let mut f_cur = h(cur);
    let mut step = step0;
    loop {
        step *= 2.0;
        let next = cur + dir * step;
        let f_next = h(next);
        if !(f_next < f_cur) || next.abs() > EXPANSION_LIMIT {
            let (a, b) = if prev < next { (prev, next) } else { (next, prev) };
            return golden_section_min(h, a, b, tol * (b - a).max(1.0));
        }
        prev = cur;
        cur = next;
        f_cur = f_next;
    }
}

/// Bowen's root `inf{s ≥ 0 : p(s) ≤ 0}`.
pub fn bowen_dimension(curve: &PressureCurve) -> Result<f64> {
    let lo = curve.s_infinity.max(0.0);
    let p_lo = curve.value_at(lo)?;
    if p_lo <= 0.0 {
        return Ok(lo);
    }
    let mut hi = curve
        .s
        .iter()
        .zip(&curve.repaired)
        .find(|(&s, &p)| s > lo && p < 0.0)
        .map(|(&s, _)| s)
        .unwrap_or_else(|| curve.s.last().unwrap().max(lo + 1.0));
    let mut value_err = None;
    let mut p = |s: f64| match curve.value_at(s) {
        Ok(v) => v,
        Err(e) => {
            value_err.get_or_insert(e);
            f64::NAN
        }
    };
    while !(p(hi) < 0.0) {
        hi = 2.0 * hi.max(1.0);
        if hi > 1e6 {
            return Err(Error::NoSignChange { lo, hi });
        }
    }
    let root = bisect(&mut p, lo, hi, 1e-13, 1e-10)?;
    match value_err {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CofiniteReport {
    pub s_infinity: f64,
    /// `false` for finite alphabets, where the flag holds vacuously.
    pub applicable: bool,
    pub regular: bool,
    /// `p(s_∞)` estimate (`+inf` when regular, `NaN` when not applicable).
    pub p_at_s_infinity: f64,
    /// Offsets `δ` above `s_∞` and the pressures there.
    pub offsets: Vec<f64>,
    pub offset_values: Vec<f64>,
    pub rung_sizes: Vec<usize>,
    /// Rung pressures at `s_∞`.
    pub rung_values: Vec<f64>,
}

/// Decides whether `p(s) → ∞` as `s ↓ s_∞`.
///
/// Product potentials: the closed-form pressure at `s_∞ + δ` for
/// `δ = 10^-1 … 10^-4` must keep growing by a non-vanishing amount per
/// decade. Otherwise the rung pressures at `s_∞` must keep growing along a
/// doubling ladder.
pub fn cofinite_regularity(gdms: &Rcgdms, opts: &PressureOptions) -> Result<CofiniteReport> {
    let s_inf = s_infinity(gdms)?;
    if s_inf == f64::NEG_INFINITY {
        return Ok(CofiniteReport {
            s_infinity: s_inf,
            applicable: false,
            regular: true,
            p_at_s_infinity: f64::NAN,
            offsets: Vec::new(),
            offset_values: Vec::new(),
            rung_sizes: Vec::new(),
            rung_values: Vec::new(),
        });
    }
    let sys = &gdms.symbolic;
    let zeta = geometric_potential(gdms)?;
    let grows = |values: &[f64]| -> bool {
        if values.contains(&f64::INFINITY) {
            return true;
        }
        let inc: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        match (inc.first(), inc.last()) {
            (Some(&first), Some(&last)) => inc.iter().all(|&d| d > 0.0) && last > 1e-6 && last >= 0.5 * first,
            _ => false,
        }
    };

    let mut sizes = Vec::new();
    let mut size = 2;
    while size < sys.cutoff() {
        sizes.push(size);
        size *= 2;
    }
    sizes.push(sys.cutoff());
    let ladder = build_ladder(sys, &[], &sizes)?;
    let pot = zeta.scaled(s_inf);
    let rung_values: Vec<f64> = ladder
        .rungs
        .par_iter()
        .map(|r| pressure(sys, &gdms.driving, Some(r), pot.as_ref(), opts).map(|p| p.value))
        .collect::<Result<_>>()?;

    let (offsets, offset_values, regular, p_at) = if is_product(sys, zeta.as_ref()) {
        let offsets = vec![1e-1, 1e-2, 1e-3, 1e-4];
        let values: Vec<f64> = offsets
            .iter()
            .map(|d| pressure(sys, &gdms.driving, None, zeta.scaled(s_inf + d).as_ref(), opts).map(|p| p.value))
            .collect::<Result<_>>()?;
        let regular = grows(&values);
        let p_at = if regular { f64::INFINITY } else { *values.last().unwrap() };
        (offsets, values, regular, p_at)
    } else {
        let regular = grows(&rung_values);
        let p_at = if regular { f64::INFINITY } else { *rung_values.last().unwrap() };
        (Vec::new(), Vec::new(), regular, p_at)
    };
    Ok(CofiniteReport {
        s_infinity: s_inf,
        applicable: true,
        regular,
        p_at_s_infinity: p_at,
        offsets,
        offset_values,
        rung_sizes: sizes,
        rung_values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub beta: f64,
    pub l: f64,
    /// Where `βs + p(s)` attains its infimum.
    pub minimizer: f64,
    /// `β` sits on an endpoint of the validity interval; the value is a
    /// one-sided limit rather than an interior Legendre value.
    pub endpoint: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    pub points: Vec<SpectrumPoint>,
    /// `(-p'(+∞), -p'(s_∞))`.
    pub validity: (f64, f64),
    pub s_star: f64,
    pub s_infinity: f64,
    pub cofinitely_regular: Option<bool>,
    /// Largest reported `β` when the validity interval is unbounded.
    pub beta_cap: Option<f64>,
    /// `β ↦ β·l(β)` is concave across the reported points.
    pub transform_concave: bool,
    pub warnings: Vec<String>,
}

/// `(1/β)·inf_s {βs + p(s)}` and the minimizer.
pub fn legendre_value(curve: &PressureCurve, beta: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::BetaOutOfRange { beta });
    }
    let (xs, ys) = curve.finite_points();
    let (j, grid_min) = xs
        .iter()
        .zip(&ys)
        .map(|(s, p)| beta * s + p)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (j, g)| if g < best.1 { (j, g) } else { best });
    if curve.evaluator.is_none() {
        return Ok((grid_min / beta, xs[j]));
    }
    let step = if xs.len() >= 2 { (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64 } else { 1.0 };
    let mut err = None;
    let (s_min, g_min) = minimize_convex(
        |s| match curve.value_at(s) {
            Ok(p) => beta * s + p,
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        },
        xs[j],
        step,
        1e-12,
    );
    if let Some(e) = err {
        return Err(e);
    }
    if grid_min < g_min {
        return Ok((grid_min / beta, xs[j]));
    }
    Ok((g_min / beta, s_min))
}

/// Lyapunov spectrum on `betas`. Exponents outside the validity interval are
/// dropped with a warning; exponents on an endpoint are kept and flagged.
pub fn legendre_spectrum(curve: &PressureCurve, betas: &[f64]) -> Result<SpectrumResult> {
    if let Some(&beta) = betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(Error::BetaOutOfRange { beta });
    }
    let (lo, hi) = curve.validity();
    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    for &beta in betas {
        let tol_lo = ENDPOINT_TOL * lo.abs().max(1.0);
        let tol_hi = ENDPOINT_TOL * hi.abs().max(1.0);
        if beta < lo - tol_lo || beta > hi + tol_hi {
            warnings.push(format!("beta = {beta} lies outside [{lo}, {hi}]; the level set is empty"));
            continue;
        }
        let endpoint = (beta - lo).abs() <= tol_lo || (hi.is_finite() && (beta - hi).abs() <= tol_hi);
        if endpoint {
            warnings.push(format!("beta = {beta} is an endpoint; the reported value is a limit"));
        }
        kept.push((beta, endpoint));
    }
    let points: Vec<SpectrumPoint> = kept
        .par_iter()
        .map(|&(beta, endpoint)| {
            legendre_value(curve, beta).map(|(l, minimizer)| SpectrumPoint { beta, l, minimizer, endpoint })
        })
        .collect::<Result<_>>()?;
    let beta_cap = if hi == f64::INFINITY {
        let cap = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        warnings.push(format!("validity interval is unbounded above; beta grid capped at {cap}"));
        Some(cap)
    } else {
        None
    };
    let transform_concave = points.windows(3).all(|w| {
        let y = |p: &SpectrumPoint| p.beta * p.l;
        let left = (y(&w[1]) - y(&w[0])) / (w[1].beta - w[0].beta);
        let right = (y(&w[2]) - y(&w[1])) / (w[2].beta - w[1].beta);
        right <= left + 1e-8 * left.abs().max(1.0)
    });
    Ok(SpectrumResult {
        points,
        validity: (lo, hi),
        s_star: bowen_dimension(curve)?,
        s_infinity: curve.s_infinity,
        cofinitely_regular: curve.cofinitely_regular,
        beta_cap,
        transform_concave,
        warnings,
    })
}

/// Per-rung spectra `(1/β)·min_j {βs_j + p_{F_k}(s_j)}` over the grid;
/// `out[k][i]` belongs to rung `k` and `betas[i]`.
pub fn rung_spectra(curve: &PressureCurve, betas: &[f64]) -> Vec<Vec<f64>> {
    let rungs = curve.rung_sizes.len();
    (0..rungs)
        .map(|k| {
            betas
                .iter()
                .map(|&beta| {
                    curve
                        .s
                        .iter()
                        .zip(&curve.rungs)
                        .map(|(s, r)| beta * s + r[k])
                        .fold(f64::INFINITY, f64::min)
                        / beta
                })
                .collect()
        })
        .collect()
}

/// `T(q)`: the unique `s` with `p_F(s) = q·p_F(0)`.
pub fn temperature(curve: &PressureCurve, q: f64) -> Result<f64> {
    let p0 = curve.value_at(0.0)?;
    let target = q * p0;
    if !target.is_finite() {
        return Err(Error::Degenerate(format!("p(0) = {p0}; T({q}) is undefined")));
    }
    let g = |s: f64| curve.value_at(s).map(|p| p - target);
    let (mut lo, mut hi) = (-1.0, 1.0);
    while !(g(lo)? > 0.0) {
        lo *= 2.0;
        if lo < -1e7 {
            return Err(Error::NoSignChange { lo, hi });
        }
    }
    while !(g(hi)? < 0.0) {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(Error::NoSignChange { lo, hi });
        }
    }
    let mut err = None;
    let mut f = |s: f64| match g(s) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let root = bisect(&mut f, lo, hi, 1e-14, 1e-14)?;
    match err {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

fn require_tq(curve: &PressureCurve) -> Result<f64> {
    if !curve.finite_alphabet {
        return Err(Error::Degenerate("T(q) needs a finite alphabet".into()));
    }
    let p0 = curve.value_at(0.0)?;
    if !(p0 > 0.0) {
        return Err(Error::Degenerate(format!("p(0) = {p0}; T(q) needs at least two symbols")));
    }
    Ok(p0)
}

/// `min_q {(p_F(0)/β)·q + T(q)}`. Substituting `s = T(q)` turns this into
/// `(1/β)·inf_s {βs + p_F(s)}`, so it must agree with [`legendre_value`].
pub fn legendre_via_temperature(curve: &PressureCurve, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::BetaOutOfRange { beta });
    }
    let p0 = require_tq(curve)?;
    let mut err = None;
    let (_, value) = minimize_convex(
        |q| match temperature(curve, q) {
            Ok(t) => p0 / beta * q + t,
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        },
        0.0,
        0.5,
        1e-12,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TqAnalysis {
    pub p0: f64,
    pub q: Vec<f64>,
    pub t: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `T*(α) = inf_q {αq + T(q)}`; `-inf` outside the range of `-T'`.
    pub t_star: Vec<f64>,
    pub t_decreasing: bool,
    /// Largest relative gap between a numerical `T'(q)` and `p_F(0)/p_F'(T(q))`.
    pub derivative_mismatch: f64,
}

pub fn tq_analysis(curve: &PressureCurve, q_grid: &[f64], alpha_grid: &[f64]) -> Result<TqAnalysis> {
    let p0 = require_tq(curve)?;
    let t: Vec<f64> = q_grid.par_iter().map(|&q| temperature(curve, q)).collect::<Result<_>>()?;
    let t_decreasing = t.windows(2).all(|w| w[1] < w[0]);

    let h = 1e-4;
    let mismatch: Vec<f64> = q_grid
        .par_iter()
        .zip(&t)
        .map(|(&q, &tq)| -> Result<f64> {
            let dt = (temperature(curve, q + h)? - temperature(curve, q - h)?) / (2.0 * h);
            let dp = (curve.value_at(tq + h)? - curve.value_at(tq - h)?) / (2.0 * h);
            let predicted = p0 / dp;
            Ok(((dt - predicted) / predicted).abs())
        })
        .collect::<Result<_>>()?;
    let derivative_mismatch = mismatch.into_iter().fold(0.0, f64::max);

    let t_star: Vec<f64> = alpha_grid
        .par_iter()
        .map(|&alpha| -> Result<f64> {
            let mut err = None;
            let (q, value) = minimize_convex(
                |q| match temperature(curve, q) {
                    Ok(t) => alpha * q + t,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::INFINITY
                    }
                },
                0.0,
                0.5,
                1e-12,
            );
            if let Some(e) = err {
                return Err(e);
            }
            // the bracket ran into the expansion limit: unbounded below
            Ok(if q.abs() >= 0.5 * EXPANSION_LIMIT { f64::NEG_INFINITY } else { value })
        })
        .collect::<Result<_>>()?;

    Ok(TqAnalysis {
        p0,
        q: q_grid.to_vec(),
        t,
        alpha: alpha_grid.to_vec(),
        t_star,
        t_decreasing,
        derivative_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdms::instances;
    use crate::numeric::linspace;

    fn curve(g: &Rcgdms) -> PressureCurve {
        pressure_curve(g, &CurveDomain::Full, &linspace(-2.0, 4.0, 25), &PressureOptions::default()).unwrap()
    }

    #[test]
    fn cantor_curve_is_affine() {
        let c = curve(&instances::cantor());
        for (s, p) in c.s.iter().zip(&c.raw) {
            assert!((p - (2f64.ln() - s * 3f64.ln())).abs() < 1e-12);
        }
        assert!(c.max_correction < 1e-12);
        assert!((c.slope_at_infinity + 3f64.ln()).abs() < 1e-9);
        assert!((c.slope_at_left_end + 3f64.ln()).abs() < 1e-9);
        assert!(c.exact);
    }

    #[test]
    fn bowen_roots() {
        let s = bowen_dimension(&curve(&instances::cantor())).unwrap();
        assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        let s = bowen_dimension(&curve(&instances::twoscale())).unwrap();
        assert!((s - ((1.0 + 5f64.sqrt()) / 2.0).log2()).abs() < 1e-9);
        let s = bowen_dimension(&curve(&instances::period2())).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn grid_only_bowen_is_close() {
        let c = curve(&instances::twoscale()).grid_only();
        let s = bowen_dimension(&c).unwrap();
        assert!((s - 0.6942419).abs() < 5e-3);
    }

    #[test]
    fn twoscale_spectrum() {
        let c = curve(&instances::twoscale());
        let (l, s) = legendre_value(&c, 1.5 * 2f64.ln()).unwrap();
        assert!((l - 2.0 / 3.0).abs() < 1e-9);
        assert!(s.abs() < 1e-4);
        let (lo, hi) = c.validity();
        assert!((lo - 2f64.ln()).abs() < 1e-9 && (hi - 4f64.ln()).abs() < 1e-9);
        let r = legendre_spectrum(&c, &[0.5, 2f64.ln(), 1.0, 1.3]).unwrap();
        assert_eq!(r.points.len(), 3);
        assert!(r.points[0].endpoint && r.points[0].l.abs() < 1e-3);
        assert!(r.transform_concave);
        assert!(r.warnings.iter().any(|w| w.contains("outside")));
    }

    #[test]
    fn cantor_endpoint_is_flagged() {
        let c = curve(&instances::cantor());
        let r = legendre_spectrum(&c, &[3f64.ln()]).unwrap();
        assert!(r.points[0].endpoint);
        assert!((r.points[0].l - r.s_star).abs() < 1e-9);
    }

    #[test]
    fn beta_must_be_positive() {
        let c = curve(&instances::cantor());
        assert!(matches!(legendre_spectrum(&c, &[0.0]), Err(Error::BetaOutOfRange { .. })));
    }

    #[test]
    fn temperature_identities() {
        let c = curve(&instances::cantor());
        let s_star = 2f64.ln() / 3f64.ln();
        for q in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            assert!((temperature(&c, q).unwrap() - (1.0 - q) * s_star).abs() < 1e-10);
        }
        let c = curve(&instances::twoscale());
        assert!(temperature(&c, 1.0).unwrap().abs() < 1e-10);
        for beta in [0.8, 1.0, 1.2] {
            let direct = legendre_value(&c, beta).unwrap().0 * beta;
            let via_t = legendre_via_temperature(&c, beta).unwrap();
            assert!((direct / beta - via_t).abs() < 1e-8, "{direct} {via_t}");
        }
        let t = tq_analysis(&c, &linspace(-2.0, 2.0, 9), &[0.5, 0.7]).unwrap();
        assert!(t.t_decreasing);
        assert!(t.derivative_mismatch < 1e-4);
    }

    #[test]
    fn pure_tail_is_cofinitely_regular() {
        let g = instances::pure_tail(64);
        let r = cofinite_regularity(&g, &PressureOptions::default()).unwrap();
        assert!(r.applicable && r.regular);
        assert!(r.s_infinity.abs() < 1e-5);
        let finite = cofinite_regularity(&instances::cantor(), &PressureOptions::default()).unwrap();
        assert!(!finite.applicable && finite.regular);
    }

    #[test]
    fn product_ladder_stores_the_full_limit() {
        let g = instances::pure_tail(64);
        let opts = PressureOptions::default();
        let ladder = build_ladder(&g.symbolic, &[], &[4, 16, 64]).unwrap();
        let grid = linspace(0.05, 2.0, 20);
        let c = pressure_curve(&g, &CurveDomain::Ladder(ladder), &grid, &opts).unwrap();
        let full = pressure_curve(&g, &CurveDomain::Full, &grid, &opts).unwrap();
        assert!(!c.finite_alphabet);
        assert_eq!(c.slope_at_left_end, f64::NEG_INFINITY);
        assert!(c.validity().1.is_infinite());
        for (a, b) in c.raw.iter().zip(&full.raw) {
            assert!((a - b).abs() < 1e-12);
        }
        // rung values sit below the limit
        for (row, p) in c.rungs.iter().zip(&c.raw) {
            assert!(row.iter().all(|r| *r <= p + 1e-9));
        }
    }

    #[test]
    fn golden_mean_endpoints_are_cycle_means() {
        // cycles `0` and `01` carry the extreme mean exponents
        let g = instances::golden_mean(0.4, 0.3);
        let c = pressure_curve(&g, &CurveDomain::Full, &linspace(-1.0, 3.0, 21), &PressureOptions::default()).unwrap();
        let (lo, hi) = c.validity();
        assert!((lo - 2.5f64.ln()).abs() < 1e-9, "{lo}");
        assert!((hi - 0.5 * (2.5f64.ln() - 0.3f64.ln())).abs() < 1e-9, "{hi}");
    }
}
