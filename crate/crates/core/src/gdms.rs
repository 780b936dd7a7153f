//! Random conformal graph directed Markov systems on intervals.
//!
//! Similarity systems are described by a [`RatioSchedule`] (the contraction
//! ratio of every edge in every fiber state, including a closed-form tail for
//! infinite alphabets) and a placement of the images inside the vertex
//! intervals. General conformal maps can be declared through derivative
//! bounds; they feed the potentials but carry no explicit geometry.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::driving::{DrivingOrbit, DrivingSystem, State};
use crate::error::{Error, Result};
use crate::numeric::{log_add, log_sum_exp};
use crate::shift::{enumerate_words, Symbol, SymbolicSystem, TailDescriptor};

/// Contraction ratios `r_e(ω)` of a similarity family, in log form.
pub trait RatioSchedule: Send + Sync + fmt::Debug {
    /// Number of materialized edges.
    fn cutoff(&self) -> usize;

    /// States the schedule is defined on.
    fn states(&self) -> Vec<State>;

    /// `log r_e` in a fiber with the given state, for `e < cutoff`.
    fn log_ratio(&self, state: State, e: Symbol) -> f64;

    /// `log sup_ω r_e(ω)`.
    fn log_sup_ratio(&self, e: Symbol) -> f64 {
        self.states().into_iter().map(|s| self.log_ratio(s, e)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `log Σ_{e ≥ cutoff} r_e^s` in the given state: `None` for a finite
    /// alphabet, `+inf` when the series diverges.
    fn log_tail_sum(&self, _state: State, _s: f64) -> Option<f64> {
        None
    }

    /// `log Σ_{e ≥ cutoff} (sup_ω r_e)^s`.
    fn log_sup_tail_sum(&self, _s: f64) -> Option<f64> {
        None
    }
}

/// Finite table of ratios, one row per state.
#[derive(Clone, Debug)]
pub struct RatioTable {
    rows: BTreeMap<State, Vec<f64>>,
    cutoff: usize,
}

impl RatioTable {
    /// `rows` maps each state to the ratios of edges `0..cutoff`.
    pub fn new(rows: Vec<(State, Vec<f64>)>) -> Result<Self> {
        let cutoff = rows.first().map(|r| r.1.len()).unwrap_or(0);
        if cutoff == 0 || rows.iter().any(|r| r.1.len() != cutoff) {
            return Err(Error::InvalidSystem("ratio rows must be nonempty and of equal length".into()));
        }
        if rows.iter().flat_map(|r| &r.1).any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::InvalidSystem("similarity ratios must lie in (0, 1)".into()));
        }
        let rows = rows.into_iter().map(|(s, r)| (s, r.into_iter().map(f64::ln).collect())).collect();
        Ok(Self { rows, cutoff })
    }

    /// Same ratios in every state of `states`.
    pub fn uniform(states: &[State], ratios: Vec<f64>) -> Result<Self> {
        Self::new(states.iter().map(|&s| (s, ratios.clone())).collect())
    }
}

impl RatioSchedule for RatioTable {
    fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn states(&self) -> Vec<State> {
        self.rows.keys().copied().collect()
    }

    fn log_ratio(&self, state: State, e: Symbol) -> f64 {
        match self.rows.get(&state) {
            Some(row) => row[e],
            None => panic!("ratio table has no row for state {state}"),
        }
    }
}

/// Log of `Σ_{e > last} q^{s e}` for `q < 1`, i.e. `q^{s(last+1)} / (1 - q^s)`.
fn log_geometric_tail(log_q: f64, s: f64, last: f64) -> f64 {
    if s <= 0.0 {
        return f64::INFINITY;
    }
    let log_qs = s * log_q;
    log_qs * (last + 1.0) - (-(log_qs.exp_m1())).ln()
}

/// Deterministic infinite system with `r_e = q^e` for labels `e = 1, 2, ...`.
#[derive(Clone, Debug)]
pub struct GeometricTailSchedule {
    log_q: f64,
    cutoff: usize,
}

impl GeometricTailSchedule {
    pub fn new(q: f64, cutoff: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) || cutoff == 0 {
            return Err(Error::InvalidSystem("geometric tail needs 0 < q < 1 and cutoff >= 1".into()));
        }
        Ok(Self { log_q: q.ln(), cutoff })
    }
}

impl RatioSchedule for GeometricTailSchedule {
    fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn states(&self) -> Vec<State> {
        vec![0]
    }

    fn log_ratio(&self, _state: State, e: Symbol) -> f64 {
        self.log_q * (e + 1) as f64
    }

    fn log_tail_sum(&self, _state: State, s: f64) -> Option<f64> {
        Some(log_geometric_tail(self.log_q, s, self.cutoff as f64))
    }

    fn log_sup_tail_sum(&self, s: f64) -> Option<f64> {
        self.log_tail_sum(0, s)
    }
}

/// Ratio schedule of the non-evenly-varying worked example.
///
/// In fiber state `i`: edge `1` has ratio `2^-2`; an edge `e` in block `l`
/// (`Σ_{k<l} 2^{k²-1} < e ≤ Σ_{k≤l} 2^{k²-1}`, `2 ≤ l ≤ i`) has ratio
/// `2^{-(l²+l)}`; every other edge has ratio `8^{-e}`. Labels start at 1.
#[derive(Clone, Debug)]
pub struct PaperExampleSchedule {
    cutoff: usize,
    max_state: State,
}

const BLOCK_EXACT_LIMIT: u32 = 30;

impl PaperExampleSchedule {
    pub fn new(cutoff: usize, max_state: State) -> Result<Self> {
        if cutoff == 0 || max_state == 0 {
            return Err(Error::InvalidSystem("cutoff and max state must be positive".into()));
        }
        Ok(Self { cutoff, max_state })
    }

    /// `Σ_{k=1}^{l} 2^{k²-1}` (the last label of block `l`), as `f64`.
    pub fn block_end(l: u32) -> f64 {
        (1..=l).map(|k| 2f64.powi((k * k) as i32 - 1)).sum()
    }

    /// Block of label `e >= 1`.
    pub fn block_of(e: usize) -> u32 {
        let mut l = 1;
        while (e as f64) > Self::block_end(l) {
            l += 1;
        }
        l
    }

    fn log_block_ratio(l: u32) -> f64 {
        -((l * l + l) as f64) * LN_2
    }

    /// log of the number of labels of block `l` beyond label `last`.
    fn log_block_count_beyond(l: u32, last: f64) -> f64 {
        if l > BLOCK_EXACT_LIMIT {
            return ((l * l - 1) as f64) * LN_2;
        }
        let start = if l == 1 { 0.0 } else { Self::block_end(l - 1) };
        let end = Self::block_end(l);
        let count = end - start.max(last);
        if count <= 0.0 {
            f64::NEG_INFINITY
        } else {
            count.ln()
        }
    }

    fn label_ratio(state: State, label: usize) -> f64 {
        if label == 1 {
            return Self::log_block_ratio(1);
        }
        let l = Self::block_of(label);
        if l <= state {
            Self::log_block_ratio(l)
        } else {
            -3.0 * LN_2 * label as f64
        }
    }
}

impl RatioSchedule for PaperExampleSchedule {
    fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn states(&self) -> Vec<State> {
        (1..=self.max_state).collect()
    }

    fn log_ratio(&self, state: State, e: Symbol) -> f64 {
        Self::label_ratio(state, e + 1)
    }

    fn log_sup_ratio(&self, e: Symbol) -> f64 {
        // the block ratio dominates 8^{-e} inside every block
        Self::log_block_ratio(Self::block_of(e + 1))
    }

    fn log_tail_sum(&self, state: State, s: f64) -> Option<f64> {
        if s <= 0.0 {
            return Some(f64::INFINITY);
        }
        let last = self.cutoff as f64;
        let mut acc = f64::NEG_INFINITY;
        for l in 1..=state {
            let lc = Self::log_block_count_beyond(l, last);
            acc = log_add(acc, lc + s * Self::log_block_ratio(l));
        }
        let geometric_from = last.max(Self::block_end(state));
        acc = log_add(acc, log_geometric_tail(-3.0 * LN_2, s, geometric_from));
        Some(acc)
    }

    fn log_sup_tail_sum(&self, s: f64) -> Option<f64> {
        // terms 2^{(1-s) l² - s l - 1} grow without bound when s < 1
        if s < 1.0 {
            return Some(f64::INFINITY);
        }
        let last = self.cutoff as f64;
        let terms: Vec<f64> = (1..=200u32)
            .map(|l| Self::log_block_count_beyond(l, last) + s * Self::log_block_ratio(l))
            .collect();
        Some(log_sum_exp(&terms))
    }
}

/// Where the images `φ_e(X_{t(e)})` sit inside `X_{i(e)}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Placement {
    /// Left endpoint of every image, per state.
    Explicit(BTreeMap<State, Vec<f64>>),
    /// Greedy left-to-right packing with uniform gaps taken from the slack;
    /// the tail (if any) is reserved at the right end.
    Packed,
}

/// Similarity maps `φ_e(x) = left_e + r_e (x - a_{t(e)})` (or reflected).
#[derive(Clone, Debug)]
pub struct SimilarityMaps {
    pub schedule: Arc<dyn RatioSchedule>,
    /// `true` for orientation-preserving edges; empty means all preserving.
    pub orientation: Vec<bool>,
    left: BTreeMap<State, Vec<f64>>,
}

/// Conformal maps known only through `[inf |φ'|, sup |φ'|]` per state and edge.
#[derive(Clone, Debug)]
pub struct DeclaredConformalMaps {
    pub bounds: BTreeMap<State, Vec<Option<(f64, f64)>>>,
    /// Bounded distortion constant `K_bd >= 1`.
    pub distortion: f64,
    /// Hölder exponent `α_Φ` of `log|φ'|`.
    pub alpha: f64,
}

#[derive(Clone, Debug)]
pub enum MapFamily {
    Similarity(SimilarityMaps),
    Conformal(DeclaredConformalMaps),
}

/// Geometry constants of the system.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeometryConstants {
    /// `κ`: common Lipschitz bound of the maps.
    pub kappa: f64,
    pub k_bd: f64,
    pub d_phi: f64,
    pub lipschitz_l: f64,
    pub alpha: f64,
}

/// A random conformal GDMS on intervals.
#[derive(Clone, Debug)]
pub struct Rcgdms {
    pub name: String,
    pub symbolic: SymbolicSystem,
    pub driving: DrivingSystem,
    pub vertex_intervals: Vec<(f64, f64)>,
    pub maps: MapFamily,
    pub constants: GeometryConstants,
}

impl Rcgdms {
    pub fn similarity(
        name: &str,
        symbolic: SymbolicSystem,
        driving: DrivingSystem,
        vertex_intervals: Vec<(f64, f64)>,
        schedule: Arc<dyn RatioSchedule>,
        placement: Placement,
    ) -> Result<Self> {
        if schedule.cutoff() != symbolic.cutoff() {
            return Err(Error::InvalidSystem("ratio schedule and symbolic cutoff differ".into()));
        }
        if vertex_intervals.len() != symbolic.vertex_count() || vertex_intervals.iter().any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidSystem("one nondegenerate interval per vertex required".into()));
        }
        if symbolic.has_tail() != schedule.log_tail_sum(schedule.states()[0], 1.0).is_some() {
            return Err(Error::InvalidSystem("tail descriptor and ratio schedule disagree".into()));
        }
        let states = schedule.states();
        if let Some(s) = driving.support().into_iter().find(|s| !states.contains(s)) {
            return Err(Error::InvalidSystem(format!("driving state {s} has no ratios")));
        }
        let cutoff = symbolic.cutoff();
        let kappa = (0..cutoff).map(|e| schedule.log_sup_ratio(e)).fold(f64::NEG_INFINITY, f64::max).exp();
        if !(kappa < 1.0) {
            return Err(Error::InvalidSystem(format!("contraction bound {kappa} is not below 1")));
        }
        let len = |v: usize| vertex_intervals[v].1 - vertex_intervals[v].0;
        let left = match placement {
            Placement::Explicit(map) => {
                if map.values().any(|v| v.len() != cutoff) || states.iter().any(|s| !map.contains_key(s)) {
                    return Err(Error::InvalidSystem("explicit placement must cover every state and edge".into()));
                }
                map
            }
            Placement::Packed => {
                let mut out = BTreeMap::new();
                for &state in &states {
                    let mut lefts = vec![0.0; cutoff];
                    for (v, &(start, _)) in vertex_intervals.iter().enumerate() {
                        let edges: Vec<Symbol> = (0..cutoff).filter(|&e| symbolic.initial(e) == v).collect();
                        if edges.is_empty() {
                            continue;
                        }
                        let lengths: Vec<f64> = edges
                            .iter()
                            .map(|&e| schedule.log_ratio(state, e).exp() * len(symbolic.terminal(e)))
                            .collect();
                        let tail = schedule.log_tail_sum(state, 1.0).map(|t| t.exp() * len(v)).unwrap_or(0.0);
                        let used: f64 = lengths.iter().sum::<f64>() + tail;
                        let slots = edges.len() + 1 + usize::from(tail > 0.0);
                        let gap = (len(v) - used) / slots as f64;
                        if !(gap > 0.0) {
                            return Err(Error::InvalidSystem(format!("images do not fit into vertex {v}")));
                        }
                        let mut x = start + gap;
                        for (&e, l) in edges.iter().zip(lengths) {
                            lefts[e] = x;
                            x += l + gap;
                        }
                    }
                    out.insert(state, lefts);
                }
                out
            }
        };
        let min_len = (0..vertex_intervals.len()).map(len).fold(f64::INFINITY, f64::min);
        let max_len = (0..vertex_intervals.len()).map(len).fold(0.0, f64::max);
        let constants =
            GeometryConstants { kappa, k_bd: 1.0, d_phi: max_len.max(1.0 / min_len), lipschitz_l: 0.0, alpha: 1.0 };
        let maps = MapFamily::Similarity(SimilarityMaps { schedule, orientation: Vec::new(), left });
        let gdms = Rcgdms { name: name.to_string(), symbolic, driving, vertex_intervals, maps, constants };
        gdms.check_open_set_condition()?;
        Ok(gdms)
    }

    /// Declared-bounds conformal system (no explicit geometry).
    pub fn conformal(
        name: &str,
        symbolic: SymbolicSystem,
        driving: DrivingSystem,
        vertex_intervals: Vec<(f64, f64)>,
        maps: DeclaredConformalMaps,
    ) -> Result<Self> {
        if maps.distortion < 1.0 || maps.alpha <= 0.0 {
            return Err(Error::InvalidSystem("distortion must be >= 1 and alpha > 0".into()));
        }
        let mut kappa: f64 = 0.0;
        for row in maps.bounds.values() {
            if row.len() != symbolic.cutoff() {
                return Err(Error::InvalidSystem("derivative bounds must cover every edge".into()));
            }
            for (lo, hi) in row.iter().flatten() {
                if !(0.0 < *lo && lo <= hi) {
                    return Err(Error::InvalidSystem("derivative bounds must satisfy 0 < lo <= hi".into()));
                }
                kappa = kappa.max(*hi);
            }
        }
        if !(kappa < 1.0) {
            return Err(Error::InvalidSystem(format!("contraction bound {kappa} is not below 1")));
        }
        let max_len = vertex_intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
        let constants = GeometryConstants {
            kappa,
            k_bd: maps.distortion,
            d_phi: maps.distortion * max_len.max(1.0),
            lipschitz_l: maps.distortion.ln(),
            alpha: maps.alpha,
        };
        Ok(Rcgdms {
            name: name.to_string(),
            symbolic,
            driving,
            vertex_intervals,
            maps: MapFamily::Conformal(maps),
            constants,
        })
    }

    pub fn similarity_maps(&self) -> Result<&SimilarityMaps> {
        match &self.maps {
            MapFamily::Similarity(s) => Ok(s),
            MapFamily::Conformal(_) => Err(Error::Degenerate("operation needs explicit similarity geometry".into())),
        }
    }

    pub fn schedule(&self) -> Option<&Arc<dyn RatioSchedule>> {
        match &self.maps {
            MapFamily::Similarity(s) => Some(&s.schedule),
            MapFamily::Conformal(_) => None,
        }
    }

    /// Image interval `φ_{e,ω}(X_{t(e)})` in a fiber with the given state.
    pub fn image(&self, state: State, e: Symbol) -> Result<(f64, f64)> {
        let maps = self.similarity_maps()?;
        let left = maps.left[&state][e];
        let (a, b) = self.vertex_intervals[self.symbolic.terminal(e)];
        Ok((left, left + maps.schedule.log_ratio(state, e).exp() * (b - a)))
    }

    /// `φ_{e,ω}` applied to an interval inside `X_{t(e)}`.
    pub fn apply(&self, state: State, e: Symbol, interval: (f64, f64)) -> Result<(f64, f64)> {
        let maps = self.similarity_maps()?;
        let r = maps.schedule.log_ratio(state, e).exp();
        let (a, b) = self.vertex_intervals[self.symbolic.terminal(e)];
        let left = maps.left[&state][e];
        let preserving = maps.orientation.get(e).copied().unwrap_or(true);
        let map = |x: f64| if preserving { left + r * (x - a) } else { left + r * (b - x) };
        let (u, v) = (map(interval.0), map(interval.1));
        Ok((u.min(v), u.max(v)))
    }

    /// Images of interior points pairwise disjoint within each fiber (open
    /// set condition), for similarity systems.
    pub fn check_open_set_condition(&self) -> Result<()> {
        let maps = self.similarity_maps()?;
        for &state in maps.left.keys() {
            for v in 0..self.symbolic.vertex_count() {
                let mut images: Vec<(f64, f64)> = (0..self.symbolic.cutoff())
                    .filter(|&e| self.symbolic.initial(e) == v)
                    .map(|e| self.image(state, e))
                    .collect::<Result<_>>()?;
                images.sort_by(|x, y| x.0.total_cmp(&y.0));
                let (a, b) = self.vertex_intervals[v];
                let tol = 1e-12 * (b - a);
                if images.iter().any(|im| im.0 < a - tol || im.1 > b + tol) {
                    return Err(Error::InvalidSystem(format!("an image leaves X_{v} in state {state}")));
                }
                if images.windows(2).any(|w| w[1].0 < w[0].1 - tol) {
                    return Err(Error::InvalidSystem(format!("overlapping images in X_{v}, state {state}")));
                }
            }
        }
        Ok(())
    }

    /// `inf_ω r_e(ω)`, the normality lower bound `M_e` of a similarity edge.
    pub fn normality_lower_bound(&self, e: Symbol) -> Option<f64> {
        self.schedule()
            .map(|s| s.states().into_iter().map(|st| s.log_ratio(st, e)).fold(f64::INFINITY, f64::min).exp())
    }
}

/// A coded point with its enclosing cylinder image.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodedPoint {
    pub word: Vec<Symbol>,
    pub center: f64,
    /// Half-length of `φ_{τ,ω}(X_{t(τ_{n-1})})`.
    pub radius: f64,
    pub interval: (f64, f64),
}

/// Truncated coding map: the image `φ_{τ_0,ω_k} ∘ ... ∘ φ_{τ_{n-1},ω_{k+n-1}}(X)`.
pub fn code_point(gdms: &Rcgdms, orbit: &DrivingOrbit, start: i64, prefix: &[Symbol]) -> Result<CodedPoint> {
    if prefix.is_empty() || !gdms.symbolic.is_admissible(prefix) {
        return Err(Error::InadmissibleWord(prefix.to_vec()));
    }
    let n = prefix.len();
    let mut interval = gdms.vertex_intervals[gdms.symbolic.terminal(prefix[n - 1])];
    for j in (0..n).rev() {
        interval = gdms.apply(orbit.state(start + j as i64), prefix[j], interval)?;
    }
    Ok(CodedPoint {
        word: prefix.to_vec(),
        center: 0.5 * (interval.0 + interval.1),
        radius: 0.5 * (interval.1 - interval.0),
        interval,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    Exhaustive,
    RandomWords { count: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitSetSample {
    pub position: i64,
    pub depth: usize,
    pub points: Vec<CodedPoint>,
    /// `κ^n · max diam X_v`.
    pub radius_bound: f64,
}

pub const ENUMERATION_BUDGET: f64 = 1e7;

pub fn sample_limit_set(
    gdms: &Rcgdms,
    orbit: &DrivingOrbit,
    start: i64,
    alphabet: &[Symbol],
    depth: usize,
    sampler: Sampler,
) -> Result<LimitSetSample> {
    let words: Vec<Vec<Symbol>> = match sampler {
        Sampler::Exhaustive => {
            let size = (alphabet.len() as f64).powi(depth as i32);
            if size > ENUMERATION_BUDGET {
                return Err(Error::BudgetExceeded { words: size, limit: ENUMERATION_BUDGET });
            }
            enumerate_words(&gdms.symbolic, alphabet, depth, None)?.map(|w| w.0).collect()
        }
        Sampler::RandomWords { count, seed } => {
            let mut alpha = alphabet.to_vec();
            alpha.sort_unstable();
            alpha.dedup();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count);
            'draw: while out.len() < count {
                let mut w = vec![alpha[rng.gen_range(0..alpha.len())]];
                while w.len() < depth {
                    let last = *w.last().unwrap();
                    let next: Vec<Symbol> = alpha.iter().copied().filter(|&e| gdms.symbolic.allows(last, e)).collect();
                    if next.is_empty() {
                        continue 'draw;
                    }
                    w.push(next[rng.gen_range(0..next.len())]);
                }
                out.push(w);
            }
            out
        }
    };
    let points = words.iter().map(|w| code_point(gdms, orbit, start, w)).collect::<Result<Vec<_>>>()?;
    let max_diam = gdms.vertex_intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    Ok(LimitSetSample {
        position: start,
        depth,
        points,
        radius_bound: gdms.constants.kappa.powi(depth as i32) * max_diam,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RbscReport {
    /// Smallest distance between a vertex boundary and the images it contains.
    pub margin: f64,
    pub holds: bool,
}

/// Random boundary separation margin over a finite subalphabet and the given
/// fiber states.
pub fn check_rbsc(gdms: &Rcgdms, alphabet: &[Symbol], states: &[State]) -> Result<RbscReport> {
    let mut margin = f64::INFINITY;
    for &state in states {
        for &e in alphabet {
            let (a, b) = gdms.vertex_intervals[gdms.symbolic.initial(e)];
            let (lo, hi) = gdms.image(state, e)?;
            margin = margin.min(lo - a).min(b - hi);
        }
    }
    if !margin.is_finite() {
        return Err(Error::Degenerate("no images to separate".into()));
    }
    // round-off at the 1e-12 level counts as touching
    let margin = if margin.abs() < 1e-12 { 0.0 } else { margin };
    Ok(RbscReport { margin, holds: margin > 0.0 })
}

/// Probabilities of the worked example's driving measure, states `1..=max_state`:
/// `P([i]) ∝ (2^i Σ_{k≤i} 2^{k²})^{-1}`.
pub fn paper_example_driving(max_state: State) -> Result<DrivingSystem> {
    let log_w: Vec<f64> = (1..=max_state)
        .map(|i| {
            let inner: Vec<f64> = (1..=i).map(|k| (k * k) as f64 * LN_2).collect();
            -(i as f64 * LN_2) - log_sum_exp(&inner)
        })
        .collect();
    let log_total = log_sum_exp(&log_w);
    let weights: Vec<f64> = log_w.iter().map(|w| (w - log_total).exp()).collect();
    DrivingSystem::bernoulli((1..=max_state).collect(), weights, 0.0)
}

/// Largest driving state materialized for the worked example; the omitted
/// probability mass is below `2^{-1600}`.
pub const PAPER_EXAMPLE_MAX_STATE: State = 40;

/// The non-evenly-varying example system with `cutoff` materialized edges.
pub fn build_paper_example(cutoff: usize) -> Result<Rcgdms> {
    let schedule = Arc::new(PaperExampleSchedule::new(cutoff, PAPER_EXAMPLE_MAX_STATE)?);
    let symbolic = SymbolicSystem::full_shift(cutoff)?
        .with_tail(TailDescriptor::Rule("paper-example".into()))?
        .with_label_base(1);
    Rcgdms::similarity(
        "paper-example",
        symbolic,
        paper_example_driving(PAPER_EXAMPLE_MAX_STATE)?,
        vec![(0.0, 1.0)],
        schedule,
        Placement::Packed,
    )
}

/// Named test instances.
pub mod instances {
    use super::*;

    fn explicit(state: State, lefts: Vec<f64>) -> Placement {
        Placement::Explicit(BTreeMap::from([(state, lefts)]))
    }

    /// Middle-thirds Cantor set: two maps of ratio 1/3.
    pub fn cantor() -> Rcgdms {
        Rcgdms::similarity(
            "cantor",
            SymbolicSystem::full_shift(2).unwrap(),
            DrivingSystem::deterministic(0),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::uniform(&[0], vec![1.0 / 3.0; 2]).unwrap()),
            explicit(0, vec![0.0, 2.0 / 3.0]),
        )
        .unwrap()
    }

    /// Cantor ratios with images at `[0.05, 0.05+1/3]` and `[0.95-1/3, 0.95]`.
    pub fn shrunk_cantor() -> Rcgdms {
        Rcgdms::similarity(
            "shrunk-cantor",
            SymbolicSystem::full_shift(2).unwrap(),
            DrivingSystem::deterministic(0),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::uniform(&[0], vec![1.0 / 3.0; 2]).unwrap()),
            explicit(0, vec![0.05, 0.95 - 1.0 / 3.0]),
        )
        .unwrap()
    }

    /// Ratios 1/2 and 1/4.
    pub fn twoscale() -> Rcgdms {
        Rcgdms::similarity(
            "twoscale",
            SymbolicSystem::full_shift(2).unwrap(),
            DrivingSystem::deterministic(0),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::uniform(&[0], vec![0.5, 0.25]).unwrap()),
            explicit(0, vec![0.0, 0.75]),
        )
        .unwrap()
    }

    /// Periodic driving `a, b, a, b, ...` with ratios 1/2 in fiber `a` (state
    /// 0) and 1/4 in fiber `b` (state 1), two edges each.
    pub fn period2() -> Rcgdms {
        Rcgdms::similarity(
            "period2",
            SymbolicSystem::full_shift(2).unwrap(),
            DrivingSystem::periodic(vec![0, 1]).unwrap(),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::new(vec![(0, vec![0.5, 0.5]), (1, vec![0.25, 0.25])]).unwrap()),
            Placement::Explicit(BTreeMap::from([(0, vec![0.0, 0.5]), (1, vec![0.0, 0.75])])),
        )
        .unwrap()
    }

    /// Golden-mean incidence (`1` never follows `1`) with ratios `r0, r1`.
    pub fn golden_mean(r0: f64, r1: f64) -> Rcgdms {
        Rcgdms::similarity(
            "golden-mean",
            SymbolicSystem::from_matrix(vec![vec![true, true], vec![true, false]]).unwrap(),
            DrivingSystem::deterministic(0),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::uniform(&[0], vec![r0, r1]).unwrap()),
            Placement::Packed,
        )
        .unwrap()
    }

    /// Golden-mean incidence under periodic driving.
    pub fn golden_mean_periodic() -> Rcgdms {
        Rcgdms::similarity(
            "golden-mean-periodic",
            SymbolicSystem::from_matrix(vec![vec![true, true], vec![true, false]]).unwrap(),
            DrivingSystem::periodic(vec![0, 1]).unwrap(),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::new(vec![(0, vec![0.5, 0.25]), (1, vec![0.25, 0.3])]).unwrap()),
            Placement::Packed,
        )
        .unwrap()
    }

    /// Bernoulli-driven two-symbol full shift with state-dependent ratios.
    pub fn random_twoscale() -> Rcgdms {
        Rcgdms::similarity(
            "random-twoscale",
            SymbolicSystem::full_shift(2).unwrap(),
            DrivingSystem::bernoulli(vec![0, 1], vec![0.5, 0.5], 0.0).unwrap(),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::new(vec![(0, vec![0.5, 0.25]), (1, vec![1.0 / 3.0, 1.0 / 3.0])]).unwrap()),
            Placement::Packed,
        )
        .unwrap()
    }

    /// Pure geometric tail `r_e = 8^{-e}`, labels from 1.
    pub fn pure_tail(cutoff: usize) -> Rcgdms {
        let symbolic = SymbolicSystem::full_shift(cutoff)
            .unwrap()
            .with_tail(TailDescriptor::Geometric { ratio: 0.125, first_label: cutoff + 1 })
            .unwrap()
            .with_label_base(1);
        Rcgdms::similarity(
            "pure-tail",
            symbolic,
            DrivingSystem::deterministic(0),
            vec![(0.0, 1.0)],
            Arc::new(GeometricTailSchedule::new(0.125, cutoff).unwrap()),
            Placement::Packed,
        )
        .unwrap()
    }

    /// Two maps of ratio 1/2 tiling `[0, 1]`; the limit set is the interval.
    pub fn halves() -> Rcgdms {
        Rcgdms::similarity(
            "halves",
            SymbolicSystem::full_shift(2).unwrap(),
            DrivingSystem::deterministic(0),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::uniform(&[0], vec![0.5; 2]).unwrap()),
            explicit(0, vec![0.0, 0.5]),
        )
        .unwrap()
    }

    /// Full shift on `m` symbols, all ratios `r`, packed.
    pub fn uniform(m: usize, r: f64) -> Rcgdms {
        Rcgdms::similarity(
            "uniform",
            SymbolicSystem::full_shift(m).unwrap(),
            DrivingSystem::deterministic(0),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::uniform(&[0], vec![r; m]).unwrap()),
            Placement::Packed,
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::instances::*;
    use super::*;
    use crate::driving::sample_orbit;

    #[test]
    fn example_ratio_table() {
        let s = PaperExampleSchedule::new(1024, 40).unwrap();
        let r = |state: State, label: usize| s.log_ratio(state, label - 1).exp();
        let close = |a: f64, b: f64| (a / b - 1.0).abs() < 1e-13;
        assert!(close(r(1, 1), 0.25));
        assert!(close(r(2, 2), 2f64.powi(-6)));
        assert!(close(r(1, 2), 8f64.powi(-2)));
        assert!(close(r(2, 9), 2f64.powi(-6)));
        assert!(close(r(2, 10), 8f64.powi(-10)));
        assert!(close(r(3, 10), 2f64.powi(-12)));
        assert_eq!(PaperExampleSchedule::block_end(3), 265.0);
    }

    #[test]
    fn example_sup_tail_at_one_completes_one_half() {
        let s = PaperExampleSchedule::new(1024, 40).unwrap();
        let materialized: Vec<f64> = (0..1024).map(|e| s.log_sup_ratio(e)).collect();
        let total = log_add(log_sum_exp(&materialized), s.log_sup_tail_sum(1.0).unwrap()).exp();
        assert!((total - 0.5).abs() < 1e-12, "{total}");
        assert_eq!(s.log_sup_tail_sum(0.75), Some(f64::INFINITY));
    }

    #[test]
    fn example_fiber_tail_matches_direct_sum() {
        // cutoff 10: state 2 tail = edges 11.. with 8^{-se}
        let s = PaperExampleSchedule::new(10, 40).unwrap();
        let direct: f64 = (11..400).map(|e| 8f64.powf(-0.5 * e as f64)).sum();
        assert!((s.log_tail_sum(2, 0.5).unwrap().exp() - direct).abs() < 1e-15);
        // state 3, cutoff 5: block 2 labels 6..9 at 2^{-6s}, block 3 labels 10..265, then geometric
        let s = PaperExampleSchedule::new(5, 40).unwrap();
        let direct: f64 = (6..2000usize)
            .map(|e| PaperExampleSchedule::label_ratio(3, e))
            .map(|lr| (0.7 * lr).exp())
            .sum();
        assert!((s.log_tail_sum(3, 0.7).unwrap().exp() - direct).abs() < 1e-13);
        assert_eq!(s.log_tail_sum(3, 0.0), Some(f64::INFINITY));
    }

    #[test]
    fn cantor_coding() {
        let g = cantor();
        let orbit = sample_orbit(&g.driving, 0);
        let p = code_point(&g, &orbit, 0, &[0, 0, 0, 0]).unwrap();
        assert!((p.interval.0 - 0.0).abs() < 1e-15);
        assert!((p.interval.1 - 3f64.powi(-4)).abs() < 1e-15);
        let q = code_point(&g, &orbit, 0, &[0, 1, 1, 1]).unwrap();
        assert!((q.interval.1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(q.interval.0 >= 1.0 / 3.0 - 3f64.powi(-4) - 1e-15);
        assert!(code_point(&g, &orbit, 0, &[]).is_err());
    }

    #[test]
    fn period2_image_length() {
        let g = period2();
        let orbit = sample_orbit(&g.driving, 0);
        let p = code_point(&g, &orbit, 0, &[0]).unwrap();
        assert!((2.0 * p.radius - 0.5).abs() < 1e-15);
        let q = code_point(&g, &orbit, 1, &[0]).unwrap();
        assert!((2.0 * q.radius - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cantor_depth_two_sample() {
        let g = cantor();
        let orbit = sample_orbit(&g.driving, 0);
        let s = sample_limit_set(&g, &orbit, 0, &[0, 1], 2, Sampler::Exhaustive).unwrap();
        let lefts: Vec<f64> = s.points.iter().map(|p| p.interval.0).collect();
        let expected = [0.0, 2.0 / 9.0, 2.0 / 3.0, 2.0 / 3.0 + 2.0 / 9.0];
        for (a, b) in lefts.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(s.points.iter().all(|p| (2.0 * p.radius - 1.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn random_sampler_is_reproducible() {
        let g = golden_mean(1.0 / 3.0, 1.0 / 3.0);
        let orbit = sample_orbit(&g.driving, 0);
        let sampler = Sampler::RandomWords { count: 20, seed: 9 };
        let a = sample_limit_set(&g, &orbit, 0, &[0, 1], 6, sampler).unwrap();
        let b = sample_limit_set(&g, &orbit, 0, &[0, 1], 6, sampler).unwrap();
        assert_eq!(a.points, b.points);
        assert!(a.points.iter().all(|p| g.symbolic.is_admissible(&p.word)));
    }

    #[test]
    fn rbsc_margins() {
        let g = cantor();
        let r = check_rbsc(&g, &[0, 1], &[0]).unwrap();
        assert_eq!(r.margin, 0.0);
        assert!(!r.holds);
        let s = check_rbsc(&shrunk_cantor(), &[0, 1], &[0]).unwrap();
        assert!((s.margin - 0.05).abs() < 1e-12);
        assert!(s.holds);
    }

    #[test]
    fn single_map_margin_is_gap() {
        let g = uniform(1, 0.5);
        let r = check_rbsc(&g, &[0], &[0]).unwrap();
        assert!((r.margin - 0.25).abs() < 1e-15);
    }

    #[test]
    fn example_packing_is_rbsc_positive() {
        let g = build_paper_example(64).unwrap();
        let first: Vec<Symbol> = (0..16).collect();
        let r = check_rbsc(&g, &first, &[1, 2, 3, 7]).unwrap();
        assert!(r.holds);
        assert!(g.constants.kappa == 0.25);
        assert_eq!(g.normality_lower_bound(0), Some(0.25));
    }

    #[test]
    fn overlapping_placement_rejected() {
        let res = Rcgdms::similarity(
            "bad",
            SymbolicSystem::full_shift(2).unwrap(),
            DrivingSystem::deterministic(0),
            vec![(0.0, 1.0)],
            Arc::new(RatioTable::uniform(&[0], vec![0.5, 0.5]).unwrap()),
            Placement::Explicit(BTreeMap::from([(0, vec![0.0, 0.25])])),
        );
        assert!(res.is_err());
        assert!(RatioTable::uniform(&[0], vec![1.0]).is_err());
    }

    #[test]
    fn example_driving_weights() {
        let d = paper_example_driving(40).unwrap();
        let m = d.marginal();
        let c: f64 = (1..=40u32)
            .map(|i| 1.0 / (2f64.powi(i as i32) * (1..=i.min(6)).map(|k| 2f64.powi((k * k) as i32)).sum::<f64>()))
            .take(6)
            .sum();
        // state 1: (2 * 2)^{-1} / C
        assert!((m[0].1 - 0.25 / c).abs() < 1e-9);
    }
}
