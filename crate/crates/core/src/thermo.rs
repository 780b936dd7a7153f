//! Fiberwise partition sums, their comparison chain, and relative pressure.
//!
//! All sums are carried as natural logarithms (`-inf` encodes an empty sum).

use rayon::prelude::*;
use serde::Serialize;

use crate::driving::{orbit_seeds, sample_orbit, DrivingOrbit, DrivingSystem, State};
use crate::error::{Error, Result};
use crate::measures::ConformalChain;
use crate::numeric::{fit_line, log_sum_exp, LogAccumulator};
use crate::potentials::{ruelle_bounds, subalphabet_bound, word_bounds, RandomPotential};
use crate::shift::{find_primitivity, Incidence, PrimitivityWitness, Symbol, SubalphabetLadder, SymbolicSystem};

/// Relative tolerance applied to log-domain comparisons of sums computed by
/// different summation orders.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// Largest number of words a single exhaustive enumeration may visit.
pub const WORD_BUDGET: f64 = 1e7;

/// Largest connector order searched when a finite alphabet is checked for
/// primitivity.
pub const DEFAULT_MAX_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionSums {
    pub n: usize,
    pub e: Symbol,
    pub position: i64,
    /// `log Z_{n,e,F}`.
    pub log_z: f64,
    /// `log L_{n,e,F}`.
    pub log_l: f64,
    /// `log 𝔏_{n,e,F} = log L^n(1_[e])(ξ_e)`.
    pub log_frak_l: f64,
    /// `log A_{n,F}`.
    pub log_a: f64,
}

/// Per-symbol `(inf, sup)` of the potential along `n` consecutive fibers.
struct Slab {
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
}

impl Slab {
    fn new(pot: &dyn RandomPotential, orbit: &DrivingOrbit, position: i64, alphabet: &[Symbol], n: usize) -> Self {
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for j in 0..n {
            let state = orbit.state(position + j as i64);
            let (l, h): (Vec<f64>, Vec<f64>) = alphabet.iter().map(|&e| pot.symbol_bounds(state, e)).unzip();
            lo.push(l);
            hi.push(h);
        }
        Slab { lo, hi }
    }
}

fn check_finite_alphabet(sys: &SymbolicSystem, alphabet: &[Symbol]) -> Result<Vec<Symbol>> {
    if alphabet.is_empty() {
        return Err(Error::InvalidSystem("subalphabet must be nonempty".into()));
    }
    let mut a = alphabet.to_vec();
    a.sort_unstable();
    a.dedup();
    if let Some(&bad) = a.iter().find(|&&e| e >= sys.cutoff()) {
        return Err(Error::CutoffExceeded { requested: bad + 1, cutoff: sys.cutoff() });
    }
    Ok(a)
}

fn successors(sys: &SymbolicSystem, alphabet: &[Symbol]) -> Vec<Vec<usize>> {
    alphabet
        .iter()
        .map(|&a| (0..alphabet.len()).filter(|&j| sys.allows(a, alphabet[j])).collect())
        .collect()
}

/// Exact `Z`, `L`, `𝔏` and `A` at depth `n` by one pass over `F^n_A`.
///
/// `ξ_e` is the periodic word `e c e c ...` with `c` the lexicographically
/// first connector from `e` to `e` (see [`standard_anchor`]). For potentials
/// that depend on the first symbol only, `S_n f(τ ξ_e)` does not depend on
/// the tail, so both `L` and `𝔏` are exact; for declared-bound potentials the
/// enclosure midpoint of `[τ]` is used.
pub fn partition_sums(
    sys: &SymbolicSystem,
    alphabet: &[Symbol],
    pot: &dyn RandomPotential,
    orbit: &DrivingOrbit,
    position: i64,
    e: Symbol,
    n: usize,
) -> Result<PartitionSums> {
    let alphabet = check_finite_alphabet(sys, alphabet)?;
    if n == 0 {
        return Err(Error::InvalidGrid("depth must be at least 1".into()));
    }
    let anchor = alphabet.binary_search(&e).map_err(|_| Error::InvalidSystem(format!("anchor {e} not in F")))?;
    let size = (alphabet.len() as f64).powi(n as i32);
    if size > WORD_BUDGET {
        return Err(Error::BudgetExceeded { words: size, limit: WORD_BUDGET });
    }
    let slab = Slab::new(pot, orbit, position, &alphabet, n);
    let succ = successors(sys, &alphabet);
    let closes: Vec<bool> = alphabet.iter().map(|&a| sys.allows(a, e)).collect();
    let mut acc = [LogAccumulator::new(); 4];
    let mut visit = |word: &[usize], sup: f64, point: f64| {
        let last = word[word.len() - 1];
        acc[3].push(sup);
        if closes[last] {
            acc[1].push(point);
            if word[0] == anchor {
                acc[0].push(sup);
                acc[2].push(point);
            }
        }
    };
    let mut word: Vec<usize> = Vec::with_capacity(n);
    let mut sums: Vec<(f64, f64)> = Vec::with_capacity(n);
    // iterative DFS in lexicographic order; sums[j] = (lo, hi) through depth j
    let mut next = vec![0usize; n + 1];
    loop {
        let depth = word.len();
        let candidates: &[usize] = if depth == 0 { &[] } else { &succ[word[depth - 1]][..] };
        let options = if depth == 0 { alphabet.len() } else { candidates.len() };
        if next[depth] < options && depth < n {
            let sym = if depth == 0 { next[depth] } else { candidates[next[depth]] };
            next[depth] += 1;
            let (plo, phi) = sums.last().copied().unwrap_or((0.0, 0.0));
            word.push(sym);
            sums.push((plo + slab.lo[depth][sym], phi + slab.hi[depth][sym]));
            next[depth + 1] = 0;
            if word.len() == n {
                let (lo, hi) = sums[n - 1];
                visit(&word, hi, if lo == hi { hi } else { 0.5 * (lo + hi) });
                word.pop();
                sums.pop();
            }
        } else {
            if depth == 0 {
                break;
            }
            word.pop();
            sums.pop();
        }
    }
    Ok(PartitionSums {
        n,
        e,
        position,
        log_z: acc[0].value(),
        log_l: acc[1].value(),
        log_frak_l: acc[2].value(),
        log_a: acc[3].value(),
    })
}

/// The first `len` symbols of `ξ_e = e c e c ...`.
pub fn standard_anchor(sys: &SymbolicSystem, witness: &PrimitivityWitness, e: Symbol, len: usize) -> Result<Vec<Symbol>> {
    let c = witness
        .connector_between(sys, e, e)
        .ok_or_else(|| Error::InvalidSystem(format!("no connector from {e} to itself")))?;
    let period: Vec<Symbol> = std::iter::once(e).chain(c.symbols().iter().copied()).collect();
    Ok(period.iter().copied().cycle().take(len).collect())
}

/// Incremental transfer step `w'(b) = e^{f(b)} Σ_{a → b} w(a)` over a finite
/// alphabet, with `w` kept as normalized log weights and the scale returned.
struct Transfer {
    incidence: TransferIncidence,
}

enum TransferIncidence {
    Full,
    /// Predecessors grouped by vertex: `initial[b]` and `terminal[a]`.
    Vertex { initial: Vec<usize>, terminal: Vec<usize>, vertices: usize },
    Matrix(Vec<Vec<usize>>),
}

impl Transfer {
    fn new(sys: &SymbolicSystem, alphabet: &[Symbol]) -> Self {
        let incidence = match sys.incidence() {
            Incidence::Full => TransferIncidence::Full,
            Incidence::VertexRule => TransferIncidence::Vertex {
                initial: alphabet.iter().map(|&b| sys.initial(b)).collect(),
                terminal: alphabet.iter().map(|&a| sys.terminal(a)).collect(),
                vertices: sys.vertex_count(),
            },
            Incidence::Matrix(_) => TransferIncidence::Matrix(
                alphabet
                    .iter()
                    .map(|&b| (0..alphabet.len()).filter(|&i| sys.allows(alphabet[i], b)).collect())
                    .collect(),
            ),
        };
        Transfer { incidence }
    }

    /// Applies one step in place and returns the log of the normalizer.
    /// `w` holds normalized log weights, so strongly separated potentials
    /// cannot underflow to an all-zero vector.
    fn step(&self, w: &mut Vec<f64>, f: &[f64], first: bool) -> f64 {
        let incoming: Vec<f64> = if first {
            vec![0.0; f.len()]
        } else {
            match &self.incidence {
                TransferIncidence::Full => vec![log_sum_exp(w); f.len()],
                TransferIncidence::Vertex { initial, terminal, vertices } => {
                    let mut by_vertex = vec![Vec::new(); *vertices];
                    for (a, &wa) in w.iter().enumerate() {
                        by_vertex[terminal[a]].push(wa);
                    }
                    let by_vertex: Vec<f64> = by_vertex.iter().map(|v| log_sum_exp(v)).collect();
                    initial.iter().map(|&v| by_vertex[v]).collect()
                }
                TransferIncidence::Matrix(pred) => {
                    pred.iter().map(|p| log_sum_exp(&p.iter().map(|&a| w[a]).collect::<Vec<_>>())).collect()
                }
            }
        };
        let next: Vec<f64> = incoming.iter().zip(f).map(|(s, fb)| s + fb).collect();
        let total = log_sum_exp(&next);
        *w = next.into_iter().map(|x| x - total).collect();
        total
    }
}

/// `log A_{n,F}` for `n = 1..=max_n` along the orbit from `position`, by the
/// transfer recursion on sup values.
pub fn log_a_sequence(
    sys: &SymbolicSystem,
    alphabet: &[Symbol],
    pot: &dyn RandomPotential,
    orbit: &DrivingOrbit,
    position: i64,
    max_n: usize,
) -> Result<Vec<f64>> {
    let alphabet = check_finite_alphabet(sys, alphabet)?;
    let transfer = Transfer::new(sys, &alphabet);
    let mut w = Vec::new();
    let mut log_scale = 0.0;
    let mut out = Vec::with_capacity(max_n);
    for j in 0..max_n {
        let state = orbit.state(position + j as i64);
        let f: Vec<f64> = alphabet.iter().map(|&e| pot.symbol_bounds(state, e).1).collect();
        log_scale += transfer.step(&mut w, &f, j == 0);
        out.push(log_scale);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PressureRoute {
    /// Full shift with a first-symbol potential: `∫ log M_f dP` over the marginal.
    ClosedForm,
    /// Deterministic or periodic driving: growth rate of the period transfer product.
    PeriodicTransfer,
    /// Depth-extrapolated `(1/n) log A_n` averaged over sampled orbits.
    OrbitAverage,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitPressure {
    pub seed: u64,
    /// `(1/n) log A_n` at each depth.
    pub raw: Vec<f64>,
    /// Intercept of the fit `p + c/n` over the largest three depths.
    pub extrapolated: f64,
    pub fit_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub route: PressureRoute,
    pub depths: Vec<usize>,
    pub orbits: Vec<OrbitPressure>,
    /// Sample standard deviation of the per-orbit estimates.
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureOptions {
    pub seed: u64,
    pub orbit_count: usize,
    pub depths: Vec<usize>,
    pub max_order: usize,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions { seed: 0, orbit_count: 16, depths: vec![250, 500, 1000], max_order: DEFAULT_MAX_ORDER }
    }
}

/// Whether `(sys, f)` has product structure: `A_n = Π M_f(ω_i)`.
pub fn is_product(sys: &SymbolicSystem, pot: &dyn RandomPotential) -> bool {
    sys.is_full() && pot.is_first_symbol()
}

/// `∫ log M_{f,F} dP` over the driving marginal; `F = None` means the whole
/// alphabet including its tail. `+inf` when some fiber of positive weight
/// diverges.
pub fn expected_log_m(
    sys: &SymbolicSystem,
    driving: &DrivingSystem,
    pot: &dyn RandomPotential,
    alphabet: Option<&[Symbol]>,
) -> f64 {
    let mut total = 0.0;
    for (state, weight) in driving.marginal() {
        if weight <= 0.0 {
            continue;
        }
        let (hi, _) = ruelle_bounds(pot, sys, state, alphabet);
        if hi == f64::INFINITY {
            return f64::INFINITY;
        }
        total += weight * hi;
    }
    total
}

fn periodic_transfer_pressure(
    sys: &SymbolicSystem,
    alphabet: &[Symbol],
    pot: &dyn RandomPotential,
    cycle: &[State],
) -> f64 {
    let transfer = Transfer::new(sys, alphabet);
    let tables: Vec<Vec<f64>> =
        cycle.iter().map(|&s| alphabet.iter().map(|&e| pot.symbol_bounds(s, e).1).collect()).collect();
    let mut w = Vec::new();
    let mut first = true;
    // the two-round mean also settles when a second eigenvalue of equal
    // modulus and opposite sign makes single rounds alternate
    let (mut last_round, mut previous) = (f64::NAN, f64::NAN);
    let mut growth = 0.0;
    for round in 0..200_000 {
        let mut this_round = 0.0;
        for f in &tables {
            this_round += transfer.step(&mut w, f, first);
            first = false;
        }
        growth = 0.5 * (this_round + last_round);
        last_round = this_round;
        if round > 3 && (growth - previous).abs() <= 1e-15 * growth.abs().max(1.0) {
            break;
        }
        previous = growth;
    }
    growth / cycle.len() as f64
}

/// Relative pressure `P_F(f)` of a finite subalphabet, or of the whole
/// alphabet (`alphabet = None`) when the product closed form applies.
pub fn pressure(
    sys: &SymbolicSystem,
    driving: &DrivingSystem,
    alphabet: Option<&[Symbol]>,
    pot: &dyn RandomPotential,
    opts: &PressureOptions,
) -> Result<PressureEstimate> {
    let finite = match alphabet {
        Some(a) => Some(check_finite_alphabet(sys, a)?),
        None if !sys.has_tail() => Some(sys.all_symbols()),
        None => None,
    };
    if is_product(sys, pot) {
        let value = expected_log_m(sys, driving, pot, finite.as_deref());
        return Ok(PressureEstimate {
            value,
            route: PressureRoute::ClosedForm,
            depths: Vec::new(),
            orbits: Vec::new(),
            spread: 0.0,
        });
    }
    let finite = finite.ok_or_else(|| {
        Error::Degenerate("infinite alphabets need product structure; use the subalphabet ladder".into())
    })?;
    if !sys.is_full() && find_primitivity(sys, &finite, opts.max_order)?.is_none() {
        return Err(Error::NotPrimitive { max_order: opts.max_order });
    }
    let cycle = match driving {
        DrivingSystem::Deterministic { state } => Some(vec![*state]),
        DrivingSystem::Periodic { cycle } => Some(cycle.clone()),
        DrivingSystem::Bernoulli { .. } => None,
    };
    if let Some(cycle) = cycle {
        return Ok(PressureEstimate {
            value: periodic_transfer_pressure(sys, &finite, pot, &cycle),
            route: PressureRoute::PeriodicTransfer,
            depths: Vec::new(),
            orbits: Vec::new(),
            spread: 0.0,
        });
    }
    let mut depths = opts.depths.clone();
    depths.sort_unstable();
    depths.dedup();
    if depths.len() < 3 || depths[0] == 0 {
        return Err(Error::InvalidGrid("orbit averaging needs at least three positive depths".into()));
    }
    if opts.orbit_count == 0 {
        return Err(Error::InvalidGrid("orbit count must be positive".into()));
    }
    let max_n = *depths.last().unwrap();
    let seeds = orbit_seeds(opts.seed, opts.orbit_count);
    let orbits: Vec<OrbitPressure> = seeds
        .par_iter()
        .map(|&seed| -> Result<OrbitPressure> {
            let orbit = sample_orbit(driving, seed);
            let seq = log_a_sequence(sys, &finite, pot, &orbit, 0, max_n)?;
            let raw: Vec<f64> = depths.iter().map(|&n| seq[n - 1] / n as f64).collect();
            let tail = &depths[depths.len() - 3..];
            let xs: Vec<f64> = tail.iter().map(|&n| 1.0 / n as f64).collect();
            let ys: Vec<f64> = tail.iter().map(|&n| seq[n - 1] / n as f64).collect();
            let fit = fit_line(&xs, &ys)?;
            Ok(OrbitPressure { seed, raw, extrapolated: fit.intercept, fit_residual: fit.rms_residual })
        })
        .collect::<Result<_>>()?;
    let k = orbits.len() as f64;
    let value = orbits.iter().map(|o| o.extrapolated).sum::<f64>() / k;
    let spread = if orbits.len() > 1 {
        (orbits.iter().map(|o| (o.extrapolated - value).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(PressureEstimate { value, route: PressureRoute::OrbitAverage, depths, orbits, spread })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompactApproximation {
    pub rung_sizes: Vec<usize>,
    pub rung_values: Vec<f64>,
    /// Largest decrease `p_{F_j} - p_{F_{j+1}}` between consecutive rungs.
    pub max_violation: f64,
    pub monotone: bool,
    /// `∫ log M_f dP` over the whole alphabet; an upper bound for `P(f)`,
    /// attained for product systems.
    pub upper_anchor: f64,
    pub limit: f64,
    /// The limit is exact (product structure or a rung exhausting a finite alphabet).
    pub exact: bool,
    pub diverges: bool,
}

/// Slack allowed by the rung monotonicity check.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Pressures `p_{F_j}` along a ladder and the full-alphabet limit.
pub fn pressure_compact_approx(
    sys: &SymbolicSystem,
    driving: &DrivingSystem,
    ladder: &SubalphabetLadder,
    pot: &dyn RandomPotential,
    opts: &PressureOptions,
) -> Result<CompactApproximation> {
    if ladder.is_empty() {
        return Err(Error::InvalidGrid("ladder has no rungs".into()));
    }
    let rung_values: Vec<f64> = ladder
        .rungs
        .iter()
        .map(|rung| pressure(sys, driving, Some(rung), pot, opts).map(|p| p.value))
        .collect::<Result<_>>()?;
    let max_violation = rung_values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let upper_anchor = expected_log_m(sys, driving, pot, None);
    let exhausts = !sys.has_tail() && ladder.last().len() == sys.cutoff();
    let (limit, exact) = if is_product(sys, pot) {
        (upper_anchor, true)
    } else {
        (*rung_values.last().unwrap(), exhausts)
    };
    Ok(CompactApproximation {
        rung_sizes: ladder.rungs.iter().map(Vec::len).collect(),
        rung_values,
        max_violation,
        monotone: max_violation <= MONOTONE_SLACK,
        upper_anchor,
        limit,
        exact,
        diverges: limit == f64::INFINITY,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    /// Log of the smaller side.
    pub lhs: f64,
    /// Log of the larger side.
    pub rhs: f64,
    /// `rhs - lhs` (log domain); nonnegative up to rounding when the
    /// inequality holds.
    pub margin: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let margin = if lhs == f64::NEG_INFINITY || rhs == f64::INFINITY { f64::INFINITY } else { rhs - lhs };
        let tol = ROUNDING_SLACK * lhs.abs().max(rhs.abs()).max(1.0);
        InequalityCheck { name: name.to_string(), lhs, rhs, margin, holds: margin >= -tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichConstants {
    /// `N_{A,F}`.
    pub order: usize,
    pub log_b: f64,
    /// `K`: ess sup of `|f|` over the connector alphabet.
    pub k: f64,
    /// `log R` at the fiber `ω`.
    pub log_r: f64,
    /// `log R` at the fiber `ω_{-(N+1)}`.
    pub log_r_back: f64,
    /// `log R_n` (connectors placed at `ω_n`).
    pub log_r_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub n: usize,
    pub e: Symbol,
    pub position: i64,
    pub constants: SandwichConstants,
    pub checks: Vec<InequalityCheck>,
    pub holds: bool,
}

fn log_min_connector(
    pot: &dyn RandomPotential,
    sys: &SymbolicSystem,
    orbit: &DrivingOrbit,
    position: i64,
    prefix: Option<Symbol>,
    witness: &PrimitivityWitness,
) -> f64 {
    witness
        .connectors
        .iter()
        .filter_map(|w| {
            let word: Vec<Symbol> = prefix.into_iter().chain(w.symbols().iter().copied()).collect();
            sys.is_admissible(&word).then(|| word_bounds(pot, orbit, position, &word).inf)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Verifies the full comparison chain between `𝔏`, `Z`, `L` and `A` at depth
/// `n`, anchor `e` and fiber `ω_position`, together with the two
/// comparability bounds it is built from.
#[allow(clippy::too_many_arguments)]
pub fn check_sandwich(
    sys: &SymbolicSystem,
    driving: &DrivingSystem,
    alphabet: &[Symbol],
    pot: &dyn RandomPotential,
    orbit: &DrivingOrbit,
    position: i64,
    e: Symbol,
    n: usize,
    witness: &PrimitivityWitness,
) -> Result<SandwichReport> {
    if !witness.verify(sys, alphabet) {
        return Err(Error::InvalidSystem("primitivity witness does not cover the subalphabet".into()));
    }
    let big_n = witness.order;
    let log_b = pot.log_distortion();
    let k = subalphabet_bound(pot, driving, &witness.connector_alphabet);
    let shift = (big_n + 1) as i64;
    let log_r = log_min_connector(pot, sys, orbit, position, Some(e), witness);
    let log_r_back = log_min_connector(pot, sys, orbit, position - shift, Some(e), witness);
    let log_r_n = log_min_connector(pot, sys, orbit, position + n as i64, None, witness) - log_b;

    let here = partition_sums(sys, alphabet, pot, orbit, position, e, n)?;
    let l_n_plus = partition_sums(sys, alphabet, pot, orbit, position, e, big_n + n)?;
    let frak_l_far = partition_sums(sys, alphabet, pot, orbit, position, e, big_n + 1 + n)?;
    let l_shifted = partition_sums(sys, alphabet, pot, orbit, position + shift, e, n)?;
    let frak_l_back = partition_sums(sys, alphabet, pot, orbit, position - shift, e, 2 * big_n + 1 + n)?;

    let c = 3.0 * log_b + big_n as f64 * k;
    let checks = vec![
        InequalityCheck::new("frak_l_n <= z_n", here.log_frak_l, here.log_z),
        InequalityCheck::new("z_n <= b l_n", here.log_z, log_b + here.log_l),
        InequalityCheck::new("b l_n <= b a_n", log_b + here.log_l, log_b + here.log_a),
        InequalityCheck::new("b a_n <= b^3 e^(N K) l_(N+n)", log_b + here.log_a, c + l_n_plus.log_l),
        InequalityCheck::new(
            "b^3 e^(N K) l_(N+n) <= b^3 e^(N K) r^-1 frak_l_(2N+1+n)(theta^-(N+1))",
            c + l_n_plus.log_l,
            c - log_r_back + frak_l_back.log_frak_l,
        ),
        InequalityCheck::new("r l_n(theta^(N+1)) <= frak_l_(N+1+n)", log_r + l_shifted.log_l, frak_l_far.log_frak_l),
        InequalityCheck::new("r_n a_n <= l_(N+n)", log_r_n + here.log_a, l_n_plus.log_l),
        InequalityCheck::new("b^-1 e^(-N K) <= r_n", -log_b - big_n as f64 * k, log_r_n),
    ];
    let holds = checks.iter().all(|c| c.holds);
    Ok(SandwichReport {
        n,
        e,
        position,
        constants: SandwichConstants { order: big_n, log_b, k, log_r, log_r_back, log_r_n },
        checks,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GibbsReport {
    pub depth: usize,
    pub cylinders: usize,
    pub violations: usize,
    /// `log` of the lower constant at each depth `1..=depth`.
    pub log_lower: Vec<f64>,
    pub log_upper: f64,
    /// Extremes of `log(m([τ]) / exp(S_n f - P^n))` over all cylinders.
    pub min_log_ratio: f64,
    pub max_log_ratio: f64,
}

impl GibbsReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Two-sided Gibbs bracket for every admissible cylinder of length
/// `1..=depth` under the conformal chain at its starting position.
pub fn check_gibbs(
    sys: &SymbolicSystem,
    driving: &DrivingSystem,
    pot: &dyn RandomPotential,
    chain: &ConformalChain,
    witness: &PrimitivityWitness,
    depth: usize,
) -> Result<GibbsReport> {
    if depth > chain.depth() {
        return Err(Error::InvalidGrid(format!("chain resolves depth {} only", chain.depth())));
    }
    let alphabet = chain.alphabet().to_vec();
    let orbit = chain.orbit();
    let start = chain.position();
    let big_n = witness.order;
    let log_b = pot.log_distortion();
    let k = subalphabet_bound(pot, driving, &witness.connector_alphabet);
    let log_upper = log_b;
    let horizon_needed = depth + 2 * big_n;
    let log_m: Vec<f64> = (0..horizon_needed)
        .map(|i| ruelle_bounds(pot, sys, orbit.state(start + i as i64), Some(&alphabet)).0)
        .collect();
    let mut log_lower = Vec::with_capacity(depth);
    let mut violations = 0;
    let mut cylinders = 0;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    for n in 1..=depth {
        let prod: f64 = log_m[n..n + 2 * big_n].iter().sum();
        let lower = -(log_b + 2.0 * big_n as f64 * k + (big_n as f64).ln() + prod);
        log_lower.push(lower);
        let p_n = chain.log_partial_eigen(n);
        let tol = ROUNDING_SLACK * p_n.abs().max(1.0);
        for word in crate::shift::enumerate_words(sys, &alphabet, n, None)? {
            let mass = chain.log_mass(word.symbols());
            let b = word_bounds(pot, orbit, start, word.symbols());
            let hi_ratio = mass - (b.inf - p_n);
            let lo_ratio = mass - (b.sup - p_n);
            min_ratio = min_ratio.min(lo_ratio);
            max_ratio = max_ratio.max(hi_ratio);
            cylinders += 1;
            if hi_ratio > log_upper + tol || lo_ratio < lower - tol {
                violations += 1;
            }
        }
    }
    Ok(GibbsReport {
        depth,
        cylinders,
        violations,
        log_lower,
        log_upper,
        min_log_ratio: min_ratio,
        max_log_ratio: max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdms::instances;
    use crate::potentials::{geometric_potential, FirstSymbolTable};

    fn zeta(g: &crate::gdms::Rcgdms, s: f64) -> std::sync::Arc<dyn RandomPotential> {
        geometric_potential(g).unwrap().scaled(s)
    }

    #[test]
    fn cantor_partition_sums() {
        let g = instances::cantor();
        let orbit = sample_orbit(&g.driving, 0);
        let f = zeta(&g, 1.0);
        let two = partition_sums(&g.symbolic, &[0, 1], f.as_ref(), &orbit, 0, 0, 2).unwrap();
        assert!((two.log_z.exp() - 2.0 / 9.0).abs() < 1e-15);
        let one = partition_sums(&g.symbolic, &[0, 1], f.as_ref(), &orbit, 0, 0, 1).unwrap();
        assert!((one.log_frak_l.exp() - 1.0 / 3.0).abs() < 1e-15);
        let zero = FirstSymbolTable::zero(&[0], 2);
        let three = partition_sums(&g.symbolic, &[0, 1], &zero, &orbit, 0, 0, 3).unwrap();
        assert!((three.log_a.exp() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_anchor_restricts_words() {
        let g = instances::golden_mean(1.0 / 3.0, 1.0 / 3.0);
        let orbit = sample_orbit(&g.driving, 0);
        let zero = FirstSymbolTable::zero(&[0], 2);
        // words 10 only: τ0 = 1 and A[τ1][1] = 1
        let s = partition_sums(&g.symbolic, &[0, 1], &zero, &orbit, 0, 1, 2).unwrap();
        assert!((s.log_z.exp() - 1.0).abs() < 1e-15);
        assert!((s.log_a.exp() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn dp_matches_enumeration() {
        for g in [instances::golden_mean(0.5, 0.25), instances::random_twoscale(), instances::period2()] {
            let orbit = sample_orbit(&g.driving, 3);
            let f = zeta(&g, 0.7);
            let seq = log_a_sequence(&g.symbolic, &[0, 1], f.as_ref(), &orbit, 2, 7).unwrap();
            for n in 1..=7 {
                let s = partition_sums(&g.symbolic, &[0, 1], f.as_ref(), &orbit, 2, 0, n).unwrap();
                assert!((s.log_a - seq[n - 1]).abs() < 1e-12, "{n}");
            }
        }
    }

    #[test]
    fn closed_form_pressures() {
        let opts = PressureOptions::default();
        let g = instances::cantor();
        let p = pressure(&g.symbolic, &g.driving, None, zeta(&g, 1.0).as_ref(), &opts).unwrap();
        assert_eq!(p.route, PressureRoute::ClosedForm);
        assert!((p.value - (2.0f64 / 3.0).ln()).abs() < 1e-15);
        let g = instances::period2();
        let p = pressure(&g.symbolic, &g.driving, None, zeta(&g, 1.0).as_ref(), &opts).unwrap();
        assert!((p.value + 0.5 * 2f64.ln()).abs() < 1e-15);
        let g = instances::twoscale();
        let p = pressure(&g.symbolic, &g.driving, None, zeta(&g, 0.0).as_ref(), &opts).unwrap();
        assert!((p.value - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn golden_mean_entropy() {
        let g = instances::golden_mean(1.0 / 3.0, 1.0 / 3.0);
        let zero = FirstSymbolTable::zero(&[0], 2);
        let p = pressure(&g.symbolic, &g.driving, None, &zero, &PressureOptions::default()).unwrap();
        assert_eq!(p.route, PressureRoute::PeriodicTransfer);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.value - golden.ln()).abs() < 1e-13);
    }

    #[test]
    fn orbit_average_agrees_with_transfer() {
        // a one-state Bernoulli driving takes the orbit route on a
        // deterministic system
        let g = instances::golden_mean(0.5, 0.25);
        let f = zeta(&g, 0.8);
        let exact = pressure(&g.symbolic, &g.driving, None, f.as_ref(), &PressureOptions::default()).unwrap();
        let single = DrivingSystem::bernoulli(vec![0], vec![1.0], 0.0).unwrap();
        let opts = PressureOptions { orbit_count: 2, ..Default::default() };
        let p = pressure(&g.symbolic, &single, None, f.as_ref(), &opts).unwrap();
        assert_eq!(p.route, PressureRoute::OrbitAverage);
        assert!((p.value - exact.value).abs() < 1e-9, "{} vs {}", p.value, exact.value);
    }

    #[test]
    fn orbit_route_within_ruelle_bounds() {
        let g = instances::golden_mean(0.5, 0.25);
        let driving = DrivingSystem::bernoulli(vec![0], vec![1.0], 0.0).unwrap();
        let f = zeta(&g, 1.0);
        let p = pressure(&g.symbolic, &driving, None, f.as_ref(), &PressureOptions::default()).unwrap();
        let (hi, lo) = ruelle_bounds(f.as_ref(), &g.symbolic, 0, None);
        assert!(lo <= p.value && p.value <= hi);
    }

    #[test]
    fn sandwich_holds_for_cantor() {
        let g = instances::cantor();
        let orbit = sample_orbit(&g.driving, 0);
        let w = find_primitivity(&g.symbolic, &[0, 1], 3).unwrap().unwrap();
        for n in 1..=6 {
            let r = check_sandwich(&g.symbolic, &g.driving, &[0, 1], zeta(&g, 1.0).as_ref(), &orbit, 0, 0, n, &w)
                .unwrap();
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn anchor_word() {
        let g = instances::golden_mean(0.5, 0.25);
        let w = find_primitivity(&g.symbolic, &[0, 1], 3).unwrap().unwrap();
        assert_eq!(standard_anchor(&g.symbolic, &w, 1, 5).unwrap(), vec![1, 0, 1, 0, 1]);
    }

    #[test]
    fn rungs_increase() {
        let g = crate::gdms::build_paper_example(64).unwrap();
        let ladder = crate::shift::build_ladder(&g.symbolic, &[0], &[4, 8, 16, 64]).unwrap();
        let c = pressure_compact_approx(&g.symbolic, &g.driving, &ladder, zeta(&g, 1.0).as_ref(), &PressureOptions::default())
            .unwrap();
        assert!(c.monotone);
        assert!(c.exact);
        assert!(c.limit <= -(2f64.ln()));
        assert!(c.rung_values.iter().all(|&v| v <= c.limit + 1e-12));
    }
}
