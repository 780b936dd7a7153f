//! Fiberwise conformal measures of finite subalphabets along a driving orbit.
//!
//! Measures are obtained by pulling a uniform terminal seed back through the
//! normalized dual transfer operator. Product systems (full shift with a
//! first-symbol potential) use the exact closed form instead.

use std::sync::Arc;

use serde::Serialize;

use crate::driving::DrivingOrbit;
use crate::error::{Error, Result};
use crate::potentials::{ruelle_bounds, RandomPotential};
use crate::shift::{enumerate_words, Symbol, SubalphabetLadder, SymbolicSystem};
use crate::thermo::{is_product, WORD_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChainMethod {
    /// Closed form for product systems, pull-back otherwise.
    Auto,
    PullBack,
}

#[derive(Clone, Debug)]
enum Repr {
    Product { pot: Arc<dyn RandomPotential> },
    /// `levels[offset][j - 1]` holds masses of length-`j` words, indexed in
    /// mixed radix over the alphabet (zero for inadmissible words).
    Tabulated { levels: Vec<Vec<Vec<f64>>> },
}

/// Conformal measures `m_k` at positions `position + k` with their
/// eigenvalues `λ_k = ∫ L_{ω_k}(1) dm_{k+1}`.
#[derive(Clone, Debug)]
pub struct ConformalChain {
    alphabet: Vec<Symbol>,
    orbit: DrivingOrbit,
    position: i64,
    depth: usize,
    log_lambda: Vec<f64>,
    kept: usize,
    repr: Repr,
}

/// Default backward horizon for a given depth.
pub fn default_horizon(depth: usize) -> usize {
    2 * depth + 10
}

/// Builds the chain over `alphabet` for positions `position..position+horizon`,
/// resolving cylinders up to `depth` and keeping the measures of the first
/// `keep` positions.
#[allow(clippy::too_many_arguments)]
pub fn conformal_measures(
    sys: &SymbolicSystem,
    alphabet: &[Symbol],
    pot: Arc<dyn RandomPotential>,
    orbit: &DrivingOrbit,
    position: i64,
    horizon: usize,
    depth: usize,
    keep: usize,
    method: ChainMethod,
) -> Result<ConformalChain> {
    let mut alphabet = alphabet.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    if alphabet.is_empty() || alphabet.iter().any(|&e| e >= sys.cutoff()) {
        return Err(Error::InvalidSystem("subalphabet must be nonempty and materialized".into()));
    }
    if depth == 0 || horizon == 0 || keep == 0 || keep > horizon {
        return Err(Error::InvalidGrid("need depth, horizon >= 1 and 1 <= keep <= horizon".into()));
    }
    if !pot.is_first_symbol() {
        return Err(Error::Degenerate("conformal measures need a potential constant on 1-cylinders".into()));
    }
    if method == ChainMethod::Auto && is_product(sys, pot.as_ref()) {
        let log_lambda = (0..horizon)
            .map(|k| ruelle_bounds(pot.as_ref(), sys, orbit.state(position + k as i64), Some(&alphabet)).0)
            .collect();
        return Ok(ConformalChain {
            alphabet,
            orbit: orbit.clone(),
            position,
            depth,
            log_lambda,
            kept: horizon,
            repr: Repr::Product { pot },
        });
    }
    let m = alphabet.len();
    let size = (m as f64).powi(depth as i32);
    if size > WORD_BUDGET {
        return Err(Error::BudgetExceeded { words: size, limit: WORD_BUDGET });
    }
    let size = size as usize;
    let tail = size / m;
    let allows: Vec<Vec<bool>> =
        alphabet.iter().map(|&a| alphabet.iter().map(|&b| sys.allows(a, b)).collect()).collect();
    // admissibility of every depth-`depth` word
    let mut admissible = vec![true; size];
    for (idx, ok) in admissible.iter_mut().enumerate() {
        let mut rest = idx;
        let mut digits = vec![0; depth];
        for d in digits.iter_mut().rev() {
            *d = rest % m;
            rest /= m;
        }
        *ok = digits.windows(2).all(|w| allows[w[0]][w[1]]);
    }
    let count = admissible.iter().filter(|&&a| a).count() as f64;
    let mut current: Vec<f64> = admissible.iter().map(|&a| if a { 1.0 / count } else { 0.0 }).collect();
    let mut log_lambda = vec![0.0; horizon];
    let mut kept_levels: Vec<Vec<Vec<f64>>> = vec![Vec::new(); keep];
    for k in (0..horizon).rev() {
        let state = orbit.state(position + k as i64);
        let f: Vec<f64> = alphabet.iter().map(|&e| pot.symbol_bounds(state, e).0).collect();
        let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weight: Vec<f64> = f.iter().map(|v| (v - fmax).exp()).collect();
        let mut next = vec![0.0; size];
        if depth == 1 {
            for a in 0..m {
                let s: f64 = (0..m).filter(|&b| allows[a][b]).map(|b| current[b]).sum();
                next[a] = weight[a] * s;
            }
        } else {
            let marginal: Vec<f64> = (0..tail).map(|u| current[u * m..(u + 1) * m].iter().sum()).collect();
            for idx in 0..size {
                if admissible[idx] {
                    next[idx] = weight[idx / tail] * marginal[idx % tail];
                }
            }
        }
        let total: f64 = next.iter().sum();
        log_lambda[k] = fmax + total.ln();
        for x in next.iter_mut() {
            *x /= total;
        }
        current = next;
        if k < keep {
            kept_levels[k] = levels_of(&current, m, depth);
        }
    }
    Ok(ConformalChain {
        alphabet,
        orbit: orbit.clone(),
        position,
        depth,
        log_lambda,
        kept: keep,
        repr: Repr::Tabulated { levels: kept_levels },
    })
}

fn levels_of(top: &[f64], m: usize, depth: usize) -> Vec<Vec<f64>> {
    let mut levels = vec![top.to_vec()];
    for _ in 1..depth {
        let prev = levels.last().unwrap();
        let next: Vec<f64> = (0..prev.len() / m).map(|u| prev[u * m..(u + 1) * m].iter().sum()).collect();
        levels.push(next);
    }
    levels.reverse();
    levels
}

impl ConformalChain {
    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn orbit(&self) -> &DrivingOrbit {
        &self.orbit
    }

    pub fn position(&self) -> i64 {
        self.position
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of leading positions whose measures are available.
    pub fn kept(&self) -> usize {
        self.kept
    }

    pub fn horizon(&self) -> usize {
        self.log_lambda.len()
    }

    pub fn log_lambda(&self) -> &[f64] {
        &self.log_lambda
    }

    /// `P^n = Σ_{i<n} log λ_i`.
    pub fn log_partial_eigen(&self, n: usize) -> f64 {
        self.log_lambda[..n].iter().sum()
    }

    /// `log m_0([τ])`.
    pub fn log_mass(&self, word: &[Symbol]) -> f64 {
        self.log_mass_at(0, word)
    }

    /// `log m_k([τ])` at position `position + offset`; `-inf` for inadmissible
    /// words or symbols outside the alphabet.
    pub fn log_mass_at(&self, offset: usize, word: &[Symbol]) -> f64 {
        assert!(offset < self.kept, "position offset {offset} not retained");
        assert!(!word.is_empty() && word.len() <= self.depth, "word length outside 1..=depth");
        let mut digits = Vec::with_capacity(word.len());
        for e in word {
            match self.alphabet.binary_search(e) {
                Ok(i) => digits.push(i),
                Err(_) => return f64::NEG_INFINITY,
            }
        }
        match &self.repr {
            Repr::Product { pot } => digits
                .iter()
                .enumerate()
                .map(|(j, &d)| {
                    let state = self.orbit.state(self.position + (offset + j) as i64);
                    pot.symbol_bounds(state, self.alphabet[d]).0 - self.log_lambda[offset + j]
                })
                .sum(),
            Repr::Tabulated { levels } => {
                let m = self.alphabet.len();
                let idx = digits.iter().fold(0, |acc, &d| acc * m + d);
                levels[offset][word.len() - 1][idx].ln()
            }
        }
    }

    pub fn mass(&self, word: &[Symbol]) -> f64 {
        self.log_mass(word).exp()
    }
}

/// `max |λ_k m_k([τ]) - (L*_{ω_k} m_{k+1})([τ])|` over admissible words of
/// length `1..depth` (one less than resolved) at offset `k`.
pub fn conformality_residual(
    sys: &SymbolicSystem,
    pot: &dyn RandomPotential,
    chain: &ConformalChain,
    offset: usize,
) -> Result<f64> {
    if offset + 1 >= chain.kept() {
        return Err(Error::InvalidGrid("residual needs the next position retained".into()));
    }
    let alphabet = chain.alphabet();
    let state = chain.orbit().state(chain.position() + offset as i64);
    let lambda = chain.log_lambda()[offset];
    let mut worst: f64 = 0.0;
    let max_len = if chain.depth() == 1 { 1 } else { chain.depth() - 1 };
    for len in 1..=max_len {
        for word in enumerate_words(sys, alphabet, len, None)? {
            let w = word.symbols();
            let f0 = pot.symbol_bounds(state, w[0]).0;
            let pushed = if len == 1 {
                alphabet
                    .iter()
                    .filter(|&&b| sys.allows(w[0], b))
                    .map(|&b| chain.log_mass_at(offset + 1, &[b]).exp())
                    .sum::<f64>()
                    * f0.exp()
            } else {
                (f0 + chain.log_mass_at(offset + 1, &w[1..])).exp()
            };
            let here = (lambda + chain.log_mass_at(offset, w)).exp();
            worst = worst.max((here - pushed).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderConvergence {
    pub rung_sizes: Vec<usize>,
    pub cylinders: Vec<Vec<Symbol>>,
    /// `masses[j][c]`: mass of cylinder `c` under rung `j`.
    pub masses: Vec<Vec<f64>>,
    /// Sup deviation between consecutive rungs.
    pub deviations: Vec<f64>,
    /// Largest relative tail mass `Σ_{e ∉ materialized} e^{sup f} / M_{F_last}`
    /// over the fibers visited.
    pub tail_bound: Option<f64>,
    /// Deviations nonincreasing and tail bound below `1e-3`.
    pub cauchy: bool,
}

pub const TAIL_FLAG: f64 = 1e-3;

/// Cylinder masses at `position` under each rung, for all admissible words of
/// length `depth` over the first rung.
pub fn ladder_convergence(
    sys: &SymbolicSystem,
    ladder: &SubalphabetLadder,
    pot: Arc<dyn RandomPotential>,
    orbit: &DrivingOrbit,
    position: i64,
    depth: usize,
) -> Result<LadderConvergence> {
    if ladder.is_empty() {
        return Err(Error::InvalidGrid("ladder has no rungs".into()));
    }
    let cylinders: Vec<Vec<Symbol>> = enumerate_words(sys, &ladder.rungs[0], depth, None)?.map(|w| w.0).collect();
    let mut masses = Vec::with_capacity(ladder.len());
    for rung in &ladder.rungs {
        let chain = conformal_measures(
            sys,
            rung,
            pot.clone(),
            orbit,
            position,
            default_horizon(depth),
            depth,
            1,
            ChainMethod::Auto,
        )?;
        masses.push(cylinders.iter().map(|c| chain.mass(c)).collect::<Vec<f64>>());
    }
    let deviations: Vec<f64> = masses
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let tail_bound = if sys.has_tail() {
        let last = ladder.last();
        let worst = (0..depth)
            .map(|j| {
                let state = orbit.state(position + j as i64);
                let t = pot.log_tail_sum(state).unwrap_or(f64::NEG_INFINITY);
                let materialized: Vec<Symbol> = (0..sys.cutoff()).filter(|e| last.binary_search(e).is_err()).collect();
                let mut acc = crate::numeric::LogAccumulator::new();
                acc.push(t);
                for e in materialized {
                    acc.push(pot.symbol_bounds(state, e).1);
                }
                (acc.value() - ruelle_bounds(pot.as_ref(), sys, state, Some(last)).0).exp()
            })
            .fold(0.0, f64::max);
        Some(worst)
    } else {
        None
    };
    let monotone = deviations.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let cauchy = monotone && tail_bound.is_none_or(|t| t <= TAIL_FLAG);
    Ok(LadderConvergence {
        rung_sizes: ladder.rungs.iter().map(Vec::len).collect(),
        cylinders,
        masses,
        deviations,
        tail_bound,
        cauchy,
    })
}
