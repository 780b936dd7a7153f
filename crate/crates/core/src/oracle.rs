//! Brute-force cross-checks: level-set histograms of empirical Lyapunov
//! exponents, box counting on sampled limit sets and local-dimension ratios
//! of conformal measures.
//!
//! None of this uses the pressure machinery, so agreement with the Legendre
//! spectrum or Bowen's root is a genuine test.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::driving::DrivingOrbit;
use crate::error::{Error, Result};
use crate::gdms::{check_rbsc, code_point, LimitSetSample, Rcgdms, ENUMERATION_BUDGET};
use crate::measures::ConformalChain;
use crate::numeric::fit_line;
use crate::potentials::geometric_potential;
use crate::shift::{enumerate_words, Symbol};
use crate::spectrum::{legendre_value, PressureCurve};

/// Bins with fewer words are left out of comparisons.
pub const MIN_BIN_COUNT: u64 = 100;
/// Fraction of a bin width absorbed when locating an exponent.
const BIN_SNAP: f64 = 1e-9;

pub const DEFAULT_BINS: usize = 32;

/// Prefix depth at which enumeration is split into parallel tasks.
fn split_depth(alphabet: usize, n: usize) -> usize {
    let mut k = 0;
    let mut tasks = 1usize;
    while k < n && tasks < 64 {
        tasks = tasks.saturating_mul(alphabet);
        k += 1;
    }
    k
}

/// Folds `visit` over `S_nζ(τ, ω)` for every admissible `τ ∈ F^n`. Tasks are
/// split by prefix and merged in prefix order, so the result does not depend
/// on the thread count.
#[allow(clippy::too_many_arguments)]
fn fold_birkhoff_sums<T, I, V, M>(
    gdms: &Rcgdms,
    orbit: &DrivingOrbit,
    position: i64,
    alphabet: &[Symbol],
    n: usize,
    init: I,
    visit: V,
    merge: M,
) -> Result<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    V: Fn(&mut T, f64) + Sync,
    M: Fn(T, T) -> T,
{
    if n == 0 {
        return Err(Error::Degenerate("depth must be positive".into()));
    }
    let mut alpha = alphabet.to_vec();
    alpha.sort_unstable();
    alpha.dedup();
    let size = (alpha.len() as f64).powi(n as i32);
    if size > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { words: size, limit: ENUMERATION_BUDGET });
    }
    let sys = &gdms.symbolic;
    let zeta = geometric_potential(gdms)?;
    let m = alpha.len();
    // values[j][a]: ζ on [alpha[a]] at position + j (midpoint of the bounds)
    let values: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let state = orbit.state(position + j as i64);
            alpha
                .iter()
                .map(|&e| {
                    let (lo, hi) = zeta.symbol_bounds(state, e);
                    0.5 * (lo + hi)
                })
                .collect()
        })
        .collect();
    let succ: Vec<Vec<usize>> = (0..m).map(|a| (0..m).filter(|&b| sys.allows(alpha[a], alpha[b])).collect()).collect();

    let k = split_depth(m, n);
    let prefixes: Vec<Vec<usize>> = enumerate_words(sys, &alpha, k, None)?
        .map(|w| w.0.iter().map(|e| alpha.binary_search(e).unwrap()).collect())
        .collect();

    let partials: Vec<T> = prefixes
        .par_iter()
        .map(|prefix| {
            let mut acc = init();
            let base: f64 = prefix.iter().enumerate().map(|(j, &a)| values[j][a]).sum();
            if k == n {
                visit(&mut acc, base);
                return acc;
            }
            // iterative DFS over the remaining n - k symbols
            let mut stack: Vec<(usize, usize, f64)> = vec![(k, *prefix.last().unwrap(), base)];
            while let Some((depth, last, sum)) = stack.pop() {
                for &b in succ[last].iter().rev() {
                    let s = sum + values[depth][b];
                    if depth + 1 == n {
                        visit(&mut acc, s);
                    } else {
                        stack.push((depth + 1, b, s));
                    }
                }
            }
            acc
        })
        .collect();
    let mut it = partials.into_iter();
    let first = it.next().unwrap_or_else(&init);
    Ok(it.fold(first, merge))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelHistogram {
    pub depth: usize,
    pub min_exponent: f64,
    pub max_exponent: f64,
    pub width: f64,
    pub counts: Vec<u64>,
    /// Mean exponent of the words in each bin (`NaN` for empty bins).
    pub mean_exponent: Vec<f64>,
    /// `log(count) / (n · mean exponent)`.
    pub coarse_dimension: Vec<f64>,
    pub total: u64,
}

/// Histogram of `χ̂ = -(1/n)·S_nζ(τ, ω)` over admissible `τ ∈ F^n`.
pub fn level_histogram(
    gdms: &Rcgdms,
    orbit: &DrivingOrbit,
    position: i64,
    alphabet: &[Symbol],
    n: usize,
    bins: usize,
) -> Result<LevelHistogram> {
    if bins == 0 {
        return Err(Error::InvalidGrid("need at least one bin".into()));
    }
    let scale = -1.0 / n as f64;
    let (lo, hi) = fold_birkhoff_sums(
        gdms,
        orbit,
        position,
        alphabet,
        n,
        || (f64::INFINITY, f64::NEG_INFINITY),
        |acc, s| {
            let chi = scale * s;
            acc.0 = acc.0.min(chi);
            acc.1 = acc.1.max(chi);
        },
        |a, b| (a.0.min(b.0), a.1.max(b.1)),
    )?;
    if !lo.is_finite() {
        return Err(Error::Degenerate("no admissible words".into()));
    }
    let width = (hi - lo) / bins as f64;
    let bin_of = |chi: f64| -> usize {
        if width <= 0.0 {
            0
        } else {
            // exponents equal up to rounding must share a bin even on an edge
            (((chi - lo) / width + BIN_SNAP).floor() as usize).min(bins - 1)
        }
    };
    let (counts, sums) = fold_birkhoff_sums(
        gdms,
        orbit,
        position,
        alphabet,
        n,
        || (vec![0u64; bins], vec![0.0f64; bins]),
        |acc, s| {
            let chi = scale * s;
            let b = bin_of(chi);
            acc.0[b] += 1;
            acc.1[b] += chi;
        },
        |mut a, b| {
            for i in 0..bins {
                a.0[i] += b.0[i];
                a.1[i] += b.1[i];
            }
            a
        },
    )?;
    let mean_exponent: Vec<f64> =
        counts.iter().zip(&sums).map(|(&c, &s)| if c == 0 { f64::NAN } else { s / c as f64 }).collect();
    let coarse_dimension = counts
        .iter()
        .zip(&mean_exponent)
        .map(|(&c, &chi)| if c == 0 { f64::NAN } else { (c as f64).ln() / (n as f64 * chi) })
        .collect();
    Ok(LevelHistogram {
        depth: n,
        min_exponent: lo,
        max_exponent: hi,
        width,
        total: counts.iter().sum(),
        counts,
        mean_exponent,
        coarse_dimension,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinComparison {
    pub bin: usize,
    pub exponent: f64,
    pub count: u64,
    pub coarse_dimension: f64,
    pub legendre: f64,
    pub gap: f64,
}

/// Compares bins holding at least `min_count` words, with exponents strictly
/// inside the validity interval, against `l(χ̂)`.
pub fn compare_with_spectrum(hist: &LevelHistogram, curve: &PressureCurve, min_count: u64) -> Result<Vec<BinComparison>> {
    let (lo, hi) = curve.validity();
    let tol = 1e-9;
    (0..hist.counts.len())
        .filter(|&b| hist.counts[b] >= min_count)
        .filter(|&b| hist.mean_exponent[b] > lo + tol && hist.mean_exponent[b] < hi - tol)
        .map(|b| {
            let chi = hist.mean_exponent[b];
            let (l, _) = legendre_value(curve, chi)?;
            Ok(BinComparison {
                bin: b,
                exponent: chi,
                count: hist.counts[b],
                coarse_dimension: hist.coarse_dimension[b],
                legendre: l,
                gap: (hist.coarse_dimension[b] - l).abs(),
            })
        })
        .collect()
}

/// Number of admissible `τ ∈ F^n` whose exponent falls outside `[lo - eps, hi + eps]`.
#[allow(clippy::too_many_arguments)]
pub fn exponent_range_violations(
    gdms: &Rcgdms,
    orbit: &DrivingOrbit,
    position: i64,
    alphabet: &[Symbol],
    n: usize,
    lo: f64,
    hi: f64,
    eps: f64,
) -> Result<u64> {
    let scale = -1.0 / n as f64;
    fold_birkhoff_sums(
        gdms,
        orbit,
        position,
        alphabet,
        n,
        || 0u64,
        |acc, s| {
            let chi = scale * s;
            if chi < lo - eps || chi > hi + eps {
                *acc += 1;
            }
        },
        |a, b| a + b,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountEstimate {
    pub dimension: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

/// `count` scales spaced geometrically from `lo` to `hi`.
pub fn geometric_scales(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    crate::numeric::linspace(lo.ln(), hi.ln(), count).into_iter().map(f64::exp).collect()
}

/// Least-squares slope of `log N(ε)` against `log(1/ε)`, where `N(ε)` counts
/// occupied grid cells of width `ε`.
pub fn box_counting(sample: &LimitSetSample, scales: &[f64]) -> Result<BoxCountEstimate> {
    if sample.points.is_empty() {
        return Err(Error::Degenerate("empty point sample".into()));
    }
    if scales.len() < 3 || scales.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidGrid("box counting needs three or more positive scales".into()));
    }
    let smallest = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let largest = scales.iter().copied().fold(0.0, f64::max);
    if largest < 10.0 * smallest * (1.0 - 1e-12) {
        return Err(Error::InvalidGrid("scales must span at least a decade".into()));
    }
    if sample.radius_bound >= smallest {
        return Err(Error::InvalidGrid(format!(
            "smallest scale {smallest} does not exceed the point radius bound {}",
            sample.radius_bound
        )));
    }
    let counts: Vec<usize> = scales
        .iter()
        .map(|&eps| {
            let cells: HashSet<i64> = sample.points.iter().map(|p| (p.center / eps).floor() as i64).collect();
            cells.len()
        })
        .collect();
    let xs: Vec<f64> = scales.iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok(BoxCountEstimate {
        dimension: fit.slope,
        intercept: fit.intercept,
        rms_residual: fit.rms_residual,
        scales: scales.to_vec(),
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalDimensionSample {
    pub word: Vec<Symbol>,
    /// Diameter of the `k`-th cylinder image, `k = 1..=len`.
    pub radii: Vec<f64>,
    /// `log m([τ|k]) / log diam φ_τ|k(X)`.
    pub markov: Vec<f64>,
    /// `log m(B(x, r_k)) / log r_k` with `x` the deepest image center.
    pub metric: Vec<f64>,
    /// `|markov - metric|` at the deepest level.
    pub gap: f64,
}

/// Markov and metric local-dimension ratios of the chain's first measure
/// along each word. Ball masses are sums over the cylinders of maximal depth
/// whose image centers lie in the ball.
pub fn local_dimension_samples(chain: &ConformalChain, gdms: &Rcgdms, words: &[Vec<Symbol>]) -> Result<Vec<LocalDimensionSample>> {
    let states = gdms.driving.support();
    let rbsc = check_rbsc(gdms, chain.alphabet(), &states)?;
    if !rbsc.holds {
        return Err(Error::NonPositiveMargin { margin: rbsc.margin });
    }
    let depth = chain.depth();
    let size = (chain.alphabet().len() as f64).powi(depth as i32);
    if size > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { words: size, limit: ENUMERATION_BUDGET });
    }
    let orbit = chain.orbit();
    let start = chain.position();
    // deepest cylinders sorted by image center
    let mut cells: Vec<(f64, f64)> = enumerate_words(&gdms.symbolic, chain.alphabet(), depth, None)?
        .map(|w| -> Result<(f64, f64)> {
            let p = code_point(gdms, orbit, start, &w.0)?;
            Ok((p.center, chain.mass(&w.0)))
        })
        .collect::<Result<_>>()?;
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let centers: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut cumulative = Vec::with_capacity(cells.len() + 1);
    cumulative.push(0.0);
    for c in &cells {
        cumulative.push(cumulative.last().unwrap() + c.1);
    }
    let ball_mass = |x: f64, r: f64| {
        let a = centers.partition_point(|&c| c < x - r);
        let b = centers.partition_point(|&c| c <= x + r);
        cumulative[b] - cumulative[a]
    };

    words
        .par_iter()
        .map(|word| -> Result<LocalDimensionSample> {
            if word.is_empty() || word.len() > depth {
                return Err(Error::Degenerate(format!("word length must lie in 1..={depth}")));
            }
            let x = code_point(gdms, orbit, start, word)?.center;
            let mut radii = Vec::with_capacity(word.len());
            let mut markov = Vec::with_capacity(word.len());
            let mut metric = Vec::with_capacity(word.len());
            for k in 1..=word.len() {
                let p = code_point(gdms, orbit, start, &word[..k])?;
                let r = 2.0 * p.radius;
                radii.push(r);
                markov.push(chain.log_mass(&word[..k]) / r.ln());
                metric.push(ball_mass(x, r).ln() / r.ln());
            }
            let gap = (markov.last().unwrap() - metric.last().unwrap()).abs();
            Ok(LocalDimensionSample { word: word.clone(), radii, markov, metric, gap })
        })
        .collect()
}
