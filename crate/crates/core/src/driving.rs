//! Invertible ergodic base systems and their two-sided fiber orbits.
//!
//! A fiber is identified by its *state*: the label that the map family and
//! potentials are indexed by (`ω_0` for a shift-driven system, the cycle entry
//! for periodic driving).

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Fiber state label.
pub type State = u32;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum DrivingSystem {
    /// A single fixed fiber.
    Deterministic { state: State },
    /// `ω_k = cycle[k mod len]`.
    Periodic { cycle: Vec<State> },
    /// Two-sided i.i.d. draws. `tail_mass` is the probability of states not
    /// listed (bounded in closed form by the caller) and must be below the
    /// normalization tolerance.
    Bernoulli { states: Vec<State>, weights: Vec<f64>, tail_mass: f64 },
}

impl DrivingSystem {
    pub fn deterministic(state: State) -> Self {
        DrivingSystem::Deterministic { state }
    }

    pub fn periodic(cycle: Vec<State>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::Unnormalizable("periodic cycle must have length at least 1".into()));
        }
        Ok(DrivingSystem::Periodic { cycle })
    }

    /// Bernoulli driving; weights are checked to sum to one once `tail_mass`
    /// is included and then renormalized over the listed states.
    pub fn bernoulli(states: Vec<State>, weights: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if states.is_empty() || states.len() != weights.len() {
            return Err(Error::Unnormalizable("states and weights must be nonempty and of equal length".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !(0.0..=NORMALIZATION_TOL).contains(&tail_mass) {
            return Err(Error::Unnormalizable("weights must be finite and nonnegative; tail below 1e-12".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total + tail_mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalizable(format!("weights sum to {}", total + tail_mass)));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(DrivingSystem::Bernoulli { states, weights, tail_mass })
    }

    /// Stationary one-point marginal as `(state, probability)` pairs, merged
    /// by state and sorted.
    pub fn marginal(&self) -> Vec<(State, f64)> {
        let raw: Vec<(State, f64)> = match self {
            DrivingSystem::Deterministic { state } => vec![(*state, 1.0)],
            DrivingSystem::Periodic { cycle } => {
                let w = 1.0 / cycle.len() as f64;
                cycle.iter().map(|&s| (s, w)).collect()
            }
            DrivingSystem::Bernoulli { states, weights, .. } => {
                states.iter().copied().zip(weights.iter().copied()).collect()
            }
        };
        let mut merged: Vec<(State, f64)> = Vec::new();
        let mut sorted = raw;
        sorted.sort_by_key(|p| p.0);
        for (s, w) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += w,
                _ => merged.push((s, w)),
            }
        }
        merged
    }

    /// Every state of positive probability.
    pub fn support(&self) -> Vec<State> {
        self.marginal().into_iter().filter(|p| p.1 > 0.0).map(|p| p.0).collect()
    }

    /// Period of the driving, if it is deterministic or periodic.
    pub fn period(&self) -> Option<usize> {
        match self {
            DrivingSystem::Deterministic { .. } => Some(1),
            DrivingSystem::Periodic { cycle } => Some(cycle.len()),
            DrivingSystem::Bernoulli { .. } => None,
        }
    }
}

/// Reproducible two-sided orbit `(ω_k)_{k∈Z}` of a driving system.
///
/// Bernoulli states are drawn by inverse CDF from a counter-based ChaCha
/// stream: index `k >= 0` reads stream 0 at word position `2k`, index `k < 0`
/// reads stream 1 at `2(-k-1)`. Access is random, so the state at `k` does
/// not depend on access order and the orbit can be shared across threads.
#[derive(Clone, Debug)]
pub struct DrivingOrbit {
    system: DrivingSystem,
    seed: u64,
    cumulative: Vec<f64>,
}

pub fn sample_orbit(system: &DrivingSystem, seed: u64) -> DrivingOrbit {
    let cumulative = match system {
        DrivingSystem::Bernoulli { weights, .. } => {
            let mut acc = 0.0;
            weights
                .iter()
                .map(|w| {
                    acc += w;
                    acc
                })
                .collect()
        }
        _ => Vec::new(),
    };
    DrivingOrbit { system: system.clone(), seed, cumulative }
}

impl DrivingOrbit {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn system(&self) -> &DrivingSystem {
        &self.system
    }

    /// Uniform draw in `[0, 1)` attached to index `k`.
    fn uniform(&self, k: i64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (stream, index) = if k >= 0 { (0, k as u64) } else { (1, (-(k + 1)) as u64) };
        rng.set_stream(stream);
        rng.set_word_pos(2 * index as u128);
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `ω_k`; negative `k` walks backwards along the invertible base map.
    pub fn state(&self, k: i64) -> State {
        match &self.system {
            DrivingSystem::Deterministic { state } => *state,
            DrivingSystem::Periodic { cycle } => cycle[k.rem_euclid(cycle.len() as i64) as usize],
            DrivingSystem::Bernoulli { states, .. } => {
                let u = self.uniform(k);
                let idx = self.cumulative.partition_point(|&c| c <= u);
                states[idx.min(states.len() - 1)]
            }
        }
    }

    /// States `ω_start, ..., ω_{start+len-1}`.
    pub fn window(&self, start: i64, len: usize) -> Vec<State> {
        (0..len as i64).map(|i| self.state(start + i)).collect()
    }

    /// Orbit of the shifted fiber `θ^k ω`.
    pub fn shifted(&self, k: i64) -> ShiftedOrbit<'_> {
        ShiftedOrbit { orbit: self, offset: k }
    }
}

/// View of an orbit re-based at `θ^offset ω`.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedOrbit<'a> {
    orbit: &'a DrivingOrbit,
    offset: i64,
}

impl ShiftedOrbit<'_> {
    pub fn state(&self, k: i64) -> State {
        self.orbit.state(self.offset + k)
    }
}

/// `fiber_state(orbit, k)`.
pub fn fiber_state(orbit: &DrivingOrbit, k: i64) -> State {
    orbit.state(k)
}

/// Expands a root seed into `count` independent orbit seeds (SplitMix64).
pub fn orbit_seeds(root: u64, count: usize) -> Vec<u64> {
    let mut x = root;
    (0..count)
        .map(|_| {
            x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_orbit_is_constant() {
        let orbit = sample_orbit(&DrivingSystem::deterministic(7), 1);
        assert!((-5..5).all(|k| fiber_state(&orbit, k) == 7));
    }

    #[test]
    fn periodic_orbit_alternates() {
        let sys = DrivingSystem::periodic(vec![10, 20]).unwrap();
        for seed in [0, 99] {
            let orbit = sample_orbit(&sys, seed);
            assert_eq!(orbit.state(0), 10);
            assert_eq!(orbit.state(1), 20);
            assert_eq!(orbit.state(-1), 20);
            assert_eq!(orbit.state(-2), 10);
        }
        assert!(DrivingSystem::periodic(vec![]).is_err());
    }

    #[test]
    fn bernoulli_access_order_independent() {
        let sys = DrivingSystem::bernoulli(vec![1, 2, 3], vec![0.2, 0.3, 0.5], 0.0).unwrap();
        let a = sample_orbit(&sys, 42);
        let far = a.state(1_000_000);
        let fresh = sample_orbit(&sys, 42);
        assert_eq!(fresh.state(1_000_000), far);
        let forward: Vec<State> = (-50..50).map(|k| a.state(k)).collect();
        let backward: Vec<State> = (-50..50).rev().map(|k| fresh.state(k)).collect::<Vec<_>>().into_iter().rev().collect();
        assert_eq!(forward, backward);
        let other = sample_orbit(&sys, 43);
        assert_ne!(a.window(0, 64), other.window(0, 64));
    }

    #[test]
    fn bernoulli_rejects_bad_weights() {
        assert!(DrivingSystem::bernoulli(vec![1, 2], vec![0.5, 0.4], 0.0).is_err());
        assert!(DrivingSystem::bernoulli(vec![1, 2], vec![0.5, -0.5], 0.0).is_err());
        assert!(DrivingSystem::bernoulli(vec![1], vec![0.5, 0.5], 0.0).is_err());
    }

    #[test]
    fn bernoulli_frequencies() {
        let sys = DrivingSystem::bernoulli(vec![0, 1], vec![0.25, 0.75], 0.0).unwrap();
        let orbit = sample_orbit(&sys, 5);
        let n = 100_000;
        let ones = (0..n).filter(|&k| orbit.state(k) == 1).count() as f64 / n as f64;
        let se = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((ones - 0.75).abs() < 3.0 * se);
    }

    #[test]
    fn marginal_merges_repeated_cycle_states() {
        let sys = DrivingSystem::periodic(vec![3, 1, 3, 3]).unwrap();
        assert_eq!(sys.marginal(), vec![(1, 0.25), (3, 0.75)]);
    }

    #[test]
    fn seeds_are_distinct_and_reproducible() {
        let a = orbit_seeds(1, 16);
        assert_eq!(a, orbit_seeds(1, 16));
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 16);
    }
}
