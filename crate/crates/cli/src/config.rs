//! Run configuration: one JSON file per instance.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thermofrac_core::gdms::{DeclaredConformalMaps, GeometricTailSchedule, PaperExampleSchedule, PAPER_EXAMPLE_MAX_STATE};
use thermofrac_core::potentials::{geometric_potential, FirstSymbolTable, RandomPotential};
use thermofrac_core::shift::{Incidence, TailDescriptor};
use thermofrac_core::{gdms, DrivingSystem, Placement, RatioSchedule, RatioTable, Rcgdms, State, SymbolicSystem};

use crate::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub system: SystemBlock,
    pub maps: MapsBlock,
    pub driving: DrivingBlock,
    /// Potential for `pressure` and `measures`; the geometric one when omitted.
    #[serde(default)]
    pub potential: Option<PotentialBlock>,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    #[serde(default = "one")]
    pub vertices: usize,
    /// Number of materialized edges.
    pub edges: usize,
    pub incidence: IncidenceBlock,
    /// `i(e)` per edge; all zero when omitted.
    #[serde(default)]
    pub initial: Option<Vec<usize>>,
    /// `t(e)` per edge; all zero when omitted.
    #[serde(default)]
    pub terminal: Option<Vec<usize>>,
    #[serde(default)]
    pub tail: Option<TailBlock>,
    /// Label of the first edge in outputs.
    #[serde(default)]
    pub label_base: usize,
    /// `X_v` per vertex; `[0, 1]` each when omitted.
    #[serde(default)]
    pub intervals: Option<Vec<[f64; 2]>>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IncidenceBlock {
    Full,
    VertexRule,
    Matrix { rows: Vec<Vec<u8>> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailBlock {
    Geometric { ratio: f64 },
    PaperExample,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapsBlock {
    Similarity {
        ratios: RatiosBlock,
        placement: PlacementBlock,
    },
    Conformal {
        /// Per state, `[inf |φ'|, sup |φ'|]` per edge (`null` when unknown).
        bounds: BTreeMap<String, Vec<Option<[f64; 2]>>>,
        distortion: f64,
        alpha: f64,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RatiosBlock {
    /// Contraction ratio per edge, keyed by fiber state.
    Table { states: BTreeMap<String, Vec<f64>> },
    /// `r_e = q^e` for labels `e = 1, 2, ...`.
    Geometric { q: f64 },
    PaperExample,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlacementBlock {
    Packed,
    Explicit { lefts: BTreeMap<String, Vec<f64>> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DrivingBlock {
    Deterministic {
        state: State,
    },
    Periodic {
        cycle: Vec<State>,
    },
    Bernoulli {
        states: Vec<State>,
        weights: Vec<f64>,
        #[serde(default)]
        tail_mass: f64,
    },
    PaperExample,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialBlock {
    /// `scale·ζ`.
    Geometric { scale: f64 },
    /// `f(τ, ω) = table[state][τ_0]`, finite alphabets only.
    CustomFirstSymbol { table: BTreeMap<String, Vec<f64>> },
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridBlock {
    pub fn values(&self) -> Vec<f64> {
        thermofrac_core::numeric::linspace(self.min, self.max, self.steps)
    }

    fn validate(&self, what: &str) -> Result<(), CliError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) || self.steps < 2 {
            return Err(CliError::Schema(format!("{what}: need finite min < max and at least two steps")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisBlock {
    pub s_grid: GridBlock,
    /// Derived from the validity interval when omitted.
    pub beta_grid: Option<GridBlock>,
    /// Orbit-average depths.
    pub depths: Vec<usize>,
    pub orbit_count: usize,
    /// Ladder rung sizes for infinite alphabets; empty means the full alphabet.
    pub rungs: Vec<usize>,
    /// Cylinder depth for `measures`, `limitset` and local dimensions.
    pub depth: usize,
    pub histogram_depth: usize,
    pub bins: usize,
    /// Random words for `limitset`; exhaustive when omitted.
    pub samples: Option<usize>,
    /// Multiplier of the potential for `measures`; when omitted, 1 for a
    /// configured potential and Bowen's root for the geometric one.
    pub measure_s: Option<f64>,
    pub max_order: usize,
    pub tolerances: Tolerances,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        AnalysisBlock {
            s_grid: GridBlock { min: -1.0, max: 3.0, steps: 41 },
            beta_grid: None,
            depths: vec![250, 500, 1000],
            orbit_count: 16,
            rungs: Vec::new(),
            depth: 10,
            histogram_depth: 20,
            bins: 32,
            samples: None,
            measure_s: None,
            max_order: 8,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest allowed `|coarse dimension - l(χ̂)|` per bin.
    pub histogram_gap: f64,
    pub min_bin_count: u64,
    /// Box-counting estimate may exceed Bowen's root by this much.
    pub box_margin: f64,
    /// Slack on the exponent range check.
    pub range_eps: f64,
    /// Largest allowed Markov vs metric local-dimension gap.
    pub local_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { histogram_gap: 0.05, min_bin_count: 100, box_margin: 0.05, range_eps: 1e-9, local_gap: 0.25 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: String,
    pub format: Format,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: "out".into(), format: Format::Csv }
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

fn state_key(key: &str) -> Result<State, CliError> {
    key.parse().map_err(|_| CliError::Schema(format!("state key {key:?} is not a nonnegative integer")))
}

fn keyed<T: Clone>(map: &BTreeMap<String, T>) -> Result<BTreeMap<State, T>, CliError> {
    map.iter().map(|(k, v)| Ok((state_key(k)?, v.clone()))).collect()
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let sys = &self.system;
        if sys.edges == 0 || sys.vertices == 0 {
            return Err(CliError::Schema("system needs at least one vertex and one edge".into()));
        }
        if let IncidenceBlock::Matrix { rows } = &sys.incidence {
            if rows.len() != sys.edges || rows.iter().any(|r| r.len() != sys.edges) {
                return Err(CliError::Schema(format!("incidence matrix must be {0}x{0}", sys.edges)));
            }
            if rows.iter().flatten().any(|&x| x > 1) {
                return Err(CliError::Schema("incidence entries must be 0 or 1".into()));
            }
        }
        for (what, ends) in [("initial", &sys.initial), ("terminal", &sys.terminal)] {
            if let Some(v) = ends {
                if v.len() != sys.edges || v.iter().any(|&x| x >= sys.vertices) {
                    return Err(CliError::Schema(format!("{what}: one vertex below {} per edge", sys.vertices)));
                }
            }
        }
        if let Some(iv) = &sys.intervals {
            if iv.len() != sys.vertices || iv.iter().any(|[a, b]| a.partial_cmp(b) != Some(std::cmp::Ordering::Less)) {
                return Err(CliError::Schema("intervals: one [a, b] with a < b per vertex".into()));
            }
        }
        match &self.maps {
            MapsBlock::Similarity { ratios, placement } => {
                let consistent = match (ratios, &sys.tail) {
                    (RatiosBlock::Table { .. }, None) | (RatiosBlock::PaperExample, Some(TailBlock::PaperExample)) => true,
                    (RatiosBlock::Geometric { q }, Some(TailBlock::Geometric { ratio })) => q == ratio,
                    _ => false,
                };
                if !consistent {
                    return Err(CliError::Schema("tail descriptor does not match the ratio rule".into()));
                }
                if let RatiosBlock::Table { states } = ratios {
                    for (k, row) in keyed(states)? {
                        if row.len() != sys.edges {
                            return Err(CliError::Schema(format!("ratios for state {k}: expected {} entries", sys.edges)));
                        }
                    }
                }
                if let PlacementBlock::Explicit { lefts } = placement {
                    for (k, row) in keyed(lefts)? {
                        if row.len() != sys.edges {
                            return Err(CliError::Schema(format!("lefts for state {k}: expected {} entries", sys.edges)));
                        }
                    }
                }
            }
            MapsBlock::Conformal { bounds, .. } => {
                keyed(bounds)?;
            }
        }
        match &self.potential {
            Some(PotentialBlock::Geometric { scale }) if !scale.is_finite() => {
                return Err(CliError::Schema("potential scale must be finite".into()));
            }
            Some(PotentialBlock::CustomFirstSymbol { table }) => {
                if sys.tail.is_some() {
                    return Err(CliError::Schema("custom potentials need a finite alphabet".into()));
                }
                for (k, row) in keyed(table)? {
                    if row.len() != sys.edges || row.iter().any(|x| !x.is_finite()) {
                        return Err(CliError::Schema(format!("potential for state {k}: expected {} finite entries", sys.edges)));
                    }
                }
            }
            _ => {}
        }
        let a = &self.analysis;
        a.s_grid.validate("s_grid")?;
        if let Some(b) = &a.beta_grid {
            b.validate("beta_grid")?;
            if b.min <= 0.0 {
                return Err(CliError::Schema("beta_grid: exponents must be positive".into()));
            }
        }
        if a.depths.len() < 3 || a.depths.windows(2).any(|w| w[0] >= w[1]) || a.depths[0] == 0 {
            return Err(CliError::Schema("depths: three or more strictly increasing positive values".into()));
        }
        if a.rungs.windows(2).any(|w| w[0] >= w[1]) || a.rungs.iter().any(|&r| r == 0 || r > sys.edges) {
            return Err(CliError::Schema(format!("rungs: strictly increasing sizes in 1..={}", sys.edges)));
        }
        if a.orbit_count == 0 || a.depth == 0 || a.histogram_depth == 0 || a.bins == 0 {
            return Err(CliError::Schema("orbit_count, depth, histogram_depth and bins must be positive".into()));
        }
        Ok(())
    }

    /// The configured potential for `gdms`.
    pub fn potential(&self, gdms: &Rcgdms) -> Result<Arc<dyn RandomPotential>, CliError> {
        match &self.potential {
            None => Ok(geometric_potential(gdms)?),
            Some(PotentialBlock::Geometric { scale }) => Ok(geometric_potential(gdms)?.scaled(*scale)),
            Some(PotentialBlock::CustomFirstSymbol { table }) => {
                let table = keyed(table)?;
                for state in gdms.driving.support() {
                    if !table.contains_key(&state) {
                        return Err(CliError::Schema(format!("potential has no row for driving state {state}")));
                    }
                }
                let f = FirstSymbolTable::new(table).map_err(|e| CliError::Schema(e.to_string()))?;
                Ok(Arc::new(f))
            }
        }
    }

    /// Builds the system. Geometric inconsistencies (overlapping images,
    /// ratios outside `(0, 1)`) are reported as schema errors.
    pub fn build(&self) -> Result<Rcgdms, CliError> {
        let sys = &self.system;
        let schema = |e: thermofrac_core::Error| CliError::Schema(e.to_string());
        let initial = sys.initial.clone().unwrap_or_else(|| vec![0; sys.edges]);
        let terminal = sys.terminal.clone().unwrap_or_else(|| vec![0; sys.edges]);
        let incidence = match &sys.incidence {
            IncidenceBlock::Full => Incidence::Full,
            IncidenceBlock::VertexRule => Incidence::VertexRule,
            IncidenceBlock::Matrix { rows } => Incidence::Matrix(rows.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect()),
        };
        let mut symbolic = SymbolicSystem::new(sys.vertices, initial, terminal, incidence).map_err(schema)?;
        if let Some(tail) = &sys.tail {
            let descriptor = match tail {
                TailBlock::Geometric { ratio } => {
                    TailDescriptor::Geometric { ratio: *ratio, first_label: sys.edges + sys.label_base }
                }
                TailBlock::PaperExample => TailDescriptor::Rule("paper-example".into()),
            };
            symbolic = symbolic.with_tail(descriptor).map_err(schema)?;
        }
        let symbolic = symbolic.with_label_base(sys.label_base);
        let driving = match &self.driving {
            DrivingBlock::Deterministic { state } => DrivingSystem::deterministic(*state),
            DrivingBlock::Periodic { cycle } => DrivingSystem::periodic(cycle.clone()).map_err(schema)?,
            DrivingBlock::Bernoulli { states, weights, tail_mass } => {
                DrivingSystem::bernoulli(states.clone(), weights.clone(), *tail_mass).map_err(schema)?
            }
            DrivingBlock::PaperExample => gdms::paper_example_driving(PAPER_EXAMPLE_MAX_STATE).map_err(schema)?,
        };
        let intervals: Vec<(f64, f64)> = match &sys.intervals {
            Some(iv) => iv.iter().map(|[a, b]| (*a, *b)).collect(),
            None => vec![(0.0, 1.0); sys.vertices],
        };
        match &self.maps {
            MapsBlock::Similarity { ratios, placement } => {
                let schedule: Arc<dyn RatioSchedule> = match ratios {
                    RatiosBlock::Table { states } => {
                        Arc::new(RatioTable::new(keyed(states)?.into_iter().collect()).map_err(schema)?)
                    }
                    RatiosBlock::Geometric { q } => Arc::new(GeometricTailSchedule::new(*q, sys.edges).map_err(schema)?),
                    RatiosBlock::PaperExample => {
                        Arc::new(PaperExampleSchedule::new(sys.edges, PAPER_EXAMPLE_MAX_STATE).map_err(schema)?)
                    }
                };
                for state in driving.support() {
                    if !schedule.states().contains(&state) {
                        return Err(CliError::Schema(format!("driving state {state} has no ratios")));
                    }
                }
                let placement = match placement {
                    PlacementBlock::Packed => Placement::Packed,
                    PlacementBlock::Explicit { lefts } => Placement::Explicit(keyed(lefts)?),
                };
                Rcgdms::similarity(&self.name, symbolic, driving, intervals, schedule, placement).map_err(schema)
            }
            MapsBlock::Conformal { bounds, distortion, alpha } => {
                let bounds = keyed(bounds)?
                    .into_iter()
                    .map(|(k, row)| (k, row.into_iter().map(|b| b.map(|[lo, hi]| (lo, hi))).collect()))
                    .collect();
                let maps = DeclaredConformalMaps { bounds, distortion: *distortion, alpha: *alpha };
                Rcgdms::conformal(&self.name, symbolic, driving, intervals, maps).map_err(schema)
            }
        }
    }
}
