//! Countable-alphabet Markov shift combinatorics.
//!
//! Edges are materialized as indices `0..cutoff`; the human-facing label of
//! an index is `index + label_base` (the worked example in the docs uses
//! 1-based labels, `E = N`). Everything downstream works on indices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a materialized edge.
pub type Symbol = usize;

/// How the 0/1 incidence matrix `A` is specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Incidence {
    /// Every transition allowed.
    Full,
    /// `A[a][b] = 1` iff `t(a) = i(b)`.
    VertexRule,
    /// Explicit matrix, indexed by materialized edge.
    Matrix(Vec<Vec<bool>>),
}

/// Closed-form description of the edges beyond the materialized cutoff.
///
/// The per-edge data (ratios, potential values) of the tail lives with the map
/// family; this marker only records that the alphabet is infinite and how the
/// tail is organised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailDescriptor {
    /// Tail weights `c * ratio^e` starting at label `first_label`.
    Geometric { ratio: f64, first_label: usize },
    /// Tail given by a closed-form rule of the map family.
    Rule(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicSystem {
    vertex_count: usize,
    initial: Vec<usize>,
    terminal: Vec<usize>,
    incidence: Incidence,
    tail: Option<TailDescriptor>,
    label_base: usize,
}

impl SymbolicSystem {
    /// Full shift on `m` symbols over a single vertex.
    pub fn full_shift(m: usize) -> Result<Self> {
        Self::new(1, vec![0; m], vec![0; m], Incidence::Full)
    }

    /// Single-vertex system with an explicit incidence matrix.
    pub fn from_matrix(matrix: Vec<Vec<bool>>) -> Result<Self> {
        let m = matrix.len();
        Self::new(1, vec![0; m], vec![0; m], Incidence::Matrix(matrix))
    }

    /// Graph directed system with `A[a][b] = 1` iff `t(a) = i(b)`.
    pub fn from_vertex_rule(vertex_count: usize, initial: Vec<usize>, terminal: Vec<usize>) -> Result<Self> {
        Self::new(vertex_count, initial, terminal, Incidence::VertexRule)
    }

    pub fn new(vertex_count: usize, initial: Vec<usize>, terminal: Vec<usize>, incidence: Incidence) -> Result<Self> {
        let cutoff = initial.len();
        if cutoff == 0 {
            return Err(Error::InvalidSystem("cutoff must be at least 1".into()));
        }
        if terminal.len() != cutoff {
            return Err(Error::InvalidSystem("initial and terminal maps differ in length".into()));
        }
        if vertex_count == 0 {
            return Err(Error::InvalidSystem("no vertices".into()));
        }
        if let Some(v) = initial.iter().chain(&terminal).find(|&&v| v >= vertex_count) {
            return Err(Error::InvalidSystem(format!("vertex {v} out of range")));
        }
        match &incidence {
            Incidence::Matrix(rows) => {
                if rows.len() != cutoff || rows.iter().any(|r| r.len() != cutoff) {
                    return Err(Error::InvalidSystem("incidence matrix must be square of size cutoff".into()));
                }
            }
            Incidence::Full => {
                if initial.iter().chain(&terminal).any(|&v| v != initial[0]) {
                    return Err(Error::InvalidSystem("full incidence needs a single vertex".into()));
                }
            }
            Incidence::VertexRule => {}
        }
        Ok(Self { vertex_count, initial, terminal, incidence, tail: None, label_base: 0 })
    }

    /// Marks the alphabet as infinite beyond the cutoff. Only full shifts can
    /// carry a tail, since tail edges have no explicit incidence.
    pub fn with_tail(mut self, tail: TailDescriptor) -> Result<Self> {
        if self.incidence != Incidence::Full {
            return Err(Error::InvalidSystem("a tail requires full incidence".into()));
        }
        self.tail = Some(tail);
        Ok(self)
    }

    pub fn with_label_base(mut self, base: usize) -> Self {
        self.label_base = base;
        self
    }

    pub fn cutoff(&self) -> usize {
        self.initial.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn initial(&self, e: Symbol) -> usize {
        self.initial[e]
    }

    pub fn terminal(&self, e: Symbol) -> usize {
        self.terminal[e]
    }

    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }

    pub fn tail(&self) -> Option<&TailDescriptor> {
        self.tail.as_ref()
    }

    pub fn has_tail(&self) -> bool {
        self.tail.is_some()
    }

    pub fn label_base(&self) -> usize {
        self.label_base
    }

    pub fn label(&self, e: Symbol) -> usize {
        e + self.label_base
    }

    /// Index of a label, if materialized.
    pub fn symbol_of_label(&self, label: usize) -> Option<Symbol> {
        label.checked_sub(self.label_base).filter(|&e| e < self.cutoff())
    }

    pub fn is_full(&self) -> bool {
        match &self.incidence {
            Incidence::Full => true,
            Incidence::VertexRule => self.vertex_count == 1,
            Incidence::Matrix(rows) => rows.iter().all(|r| r.iter().all(|&x| x)),
        }
    }

    /// `A[a][b]`.
    pub fn allows(&self, a: Symbol, b: Symbol) -> bool {
        match &self.incidence {
            Incidence::Full => true,
            Incidence::VertexRule => self.terminal[a] == self.initial[b],
            Incidence::Matrix(rows) => rows[a][b],
        }
    }

    pub fn all_symbols(&self) -> Vec<Symbol> {
        (0..self.cutoff()).collect()
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        word.iter().all(|&e| e < self.cutoff()) && word.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    /// Renders a word with labels; single-digit alphabets are concatenated.
    pub fn format_word(&self, word: &[Symbol]) -> String {
        if word.iter().all(|&e| self.label(e) < 10) {
            word.iter().map(|&e| self.label(e).to_string()).collect()
        } else {
            word.iter().map(|&e| self.label(e).to_string()).collect::<Vec<_>>().join(".")
        }
    }

    fn check_alphabet(&self, alphabet: &[Symbol]) -> Result<Vec<Symbol>> {
        if alphabet.is_empty() {
            return Err(Error::InvalidSystem("empty subalphabet".into()));
        }
        let mut sorted = alphabet.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&e) = sorted.iter().find(|&&e| e >= self.cutoff()) {
            return Err(Error::CutoffExceeded { requested: e + 1, cutoff: self.cutoff() });
        }
        Ok(sorted)
    }
}

/// A finite word over the edge alphabet.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Lexicographic stream of the admissible words of a fixed length over a
/// finite subalphabet, optionally restricted to `F^n_{A,e}` (first symbol `e`
/// and `A[last][e] = 1`).
pub struct Words<'a> {
    system: &'a SymbolicSystem,
    alphabet: Vec<Symbol>,
    len: usize,
    anchor: Option<Symbol>,
    choice: Vec<usize>,
    started: bool,
    done: bool,
}

impl<'a> Words<'a> {
    fn valid_at(&self, pos: usize, sym: Symbol) -> bool {
        if pos == 0 {
            if let Some(a) = self.anchor {
                if sym != a {
                    return false;
                }
            }
        } else if !self.system.allows(self.alphabet[self.choice[pos - 1]], sym) {
            return false;
        }
        if pos + 1 == self.len {
            if let Some(a) = self.anchor {
                return self.system.allows(sym, a);
            }
        }
        true
    }

    /// Depth-first search for the next word whose position `pos` uses a
    /// choice index at least `start`.
    fn seek(&mut self, mut pos: usize, mut start: usize) -> bool {
        loop {
            let found = (start..self.alphabet.len()).find(|&c| self.valid_at(pos, self.alphabet[c]));
            match found {
                Some(c) => {
                    self.choice[pos] = c;
                    if pos + 1 == self.len {
                        return true;
                    }
                    pos += 1;
                    start = 0;
                }
                None => {
                    if pos == 0 {
                        return false;
                    }
                    pos -= 1;
                    start = self.choice[pos] + 1;
                }
            }
        }
    }

    fn current(&self) -> Word {
        Word(self.choice.iter().map(|&c| self.alphabet[c]).collect())
    }
}

impl Iterator for Words<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let ok = if self.started {
            let last = self.len - 1;
            let start = self.choice[last] + 1;
            self.seek(last, start)
        } else {
            self.started = true;
            self.seek(0, 0)
        };
        if ok {
            Some(self.current())
        } else {
            self.done = true;
            None
        }
    }
}

/// Streams the admissible words of length `n` over `alphabet`; with
/// `anchor = Some(e)` only words starting with `e` whose last symbol may be
/// followed by `e`.
pub fn enumerate_words<'a>(
    system: &'a SymbolicSystem,
    alphabet: &[Symbol],
    n: usize,
    anchor: Option<Symbol>,
) -> Result<Words<'a>> {
    if n == 0 {
        return Err(Error::InvalidSystem("word length must be at least 1".into()));
    }
    let alphabet = system.check_alphabet(alphabet)?;
    let anchor_missing = anchor.is_some_and(|a| !alphabet.contains(&a));
    Ok(Words { system, alphabet, len: n, anchor, choice: vec![0; n], started: false, done: anchor_missing })
}

/// `w` lies in the cylinder of `prefix` (extends or equals it).
pub fn cylinder_contains(w: &[Symbol], prefix: &[Symbol]) -> bool {
    w.len() >= prefix.len() && w[..prefix.len()] == *prefix
}

/// Witness of finite primitivity of `A` restricted to a subalphabet.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimitivityWitness {
    /// `N_{A,F}`.
    pub order: usize,
    /// Connector words, sorted lexicographically.
    pub connectors: Vec<Word>,
    /// Symbols occurring in the connectors, sorted.
    pub connector_alphabet: Vec<Symbol>,
    /// `false` when the exhaustive cardinality search ran out of budget and a
    /// greedy cover was returned instead.
    pub minimal: bool,
}

impl PrimitivityWitness {
    /// Lexicographically first connector `w` with `a w b` admissible.
    pub fn connector_between(&self, system: &SymbolicSystem, a: Symbol, b: Symbol) -> Option<&Word> {
        self.connectors.iter().find(|w| {
            let s = w.symbols();
            system.allows(a, s[0]) && system.allows(s[s.len() - 1], b)
        })
    }

    /// Re-verifies the witness by checking every pair of the subalphabet.
    pub fn verify(&self, system: &SymbolicSystem, alphabet: &[Symbol]) -> bool {
        self.connectors.iter().all(|w| w.len() == self.order && system.is_admissible(w.symbols()))
            && alphabet
                .iter()
                .all(|&a| alphabet.iter().all(|&b| self.connector_between(system, a, b).is_some()))
    }
}

const COVER_BUDGET: u64 = 2_000_000;

struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn or_assign(&mut self, other: &BitSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }
    fn is_full(&self, n: usize) -> bool {
        (0..n).all(|i| self.get(i))
    }
}

/// Searches for the smallest order `N <= max_order` and a minimum-cardinality
/// connector set (ties broken lexicographically). `Ok(None)` means no witness
/// of order at most `max_order` exists.
pub fn find_primitivity(
    system: &SymbolicSystem,
    alphabet: &[Symbol],
    max_order: usize,
) -> Result<Option<PrimitivityWitness>> {
    if max_order == 0 {
        return Err(Error::InvalidSystem("max order must be at least 1".into()));
    }
    let alphabet = system.check_alphabet(alphabet)?;
    let m = alphabet.len();
    let pos = |e: Symbol| alphabet.binary_search(&e).expect("symbol in alphabet");
    // pred[a]: symbols e with A[e][a]; succ[b]: symbols e with A[b][e]
    let pred: Vec<BitSet> = alphabet
        .iter()
        .map(|&a| {
            let mut s = BitSet::new(m);
            for (i, &e) in alphabet.iter().enumerate() {
                if system.allows(e, a) {
                    s.set(i);
                }
            }
            s
        })
        .collect();
    let succ: Vec<BitSet> = alphabet
        .iter()
        .map(|&b| {
            let mut s = BitSet::new(m);
            for (i, &e) in alphabet.iter().enumerate() {
                if system.allows(b, e) {
                    s.set(i);
                }
            }
            s
        })
        .collect();

    for order in 1..=max_order {
        // Coverage only depends on a connector's endpoints; keep the
        // lexicographically first word for every endpoint pair.
        let mut seen = vec![false; m * m];
        let mut candidates: Vec<(Word, usize, usize)> = Vec::new();
        for w in enumerate_words(system, &alphabet, order, None)? {
            let a = pos(w.0[0]);
            let b = pos(w.0[order - 1]);
            if !seen[a * m + b] {
                seen[a * m + b] = true;
                candidates.push((w, a, b));
            }
        }
        let covers = |set: &[usize]| -> bool {
            (0..m).all(|e| {
                let mut reach = BitSet::new(m);
                for &c in set {
                    let (_, a, b) = &candidates[c];
                    if pred[*a].get(e) {
                        reach.or_assign(&succ[*b]);
                    }
                }
                reach.is_full(m)
            })
        };
        let all: Vec<usize> = (0..candidates.len()).collect();
        if !covers(&all) {
            continue;
        }
        let mut budget = COVER_BUDGET;
        let mut chosen: Option<Vec<usize>> = None;
        'sizes: for k in 1..=candidates.len() {
            let mut combo: Vec<usize> = (0..k).collect();
            loop {
                if budget == 0 {
                    break 'sizes;
                }
                budget -= 1;
                if covers(&combo) {
                    chosen = Some(combo);
                    break 'sizes;
                }
                // next combination in lexicographic order
                let mut i = k;
                loop {
                    if i == 0 {
                        continue 'sizes;
                    }
                    i -= 1;
                    if combo[i] < candidates.len() - k + i {
                        break;
                    }
                }
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
            }
        }
        let minimal = chosen.is_some();
        let chosen = chosen.unwrap_or_else(|| greedy_cover(m, &candidates, &pred, &succ));
        let mut connectors: Vec<Word> = chosen.iter().map(|&c| candidates[c].0.clone()).collect();
        connectors.sort();
        let mut connector_alphabet: Vec<Symbol> = connectors.iter().flat_map(|w| w.0.iter().copied()).collect();
        connector_alphabet.sort_unstable();
        connector_alphabet.dedup();
        return Ok(Some(PrimitivityWitness { order, connectors, connector_alphabet, minimal }));
    }
    Ok(None)
}

fn greedy_cover(m: usize, candidates: &[(Word, usize, usize)], pred: &[BitSet], succ: &[BitSet]) -> Vec<usize> {
    let mut covered = vec![false; m * m];
    let mut chosen = Vec::new();
    loop {
        let gain = |c: usize| {
            let (_, a, b) = &candidates[c];
            (0..m)
                .filter(|&e| pred[*a].get(e))
                .map(|e| (0..m).filter(|&f| succ[*b].get(f) && !covered[e * m + f]).count())
                .sum::<usize>()
        };
        let best = (0..candidates.len()).map(|c| (gain(c), c)).max_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)));
        match best {
            Some((g, c)) if g > 0 => {
                let (_, a, b) = &candidates[c];
                for e in 0..m {
                    if pred[*a].get(e) {
                        for f in 0..m {
                            if succ[*b].get(f) {
                                covered[e * m + f] = true;
                            }
                        }
                    }
                }
                chosen.push(c);
            }
            _ => return chosen,
        }
    }
}

/// Ascending finite subalphabets `F_1 ⊂ F_2 ⊂ ...`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubalphabetLadder {
    pub rungs: Vec<Vec<Symbol>>,
}

impl SubalphabetLadder {
    pub fn len(&self) -> usize {
        self.rungs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rungs.is_empty()
    }

    pub fn last(&self) -> &[Symbol] {
        self.rungs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// First rung holds the connector alphabet plus the lowest-index symbols;
/// every later rung adds the lowest-index unused symbols. Empty `rung_sizes`
/// on a finite alphabet gives the single rung of all symbols.
pub fn build_ladder(
    system: &SymbolicSystem,
    connector_alphabet: &[Symbol],
    rung_sizes: &[usize],
) -> Result<SubalphabetLadder> {
    if rung_sizes.is_empty() {
        return Ok(SubalphabetLadder { rungs: vec![system.all_symbols()] });
    }
    if rung_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("rung sizes must be strictly increasing".into()));
    }
    if let Some(&big) = rung_sizes.iter().find(|&&s| s > system.cutoff()) {
        return Err(Error::CutoffExceeded { requested: big, cutoff: system.cutoff() });
    }
    let mut members = vec![false; system.cutoff()];
    let mut current: Vec<Symbol> = Vec::new();
    for &e in connector_alphabet {
        if e >= system.cutoff() {
            return Err(Error::CutoffExceeded { requested: e + 1, cutoff: system.cutoff() });
        }
        if !members[e] {
            members[e] = true;
            current.push(e);
        }
    }
    let mut next_free = 0;
    let mut rungs = Vec::with_capacity(rung_sizes.len());
    for &size in rung_sizes {
        while current.len() < size {
            while members[next_free] {
                next_free += 1;
            }
            members[next_free] = true;
            current.push(next_free);
        }
        let mut rung = current.clone();
        rung.sort_unstable();
        rungs.push(rung);
    }
    Ok(SubalphabetLadder { rungs })
}
