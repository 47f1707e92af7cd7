//! Finite block sequences whose structured sums are colored by the least
//! element of their chain of spine images.
//!
//! Blocks are indexed `[factor][step][node]`. A combination picks, for each
//! coordinate `s`, a nonempty index set `F_s` (with `F_0 < F_1 < ...`) and for
//! every index an endomorphism from that step's schedule and a node; it is
//! admissible when the spine images of the chosen nodes form a chain, and its
//! word is the left-to-right sum of the endomorphism images.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coloring::Coloring;
use crate::tree::{Node, RootedTree, ROOT};
use crate::words::{CandidateSpace, ComponentCandidates, Mode, Position, SubstitutionMap, Word, WordContext, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("search budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("threshold budget of {budget} nodes exceeded; decided up to {decided_up_to:?}")]
    ThresholdBudgetExceeded { budget: u64, decided_up_to: Option<Position> },
    #[error("universe exceeds {0} tuples")]
    UniverseTooLarge(usize),
    #[error("more than {0} block sequences to examine")]
    PatternLimit(usize),
    #[error("spine images do not form a chain")]
    NotAChain,
    #[error("blocks overlap: {0}")]
    DomainsOverlap(WordError),
    #[error("search result failed verification: {0}")]
    VerificationFailed(String),
}

/// One factor of a product instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub ctx: WordContext,
    pub mode: Mode,
}

/// Minimum length of nonlocated blocks at a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinLength {
    Fixed(usize),
    /// The position bound itself, so blocks have exactly that length.
    Bound,
}

#[derive(Clone, Debug)]
pub struct SearchInstance {
    pub factors: Vec<Factor>,
    /// Factor of each coordinate.
    pub lambda: Vec<usize>,
    pub coloring: Coloring,
    /// `schedule[factor][step]`: endomorphisms allowed at that step.
    pub schedule: Vec<Vec<Vec<SubstitutionMap>>>,
    /// Per-step lowest usable position; missing steps use 0.
    pub fresh: Vec<Position>,
    /// Per-step minimum lengths of nonlocated blocks; missing steps use 1.
    pub min_lengths: Vec<MinLength>,
    pub position_bound: Position,
    pub block_count: usize,
    /// Whether root blocks (letter words) take part in combinations.
    pub root_blocks: bool,
    /// Maximum number of candidate blocks tried.
    pub budget: u64,
}

pub const MAX_LOCATED_BOUND: Position = 63;

impl SearchInstance {
    pub fn coordinates(&self) -> usize {
        self.lambda.len()
    }

    pub fn block_nodes(&self, f: usize) -> Vec<Node> {
        let skip = usize::from(!self.root_blocks);
        self.factors[f].ctx.tree.nodes().skip(skip).collect()
    }

    pub fn fresh_at(&self, step: usize) -> Position {
        self.fresh.get(step).copied().unwrap_or(0)
    }

    pub fn min_length_at(&self, step: usize) -> usize {
        match self.min_lengths.get(step) {
            Some(MinLength::Fixed(d)) => *d,
            Some(MinLength::Bound) => self.position_bound as usize,
            None => 1,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: String| Err(SearchError::InvalidInstance(m));
        if self.factors.is_empty() || self.lambda.is_empty() {
            return bad("need at least one factor and one coordinate".into());
        }
        if let Some(&f) = self.lambda.iter().find(|&&f| f >= self.factors.len()) {
            return bad(format!("coordinate assigned to missing factor {f}"));
        }
        if self.block_count < self.lambda.len() {
            return bad(format!(
                "{} blocks cannot fill {} coordinates",
                self.block_count,
                self.lambda.len()
            ));
        }
        if self.schedule.len() != self.factors.len() {
            return bad("one endomorphism schedule per factor is required".into());
        }
        for (f, (factor, steps)) in self.factors.iter().zip(&self.schedule).enumerate() {
            if steps.len() < self.block_count {
                return bad(format!("schedule of factor {f} covers {} of {} steps", steps.len(), self.block_count));
            }
            if factor.mode == Mode::Located && self.position_bound > MAX_LOCATED_BOUND {
                return bad(format!("located position bound is at most {MAX_LOCATED_BOUND}"));
            }
            for (n, maps) in steps.iter().enumerate() {
                if maps.is_empty() {
                    return bad(format!("factor {f} has no endomorphism at step {n}"));
                }
                for map in maps {
                    if map.mode() != factor.mode || **map.tree() != *factor.ctx.tree {
                        return bad(format!("endomorphism at factor {f} step {n} belongs to another context"));
                    }
                }
            }
        }
        if let crate::coloring::ColoringKind::Expression(e) = &self.coloring.kind {
            if e.coordinates() != self.lambda.len() {
                return bad(format!(
                    "coloring expects {} coordinates, instance has {}",
                    e.coordinates(),
                    self.lambda.len()
                ));
            }
        }
        Ok(())
    }
}

/// `blocks[factor][step][node]`; nodes without blocks hold the empty word.
pub type Blocks = Vec<Vec<Vec<Word>>>;

/// Left-to-right sum of `τ(x)` over `(τ, x, t)` terms, with the least
/// element of the chain `{f_τ(t)}`.
pub fn structured_sum(
    tree: &RootedTree,
    mode: Mode,
    terms: &[(&SubstitutionMap, &Word, Node)],
) -> Result<(Word, Node), SearchError> {
    let mut least = None;
    let mut sum = Word::empty(mode);
    for (tau, x, t) in terms {
        least = Some(tree.extend_chain(least, tau.spine_at(*t)).ok_or(SearchError::NotAChain)?);
        let image = tau.apply(x).map_err(SearchError::DomainsOverlap)?;
        sum = sum.sum(&image).map_err(SearchError::DomainsOverlap)?;
    }
    least.map(|l| (sum, l)).ok_or(SearchError::NotAChain)
}

/// One admissible combination.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Combination {
    pub index_sets: Vec<Vec<usize>>,
    /// `(endomorphism index, node)` for each index of each set.
    pub choices: Vec<Vec<(usize, Node)>>,
    pub words: Vec<Word>,
    pub least: Vec<Node>,
    pub color: Option<u32>,
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

impl Combination {
    /// Canonical one-line rendering, hashed into coverage reports.
    pub fn line(&self, inst: &SearchInstance) -> String {
        let sets = join(self.index_sets.iter().map(|f| join(f, ",")), "|");
        let taus = join(self.choices.iter().map(|c| join(c.iter().map(|x| x.0), ",")), "|");
        let nodes = join(self.choices.iter().map(|c| join(c.iter().map(|x| x.1), ",")), "|");
        let words = join(
            self.words
                .iter()
                .zip(&inst.lambda)
                .map(|(w, &f)| inst.factors[f].ctx.format_word(w)),
            "|",
        );
        let color = self.color.map_or("none".to_string(), |c| c.to_string());
        format!(
            "F={sets} tau={taus} t={nodes} least={} color={color} words={words}",
            join(&self.least, "|")
        )
    }
}

/// Every admissible combination in canonical order: coordinates in turn,
/// indices ascending, endomorphisms then nodes in order. Straightforward
/// recursion, independent of the search's incremental state.
pub fn visit_combinations(inst: &SearchInstance, blocks: &Blocks, visit: &mut dyn FnMut(Combination)) {
    struct Walk<'a> {
        inst: &'a SearchInstance,
        blocks: &'a Blocks,
        sets: Vec<Vec<usize>>,
        choices: Vec<Vec<(usize, Node)>>,
        words: Vec<Word>,
        least: Vec<Node>,
    }

    impl Walk<'_> {
        fn coordinate(&mut self, s: usize, lo: usize, visit: &mut dyn FnMut(Combination)) {
            if s == self.inst.lambda.len() {
                let color = self.inst.coloring.color(&self.words);
                visit(Combination {
                    index_sets: self.sets.clone(),
                    choices: self.choices.clone(),
                    words: self.words.clone(),
                    least: self.least.clone(),
                    color,
                });
                return;
            }
            self.sets.push(Vec::new());
            self.choices.push(Vec::new());
            self.terms(s, lo, None, visit);
            self.sets.pop();
            self.choices.pop();
        }

        fn terms(&mut self, s: usize, lo: usize, least: Option<Node>, visit: &mut dyn FnMut(Combination)) {
            let f = self.inst.lambda[s];
            let tree = &self.inst.factors[f].ctx.tree;
            for d in lo..self.inst.block_count {
                for (e, tau) in self.inst.schedule[f][d].iter().enumerate() {
                    for t in self.inst.block_nodes(f) {
                        let Some(l) = tree.extend_chain(least, tau.spine_at(t)) else { continue };
                        self.sets[s].push(d);
                        self.choices[s].push((e, t));
                        let terms: Vec<(&SubstitutionMap, &Word, Node)> = self.sets[s]
                            .iter()
                            .zip(&self.choices[s])
                            .map(|(&d, &(e, t))| (&self.inst.schedule[f][d][e], &self.blocks[f][d][t], t))
                            .collect();
                        match structured_sum(tree, self.inst.factors[f].mode, &terms) {
                            Ok((word, l2)) => {
                                debug_assert_eq!(l, l2);
                                self.words.push(word);
                                self.least.push(l2);
                                self.coordinate(s + 1, d + 1, visit);
                                self.words.pop();
                                self.least.pop();
                            }
                            Err(e) => panic!("well-formed blocks produced an undefined sum: {e}"),
                        }
                        self.terms(s, d + 1, Some(l), visit);
                        self.sets[s].pop();
                        self.choices[s].pop();
                    }
                }
            }
        }
    }

    let mut walk = Walk {
        inst,
        blocks,
        sets: Vec::new(),
        choices: Vec::new(),
        words: Vec::new(),
        least: Vec::new(),
    };
    walk.coordinate(0, 0, visit);
}

pub fn enumerate_combinations(inst: &SearchInstance, blocks: &Blocks) -> Result<Vec<Combination>, SearchError> {
    check_well_formed(inst, blocks).map_err(SearchError::InvalidInstance)?;
    let mut out = Vec::new();
    visit_combinations(inst, blocks, &mut |c| out.push(c));
    Ok(out)
}

/// Shape, component membership, alphabet, freshness, bound and length checks.
pub fn check_well_formed(inst: &SearchInstance, blocks: &Blocks) -> Result<(), String> {
    inst.validate().map_err(|e| e.to_string())?;
    if blocks.len() != inst.factors.len() {
        return Err(format!("expected blocks for {} factors, got {}", inst.factors.len(), blocks.len()));
    }
    for (f, (factor, steps)) in inst.factors.iter().zip(blocks).enumerate() {
        if steps.len() != inst.block_count {
            return Err(format!("factor {f}: expected {} steps, got {}", inst.block_count, steps.len()));
        }
        let tree = &factor.ctx.tree;
        let active: BTreeSet<Node> = inst.block_nodes(f).into_iter().collect();
        let mut floor: Position = 0;
        for (n, nodes) in steps.iter().enumerate() {
            if nodes.len() != tree.node_count() {
                return Err(format!("factor {f} step {n}: expected {} node words", tree.node_count()));
            }
            let mut top = None;
            for (t, w) in nodes.iter().enumerate() {
                let at = format!("factor {f} step {n} node {t}");
                if w.mode() != factor.mode {
                    return Err(format!("{at}: wrong word kind"));
                }
                if !active.contains(&t) {
                    if !w.is_empty() {
                        return Err(format!("{at}: unused node must hold the empty word"));
                    }
                    continue;
                }
                let entries = w.positioned_symbols();
                if let Some(bad) = entries.iter().find(|e| factor.ctx.check_symbol(e.1).is_err()) {
                    return Err(format!("{at}: unknown symbol {:?}", bad.1));
                }
                // component t: the variables form a chain whose least element is t
                let vars: BTreeSet<Node> = entries.iter().filter_map(|e| e.1.as_var()).collect();
                let in_component = if t == ROOT {
                    vars.is_empty()
                } else {
                    vars.contains(&t) && vars.iter().all(|&v| tree.leq(t, v))
                };
                if !in_component {
                    return Err(format!("{at}: word is not in component {t}"));
                }
                match factor.mode {
                    Mode::Located => {
                        for &(p, _) in &entries {
                            if p >= inst.position_bound {
                                return Err(format!("{at}: position {p} beyond bound {}", inst.position_bound));
                            }
                            if p < floor.max(inst.fresh_at(n)) {
                                return Err(format!("{at}: position {p} is not fresh"));
                            }
                        }
                        top = top.max(entries.last().map(|e| e.0));
                    }
                    Mode::Nonlocated => {
                        let len = entries.len();
                        if len < inst.min_length_at(n) || len as Position > inst.position_bound {
                            return Err(format!("{at}: length {len} outside the length schedule"));
                        }
                    }
                }
            }
            if let Some(p) = top {
                floor = floor.max(p + 1);
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub least: Vec<Node>,
    pub color: u32,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub combinations: u64,
    pub groups: Vec<GroupSummary>,
    /// SHA-256 over the canonical combination lines.
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Violation { first: Box<Combination>, second: Box<Combination> },
    Uncolored { combination: Box<Combination> },
    Malformed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub verdict: Verdict,
    pub coverage: CoverageReport,
}

impl WitnessReport {
    pub fn is_ok(&self) -> bool {
        self.verdict == Verdict::Ok
    }
}

/// Groups every admissible combination by its least-element tuple and
/// checks that each group is monochromatic.
pub fn check_block_witness(inst: &SearchInstance, blocks: &Blocks) -> WitnessReport {
    let empty = CoverageReport {
        combinations: 0,
        groups: Vec::new(),
        hash: hex::encode(Sha256::digest(b"")),
    };
    if let Err(reason) = check_well_formed(inst, blocks) {
        return WitnessReport {
            verdict: Verdict::Malformed { reason },
            coverage: empty,
        };
    }
    let mut hasher = Sha256::new();
    let mut groups: BTreeMap<Vec<Node>, (Combination, u64)> = BTreeMap::new();
    let mut verdict = Verdict::Ok;
    let mut total = 0u64;
    visit_combinations(inst, blocks, &mut |c| {
        total += 1;
        hasher.update(c.line(inst).as_bytes());
        hasher.update(b"\n");
        if verdict != Verdict::Ok {
            return;
        }
        if c.color.is_none() {
            verdict = Verdict::Uncolored { combination: Box::new(c) };
            return;
        }
        match groups.get_mut(&c.least) {
            Some((first, count)) => {
                *count += 1;
                if first.color != c.color {
                    verdict = Verdict::Violation {
                        first: Box::new(first.clone()),
                        second: Box::new(c),
                    };
                }
            }
            None => {
                groups.insert(c.least.clone(), (c, 1));
            }
        }
    });
    let groups = groups
        .into_iter()
        .map(|(least, (c, count))| GroupSummary {
            least,
            color: c.color.unwrap_or(0),
            count,
        })
        .collect();
    WitnessReport {
        verdict,
        coverage: CoverageReport {
            combinations: total,
            groups,
            hash: hex::encode(hasher.finalize()),
        },
    }
}

/// Colors as seen by the search; `None` rejects the combination.
pub trait ColorOracle: Sync {
    fn color_of(&self, words: &[Word]) -> Option<u32>;
}

impl ColorOracle for Coloring {
    fn color_of(&self, words: &[Word]) -> Option<u32> {
        self.color(words)
    }
}

/// What every combination must satisfy.
pub enum Goal<'a> {
    /// Color depends only on the least-element tuple.
    Monochromatic(&'a dyn ColorOracle),
    /// Each combination's word tuple passes the predicate.
    EveryCombination(&'a (dyn Fn(&[Word]) -> bool + Sync)),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockWitness {
    pub blocks: Blocks,
    pub report: WitnessReport,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(BlockWitness),
    Exhausted { nodes: u64 },
}

/// Partially built combination: coordinates before `coord` are complete.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct PrefixState {
    coord: usize,
    done: Vec<(Word, Node)>,
    partial: Word,
    least: Option<Node>,
}

/// Set of slot indices.
type SlotSet = u128;

const MAX_SLOTS: usize = SlotSet::BITS as usize;

fn bit(k: usize) -> SlotSet {
    1 << k
}

/// Deepest slot in a set, if any.
fn deepest(set: SlotSet) -> Option<usize> {
    (set != 0).then(|| (SlotSet::BITS - 1 - set.leading_zeros()) as usize)
}

/// Why a subtree holds no witness. Failure persists while the `hard` slots
/// keep their blocks and the `soft` slots keep blocks whose largest
/// position is at least the current one; the latter only narrows the
/// freshness window of later slots.
#[derive(Clone, Copy, Debug, Default)]
struct Conflict {
    hard: SlotSet,
    soft: SlotSet,
}

enum Step {
    Found,
    Failed(Conflict),
    /// An earlier parallel branch already succeeded.
    Cancelled,
}

struct GroupEntry {
    color: u32,
    /// Slots of the combination that fixed the color.
    origin: SlotSet,
}

struct Engine<'a> {
    inst: &'a SearchInstance,
    goal: &'a Goal<'a>,
    slots: Vec<(usize, usize, Node)>,
    /// `slot_of[f][n][t]`.
    slot_of: Vec<Vec<Vec<usize>>>,
    last_factor: usize,
    blocks: Blocks,
    /// `states[n]`: distinct prefixes using indices below `n`, each with
    /// the slots of one combination producing it.
    states: Vec<Vec<(PrefixState, SlotSet)>>,
    /// `ready[n]`: prefixes that a step-`n` term of the last coordinate completes.
    ready: Vec<Vec<(PrefixState, SlotSet)>>,
    groups: HashMap<Vec<Node>, GroupEntry>,
    nodes: u64,
    budget: u64,
    /// Index of the earliest successful branch so far, and this branch's index.
    race: Option<(&'a AtomicUsize, usize)>,
}

fn dedup(states: Vec<(PrefixState, SlotSet)>) -> Vec<(PrefixState, SlotSet)> {
    let mut seen = HashSet::new();
    states.into_iter().filter(|(s, _)| seen.insert(s.clone())).collect()
}

impl<'a> Engine<'a> {
    fn new(inst: &'a SearchInstance, goal: &'a Goal<'a>, budget: u64) -> Result<Self, SearchError> {
        let mut slots = Vec::new();
        let mut slot_of: Vec<Vec<Vec<usize>>> = inst
            .factors
            .iter()
            .map(|fac| vec![vec![usize::MAX; fac.ctx.tree.node_count()]; inst.block_count])
            .collect();
        for n in 0..inst.block_count {
            for f in 0..inst.factors.len() {
                for t in inst.block_nodes(f) {
                    slot_of[f][n][t] = slots.len();
                    slots.push((n, f, t));
                }
            }
        }
        if slots.len() > MAX_SLOTS {
            return Err(SearchError::InvalidInstance(format!("more than {MAX_SLOTS} blocks to choose")));
        }
        let blocks = inst
            .factors
            .iter()
            .map(|fac| vec![vec![Word::empty(fac.mode); fac.ctx.tree.node_count()]; inst.block_count])
            .collect();
        let start = PrefixState {
            coord: 0,
            done: Vec::new(),
            partial: Word::empty(inst.factors[inst.lambda[0]].mode),
            least: None,
        };
        let mut engine = Engine {
            inst,
            goal,
            slots,
            slot_of,
            last_factor: *inst.lambda.last().expect("validated"),
            blocks,
            states: vec![vec![(start, 0)]],
            ready: Vec::new(),
            groups: HashMap::new(),
            nodes: 0,
            budget,
            race: None,
        };
        engine.ready.push(engine.ready_from(0));
        Ok(engine)
    }

    fn m(&self) -> usize {
        self.inst.lambda.len()
    }

    fn close(&self, st: &PrefixState) -> PrefixState {
        let mut done = st.done.clone();
        done.push((st.partial.clone(), st.least.expect("started")));
        PrefixState {
            coord: st.coord + 1,
            done,
            partial: Word::empty(self.inst.factors[self.inst.lambda[st.coord + 1]].mode),
            least: None,
        }
    }

    fn ready_from(&self, n: usize) -> Vec<(PrefixState, SlotSet)> {
        let m = self.m();
        let ready = self.states[n].iter().filter_map(|(st, used)| {
            if st.coord == m - 1 {
                Some((st.clone(), *used))
            } else if st.coord + 2 == m && st.least.is_some() {
                Some((self.close(st), *used))
            } else {
                None
            }
        });
        dedup(ready.collect())
    }

    /// Extend `st` in its current coordinate by a step-`n` term.
    fn add_term(&self, st: &PrefixState, used: SlotSet, n: usize, out: &mut Vec<(PrefixState, SlotSet)>) -> Result<(), SearchError> {
        let f = self.inst.lambda[st.coord];
        let tree = &self.inst.factors[f].ctx.tree;
        for tau in &self.inst.schedule[f][n] {
            for t in self.inst.block_nodes(f) {
                let Some(least) = tree.extend_chain(st.least, tau.spine_at(t)) else { continue };
                let image = tau.apply(&self.blocks[f][n][t]).map_err(SearchError::DomainsOverlap)?;
                let partial = st.partial.sum(&image).map_err(SearchError::DomainsOverlap)?;
                let state = PrefixState {
                    coord: st.coord,
                    done: st.done.clone(),
                    partial,
                    least: Some(least),
                };
                out.push((state, used | bit(self.slot_of[f][n][t])));
            }
        }
        Ok(())
    }

    fn advance_states(&self, n: usize) -> Result<Vec<(PrefixState, SlotSet)>, SearchError> {
        let m = self.m();
        let mut next = Vec::new();
        for (st, used) in &self.states[n] {
            next.push((st.clone(), *used));
            self.add_term(st, *used, n, &mut next)?;
            if st.least.is_some() && st.coord + 1 < m {
                self.add_term(&self.close(st), *used, n, &mut next)?;
            }
        }
        Ok(dedup(next))
    }

    fn enter_step(&mut self, n: usize) -> Result<(), SearchError> {
        let next = self.advance_states(n - 1)?;
        self.states.push(next);
        self.ready.push(self.ready_from(n));
        Ok(())
    }

    /// Check the combinations whose largest index is the block just placed
    /// in slot `k`. On success returns the group keys added; on rejection
    /// the earlier slots of the shallowest explanation found.
    fn admit(&mut self, k: usize) -> Result<Result<Vec<Vec<Node>>, SlotSet>, SearchError> {
        let (n, f, t) = self.slots[k];
        if f != self.last_factor {
            return Ok(Ok(Vec::new()));
        }
        let own = bit(k);
        let tree = &self.inst.factors[f].ctx.tree;
        let x = &self.blocks[f][n][t];
        // per group key, the shallowest new combination of each color
        let mut fresh: HashMap<Vec<Node>, BTreeMap<u32, SlotSet>> = HashMap::new();
        let mut best: Option<SlotSet> = None;
        let consider = |expl: SlotSet, best: &mut Option<SlotSet>| {
            let expl = expl & !own;
            if best.map_or(true, |b| deepest(expl) < deepest(b)) {
                *best = Some(expl);
            }
        };
        for tau in &self.inst.schedule[f][n] {
            let image = tau.apply(x).map_err(SearchError::DomainsOverlap)?;
            let u = tau.spine_at(t);
            for (r, used) in &self.ready[n] {
                let Some(least) = tree.extend_chain(r.least, u) else { continue };
                let word = r.partial.sum(&image).map_err(SearchError::DomainsOverlap)?;
                let mut words: Vec<Word> = r.done.iter().map(|d| d.0.clone()).collect();
                words.push(word);
                let used = *used | own;
                match self.goal {
                    Goal::EveryCombination(pred) => {
                        if !pred(&words) {
                            consider(used, &mut best);
                        }
                    }
                    Goal::Monochromatic(oracle) => match oracle.color_of(&words) {
                        None => consider(used, &mut best),
                        Some(c) => {
                            let mut key: Vec<Node> = r.done.iter().map(|d| d.1).collect();
                            key.push(least);
                            let slot = fresh.entry(key).or_default().entry(c).or_insert(used);
                            if deepest(used & !own) < deepest(*slot & !own) {
                                *slot = used;
                            }
                        }
                    },
                }
            }
        }
        for (key, colors) in &fresh {
            let mut options: Vec<(u32, SlotSet)> = colors.iter().map(|(&c, &s)| (c, s)).collect();
            if let Some(entry) = self.groups.get(key) {
                options.push((entry.color, entry.origin));
            }
            for (i, a) in options.iter().enumerate() {
                for b in &options[i + 1..] {
                    if a.0 != b.0 {
                        consider(a.1 | b.1, &mut best);
                    }
                }
            }
        }
        if let Some(expl) = best {
            return Ok(Err(expl));
        }
        let mut added = Vec::new();
        for (key, colors) in fresh {
            if !self.groups.contains_key(&key) {
                let (&color, &origin) = colors.iter().next().expect("nonempty");
                self.groups.insert(key.clone(), GroupEntry { color, origin });
                added.push(key);
            }
        }
        Ok(Ok(added))
    }

    fn undo(&mut self, keys: Vec<Vec<Node>>) {
        for k in keys {
            self.groups.remove(&k);
        }
    }

    /// Lowest usable position for slot `k` and the earlier slot fixing it.
    fn floor(&self, k: usize) -> (Position, Option<usize>) {
        let (n, f, _) = self.slots[k];
        let mut top: Option<(Position, usize)> = None;
        for (d, row) in self.blocks[f][..n].iter().enumerate() {
            for (t, w) in row.iter().enumerate() {
                if let Some(&(p, _)) = w.positioned_symbols().last() {
                    if top.map_or(true, |(q, _)| p > q) {
                        top = Some((p, self.slot_of[f][d][t]));
                    }
                }
            }
        }
        let fresh = self.inst.fresh_at(n);
        match top {
            Some((p, s)) if p + 1 > fresh => (p + 1, Some(s)),
            _ => (fresh, None),
        }
    }

    fn candidates(&self, k: usize) -> (ComponentCandidates, SlotSet) {
        let (n, f, t) = self.slots[k];
        let factor = &self.inst.factors[f];
        let (space, soft) = match factor.mode {
            Mode::Located => {
                let (lo, by) = self.floor(k);
                let space = CandidateSpace::Located {
                    free: (lo..self.inst.position_bound).collect(),
                };
                (space, by.map_or(0, bit))
            }
            Mode::Nonlocated => {
                let space = CandidateSpace::Nonlocated {
                    min_len: self.inst.min_length_at(n),
                    max_len: self.inst.position_bound as usize,
                };
                (space, 0)
            }
        };
        (ComponentCandidates::new(&factor.ctx, t, space), soft)
    }

    /// Try block `x` in slot `k` and search the slots after it.
    fn place(&mut self, k: usize, x: Word) -> Result<Step, SearchError> {
        let (n, f, t) = self.slots[k];
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(SearchError::BudgetExceeded { budget: self.budget });
        }
        if let Some((best, me)) = self.race {
            if best.load(Ordering::Relaxed) < me {
                return Ok(Step::Cancelled);
            }
        }
        self.blocks[f][n][t] = x;
        let step = match self.admit(k)? {
            Err(expl) => Step::Failed(Conflict { hard: expl | bit(k), soft: 0 }),
            Ok(added) => match self.dfs(k + 1)? {
                Step::Found => return Ok(Step::Found),
                other => {
                    self.undo(added);
                    other
                }
            },
        };
        self.blocks[f][n][t] = Word::empty(self.inst.factors[f].mode);
        Ok(step)
    }

    /// Conflict-directed backjumping over the remaining slots.
    fn dfs(&mut self, k: usize) -> Result<Step, SearchError> {
        let Some(&(n, _, _)) = self.slots.get(k) else { return Ok(Step::Found) };
        let entering = k > 0 && self.slots[k - 1].0 != n;
        if entering {
            self.enter_step(n)?;
        }
        let (candidates, soft) = self.candidates(k);
        let own = bit(k);
        let mut conflict = Conflict { hard: 0, soft };
        let mut result = None;
        for x in candidates {
            match self.place(k, x)? {
                Step::Found => {
                    result = Some(Step::Found);
                    break;
                }
                Step::Cancelled => {
                    result = Some(Step::Cancelled);
                    break;
                }
                Step::Failed(c) if c.hard & own != 0 => {
                    conflict.hard |= c.hard & !own;
                    conflict.soft |= c.soft;
                }
                Step::Failed(c) if c.soft & own != 0 => {
                    // later candidates only move the freshness floor up
                    conflict.hard |= c.hard;
                    conflict.soft |= c.soft & !own;
                    break;
                }
                Step::Failed(c) => {
                    result = Some(Step::Failed(c));
                    break;
                }
            }
        }
        let result = result.unwrap_or(Step::Failed(Conflict {
            hard: conflict.hard,
            soft: conflict.soft & !conflict.hard,
        }));
        if entering && !matches!(result, Step::Found) {
            self.states.pop();
            self.ready.pop();
        }
        Ok(result)
    }
}

/// Feed fixed blocks through the search's incremental checks, slot by
/// slot. Agrees with [`check_block_witness`] on well-formed blocks.
pub fn incremental_accepts(inst: &SearchInstance, blocks: &Blocks) -> Result<bool, SearchError> {
    inst.validate()?;
    let goal = Goal::Monochromatic(&inst.coloring);
    let mut engine = Engine::new(inst, &goal, u64::MAX)?;
    for k in 0..engine.slots.len() {
        let (n, f, t) = engine.slots[k];
        if k > 0 && engine.slots[k - 1].0 != n {
            engine.enter_step(n)?;
        }
        engine.blocks[f][n][t] = blocks[f][n][t].clone();
        if engine.admit(k)?.is_err() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// First-slot candidates processed per parallel round.
const ROUND: usize = 64;

/// Exhaustive search at one position bound. `Err(spent)` when the budget
/// runs out.
fn search_at(inst: &SearchInstance, goal: &Goal<'_>, parallel: bool, budget: u64) -> Result<(Option<Blocks>, u64), SearchError> {
    let probe = Engine::new(inst, goal, budget)?;
    if probe.slots.is_empty() {
        // nothing to choose and nothing to color
        return Ok((Some(probe.blocks), 0));
    }
    let (mut first, _) = probe.candidates(0);
    drop(probe);
    let mut spent = 0u64;
    loop {
        let round: Vec<Word> = first.by_ref().take(if parallel { ROUND } else { 1 }).collect();
        if round.is_empty() {
            return Ok((None, spent));
        }
        let remaining = budget - spent;
        let best = AtomicUsize::new(usize::MAX);
        let branch = |(i, x): (usize, &Word)| -> Result<(Option<Blocks>, bool, u64), SearchError> {
            let mut engine = Engine::new(inst, goal, remaining)?;
            engine.race = Some((&best, i));
            match engine.place(0, x.clone())? {
                Step::Found => {
                    best.fetch_min(i, Ordering::Relaxed);
                    Ok((Some(engine.blocks.clone()), false, engine.nodes))
                }
                // a failure independent of the first block rules out every later branch
                Step::Failed(c) => Ok((None, c.hard & 1 == 0, engine.nodes)),
                Step::Cancelled => Ok((None, false, 0)),
            }
        };
        let results: Vec<_> = if parallel {
            round.par_iter().enumerate().map(branch).collect()
        } else {
            round.iter().enumerate().map(branch).collect()
        };
        // branches before the first success always run to completion
        for r in results {
            let (found, settles, used) = r?;
            spent += used;
            if let Some(blocks) = found {
                return Ok((Some(blocks), spent));
            }
            if spent > budget {
                return Err(SearchError::BudgetExceeded { budget });
            }
            if settles {
                return Ok((None, spent));
            }
        }
    }
}

/// Backtracking search over block choices with iterative deepening on the
/// position bound, so the witness returned has the smallest largest
/// position. Branches split on the first block and are merged in candidate
/// order. Returns the blocks found, if any, and the candidate blocks tried.
pub fn search_with_goal(inst: &SearchInstance, goal: &Goal<'_>, parallel: bool) -> Result<(Option<Blocks>, u64), SearchError> {
    inst.validate()?;
    let min_lengths: Vec<MinLength> = (0..inst.block_count)
        .map(|n| MinLength::Fixed(inst.min_length_at(n)))
        .collect();
    let mut spent = 0u64;
    for bound in 1..=inst.position_bound {
        let shallow = SearchInstance {
            position_bound: bound,
            min_lengths: min_lengths.clone(),
            ..inst.clone()
        };
        let (found, used) = search_at(&shallow, goal, parallel, inst.budget - spent)?;
        spent += used;
        if found.is_some() {
            return Ok((found, spent));
        }
    }
    Ok((None, spent))
}

pub fn search_block_sequence(inst: &SearchInstance) -> Result<SearchOutcome, SearchError> {
    let goal = Goal::Monochromatic(&inst.coloring);
    match search_with_goal(inst, &goal, true)? {
        (None, nodes) => Ok(SearchOutcome::Exhausted { nodes }),
        (Some(blocks), _) => {
            let report = check_block_witness(inst, &blocks);
            if !report.is_ok() {
                return Err(SearchError::VerificationFailed(format!("{:?}", report.verdict)));
            }
            Ok(SearchOutcome::Found(BlockWitness { blocks, report }))
        }
    }
}

/// Every word tuple a structured sum can produce within the bound, ordered
/// by total support size, then lexicographically.
pub fn bounded_universe(inst: &SearchInstance, limit: usize) -> Result<Vec<Vec<Word>>, SearchError> {
    inst.validate()?;
    let mut per_factor: Vec<Option<Vec<Word>>> = vec![None; inst.factors.len()];
    for &f in &inst.lambda {
        if per_factor[f].is_some() {
            continue;
        }
        let factor = &inst.factors[f];
        let mut images = BTreeSet::new();
        let min_len = (0..inst.block_count).map(|n| inst.min_length_at(n)).min().unwrap_or(1);
        for t in inst.block_nodes(f) {
            let space = match factor.mode {
                Mode::Located => CandidateSpace::Located {
                    free: (0..inst.position_bound).collect(),
                },
                Mode::Nonlocated => CandidateSpace::Nonlocated {
                    min_len,
                    max_len: inst.position_bound as usize,
                },
            };
            for x in ComponentCandidates::new(&factor.ctx, t, space) {
                for tau in inst.schedule[f].iter().flatten() {
                    images.insert(tau.apply(&x).map_err(SearchError::DomainsOverlap)?);
                    if images.len() > limit {
                        return Err(SearchError::UniverseTooLarge(limit));
                    }
                }
            }
        }
        let images: Vec<Word> = images.into_iter().collect();
        let mut sums: BTreeSet<Word> = images.iter().cloned().collect();
        let mut layer: Vec<Word> = images.clone();
        for _ in 1..inst.block_count {
            let mut next = Vec::new();
            for a in &layer {
                for b in &images {
                    let follows = match (a, b) {
                        (Word::Located(a), Word::Located(b)) => match (a.max_position(), b.min_position()) {
                            (Some(x), Some(y)) => x < y,
                            _ => true,
                        },
                        _ => true,
                    };
                    if follows {
                        let s = a.sum(b).map_err(SearchError::DomainsOverlap)?;
                        if sums.insert(s.clone()) {
                            next.push(s);
                        }
                        if sums.len() > limit {
                            return Err(SearchError::UniverseTooLarge(limit));
                        }
                    }
                }
            }
            layer = next;
        }
        per_factor[f] = Some(sums.into_iter().collect());
    }
    let mut tuples: Vec<Vec<Word>> = vec![Vec::new()];
    for &f in &inst.lambda {
        let words = per_factor[f].as_ref().expect("filled above");
        if tuples.len().saturating_mul(words.len()) > limit {
            return Err(SearchError::UniverseTooLarge(limit));
        }
        tuples = tuples
            .into_iter()
            .flat_map(|prefix| {
                words.iter().map(move |w| {
                    let mut t = prefix.clone();
                    t.push(w.clone());
                    t
                })
            })
            .collect();
    }
    tuples.sort_by_cached_key(|t| (t.iter().map(|w| w.positioned_symbols().len()).sum::<usize>(), t.clone()));
    Ok(tuples)
}

/// Result of certifying one bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub bound: Position,
    pub universe: usize,
    /// Distinct witness patterns over the universe.
    pub patterns: usize,
    /// `r^|U|`, as a decimal string.
    pub colorings: String,
    /// Colorings up to color permutation.
    pub canonical_classes: String,
    /// Partial colorings visited by the canonical search.
    pub nodes: u64,
    /// Partial colorings already forcing a witness.
    pub forced: u64,
    /// Least canonical coloring (in universe order) with no witness.
    pub avoiding: Option<Vec<u32>>,
}

impl BoundCertificate {
    pub fn certified(&self) -> bool {
        self.avoiding.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ThresholdOutcome {
    Certified { bound: Position, certificates: Vec<BoundCertificate> },
    Unknown { max_bound: Position, certificates: Vec<BoundCertificate> },
}

impl ThresholdOutcome {
    pub fn certificates(&self) -> &[BoundCertificate] {
        match self {
            ThresholdOutcome::Certified { certificates, .. } | ThresholdOutcome::Unknown { certificates, .. } => certificates,
        }
    }
}

pub fn count_colorings(universe: usize, colors: u32) -> String {
    u128::from(colors)
        .checked_pow(universe as u32)
        .map_or_else(|| format!("{colors}^{universe}"), |v| v.to_string())
}

/// Number of set partitions of `n` items into at most `r` blocks.
pub fn count_canonical(n: usize, r: u32) -> String {
    let r = r as usize;
    // stirling[k] = S(i, k), the partitions of i items into exactly k blocks
    let mut stirling: Vec<Option<u128>> = vec![Some(1)];
    for i in 1..=n {
        let mut next = vec![Some(0u128); i.min(r) + 1];
        next[0] = Some(0);
        for k in 1..next.len() {
            let stay = stirling.get(k).copied().unwrap_or(Some(0)).and_then(|v| v.checked_mul(k as u128));
            let open = stirling[k - 1];
            next[k] = stay.zip(open).and_then(|(a, b)| a.checked_add(b));
        }
        stirling = next;
    }
    let total = stirling.into_iter().try_fold(0u128, |acc, v| v.and_then(|v| acc.checked_add(v)));
    total.map_or_else(|| format!("partitions of {n} into at most {r} classes"), |v| v.to_string())
}

/// Every well-formed block sequence of `inst`, in search order.
fn each_block_sequence(
    inst: &SearchInstance,
    visit: &mut dyn FnMut(&Blocks) -> Result<(), SearchError>,
) -> Result<(), SearchError> {
    fn rec(
        inst: &SearchInstance,
        slots: &[(usize, usize, Node)],
        k: usize,
        blocks: &mut Blocks,
        visit: &mut dyn FnMut(&Blocks) -> Result<(), SearchError>,
    ) -> Result<(), SearchError> {
        let Some(&(n, f, t)) = slots.get(k) else { return visit(blocks) };
        let factor = &inst.factors[f];
        let space = match factor.mode {
            Mode::Located => {
                let used = blocks[f][..n]
                    .iter()
                    .flatten()
                    .filter_map(|w| w.positioned_symbols().last().map(|e| e.0 + 1))
                    .max()
                    .unwrap_or(0);
                CandidateSpace::Located {
                    free: (used.max(inst.fresh_at(n))..inst.position_bound).collect(),
                }
            }
            Mode::Nonlocated => CandidateSpace::Nonlocated {
                min_len: inst.min_length_at(n),
                max_len: inst.position_bound as usize,
            },
        };
        for x in ComponentCandidates::new(&factor.ctx, t, space) {
            blocks[f][n][t] = x;
            rec(inst, slots, k + 1, blocks, visit)?;
        }
        blocks[f][n][t] = Word::empty(factor.mode);
        Ok(())
    }

    let mut slots = Vec::new();
    for n in 0..inst.block_count {
        for f in 0..inst.factors.len() {
            slots.extend(inst.block_nodes(f).into_iter().map(|t| (n, f, t)));
        }
    }
    let mut blocks: Blocks = inst
        .factors
        .iter()
        .map(|fac| vec![vec![Word::empty(fac.mode); fac.ctx.tree.node_count()]; inst.block_count])
        .collect();
    rec(inst, &slots, 0, &mut blocks, visit)
}

/// The universe indices a block sequence colors, grouped by least tuple.
/// The sequence is a witness exactly when every group is monochromatic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Pattern {
    groups: Vec<Vec<u32>>,
}

/// Distinct witness patterns, bucketed by their largest universe index.
fn witness_patterns(
    inst: &SearchInstance,
    index: &HashMap<Vec<Word>, usize>,
    limit: usize,
) -> Result<(Vec<Vec<Pattern>>, usize), SearchError> {
    let mut seen: HashSet<Pattern> = HashSet::new();
    let mut by_last: Vec<Vec<Pattern>> = vec![Vec::new(); index.len()];
    let mut sequences = 0usize;
    each_block_sequence(inst, &mut |blocks| {
        sequences += 1;
        if sequences > limit {
            return Err(SearchError::PatternLimit(limit));
        }
        let mut groups: BTreeMap<Vec<Node>, BTreeSet<u32>> = BTreeMap::new();
        let mut missing = None;
        visit_combinations(inst, blocks, &mut |c| match index.get(&c.words) {
            Some(&i) => {
                groups.entry(c.least).or_default().insert(i as u32);
            }
            None => missing = Some(c.words),
        });
        if let Some(words) = missing {
            return Err(SearchError::InvalidInstance(format!("combination {words:?} lies outside the universe")));
        }
        let Some(last) = groups.values().flatten().max().copied() else {
            return Ok(());
        };
        let pattern = Pattern {
            groups: groups.into_values().map(|g| g.into_iter().collect()).collect(),
        };
        if seen.insert(pattern.clone()) {
            by_last[last as usize].push(pattern);
        }
        Ok(())
    })?;
    Ok((by_last, seen.len()))
}

struct ColoringSearch<'a> {
    by_last: &'a [Vec<Pattern>],
    colors: u32,
    nodes: u64,
    forced: u64,
    budget: u64,
}

impl ColoringSearch<'_> {
    /// Whether coloring the last word of `prefix` completes a witness.
    fn completes_witness(&self, prefix: &[u32]) -> bool {
        let Some(last) = prefix.len().checked_sub(1) else { return false };
        self.by_last[last].iter().any(|p| {
            p.groups
                .iter()
                .all(|g| g.iter().all(|&i| prefix[i as usize] == prefix[g[0] as usize]))
        })
    }

    /// First avoiding completion of `prefix` in canonical order.
    fn extend(&mut self, prefix: &mut Vec<u32>) -> Result<Option<Vec<u32>>, SearchError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(SearchError::BudgetExceeded { budget: self.budget });
        }
        if self.completes_witness(prefix) {
            self.forced += 1;
            return Ok(None);
        }
        if prefix.len() == self.by_last.len() {
            return Ok(Some(prefix.clone()));
        }
        let next_new = prefix.iter().max().map_or(0, |&c| c + 1);
        for c in 0..=next_new.min(self.colors - 1) {
            prefix.push(c);
            let found = self.extend(prefix)?;
            prefix.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// Restricted-growth prefixes of length `len`, in lexicographic order.
fn canonical_prefixes(len: usize, colors: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                let top = p.iter().max().map_or(0, |&c| c + 1).min(colors - 1);
                (0..=top).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

/// Largest number of block sequences examined when certifying one bound.
pub const PATTERN_LIMIT: usize = 1 << 22;

/// Certify bound `position_bound` of `template` under `colors` colors:
/// search the canonical colorings (restricted-growth strings over the
/// universe order) depth first, cutting a branch as soon as its colored
/// prefix completes a witness.
pub fn certify_bound(template: &SearchInstance, colors: u32, universe_limit: usize, budget: u64) -> Result<BoundCertificate, SearchError> {
    let universe = bounded_universe(template, universe_limit)?;
    let index: HashMap<Vec<Word>, usize> = universe.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let (by_last, patterns) = witness_patterns(template, &index, PATTERN_LIMIT)?;
    let split = universe.len().min(6);
    let prefixes = canonical_prefixes(split, colors);
    let run = |prefix: &Vec<u32>| -> Result<(Option<Vec<u32>>, u64, u64), SearchError> {
        let mut search = ColoringSearch {
            by_last: &by_last,
            colors,
            nodes: 0,
            forced: 0,
            budget,
        };
        // shallow prefixes are shared between branches; count them once
        let mut p = Vec::new();
        for &c in prefix {
            p.push(c);
            if search.completes_witness(&p) {
                let owner = prefix[p.len()..].iter().all(|&c| c == 0);
                return Ok((None, u64::from(owner), u64::from(owner)));
            }
        }
        let found = search.extend(&mut p)?;
        Ok((found, search.nodes, search.forced))
    };
    let results: Vec<_> = if split == 0 {
        vec![ColoringSearch { by_last: &by_last, colors, nodes: 0, forced: 0, budget }
            .extend(&mut Vec::new())
            .map(|found| (found, 1, 0))]
    } else {
        prefixes.par_iter().map(run).collect()
    };
    let mut cert = BoundCertificate {
        bound: template.position_bound,
        universe: universe.len(),
        patterns,
        colorings: count_colorings(universe.len(), colors),
        canonical_classes: count_canonical(universe.len(), colors),
        nodes: 0,
        forced: 0,
        avoiding: None,
    };
    for r in results {
        let (found, nodes, forced) = r?;
        cert.nodes += nodes;
        cert.forced += forced;
        if cert.avoiding.is_none() {
            cert.avoiding = found;
        }
    }
    if cert.nodes > budget {
        return Err(SearchError::BudgetExceeded { budget });
    }
    Ok(cert)
}

/// Smallest bound in `1..=max_bound` at which every `colors`-coloring of the
/// bounded universe admits a witness. The template's own coloring is ignored.
pub fn threshold(template: &SearchInstance, colors: u32, max_bound: Position, budget: u64) -> Result<ThresholdOutcome, SearchError> {
    const UNIVERSE_LIMIT: usize = 1 << 16;
    let mut certificates = Vec::new();
    let mut spent = 0u64;
    for bound in 1..=max_bound {
        let inst = SearchInstance {
            position_bound: bound,
            ..template.clone()
        };
        let decided_up_to = certificates.last().map(|c: &BoundCertificate| c.bound);
        let cert = match certify_bound(&inst, colors, UNIVERSE_LIMIT, budget - spent) {
            Ok(c) => c,
            Err(SearchError::BudgetExceeded { .. }) => {
                return Err(SearchError::ThresholdBudgetExceeded { budget, decided_up_to })
            }
            Err(e) => return Err(e),
        };
        spent += cert.nodes;
        let done = cert.certified();
        certificates.push(cert);
        if done {
            return Ok(ThresholdOutcome::Certified { bound, certificates });
        }
    }
    Ok(ThresholdOutcome::Unknown { max_bound, certificates })
}

/// Readable dump of blocks, one line per nonempty block.
pub fn format_blocks(inst: &SearchInstance, blocks: &Blocks) -> String {
    let mut out = String::new();
    for (f, steps) in blocks.iter().enumerate() {
        for (n, nodes) in steps.iter().enumerate() {
            for t in inst.block_nodes(f) {
                let _ = writeln!(out, "x[{f}][{n}]({t}) = {}", inst.factors[f].ctx.format_word(&nodes[t]));
            }
        }
    }
    out
}
