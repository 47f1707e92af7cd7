//! Actions of a rooted tree on word spaces by substitution maps, their
//! axiom checker, and the single-step Ramsey witness search.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{Node, RootedTree, ROOT};
use crate::words::{
    CandidateSpace, ComponentCandidates, Mode, Position, StringWord, Symbol, SubstitutionMap, TreeWord, Word,
    WordContext, WordError,
};

pub const DEFAULT_CLOSURE_DEPTH: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("endomorphism {0} is defined on another tree or word kind")]
    ForeignEndo(usize),
    #[error("search budget of {budget} candidates exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("witness failed independent verification: {0}")]
    VerificationFailed(String),
}

/// A tree acting on located or nonlocated words through a generating
/// family of substitution maps.
#[derive(Clone, Debug)]
pub struct WordAction {
    ctx: WordContext,
    mode: Mode,
    generators: Vec<SubstitutionMap>,
    closure_depth: usize,
}

impl WordAction {
    /// Generators are not validated here; see [`check_action_axioms`].
    pub fn new(ctx: WordContext, mode: Mode, generators: Vec<SubstitutionMap>) -> Result<Self, ActionError> {
        for (i, g) in generators.iter().enumerate() {
            if g.mode() != mode || **g.tree() != *ctx.tree {
                return Err(ActionError::ForeignEndo(i));
            }
        }
        Ok(WordAction {
            ctx,
            mode,
            generators,
            closure_depth: DEFAULT_CLOSURE_DEPTH,
        })
    }

    pub fn with_closure_depth(mut self, depth: usize) -> Self {
        self.closure_depth = depth.max(1);
        self
    }

    /// Tetris action on letter-free located words, one map per monotone
    /// regressive homomorphism.
    pub fn tetris(tree: Arc<RootedTree>) -> Result<Self, ActionError> {
        let ctx = WordContext::letter_free(Arc::clone(&tree));
        let homs = tree
            .regressive_homs()
            .map_err(|_| WordError::TreeMismatch)?
            .into_iter()
            .filter(|f| f.is_order_preserving());
        let gens = homs
            .map(|f| SubstitutionMap::from_hom(&ctx, &f))
            .collect::<Result<Vec<_>, _>>()?;
        WordAction::new(ctx, Mode::Located, gens)
    }

    /// Substitution action: for every monotone regressive homomorphism `f`,
    /// variables with `f(v) != root` go to `f(v)`; the others are dropped
    /// (located only) or all replaced by one letter.
    pub fn substitutions(ctx: WordContext, mode: Mode) -> Result<Self, ActionError> {
        let homs = ctx.tree.regressive_homs().map_err(|_| WordError::TreeMismatch)?;
        let mut gens = Vec::new();
        let mut fills: Vec<Option<Symbol>> = (0..ctx.alphabet.len() as u32).map(|a| Some(Symbol::Letter(a))).collect();
        if mode == Mode::Located {
            fills.insert(0, None);
        }
        for f in homs.iter().filter(|f| f.is_order_preserving()) {
            let drops = ctx.tree.nodes().skip(1).any(|v| f.apply(v) == ROOT);
            let choices = if drops { fills.clone() } else { vec![None] };
            for fill in choices {
                let mapping = ctx
                    .tree
                    .nodes()
                    .map(|v| match (v, f.apply(v)) {
                        (ROOT, _) => None,
                        (_, ROOT) => fill,
                        (_, u) => Some(Symbol::Var(u)),
                    })
                    .collect();
                gens.push(SubstitutionMap::new(&ctx, mode, mapping)?);
            }
        }
        WordAction::new(ctx, mode, gens)
    }

    pub fn context(&self) -> &WordContext {
        &self.ctx
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn generators(&self) -> &[SubstitutionMap] {
        &self.generators
    }

    pub fn closure_depth(&self) -> usize {
        self.closure_depth
    }

    /// Generators and their compositions of length up to the closure depth,
    /// deduplicated, in discovery order.
    pub fn closure(&self) -> Vec<SubstitutionMap> {
        let mut seen: BTreeSet<(Vec<Option<Symbol>>, Vec<Node>)> = BTreeSet::new();
        let mut out = Vec::new();
        let mut frontier = Vec::new();
        for g in &self.generators {
            if seen.insert((g.mapping().to_vec(), g.spine().to_vec())) {
                out.push(g.clone());
                frontier.push(g.clone());
            }
        }
        for _ in 1..self.closure_depth {
            let mut next = Vec::new();
            for g in &self.generators {
                for h in &frontier {
                    let gh = g.compose(h).expect("same tree and mode");
                    if seen.insert((gh.mapping().to_vec(), gh.spine().to_vec())) {
                        out.push(gh.clone());
                        next.push(gh);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out
    }

    /// Words of component `t` in a small window (positions below `positions`,
    /// or lengths up to `positions` for strings).
    fn small_words(&self, t: Node, positions: Position) -> Vec<Word> {
        ComponentCandidates::new(&self.ctx, t, self.space(&[], positions)).collect()
    }

    fn space(&self, used: &[Position], bound: Position) -> CandidateSpace {
        match self.mode {
            Mode::Located => CandidateSpace::Located {
                free: (0..bound).filter(|p| !used.contains(p)).collect(),
            },
            Mode::Nonlocated => CandidateSpace::Nonlocated {
                min_len: 0,
                max_len: bound as usize,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SpineNotRegressive,
    ComponentMapping,
    FixedPoint,
    Homomorphism,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionViolation {
    pub kind: ViolationKind,
    /// Index into the closure.
    pub endo: usize,
    pub mapping: String,
    pub words: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ActionReport {
    pub endos_checked: usize,
    pub words_checked: usize,
    pub pairs_checked: usize,
    pub violation_count: usize,
    /// At most [`MAX_REPORTED`] violations are kept.
    pub violations: Vec<ActionViolation>,
}

pub const MAX_REPORTED: usize = 32;

impl ActionReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, v: ActionViolation) {
        self.violation_count += 1;
        if self.violations.len() < MAX_REPORTED {
            self.violations.push(v);
        }
    }
}

fn format_mapping(ctx: &WordContext, map: &SubstitutionMap) -> String {
    let parts: Vec<String> = map
        .mapping()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(v, s)| match s {
            Some(s) => format!("${v}->{}", ctx.symbol_text(*s)),
            None => format!("${v}->_"),
        })
        .collect();
    format!("{{{}}} spine {:?}", parts.join(", "), map.spine())
}

fn random_word(rng: &mut ChaCha8Rng, ctx: &WordContext, mode: Mode, t: Node, positions: &[Position]) -> Word {
    let symbols = ctx.component_symbols(t);
    if symbols.is_empty() || positions.is_empty() {
        return Word::empty(mode);
    }
    let len = rng.gen_range(usize::from(t != ROOT)..=positions.len().min(6));
    let mut chosen: Vec<Position> = positions.choose_multiple(rng, len).copied().collect();
    chosen.sort_unstable();
    let mut syms: Vec<Symbol> = (0..len).map(|_| *symbols.choose(rng).expect("nonempty")).collect();
    if t != ROOT {
        let i = rng.gen_range(0..len);
        syms[i] = Symbol::Var(t);
    }
    match mode {
        Mode::Located => Word::Located(TreeWord::new(chosen.into_iter().zip(syms).collect()).expect("distinct")),
        Mode::Nonlocated => Word::Nonlocated(StringWord::new(syms)),
    }
}

/// Checks spine regressivity, the component mapping `S_t -> S_{f(t)}`, the
/// fixed-point condition when `f(t) = t`, and the forward homomorphism law
/// on every closure element. Words: all component words in a window of
/// three positions, plus `sample_budget` random words and pairs.
pub fn check_action_axioms(action: &WordAction, sample_budget: usize, seed: u64) -> ActionReport {
    let ctx = &action.ctx;
    let tree = &ctx.tree;
    let closure = action.closure();
    let mut report = ActionReport {
        endos_checked: closure.len(),
        ..ActionReport::default()
    };
    let mut words: Vec<(Node, Word)> = Vec::new();
    for t in tree.nodes() {
        words.extend(action.small_words(t, 3).into_iter().map(|w| (t, w)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window: Vec<Position> = (0..16).collect();
    for _ in 0..sample_budget {
        let t = rng.gen_range(0..tree.node_count());
        words.push((t, random_word(&mut rng, ctx, action.mode, t, &window)));
    }
    let mut pairs: Vec<(Word, Word)> = Vec::new();
    for _ in 0..sample_budget {
        let split = rng.gen_range(1..window.len());
        let (left, right) = window.split_at(split);
        let (t0, t1) = (rng.gen_range(0..tree.node_count()), rng.gen_range(0..tree.node_count()));
        pairs.push((
            random_word(&mut rng, ctx, action.mode, t0, left),
            random_word(&mut rng, ctx, action.mode, t1, right),
        ));
    }
    report.words_checked = words.len();
    report.pairs_checked = pairs.len();

    for (i, tau) in closure.iter().enumerate() {
        let mapping = format_mapping(ctx, tau);
        let violation = |kind, words: Vec<String>, detail: String| ActionViolation {
            kind,
            endo: i,
            mapping: mapping.clone(),
            words,
            detail,
        };
        if !tree.is_regressive_hom(tau.spine()) {
            report.record(violation(
                ViolationKind::SpineNotRegressive,
                vec![],
                format!("spine {:?} is not a regressive homomorphism", tau.spine()),
            ));
        }
        for (t, w) in &words {
            let image = match tau.apply(w) {
                Ok(x) => x,
                Err(e) => {
                    report.record(violation(ViolationKind::ComponentMapping, vec![ctx.format_word(w)], e.to_string()));
                    continue;
                }
            };
            let target = tau.spine_at(*t);
            match image.classify(tree) {
                Ok(c) if c == target => {}
                got => report.record(violation(
                    ViolationKind::ComponentMapping,
                    vec![ctx.format_word(w), ctx.format_word(&image)],
                    format!("word of component {t} maps to {got:?}, spine gives {target}"),
                )),
            }
            if target == *t && image != *w {
                report.record(violation(
                    ViolationKind::FixedPoint,
                    vec![ctx.format_word(w), ctx.format_word(&image)],
                    format!("spine fixes {t} but the word moves"),
                ));
            }
        }
        for (b0, b1) in &pairs {
            let Ok(sum) = b0.sum(b1) else { continue };
            let lhs = tau.apply(&sum);
            let rhs = match (tau.apply(b0), tau.apply(b1)) {
                (Ok(x), Ok(y)) => x.sum(&y),
                (Err(e), _) | (_, Err(e)) => Err(e),
            };
            if lhs != rhs {
                report.record(violation(
                    ViolationKind::Homomorphism,
                    vec![ctx.format_word(b0), ctx.format_word(b1)],
                    format!("image of the sum {lhs:?} differs from the sum of images {rhs:?}"),
                ));
            }
        }
    }
    report
}

/// A coloring of single words.
pub type WordColoring<'a> = &'a (dyn Fn(&Word) -> u32 + Sync);

/// `x(t)` for every node `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RamseyWitness {
    pub x: Vec<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RamseyOutcome {
    Found(RamseyWitness),
    /// No witness with positions (or lengths) below the bound.
    Exhausted { candidates_tried: u64 },
}

/// The finite data a Ramsey witness answers.
pub struct RamseyQuery<'a> {
    pub action: &'a WordAction,
    pub s0: &'a [Word],
    pub coloring: WordColoring<'a>,
    pub f0: &'a [SubstitutionMap],
    pub position_bound: Position,
    /// Candidate evaluations allowed below each choice of `x(root)`.
    pub budget: u64,
}

struct Backtrack<'a> {
    query: &'a RamseyQuery<'a>,
    space: CandidateSpace,
    groups: HashMap<Node, u32>,
    tried: u64,
}

impl Backtrack<'_> {
    /// Colors forced by assigning `w` to `t`, or `None` on a clash.
    fn admit(&self, t: Node, w: &Word) -> Option<Vec<(Node, u32)>> {
        let mut fresh: Vec<(Node, u32)> = Vec::new();
        for tau in self.query.f0 {
            let key = tau.spine_at(t);
            let color = (self.query.coloring)(&tau.apply(w).ok()?);
            let known = self
                .groups
                .get(&key)
                .copied()
                .or_else(|| fresh.iter().find(|e| e.0 == key).map(|e| e.1));
            match known {
                Some(c) if c != color => return None,
                Some(_) => {}
                None => fresh.push((key, color)),
            }
        }
        Some(fresh)
    }

    fn extend(&mut self, t: Node, x: &mut Vec<Word>) -> Result<bool, ActionError> {
        let ctx = &self.query.action.ctx;
        if t == ctx.tree.node_count() {
            return Ok(true);
        }
        for w in ComponentCandidates::new(ctx, t, self.space.clone()) {
            self.tried += 1;
            if self.tried > self.query.budget {
                return Err(ActionError::BudgetExceeded {
                    budget: self.query.budget,
                });
            }
            let Some(fresh) = self.admit(t, &w) else { continue };
            self.groups.extend(fresh.iter().copied());
            x.push(w);
            if self.extend(t + 1, x)? {
                return Ok(true);
            }
            x.pop();
            for (k, _) in &fresh {
                self.groups.remove(k);
            }
        }
        Ok(false)
    }
}

/// Backtracking over `x(0), x(1), ...` in node order, each drawn from its
/// component inside the adequacy window of `S0`; the choices of `x(root)`
/// are explored in parallel and the first success in candidate order wins.
pub fn find_ramsey_witness(query: &RamseyQuery<'_>) -> Result<RamseyOutcome, ActionError> {
    let action = query.action;
    for (i, tau) in query.f0.iter().enumerate() {
        if tau.mode() != action.mode || **tau.tree() != *action.ctx.tree {
            return Err(ActionError::ForeignEndo(i));
        }
    }
    let used: Vec<Position> = query
        .s0
        .iter()
        .flat_map(|w| w.positioned_symbols().into_iter().map(|e| e.0))
        .collect();
    let space = match action.mode {
        Mode::Located => action.space(&used, query.position_bound),
        Mode::Nonlocated => action.space(&[], query.position_bound),
    };
    let roots: Vec<Word> = ComponentCandidates::new(&action.ctx, ROOT, space.clone()).collect();
    let tried = AtomicU64::new(0);
    let first = roots.par_iter().find_map_first(|root| {
        let mut search = Backtrack {
            query,
            space: space.clone(),
            groups: HashMap::new(),
            tried: 1,
        };
        let outcome = match search.admit(ROOT, root) {
            None => Ok(None),
            Some(fresh) => {
                search.groups.extend(fresh);
                let mut x = vec![root.clone()];
                search.extend(1, &mut x).map(|found| found.then_some(x))
            }
        };
        tried.fetch_add(search.tried, Ordering::Relaxed);
        match outcome {
            Ok(Some(x)) => Some(Ok(x)),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    });
    match first {
        Some(x) => {
            let witness = RamseyWitness { x: x? };
            verify_ramsey_witness(query, &witness).map_err(ActionError::VerificationFailed)?;
            Ok(RamseyOutcome::Found(witness))
        }
        None => Ok(RamseyOutcome::Exhausted {
            candidates_tried: tried.into_inner(),
        }),
    }
}

/// Straightforward re-evaluation of the witness conditions: `x(t)` lies in
/// component `t`, avoids the supports of `S0`, stays in the bound, and the
/// color of `tau(x(t))` is constant on each class of `f_tau(t)`.
pub fn verify_ramsey_witness(query: &RamseyQuery<'_>, witness: &RamseyWitness) -> Result<(), String> {
    let action = query.action;
    let tree = &action.ctx.tree;
    if witness.x.len() != tree.node_count() {
        return Err(format!("{} words for {} nodes", witness.x.len(), tree.node_count()));
    }
    let mut taken: BTreeSet<Position> = BTreeSet::new();
    for w in query.s0 {
        if let Word::Located(b) = w {
            taken.extend(b.support());
        }
    }
    for (t, w) in witness.x.iter().enumerate() {
        if w.mode() != action.mode {
            return Err(format!("x({t}) has the wrong word kind"));
        }
        let mut vars = BTreeSet::new();
        for (p, s) in w.positioned_symbols() {
            match s {
                Symbol::Var(v) => {
                    vars.insert(v);
                }
                Symbol::Letter(a) if (a as usize) < action.ctx.alphabet.len() => {}
                Symbol::Letter(a) => return Err(format!("x({t}) uses unknown letter {a}")),
            }
            if action.mode == Mode::Located && (taken.contains(&p) || p >= query.position_bound) {
                return Err(format!("x({t}) uses position {p} outside the adequacy window"));
            }
        }
        if action.mode == Mode::Nonlocated && w.positioned_symbols().len() as u64 > query.position_bound {
            return Err(format!("x({t}) is longer than the bound"));
        }
        // component t: variables form a chain whose least element is t
        let chain_ok = match t {
            ROOT => vars.is_empty(),
            _ => vars.contains(&t) && vars.iter().all(|&v| v != ROOT && tree.leq(t, v)),
        };
        if !chain_ok {
            return Err(format!("x({t}) is not in component {t}"));
        }
    }
    let mut classes: BTreeMap<Node, (u32, usize, Node)> = BTreeMap::new();
    for (i, tau) in query.f0.iter().enumerate() {
        for (t, w) in witness.x.iter().enumerate() {
            let image = tau.apply(w).map_err(|e| e.to_string())?;
            let color = (query.coloring)(&image);
            let key = tau.spine()[t];
            match classes.get(&key) {
                Some(&(c, j, s)) if c != color => {
                    return Err(format!(
                        "class {key}: endo {j} at node {s} has color {c}, endo {i} at node {t} has color {color}"
                    ))
                }
                Some(_) => {}
                None => {
                    classes.insert(key, (color, i, t));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_of_predecessor_maps() {
        let tree = Arc::new(RootedTree::path(3));
        let ctx = WordContext::letter_free(Arc::clone(&tree));
        let pi1 = SubstitutionMap::from_hom(&ctx, &crate::tree::RegressiveHom::predecessor_map(&tree, 1)).unwrap();
        let action = WordAction::new(ctx, Mode::Located, vec![pi1]).unwrap();
        let spines: Vec<Vec<Node>> = action.closure().iter().map(|m| m.spine().to_vec()).collect();
        assert_eq!(spines, vec![vec![0, 0, 1, 2], vec![0, 0, 0, 1], vec![0, 0, 0, 0]]);
        assert_eq!(action.clone().with_closure_depth(1).closure().len(), 1);
    }
}
