//! Located words (finitely supported maps from positions to letters or tree
//! variables), nonlocated words (plain strings), and their substitution
//! endomorphisms.
//!
//! Words with no letters are the tree-indexed finite sets; the tetris maps
//! are substitution maps sending a variable to its image under a regressive
//! homomorphism, or nowhere when the image is the root.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{same_tree, Node, RegressiveHom, RootedTree, ROOT};

pub type Position = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("domains overlap at position {0}")]
    DomainsOverlap(Position),
    #[error("duplicate position {0}")]
    DuplicatePosition(Position),
    #[error("variables {0:?} do not form a chain")]
    NotAChain(Vec<Node>),
    #[error("word or map refers to nodes outside the tree")]
    TreeMismatch,
    #[error("word or map refers to letters outside the alphabet")]
    AlphabetMismatch,
    #[error("operation requires a {expected:?} map")]
    ModeMismatch { expected: Mode },
    #[error("the root cannot be used as a variable")]
    RootVariable,
    #[error("nonlocated maps must be defined on every variable (missing {0})")]
    PartialNonlocated(Node),
    #[error("mapping length {found} does not match the tree ({expected} nodes)")]
    MappingLength { expected: usize, found: usize },
    #[error("derived spine {0:?} is not a regressive homomorphism")]
    NotRegressive(Vec<Node>),
    #[error("window holds more than {0} words")]
    WindowTooLarge(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbol {
    Letter(u32),
    Var(Node),
}

impl Symbol {
    pub fn as_var(self) -> Option<Node> {
        match self {
            Symbol::Var(v) => Some(v),
            Symbol::Letter(_) => None,
        }
    }
}

/// Located or nonlocated words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Located,
    Nonlocated,
}

/// Tree and alphabet shared by a family of words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordContext {
    pub tree: Arc<RootedTree>,
    pub alphabet: Vec<char>,
}

impl WordContext {
    pub fn new(tree: Arc<RootedTree>, alphabet: Vec<char>) -> Self {
        WordContext { tree, alphabet }
    }

    /// Context with an empty alphabet.
    pub fn letter_free(tree: Arc<RootedTree>) -> Self {
        WordContext {
            tree,
            alphabet: Vec::new(),
        }
    }

    pub fn check_symbol(&self, s: Symbol) -> Result<(), WordError> {
        match s {
            Symbol::Letter(a) if (a as usize) < self.alphabet.len() => Ok(()),
            Symbol::Letter(_) => Err(WordError::AlphabetMismatch),
            Symbol::Var(ROOT) => Err(WordError::RootVariable),
            Symbol::Var(v) if v < self.tree.node_count() => Ok(()),
            Symbol::Var(_) => Err(WordError::TreeMismatch),
        }
    }

    pub fn check_symbols<'a>(&self, it: impl IntoIterator<Item = &'a Symbol>) -> Result<(), WordError> {
        it.into_iter().try_for_each(|&s| self.check_symbol(s))
    }

    /// Symbols allowed in a word of component `t`: all letters and the
    /// non-root variables on the root path of `t`.
    pub fn component_symbols(&self, t: Node) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = (0..self.alphabet.len() as u32).map(Symbol::Letter).collect();
        let mut vars: Vec<Node> = self.tree.root_path(t).into_iter().filter(|&v| v != ROOT).collect();
        vars.sort_unstable();
        out.extend(vars.into_iter().map(Symbol::Var));
        out
    }

    pub fn symbol_text(&self, s: Symbol) -> String {
        match s {
            Symbol::Letter(a) => match self.alphabet.get(a as usize) {
                Some(c) => format!("'{c}'"),
                None => format!("'#{a}'"),
            },
            Symbol::Var(v) => format!("${v}"),
        }
    }

    pub fn format_located(&self, w: &TreeWord) -> String {
        let mut out = String::from("[");
        for (i, (p, s)) in w.entries().iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{p}:{}", self.symbol_text(*s));
        }
        out.push(']');
        out
    }

    pub fn format_string(&self, w: &StringWord) -> String {
        let mut out = String::from("\"");
        for s in w.symbols() {
            match *s {
                Symbol::Letter(a) => out.push(self.alphabet.get(a as usize).copied().unwrap_or('?')),
                Symbol::Var(v) => {
                    let _ = write!(out, "${v}");
                }
            }
        }
        out.push('"');
        out
    }

    pub fn format_word(&self, w: &Word) -> String {
        match w {
            Word::Located(w) => self.format_located(w),
            Word::Nonlocated(w) => self.format_string(w),
        }
    }
}

fn classify_vars(tree: &RootedTree, vars: impl Iterator<Item = Node>) -> Result<Node, WordError> {
    let set: BTreeSet<Node> = vars.collect();
    let nodes: Vec<Node> = set.into_iter().collect();
    if nodes.is_empty() {
        return Ok(ROOT);
    }
    if nodes.iter().any(|&v| v >= tree.node_count()) {
        return Err(WordError::TreeMismatch);
    }
    tree.classify_node_set(&nodes)
        .least
        .ok_or(WordError::NotAChain(nodes))
}

/// A finitely supported map from positions to symbols, sorted by position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeWord {
    entries: Vec<(Position, Symbol)>,
}

impl TreeWord {
    pub fn new(mut entries: Vec<(Position, Symbol)>) -> Result<Self, WordError> {
        entries.sort_unstable_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(WordError::DuplicatePosition(w[0].0));
        }
        Ok(TreeWord { entries })
    }

    /// Entries already sorted by strictly increasing position.
    pub(crate) fn from_sorted(entries: Vec<(Position, Symbol)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        TreeWord { entries }
    }

    pub fn empty() -> Self {
        TreeWord::default()
    }

    /// The word constantly equal to `symbol` on `positions`.
    pub fn constant(positions: impl IntoIterator<Item = Position>, symbol: Symbol) -> Result<Self, WordError> {
        TreeWord::new(positions.into_iter().map(|p| (p, symbol)).collect())
    }

    pub fn entries(&self) -> &[(Position, Symbol)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> impl Iterator<Item = Position> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn get(&self, p: Position) -> Option<Symbol> {
        self.entries
            .binary_search_by_key(&p, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn min_position(&self) -> Option<Position> {
        self.entries.first().map(|e| e.0)
    }

    pub fn max_position(&self) -> Option<Position> {
        self.entries.last().map(|e| e.0)
    }

    pub fn variables(&self) -> BTreeSet<Node> {
        self.entries.iter().filter_map(|e| e.1.as_var()).collect()
    }

    /// Root for variable-free words, else the least element of the variable chain.
    pub fn classify(&self, tree: &RootedTree) -> Result<Node, WordError> {
        classify_vars(tree, self.entries.iter().filter_map(|e| e.1.as_var()))
    }

    pub fn disjoint_from(&self, other: &TreeWord) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }
}

/// Union of graphs; defined only when the domains are disjoint.
pub fn word_sum(b0: &TreeWord, b1: &TreeWord) -> Result<TreeWord, WordError> {
    let mut out = Vec::with_capacity(b0.len() + b1.len());
    let (mut i, mut j) = (0, 0);
    let (x, y) = (&b0.entries, &b1.entries);
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => {
                out.push(x[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(y[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => return Err(WordError::DomainsOverlap(x[i].0)),
        }
    }
    out.extend_from_slice(&x[i..]);
    out.extend_from_slice(&y[j..]);
    Ok(TreeWord { entries: out })
}

/// Apply a regressive homomorphism to the variables of `b`, dropping
/// positions whose variable is sent to the root. Letters pass through.
pub fn tetris_apply(f: &RegressiveHom, b: &TreeWord) -> Result<TreeWord, WordError> {
    let n = f.tree().node_count();
    let mut out = Vec::with_capacity(b.len());
    for &(p, s) in b.entries() {
        match s {
            Symbol::Letter(_) => out.push((p, s)),
            Symbol::Var(v) if v >= n || v == ROOT => return Err(WordError::TreeMismatch),
            Symbol::Var(v) => {
                let u = f.apply(v);
                if u != ROOT {
                    out.push((p, Symbol::Var(u)));
                }
            }
        }
    }
    Ok(TreeWord::from_sorted(out))
}

/// A nonlocated word: a finite sequence of symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StringWord {
    symbols: Vec<Symbol>,
}

impl StringWord {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        StringWord { symbols }
    }

    pub fn empty() -> Self {
        StringWord::default()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn variables(&self) -> BTreeSet<Node> {
        self.symbols.iter().filter_map(|s| s.as_var()).collect()
    }

    pub fn classify(&self, tree: &RootedTree) -> Result<Node, WordError> {
        classify_vars(tree, self.symbols.iter().filter_map(|s| s.as_var()))
    }
}

pub fn concat(w0: &StringWord, w1: &StringWord) -> StringWord {
    let mut symbols = Vec::with_capacity(w0.len() + w1.len());
    symbols.extend_from_slice(&w0.symbols);
    symbols.extend_from_slice(&w1.symbols);
    StringWord { symbols }
}

/// Either kind of word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Word {
    Located(TreeWord),
    Nonlocated(StringWord),
}

impl Word {
    pub fn empty(mode: Mode) -> Word {
        match mode {
            Mode::Located => Word::Located(TreeWord::empty()),
            Mode::Nonlocated => Word::Nonlocated(StringWord::empty()),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Word::Located(_) => Mode::Located,
            Word::Nonlocated(_) => Mode::Nonlocated,
        }
    }

    pub fn classify(&self, tree: &RootedTree) -> Result<Node, WordError> {
        match self {
            Word::Located(w) => w.classify(tree),
            Word::Nonlocated(w) => w.classify(tree),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Word::Located(w) => w.is_empty(),
            Word::Nonlocated(w) => w.is_empty(),
        }
    }

    /// Symbols with their positions (string indices for nonlocated words).
    pub fn positioned_symbols(&self) -> Vec<(Position, Symbol)> {
        match self {
            Word::Located(w) => w.entries().to_vec(),
            Word::Nonlocated(w) => w
                .symbols()
                .iter()
                .enumerate()
                .map(|(i, &s)| (i as Position, s))
                .collect(),
        }
    }

    /// Partial sum: union for located words, concatenation otherwise.
    pub fn sum(&self, other: &Word) -> Result<Word, WordError> {
        match (self, other) {
            (Word::Located(a), Word::Located(b)) => word_sum(a, b).map(Word::Located),
            (Word::Nonlocated(a), Word::Nonlocated(b)) => Ok(Word::Nonlocated(concat(a, b))),
            (Word::Located(_), _) => Err(WordError::ModeMismatch { expected: Mode::Located }),
            (Word::Nonlocated(_), _) => Err(WordError::ModeMismatch {
                expected: Mode::Nonlocated,
            }),
        }
    }
}

/// A variable substitution map: partial (located) or total (nonlocated) on
/// variables, the identity on letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubstitutionMap {
    mode: Mode,
    tree: Arc<RootedTree>,
    alphabet_len: usize,
    /// Indexed by node; entry 0 (the root) is unused.
    mapping: Vec<Option<Symbol>>,
    spine: Vec<Node>,
}

impl SubstitutionMap {
    pub fn new(ctx: &WordContext, mode: Mode, mapping: Vec<Option<Symbol>>) -> Result<Self, WordError> {
        let n = ctx.tree.node_count();
        if mapping.len() != n {
            return Err(WordError::MappingLength {
                expected: n,
                found: mapping.len(),
            });
        }
        let mut mapping = mapping;
        mapping[ROOT] = None;
        for (v, target) in mapping.iter().enumerate().skip(1) {
            match target {
                Some(s) => ctx.check_symbol(*s)?,
                None if mode == Mode::Nonlocated => return Err(WordError::PartialNonlocated(v)),
                None => {}
            }
        }
        let spine = derived_spine(&mapping);
        if !ctx.tree.is_regressive_hom(&spine) {
            return Err(WordError::NotRegressive(spine));
        }
        Ok(SubstitutionMap {
            mode,
            tree: Arc::clone(&ctx.tree),
            alphabet_len: ctx.alphabet.len(),
            mapping,
            spine,
        })
    }

    /// A map with an arbitrary declared spine; nothing is validated. Used to
    /// exercise the action checker on malformed endomorphisms.
    pub fn with_declared_spine(
        ctx: &WordContext,
        mode: Mode,
        mapping: Vec<Option<Symbol>>,
        spine: Vec<Node>,
    ) -> Self {
        SubstitutionMap {
            mode,
            tree: Arc::clone(&ctx.tree),
            alphabet_len: ctx.alphabet.len(),
            mapping,
            spine,
        }
    }

    pub fn identity(ctx: &WordContext, mode: Mode) -> Self {
        let mapping = ctx
            .tree
            .nodes()
            .map(|v| (v != ROOT).then_some(Symbol::Var(v)))
            .collect();
        Self::new(ctx, mode, mapping).expect("identity is regressive")
    }

    /// The located tetris map of a regressive homomorphism.
    pub fn from_hom(ctx: &WordContext, f: &RegressiveHom) -> Result<Self, WordError> {
        if !same_tree(f.tree(), &ctx.tree) {
            return Err(WordError::TreeMismatch);
        }
        let mapping = ctx
            .tree
            .nodes()
            .map(|v| {
                let u = f.apply(v);
                (v != ROOT && u != ROOT).then_some(Symbol::Var(u))
            })
            .collect();
        Self::new(ctx, Mode::Located, mapping)
    }

    /// Every variable replaced by the letter with index `letter`.
    pub fn constant_letter(ctx: &WordContext, mode: Mode, letter: u32) -> Result<Self, WordError> {
        let mapping = ctx
            .tree
            .nodes()
            .map(|v| (v != ROOT).then_some(Symbol::Letter(letter)))
            .collect();
        Self::new(ctx, mode, mapping)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn tree(&self) -> &Arc<RootedTree> {
        &self.tree
    }

    pub fn mapping(&self) -> &[Option<Symbol>] {
        &self.mapping
    }

    /// `f_σ(t)`: `σ(t)` when that is a variable, otherwise the root.
    pub fn spine(&self) -> &[Node] {
        &self.spine
    }

    pub fn spine_at(&self, t: Node) -> Node {
        self.spine[t]
    }

    pub fn spine_hom(&self) -> Result<RegressiveHom, crate::tree::TreeError> {
        RegressiveHom::new(&self.tree, self.spine.clone())
    }

    pub fn is_identity(&self) -> bool {
        self.mapping
            .iter()
            .enumerate()
            .skip(1)
            .all(|(v, s)| *s == Some(Symbol::Var(v)))
    }

    fn check_word_symbols<'a>(&self, it: impl IntoIterator<Item = &'a Symbol>) -> Result<(), WordError> {
        for s in it {
            match *s {
                Symbol::Letter(a) if a as usize >= self.alphabet_len => return Err(WordError::AlphabetMismatch),
                Symbol::Var(ROOT) => return Err(WordError::RootVariable),
                Symbol::Var(v) if v >= self.tree.node_count() => return Err(WordError::TreeMismatch),
                _ => {}
            }
        }
        Ok(())
    }

    #[inline]
    pub fn image(&self, s: Symbol) -> Option<Symbol> {
        match s {
            Symbol::Letter(_) => Some(s),
            Symbol::Var(v) => self.mapping[v],
        }
    }

    /// Located application: positions outside the domain are dropped.
    pub fn apply_located(&self, b: &TreeWord) -> Result<TreeWord, WordError> {
        self.check_word_symbols(b.entries().iter().map(|e| &e.1))?;
        Ok(self.apply_located_unchecked(b))
    }

    pub(crate) fn apply_located_unchecked(&self, b: &TreeWord) -> TreeWord {
        TreeWord::from_sorted(
            b.entries()
                .iter()
                .filter_map(|&(p, s)| self.image(s).map(|t| (p, t)))
                .collect(),
        )
    }

    /// Nonlocated application; requires a total map.
    pub fn apply_nonlocated(&self, w: &StringWord) -> Result<StringWord, WordError> {
        if self.mode != Mode::Nonlocated {
            return Err(WordError::ModeMismatch {
                expected: Mode::Nonlocated,
            });
        }
        self.check_word_symbols(w.symbols())?;
        Ok(self.apply_nonlocated_unchecked(w))
    }

    pub(crate) fn apply_nonlocated_unchecked(&self, w: &StringWord) -> StringWord {
        StringWord::new(
            w.symbols()
                .iter()
                .map(|&s| self.image(s).expect("nonlocated maps are total"))
                .collect(),
        )
    }

    pub fn apply(&self, w: &Word) -> Result<Word, WordError> {
        match w {
            Word::Located(b) => self.apply_located(b).map(Word::Located),
            Word::Nonlocated(s) => self.apply_nonlocated(s).map(Word::Nonlocated),
        }
    }


    /// `self ∘ other`.
    pub fn compose(&self, other: &SubstitutionMap) -> Result<SubstitutionMap, WordError> {
        if !same_tree(&self.tree, &other.tree) {
            return Err(WordError::TreeMismatch);
        }
        if self.mode != other.mode {
            return Err(WordError::ModeMismatch { expected: self.mode });
        }
        let mapping: Vec<Option<Symbol>> = other
            .mapping
            .iter()
            .map(|s| s.and_then(|s| self.image(s)))
            .collect();
        let spine = derived_spine(&mapping);
        Ok(SubstitutionMap {
            mode: self.mode,
            tree: Arc::clone(&self.tree),
            alphabet_len: self.alphabet_len.max(other.alphabet_len),
            mapping,
            spine,
        })
    }
}

fn derived_spine(mapping: &[Option<Symbol>]) -> Vec<Node> {
    mapping
        .iter()
        .map(|s| match s {
            Some(Symbol::Var(u)) => *u,
            _ => ROOT,
        })
        .collect()
}

/// Every word supported in `[0, bound)` whose domain misses every word of `avoid`,
/// in order of support bitmask, then symbols.
pub fn adequacy_window(
    ctx: &WordContext,
    avoid: &[TreeWord],
    bound: Position,
    limit: usize,
) -> Result<Vec<TreeWord>, WordError> {
    let used: BTreeSet<Position> = avoid.iter().flat_map(|w| w.support()).collect();
    let free: Vec<Position> = (0..bound).filter(|p| !used.contains(p)).collect();
    let mut symbols: Vec<Symbol> = (0..ctx.alphabet.len() as u32).map(Symbol::Letter).collect();
    symbols.extend(ctx.tree.nodes().skip(1).map(Symbol::Var));
    let k = symbols.len() as u128;
    let total: u128 = (k + 1).checked_pow(free.len() as u32).unwrap_or(u128::MAX);
    if total > limit as u128 {
        return Err(WordError::WindowTooLarge(limit));
    }
    let mut out = vec![TreeWord::empty()];
    if symbols.is_empty() {
        return Ok(out);
    }
    for mask in 1u64..(1u64 << free.len()) {
        let support: Vec<Position> = (0..free.len()).filter(|&i| mask >> i & 1 == 1).map(|i| free[i]).collect();
        let mut digits = vec![0usize; support.len()];
        loop {
            out.push(TreeWord::from_sorted(
                support.iter().zip(&digits).map(|(&p, &d)| (p, symbols[d])).collect(),
            ));
            if !odometer(&mut digits, symbols.len()) {
                break;
            }
        }
    }
    Ok(out)
}

/// Advance a base-`base` counter whose first digit is most significant.
pub(crate) fn odometer(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Where candidate words may live.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CandidateSpace {
    /// Supports drawn from these positions (at most 63).
    Located { free: Vec<Position> },
    /// Lengths in `min_len..=max_len`.
    Nonlocated { min_len: usize, max_len: usize },
}

/// Lazy enumeration of the words of component `t`: supports in bitmask
/// order (lengths ascending for strings), then symbols lexicographically.
pub struct ComponentCandidates {
    symbols: Vec<Symbol>,
    required: Option<Symbol>,
    space: CandidateSpace,
    shape: Vec<Position>,
    next_shape: u64,
    digits: Option<Vec<usize>>,
}

impl ComponentCandidates {
    pub fn new(ctx: &WordContext, t: Node, space: CandidateSpace) -> Self {
        if let CandidateSpace::Located { free } = &space {
            assert!(free.len() < 64, "at most 63 free positions");
        }
        let next_shape = match &space {
            CandidateSpace::Located { .. } => 0,
            CandidateSpace::Nonlocated { min_len, .. } => *min_len as u64,
        };
        ComponentCandidates {
            symbols: ctx.component_symbols(t),
            required: (t != ROOT).then_some(Symbol::Var(t)),
            space,
            shape: Vec::new(),
            next_shape,
            digits: None,
        }
    }

    fn advance_shape(&mut self) -> bool {
        match &self.space {
            CandidateSpace::Located { free } => {
                let mask = self.next_shape;
                let limit = if self.symbols.is_empty() { 1 } else { 1u64 << free.len() };
                if mask >= limit {
                    return false;
                }
                self.shape = (0..free.len()).filter(|&i| mask >> i & 1 == 1).map(|i| free[i]).collect();
            }
            CandidateSpace::Nonlocated { max_len, .. } => {
                let len = self.next_shape;
                if len > *max_len as u64 || (len > 0 && self.symbols.is_empty()) {
                    return false;
                }
                self.shape = (0..len).collect();
            }
        }
        self.next_shape += 1;
        self.digits = Some(vec![0; self.shape.len()]);
        true
    }

    fn build(&self, digits: &[usize]) -> Word {
        match self.space {
            CandidateSpace::Located { .. } => Word::Located(TreeWord::from_sorted(
                self.shape.iter().zip(digits).map(|(&p, &d)| (p, self.symbols[d])).collect(),
            )),
            CandidateSpace::Nonlocated { .. } => {
                Word::Nonlocated(StringWord::new(digits.iter().map(|&d| self.symbols[d]).collect()))
            }
        }
    }
}

impl Iterator for ComponentCandidates {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        loop {
            let Some(digits) = self.digits.take() else {
                if !self.advance_shape() {
                    return None;
                }
                continue;
            };
            let word = self.build(&digits);
            let mut digits = digits;
            if odometer(&mut digits, self.symbols.len()) {
                self.digits = Some(digits);
            }
            let ok = match self.required {
                None => true,
                Some(req) => word_contains(&word, req),
            };
            if ok {
                return Some(word);
            }
        }
    }
}

fn word_contains(word: &Word, req: Symbol) -> bool {
    match word {
        Word::Located(w) => w.entries().iter().any(|e| e.1 == req),
        Word::Nonlocated(w) => w.symbols().contains(&req),
    }
}
