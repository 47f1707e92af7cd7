//! Instance files: an INI-like text format with `[instance]`, `[factor N]`,
//! `[coloring]` and `[delta]` sections, its parser, the canonical emitter
//! and the translation to search instances.
//!
//! ```text
//! [instance]
//! blocks = 3
//! bound = 8
//! mode = search
//!
//! [factor 0]
//! tree = [0]
//! endo id = identity
//! schedule = [id]
//!
//! [coloring]
//! expr = minpos % 2
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coloring::Coloring;
use crate::delta::{parse_points, DeltaScene, GSequence};
use crate::expr::{parse_expr, Ast, CoordinateInfo, PointExpr, WordExpr};
use crate::poly::{validate_int_poly, IntPolyVec, RatPoly};
use crate::search::{Factor, MinLength, SearchInstance};
use crate::tree::{Node, RegressiveHom, RootedTree, ROOT};
use crate::words::{Mode, Position, StringWord, SubstitutionMap, Symbol, TreeWord, Word, WordContext};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DslError {
    #[error("line {line}, column {column}: expected {expected}")]
    Parse { line: usize, column: usize, expected: String },
    #[error("line {line}, column {column}: unknown name '{name}'")]
    Resolution { name: String, line: usize, column: usize },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn invalid<T>(m: impl Into<String>) -> Result<T, DslError> {
    Err(DslError::Invalid(m.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Search,
    Verify,
    Threshold,
    DeltaScan,
}

impl RunMode {
    const NAMES: [(&'static str, RunMode); 4] = [
        ("search", RunMode::Search),
        ("verify", RunMode::Verify),
        ("threshold", RunMode::Threshold),
        ("delta-scan", RunMode::DeltaScan),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, m)| *m == self).map(|(n, _)| *n).unwrap()
    }
}

/// Minimum block length at a step; `Bound` follows the position bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LengthSpec {
    Fixed(usize),
    Bound,
}

/// Image of one node under a substitution table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageSpec {
    Delete,
    Var(Node),
    Letter(char),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EndoSpec {
    Identity,
    /// Tetris map of the constant-root homomorphism.
    Root,
    /// Tetris map of a regressive homomorphism given by node images.
    Hom(Vec<Node>),
    /// Tetris map of the `k`-th predecessor map.
    Predecessor(usize),
    /// Every variable becomes this letter.
    Letter(char),
    /// Explicit image per node, root first.
    Substitute(Vec<ImageSpec>),
}

/// Schedule entry: a declared endomorphism or every regressive tetris map.
pub const ALL_HOMS: &str = "homs";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSpec {
    pub tree: Vec<Node>,
    pub alphabet: Vec<char>,
    pub kind: Mode,
    pub endos: BTreeMap<String, EndoSpec>,
    pub schedule: Vec<String>,
    /// Per-step replacements of `schedule`.
    pub step_schedules: BTreeMap<usize, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColoringSpec {
    Expr(Ast),
    /// Word tuples in canonical text, with their colors.
    Table(BTreeMap<Vec<String>, u32>),
    File(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetSpec {
    Predicate(Ast),
    Points(String),
    /// Points listed in the file itself.
    Members(Vec<Vec<i64>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaSpec {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub set: SetSpec,
    /// One expression in `j` and `t` per coordinate.
    pub weights: Vec<Ast>,
    /// Polynomial components in `z` / `z0`, `z1`, ...
    pub map: Vec<Ast>,
    pub degree: u32,
    /// Box side lengths for the density sweep.
    pub sweep: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceSpec {
    pub mode: RunMode,
    pub blocks: usize,
    pub bound: Position,
    pub budget: u64,
    pub colors: u32,
    pub coordinates: Vec<usize>,
    pub fresh: Vec<Position>,
    pub lengths: Vec<LengthSpec>,
    pub root_blocks: bool,
    pub factors: Vec<FactorSpec>,
    pub coloring: Option<ColoringSpec>,
    pub delta: Option<DeltaSpec>,
}

pub const DEFAULT_BUDGET: u64 = 10_000_000;

// ---------------------------------------------------------------- lexing

struct Entry {
    key: String,
    arg: Option<String>,
    value: String,
    line: usize,
    key_col: usize,
    value_col: usize,
}

struct Section {
    name: String,
    arg: Option<String>,
    line: usize,
    entries: Vec<Entry>,
}

fn parse_err<T>(line: usize, column: usize, expected: impl Into<String>) -> Result<T, DslError> {
    Err(DslError::Parse { line, column, expected: expected.into() })
}

/// Drop a trailing `#` comment, ignoring `#` inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quote = None;
    for (i, c) in line.char_indices() {
        match (quote, c) {
            (None, '#') => return &line[..i],
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), _) if c == q => quote = None,
            _ => {}
        }
    }
    line
}

fn char_col(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

fn lex(text: &str) -> Result<Vec<Section>, DslError> {
    let mut sections: Vec<Section> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = strip_comment(raw);
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                return parse_err(line, char_col(body, indent + trimmed.len()), "']' closing the section header");
            };
            let mut words = inner.split_whitespace();
            let name = words.next().unwrap_or("").to_string();
            let arg = words.next().map(str::to_string);
            if words.next().is_some() || name.is_empty() {
                return parse_err(line, char_col(body, indent) + 1, "a section name and at most one argument");
            }
            sections.push(Section { name, arg, line, entries: Vec::new() });
            continue;
        }
        let Some(eq) = body.find('=') else {
            return parse_err(line, char_col(body, indent), "'key = value' or a [section] header");
        };
        let Some(section) = sections.last_mut() else {
            return parse_err(line, char_col(body, indent), "a [section] header before the first key");
        };
        let mut key_words = body[..eq].split_whitespace();
        let key = key_words.next().unwrap_or("").to_string();
        let arg = key_words.next().map(str::to_string);
        if key.is_empty() || key_words.next().is_some() {
            return parse_err(line, char_col(body, indent), "a key with at most one argument");
        }
        let value_raw = &body[eq + 1..];
        let lead = value_raw.len() - value_raw.trim_start().len();
        section.entries.push(Entry {
            key,
            arg,
            value: value_raw.trim().to_string(),
            line,
            key_col: char_col(body, indent),
            value_col: char_col(body, eq + 1 + lead),
        });
    }
    Ok(sections)
}

// ---------------------------------------------------------------- values

/// Cursor over one value, reporting columns in the original line.
struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor {
    fn new(e: &Entry) -> Self {
        Self::at(&e.value, e.line, e.value_col)
    }

    fn at(text: &str, line: usize, col: usize) -> Self {
        Cursor { chars: text.chars().collect(), pos: 0, line, col }
    }

    fn fail<T>(&self, expected: impl Into<String>) -> Result<T, DslError> {
        parse_err(self.line, self.col + self.pos, expected)
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), DslError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.fail(format!("'{c}'"))
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.chars[self.pos..].iter().take(n).copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn end(&mut self) -> Result<(), DslError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => self.fail("end of value"),
        }
    }

    fn ident(&mut self) -> Result<String, DslError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_alphanumeric() || *c == '_' || *c == '-') {
            self.pos += 1;
        }
        if start == self.pos {
            return self.fail("a name");
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn int(&mut self) -> Result<i64, DslError> {
        self.skip_ws();
        let start = self.pos;
        if self.chars.get(self.pos) == Some(&'-') {
            self.pos += 1;
        }
        while self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        match s.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.fail("an integer")
            }
        }
    }

    fn uint(&mut self) -> Result<u64, DslError> {
        let start = self.pos;
        let v = self.int()?;
        u64::try_from(v).or_else(|_| {
            self.pos = start;
            self.fail("a nonnegative integer")
        })
    }

    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T, DslError>) -> Result<Vec<T>, DslError> {
        self.expect('[')?;
        let mut out = Vec::new();
        if self.eat(']') {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(']') {
                return Ok(out);
            }
            if !self.eat(',') {
                return self.fail("',' or ']'");
            }
        }
    }

    fn quoted(&mut self, q: char) -> Result<String, DslError> {
        self.expect(q)?;
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|&c| c != q) {
            self.pos += 1;
        }
        if self.pos == self.chars.len() {
            return self.fail(format!("closing {q}"));
        }
        let s = self.chars[start..self.pos].iter().collect();
        self.pos += 1;
        Ok(s)
    }

    fn letter(&mut self) -> Result<char, DslError> {
        let start = self.pos;
        let s = self.quoted('\'')?;
        let mut it = s.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c),
            _ => {
                self.pos = start;
                self.fail("a one-character letter like 'a'")
            }
        }
    }
}

fn expression(text: &str, line: usize, col: usize) -> Result<Ast, DslError> {
    parse_expr(text).map_err(|e| DslError::Parse {
        line,
        column: col + e.offset,
        expected: e.message,
    })
}

/// `;`-separated expressions.
fn expressions(e: &Entry) -> Result<Vec<Ast>, DslError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in e.value.split(';') {
        let lead = part.len() - part.trim_start().len();
        let col = e.value_col + e.value[..offset + lead].chars().count();
        if part.trim().is_empty() {
            return parse_err(e.line, col, "an expression");
        }
        out.push(expression(part.trim(), e.line, col)?);
        offset += part.len() + 1;
    }
    Ok(out)
}

fn word_literal(c: &mut Cursor, ctx: &WordContext, mode: Mode) -> Result<Word, DslError> {
    let symbol = |c: &mut Cursor| -> Result<Symbol, DslError> {
        match c.peek() {
            Some('$') => {
                c.pos += 1;
                let v = c.uint()? as Node;
                if v == ROOT || v >= ctx.tree.node_count() {
                    return c.fail(format!("a node in 1..{}", ctx.tree.node_count()));
                }
                Ok(Symbol::Var(v))
            }
            Some('\'') => {
                let l = c.letter()?;
                match ctx.alphabet.iter().position(|&a| a == l) {
                    Some(i) => Ok(Symbol::Letter(i as u32)),
                    None => c.fail(format!("a letter of the alphabet, not '{l}'")),
                }
            }
            _ => c.fail("'$node' or 'letter'"),
        }
    };
    let start = c.pos;
    match mode {
        Mode::Located => {
            let entries = c.list(|c| {
                let p = c.uint()?;
                c.expect(':')?;
                Ok((p, symbol(c)?))
            })?;
            TreeWord::new(entries).map(Word::Located).or_else(|e| {
                c.pos = start;
                c.fail(format!("a located word ({e})"))
            })
        }
        Mode::Nonlocated => {
            c.expect('"')?;
            let mut symbols = Vec::new();
            loop {
                match c.chars.get(c.pos).copied() {
                    Some('"') => {
                        c.pos += 1;
                        break;
                    }
                    Some('$') => {
                        c.pos += 1;
                        let v = c.uint()? as Node;
                        if v == ROOT || v >= ctx.tree.node_count() {
                            return c.fail(format!("a node in 1..{}", ctx.tree.node_count()));
                        }
                        symbols.push(Symbol::Var(v));
                    }
                    Some(l) => match ctx.alphabet.iter().position(|&a| a == l) {
                        Some(i) => {
                            symbols.push(Symbol::Letter(i as u32));
                            c.pos += 1;
                        }
                        None => return c.fail(format!("a letter of the alphabet, not '{l}'")),
                    },
                    None => return c.fail("closing '\"'"),
                }
            }
            Ok(Word::Nonlocated(StringWord::new(symbols)))
        }
    }
}

/// Parse a word in the text form produced by `WordContext::format_word`.
pub fn parse_word(text: &str, ctx: &WordContext, mode: Mode) -> Result<Word, DslError> {
    let mut c = Cursor::at(text, 1, 1);
    let w = word_literal(&mut c, ctx, mode)?;
    c.end()?;
    Ok(w)
}

/// `w0 | w1 | ... -> color`, words in canonical text.
fn table_entry(c: &mut Cursor, ctxs: &[(WordContext, Mode)]) -> Result<(Vec<String>, u32), DslError> {
    let mut words = Vec::new();
    for (i, (ctx, mode)) in ctxs.iter().enumerate() {
        if i > 0 {
            c.expect('|')?;
        }
        let w = word_literal(c, ctx, *mode)?;
        words.push(ctx.format_word(&w));
    }
    if !c.eat_str("->") {
        return c.fail("'->' and a color");
    }
    let color = c.uint()?;
    c.end()?;
    let color = u32::try_from(color).or_else(|_| c.fail("a color below 2^32"))?;
    Ok((words, color))
}

// ---------------------------------------------------------------- sections

/// Keys of one section; only `entry` may repeat with the same argument.
struct Keys<'a> {
    section: &'a Section,
}

impl<'a> Keys<'a> {
    fn new(section: &'a Section, allowed: &[&str]) -> Result<Self, DslError> {
        let mut seen: Vec<(&str, Option<&str>)> = Vec::new();
        for e in &section.entries {
            if !allowed.contains(&e.key.as_str()) {
                return parse_err(e.line, e.key_col, format!("one of the keys {}", allowed.join(", ")));
            }
            let id = (e.key.as_str(), e.arg.as_deref());
            if e.key != "entry" && seen.contains(&id) {
                return parse_err(e.line, e.key_col, "a key not given before");
            }
            seen.push(id);
        }
        Ok(Keys { section })
    }

    fn get(&mut self, key: &str) -> Result<Option<&'a Entry>, DslError> {
        let Some(i) = self.section.entries.iter().position(|e| e.key == key) else { return Ok(None) };
        let e = &self.section.entries[i];
        if let Some(arg) = &e.arg {
            let col = e.key_col + e.key.chars().count() + 1;
            return parse_err(e.line, col, format!("'=' after '{}', not the argument '{arg}'", e.key));
        }
        Ok(Some(e))
    }

    fn require(&mut self, key: &str) -> Result<&'a Entry, DslError> {
        match self.get(key)? {
            Some(e) => Ok(e),
            None => parse_err(self.section.line, 1, format!("key '{key}' in [{}]", self.section.name)),
        }
    }

    fn all(&self, key: &str) -> Vec<&'a Entry> {
        self.section.entries.iter().filter(|e| e.key == key).collect()
    }
}

fn int_value(e: &Entry) -> Result<u64, DslError> {
    let mut c = Cursor::new(e);
    let v = c.uint()?;
    c.end()?;
    Ok(v)
}

fn int_list(e: &Entry) -> Result<Vec<i64>, DslError> {
    let mut c = Cursor::new(e);
    let v = c.list(|c| c.int())?;
    c.end()?;
    Ok(v)
}

fn uint_list(e: &Entry) -> Result<Vec<u64>, DslError> {
    let mut c = Cursor::new(e);
    let v = c.list(|c| c.uint())?;
    c.end()?;
    Ok(v)
}

fn name_list(e: &Entry) -> Result<Vec<(String, usize)>, DslError> {
    let mut c = Cursor::new(e);
    let v = c.list(|c| {
        c.skip_ws();
        let col = c.col + c.pos;
        Ok((c.ident()?, col))
    })?;
    c.end()?;
    Ok(v)
}

fn keyword<T: Copy>(e: &Entry, options: &[(&str, T)]) -> Result<T, DslError> {
    let mut c = Cursor::new(e);
    let word = c.ident()?;
    c.end()?;
    match options.iter().find(|(n, _)| *n == word) {
        Some((_, v)) => Ok(*v),
        None => {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            parse_err(e.line, e.value_col, format!("one of {}", names.join(", ")))
        }
    }
}

fn endo_value(e: &Entry) -> Result<EndoSpec, DslError> {
    let mut c = Cursor::new(e);
    let kind = c.ident()?;
    let spec = match kind.as_str() {
        "identity" => EndoSpec::Identity,
        "root" => EndoSpec::Root,
        "hom" => EndoSpec::Hom(c.list(|c| c.uint().map(|v| v as Node))?),
        "predecessor" => EndoSpec::Predecessor(c.uint()? as usize),
        "letter" => EndoSpec::Letter(c.letter()?),
        "substitute" => EndoSpec::Substitute(c.list(|c| match c.peek() {
            Some('-') => {
                c.pos += 1;
                Ok(ImageSpec::Delete)
            }
            Some('$') => {
                c.pos += 1;
                Ok(ImageSpec::Var(c.uint()? as Node))
            }
            Some('\'') => Ok(ImageSpec::Letter(c.letter()?)),
            _ => c.fail("'-', '$node' or a letter"),
        })?),
        _ => return parse_err(e.line, e.value_col, "identity, root, hom [..], predecessor k, letter 'a' or substitute [..]"),
    };
    c.end()?;
    Ok(spec)
}

fn section_arg(s: &Section, wanted: bool) -> Result<Option<usize>, DslError> {
    match (&s.arg, wanted) {
        (None, false) => Ok(None),
        (Some(a), true) => match a.parse() {
            Ok(v) => Ok(Some(v)),
            Err(_) => parse_err(s.line, 2 + s.name.chars().count(), "a factor index"),
        },
        (None, true) => parse_err(s.line, 2 + s.name.chars().count(), "a factor index"),
        (Some(_), false) => parse_err(s.line, 2 + s.name.chars().count(), "']'"),
    }
}

fn parse_instance_section(s: &Section) -> Result<InstanceSpec, DslError> {
    section_arg(s, false)?;
    let mut k = Keys::new(s, &["blocks", "bound", "budget", "colors", "coordinates", "fresh", "lengths", "mode", "root-blocks"])?;
    let blocks = int_value(k.require("blocks")?)? as usize;
    let bound = int_value(k.require("bound")?)?;
    let budget = k.get("budget")?.map(int_value).transpose()?.unwrap_or(DEFAULT_BUDGET);
    let colors = match k.get("colors")? {
        Some(e) => {
            let v = int_value(e)?;
            if v == 0 || v > u64::from(u32::MAX) {
                return parse_err(e.line, e.value_col, "a positive number of colors");
            }
            v as u32
        }
        None => 2,
    };
    let coordinates = k
        .get("coordinates")?
        .map(uint_list)
        .transpose()?
        .map_or(vec![0], |v| v.into_iter().map(|x| x as usize).collect());
    let fresh = k.get("fresh")?.map(uint_list).transpose()?.unwrap_or_default();
    let lengths = match k.get("lengths")? {
        Some(e) => {
            let mut c = Cursor::new(e);
            let v = c.list(|c| {
                if c.eat_str("bound") {
                    Ok(LengthSpec::Bound)
                } else {
                    c.uint().map(|v| LengthSpec::Fixed(v as usize))
                }
            })?;
            c.end()?;
            v
        }
        None => Vec::new(),
    };
    let mode = match k.get("mode")? {
        Some(e) => keyword(e, &RunMode::NAMES)?,
        None => RunMode::Search,
    };
    let root_blocks = match k.get("root-blocks")? {
        Some(e) => keyword(e, &[("true", true), ("false", false)])?,
        None => false,
    };
    Ok(InstanceSpec {
        mode,
        blocks,
        bound,
        budget,
        colors,
        coordinates,
        fresh,
        lengths,
        root_blocks,
        factors: Vec::new(),
        coloring: None,
        delta: None,
    })
}

fn parse_factor_section(s: &Section) -> Result<FactorSpec, DslError> {
    let mut k = Keys::new(s, &["alphabet", "endo", "kind", "schedule", "tree"])?;
    let tree_entry = k.require("tree")?;
    let tree: Vec<Node> = uint_list(tree_entry)?.into_iter().map(|v| v as Node).collect();
    if let Err(e) = RootedTree::from_parents(&tree) {
        return parse_err(tree_entry.line, tree_entry.value_col, format!("a parent list ({e})"));
    }
    let alphabet = match k.get("alphabet")? {
        Some(e) => {
            let mut c = Cursor::new(e);
            let a: Vec<char> = c.quoted('"')?.chars().collect();
            c.end()?;
            let mut sorted = a.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != a.len() || a.iter().any(|&ch| ch == '$' || ch == '"' || ch.is_whitespace()) {
                return parse_err(e.line, e.value_col, "distinct letters other than '$', '\"' and whitespace");
            }
            a
        }
        None => Vec::new(),
    };
    let kind = match k.get("kind")? {
        Some(e) => keyword(e, &[("located", Mode::Located), ("nonlocated", Mode::Nonlocated)])?,
        None => Mode::Located,
    };
    let mut endos = BTreeMap::new();
    let mut schedule = None;
    let mut step_schedules = BTreeMap::new();
    let mut names: Vec<(String, usize, usize)> = Vec::new();
    for e in k.all("endo") {
        let Some(name) = &e.arg else {
            return parse_err(e.line, e.key_col + 4, "an endomorphism name after 'endo'");
        };
        if name == ALL_HOMS {
            return parse_err(e.line, e.key_col + 5, format!("a name other than the reserved '{ALL_HOMS}'"));
        }
        endos.insert(name.clone(), endo_value(e)?);
    }
    for e in k.all("schedule") {
        let list = name_list(e)?;
        if list.is_empty() {
            return parse_err(e.line, e.value_col, "at least one endomorphism");
        }
        names.extend(list.iter().map(|(n, col)| (n.clone(), e.line, *col)));
        let list = list.into_iter().map(|(n, _)| n).collect();
        match &e.arg {
            None => schedule = Some(list),
            Some(step) => match step.parse::<usize>() {
                Ok(n) => {
                    step_schedules.insert(n, list);
                }
                Err(_) => return parse_err(e.line, e.key_col + 9, "a step number"),
            },
        }
    }
    for (name, line, column) in names {
        if name != ALL_HOMS && !endos.contains_key(&name) {
            return Err(DslError::Resolution { name, line, column });
        }
    }
    let Some(schedule) = schedule else {
        return parse_err(s.line, 1, "key 'schedule' in [factor]");
    };
    Ok(FactorSpec { tree, alphabet, kind, endos, schedule, step_schedules })
}

fn parse_coloring_section(s: &Section, inst: &InstanceSpec) -> Result<ColoringSpec, DslError> {
    section_arg(s, false)?;
    let mut k = Keys::new(s, &["entry", "expr", "file"])?;
    let expr = k.get("expr")?;
    let file = k.get("file")?;
    let entries = k.all("entry");
    let styles = usize::from(expr.is_some()) + usize::from(file.is_some()) + usize::from(!entries.is_empty());
    if styles != 1 {
        return parse_err(s.line, 1, "exactly one of 'expr', 'file' or 'entry' lines in [coloring]");
    }
    if let Some(e) = expr {
        return Ok(ColoringSpec::Expr(expression(&e.value, e.line, e.value_col)?));
    }
    if let Some(e) = file {
        let mut c = Cursor::new(e);
        let path = c.quoted('"')?;
        c.end()?;
        return Ok(ColoringSpec::File(path));
    }
    let ctxs = coordinate_contexts(inst).map_err(|m| DslError::Parse { line: s.line, column: 1, expected: m })?;
    let mut table = BTreeMap::new();
    for e in entries {
        let mut c = Cursor::new(e);
        let (words, color) = table_entry(&mut c, &ctxs)?;
        if table.insert(words, color).is_some() {
            return parse_err(e.line, e.value_col, "a tuple not listed before");
        }
    }
    Ok(ColoringSpec::Table(table))
}

fn parse_delta_section(s: &Section) -> Result<DeltaSpec, DslError> {
    section_arg(s, false)?;
    let mut k = Keys::new(s, &["degree", "hi", "lo", "map", "members", "points", "set", "sweep", "weights"])?;
    let lo_e = k.require("lo")?;
    let lo = int_list(lo_e)?;
    let hi_e = k.require("hi")?;
    let hi = int_list(hi_e)?;
    if hi.len() != lo.len() {
        return parse_err(hi_e.line, hi_e.value_col, format!("{} coordinates like 'lo'", lo.len()));
    }
    let set = match (k.get("set")?, k.get("points")?, k.get("members")?) {
        (Some(e), None, None) => SetSpec::Predicate(expression(&e.value, e.line, e.value_col)?),
        (None, Some(e), None) => {
            let mut c = Cursor::new(e);
            let path = c.quoted('"')?;
            c.end()?;
            SetSpec::Points(path)
        }
        (None, None, Some(e)) => {
            let mut c = Cursor::new(e);
            let points = c.list(|c| c.list(|c| c.int()))?;
            c.end()?;
            if let Some(p) = points.iter().find(|p| p.len() != lo.len()) {
                return parse_err(e.line, e.value_col, format!("points with {} coordinates, not {}", lo.len(), p.len()));
            }
            SetSpec::Members(points)
        }
        _ => return parse_err(s.line, 1, "exactly one of 'set', 'points' or 'members' in [delta]"),
    };
    let weights = expressions(k.require("weights")?)?;
    let map = k.get("map")?.map(expressions).transpose()?.unwrap_or_default();
    let degree = k.get("degree")?.map(int_value).transpose()?.unwrap_or(2) as u32;
    let sweep = k.get("sweep")?.map(int_list).transpose()?.unwrap_or_default();
    Ok(DeltaSpec { lo, hi, set, weights, map, degree, sweep })
}

fn coordinate_contexts(inst: &InstanceSpec) -> Result<Vec<(WordContext, Mode)>, String> {
    inst.coordinates
        .iter()
        .map(|&f| {
            let spec = inst.factors.get(f).ok_or_else(|| format!("coordinate refers to missing factor {f}"))?;
            Ok((spec.context().map_err(|e| e.to_string())?, spec.kind))
        })
        .collect()
}

/// Parse an instance file.
pub fn parse_instance(text: &str) -> Result<InstanceSpec, DslError> {
    let sections = lex(text)?;
    let find = |name: &str| -> Result<Vec<&Section>, DslError> {
        let found: Vec<&Section> = sections.iter().filter(|s| s.name == name).collect();
        if name != "factor" && found.len() > 1 {
            return parse_err(found[1].line, 1, format!("a single [{name}] section"));
        }
        Ok(found)
    };
    if let Some(s) = sections.iter().find(|s| !["instance", "factor", "coloring", "delta"].contains(&s.name.as_str())) {
        return parse_err(s.line, 2, "one of the sections instance, factor, coloring, delta");
    }
    let Some(head) = find("instance")?.first().copied() else {
        return parse_err(1, 1, "an [instance] section");
    };
    let mut inst = parse_instance_section(head)?;
    let mut factors: BTreeMap<usize, FactorSpec> = BTreeMap::new();
    for s in find("factor")? {
        let i = section_arg(s, true)?.unwrap();
        if factors.insert(i, parse_factor_section(s)?).is_some() {
            return parse_err(s.line, 1, format!("a single [factor {i}] section"));
        }
    }
    if let Some((_, (&i, _))) = factors.iter().enumerate().find(|(n, (&i, _))| *n != i) {
        return parse_err(head.line, 1, format!("factors numbered from 0 without gaps (found factor {i})"));
    }
    inst.factors = factors.into_values().collect();
    if inst.factors.is_empty() {
        return parse_err(head.line, 1, "at least one [factor N] section");
    }
    if let Some(s) = find("coloring")?.first() {
        inst.coloring = Some(parse_coloring_section(s, &inst)?);
    }
    if let Some(s) = find("delta")?.first() {
        inst.delta = Some(parse_delta_section(s)?);
    }
    Ok(inst)
}

// ---------------------------------------------------------------- emitting

fn list_text<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

impl fmt::Display for EndoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndoSpec::Identity => write!(f, "identity"),
            EndoSpec::Root => write!(f, "root"),
            EndoSpec::Hom(image) => write!(f, "hom {}", list_text(image)),
            EndoSpec::Predecessor(k) => write!(f, "predecessor {k}"),
            EndoSpec::Letter(c) => write!(f, "letter '{c}'"),
            EndoSpec::Substitute(images) => {
                let parts = images.iter().map(|i| match i {
                    ImageSpec::Delete => "-".to_string(),
                    ImageSpec::Var(v) => format!("${v}"),
                    ImageSpec::Letter(c) => format!("'{c}'"),
                });
                write!(f, "substitute {}", list_text(parts))
            }
        }
    }
}

fn join_exprs(xs: &[Ast]) -> String {
    xs.iter().map(Ast::to_string).collect::<Vec<_>>().join("; ")
}

/// Canonical text: fixed section order, keys sorted, every key written out.
pub fn emit_instance(spec: &InstanceSpec) -> String {
    let mut out = String::new();
    let lengths = spec.lengths.iter().map(|l| match l {
        LengthSpec::Fixed(d) => d.to_string(),
        LengthSpec::Bound => "bound".to_string(),
    });
    let _ = writeln!(out, "[instance]");
    let _ = writeln!(out, "blocks = {}", spec.blocks);
    let _ = writeln!(out, "bound = {}", spec.bound);
    let _ = writeln!(out, "budget = {}", spec.budget);
    let _ = writeln!(out, "colors = {}", spec.colors);
    let _ = writeln!(out, "coordinates = {}", list_text(&spec.coordinates));
    let _ = writeln!(out, "fresh = {}", list_text(&spec.fresh));
    let _ = writeln!(out, "lengths = {}", list_text(lengths));
    let _ = writeln!(out, "mode = {}", spec.mode.name());
    let _ = writeln!(out, "root-blocks = {}", spec.root_blocks);
    for (i, f) in spec.factors.iter().enumerate() {
        let _ = writeln!(out, "\n[factor {i}]");
        let _ = writeln!(out, "alphabet = \"{}\"", f.alphabet.iter().collect::<String>());
        for (name, endo) in &f.endos {
            let _ = writeln!(out, "endo {name} = {endo}");
        }
        let kind = if f.kind == Mode::Located { "located" } else { "nonlocated" };
        let _ = writeln!(out, "kind = {kind}");
        let _ = writeln!(out, "schedule = {}", list_text(&f.schedule));
        for (n, names) in &f.step_schedules {
            let _ = writeln!(out, "schedule {n} = {}", list_text(names));
        }
        let _ = writeln!(out, "tree = {}", list_text(&f.tree));
    }
    if let Some(c) = &spec.coloring {
        let _ = writeln!(out, "\n[coloring]");
        match c {
            ColoringSpec::Expr(e) => {
                let _ = writeln!(out, "expr = {e}");
            }
            ColoringSpec::File(p) => {
                let _ = writeln!(out, "file = \"{p}\"");
            }
            ColoringSpec::Table(t) => {
                for (words, color) in t {
                    let _ = writeln!(out, "entry = {} -> {color}", words.join(" | "));
                }
            }
        }
    }
    if let Some(d) = &spec.delta {
        let _ = writeln!(out, "\n[delta]");
        let _ = writeln!(out, "degree = {}", d.degree);
        let _ = writeln!(out, "hi = {}", list_text(&d.hi));
        let _ = writeln!(out, "lo = {}", list_text(&d.lo));
        if !d.map.is_empty() {
            let _ = writeln!(out, "map = {}", join_exprs(&d.map));
        }
        match &d.set {
            SetSpec::Predicate(e) => {
                let _ = writeln!(out, "set = {e}");
            }
            SetSpec::Points(p) => {
                let _ = writeln!(out, "points = \"{p}\"");
            }
            SetSpec::Members(points) => {
                let _ = writeln!(out, "members = {}", list_text(points.iter().map(list_text)));
            }
        }
        let _ = writeln!(out, "sweep = {}", list_text(&d.sweep));
        let _ = writeln!(out, "weights = {}", join_exprs(&d.weights));
    }
    out
}

/// SHA-256 of the canonical text, in hex.
pub fn instance_digest(spec: &InstanceSpec) -> String {
    hex::encode(Sha256::digest(emit_instance(spec).as_bytes()))
}

// ---------------------------------------------------------------- building

impl FactorSpec {
    pub fn context(&self) -> Result<WordContext, DslError> {
        let tree = RootedTree::from_parents(&self.tree).map_err(|e| DslError::Invalid(e.to_string()))?;
        Ok(WordContext::new(Arc::new(tree), self.alphabet.clone()))
    }

    fn endo(&self, ctx: &WordContext, name: &str) -> Result<Vec<SubstitutionMap>, DslError> {
        let tree = &ctx.tree;
        let from_image = |image: Vec<Node>| -> Result<SubstitutionMap, DslError> {
            let h = RegressiveHom::new(tree, image).map_err(|e| DslError::Invalid(format!("endo {name}: {e}")))?;
            if self.kind == Mode::Located {
                return SubstitutionMap::from_hom(ctx, &h).map_err(|e| DslError::Invalid(format!("endo {name}: {e}")));
            }
            let mapping = tree
                .nodes()
                .map(|v| (v != ROOT && h.apply(v) != ROOT).then_some(Symbol::Var(h.apply(v))))
                .collect();
            SubstitutionMap::new(ctx, self.kind, mapping).map_err(|e| DslError::Invalid(format!("endo {name}: {e}")))
        };
        if name == ALL_HOMS {
            let homs = tree.regressive_homs().map_err(|e| DslError::Invalid(e.to_string()))?;
            return homs.iter().map(|h| from_image(h.image().to_vec())).collect();
        }
        let spec = self.endos.get(name).ok_or_else(|| DslError::Invalid(format!("unknown endomorphism {name}")))?;
        let letter = |c: char| {
            ctx.alphabet
                .iter()
                .position(|&a| a == c)
                .map(|i| i as u32)
                .ok_or_else(|| DslError::Invalid(format!("endo {name}: letter '{c}' is not in the alphabet")))
        };
        let map = match spec {
            EndoSpec::Identity => SubstitutionMap::identity(ctx, self.kind),
            EndoSpec::Root => from_image(vec![ROOT; tree.node_count()])?,
            EndoSpec::Hom(image) => from_image(image.clone())?,
            EndoSpec::Predecessor(k) => from_image(RegressiveHom::predecessor_map(tree, *k).image().to_vec())?,
            EndoSpec::Letter(c) => SubstitutionMap::constant_letter(ctx, self.kind, letter(*c)?)
                .map_err(|e| DslError::Invalid(format!("endo {name}: {e}")))?,
            EndoSpec::Substitute(images) => {
                let mapping = images
                    .iter()
                    .map(|i| match i {
                        ImageSpec::Delete => Ok(None),
                        ImageSpec::Var(v) => Ok(Some(Symbol::Var(*v))),
                        ImageSpec::Letter(c) => letter(*c).map(|l| Some(Symbol::Letter(l))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                SubstitutionMap::new(ctx, self.kind, mapping).map_err(|e| DslError::Invalid(format!("endo {name}: {e}")))?
            }
        };
        Ok(vec![map])
    }
}

/// The delta part of an instance, resolved.
#[derive(Clone, Debug)]
pub struct DeltaSetup {
    pub scene: DeltaScene,
    pub weights: GSequence,
    pub map: Option<IntPolyVec>,
    pub sweep: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct BuiltInstance {
    pub search: SearchInstance,
    pub colors: u32,
    pub delta: Option<DeltaSetup>,
}

fn read_file(base: &Path, rel: &str) -> Result<String, DslError> {
    let path = base.join(rel);
    std::fs::read_to_string(&path).map_err(|e| DslError::Io { path: path.display().to_string(), message: e.to_string() })
}

impl InstanceSpec {
    /// Resolve names and files (relative to `base`) into a search instance.
    pub fn build(&self, base: &Path) -> Result<BuiltInstance, DslError> {
        let mut factors = Vec::new();
        let mut schedule = Vec::new();
        for (i, f) in self.factors.iter().enumerate() {
            let ctx = f.context()?;
            if let Some(&n) = f.step_schedules.keys().find(|&&n| n >= self.blocks) {
                return invalid(format!("factor {i}: schedule for step {n}, but there are {} blocks", self.blocks));
            }
            let mut steps = Vec::new();
            for n in 0..self.blocks {
                let names = f.step_schedules.get(&n).unwrap_or(&f.schedule);
                let mut maps = Vec::new();
                for name in names {
                    maps.extend(f.endo(&ctx, name)?);
                }
                steps.push(maps);
            }
            schedule.push(steps);
            factors.push(Factor { ctx, mode: f.kind });
        }
        let coords: Vec<CoordinateInfo> = self
            .coordinates
            .iter()
            .map(|&f| {
                factors
                    .get(f)
                    .map(|fac| CoordinateInfo { tree: Arc::clone(&fac.ctx.tree), alphabet: fac.ctx.alphabet.clone() })
                    .ok_or_else(|| DslError::Invalid(format!("coordinate refers to missing factor {f}")))
            })
            .collect::<Result<_, _>>()?;
        let coloring = match &self.coloring {
            None => Coloring::constant(self.colors),
            Some(ColoringSpec::Expr(ast)) => {
                let e = WordExpr::from_ast(ast.clone(), coords).map_err(DslError::Invalid)?;
                Coloring::expression(e, self.colors)
            }
            Some(ColoringSpec::Table(t)) => Coloring::table(self.resolve_table(t)?, self.colors),
            Some(ColoringSpec::File(rel)) => Coloring::table(self.resolve_table(&self.read_table(base, rel)?)?, self.colors),
        };
        let search = SearchInstance {
            factors,
            lambda: self.coordinates.clone(),
            coloring,
            schedule,
            fresh: self.fresh.clone(),
            min_lengths: self
                .lengths
                .iter()
                .map(|l| match l {
                    LengthSpec::Fixed(d) => MinLength::Fixed(*d),
                    LengthSpec::Bound => MinLength::Bound,
                })
                .collect(),
            position_bound: self.bound,
            block_count: self.blocks,
            root_blocks: self.root_blocks,
            budget: self.budget,
        };
        search.validate().map_err(|e| DslError::Invalid(e.to_string()))?;
        let delta = self.delta.as_ref().map(|d| d.build(base)).transpose()?;
        Ok(BuiltInstance { search, colors: self.colors, delta })
    }

    fn read_table(&self, base: &Path, rel: &str) -> Result<BTreeMap<Vec<String>, u32>, DslError> {
        let text = read_file(base, rel)?;
        let ctxs = coordinate_contexts(self).map_err(DslError::Invalid)?;
        let mut table = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let body = strip_comment(line).trim();
            if body.is_empty() {
                continue;
            }
            let mut c = Cursor::at(body, n + 1, 1);
            let (words, color) = table_entry(&mut c, &ctxs).map_err(|e| match e {
                DslError::Parse { line, column, expected } => {
                    DslError::Invalid(format!("{rel}: line {line}, column {column}: expected {expected}"))
                }
                other => other,
            })?;
            table.insert(words, color);
        }
        Ok(table)
    }

    /// The same instance with coloring and point files read in, so the
    /// text no longer depends on other files.
    pub fn inline_files(&self, base: &Path) -> Result<InstanceSpec, DslError> {
        let mut out = self.clone();
        if let Some(ColoringSpec::File(rel)) = &self.coloring {
            out.coloring = Some(ColoringSpec::Table(self.read_table(base, rel)?));
        }
        if let Some(DeltaSpec { set: SetSpec::Points(rel), .. }) = &self.delta {
            let points = parse_points(&read_file(base, rel)?).map_err(|e| DslError::Invalid(format!("{rel}: {e}")))?;
            out.delta.as_mut().unwrap().set = SetSpec::Members(points);
        }
        Ok(out)
    }

    fn resolve_table(&self, t: &BTreeMap<Vec<String>, u32>) -> Result<BTreeMap<Vec<Word>, u32>, DslError> {
        let ctxs = coordinate_contexts(self).map_err(DslError::Invalid)?;
        let mut out = BTreeMap::new();
        for (words, &color) in t {
            let mut parsed = Vec::new();
            for (text, (ctx, mode)) in words.iter().zip(&ctxs) {
                let mut c = Cursor::at(text, 0, 1);
                parsed.push(word_literal(&mut c, ctx, *mode)?);
            }
            out.insert(parsed, color);
        }
        Ok(out)
    }
}

impl DeltaSpec {
    fn build(&self, base: &Path) -> Result<DeltaSetup, DslError> {
        let dim = self.lo.len();
        let scene = match &self.set {
            SetSpec::Predicate(ast) => {
                let p = PointExpr::from_ast(ast.clone(), dim).map_err(DslError::Invalid)?;
                DeltaScene::from_predicate(&p, self.lo.clone(), self.hi.clone())
            }
            SetSpec::Points(rel) => {
                let points = parse_points(&read_file(base, rel)?).map_err(|e| DslError::Invalid(format!("{rel}: {e}")))?;
                DeltaScene::from_points(&points, self.lo.clone(), self.hi.clone())
            }
            SetSpec::Members(points) => DeltaScene::from_points(points, self.lo.clone(), self.hi.clone()),
        }
        .map_err(|e| DslError::Invalid(e.to_string()))?;
        let texts: Vec<String> = self.weights.iter().map(Ast::to_string).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let weights = GSequence::parse(&refs).map_err(|e| DslError::Invalid(e.to_string()))?;
        let map = if self.map.is_empty() {
            None
        } else {
            let comps = self
                .map
                .iter()
                .map(|a| RatPoly::from_ast(a, weights.dim()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| DslError::Invalid(e.to_string()))?;
            Some(validate_int_poly(comps, self.degree, true).map_err(|e| DslError::Invalid(e.to_string()))?)
        };
        Ok(DeltaSetup { scene, weights, map, sweep: self.sweep.clone() })
    }
}
