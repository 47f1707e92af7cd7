//! Colorings of word tuples.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::expr::WordExpr;
use crate::words::Word;

pub type ColorFn = Arc<dyn Fn(&[Word]) -> i64 + Send + Sync>;

#[derive(Clone)]
pub enum ColoringKind {
    /// Explicit colors; tuples missing from the table are uncolored.
    Table(BTreeMap<Vec<Word>, u32>),
    Expression(WordExpr),
    Function(ColorFn),
}

impl fmt::Debug for ColoringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColoringKind::Table(t) => write!(f, "Table({} entries)", t.len()),
            ColoringKind::Expression(e) => write!(f, "Expression({})", e.source()),
            ColoringKind::Function(_) => write!(f, "Function"),
        }
    }
}

/// An `r`-coloring: raw values are reduced modulo `r`; overrides take
/// precedence and are used to mutate colorings in tests and certificates.
#[derive(Clone, Debug)]
pub struct Coloring {
    pub kind: ColoringKind,
    pub colors: u32,
    pub overrides: BTreeMap<Vec<Word>, u32>,
}

impl Coloring {
    pub fn new(kind: ColoringKind, colors: u32) -> Self {
        assert!(colors > 0, "at least one color");
        Coloring {
            kind,
            colors,
            overrides: BTreeMap::new(),
        }
    }

    pub fn constant(colors: u32) -> Self {
        Self::function(colors, |_| 0)
    }

    pub fn expression(expr: WordExpr, colors: u32) -> Self {
        Self::new(ColoringKind::Expression(expr), colors)
    }

    pub fn function(colors: u32, f: impl Fn(&[Word]) -> i64 + Send + Sync + 'static) -> Self {
        Self::new(ColoringKind::Function(Arc::new(f)), colors)
    }

    pub fn table(entries: BTreeMap<Vec<Word>, u32>, colors: u32) -> Self {
        Self::new(ColoringKind::Table(entries), colors)
    }

    pub fn with_override(mut self, words: Vec<Word>, color: u32) -> Self {
        self.overrides.insert(words, color % self.colors);
        self
    }

    /// `None` when a table lacks the tuple.
    pub fn color(&self, words: &[Word]) -> Option<u32> {
        if let Some(&c) = self.overrides.get(words) {
            return Some(c);
        }
        let r = i64::from(self.colors);
        match &self.kind {
            ColoringKind::Table(t) => t.get(words).map(|c| c % self.colors),
            ColoringKind::Expression(e) => Some(e.eval(words).rem_euclid(r) as u32),
            ColoringKind::Function(f) => Some(f(words).rem_euclid(r) as u32),
        }
    }
}
