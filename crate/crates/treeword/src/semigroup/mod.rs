//! Finite semigroups given by Cayley tables, their idempotents and the
//! order `e0 <= e1` iff `e0 + e1 = e1 + e0 = e0`.

mod action;
pub mod samples;
mod verify;

use std::collections::HashSet;
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{
    layered_minimal_assignment, order_preserving_idempotent, AssignmentViolation,
    IdempotentAssignment, SemigroupEndo, TreeActionFin,
};
pub use verify::{verify_minimal_lift_exhaustive, verify_minimal_lift_table, LiftCounterexample, LiftVerificationReport};

/// Element index inside a [`FiniteSemigroup`].
pub type Elem = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemigroupError {
    #[error("Cayley table is not square")]
    NotSquare,
    #[error("table entry {entry} out of range for order {order}")]
    EntryOutOfRange { entry: usize, order: usize },
    #[error("table syntax: {0}")]
    Syntax(String),
    #[error("empty table")]
    Empty,
    #[error("not associative: ({0}+{1})+{2} != {0}+({1}+{2})")]
    NotAssociative(Elem, Elem, Elem),
    #[error("element {0} out of range")]
    ElementOutOfRange(Elem),
    #[error("subsemigroup carrier is empty")]
    EmptyCarrier,
    #[error("carrier not closed: {0}+{1} leaves the set")]
    NotClosed(Elem, Elem),
    #[error("{0} is not idempotent")]
    NotIdempotent(Elem),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("no idempotent found in stage {stage}")]
    NoIdempotentInStage { stage: usize },
    #[error("action is not layered: {0}")]
    NotLayered(String),
    #[error("construction produced an invalid result: {0}")]
    ConstructionFailed(String),
}

/// True iff `table` is a square table over `0..n` with `(a+b)+c = a+(b+c)`.
pub fn check_associativity(table: &[Vec<usize>]) -> bool {
    let n = table.len();
    if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
        return false;
    }
    associativity_violation(n, |a, b| table[a][b]).is_none()
}

fn associativity_violation(n: usize, op: impl Fn(usize, usize) -> usize) -> Option<(Elem, Elem, Elem)> {
    for a in 0..n {
        for b in 0..n {
            let ab = op(a, b);
            for c in 0..n {
                if op(ab, c) != op(a, op(b, c)) {
                    return Some((a, b, c));
                }
            }
        }
    }
    None
}

/// A finite semigroup on `0..order`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct FiniteSemigroup {
    order: usize,
    table: Vec<Elem>,
}

impl FiniteSemigroup {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self, SemigroupError> {
        let order = rows.len();
        if order == 0 {
            return Err(SemigroupError::Empty);
        }
        if rows.iter().any(|r| r.len() != order) {
            return Err(SemigroupError::NotSquare);
        }
        let table: Vec<Elem> = rows.into_iter().flatten().collect();
        if let Some(&entry) = table.iter().find(|&&x| x >= order) {
            return Err(SemigroupError::EntryOutOfRange { entry, order });
        }
        if let Some((a, b, c)) = associativity_violation(order, |a, b| table[a * order + b]) {
            return Err(SemigroupError::NotAssociative(a, b, c));
        }
        Ok(FiniteSemigroup { order, table })
    }

    pub fn from_fn(order: usize, op: impl Fn(Elem, Elem) -> Elem) -> Result<Self, SemigroupError> {
        let rows = (0..order)
            .map(|a| (0..order).map(|b| op(a, b)).collect())
            .collect();
        Self::new(rows)
    }

    /// Parse a Cayley table: a JSON array of rows, or one row of
    /// whitespace-separated entries per line.
    pub fn parse_table(text: &str) -> Result<Self, SemigroupError> {
        let rows: Vec<Vec<usize>> = if text.trim_start().starts_with('[') {
            serde_json::from_str(text).map_err(|e| SemigroupError::Syntax(e.to_string()))?
        } else {
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(|l| {
                    l.split_whitespace()
                        .map(|x| x.parse().map_err(|_| SemigroupError::Syntax(format!("bad entry '{x}'"))))
                        .collect()
                })
                .collect::<Result<_, _>>()?
        };
        Self::new(rows)
    }

    /// Row-major grid, one row per line.
    pub fn to_text(&self) -> String {
        self.rows()
            .iter()
            .map(|r| r.iter().map(usize::to_string).collect::<Vec<_>>().join(" ") + "\n")
            .collect()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.order
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    #[inline]
    pub fn op(&self, a: Elem, b: Elem) -> Elem {
        self.table[a * self.order + b]
    }

    pub fn is_idempotent(&self, e: Elem) -> bool {
        self.op(e, e) == e
    }

    pub fn idempotents(&self) -> Vec<Elem> {
        self.elements().filter(|&e| self.is_idempotent(e)).collect()
    }

    /// An idempotent among the powers of `x`.
    pub fn idempotent_power(&self, x: Elem) -> Elem {
        idempotent_power_by(x, |a, b| self.op(*a, *b))
    }

    /// `e0 <= e1`.
    pub fn idempotent_leq(&self, e0: Elem, e1: Elem) -> Result<bool, SemigroupError> {
        for e in [e0, e1] {
            if e >= self.order {
                return Err(SemigroupError::ElementOutOfRange(e));
            }
            if !self.is_idempotent(e) {
                return Err(SemigroupError::NotIdempotent(e));
            }
        }
        Ok(self.leq_unchecked(e0, e1))
    }

    pub(crate) fn leq_unchecked(&self, e0: Elem, e1: Elem) -> bool {
        self.op(e0, e1) == e0 && self.op(e1, e0) == e0
    }

    /// Minimal idempotents of `carrier`, ascending.
    pub fn minimal_idempotents(&self, carrier: &SubSemigroup) -> Vec<Elem> {
        let idem: Vec<Elem> = carrier
            .elements()
            .iter()
            .copied()
            .filter(|&e| self.is_idempotent(e))
            .collect();
        idem.iter()
            .copied()
            .filter(|&e| !idem.iter().any(|&z| z != e && self.leq_unchecked(z, e)))
            .collect()
    }

    /// `A <= B`: `(A+B) ∪ (B+A) ⊆ A`.
    pub fn set_leq(&self, a: &SubSemigroup, b: &SubSemigroup) -> bool {
        a.elements().iter().all(|&x| {
            b.elements()
                .iter()
                .all(|&y| a.contains(self.op(x, y)) && a.contains(self.op(y, x)))
        })
    }

    /// `{x + b : x in A}`.
    pub fn right_translate(&self, a: &SubSemigroup, b: Elem) -> Vec<Elem> {
        let mut out: Vec<Elem> = a.elements().iter().map(|&x| self.op(x, b)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// A minimal idempotent `a` of `A` with `a <= b`.
    ///
    /// A minimal idempotent `a0` of `A+b` need not satisfy `b+a0 = a0` (left-zero
    /// semigroups), so the result is `b + a0`, which is again minimal in `A+b`
    /// and lies below `b`.
    pub fn minimal_lift(
        &self,
        a: &SubSemigroup,
        b_set: &SubSemigroup,
        b: Elem,
    ) -> Result<Elem, SemigroupError> {
        if !b_set.contains(b) {
            return Err(SemigroupError::PreconditionFailed(format!("{b} is not in B")));
        }
        if !self.is_idempotent(b) {
            return Err(SemigroupError::PreconditionFailed(format!("{b} is not idempotent")));
        }
        if !self.set_leq(a, b_set) {
            return Err(SemigroupError::PreconditionFailed("A <= B fails".into()));
        }
        let translate = SubSemigroup::new(self, self.right_translate(a, b))
            .map_err(|e| SemigroupError::ConstructionFailed(format!("A+b is not a subsemigroup: {e}")))?;
        let a0 = *self
            .minimal_idempotents(&translate)
            .first()
            .ok_or_else(|| SemigroupError::ConstructionFailed("A+b has no idempotent".into()))?;
        let lifted = self.op(b, a0);
        if self.op(b, lifted) != lifted || self.op(lifted, b) != lifted || !self.is_idempotent(lifted) {
            return Err(SemigroupError::ConstructionFailed(format!(
                "b+a = a = a+b fails for a = {lifted}"
            )));
        }
        Ok(lifted)
    }

    /// Every nonempty subset closed under the operation, ordered by bitmask.
    pub fn subsemigroups(&self) -> Vec<SubSemigroup> {
        assert!(self.order <= 20, "subsemigroup enumeration is exponential");
        (1u32..(1 << self.order))
            .filter(|&mask| {
                let has = |x: Elem| mask >> x & 1 == 1;
                (0..self.order)
                    .filter(|&x| has(x))
                    .all(|x| (0..self.order).filter(|&y| has(y)).all(|y| has(self.op(x, y))))
            })
            .map(|mask| SubSemigroup {
                carrier: (0..self.order).filter(|&x| mask >> x & 1 == 1).collect(),
            })
            .collect()
    }

    /// Two-sided ideals (nonempty), ordered by bitmask.
    pub fn ideals(&self) -> Vec<SubSemigroup> {
        self.subsemigroups()
            .into_iter()
            .filter(|s| {
                s.elements().iter().all(|&x| {
                    self.elements()
                        .all(|y| s.contains(self.op(x, y)) && s.contains(self.op(y, x)))
                })
            })
            .collect()
    }

    pub fn is_endomorphism(&self, map: &[Elem]) -> bool {
        map.len() == self.order
            && map.iter().all(|&x| x < self.order)
            && self
                .elements()
                .all(|a| self.elements().all(|b| map[self.op(a, b)] == self.op(map[a], map[b])))
    }

    /// All endomorphisms by brute force over `order^order` maps.
    pub fn endomorphisms(&self) -> Vec<Vec<Elem>> {
        let n = self.order;
        let mut out = Vec::new();
        let mut map = vec![0; n];
        loop {
            if self.is_endomorphism(&map) {
                out.push(map.clone());
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                map[i] += 1;
                if map[i] < n {
                    break;
                }
                map[i] = 0;
            }
        }
    }
}

impl TryFrom<Vec<Vec<usize>>> for FiniteSemigroup {
    type Error = SemigroupError;
    fn try_from(rows: Vec<Vec<usize>>) -> Result<Self, SemigroupError> {
        FiniteSemigroup::new(rows)
    }
}

impl From<FiniteSemigroup> for Vec<Vec<usize>> {
    fn from(s: FiniteSemigroup) -> Self {
        s.rows()
    }
}

impl fmt::Debug for FiniteSemigroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteSemigroup{:?}", self.rows())
    }
}

/// Idempotent among the powers of `x` under `op`.
///
/// Squares `x` until a value repeats; the repeated value lies in the cyclic
/// group of the monogenic subsemigroup, whose identity is then reached by
/// adding the repeated value to itself.
pub fn idempotent_power_by<T, F>(x: T, op: F) -> T
where
    T: Clone + Eq + Hash,
    F: Fn(&T, &T) -> T,
{
    let mut seen = HashSet::new();
    let mut y = x;
    while seen.insert(y.clone()) {
        y = op(&y, &y);
    }
    let c = y;
    let mut z = c.clone();
    loop {
        if op(&z, &z) == z {
            return z;
        }
        z = op(&z, &c);
    }
}

/// A nonempty carrier closed under the ambient operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubSemigroup {
    carrier: Vec<Elem>,
}

impl SubSemigroup {
    pub fn new(s: &FiniteSemigroup, elements: Vec<Elem>) -> Result<Self, SemigroupError> {
        let mut carrier = elements;
        carrier.sort_unstable();
        carrier.dedup();
        if carrier.is_empty() {
            return Err(SemigroupError::EmptyCarrier);
        }
        if let Some(&x) = carrier.iter().find(|&&x| x >= s.order()) {
            return Err(SemigroupError::ElementOutOfRange(x));
        }
        for &x in &carrier {
            for &y in &carrier {
                if carrier.binary_search(&s.op(x, y)).is_err() {
                    return Err(SemigroupError::NotClosed(x, y));
                }
            }
        }
        Ok(SubSemigroup { carrier })
    }

    pub fn full(s: &FiniteSemigroup) -> Self {
        SubSemigroup {
            carrier: s.elements().collect(),
        }
    }

    pub fn elements(&self) -> &[Elem] {
        &self.carrier
    }

    pub fn contains(&self, x: Elem) -> bool {
        self.carrier.binary_search(&x).is_ok()
    }

    pub fn len(&self) -> usize {
        self.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carrier.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::samples::*;
    use super::*;

    #[test]
    fn associativity_examples() {
        let z3: Vec<Vec<usize>> = (0..3).map(|a| (0..3).map(|b| (a + b) % 3).collect()).collect();
        assert!(check_associativity(&z3));
        let lz: Vec<Vec<usize>> = (0..3).map(|a| vec![a; 3]).collect();
        assert!(check_associativity(&lz));
        assert!(!check_associativity(&[vec![1, 0], vec![0, 0]]));
        assert!(matches!(
            FiniteSemigroup::new(vec![vec![1, 0], vec![0, 0]]),
            Err(SemigroupError::NotAssociative(..))
        ));
    }

    #[test]
    fn idempotent_powers() {
        assert_eq!(cyclic_mul(6).idempotent_power(2), 4);
        assert_eq!(cyclic_add(4).idempotent_power(1), 0);
        assert_eq!(cyclic_add(3).idempotent_power(1), 0);
        let s = left_zero(3);
        assert_eq!(s.idempotent_power(2), 2);
    }

    #[test]
    fn order_on_idempotents() {
        let m = cyclic_mul(2);
        assert_eq!(m.idempotent_leq(0, 1), Ok(true));
        assert_eq!(m.idempotent_leq(1, 1), Ok(true));
        assert_eq!(left_zero(2).idempotent_leq(0, 1), Ok(false));
        assert_eq!(cyclic_add(3).idempotent_leq(1, 0), Err(SemigroupError::NotIdempotent(1)));
    }

    #[test]
    fn minimal_idempotent_sets() {
        let lz = left_zero(4);
        assert_eq!(lz.minimal_idempotents(&SubSemigroup::full(&lz)), vec![0, 1, 2, 3]);
        let m = cyclic_mul(2);
        assert_eq!(m.minimal_idempotents(&SubSemigroup::full(&m)), vec![0]);
        let one = cyclic_add(1);
        assert_eq!(one.minimal_idempotents(&SubSemigroup::full(&one)), vec![0]);
    }

    #[test]
    fn lift_examples() {
        let m = cyclic_mul(2);
        let a = SubSemigroup::new(&m, vec![0]).unwrap();
        let b = SubSemigroup::full(&m);
        assert_eq!(m.minimal_lift(&a, &b, 1), Ok(0));
        // left-zero: the lowest minimal idempotent of A+b is 0, but only 1 lies below 1
        let lz = left_zero(2);
        let full = SubSemigroup::full(&lz);
        assert_eq!(lz.minimal_lift(&full, &full, 1), Ok(1));
        assert!(matches!(
            m.minimal_lift(&SubSemigroup::new(&m, vec![1]).unwrap(), &b, 1),
            Err(SemigroupError::PreconditionFailed(_))
        ));
    }
}
