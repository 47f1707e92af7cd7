//! Exhaustive check of `minimal_lift` over every associative table of small order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Elem, FiniteSemigroup, SubSemigroup};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftCounterexample {
    pub table: Vec<Vec<usize>>,
    pub a: Vec<Elem>,
    pub b_set: Vec<Elem>,
    pub b: Elem,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftVerificationReport {
    pub max_order: usize,
    pub tables_scanned: u64,
    pub associative_tables: u64,
    pub triples_checked: u64,
    /// Triples where the lowest minimal idempotent `a0` of `A+b` had `b+a0 != a0`.
    pub recipe_corrections: u64,
    pub counterexamples: Vec<LiftCounterexample>,
    pub verified: bool,
}

#[derive(Default)]
struct Tally {
    scanned: u64,
    associative: u64,
    triples: u64,
    corrections: u64,
    failures: Vec<LiftCounterexample>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.scanned += other.scanned;
        self.associative += other.associative;
        self.triples += other.triples;
        self.corrections += other.corrections;
        self.failures.extend(other.failures);
        self
    }
}

fn decode_table(order: usize, mut code: u64) -> Vec<Vec<usize>> {
    let mut flat = vec![0; order * order];
    for slot in flat.iter_mut().rev() {
        *slot = (code % order as u64) as usize;
        code /= order as u64;
    }
    flat.chunks(order).map(|r| r.to_vec()).collect()
}

/// Runs `minimal_lift` on every triple `(A, B, b)` with `A <= B` and `b` an
/// idempotent of `B`, over every associative table of order `1..=max_order`,
/// and checks the result against a direct scan of `A`.
pub fn verify_minimal_lift_exhaustive(max_order: usize) -> LiftVerificationReport {
    let mut total = Tally::default();
    for order in 1..=max_order {
        let count = (order as u64).pow((order * order) as u32);
        let tally = (0..count)
            .into_par_iter()
            .map(|code| check_table(order, code))
            .reduce(Tally::default, Tally::merge);
        total = total.merge(tally);
    }
    LiftVerificationReport {
        max_order,
        tables_scanned: total.scanned,
        associative_tables: total.associative,
        triples_checked: total.triples,
        recipe_corrections: total.corrections,
        verified: total.failures.is_empty(),
        counterexamples: total.failures,
    }
}

fn check_table(order: usize, code: u64) -> Tally {
    match FiniteSemigroup::new(decode_table(order, code)) {
        Ok(s) => Tally {
            scanned: 1,
            ..check_semigroup(&s)
        },
        Err(_) => Tally {
            scanned: 1,
            ..Tally::default()
        },
    }
}

fn check_semigroup(s: &FiniteSemigroup) -> Tally {
    let mut tally = Tally {
        associative: 1,
        ..Tally::default()
    };
    let subs = s.subsemigroups();
    for a in &subs {
        for b_set in &subs {
            if !s.set_leq(a, b_set) {
                continue;
            }
            for &b in b_set.elements() {
                if !s.is_idempotent(b) {
                    continue;
                }
                tally.triples += 1;
                if literal_recipe_needs_correction(s, a, b) {
                    tally.corrections += 1;
                }
                let failure = match s.minimal_lift(a, b_set, b) {
                    Ok(x) => postcondition_failure(s, a, b, x),
                    Err(e) => Some(e.to_string()),
                };
                if let Some(reason) = failure {
                    tally.failures.push(LiftCounterexample {
                        table: s.rows(),
                        a: a.elements().to_vec(),
                        b_set: b_set.elements().to_vec(),
                        b,
                        reason,
                    });
                }
            }
        }
    }
    tally
}

/// The same check on every triple of one given semigroup.
pub fn verify_minimal_lift_table(s: &FiniteSemigroup) -> LiftVerificationReport {
    let tally = Tally {
        scanned: 1,
        ..check_semigroup(s)
    };
    LiftVerificationReport {
        max_order: s.order(),
        tables_scanned: tally.scanned,
        associative_tables: tally.associative,
        triples_checked: tally.triples,
        recipe_corrections: tally.corrections,
        verified: tally.failures.is_empty(),
        counterexamples: tally.failures,
    }
}

fn literal_recipe_needs_correction(s: &FiniteSemigroup, a: &SubSemigroup, b: Elem) -> bool {
    let translate = SubSemigroup::new(s, s.right_translate(a, b)).expect("A+b is closed");
    let a0 = s.minimal_idempotents(&translate)[0];
    s.op(b, a0) != a0
}

/// Direct scan, independent of the lift construction.
fn postcondition_failure(s: &FiniteSemigroup, a: &SubSemigroup, b: Elem, x: Elem) -> Option<String> {
    if !a.contains(x) {
        return Some(format!("{x} not in A"));
    }
    if s.op(x, x) != x {
        return Some(format!("{x} not idempotent"));
    }
    if s.op(x, b) != x || s.op(b, x) != x {
        return Some(format!("{x} not below {b}"));
    }
    for &z in a.elements() {
        if z != x && s.op(z, z) == z && s.op(z, x) == z && s.op(x, z) == z {
            return Some(format!("{z} lies strictly below {x}"));
        }
    }
    None
}
