//! Small semigroups and random tree actions used by tests and the CLI.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Elem, FiniteSemigroup, SemigroupEndo, SubSemigroup, TreeActionFin};
use crate::tree::{enumerate_regressive_homs, RegressiveHom, RootedTree};

pub fn cyclic_add(n: usize) -> FiniteSemigroup {
    FiniteSemigroup::from_fn(n, |a, b| (a + b) % n).expect("associative")
}

pub fn cyclic_mul(n: usize) -> FiniteSemigroup {
    FiniteSemigroup::from_fn(n, |a, b| (a * b) % n).expect("associative")
}

pub fn left_zero(n: usize) -> FiniteSemigroup {
    FiniteSemigroup::from_fn(n, |a, _| a).expect("associative")
}

pub fn right_zero(n: usize) -> FiniteSemigroup {
    FiniteSemigroup::from_fn(n, |_, b| b).expect("associative")
}

/// `{0, .., n-1}` under `min`.
pub fn chain_min(n: usize) -> FiniteSemigroup {
    FiniteSemigroup::from_fn(n, |a, b| a.min(b)).expect("associative")
}

/// Every product equals `0`.
pub fn null(n: usize) -> FiniteSemigroup {
    FiniteSemigroup::from_fn(n, |_, _| 0).expect("associative")
}

pub fn product(s: &FiniteSemigroup, t: &FiniteSemigroup) -> FiniteSemigroup {
    let m = t.order();
    FiniteSemigroup::from_fn(s.order() * m, |a, b| {
        s.op(a / m, b / m) * m + t.op(a % m, b % m)
    })
    .expect("product of semigroups is associative")
}

/// Subsemigroup of the full transformation semigroup on `points` points
/// generated by `gens`, relabelled in discovery order. `None` if it exceeds
/// `max_order` elements.
pub fn transformation_semigroup(
    points: usize,
    gens: &[Vec<usize>],
    max_order: usize,
) -> Option<FiniteSemigroup> {
    // composition convention: (f + g)(x) = g(f(x))
    let compose = |f: &Vec<usize>, g: &Vec<usize>| -> Vec<usize> { (0..points).map(|x| g[f[x]]).collect() };
    let mut elems: Vec<Vec<usize>> = Vec::new();
    for g in gens {
        if !elems.contains(g) {
            elems.push(g.clone());
        }
    }
    let mut i = 0;
    while i < elems.len() {
        for g in gens {
            let h = compose(&elems[i], g);
            if !elems.contains(&h) {
                elems.push(h);
                if elems.len() > max_order {
                    return None;
                }
            }
        }
        i += 1;
    }
    let index = |f: &Vec<usize>| elems.iter().position(|e| e == f).expect("closed");
    let n = elems.len();
    FiniteSemigroup::from_fn(n, |a, b| index(&compose(&elems[a], &elems[b]))).ok()
}

/// A random semigroup with at most `max_order` elements.
pub fn random_semigroup<R: Rng>(rng: &mut R, max_order: usize) -> FiniteSemigroup {
    loop {
        let pick = rng.gen_range(0..9);
        let n = rng.gen_range(1..=max_order);
        let s = match pick {
            0 => cyclic_add(n),
            1 => cyclic_mul(n),
            2 => left_zero(n),
            3 => right_zero(n),
            4 => chain_min(n),
            5 => null(n),
            6 => {
                let a = rng.gen_range(1..=2);
                let b = rng.gen_range(1..=2);
                let fa = vec![left_zero(a), right_zero(a), chain_min(a)].swap_remove(rng.gen_range(0..3));
                let fb = vec![cyclic_add(b), cyclic_mul(b), left_zero(b)].swap_remove(rng.gen_range(0..3));
                product(&fa, &fb)
            }
            _ => {
                let points = rng.gen_range(2..=3);
                let count = rng.gen_range(1..=2);
                let gens: Vec<Vec<usize>> = (0..count)
                    .map(|_| (0..points).map(|_| rng.gen_range(0..points)).collect())
                    .collect();
                match transformation_semigroup(points, &gens, max_order) {
                    Some(s) => s,
                    None => continue,
                }
            }
        };
        if s.order() <= max_order {
            return s;
        }
    }
}

/// Options for [`random_action`].
#[derive(Clone, Copy, Debug)]
pub struct RandomActionConfig {
    pub max_nodes: usize,
    pub max_order: usize,
    pub max_generators: usize,
    /// Restrict spines to moves of at most one level.
    pub layered: bool,
}

impl Default for RandomActionConfig {
    fn default() -> Self {
        RandomActionConfig {
            max_nodes: 4,
            max_order: 5,
            max_generators: 3,
            layered: false,
        }
    }
}

fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> RootedTree {
    let n = rng.gen_range(1..=max_nodes);
    let parents: Vec<usize> = (1..n).map(|i| rng.gen_range(0..i)).collect();
    RootedTree::from_parents(&parents).expect("parents below children")
}

/// A random valid action: the root carries any subsemigroup, the other nodes
/// carry two-sided ideals (so the order condition holds), and the generators
/// pair endomorphisms with compatible regressive spines.
pub fn random_action<R: Rng>(rng: &mut R, config: RandomActionConfig) -> TreeActionFin {
    loop {
        let s = random_semigroup(rng, config.max_order);
        let tree = Arc::new(random_tree(rng, config.max_nodes));
        let subs = s.subsemigroups();
        let ideals = s.ideals();
        let mut node_sub = vec![subs.choose(rng).expect("full set is a subsemigroup").clone()];
        for _ in 1..tree.node_count() {
            node_sub.push(ideals.choose(rng).expect("S is an ideal").clone());
        }
        let homs = enumerate_regressive_homs(&tree, 10).expect("small tree");
        let homs: Vec<RegressiveHom> = homs
            .into_iter()
            .filter(|f| {
                !config.layered
                    || tree
                        .nodes()
                        .all(|t| f.apply(t) == t || Some(f.apply(t)) == tree.parent(t))
            })
            .collect();
        let endos = s.endomorphisms();
        let mut compatible = Vec::new();
        for f in &homs {
            for map in &endos {
                if endo_compatible(&node_sub, f, map) {
                    compatible.push(SemigroupEndo {
                        map: map.clone(),
                        spine: f.clone(),
                    });
                }
            }
        }
        let non_identity: Vec<&SemigroupEndo> = compatible
            .iter()
            .filter(|e| !(e.spine.is_identity() && e.map.iter().enumerate().all(|(i, &x)| i == x)))
            .collect();
        let count = rng.gen_range(1..=config.max_generators);
        let gens: Vec<SemigroupEndo> = if non_identity.is_empty() {
            compatible.into_iter().take(1).collect()
        } else {
            (0..count)
                .map(|_| (*non_identity.choose(rng).expect("nonempty")).clone())
                .collect()
        };
        if let Ok(action) = TreeActionFin::new(s, tree, node_sub, gens) {
            return action;
        }
    }
}

pub(crate) fn endo_compatible(node_sub: &[SubSemigroup], f: &RegressiveHom, map: &[Elem]) -> bool {
    node_sub.iter().enumerate().all(|(t, x)| {
        let target = &node_sub[f.apply(t)];
        x.elements().iter().all(|&e| target.contains(map[e]))
            && (f.apply(t) != t || x.elements().iter().all(|&e| map[e] == e))
    })
}

/// All idempotent assignments in `X_α`, in lexicographic order.
pub fn idempotent_assignments(action: &TreeActionFin) -> Vec<Vec<Elem>> {
    let s = action.ambient();
    let choices: Vec<Vec<Elem>> = action
        .node_sub()
        .iter()
        .map(|x| x.elements().iter().copied().filter(|&e| s.is_idempotent(e)).collect())
        .collect();
    let mut out = Vec::new();
    let mut xi = vec![0; choices.len()];
    fill_assignments(action, &choices, 0, &mut xi, &mut out);
    out
}

fn fill_assignments(
    action: &TreeActionFin,
    choices: &[Vec<Elem>],
    t: usize,
    xi: &mut Vec<Elem>,
    out: &mut Vec<Vec<Elem>>,
) {
    if t == choices.len() {
        if action.is_equivariant(xi) {
            out.push(xi.clone());
        }
        return;
    }
    for &e in &choices[t] {
        xi[t] = e;
        fill_assignments(action, choices, t + 1, xi, out);
    }
}
