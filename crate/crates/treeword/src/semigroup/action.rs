//! Actions of a rooted tree on a finite semigroup and the two constructions
//! of idempotent assignments: order-preserving idempotents from a seed, and
//! minimal assignments for layered actions.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{idempotent_power_by, Elem, FiniteSemigroup, SemigroupError, SubSemigroup};
use crate::tree::{same_tree, Node, RegressiveHom, RootedTree, ROOT};

/// A semigroup endomorphism together with its spine.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SemigroupEndo {
    pub map: Vec<Elem>,
    pub spine: RegressiveHom,
}

impl SemigroupEndo {
    /// `self ∘ other`.
    pub fn compose(&self, other: &SemigroupEndo) -> SemigroupEndo {
        SemigroupEndo {
            map: other.map.iter().map(|&x| self.map[x]).collect(),
            spine: self.spine.compose(&other.spine).expect("same tree"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TreeActionFin {
    ambient: FiniteSemigroup,
    tree: Arc<RootedTree>,
    node_sub: Vec<SubSemigroup>,
    generators: Vec<SemigroupEndo>,
    family: Vec<SemigroupEndo>,
}

/// Node map `t -> xi(t)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdempotentAssignment {
    pub xi: Vec<Elem>,
}

/// First failed invariant of an assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AssignmentViolation {
    WrongLength,
    OutsideNode { node: Node, value: Elem },
    NotIdempotent { node: Node, value: Elem },
    NotEquivariant { endo: usize, node: Node },
    NotOrderPreserving { lower: Node, upper: Node },
    NotMinimal { node: Node, below: Elem },
    RootChanged { expected: Elem, found: Elem },
}

impl TreeActionFin {
    /// Validates the data and closes the generators under composition.
    pub fn new(
        ambient: FiniteSemigroup,
        tree: Arc<RootedTree>,
        node_sub: Vec<SubSemigroup>,
        generators: Vec<SemigroupEndo>,
    ) -> Result<Self, SemigroupError> {
        let invalid = |m: String| Err(SemigroupError::InvalidAction(m));
        if node_sub.len() != tree.node_count() {
            return invalid("one subsemigroup per node required".into());
        }
        for x in &node_sub {
            if x.elements().iter().any(|&e| e >= ambient.order()) {
                return invalid("subsemigroup outside the ambient semigroup".into());
            }
        }
        for t in tree.nodes() {
            for u in tree.root_path(t) {
                if !ambient.set_leq(&node_sub[t], &node_sub[u]) {
                    return invalid(format!("X_{t} <= X_{u} fails"));
                }
            }
        }
        for (i, g) in generators.iter().enumerate() {
            if !same_tree(g.spine.tree(), &tree) {
                return invalid(format!("endo {i} has a spine on another tree"));
            }
            if !ambient.is_endomorphism(&g.map) {
                return invalid(format!("endo {i} is not a homomorphism"));
            }
            for t in tree.nodes() {
                let target = &node_sub[g.spine.apply(t)];
                if node_sub[t].elements().iter().any(|&e| !target.contains(g.map[e])) {
                    return invalid(format!("endo {i} does not map X_{t} into its spine image"));
                }
                if g.spine.apply(t) == t && node_sub[t].elements().iter().any(|&e| g.map[e] != e) {
                    return invalid(format!("endo {i} moves X_{t} although its spine fixes {t}"));
                }
            }
        }
        let family = close_under_composition(&generators);
        Ok(TreeActionFin {
            ambient,
            tree,
            node_sub,
            generators,
            family,
        })
    }

    pub fn ambient(&self) -> &FiniteSemigroup {
        &self.ambient
    }

    pub fn tree(&self) -> &Arc<RootedTree> {
        &self.tree
    }

    pub fn node_sub(&self) -> &[SubSemigroup] {
        &self.node_sub
    }

    pub fn generators(&self) -> &[SemigroupEndo] {
        &self.generators
    }

    /// The generators closed under composition.
    pub fn family(&self) -> &[SemigroupEndo] {
        &self.family
    }

    /// `tau(xi(t)) = xi(f_tau(t))` for every member of the family.
    pub fn is_equivariant(&self, xi: &[Elem]) -> bool {
        self.family
            .iter()
            .all(|e| self.tree.nodes().all(|t| e.map[xi[t]] == xi[e.spine.apply(t)]))
    }

    /// Membership in `X_α`, idempotency and order preservation.
    pub fn check_assignment(&self, xi: &[Elem]) -> Result<(), AssignmentViolation> {
        let s = &self.ambient;
        if xi.len() != self.tree.node_count() {
            return Err(AssignmentViolation::WrongLength);
        }
        for t in self.tree.nodes() {
            if !self.node_sub[t].contains(xi[t]) {
                return Err(AssignmentViolation::OutsideNode { node: t, value: xi[t] });
            }
            if !s.is_idempotent(xi[t]) {
                return Err(AssignmentViolation::NotIdempotent { node: t, value: xi[t] });
            }
        }
        for (i, e) in self.family.iter().enumerate() {
            for t in self.tree.nodes() {
                if e.map[xi[t]] != xi[e.spine.apply(t)] {
                    return Err(AssignmentViolation::NotEquivariant { endo: i, node: t });
                }
            }
        }
        for t in self.tree.nodes() {
            for u in self.tree.root_path(t) {
                if !s.leq_unchecked(xi[t], xi[u]) {
                    return Err(AssignmentViolation::NotOrderPreserving { lower: t, upper: u });
                }
            }
        }
        Ok(())
    }

    /// [`Self::check_assignment`] plus minimality of every `xi(t)` in `X_t`.
    pub fn check_minimal_assignment(&self, xi: &[Elem]) -> Result<(), AssignmentViolation> {
        self.check_assignment(xi)?;
        let s = &self.ambient;
        for t in self.tree.nodes() {
            for &z in self.node_sub[t].elements() {
                if z != xi[t] && s.is_idempotent(z) && s.leq_unchecked(z, xi[t]) {
                    return Err(AssignmentViolation::NotMinimal { node: t, below: z });
                }
            }
        }
        Ok(())
    }

    /// Generators move every node by at most one level, and the lift
    /// condition holds for every non-root node.
    pub fn check_layered(&self) -> Result<(), SemigroupError> {
        let tree = &self.tree;
        for (i, g) in self.generators.iter().enumerate() {
            for t in tree.nodes() {
                let f = g.spine.apply(t);
                if f != t && Some(f) != tree.parent(t) {
                    return Err(SemigroupError::NotLayered(format!(
                        "generator {i} sends {t} to {f}, more than one level"
                    )));
                }
            }
        }
        for t in tree.nodes().skip(1) {
            let up = tree.parent(t).expect("non-root");
            let lowering: Vec<&SemigroupEndo> = self.lowering(t);
            if lowering.is_empty() {
                continue;
            }
            for p in self.ambient.minimal_idempotents(&self.node_sub[up]) {
                let lifts = self.node_sub[t]
                    .elements()
                    .iter()
                    .any(|&q| lowering.iter().all(|g| g.map[q] == p));
                if !lifts {
                    return Err(SemigroupError::NotLayered(format!(
                        "minimal idempotent {p} of X_{up} has no common preimage in X_{t}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Generators whose spine sends `t` to its parent.
    fn lowering(&self, t: Node) -> Vec<&SemigroupEndo> {
        let up = self.tree.parent(t);
        self.generators
            .iter()
            .filter(|g| Some(g.spine.apply(t)) == up)
            .collect()
    }
}

fn close_under_composition(generators: &[SemigroupEndo]) -> Vec<SemigroupEndo> {
    let mut family: Vec<SemigroupEndo> = Vec::new();
    let mut seen = HashSet::new();
    for g in generators {
        if seen.insert(g.clone()) {
            family.push(g.clone());
        }
    }
    let mut i = 0;
    while i < family.len() {
        for g in generators {
            for c in [family[i].compose(g), g.compose(&family[i])] {
                if seen.insert(c.clone()) {
                    family.push(c);
                }
            }
        }
        i += 1;
    }
    family
}

/// Order-preserving idempotent of `X_α` agreeing with `seed` at the root.
///
/// Stage `k` sums the previous stage along predecessor maps,
/// `cand(t) = xi(π_0 t) + xi(π_1 t) + ... + xi(π_n t)`, and takes an
/// idempotent power of `cand` in the product semigroup. The result is
/// `xi(π_n t) + ... + xi(π_0 t)` over the last stage.
pub fn order_preserving_idempotent(
    action: &TreeActionFin,
    seed: &IdempotentAssignment,
) -> Result<IdempotentAssignment, SemigroupError> {
    let s = action.ambient();
    let tree = action.tree();
    let xi0 = &seed.xi;
    if xi0.len() != tree.node_count()
        || tree.nodes().any(|t| !action.node_sub()[t].contains(xi0[t]) || !s.is_idempotent(xi0[t]))
        || !action.is_equivariant(xi0)
    {
        return Err(SemigroupError::PreconditionFailed(
            "seed is not an idempotent of X_α".into(),
        ));
    }
    let vec_op = |a: &Vec<Elem>, b: &Vec<Elem>| -> Vec<Elem> {
        a.iter().zip(b).map(|(&x, &y)| s.op(x, y)).collect()
    };
    let sum_along = |xi: &[Elem], t: Node, descending: bool| -> Elem {
        let n = tree.height(t);
        let mut ks: Vec<usize> = (0..=n).collect();
        if descending {
            ks.reverse();
        }
        ks.into_iter()
            .map(|k| xi[tree.predecessor(t, k)])
            .reduce(|a, b| s.op(a, b))
            .expect("at least one term")
    };
    let mut stage = xi0.clone();
    for k in 0..tree.max_height() {
        let cand: Vec<Elem> = tree.nodes().map(|t| sum_along(&stage, t, false)).collect();
        let next = idempotent_power_by(cand, vec_op);
        if !in_stage(action, &stage, &next, k) {
            return Err(SemigroupError::NoIdempotentInStage { stage: k });
        }
        stage = next;
    }
    let xi: Vec<Elem> = tree.nodes().map(|t| sum_along(&stage, t, true)).collect();
    action
        .check_assignment(&xi)
        .map_err(|v| SemigroupError::ConstructionFailed(format!("{v:?}")))?;
    if xi[ROOT] != xi0[ROOT] {
        return Err(SemigroupError::ConstructionFailed("root value changed".into()));
    }
    Ok(IdempotentAssignment { xi })
}

/// Membership of `next` in the stage set built from `prev` at level `k`.
fn in_stage(action: &TreeActionFin, prev: &[Elem], next: &[Elem], k: usize) -> bool {
    let s = action.ambient();
    let tree = action.tree();
    let low: Vec<Node> = tree.nodes().filter(|&t| tree.height(t) <= k).collect();
    tree.nodes()
        .all(|t| action.node_sub()[t].contains(next[t]) && s.is_idempotent(next[t]))
        && action.is_equivariant(next)
        && low.iter().all(|&t0| next[t0] == prev[t0])
        && tree.nodes().all(|t| {
            low.iter()
                .all(|&t0| !tree.leq(t, t0) || s.op(next[t], next[t0]) == next[t])
        })
}

/// Minimal idempotents `x_t` of every `X_t`, equivariant and order-preserving,
/// for a layered action. Built root-first by height.
pub fn layered_minimal_assignment(action: &TreeActionFin) -> Result<IdempotentAssignment, SemigroupError> {
    action.check_layered()?;
    let s = action.ambient();
    let tree = action.tree();
    let subs = action.node_sub();
    let mut order: Vec<Node> = tree.nodes().collect();
    order.sort_by_key(|&t| (tree.height(t), t));
    let mut x = vec![usize::MAX; tree.node_count()];
    x[ROOT] = *s
        .minimal_idempotents(&subs[ROOT])
        .first()
        .expect("finite semigroups have idempotents");
    for &t in order.iter().skip(1) {
        let up = tree.parent(t).expect("non-root");
        let below = x[up];
        let lowering = action.lowering(t);
        x[t] = if lowering.is_empty() {
            s.minimal_lift(&subs[t], &subs[up], below)?
        } else {
            let y: Vec<Elem> = subs[t]
                .elements()
                .iter()
                .copied()
                .filter(|&z| lowering.iter().all(|g| g.map[z] == below))
                .collect();
            let y = SubSemigroup::new(s, y)
                .map_err(|e| SemigroupError::ConstructionFailed(format!("Y at node {t}: {e}")))?;
            let shifted = SubSemigroup::new(s, s.right_translate(&y, below))
                .map_err(|e| SemigroupError::ConstructionFailed(format!("Y+x at node {t}: {e}")))?;
            let a0 = *s
                .minimal_idempotents(&shifted)
                .first()
                .ok_or_else(|| SemigroupError::ConstructionFailed(format!("no idempotent at node {t}")))?;
            // a0 need not sit below x_{t-}; x_{t-} + a0 does and stays minimal
            s.op(below, a0)
        };
    }
    action
        .check_minimal_assignment(&x)
        .map_err(|v| SemigroupError::ConstructionFailed(format!("{v:?}")))?;
    Ok(IdempotentAssignment { xi: x })
}

#[cfg(test)]
mod tests {
    use super::super::samples::*;
    use super::*;

    fn trivial_action(tree: RootedTree, s: FiniteSemigroup) -> TreeActionFin {
        let tree = Arc::new(tree);
        let full = SubSemigroup::full(&s);
        let id = SemigroupEndo {
            map: s.elements().collect(),
            spine: RegressiveHom::identity(&tree),
        };
        TreeActionFin::new(s, Arc::clone(&tree), vec![full; tree.node_count()], vec![id]).unwrap()
    }

    #[test]
    fn trivial_action_keeps_constant_seed() {
        let action = trivial_action(RootedTree::path(2), chain_min(3));
        let seed = IdempotentAssignment { xi: vec![1, 1, 1] };
        assert_eq!(order_preserving_idempotent(&action, &seed).unwrap(), seed);
        let layered = layered_minimal_assignment(&action).unwrap();
        assert_eq!(layered.xi, vec![0, 0, 0]);
    }

    #[test]
    fn single_node_returns_seed() {
        let action = trivial_action(RootedTree::singleton(), left_zero(3));
        let seed = IdempotentAssignment { xi: vec![2] };
        assert_eq!(order_preserving_idempotent(&action, &seed).unwrap(), seed);
    }

    #[test]
    fn two_node_ideal_instance() {
        // X_r = ({0,1,2}, min), X_t = ideal {0,1}, one endo lowering t to r
        let s = chain_min(3);
        let tree = Arc::new(RootedTree::path(1));
        let ideal = SubSemigroup::new(&s, vec![0, 1]).unwrap();
        let spine = RegressiveHom::constant_root(&tree);
        let endo = SemigroupEndo { map: vec![0, 1, 2], spine };
        let action = TreeActionFin::new(s.clone(), tree, vec![SubSemigroup::full(&s), ideal], vec![endo]).unwrap();
        let x = layered_minimal_assignment(&action).unwrap();
        assert!(action.node_sub()[1].contains(x.xi[1]));
        assert_eq!(s.idempotent_leq(x.xi[1], x.xi[0]), Ok(true));
        let all = idempotent_assignments(&action);
        let minimal: Vec<&Vec<Elem>> = all
            .iter()
            .filter(|xi| action.check_minimal_assignment(xi).is_ok())
            .collect();
        assert_eq!(minimal, vec![&x.xi]);
    }

    #[test]
    fn two_level_jump_is_not_layered() {
        let s = chain_min(2);
        let tree = Arc::new(RootedTree::path(2));
        let full = SubSemigroup::full(&s);
        let jump = SemigroupEndo {
            map: vec![0, 1],
            spine: RegressiveHom::new(&tree, vec![0, 1, 0]).unwrap(),
        };
        let action = TreeActionFin::new(s, tree, vec![full.clone(), full.clone(), full], vec![jump]).unwrap();
        assert!(matches!(
            layered_minimal_assignment(&action),
            Err(SemigroupError::NotLayered(_))
        ));
    }
}
