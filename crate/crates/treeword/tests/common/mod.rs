#![allow(dead_code)]

pub mod poly_oracle;
pub mod search_oracle;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use treeword::tree::{RegressiveHom, RootedTree, ROOT};
use treeword::words::*;

pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> Arc<RootedTree> {
    let n = rng.gen_range(1..=max_nodes);
    let parents: Vec<usize> = (1..n).map(|i| rng.gen_range(0..i)).collect();
    Arc::new(RootedTree::from_parents(&parents).unwrap())
}

/// Random context: tree with at most five nodes, alphabet of size 0..=2.
pub fn random_context<R: Rng>(rng: &mut R) -> (WordContext, Mode) {
    let tree = random_tree(rng, 5);
    let letters = rng.gen_range(0..=2);
    let alphabet = ['a', 'b'][..letters].to_vec();
    let mode = if rng.gen_bool(0.5) { Mode::Located } else { Mode::Nonlocated };
    (WordContext::new(tree, alphabet), mode)
}

/// A word of component `t` over `positions`.
pub fn random_component_word<R: Rng>(
    rng: &mut R,
    ctx: &WordContext,
    mode: Mode,
    t: usize,
    positions: &[Position],
) -> Word {
    let symbols = ctx.component_symbols(t);
    if symbols.is_empty() {
        return Word::empty(mode);
    }
    let len = rng.gen_range(0..=positions.len().min(5));
    let mut chosen: Vec<Position> = positions.choose_multiple(rng, len).copied().collect();
    chosen.sort_unstable();
    let mut syms: Vec<Symbol> = chosen.iter().map(|_| *symbols.choose(rng).unwrap()).collect();
    if t != ROOT {
        if syms.is_empty() {
            chosen.push(positions[0]);
            chosen.sort_unstable();
            syms.push(Symbol::Var(t));
        } else {
            let i = rng.gen_range(0..syms.len());
            syms[i] = Symbol::Var(t);
        }
    }
    match mode {
        Mode::Located => Word::Located(TreeWord::new(chosen.into_iter().zip(syms).collect()).unwrap()),
        Mode::Nonlocated => Word::Nonlocated(StringWord::new(syms)),
    }
}

pub fn random_hom<R: Rng>(rng: &mut R, tree: &Arc<RootedTree>) -> RegressiveHom {
    tree.regressive_homs().unwrap().choose(rng).unwrap().clone()
}

/// A random substitution map. Nonlocated maps over an empty alphabet need
/// a spine that keeps every variable off the root.
pub fn random_substitution<R: Rng>(rng: &mut R, ctx: &WordContext, mode: Mode) -> SubstitutionMap {
    random_substitution_with(rng, ctx, mode, false)
}

/// As [`random_substitution`], optionally restricted to monotone spines.
pub fn random_substitution_with<R: Rng>(
    rng: &mut R,
    ctx: &WordContext,
    mode: Mode,
    monotone: bool,
) -> SubstitutionMap {
    let homs: Vec<RegressiveHom> = ctx
        .tree
        .regressive_homs()
        .unwrap()
        .into_iter()
        .filter(|f| !monotone || f.is_order_preserving())
        .filter(|f| {
            mode == Mode::Located
                || !ctx.alphabet.is_empty()
                || ctx.tree.nodes().skip(1).all(|v| f.apply(v) != ROOT)
        })
        .collect();
    let f = homs.choose(rng).unwrap();
    let mapping = ctx
        .tree
        .nodes()
        .map(|v| {
            if v == ROOT {
                return None;
            }
            let u = f.apply(v);
            if u != ROOT {
                return Some(Symbol::Var(u));
            }
            let letter = (!ctx.alphabet.is_empty()).then(|| Symbol::Letter(rng.gen_range(0..ctx.alphabet.len() as u32)));
            match mode {
                Mode::Nonlocated => letter,
                Mode::Located if rng.gen_bool(0.5) => None,
                Mode::Located => letter,
            }
        })
        .collect();
    SubstitutionMap::new(ctx, mode, mapping).unwrap()
}

/// A word of a uniformly chosen component.
pub fn random_word<R: Rng>(rng: &mut R, ctx: &WordContext, mode: Mode, positions: &[Position]) -> Word {
    let t = rng.gen_range(0..ctx.tree.node_count());
    random_component_word(rng, ctx, mode, t, positions)
}
