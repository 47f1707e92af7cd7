use rand::Rng;
use rand_chacha::ChaCha8Rng;
use treeword::coloring::Coloring;
use treeword::search::*;
use treeword::tree::Node;
use treeword::words::Symbol::Var;
use treeword::words::*;

/// Count combinations by brute force: label every index with a coordinate
/// or "unused", then test every choice tuple for the chain condition.
pub fn brute_force_count(inst: &SearchInstance) -> usize {
    let m = inst.lambda.len();
    let b = inst.block_count;
    let mut total = 0;
    for code in 0..(m + 1).pow(b as u32) {
        let labels: Vec<usize> = (0..b).map(|d| code / (m + 1).pow(d as u32) % (m + 1)).collect();
        let used: Vec<(usize, usize)> = labels.iter().enumerate().filter(|x| *x.1 < m).map(|(d, &s)| (d, s)).collect();
        if !used.windows(2).all(|w| w[0].1 <= w[1].1) || (0..m).any(|s| !labels.contains(&s)) {
            continue;
        }
        let options: Vec<Vec<Node>> = used
            .iter()
            .map(|&(d, s)| {
                let f = inst.lambda[s];
                inst.schedule[f][d]
                    .iter()
                    .flat_map(|tau| inst.block_nodes(f).into_iter().map(move |t| tau.spine_at(t)))
                    .collect()
            })
            .collect();
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        let mut digits = vec![0usize; used.len()];
        loop {
            let ok = (0..m).all(|s| {
                let f = inst.lambda[s];
                let images: Vec<Node> = used
                    .iter()
                    .zip(&digits)
                    .enumerate()
                    .filter(|(_, (u, _))| u.1 == s)
                    .map(|(i, (_, &k))| options[i][k])
                    .collect();
                inst.factors[f].ctx.tree.classify_node_set(&images).is_chain
            });
            total += usize::from(ok);
            let mut i = 0;
            while i < digits.len() {
                digits[i] += 1;
                if digits[i] < options[i].len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == digits.len() {
                break;
            }
        }
    }
    total
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_blocks: usize) -> SearchInstance {
    let factor_count = rng.gen_range(1..=2);
    let factors: Vec<Factor> = (0..factor_count)
        .map(|_| {
            let tree = super::random_tree(rng, 4);
            let letters = rng.gen_range(0..=1);
            Factor {
                ctx: WordContext::new(tree, ['a'][..letters].to_vec()),
                mode: if rng.gen_bool(0.7) { Mode::Located } else { Mode::Nonlocated },
            }
        })
        .collect();
    let m = rng.gen_range(1..=2);
    let lambda: Vec<usize> = (0..m).map(|_| rng.gen_range(0..factor_count)).collect();
    let block_count = rng.gen_range(m..=max_blocks.max(m));
    let schedule = factors
        .iter()
        .map(|f| {
            (0..block_count)
                .map(|_| {
                    let mut maps: Vec<SubstitutionMap> =
                        (0..rng.gen_range(1..=3)).map(|_| super::random_substitution(rng, &f.ctx, f.mode)).collect();
                    maps.dedup();
                    maps
                })
                .collect()
        })
        .collect();
    let r = rng.gen_range(1..=3);
    let salt: u64 = rng.gen();
    let coloring = Coloring::function(r, move |words: &[Word]| {
        let mut h = salt;
        for w in words {
            for (p, s) in w.positioned_symbols() {
                h = h.rotate_left(9) ^ (p * 7 + matches!(s, Var(_)) as u64);
            }
            h = h.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        }
        // few distinct values, so agreement covers both verdicts
        (h >> 61) as i64 % 3
    });
    SearchInstance {
        factors,
        lambda,
        coloring,
        schedule,
        fresh: Vec::new(),
        min_lengths: vec![MinLength::Fixed(0); block_count],
        position_bound: 40,
        block_count,
        root_blocks: rng.gen_bool(0.5),
        budget: 100_000,
    }
}

pub fn random_blocks(rng: &mut ChaCha8Rng, inst: &SearchInstance) -> Blocks {
    inst.factors
        .iter()
        .enumerate()
        .map(|(f, fac)| {
            let mut lo = 0;
            (0..inst.block_count)
                .map(|_| {
                    let positions: Vec<Position> = (lo..lo + 3).collect();
                    lo += 3;
                    let mut row = vec![Word::empty(fac.mode); fac.ctx.tree.node_count()];
                    for t in inst.block_nodes(f) {
                        row[t] = super::random_component_word(rng, &fac.ctx, fac.mode, t, &positions);
                    }
                    row
                })
                .collect()
        })
        .collect()
}
