//! Runs every acceptance criterion and prints one PASS or FAIL line each.
//! Exits nonzero when any criterion fails.

#[path = "../../treeword/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::poly_oracle::{random_ast, random_point, reference, Ops, Point};
use common::search_oracle::{brute_force_count, random_blocks, random_instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeword::delta::*;
use treeword::dsl::{parse_instance, BuiltInstance};
use treeword::poly::*;
use treeword::search::*;
use treeword::semigroup::samples::{self, RandomActionConfig};
use treeword::semigroup::*;
use treeword::tree::{enumerate_regressive_homs, Node, RootedTree, DEFAULT_HOM_LIMIT};
use treeword::words::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, reason: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(reason())
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> BuiltInstance {
    let dir = root().join("instances");
    let text = fs::read_to_string(dir.join(name)).unwrap();
    parse_instance(&text).unwrap().build(&dir).unwrap()
}

fn found(outcome: SearchOutcome) -> Result<BlockWitness, String> {
    match outcome {
        SearchOutcome::Found(w) => Ok(w),
        SearchOutcome::Exhausted { nodes } => Err(format!("exhausted after {nodes} nodes")),
    }
}

/// Every map `T -> T` sending each node onto its root path with adjacent
/// or equal images along edges.
fn brute_force_homs(parents: &[Node]) -> BTreeSet<Vec<Node>> {
    let n = parents.len() + 1;
    let parent = |t: Node| (t > 0).then(|| parents[t - 1]);
    let below = |u: Node, t: Node| {
        let mut x = Some(t);
        while let Some(y) = x {
            if y == u {
                return true;
            }
            x = parent(y);
        }
        false
    };
    let adjacent = |a: Node, b: Node| parent(a) == Some(b) || parent(b) == Some(a);
    let mut out = BTreeSet::new();
    for code in 0..n.pow(n as u32) {
        let image: Vec<Node> = (0..n).map(|t| code / n.pow(t as u32) % n).collect();
        let regressive = (0..n).all(|t| below(image[t], t));
        let edges = (1..n).all(|t| {
            let (a, b) = (image[t], image[parents[t - 1]]);
            a == b || adjacent(a, b)
        });
        if regressive && edges {
            out.insert(image);
        }
    }
    out
}

/// Parent vectors of every labelled tree with `n` nodes.
fn parent_vectors(n: usize) -> Vec<Vec<Node>> {
    let mut out = vec![Vec::new()];
    for i in 1..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<Node>| {
                (0..i).map(move |q| {
                    let mut next = p.clone();
                    next.push(q);
                    next
                })
            })
            .collect();
    }
    out
}

fn regressive_hom_algebra() -> Outcome {
    let start = Instant::now();
    let path = Arc::new(RootedTree::from_parents(&[0, 1]).unwrap());
    let listed: BTreeSet<Vec<Node>> = enumerate_regressive_homs(&path, DEFAULT_HOM_LIMIT)
        .unwrap()
        .iter()
        .map(|h| h.image().to_vec())
        .collect();
    let oracle = brute_force_homs(&[0, 1]);
    ensure(listed == oracle, || format!("listed {listed:?}, oracle {oracle:?}"))?;
    ensure(oracle.len() == 5, || format!("oracle found {} maps", oracle.len()))?;
    let (mut trees, mut pairs) = (0, 0u64);
    for n in 1..=6 {
        for parents in parent_vectors(n) {
            let tree = Arc::new(RootedTree::from_parents(&parents).unwrap());
            let homs = tree.regressive_homs().unwrap();
            let images: BTreeSet<Vec<Node>> = homs.iter().map(|h| h.image().to_vec()).collect();
            ensure(images == brute_force_homs(&parents), || format!("enumeration differs on {parents:?}"))?;
            for f in &homs {
                for g in &homs {
                    let fg = f.compose(g).unwrap();
                    let expect: Vec<Node> = g.image().iter().map(|&t| f.image()[t]).collect();
                    ensure(fg.image() == expect && images.contains(&expect), || {
                        format!("{f:?} after {g:?} leaves the family on {parents:?}")
                    })?;
                    pairs += 1;
                }
            }
            trees += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("5 maps on the path, {pairs} composites over {trees} trees, {elapsed:.2?}"))
}

fn minimal_lift_exhaustive() -> Outcome {
    let start = Instant::now();
    let report = verify_minimal_lift_exhaustive(3);
    let elapsed = start.elapsed();
    ensure(report.tables_scanned == 1 + 16 + 19683, || format!("scanned {}", report.tables_scanned))?;
    ensure(report.verified && report.counterexamples.is_empty(), || {
        format!("{} counterexamples, first {:?}", report.counterexamples.len(), report.counterexamples.first())
    })?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} associative tables, {} triples, 0 counterexamples, {elapsed:.2?}",
        report.associative_tables, report.triples_checked
    ))
}

fn idempotent_constructions() -> Outcome {
    const WANTED: usize = 200;
    let config = RandomActionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut seeded = 0;
    for _ in 0..20 * WANTED {
        if seeded == WANTED {
            break;
        }
        let action = samples::random_action(&mut rng, config);
        ensure(action.tree().node_count() <= 4 && action.ambient().order() <= 5, || format!("{action:?} too large"))?;
        let Some(seed) = samples::idempotent_assignments(&action).into_iter().next() else { continue };
        let seed = IdempotentAssignment { xi: seed };
        let xi = order_preserving_idempotent(&action, &seed).map_err(|e| format!("{e} on {action:?}"))?;
        action.check_assignment(&xi.xi).map_err(|v| format!("{v:?} on {action:?}"))?;
        ensure(xi.xi[0] == seed.xi[0], || format!("root value moved on {action:?}"))?;
        seeded += 1;
    }
    ensure(seeded == WANTED, || format!("only {seeded} actions admitted a seed"))?;
    let layered_config = RandomActionConfig { layered: true, ..config };
    let mut layered = 0;
    for _ in 0..20 * WANTED {
        if layered == WANTED {
            break;
        }
        let action = samples::random_action(&mut rng, layered_config);
        match layered_minimal_assignment(&action) {
            Ok(x) => {
                action.check_minimal_assignment(&x.xi).map_err(|v| format!("{v:?} on {action:?}"))?;
                layered += 1;
            }
            Err(SemigroupError::NotLayered(_)) => {}
            Err(e) => return Err(format!("{e} on {action:?}")),
        }
    }
    ensure(layered == WANTED, || format!("only {layered} layered actions"))?;
    Ok(format!("{seeded} seeded and {layered} layered actions"))
}

fn word_laws() -> Outcome {
    const CASES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let positions: Vec<Position> = (0..12).collect();
    let mut contexts = [0usize; 3];
    let mut tally = |ctx: &WordContext, mode: Mode| {
        let k = if ctx.alphabet.is_empty() { 2 } else { usize::from(mode == Mode::Nonlocated) };
        contexts[k] += 1;
    };
    for _ in 0..CASES {
        let (ctx, mode) = common::random_context(&mut rng);
        tally(&ctx, mode);
        let split = rng.gen_range(1..11);
        let (left, right) = positions.split_at(split);
        let b0 = common::random_word(&mut rng, &ctx, mode, left);
        let b1 = common::random_word(&mut rng, &ctx, mode, right);
        let tau = common::random_substitution(&mut rng, &ctx, mode);
        let lhs = tau.apply(&b0.sum(&b1).unwrap()).unwrap();
        let rhs = tau.apply(&b0).unwrap().sum(&tau.apply(&b1).unwrap()).unwrap();
        ensure(lhs == rhs, || format!("homomorphism law fails for {b0:?} + {b1:?}"))?;
    }
    for _ in 0..CASES {
        let (ctx, mode) = common::random_context(&mut rng);
        tally(&ctx, mode);
        let sigma = common::random_substitution(&mut rng, &ctx, mode);
        let rho = common::random_substitution(&mut rng, &ctx, mode);
        let t = rng.gen_range(0..ctx.tree.node_count());
        let b = common::random_component_word(&mut rng, &ctx, mode, t, &positions[..8]);
        let both = sigma.compose(&rho).unwrap();
        ensure(both.apply(&b).unwrap() == sigma.apply(&rho.apply(&b).unwrap()).unwrap(), || {
            format!("composite disagrees on {b:?}")
        })?;
        let spines = sigma.spine_hom().unwrap().compose(&rho.spine_hom().unwrap()).unwrap();
        ensure(both.spine() == spines.image(), || "spine of the composite is not the composite spine".into())?;
    }
    for _ in 0..CASES {
        let (ctx, mode) = common::random_context(&mut rng);
        tally(&ctx, mode);
        let sigma = common::random_substitution_with(&mut rng, &ctx, mode, true);
        let t = rng.gen_range(0..ctx.tree.node_count());
        let b = common::random_component_word(&mut rng, &ctx, mode, t, &positions[..8]);
        ensure(b.classify(&ctx.tree) == Ok(t), || format!("{b:?} not in component {t}"))?;
        let image = sigma.apply(&b).unwrap();
        ensure(image.classify(&ctx.tree) == Ok(sigma.spine_at(t)), || format!("{b:?} lands off component"))?;
    }
    ensure(contexts.iter().all(|&c| c > 0), || format!("context mix {contexts:?}"))?;
    let mut drops = 0;
    for _ in 0..2000 {
        let (ctx, _) = common::random_context(&mut rng);
        let (Word::Located(b0), Word::Located(b1)) = (
            common::random_word(&mut rng, &ctx, Mode::Located, &positions[..3]),
            common::random_word(&mut rng, &ctx, Mode::Located, &positions[..3]),
        ) else {
            unreachable!()
        };
        let tau = common::random_substitution(&mut rng, &ctx, Mode::Located);
        let images = word_sum(&tau.apply_located(&b0).unwrap(), &tau.apply_located(&b1).unwrap());
        if word_sum(&b0, &b1).is_err() && images.is_ok() {
            drops += 1;
        }
    }
    ensure(drops > 0, || "no overlap-drop case among 2000 located pairs".into())?;
    Ok(format!(
        "3 x {CASES} cases (located {}, nonlocated {}, letter-free {}), {drops} overlap-drop cases",
        contexts[0], contexts[1], contexts[2]
    ))
}

fn finitary_hindman() -> Outcome {
    const EXPECTED_MUTATIONS: usize = 20;
    let built = corpus("hindman.tw");
    let inst = &built.search;
    ensure(inst.block_count == 3 && inst.position_bound == 8, || "corpus instance changed".into())?;
    let start = Instant::now();
    let witness = found(search_block_sequence(inst).map_err(|e| e.to_string())?)?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("search took {elapsed:?}"))?;
    ensure(check_block_witness(inst, &witness.blocks).is_ok(), || "verifier rejects the witness".into())?;
    let combos = enumerate_combinations(inst, &witness.blocks).map_err(|e| e.to_string())?;
    let mut rejected = 0;
    for c in &combos {
        let color = c.color.ok_or("uncolored combination")?;
        for other in (0..built.colors).filter(|&k| k != color) {
            let mutated = SearchInstance {
                coloring: inst.coloring.clone().with_override(c.words.clone(), other),
                ..inst.clone()
            };
            match check_block_witness(&mutated, &witness.blocks).verdict {
                Verdict::Violation { first, second } if first.words == c.words || second.words == c.words => rejected += 1,
                verdict => return Err(format!("mutation of {} gave {verdict:?}", c.line(inst))),
            }
        }
    }
    ensure(rejected == EXPECTED_MUTATIONS, || {
        format!(
            "witness found in {elapsed:.2?} and verified; all {rejected} single-color mutations rejected, \
             but the instance has {} combinations, not {EXPECTED_MUTATIONS}",
            combos.len()
        )
    })?;
    Ok(format!("{elapsed:.2?}, {rejected} mutations rejected"))
}

fn finitary_gowers() -> Outcome {
    let built = corpus("gowers.tw");
    let inst = &built.search;
    let tree = &inst.factors[0].ctx.tree;
    ensure(inst.position_bound == 12 && tree.node_count() == 3, || "corpus instance changed".into())?;
    let homs = tree.regressive_homs().unwrap().len();
    ensure(inst.schedule[0].iter().all(|step| step.len() == homs), || "schedule is not every regressive hom".into())?;
    let witness = found(search_block_sequence(inst).map_err(|e| e.to_string())?)?;
    ensure(check_block_witness(inst, &witness.blocks).is_ok(), || "verifier rejects the witness".into())?;
    Ok(format!("{} combinations checked within bound 12", witness.report.coverage.combinations))
}

fn hales_jewett_threshold() -> Outcome {
    let built = corpus("hales_jewett.tw");
    let start = Instant::now();
    let outcome = threshold(&built.search, built.colors, built.search.position_bound, built.search.budget)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ThresholdOutcome::Certified { bound, certificates } = outcome else {
        return Err(format!("{outcome:?}"));
    };
    ensure(bound == 2, || format!("certified {bound}"))?;
    ensure(certificates[0].avoiding.is_some(), || "no avoiding coloring at length 1".into())?;
    ensure(certificates[1].colorings == "16" && certificates[1].avoiding.is_none(), || {
        format!("length 2 certificate {:?}", certificates[1])
    })?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("threshold 2 over 16 colorings, {elapsed:.2?}"))
}

fn milliken_taylor_products() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for i in 0..300 {
        let inst = random_instance(&mut rng, 3);
        let blocks = random_blocks(&mut rng, &inst);
        let listed = enumerate_combinations(&inst, &blocks).map_err(|e| e.to_string())?.len();
        let oracle = brute_force_count(&inst);
        ensure(listed == oracle, || format!("instance {i}: {listed} listed, {oracle} by brute force"))?;
    }
    let built = corpus("two_factor.tw");
    let inst = &built.search;
    ensure(inst.position_bound == 16 && inst.lambda == [0, 1], || "corpus instance changed".into())?;
    let witness = found(search_block_sequence(inst).map_err(|e| e.to_string())?)?;
    ensure(check_block_witness(inst, &witness.blocks).is_ok(), || "verifier rejects the witness".into())?;
    Ok(format!("300 counts agree, product witness with {} combinations", witness.report.coverage.combinations))
}

fn polynomials() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..1000 {
        let start = rng.gen_range(0..3);
        let mut next = start;
        let p = random_ast(&mut rng, 6, &mut next, 2);
        let args: Vec<Point> = (start..next).map(|_| random_point(&mut rng)).collect();
        let got = eval_extended(&p, &args, &Ops).map_err(|e| e.to_string())?;
        ensure(got == reference(&p, &args), || format!("{p:?} disagrees with the reference"))?;
    }
    let quadratic = RatPoly::parse("z*(z-1)/2", 1).unwrap();
    let certified = validate_int_poly(vec![quadratic], 2, true).map_err(|e| e.to_string())?;
    ensure(certified.eval(&[5]).unwrap() == vec![10], || "z(z-1)/2 at 5 is not 10".into())?;
    let half = RatPoly::parse("z/2", 1).unwrap();
    match validate_int_poly(vec![half.clone()], 1, false) {
        Err(PolyError::NotIntegerValued { point, .. }) if !half.eval(&point).is_integer() => {
            Ok(format!("1000 ASTs agree, z/2 fails at {point:?}"))
        }
        other => Err(format!("z/2 gave {other:?}")),
    }
}

fn delta_sets() -> Outcome {
    let built = corpus("quadratic_delta.tw");
    let setup = built.delta.as_ref().ok_or("no delta section")?;
    let density = box_density(&setup.scene, &[0], &[50]).map_err(|e| e.to_string())?;
    ensure(density.to_string() == "2/5", || format!("density {density}"))?;
    let map = setup.map.as_ref().ok_or("no polynomial map")?;
    ensure(map.eval(&[6]).unwrap() == vec![15], || "map is not z(z-1)/2".into())?;
    let problem = DeltaProblem { scene: &setup.scene, weights: &setup.weights, map: Some(map) };
    let inst = &built.search;
    ensure(inst.block_count == 2, || "corpus instance changed".into())?;
    let DeltaOutcome::Found { blocks, report, .. } = furstenberg_search(inst, &problem).map_err(|e| e.to_string())? else {
        return Err("no blocks within the bound".into());
    };
    ensure(report.is_ok(), || format!("{report:?}"))?;
    let combos = enumerate_combinations(inst, &blocks).map_err(|e| e.to_string())?;
    for c in &combos {
        let s: i64 = c.words.iter().map(|w| w.positioned_symbols().len() as i64).sum();
        let g = s * (s - 1) / 2;
        let check = delta_membership(&setup.scene, &[g]).map_err(|e| e.to_string())?;
        ensure(check.member, || format!("{g} is not a difference of the set"))?;
    }
    Ok(format!("density 2/5, {} combinations in the difference set", combos.len()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [[&str; 2]; 7] = [
        ["search", "instances/hindman.tw"],
        ["search", "instances/gowers.tw"],
        ["search", "instances/two_factor.tw"],
        ["threshold", "instances/hales_jewett.tw"],
        ["threshold", "instances/hindman_pairs_threshold.tw"],
        ["delta-scan", "instances/quadratic_delta.tw"],
        ["delta-scan", "instances/points_delta.tw"],
    ];
    let treeword = |args: &[&str]| Command::new(env!("CARGO_BIN_EXE_treeword")).args(args).current_dir(root()).output();
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{i}-{run}.json"));
            let path = path.to_str().unwrap();
            let out = treeword(&[args[0], args[1], "--seed", "7", "--format", "json", "--out", path]).map_err(|e| e.to_string())?;
            ensure(out.status.success(), || format!("{args:?} exited {:?}", out.status.code()))?;
            let check = treeword(&["verify", path]).map_err(|e| e.to_string())?;
            ensure(check.status.success(), || format!("{args:?} does not re-verify"))?;
            outputs.push(fs::read(path).map_err(|e| e.to_string())?);
        }
        ensure(outputs[0] == outputs[1], || format!("{args:?} differs between runs"))?;
    }
    Ok(format!("{} outputs re-verified in fresh processes and repeated byte for byte", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("regressive-hom algebra", regressive_hom_algebra),
        ("exhaustive minimal-lift verification", minimal_lift_exhaustive),
        ("idempotent assignment constructions", idempotent_constructions),
        ("word-algebra laws", word_laws),
        ("finitary Hindman", finitary_hindman),
        ("finitary Gowers", finitary_gowers),
        ("Hales-Jewett threshold", hales_jewett_threshold),
        ("Milliken-Taylor product form", milliken_taylor_products),
        ("polynomial module", polynomials),
        ("delta-set module", delta_sets),
        ("determinism and certificates", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let message = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(reason) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
