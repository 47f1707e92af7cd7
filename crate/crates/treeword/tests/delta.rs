use std::collections::BTreeSet;
use std::sync::Arc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeword::coloring::Coloring;
use treeword::delta::*;
use treeword::expr::PointExpr;
use treeword::poly::{validate_int_poly, RatPoly};
use treeword::search::*;
use treeword::tree::RootedTree;
use treeword::words::*;

fn scene_1d(predicate: &str, lo: i64, hi: i64) -> DeltaScene {
    DeltaScene::from_predicate(&PointExpr::compile(predicate, 1).unwrap(), vec![lo], vec![hi]).unwrap()
}

fn instance(blocks: usize, bound: Position) -> SearchInstance {
    let ctx = WordContext::letter_free(Arc::new(RootedTree::path(1)));
    let maps: Vec<SubstitutionMap> = ctx
        .tree
        .regressive_homs()
        .unwrap()
        .iter()
        .map(|h| SubstitutionMap::from_hom(&ctx, h).unwrap())
        .collect();
    SearchInstance {
        factors: vec![Factor { ctx, mode: Mode::Located }],
        lambda: vec![0],
        coloring: Coloring::constant(1),
        schedule: vec![vec![maps; blocks]],
        fresh: Vec::new(),
        min_lengths: Vec::new(),
        position_bound: bound,
        block_count: blocks,
        root_blocks: false,
        budget: 10_000_000,
    }
}

fn ones() -> GSequence {
    GSequence::parse(&["1"]).unwrap()
}

#[test]
fn densities_of_simple_sets() {
    let evens = scene_1d("x % 2 == 0", 0, 100);
    assert_eq!(box_density(&evens, &[0], &[100]).unwrap(), Ratio::new(1, 2));
    let empty = scene_1d("0", 0, 100);
    assert_eq!(box_density(&empty, &[0], &[100]).unwrap(), Ratio::new(0, 1));
    let fives = scene_1d("x % 5 <= 1", 0, 200);
    assert_eq!(box_density(&fives, &[0], &[50]).unwrap(), Ratio::new(2, 5));
    assert_eq!(box_density(&fives, &[0], &[3]).unwrap(), Ratio::new(2, 3));
    assert_eq!(box_density(&fives, &[5], &[5]), Err(DeltaError::EmptyBox));
    assert!(matches!(box_density(&fives, &[150], &[250]), Err(DeltaError::OutsideWindow { .. })));
}

#[test]
fn densities_agree_with_direct_counts_and_are_subadditive() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let points: Vec<Vec<i64>> = (0..rng.gen_range(0..60)).map(|_| vec![rng.gen_range(-5..15), rng.gen_range(0..12)]).collect();
        let (a, b): (Vec<_>, Vec<_>) = points.iter().cloned().partition(|p| (p[0] + p[1]) % 3 == 0);
        let window = (vec![-5, 0], vec![15, 12]);
        let whole = DeltaScene::from_points(&points, window.0.clone(), window.1.clone()).unwrap();
        let sa = DeltaScene::from_points(&a, window.0.clone(), window.1.clone()).unwrap();
        let sb = DeltaScene::from_points(&b, window.0.clone(), window.1.clone()).unwrap();
        let lo = vec![rng.gen_range(-5..5), rng.gen_range(0..6)];
        let hi = vec![lo[0] + rng.gen_range(1..10), lo[1] + rng.gen_range(1..6)];
        let distinct: BTreeSet<&Vec<i64>> = points.iter().collect();
        let inside = distinct.iter().filter(|p| (0..2).all(|k| p[k] >= lo[k] && p[k] < hi[k])).count() as u64;
        let volume = ((hi[0] - lo[0]) * (hi[1] - lo[1])) as u64;
        let d = box_density(&whole, &lo, &hi).unwrap();
        assert_eq!(d, Ratio::new(inside, volume));
        assert!(d <= box_density(&sa, &lo, &hi).unwrap() + box_density(&sb, &lo, &hi).unwrap());
    }
}

#[test]
fn sweep_reports_every_box_and_writes_csv() {
    let fives = scene_1d("x % 5 <= 1", 0, 200);
    let sweep = density_sweep(&fives, &[10]).unwrap();
    assert_eq!(sweep.boxes.len(), 191);
    assert!(sweep.boxes.iter().all(|b| b.density == Ratio::new(2, 5)));
    let short = density_sweep(&fives, &[3]).unwrap();
    assert_eq!(short.best.density, Ratio::new(2, 3));
    assert_eq!(short.best.lo, vec![0]);
    let mut csv = Vec::new();
    write_sweep_csv(&sweep, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 192);
    assert_eq!(text.lines().next(), Some("lo0,density,value"));
    assert_eq!(text.lines().nth(1), Some("0,2/5,0.400000"));
    let json = serde_json::to_value(&short.best).unwrap();
    assert_eq!(json["density"], "2/3");
}

#[test]
fn membership_examples() {
    let evens = scene_1d("x % 2 == 0", 0, 100);
    assert!(delta_membership(&evens, &[4]).unwrap().member);
    assert!(!delta_membership(&evens, &[3]).unwrap().member);
    let fives = scene_1d("x % 5 <= 1", 0, 200);
    let check = delta_membership(&fives, &[1]).unwrap();
    assert_eq!(check.witness, Some(vec![0]));
    assert!(!check.near_edge);
    assert!(delta_membership(&fives, &[150]).unwrap().near_edge);
    assert_eq!(delta_membership(&fives, &[201]), Err(DeltaError::OutOfWindow(vec![201])));
}

#[test]
fn membership_matches_pairwise_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..30 {
        let points: Vec<Vec<i64>> = (0..rng.gen_range(0..25)).map(|_| vec![rng.gen_range(0..10), rng.gen_range(0..8)]).collect();
        let scene = DeltaScene::from_points(&points, vec![0, 0], vec![10, 8]).unwrap();
        let diffs: BTreeSet<Vec<i64>> = points
            .iter()
            .flat_map(|a| points.iter().map(move |b| vec![b[0] - a[0], b[1] - a[1]]))
            .collect();
        for g0 in -10..=10 {
            for g1 in -8..=8 {
                let g = vec![g0, g1];
                let check = delta_membership(&scene, &g).unwrap();
                assert_eq!(check.member, diffs.contains(&g));
                if let Some(a) = check.witness {
                    assert!(scene.contains(&a) && scene.contains(&[a[0] + g0, a[1] + g1]));
                }
            }
        }
    }
}

#[test]
fn point_files() {
    let pts = parse_points("# scene\n0, 1\n2 3\n\n4,5 # last\n").unwrap();
    assert_eq!(pts, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
    assert!(matches!(parse_points("0 1\n2\n"), Err(DeltaError::PointFile { line: 2, .. })));
    assert!(matches!(parse_points("0 x\n"), Err(DeltaError::PointFile { line: 1, .. })));
}

#[test]
fn quadratic_configuration_in_residues_mod_five() {
    let scene = scene_1d("x % 5 <= 1", 0, 200);
    assert_eq!(box_density(&scene, &[0], &[50]).unwrap(), Ratio::new(2, 5));
    let p = validate_int_poly(vec![RatPoly::parse("z * (z - 1) / 2", 1).unwrap()], 2, true).unwrap();
    let weights = ones();
    let problem = DeltaProblem { scene: &scene, weights: &weights, map: Some(&p) };
    let inst = instance(2, 40);
    let DeltaOutcome::Found { blocks, report, warnings } = furstenberg_search(&inst, &problem).unwrap() else {
        panic!("no blocks within bound 40");
    };
    assert!(report.is_ok());
    assert!(warnings.is_empty(), "{warnings:?}");
    // independent sweep: every combination's support size s has s(s-1)/2 in A - A
    let combos = enumerate_combinations(&inst, &blocks).unwrap();
    assert_eq!(report.combinations, combos.len());
    for c in &combos {
        let s: i64 = c.words.iter().map(|w| w.positioned_symbols().len() as i64).sum();
        let g = s * (s - 1) / 2;
        assert!(delta_membership(&scene, &[g]).unwrap().member, "sum {s}");
        assert_ne!(s % 5, 3);
    }
}

#[test]
fn even_set_forces_even_sums() {
    let scene = scene_1d("x % 2 == 0", 0, 100);
    let weights = ones();
    let problem = DeltaProblem { scene: &scene, weights: &weights, map: None };
    let inst = instance(3, 20);
    let DeltaOutcome::Found { blocks, report, .. } = furstenberg_search(&inst, &problem).unwrap() else { panic!() };
    assert!(report.is_ok());
    for row in &blocks[0] {
        assert_eq!(row[1].positioned_symbols().len() % 2, 0);
    }
    for c in enumerate_combinations(&inst, &blocks).unwrap() {
        let s: usize = c.words.iter().map(|w| w.positioned_symbols().len()).sum();
        assert_eq!(s % 2, 0);
    }
}

#[test]
fn full_set_accepts_the_first_fresh_blocks() {
    let scene = scene_1d("1", 0, 50);
    let weights = ones();
    let problem = DeltaProblem { scene: &scene, weights: &weights, map: None };
    let inst = instance(3, 10);
    let DeltaOutcome::Found { blocks, .. } = furstenberg_search(&inst, &problem).unwrap() else { panic!() };
    let firsts: Vec<Vec<(Position, Symbol)>> = blocks[0].iter().map(|row| row[1].positioned_symbols()).collect();
    assert_eq!(firsts, vec![vec![(0, Symbol::Var(1))], vec![(1, Symbol::Var(1))], vec![(2, Symbol::Var(1))]]);
}

#[test]
fn tampered_blocks_fail_the_sweep() {
    let scene = scene_1d("x % 2 == 0", 0, 100);
    let weights = ones();
    let problem = DeltaProblem { scene: &scene, weights: &weights, map: None };
    let inst = instance(2, 20);
    let DeltaOutcome::Found { mut blocks, .. } = furstenberg_search(&inst, &problem).unwrap() else { panic!() };
    let last = blocks[0][1][1].positioned_symbols().last().unwrap().0;
    let mut entries = blocks[0][1][1].positioned_symbols();
    entries.push((last + 1, Symbol::Var(1)));
    blocks[0][1][1] = Word::Located(TreeWord::new(entries).unwrap());
    let report = check_delta_witness(&inst, &problem, &blocks);
    assert!(!report.is_ok());
    let failure = report.first_failure.unwrap();
    assert!(failure.index_sets[0].contains(&1));
    assert!(!failure.check.unwrap().member);
}

#[test]
fn empty_set_is_exhausted_with_a_warning() {
    let scene = scene_1d("0", 0, 50);
    let weights = ones();
    let problem = DeltaProblem { scene: &scene, weights: &weights, map: None };
    match furstenberg_search(&instance(2, 6), &problem).unwrap() {
        DeltaOutcome::Exhausted { warnings, .. } => assert_eq!(warnings.len(), 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn weights_depend_on_position_and_node() {
    let g = GSequence::parse(&["j + 10 * t", "1"]).unwrap();
    let w = Word::Located(TreeWord::new(vec![(2, Symbol::Var(1)), (5, Symbol::Var(2)), (6, Symbol::Var(0))]).unwrap());
    assert_eq!(g.weigh(&w), vec![2 + 10 + 5 + 20, 2]);
    assert!(GSequence::parse(&["x"]).is_err());
    let scene = scene_1d("1", 0, 10);
    let problem = DeltaProblem { scene: &scene, weights: &g, map: None };
    assert!(matches!(
        furstenberg_search(&instance(1, 3), &problem),
        Err(DeltaError::DimensionMismatch { expected: 1, got: 2 })
    ));
}
