use rand::Rng;
use rand_chacha::ChaCha8Rng;
use treeword::expr::PointExpr;
use treeword::poly::*;

pub const DIM: usize = 2;
pub type Point = [i64; DIM];

/// `+` and coordinatewise `max` on `Z^2`, plus `+` restricted to pairs whose
/// first coordinates are both even.
pub struct Ops;

impl OperationTable<Point> for Ops {
    fn operations(&self) -> usize {
        3
    }

    fn apply(&self, op: usize, a: &Point, b: &Point) -> Option<Point> {
        match op {
            0 => Some([a[0] + b[0], a[1] + b[1]]),
            1 => Some([a[0].max(b[0]), a[1].max(b[1])]),
            _ => (a[0] % 2 == 0 && b[0] % 2 == 0).then_some([a[0] + b[0], a[1] + b[1]]),
        }
    }
}

pub fn random_point(rng: &mut ChaCha8Rng) -> Point {
    [rng.gen_range(-20..20), rng.gen_range(-20..20)]
}

pub fn random_ast(rng: &mut ChaCha8Rng, depth: usize, next: &mut usize, ops: usize) -> ExtendedPoly<Point> {
    if depth == 0 || rng.gen_bool(0.25) {
        *next += 1;
        return ExtendedPoly::var(*next - 1);
    }
    let op = rng.gen_range(0..ops);
    match rng.gen_range(0..3) {
        0 => {
            let left = random_ast(rng, depth - 1, next, ops);
            let right = random_ast(rng, depth - 1, next, ops);
            ExtendedPoly::op(op, left, right)
        }
        1 => ExtendedPoly::left_const(op, random_point(rng), random_ast(rng, depth - 1, next, ops)),
        _ => ExtendedPoly::right_const(op, random_ast(rng, depth - 1, next, ops), random_point(rng)),
    }
}

/// One coordinate of `p` as text for the expression evaluator.
pub fn render(p: &ExtendedPoly<Point>, lo: usize, k: usize) -> String {
    let bin = |op: usize, a: String, b: String| match op {
        1 => format!("max({a}, {b})"),
        _ => format!("({a} + {b})"),
    };
    match p {
        ExtendedPoly::Var(n) => format!("x{}", n - lo),
        ExtendedPoly::Op { op, left, right } => bin(*op, render(left, lo, k), render(right, lo, k)),
        ExtendedPoly::LeftConst { op, constant, sub } => bin(*op, format!("({})", constant[k]), render(sub, lo, k)),
        ExtendedPoly::RightConst { op, sub, constant } => bin(*op, render(sub, lo, k), format!("({})", constant[k])),
    }
}

pub fn reference(p: &ExtendedPoly<Point>, args: &[Point]) -> Point {
    let (lo, hi) = p.variables().unwrap();
    let mut out = [0; DIM];
    for (k, slot) in out.iter_mut().enumerate() {
        let e = PointExpr::compile(&render(p, lo, k), hi - lo).unwrap();
        let coords: Vec<i64> = args.iter().map(|a| a[k]).collect();
        *slot = e.eval(&coords);
    }
    out
}
