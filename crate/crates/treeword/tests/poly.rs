mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use common::poly_oracle::*;
use treeword::poly::*;

/// Direct recursion with undefinedness as `None`.
fn naive(p: &ExtendedPoly<Point>, lo: usize, args: &[Point]) -> Option<Point> {
    let even = |a: &Point, b: &Point| a[0] % 2 == 0 && b[0] % 2 == 0;
    let apply = |op: usize, a: Point, b: Point| match op {
        0 => Some([a[0] + b[0], a[1] + b[1]]),
        1 => Some([a[0].max(b[0]), a[1].max(b[1])]),
        _ if even(&a, &b) => Some([a[0] + b[0], a[1] + b[1]]),
        _ => None,
    };
    match p {
        ExtendedPoly::Var(n) => Some(args[n - lo]),
        ExtendedPoly::Op { op, left, right } => apply(*op, naive(left, lo, args)?, naive(right, lo, args)?),
        ExtendedPoly::LeftConst { op, constant, sub } => apply(*op, *constant, naive(sub, lo, args)?),
        ExtendedPoly::RightConst { op, sub, constant } => apply(*op, naive(sub, lo, args)?, *constant),
    }
}

#[test]
fn eval_matches_reference_interpreter() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let start = rng.gen_range(0..3);
        let mut next = start;
        let p = random_ast(&mut rng, 6, &mut next, 2);
        assert!(p.depth() <= 6);
        assert_eq!(p.variables().unwrap(), (start, next));
        let args: Vec<Point> = (start..next).map(|_| random_point(&mut rng)).collect();
        assert_eq!(eval_extended(&p, &args, &Ops).unwrap(), reference(&p, &args), "{p:?}");
    }
}

#[test]
fn undefined_products_propagate() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut defined, mut undefined) = (0, 0);
    for _ in 0..1000 {
        let mut next = 0;
        let p = random_ast(&mut rng, 4, &mut next, 3);
        let args: Vec<Point> = (0..next).map(|_| random_point(&mut rng)).collect();
        match (eval_extended(&p, &args, &Ops), naive(&p, 0, &args)) {
            (Ok(v), Some(w)) => {
                assert_eq!(v, w);
                defined += 1;
            }
            (Err(PolyError::UndefinedProduct { op: 2 }), None) => undefined += 1,
            (got, want) => panic!("{p:?}: {got:?} vs {want:?}"),
        }
    }
    assert!(defined > 100 && undefined > 100, "{defined} {undefined}");
}

#[test]
fn arity_is_checked() {
    let p = ExtendedPoly::<Point>::op(0, ExtendedPoly::var(3), ExtendedPoly::var(4));
    assert_eq!(p.arity(), Ok(2));
    assert_eq!(eval_extended(&p, &[[1, 1], [2, 2]], &Ops), Ok([3, 3]));
    assert_eq!(
        eval_extended(&p, &[[1, 1]], &Ops),
        Err(PolyError::ArityMismatch { expected: 2, got: 1 })
    );
    let gap = ExtendedPoly::<Point>::op(0, ExtendedPoly::var(0), ExtendedPoly::var(2));
    assert!(matches!(gap.variables(), Err(PolyError::VariableLayout(_))));
    let unknown = ExtendedPoly::<Point>::right_const(5, ExtendedPoly::var(0), [0, 0]);
    assert_eq!(eval_extended(&unknown, &[[0, 0]], &Ops), Err(PolyError::UnknownOperation(5)));
}

#[test]
fn quadratic_and_half_polynomials() {
    let p = RatPoly::parse("z*(z-1)/2", 1).unwrap();
    let certified = validate_int_poly(vec![p], 2, true).unwrap();
    assert_eq!(certified.eval(&[5]).unwrap(), vec![10]);
    assert_eq!(certified.eval(&[0]).unwrap(), vec![0]);
    let err = validate_int_poly(vec![RatPoly::parse("z/2", 1).unwrap()], 1, false).unwrap_err();
    assert!(matches!(err, PolyError::NotIntegerValued { component: 0, ref point, .. } if point == &vec![1]));
    let pair = vec![RatPoly::parse("z0*z1", 2).unwrap(), RatPoly::parse("z0 - z1 + 1", 2).unwrap()];
    assert!(matches!(validate_int_poly(pair.clone(), 1, true), Err(PolyError::NonzeroAtOrigin { component: 1, .. })));
    assert!(!validate_int_poly(pair, 1, false).unwrap().zero_at_origin());
}

/// `C(z, k)` as text.
fn binomial_text(var: &str, k: u32) -> String {
    if k == 0 {
        return "1".into();
    }
    let factorial: u64 = (1..=u64::from(k)).product();
    let factors: Vec<String> = (0..k).map(|i| format!("({var} - {i})")).collect();
    format!("{} / {factorial}", factors.join(" * "))
}

fn family() -> impl Strategy<Value = (usize, u32, Vec<(Vec<u32>, i64, i64)>)> {
    (1usize..=2, 1u32..=4).prop_flat_map(|(vars, degree)| {
        let exps = proptest::collection::vec(0..=degree, vars);
        let term = (exps, -6i64..=6, prop::sample::select(vec![1i64, 1, 2, 3, 4, 6]));
        (Just(vars), Just(degree), proptest::collection::vec(term, 1..5))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// In the binomial basis, a polynomial is integer-valued exactly when
    /// every coordinate is an integer.
    #[test]
    fn accepts_exactly_the_binomial_span((vars, degree, terms) in family()) {
        let mut coeffs: std::collections::BTreeMap<Vec<u32>, BigRational> = Default::default();
        for (e, n, d) in &terms {
            *coeffs.entry(e.clone()).or_insert_with(BigRational::zero) += BigRational::new(BigInt::from(*n), BigInt::from(*d));
        }
        let names: Vec<String> = (0..vars).map(|k| if vars == 1 { "z".into() } else { format!("z{k}") }).collect();
        let text: Vec<String> = coeffs
            .iter()
            .map(|(e, c)| {
                let prod: Vec<String> = e.iter().zip(&names).map(|(&k, v)| format!("({})", binomial_text(v, k))).collect();
                format!("({}) / ({}) * {}", c.numer(), c.denom(), prod.join(" * "))
            })
            .collect();
        let p = RatPoly::parse(&text.join(" + "), vars).unwrap();
        let integral = coeffs.values().all(|c| c.is_integer());
        match validate_int_poly(vec![p.clone()], degree, false) {
            Ok(cert) => {
                prop_assert!(integral);
                for x in -30..30 {
                    let point: Vec<i64> = (0..vars as i64).map(|k| x * (k + 1) - 7 * k).collect();
                    prop_assert!(p.eval(&point).is_integer());
                    prop_assert_eq!(cert.eval(&point).unwrap()[0], i64::try_from(p.eval(&point).to_integer()).unwrap());
                }
            }
            Err(PolyError::NotIntegerValued { point, .. }) => {
                prop_assert!(!integral);
                prop_assert!(!p.eval(&point).is_integer());
            }
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
