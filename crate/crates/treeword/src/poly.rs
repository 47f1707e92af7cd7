//! Extended polynomials over partial operations, and integer-valued
//! polynomial maps `Z^m -> Z^d` with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{indexed_variable, parse_expr, Ast, BinOp, ExprError, UnOp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("operation {op} is undefined on this pair")]
    UndefinedProduct { op: usize },
    #[error("unknown operation {0}")]
    UnknownOperation(usize),
    #[error("variables are not laid out consecutively: {0}")]
    VariableLayout(String),
    #[error("{0}")]
    Syntax(#[from] ExprError),
    #[error("not a polynomial: {0}")]
    NotPolynomial(String),
    #[error("degree {degree} in variable z{var} exceeds the declared bound {bound}")]
    DegreeExceedsBound { var: usize, degree: u32, bound: u32 },
    #[error("component {component} is not integer-valued at {point:?}: {value}")]
    NotIntegerValued { component: usize, point: Vec<i64>, value: String },
    #[error("component {component} is {value} at the origin")]
    NonzeroAtOrigin { component: usize, value: String },
    #[error("value at {0:?} does not fit in 64 bits")]
    Overflow(Vec<i64>),
}

/// A term built from variables by the operations of a family, with
/// constants translating on either side. The variables of the two sides of
/// an operation node are consecutive and disjoint, left before right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtendedPoly<E> {
    Var(usize),
    Op {
        op: usize,
        left: Box<ExtendedPoly<E>>,
        right: Box<ExtendedPoly<E>>,
    },
    LeftConst { op: usize, constant: E, sub: Box<ExtendedPoly<E>> },
    RightConst { op: usize, sub: Box<ExtendedPoly<E>>, constant: E },
}

/// A family of possibly partial binary operations indexed by tag.
pub trait OperationTable<E> {
    fn operations(&self) -> usize;
    /// `None` when the pair is outside the operation's domain.
    fn apply(&self, op: usize, a: &E, b: &E) -> Option<E>;
}

impl<E> ExtendedPoly<E> {
    pub fn var(n: usize) -> Self {
        ExtendedPoly::Var(n)
    }

    pub fn op(op: usize, left: Self, right: Self) -> Self {
        ExtendedPoly::Op { op, left: Box::new(left), right: Box::new(right) }
    }

    pub fn left_const(op: usize, constant: E, sub: Self) -> Self {
        ExtendedPoly::LeftConst { op, constant, sub: Box::new(sub) }
    }

    pub fn right_const(op: usize, sub: Self, constant: E) -> Self {
        ExtendedPoly::RightConst { op, sub: Box::new(sub), constant }
    }

    /// Range `lo..hi` of the variables, checking the layout.
    pub fn variables(&self) -> Result<(usize, usize), PolyError> {
        match self {
            ExtendedPoly::Var(n) => Ok((*n, n + 1)),
            ExtendedPoly::Op { left, right, .. } => {
                let (a, b) = left.variables()?;
                let (c, d) = right.variables()?;
                if b != c {
                    return Err(PolyError::VariableLayout(format!(
                        "left side uses x{a}..x{}, right side starts at x{c}",
                        b - 1
                    )));
                }
                Ok((a, d))
            }
            ExtendedPoly::LeftConst { sub, .. } | ExtendedPoly::RightConst { sub, .. } => sub.variables(),
        }
    }

    pub fn arity(&self) -> Result<usize, PolyError> {
        self.variables().map(|(lo, hi)| hi - lo)
    }

    pub fn depth(&self) -> usize {
        match self {
            ExtendedPoly::Var(_) => 0,
            ExtendedPoly::Op { left, right, .. } => 1 + left.depth().max(right.depth()),
            ExtendedPoly::LeftConst { sub, .. } | ExtendedPoly::RightConst { sub, .. } => 1 + sub.depth(),
        }
    }
}

/// Evaluate `p` with `args[i]` bound to the `i`-th variable of its range.
pub fn eval_extended<E: Clone>(p: &ExtendedPoly<E>, args: &[E], ops: &dyn OperationTable<E>) -> Result<E, PolyError> {
    let (lo, hi) = p.variables()?;
    if args.len() != hi - lo {
        return Err(PolyError::ArityMismatch { expected: hi - lo, got: args.len() });
    }
    eval_at(p, lo, args, ops)
}

fn eval_at<E: Clone>(p: &ExtendedPoly<E>, lo: usize, args: &[E], ops: &dyn OperationTable<E>) -> Result<E, PolyError> {
    let apply = |op: usize, a: &E, b: &E| {
        if op >= ops.operations() {
            return Err(PolyError::UnknownOperation(op));
        }
        ops.apply(op, a, b).ok_or(PolyError::UndefinedProduct { op })
    };
    match p {
        ExtendedPoly::Var(n) => Ok(args[n - lo].clone()),
        ExtendedPoly::Op { op, left, right } => {
            let a = eval_at(left, lo, args, ops)?;
            let b = eval_at(right, lo, args, ops)?;
            apply(*op, &a, &b)
        }
        ExtendedPoly::LeftConst { op, constant, sub } => apply(*op, constant, &eval_at(sub, lo, args, ops)?),
        ExtendedPoly::RightConst { op, sub, constant } => apply(*op, &eval_at(sub, lo, args, ops)?, constant),
    }
}

/// Multivariate polynomial with rational coefficients, keyed by exponent
/// vectors; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RatPoly {
    vars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl RatPoly {
    pub fn zero(vars: usize) -> Self {
        RatPoly { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars], c);
        p
    }

    pub fn variable(vars: usize, k: usize) -> Self {
        let mut e = vec![0; vars];
        e[k] = 1;
        let mut p = Self::zero(vars);
        p.add_term(e, BigRational::one());
        p
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, BigRational> {
        &self.terms
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        let slot = self.terms.entry(e).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly {
            vars: self.vars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        let mut out = RatPoly::zero(self.vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> RatPoly {
        (0..k).fold(RatPoly::constant(self.vars, BigRational::one()), |acc, _| acc.mul(self))
    }

    pub fn scale(&self, c: &BigRational) -> RatPoly {
        let mut out = RatPoly::zero(self.vars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    /// Largest exponent of variable `k`.
    pub fn degree_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|e| e[k]).max().unwrap_or(0)
    }

    pub fn eval(&self, point: &[i64]) -> BigRational {
        let mut total = BigRational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (&x, &k) in point.iter().zip(e) {
                term *= BigRational::from_integer(BigInt::from(x).pow(k));
            }
            total += term;
        }
        total
    }

    /// Parse an expression in `z` (one variable) or `z0`, `z1`, ... / `z[k]`.
    /// Division is allowed only by nonzero constants and exponents must be
    /// nonnegative integer literals.
    pub fn parse(text: &str, vars: usize) -> Result<RatPoly, PolyError> {
        let ast = parse_expr(text)?;
        Self::from_ast(&ast, vars)
    }

    pub fn from_ast(ast: &Ast, vars: usize) -> Result<RatPoly, PolyError> {
        let not = |m: String| Err(PolyError::NotPolynomial(m));
        match ast {
            Ast::Int(n) => Ok(RatPoly::constant(vars, BigRational::from_integer((*n).into()))),
            Ast::Name { name, args: None, index } => match indexed_variable("z", name, *index) {
                Some(k) if k < vars => Ok(RatPoly::variable(vars, k)),
                Some(k) => not(format!("variable z{k} out of range ({vars} variables)")),
                None => not(format!("unknown variable '{name}'")),
            },
            Ast::Unary(UnOp::Neg, e) => Ok(Self::from_ast(e, vars)?.neg()),
            Ast::Binary(op, l, r) => {
                let a = Self::from_ast(l, vars)?;
                match op {
                    BinOp::Add => Ok(a.add(&Self::from_ast(r, vars)?)),
                    BinOp::Sub => Ok(a.add(&Self::from_ast(r, vars)?.neg())),
                    BinOp::Mul => Ok(a.mul(&Self::from_ast(r, vars)?)),
                    BinOp::Div => {
                        let b = Self::from_ast(r, vars)?;
                        match b.constant_value() {
                            Some(c) if !c.is_zero() => Ok(a.scale(&c.recip())),
                            Some(_) => not("division by zero".into()),
                            None => not("division by a non-constant".into()),
                        }
                    }
                    BinOp::Pow => match **r {
                        Ast::Int(k) if (0..=64).contains(&k) => Ok(a.pow(k as u32)),
                        _ => not("exponents must be integer literals in 0..=64".into()),
                    },
                    _ => not(format!("operator '{}'", op.text())),
                }
            }
            other => not(format!("'{other}'")),
        }
    }

    fn constant_value(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&vec![0; self.vars]).cloned(),
            _ => None,
        }
    }
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest total degree first
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (i, (e, c)) in terms.into_iter().enumerate() {
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            match (i, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            let monomial: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| {
                    let name = if self.vars == 1 { "z".to_string() } else { format!("z{v}") };
                    if k == 1 { name } else { format!("{name}^{k}") }
                })
                .collect();
            let numer = mag.numer().clone();
            let denom = mag.denom().clone();
            if monomial.is_empty() {
                write!(f, "{numer}")?;
            } else if numer.is_one() {
                write!(f, "{}", monomial.join("*"))?;
            } else {
                write!(f, "{numer}*{}", monomial.join("*"))?;
            }
            if !denom.is_one() {
                write!(f, "/{denom}")?;
            }
        }
        Ok(())
    }
}

/// A certified integer-valued polynomial map `Z^vars -> Z^components`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolyVec {
    components: Vec<RatPoly>,
    vars: usize,
    degree: u32,
    zero_at_origin: bool,
}

impl IntPolyVec {
    pub fn components(&self) -> &[RatPoly] {
        &self.components
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree
    }

    pub fn zero_at_origin(&self) -> bool {
        self.zero_at_origin
    }

    pub fn eval(&self, point: &[i64]) -> Result<Vec<i64>, PolyError> {
        self.components
            .iter()
            .map(|p| {
                let v = p.eval(point);
                // certified integer-valued, so the denominator is 1
                v.to_integer().to_i64().ok_or_else(|| PolyError::Overflow(point.to_vec()))
            })
            .collect()
    }
}

/// Certify that every component is integer-valued by evaluating on the grid
/// `{0..=degree}^vars` (enough for per-variable degree at most `degree`),
/// then on that grid shifted by every offset in `{-1, 0, 1}^vars`.
/// The first failing point is returned as the witness.
pub fn validate_int_poly(
    components: Vec<RatPoly>,
    degree: u32,
    require_zero_at_origin: bool,
) -> Result<IntPolyVec, PolyError> {
    let vars = components.first().map_or(0, RatPoly::vars);
    if let Some(p) = components.iter().find(|p| p.vars() != vars) {
        return Err(PolyError::NotPolynomial(format!("components disagree on variables: {} vs {vars}", p.vars())));
    }
    for p in &components {
        for var in 0..vars {
            let d = p.degree_in(var);
            if d > degree {
                return Err(PolyError::DegreeExceedsBound { var, degree: d, bound: degree });
            }
        }
    }
    let side = i64::from(degree) + 1;
    let grid = cartesian(vars, &(0..side).collect::<Vec<_>>());
    let offsets = cartesian(vars, &[0, -1, 1]);
    for offset in &offsets {
        for g in &grid {
            let point: Vec<i64> = g.iter().zip(offset).map(|(a, b)| a + b).collect();
            for (component, p) in components.iter().enumerate() {
                let value = p.eval(&point);
                if !value.is_integer() {
                    return Err(PolyError::NotIntegerValued { component, point, value: value.to_string() });
                }
            }
        }
    }
    let origin = vec![0; vars];
    let mut zero_at_origin = true;
    for (component, p) in components.iter().enumerate() {
        let value = p.eval(&origin);
        if !value.is_zero() {
            if require_zero_at_origin {
                return Err(PolyError::NonzeroAtOrigin { component, value: value.to_string() });
            }
            zero_at_origin = false;
        }
    }
    Ok(IntPolyVec { components, vars, degree, zero_at_origin })
}

/// All vectors of length `n` over `values`, in lexicographic order.
fn cartesian(n: usize, values: &[i64]) -> Vec<Vec<i64>> {
    (0..n).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect()
    })
}

/// Identity map on `Z^dim`.
pub fn identity_poly(dim: usize) -> IntPolyVec {
    IntPolyVec {
        components: (0..dim).map(|k| RatPoly::variable(dim, k)).collect(),
        vars: dim,
        degree: 1,
        zero_at_origin: true,
    }
}
