//! A small total expression language shared by colorings, scene predicates
//! and polynomial literals.
//!
//! Grammar, loosest first: `||`, `&&`, comparisons, `+ -`, `* / %`, unary
//! `- !`, right-associative `^`, then atoms: integers, `'x'` letters, `$n`
//! variables, parenthesised expressions and identifiers with optional call
//! arguments and an optional `[k]` coordinate suffix.

use std::fmt;

use thiserror::Error;

use crate::tree::{Node, RootedTree, ROOT};
use crate::words::{Symbol, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("at offset {offset}: {message}")]
pub struct ExprError {
    /// Character offset into the expression text.
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError {
        offset,
        message: message.into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Pow,
}

impl BinOp {
    pub fn text(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
            BinOp::Pow => 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ast {
    Int(i64),
    Letter(char),
    Var(Node),
    /// Identifier, optional call arguments, optional `[k]` suffix.
    Name {
        name: String,
        args: Option<Vec<Ast>>,
        index: Option<usize>,
    },
    Unary(UnOp, Box<Ast>),
    Binary(BinOp, Box<Ast>, Box<Ast>),
}

impl Ast {
    fn precedence(&self) -> u8 {
        match self {
            Ast::Binary(op, ..) => op.precedence(),
            Ast::Unary(..) => 6,
            _ => 8,
        }
    }
}

/// Canonical text: single spaces around binary operators, parentheses only
/// where precedence requires them.
impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Int(n) => write!(f, "{n}"),
            Ast::Letter(c) => write!(f, "'{c}'"),
            Ast::Var(v) => write!(f, "${v}"),
            Ast::Name { name, args, index } => {
                write!(f, "{name}")?;
                if let Some(args) = args {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                if let Some(k) = index {
                    write!(f, "[{k}]")?;
                }
                Ok(())
            }
            Ast::Unary(op, e) => {
                let sym = if *op == UnOp::Neg { "-" } else { "!" };
                if e.precedence() < 6 || matches!(**e, Ast::Unary(..) | Ast::Int(_)) {
                    write!(f, "{sym}({e})")
                } else {
                    write!(f, "{sym}{e}")
                }
            }
            Ast::Binary(op, l, r) => {
                let p = op.precedence();
                // left-associative except ^, which associates to the right
                let (lp, rp) = if *op == BinOp::Pow { (p + 1, p) } else { (p, p + 1) };
                let wrap = |e: &Ast, min: u8| {
                    if e.precedence() < min {
                        format!("({e})")
                    } else {
                        e.to_string()
                    }
                };
                write!(f, "{} {} {}", wrap(l, lp), op.text(), wrap(r, rp))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Letter(char),
    Var(Node),
    Op(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    const OPS: [&str; 19] = [
        "||", "&&", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "^", "!", "(", ")", "[", "]",
    ];
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            match s.parse() {
                Ok(n) => out.push((start, Tok::Int(n))),
                Err(_) => return err(start, "integer literal out of range"),
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if c == '\'' {
            if i + 2 < chars.len() && chars[i + 2] == '\'' {
                out.push((i, Tok::Letter(chars[i + 1])));
                i += 3;
            } else {
                return err(i, "expected a one-character letter literal like 'a'");
            }
        } else if c == '$' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start + 1..i].iter().collect();
            match digits.parse() {
                Ok(v) => out.push((start, Tok::Var(v))),
                Err(_) => return err(start, "expected a node number after '$'"),
            }
        } else if c == ',' {
            out.push((i, Tok::Op(",")));
            i += 1;
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match OPS.iter().find(|op| rest.starts_with(**op)) {
                Some(op) => {
                    out.push((i, Tok::Op(op)));
                    i += op.len();
                }
                None => return err(i, format!("unexpected character '{c}'")),
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn peek_op(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Op(op))) => Some(op),
            _ => None,
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), ExprError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            err(self.offset(), format!("expected '{op}'"))
        }
    }

    fn binary(&mut self, min: u8) -> Result<Ast, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let Some(op) = self.peek_op().and_then(binop) else { break };
            let p = op.precedence();
            if p < min {
                break;
            }
            self.pos += 1;
            let rhs = if op == BinOp::Pow { self.unary()? } else { self.binary(p + 1)? };
            lhs = Ast::Binary(op, Box::new(lhs), Box::new(rhs));
            if matches!(op, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
                && self.peek_op().and_then(binop).is_some_and(|o| o.precedence() == 3)
            {
                return err(self.offset(), "comparisons do not chain");
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast, ExprError> {
        match self.peek_op() {
            Some("-") => {
                self.pos += 1;
                Ok(Ast::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Some("!") => {
                self.pos += 1;
                Ok(Ast::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            _ => {
                let base = self.atom()?;
                if self.peek_op() == Some("^") {
                    self.pos += 1;
                    let exp = self.unary()?;
                    return Ok(Ast::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
                }
                Ok(base)
            }
        }
    }

    fn atom(&mut self) -> Result<Ast, ExprError> {
        let at = self.offset();
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return err(at, "unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Int(n) => Ok(Ast::Int(n)),
            Tok::Letter(c) => Ok(Ast::Letter(c)),
            Tok::Var(v) => Ok(Ast::Var(v)),
            Tok::Op("(") => {
                let e = self.binary(1)?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let mut args = None;
                if self.peek_op() == Some("(") {
                    self.pos += 1;
                    let mut list = Vec::new();
                    if self.peek_op() != Some(")") {
                        loop {
                            list.push(self.binary(1)?);
                            if self.peek_op() == Some(",") {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    args = Some(list);
                }
                let mut index = None;
                if self.peek_op() == Some("[") {
                    self.pos += 1;
                    let at = self.offset();
                    match self.toks.get(self.pos) {
                        Some((_, Tok::Int(k))) if *k >= 0 => index = Some(*k as usize),
                        _ => return err(at, "expected a coordinate number"),
                    }
                    self.pos += 1;
                    self.expect("]")?;
                }
                Ok(Ast::Name { name, args, index })
            }
            Tok::Op(op) => err(at, format!("unexpected '{op}'")),
        }
    }
}

fn binop(op: &str) -> Option<BinOp> {
    Some(match op {
        "||" => BinOp::Or,
        "&&" => BinOp::And,
        "==" => BinOp::Eq,
        "!=" => BinOp::Ne,
        "<" => BinOp::Lt,
        "<=" => BinOp::Le,
        ">" => BinOp::Gt,
        ">=" => BinOp::Ge,
        "+" => BinOp::Add,
        "-" => BinOp::Sub,
        "*" => BinOp::Mul,
        "/" => BinOp::Div,
        "%" => BinOp::Rem,
        _ => return None,
    })
}

pub fn parse_expr(text: &str) -> Result<Ast, ExprError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
    };
    let e = p.binary(1)?;
    if p.pos < p.toks.len() {
        return err(p.offset(), "unexpected trailing input");
    }
    Ok(e)
}

/// Total integer semantics: wrapping arithmetic, Euclidean `/` and `%`,
/// division by zero yields 0, negative exponents yield 0, booleans are 0/1.
pub fn apply_binop(op: BinOp, a: i64, b: i64) -> i64 {
    match op {
        BinOp::Or => i64::from(a != 0 || b != 0),
        BinOp::And => i64::from(a != 0 && b != 0),
        BinOp::Eq => i64::from(a == b),
        BinOp::Ne => i64::from(a != b),
        BinOp::Lt => i64::from(a < b),
        BinOp::Le => i64::from(a <= b),
        BinOp::Gt => i64::from(a > b),
        BinOp::Ge => i64::from(a >= b),
        BinOp::Add => a.wrapping_add(b),
        BinOp::Sub => a.wrapping_sub(b),
        BinOp::Mul => a.wrapping_mul(b),
        BinOp::Div if b == 0 => 0,
        BinOp::Div => a.checked_div_euclid(b).unwrap_or(a.wrapping_neg()),
        BinOp::Rem if b == 0 => 0,
        BinOp::Rem => a.checked_rem_euclid(b).unwrap_or(0),
        BinOp::Pow if b < 0 => 0,
        BinOp::Pow => a.wrapping_pow(u32::try_from(b).unwrap_or(u32::MAX)),
    }
}

fn apply_unop(op: UnOp, a: i64) -> i64 {
    match op {
        UnOp::Neg => a.wrapping_neg(),
        UnOp::Not => i64::from(a == 0),
    }
}

/// Statistics of one coordinate of a word tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordStat {
    /// Number of entries.
    Size,
    /// String length; one past the largest position for located words.
    Len,
    MinPos,
    MaxPos,
    Letters,
    Vars,
    /// Component node, or -1 if the variables do not form a chain.
    Comp,
    Count(Symbol),
}

#[derive(Clone, Debug)]
enum Compiled<L> {
    Const(i64),
    Leaf(L),
    Unary(UnOp, Box<Compiled<L>>),
    Binary(BinOp, Box<Compiled<L>>, Box<Compiled<L>>),
    Min(Vec<Compiled<L>>),
    Max(Vec<Compiled<L>>),
    Abs(Box<Compiled<L>>),
}

impl<L> Compiled<L> {
    fn eval(&self, leaf: &impl Fn(&L) -> i64) -> i64 {
        match self {
            Compiled::Const(n) => *n,
            Compiled::Leaf(l) => leaf(l),
            Compiled::Unary(op, e) => apply_unop(*op, e.eval(leaf)),
            Compiled::Binary(op, a, b) => apply_binop(*op, a.eval(leaf), b.eval(leaf)),
            Compiled::Min(xs) => xs.iter().map(|e| e.eval(leaf)).min().unwrap_or(0),
            Compiled::Max(xs) => xs.iter().map(|e| e.eval(leaf)).max().unwrap_or(0),
            Compiled::Abs(e) => e.eval(leaf).wrapping_abs(),
        }
    }
}

/// Compile `ast`, resolving names through `leaf`; `min`, `max` and `abs`
/// are built in.
fn compile<L>(
    ast: &Ast,
    leaf: &mut impl FnMut(&str, Option<&[Ast]>, Option<usize>) -> Result<L, String>,
) -> Result<Compiled<L>, String> {
    Ok(match ast {
        Ast::Int(n) => Compiled::Const(*n),
        Ast::Letter(c) => return Err(format!("letter '{c}' is only allowed inside count(..)")),
        Ast::Var(v) => return Err(format!("${v} is only allowed inside count(..)")),
        Ast::Unary(op, e) => Compiled::Unary(*op, Box::new(compile(e, leaf)?)),
        Ast::Binary(op, a, b) => Compiled::Binary(*op, Box::new(compile(a, leaf)?), Box::new(compile(b, leaf)?)),
        Ast::Name { name, args, index } => match (name.as_str(), args, index) {
            ("min" | "max", Some(xs), None) if !xs.is_empty() => {
                let xs = xs.iter().map(|e| compile(e, leaf)).collect::<Result<Vec<_>, _>>()?;
                if name == "min" {
                    Compiled::Min(xs)
                } else {
                    Compiled::Max(xs)
                }
            }
            ("abs", Some(xs), None) if xs.len() == 1 => Compiled::Abs(Box::new(compile(&xs[0], leaf)?)),
            _ => Compiled::Leaf(leaf(name, args.as_deref(), *index)?),
        },
    })
}

/// Per-coordinate data needed to resolve letters and components.
#[derive(Clone, Debug)]
pub struct CoordinateInfo {
    pub tree: std::sync::Arc<RootedTree>,
    pub alphabet: Vec<char>,
}

/// A compiled coloring expression over word tuples.
#[derive(Clone, Debug)]
pub struct WordExpr {
    source: Ast,
    code: Compiled<(WordStat, usize)>,
    coords: Vec<CoordinateInfo>,
}

impl WordExpr {
    pub fn compile(text: &str, coords: Vec<CoordinateInfo>) -> Result<Self, ExprError> {
        let ast = parse_expr(text)?;
        Self::from_ast(ast, coords).map_err(|message| ExprError { offset: 0, message })
    }

    pub fn from_ast(ast: Ast, coords: Vec<CoordinateInfo>) -> Result<Self, String> {
        let n = coords.len();
        let code = compile(&ast, &mut |name, args, index| {
            let k = index.unwrap_or(0);
            if k >= n {
                return Err(format!("coordinate {k} out of range ({n} coordinates)"));
            }
            let stat = match (name, args) {
                ("size", None) => WordStat::Size,
                ("len", None) => WordStat::Len,
                ("minpos", None) => WordStat::MinPos,
                ("maxpos", None) => WordStat::MaxPos,
                ("letters", None) => WordStat::Letters,
                ("vars", None) => WordStat::Vars,
                ("comp", None) => WordStat::Comp,
                ("count", Some([Ast::Letter(c)])) => match coords[k].alphabet.iter().position(|a| a == c) {
                    Some(i) => WordStat::Count(Symbol::Letter(i as u32)),
                    None => return Err(format!("letter '{c}' is not in the alphabet of coordinate {k}")),
                },
                ("count", Some([Ast::Var(v)])) if *v != ROOT && *v < coords[k].tree.node_count() => {
                    WordStat::Count(Symbol::Var(*v))
                }
                ("count", _) => return Err("count expects a letter 'x' or a non-root variable $n".into()),
                _ => return Err(format!("unknown word statistic '{name}'")),
            };
            Ok((stat, k))
        })?;
        Ok(WordExpr { source: ast, code, coords })
    }

    pub fn source(&self) -> &Ast {
        &self.source
    }

    pub fn coordinates(&self) -> usize {
        self.coords.len()
    }

    pub fn eval(&self, words: &[Word]) -> i64 {
        self.code.eval(&|(stat, k): &(WordStat, usize)| word_stat(*stat, &words[*k], &self.coords[*k].tree))
    }
}

pub fn word_stat(stat: WordStat, w: &Word, tree: &RootedTree) -> i64 {
    let entries = w.positioned_symbols();
    match stat {
        WordStat::Size => entries.len() as i64,
        WordStat::Len => match w {
            Word::Located(b) => b.max_position().map_or(0, |p| p as i64 + 1),
            Word::Nonlocated(s) => s.len() as i64,
        },
        WordStat::MinPos => entries.first().map_or(-1, |e| e.0 as i64),
        WordStat::MaxPos => entries.last().map_or(-1, |e| e.0 as i64),
        WordStat::Letters => entries.iter().filter(|e| matches!(e.1, Symbol::Letter(_))).count() as i64,
        WordStat::Vars => entries.iter().filter(|e| matches!(e.1, Symbol::Var(_))).count() as i64,
        WordStat::Comp => w.classify(tree).map_or(-1, |t| t as i64),
        WordStat::Count(s) => entries.iter().filter(|e| e.1 == s).count() as i64,
    }
}

/// A compiled predicate or function on integer points, with variables
/// `x` (or `x0`), `x1`, ... or `x[k]`.
#[derive(Clone, Debug)]
pub struct PointExpr {
    source: Ast,
    code: Compiled<usize>,
    dim: usize,
}

/// `prefix`, `prefixK` or `prefix[K]` to `K`.
pub fn indexed_variable(prefix: &str, name: &str, index: Option<usize>) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    match (rest, index) {
        ("", None) => Some(0),
        ("", Some(k)) => Some(k),
        (digits, None) if digits.chars().all(|c| c.is_ascii_digit()) => digits.parse().ok(),
        _ => None,
    }
}

impl PointExpr {
    pub fn compile(text: &str, dim: usize) -> Result<Self, ExprError> {
        let ast = parse_expr(text)?;
        Self::from_ast(ast, dim).map_err(|message| ExprError { offset: 0, message })
    }

    pub fn from_ast(ast: Ast, dim: usize) -> Result<Self, String> {
        let code = compile(&ast, &mut |name, args, index| {
            if args.is_some() {
                return Err(format!("unknown function '{name}'"));
            }
            match indexed_variable("x", name, index) {
                Some(k) if k < dim => Ok(k),
                Some(k) => Err(format!("variable x{k} out of range (dimension {dim})")),
                None => Err(format!("unknown variable '{name}'")),
            }
        })?;
        Ok(PointExpr { source: ast, code, dim })
    }

    /// Like `from_ast`, with the point's coordinates called `names`.
    pub fn from_ast_named(ast: Ast, names: &[&str]) -> Result<Self, String> {
        let code = compile(&ast, &mut |name, args, index| {
            if args.is_some() || index.is_some() {
                return Err(format!("unknown function or index on '{name}'"));
            }
            names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| format!("unknown variable '{name}' (expected one of {})", names.join(", ")))
        })?;
        Ok(PointExpr { source: ast, code, dim: names.len() })
    }

    pub fn source(&self) -> &Ast {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, point: &[i64]) -> i64 {
        self.code.eval(&|k: &usize| point[*k])
    }
}
