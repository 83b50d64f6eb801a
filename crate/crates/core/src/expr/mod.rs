//! A small arithmetic expression language over named real variables.
//!
//! Expressions define the bivariate functions `D` and `P` (variables `x`,
//! `y`), the self-map `T` (variable `x`) and comparison functions (variable
//! `t`). Grammar, lowest precedence first:
//!
//! ```text
//! expr       := term (('+' | '-') term)*
//! term       := unary (('*' | '/') unary)*
//! unary      := '-' unary | power
//! power      := primary ('^' unary)?
//! primary    := number | ident | ident '(' args ')' | '(' expr ')'
//!             | 'if' '(' comparison ',' expr ',' expr ')'
//! comparison := expr ('<' | '<=' | '>' | '>=' | '==' | '!=') expr
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2` is `-(x^2)`) and is
//! right-associative. Built-in functions: `abs`, `sqrt`, `exp`, `log` (one
//! argument) and `min`, `max` (two arguments).

mod lexer;
mod parser;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {found:?} at offset {offset}")]
    Lex { offset: usize, found: char },
    #[error("{message} at offset {offset}")]
    Parse { offset: usize, message: String },
}

impl ExprError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ExprError::Empty => None,
            ExprError::Lex { offset, .. } | ExprError::Parse { offset, .. } => Some(*offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("division {0} / {1} is not finite")]
    Division(f64, f64),
    #[error("power {0} ^ {1} is undefined over the reals")]
    PowDomain(f64, f64),
    #[error("`{0}` produced a non-finite value")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub(crate) fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            _ => return None,
        })
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Abs,
    Sqrt,
    Exp,
    Log,
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub(crate) fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub const ALL: [Func; 6] = [
        Func::Abs,
        Func::Sqrt,
        Func::Exp,
        Func::Log,
        Func::Min,
        Func::Max,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub op: CmpOp,
    pub lhs: Box<Expr>,
    pub rhs: Box<Expr>,
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
    },
    Cond {
        cond: Comparison,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

/// Lookup of variable values during evaluation.
pub trait Bindings {
    fn value(&self, name: &str) -> Option<f64>;
}

impl Bindings for [(&str, f64)] {
    fn value(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn value(&self, name: &str) -> Option<f64> {
        self.as_slice().value(name)
    }
}

impl Bindings for HashMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// Evaluates the expression in double precision.
    ///
    /// Every intermediate value is checked for finiteness, so a successful
    /// evaluation never yields NaN or an infinity.
    pub fn eval<B: Bindings + ?Sized>(&self, env: &B) -> Result<f64, EvalError> {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Var(name) => env
                .value(name)
                .ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Neg(inner) => Ok(-inner.eval(env)?),
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval(env)?;
                let b = rhs.eval(env)?;
                apply_binary(*op, a, b)
            }
            Expr::Call { func, args } => {
                let a = args[0].eval(env)?;
                let v = match func {
                    Func::Abs => a.abs(),
                    Func::Sqrt if a < 0.0 => return Err(EvalError::SqrtDomain(a)),
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log if a <= 0.0 => return Err(EvalError::LogDomain(a)),
                    Func::Log => a.ln(),
                    Func::Min => a.min(args[1].eval(env)?),
                    Func::Max => a.max(args[1].eval(env)?),
                };
                finite(v, func.name())
            }
            Expr::Cond {
                cond,
                then,
                otherwise,
            } => {
                if cond.eval(env)? {
                    then.eval(env)
                } else {
                    otherwise.eval(env)
                }
            }
        }
    }

    /// Names of all variables occurring in the expression.
    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Neg(inner) => inner.collect_vars(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Cond {
                cond,
                then,
                otherwise,
            } => {
                cond.lhs.collect_vars(out);
                cond.rhs.collect_vars(out);
                then.collect_vars(out);
                otherwise.collect_vars(out);
            }
        }
    }

    /// Variables not in `allowed`, in sorted order.
    pub fn stray_variables(&self, allowed: &[&str]) -> Vec<String> {
        self.free_variables()
            .into_iter()
            .filter(|v| !allowed.contains(&v.as_str()))
            .collect()
    }

    /// Thresholds at which a conditional switches branches, per variable.
    ///
    /// Only comparisons of the form `var <op> closed` (or mirrored) are
    /// recognised, where `closed` contains no variables.
    pub fn branch_thresholds(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        self.collect_thresholds(&mut out);
        out
    }

    fn collect_thresholds(&self, out: &mut Vec<(String, f64)>) {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(inner) => inner.collect_thresholds(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_thresholds(out);
                rhs.collect_thresholds(out);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.collect_thresholds(out)),
            Expr::Cond {
                cond,
                then,
                otherwise,
            } => {
                let closed = |e: &Expr| -> Option<f64> {
                    if e.free_variables().is_empty() {
                        e.eval(&[] as &[(&str, f64)]).ok()
                    } else {
                        None
                    }
                };
                match (cond.lhs.as_ref(), cond.rhs.as_ref()) {
                    (Expr::Var(v), other) | (other, Expr::Var(v)) => {
                        if let Some(t) = closed(other) {
                            out.push((v.clone(), t));
                        }
                    }
                    _ => {}
                }
                cond.lhs.collect_thresholds(out);
                cond.rhs.collect_thresholds(out);
                then.collect_thresholds(out);
                otherwise.collect_thresholds(out);
            }
        }
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Neg(inner) => inner.depth(),
            Expr::Binary { lhs, rhs, .. } => lhs.depth().max(rhs.depth()),
            Expr::Call { args, .. } => args.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::Cond {
                cond,
                then,
                otherwise,
            } => cond
                .lhs
                .depth()
                .max(cond.rhs.depth())
                .max(then.depth())
                .max(otherwise.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Const(v) if v.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

impl Comparison {
    pub fn eval<B: Bindings + ?Sized>(&self, env: &B) -> Result<bool, EvalError> {
        let a = self.lhs.eval(env)?;
        let b = self.rhs.eval(env)?;
        Ok(self.op.holds(a, b))
    }
}

fn finite(v: f64, what: &'static str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(what))
    }
}

fn apply_binary(op: BinOp, a: f64, b: f64) -> Result<f64, EvalError> {
    match op {
        BinOp::Add => finite(a + b, "+"),
        BinOp::Sub => finite(a - b, "-"),
        BinOp::Mul => finite(a * b, "*"),
        BinOp::Div => {
            let v = a / b;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::Division(a, b))
            }
        }
        BinOp::Pow => {
            if a < 0.0 && b.fract() != 0.0 {
                return Err(EvalError::PowDomain(a, b));
            }
            let v = if b == 2.0 { a * a } else { a.powf(b) };
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::PowDomain(a, b))
            }
        }
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(&tokenize(s)?)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) if v.is_sign_negative() => write!(f, "-{}", -v),
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, inner.precedence() < 3)
            }
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                let (left_parens, right_parens) = if *op == BinOp::Pow {
                    (lhs.precedence() <= p, rhs.precedence() < 3)
                } else {
                    (lhs.precedence() < p, rhs.precedence() <= p)
                };
                write_child(f, lhs, left_parens)?;
                if *op == BinOp::Pow {
                    f.write_str("^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                write_child(f, rhs, right_parens)
            }
            Expr::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Cond {
                cond,
                then,
                otherwise,
            } => write!(
                f,
                "if({} {} {}, {}, {})",
                cond.lhs,
                cond.op.symbol(),
                cond.rhs,
                then,
                otherwise
            ),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}
