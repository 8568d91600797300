//! Signal temporal logic: formulas, a text parser and robust semantics.
//!
//! Formulas are kept in the core syntax `atom | false | !φ | φ && ψ | φ U_I ψ`.
//! Every derived connective (`true`, `||`, `->`, `<>`, `[]`, non-strict and
//! reversed comparisons) is desugared on construction, so evaluators only
//! deal with five cases.

mod parse;
mod robust;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use parse::{parse, ParseError};
pub use robust::{boolean_sat, robustness, EvalError, Monitor};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid interval [{lo}, {hi}]: need 0 <= lo < hi")]
pub struct IntervalError {
    pub lo: f64,
    pub hi: f64,
}

/// A closed, non-singular time interval `[lo, hi]`; `hi` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    lo: f64,
    hi: f64,
}

impl TimeInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_finite() && lo >= 0.0 && !hi.is_nan() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(IntervalError { lo, hi })
        }
    }

    /// `[0, ∞)`, the interval of an unannotated temporal operator.
    pub fn unbounded() -> Self {
        Self { lo: 0.0, hi: f64::INFINITY }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_unbounded(&self) -> bool {
        self.hi.is_infinite()
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi.is_infinite() {
            write!(f, "[{},inf]", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

/// Real-valued term over signal variables; the `f` of an atom `f(x̄) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, lookup: &impl Fn(&str) -> f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => lookup(v),
            Expr::Neg(a) => -a.eval(lookup),
            Expr::Add(a, b) => a.eval(lookup) + b.eval(lookup),
            Expr::Sub(a, b) => a.eval(lookup) - b.eval(lookup),
            Expr::Mul(a, b) => a.eval(lookup) * b.eval(lookup),
            Expr::Abs(a) => a.eval(lookup).abs(),
            Expr::Min(a, b) => a.eval(lookup).min(b.eval(lookup)),
            Expr::Max(a, b) => a.eval(lookup).max(b.eval(lookup)),
        }
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v);
            }
            Expr::Neg(a) | Expr::Abs(a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn is_leaf(&self) -> bool {
        matches!(self, Expr::Const(_) | Expr::Var(_) | Expr::Abs(_) | Expr::Min(..) | Expr::Max(..))
    }
}

struct Operand<'a>(&'a Expr);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_leaf() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "{} + {}", Operand(a), Operand(b)),
            Expr::Sub(a, b) => write!(f, "{} - {}", Operand(a), Operand(b)),
            Expr::Mul(a, b) => write!(f, "{} * {}", Operand(a), Operand(b)),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
        }
    }
}

/// STL formula in core syntax.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    /// `f(x̄) > 0`.
    Atom(Expr),
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Until(TimeInterval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(e: Expr) -> Self {
        Formula::Atom(e)
    }

    pub fn tt() -> Self {
        Formula::negate(Formula::False)
    }

    pub fn negate(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::negate(Formula::and(Formula::negate(a), Formula::negate(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::negate(Formula::and(a, Formula::negate(b)))
    }

    pub fn until(i: TimeInterval, a: Formula, b: Formula) -> Self {
        Formula::Until(i, Box::new(a), Box::new(b))
    }

    /// `◇_I φ ≡ ⊤ U_I φ`.
    pub fn eventually(i: TimeInterval, f: Formula) -> Self {
        Formula::until(i, Formula::tt(), f)
    }

    /// `□_I φ ≡ ¬◇_I ¬φ`.
    pub fn always(i: TimeInterval, f: Formula) -> Self {
        Formula::negate(Formula::eventually(i, Formula::negate(f)))
    }

    /// Names of all variables referenced by atoms, sorted.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Atom(e) = f {
                e.collect_vars(&mut out);
            }
        });
        out
    }

    /// Nesting depth; atoms and `false` have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::False => 0,
            Formula::Not(a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Until(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Formula)) {
        visit(self);
        match self {
            Formula::Atom(_) | Formula::False => {}
            Formula::Not(a) => a.walk(visit),
            Formula::And(a, b) | Formula::Until(_, a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
        }
    }
}

/// Prints the core syntax; the output parses back to the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(e) => write!(f, "{e} > 0"),
            Formula::False => f.write_str("false"),
            Formula::Not(a) => write!(f, "!({a})"),
            Formula::And(a, b) => write!(f, "({a}) && ({b})"),
            Formula::Until(i, a, b) => write!(f, "({a}) U{i} ({b})"),
        }
    }
}
