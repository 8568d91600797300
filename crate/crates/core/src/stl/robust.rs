//! Quantitative (robust) and Boolean semantics on the sample grid.
//!
//! Suprema and infima range over sample instants. Unbounded intervals are
//! clipped to the signal horizon. For `φ U_I ψ` at instant `t0`:
//!
//! ```text
//! max_{t ∈ I, t0+t ≤ T} min( ρ(ψ, t0+t), min_{t' ∈ [t0, t0+t)} ρ(φ, t') )
//! ```
//!
//! with `max ∅ = −∞` and `min ∅ = +∞`.

use thiserror::Error;

use super::{Expr, Formula, TimeInterval};
use crate::signal::{grid_index, Signal, GRID_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unknown variable `{0}` in formula")]
    UnknownVariable(String),
    #[error("signal does not match the monitor: {0}")]
    SignalMismatch(String),
}

#[derive(Debug, Clone)]
enum BoundExpr {
    Const(f64),
    Var(usize),
    Neg(Box<BoundExpr>),
    Add(Box<BoundExpr>, Box<BoundExpr>),
    Sub(Box<BoundExpr>, Box<BoundExpr>),
    Mul(Box<BoundExpr>, Box<BoundExpr>),
    Abs(Box<BoundExpr>),
    Min(Box<BoundExpr>, Box<BoundExpr>),
    Max(Box<BoundExpr>, Box<BoundExpr>),
}

impl BoundExpr {
    fn bind(e: &Expr, names: &[String]) -> Result<Self, EvalError> {
        let b = |x: &Expr| Self::bind(x, names).map(Box::new);
        Ok(match e {
            Expr::Const(c) => BoundExpr::Const(*c),
            Expr::Var(v) => {
                BoundExpr::Var(names.iter().position(|n| n == v).ok_or_else(|| EvalError::UnknownVariable(v.clone()))?)
            }
            Expr::Neg(a) => BoundExpr::Neg(b(a)?),
            Expr::Add(x, y) => BoundExpr::Add(b(x)?, b(y)?),
            Expr::Sub(x, y) => BoundExpr::Sub(b(x)?, b(y)?),
            Expr::Mul(x, y) => BoundExpr::Mul(b(x)?, b(y)?),
            Expr::Abs(a) => BoundExpr::Abs(b(a)?),
            Expr::Min(x, y) => BoundExpr::Min(b(x)?, b(y)?),
            Expr::Max(x, y) => BoundExpr::Max(b(x)?, b(y)?),
        })
    }

    fn eval(&self, row: &[f64]) -> f64 {
        match self {
            BoundExpr::Const(c) => *c,
            BoundExpr::Var(i) => row[*i],
            BoundExpr::Neg(a) => -a.eval(row),
            BoundExpr::Add(a, b) => a.eval(row) + b.eval(row),
            BoundExpr::Sub(a, b) => a.eval(row) - b.eval(row),
            BoundExpr::Mul(a, b) => a.eval(row) * b.eval(row),
            BoundExpr::Abs(a) => a.eval(row).abs(),
            BoundExpr::Min(a, b) => a.eval(row).min(b.eval(row)),
            BoundExpr::Max(a, b) => a.eval(row).max(b.eval(row)),
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Atom(BoundExpr),
    False,
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    /// Grid offsets of the interval; `hi = None` means unbounded.
    Until {
        lo: usize,
        hi: Option<usize>,
        lhs: Box<Node>,
        rhs: Box<Node>,
    },
}

/// First grid offset `k` with `k·step ≥ lo` and last with `k·step ≤ hi`.
fn interval_offsets(i: &TimeInterval, step: f64) -> (usize, Option<usize>) {
    let lo = grid_index(i.lo(), step).unwrap_or_else(|| (i.lo() / step).ceil() as usize);
    let hi = if i.is_unbounded() {
        None
    } else {
        let k = i.hi() / step;
        Some(grid_index(i.hi(), step).unwrap_or_else(|| (k + GRID_TOL).floor() as usize))
    };
    (lo, hi)
}

impl Node {
    fn bind(f: &Formula, names: &[String], step: f64) -> Result<Self, EvalError> {
        let b = |x: &Formula| Self::bind(x, names, step).map(Box::new);
        Ok(match f {
            Formula::Atom(e) => Node::Atom(BoundExpr::bind(e, names)?),
            Formula::False => Node::False,
            Formula::Not(a) => Node::Not(b(a)?),
            Formula::And(x, y) => Node::And(b(x)?, b(y)?),
            Formula::Until(i, x, y) => {
                let (lo, hi) = interval_offsets(i, step);
                Node::Until { lo, hi, lhs: b(x)?, rhs: b(y)? }
            }
        })
    }

    /// Robustness at instants `0..count` of `w`.
    fn robust(&self, w: &Signal, count: usize) -> Vec<f64> {
        match self {
            Node::Atom(e) => w.samples().take(count).map(|row| e.eval(row)).collect(),
            Node::False => vec![f64::NEG_INFINITY; count],
            Node::Not(a) => {
                let mut v = a.robust(w, count);
                v.iter_mut().for_each(|x| *x = -*x);
                v
            }
            Node::And(a, b) => {
                let mut v = a.robust(w, count);
                let r = b.robust(w, count);
                v.iter_mut().zip(r).for_each(|(x, y)| *x = x.min(y));
                v
            }
            Node::Until { lo, hi, lhs, rhs } => {
                let n = w.len();
                let need = until_reach(count, *hi, n);
                let r1 = lhs.robust(w, need);
                let r2 = rhs.robust(w, need);
                (0..count)
                    .map(|t0| {
                        let start = t0 + lo;
                        let end = hi.map_or(n - 1, |h| (t0 + h).min(n - 1));
                        let mut best = f64::NEG_INFINITY;
                        let mut prefix_min = f64::INFINITY;
                        for j in t0..=end.max(t0) {
                            if j >= start && j <= end {
                                best = best.max(r2[j].min(prefix_min));
                            }
                            prefix_min = prefix_min.min(r1[j]);
                        }
                        best
                    })
                    .collect()
            }
        }
    }

    fn sat(&self, w: &Signal, count: usize) -> Vec<bool> {
        match self {
            Node::Atom(e) => w.samples().take(count).map(|row| e.eval(row) > 0.0).collect(),
            Node::False => vec![false; count],
            Node::Not(a) => a.sat(w, count).into_iter().map(|b| !b).collect(),
            Node::And(a, b) => a.sat(w, count).into_iter().zip(b.sat(w, count)).map(|(x, y)| x && y).collect(),
            Node::Until { lo, hi, lhs, rhs } => {
                let n = w.len();
                let need = until_reach(count, *hi, n);
                let s1 = lhs.sat(w, need);
                let s2 = rhs.sat(w, need);
                (0..count)
                    .map(|t0| {
                        let start = t0 + lo;
                        let end = hi.map_or(n - 1, |h| (t0 + h).min(n - 1));
                        let mut prefix_ok = true;
                        for j in t0..=end.max(t0) {
                            if j >= start && j <= end && s2[j] && prefix_ok {
                                return true;
                            }
                            prefix_ok &= s1[j];
                            if !prefix_ok {
                                return false;
                            }
                        }
                        false
                    })
                    .collect()
            }
        }
    }
}

/// Number of sub-formula instants an Until needs to answer `count` instants.
fn until_reach(count: usize, hi: Option<usize>, n: usize) -> usize {
    match hi {
        Some(h) if count > 0 => (count - 1 + h + 1).min(n),
        _ => n,
    }
}

/// A formula bound to a fixed variable layout and sample step, reusable
/// across many signals of that shape.
#[derive(Debug, Clone)]
pub struct Monitor {
    root: Node,
    var_names: Vec<String>,
    step: f64,
}

impl Monitor {
    pub fn new(phi: &Formula, var_names: &[String], step: f64) -> Result<Self, EvalError> {
        Ok(Self { root: Node::bind(phi, var_names, step)?, var_names: var_names.to_vec(), step })
    }

    fn check(&self, w: &Signal) -> Result<(), EvalError> {
        if w.var_names() != self.var_names.as_slice() {
            return Err(EvalError::SignalMismatch(format!(
                "variables {:?}, expected {:?}",
                w.var_names(),
                self.var_names
            )));
        }
        if (w.step() - self.step).abs() > GRID_TOL * self.step {
            return Err(EvalError::SignalMismatch(format!("step {}, expected {}", w.step(), self.step)));
        }
        Ok(())
    }

    pub fn robustness(&self, w: &Signal) -> Result<f64, EvalError> {
        self.check(w)?;
        Ok(self.root.robust(w, 1)[0])
    }

    /// Robustness at every sample instant.
    pub fn robustness_signal(&self, w: &Signal) -> Result<Vec<f64>, EvalError> {
        self.check(w)?;
        Ok(self.root.robust(w, w.len()))
    }

    pub fn boolean_sat(&self, w: &Signal) -> Result<bool, EvalError> {
        self.check(w)?;
        Ok(self.root.sat(w, 1)[0])
    }
}

/// Robustness of `phi` on `w` at time 0.
pub fn robustness(w: &Signal, phi: &Formula) -> Result<f64, EvalError> {
    Monitor::new(phi, w.var_names(), w.step())?.robustness(w)
}

/// Classical satisfaction of `phi` by `w` on the same grid.
pub fn boolean_sat(w: &Signal, phi: &Formula) -> Result<bool, EvalError> {
    Monitor::new(phi, w.var_names(), w.step())?.boolean_sat(w)
}
