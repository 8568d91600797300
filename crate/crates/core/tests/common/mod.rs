//! Helpers shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use falsify_core::signal::Signal;
use falsify_core::stl::{Expr, Formula, TimeInterval};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VARS: [&str; 2] = ["x", "y"];

fn var() -> impl Fn(&mut ChaCha8Rng) -> Expr {
    |rng| Expr::var(VARS[rng.random_range(0..VARS.len())])
}

/// Small integer constants keep exact ties (robustness 0) in the corpus.
fn konst(rng: &mut ChaCha8Rng) -> Expr {
    Expr::Const(rng.random_range(-3..=3) as f64)
}

pub fn random_expr(rng: &mut ChaCha8Rng) -> Expr {
    let v = var();
    match rng.random_range(0..6) {
        0 => Expr::sub(v(rng), konst(rng)),
        1 => Expr::sub(konst(rng), v(rng)),
        2 => Expr::sub(Expr::Add(Box::new(v(rng)), Box::new(v(rng))), konst(rng)),
        3 => Expr::sub(Expr::Abs(Box::new(v(rng))), konst(rng)),
        4 => Expr::Mul(Box::new(v(rng)), Box::new(Expr::Const(0.5))),
        _ => Expr::sub(Expr::Max(Box::new(v(rng)), Box::new(v(rng))), konst(rng)),
    }
}

/// Interval bounds on a quarter grid, so some fall between samples.
pub fn random_interval(rng: &mut ChaCha8Rng) -> TimeInterval {
    if rng.random_bool(0.15) {
        return TimeInterval::unbounded();
    }
    let lo = rng.random_range(0..=12) as f64 * 0.25;
    let hi = lo + rng.random_range(1..=16) as f64 * 0.25;
    if rng.random_bool(0.1) {
        TimeInterval::new(lo, f64::INFINITY).expect("valid")
    } else {
        TimeInterval::new(lo, hi).expect("valid")
    }
}

/// Random formula of operator depth at most `depth`, using the core
/// operators and the derived ones.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return match rng.random_range(0..10) {
            0 => Formula::False,
            1 => Formula::tt(),
            _ => Formula::atom(random_expr(rng)),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, depth - 1);
    match rng.random_range(0..9) {
        0 => Formula::negate(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 | 5 => {
            let i = random_interval(rng);
            Formula::until(i, sub(rng), sub(rng))
        }
        6 => Formula::eventually(random_interval(rng), sub(rng)),
        _ => Formula::always(random_interval(rng), sub(rng)),
    }
}

/// Piecewise-constant signal over `x, y` with 1 to 20 samples.
pub fn random_signal(rng: &mut ChaCha8Rng) -> Signal {
    let n = rng.random_range(1..=20);
    let step = [0.25, 0.5, 1.0][rng.random_range(0..3)];
    let mut rows = Vec::with_capacity(n);
    let mut cur = [0.0, 0.0];
    for _ in 0..n {
        if rows.is_empty() || rng.random_bool(0.4) {
            cur = [rng.random_range(-4..=4) as f64, rng.random_range(-4..=4) as f64];
        }
        rows.push(cur.to_vec());
    }
    Signal::new(step, VARS.iter().map(|s| s.to_string()).collect(), rows).expect("well-formed signal")
}

/// Robustness at every sample straight from the definition: at sample `i`,
/// Until ranges over every later sample `j` whose offset lies in the
/// interval, and the left operand over the samples `i..j`.
pub fn oracle(phi: &Formula, w: &Signal) -> Vec<f64> {
    let n = w.len();
    match phi {
        Formula::Atom(e) => (0..n)
            .map(|i| {
                let row = w.sample(i);
                e.eval(&|v: &str| row[w.var_index(v).expect("known variable")])
            })
            .collect(),
        Formula::False => vec![f64::NEG_INFINITY; n],
        Formula::Not(a) => oracle(a, w).into_iter().map(|v| -v).collect(),
        Formula::And(a, b) => oracle(a, w).into_iter().zip(oracle(b, w)).map(|(x, y)| x.min(y)).collect(),
        Formula::Until(iv, a, b) => {
            let (ra, rb) = (oracle(a, w), oracle(b, w));
            (0..n)
                .map(|i| {
                    let mut best = f64::NEG_INFINITY;
                    for j in i..n {
                        let offset = (j - i) as f64 * w.step();
                        if offset < iv.lo() - 1e-9 || offset > iv.hi() + 1e-9 {
                            continue;
                        }
                        let mut left = f64::INFINITY;
                        for v in &ra[i..j] {
                            left = left.min(*v);
                        }
                        best = best.max(rb[j].min(left));
                    }
                    best
                })
                .collect()
        }
    }
}

pub fn ext_eq(a: f64, b: f64) -> bool {
    if a.is_finite() && b.is_finite() {
        (a - b).abs() <= 1e-9
    } else {
        a == b
    }
}

/// Outcome of checking the evaluator against the oracle on a corpus.
#[derive(Debug, Default)]
pub struct CorpusCheck {
    pub cases: usize,
    pub mismatches: Vec<String>,
    pub sign_checked: usize,
    pub sign_violations: Vec<String>,
}

pub fn check_corpus(seed: u64, cases: usize) -> CorpusCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CorpusCheck { cases, ..CorpusCheck::default() };
    for _ in 0..cases {
        let depth = rng.random_range(0..=3);
        let phi = random_formula(&mut rng, depth);
        let w = random_signal(&mut rng);
        let got = falsify_core::stl::robustness(&w, &phi).expect("variables are bound");
        let want = oracle(&phi, &w)[0];
        if !ext_eq(got, want) {
            out.mismatches.push(format!("{phi}: evaluator {got}, oracle {want}"));
        }
        if got.abs() > 1e-9 {
            out.sign_checked += 1;
            let sat = falsify_core::stl::boolean_sat(&w, &phi).expect("variables are bound");
            if sat != (got > 0.0) {
                out.sign_violations.push(format!("{phi}: robustness {got}, boolean {sat}"));
            }
        }
    }
    out
}

/// Smooth positive bumps; deterministic rewards for tree audits.
pub fn bumpy(x: &[f64]) -> f64 {
    1.0 + x.iter().enumerate().map(|(i, v)| ((i + 1) as f64 * 7.3 * v).sin().powi(2)).sum::<f64>()
}

/// Unit-box search space with `dims` inputs.
pub fn unit_space(partitions: Vec<usize>, control_points: usize) -> falsify_core::mcts::InputSpace {
    use falsify_core::models::InputRange;
    let ranges = (0..partitions.len()).map(|i| InputRange::new(format!("u{i}"), 0.0, 1.0)).collect();
    falsify_core::mcts::InputSpace::new(ranges, control_points, partitions, 1.0).expect("valid space")
}

/// Runs `samples` tree samples on a stub objective and checks the tree
/// invariants after each one. Returns the number of checks performed.
pub fn audit_run(
    variant: falsify_core::mcts::Variant,
    seed: u64,
    samples: usize,
    objective: &mut dyn FnMut(&[f64]) -> f64,
) -> Result<usize, String> {
    use falsify_core::mcts::{Search, SearchParams};
    let space = unit_space(vec![3, 2], 3);
    let k = space.control_points();
    let actions = space.num_actions();
    let params = SearchParams { variant, budget: samples, playout_evals: 8, seed, ..SearchParams::default() };
    let mut search = Search::new(space, params, objective).map_err(|e| e.to_string())?;
    let mut checks = 0;
    for s in 1..=samples {
        let rec = search.sample_once();
        let tree = search.tree();
        tree.audit(k).map_err(|e| format!("seed {seed}, sample {s}: {e}"))?;
        if tree.len() > s + 1 {
            return Err(format!("seed {seed}, sample {s}: {} nodes", tree.len()));
        }
        if let Some(x) = rec.expansion {
            if variant.descends(x.expanded_before, x.parent_visits, actions) {
                return Err(format!(
                    "seed {seed}, sample {s}: expanded node {} with {} children at N = {}",
                    x.parent, x.expanded_before, x.parent_visits
                ));
            }
        }
        checks += 1;
    }
    Ok(checks)
}

/// A deceptive objective on `[0,1]^K`: each leading control point inside
/// its target cell (of `cells` equal cells) lowers the value by 0.3, and a
/// decoy at 0.9 pulls the first control point outside its target. Negative
/// only when every control point sits in its target cell.
pub fn deceptive(targets: &[usize], cells: usize) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| {
        let k = targets.len();
        let inside = |i: usize| {
            let lo = targets[i] as f64 / cells as f64;
            x[i] >= lo && x[i] <= lo + 1.0 / cells as f64
        };
        let p = (0..k).take_while(|&i| inside(i)).count();
        if p == k {
            -0.1
        } else {
            0.3 * (k - p) as f64 + 0.2 * (x[p] - 0.9).abs() - 0.1
        }
    }
}
