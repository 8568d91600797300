use std::time::Duration;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clock::Stopwatch;
use crate::hillclimb::{BoxDomain, Budget, OptResult, SolveOptions, Solver};
use crate::signal::PiecewiseConstantInput;

use super::convex::maximal_convex_subset;
use super::space::{Action, InputSpace};
use super::tree::{ucb_select, ChildStat, NodeId, Tree};
use super::{FalsificationOutcome, MctsError};

const TREE_STREAM: u64 = 1;
const PLAYOUT_STREAM: u64 = 2;
const CONVEX_STREAM: u64 = 3;
const FINAL_STREAM: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Variant {
    /// Expand every action of a node before descending into it.
    Basic,
    /// Descend once the number of expanded children reaches `C·N^α`.
    ProgressiveWidening { widening: f64, alpha: f64 },
}

impl Variant {
    pub const DEFAULT_PW: Variant = Variant::ProgressiveWidening { widening: 0.7, alpha: 0.85 };

    /// Whether a node with `expanded` of `num_actions` children expanded and
    /// `visits` visits (counting the current one) descends instead of expanding.
    pub fn descends(&self, expanded: usize, visits: u64, num_actions: usize) -> bool {
        expanded == num_actions
            || match *self {
                Variant::Basic => false,
                Variant::ProgressiveWidening { widening, alpha } => {
                    expanded as f64 >= widening * (visits as f64).powf(alpha)
                }
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub variant: Variant,
    /// Exploration weight in UCB.
    pub c: f64,
    /// Maximum number of tree samples in preprocessing.
    pub budget: usize,
    pub solver: Solver,
    pub playout_evals: usize,
    pub final_evals: usize,
    /// Simulations allowed for the whole run; defaults to the sum of the
    /// preprocessing and final budgets.
    pub sim_cap: Option<usize>,
    /// Start the final hill-climb from the best input found so far.
    pub warm_start: bool,
    pub seed: u64,
    pub wall_clock: Option<Duration>,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            variant: Variant::Basic,
            c: 0.2,
            budget: 40,
            solver: Solver::Cmaes,
            playout_evals: 100,
            final_evals: 2000,
            sim_cap: None,
            warm_start: true,
            seed: 0,
            wall_clock: None,
        }
    }
}

impl SearchParams {
    pub fn effective_cap(&self) -> usize {
        self.sim_cap.unwrap_or_else(|| self.budget.saturating_mul(self.playout_evals).saturating_add(self.final_evals))
    }

    fn validate(&self) -> Result<(), MctsError> {
        let bad = |m: &str| Err(MctsError::InvalidArgument(m.into()));
        if self.budget == 0 {
            return bad("MCTS budget must be at least 1");
        }
        if self.playout_evals == 0 {
            return bad("playout budget must be at least 1 simulation");
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return bad("exploration weight c must be a non-negative number");
        }
        if let Variant::ProgressiveWidening { widening, alpha } = self.variant {
            if !(widening.is_finite() && widening > 0.0) {
                return bad("widening constant C must be positive");
            }
            if !(alpha > 0.0 && alpha <= 1.0) {
                return bad("widening exponent alpha must lie in (0, 1]");
            }
        }
        if self.effective_cap() == 0 {
            return bad("simulation cap must be positive");
        }
        Ok(())
    }
}

/// What one tree sample did; used by audits.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    /// Nodes visited from the root, each of which had its visit count bumped.
    pub path: Vec<NodeId>,
    pub expansion: Option<Expansion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub parent: NodeId,
    /// `N(w)` after this visit's increment.
    pub parent_visits: u64,
    /// Expanded children of the parent before this expansion.
    pub expanded_before: usize,
    pub child: NodeId,
    /// Region the playout confined `u_{d+1}` to.
    pub region: BoxDomain,
    pub playout_point: Vec<f64>,
    pub robustness: f64,
    pub simulations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub outcome: FalsificationOutcome,
    /// Input achieving the lowest robustness seen, if any evaluation succeeded.
    pub best_input: Option<PiecewiseConstantInput>,
    pub best_robustness: f64,
    pub iterations: usize,
    pub simulations: usize,
    pub preprocess_simulations: usize,
    pub falsified_in_preprocessing: bool,
    pub wall_s: f64,
    pub tree: Tree,
}

/// One falsification run: the tree, its random streams and its counters.
pub struct Search<'a> {
    space: InputSpace,
    params: SearchParams,
    objective: &'a mut dyn FnMut(&[f64]) -> f64,
    tree: Tree,
    tree_rng: ChaCha8Rng,
    playout_rng: ChaCha8Rng,
    convex_rng: ChaCha8Rng,
    clock: Stopwatch,
    cap: usize,
    simulations: usize,
    iterations: usize,
    best: Option<(Vec<f64>, f64)>,
    best_word: Vec<usize>,
    falsifying: Option<(Vec<f64>, f64)>,
}

impl<'a> Search<'a> {
    pub fn new(
        space: InputSpace,
        params: SearchParams,
        objective: &'a mut dyn FnMut(&[f64]) -> f64,
    ) -> Result<Self, MctsError> {
        params.validate()?;
        let seed = params.seed;
        Ok(Self {
            cap: params.effective_cap(),
            space,
            params,
            objective,
            tree: Tree::new(),
            tree_rng: stream(seed, TREE_STREAM),
            playout_rng: stream(seed, PLAYOUT_STREAM),
            convex_rng: stream(seed, CONVEX_STREAM),
            clock: Stopwatch::start(),
            simulations: 0,
            iterations: 0,
            best: None,
            best_word: Vec::new(),
            falsifying: None,
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn simulations(&self) -> usize {
        self.simulations
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Best prefix `a⃗_min` and its reward `R_min`.
    pub fn best_prefix(&self) -> (Vec<Action>, f64) {
        let word = self.best_word.iter().map(|&a| self.space.action(a)).collect();
        (word, self.best.as_ref().map_or(f64::INFINITY, |b| b.1))
    }

    fn out_of_time(&self) -> bool {
        self.params.wall_clock.is_some_and(|w| self.clock.elapsed() >= w)
    }

    fn remaining_time(&self) -> Option<Duration> {
        self.params.wall_clock.map(|w| w.saturating_sub(self.clock.elapsed()))
    }

    fn can_continue_preprocessing(&self) -> bool {
        let root = self.tree.node(Tree::ROOT).reward;
        !(root < 0.0) && self.iterations < self.params.budget && self.simulations < self.cap && !self.out_of_time()
    }

    /// One pass from the root: descend while the expansion rule says so,
    /// then expand a single child and back-propagate.
    pub fn sample_once(&mut self) -> SampleRecord {
        let k = self.space.control_points();
        let num_actions = self.space.num_actions();
        let mut id = Tree::ROOT;
        let mut path = Vec::new();
        let expansion = loop {
            path.push(id);
            let node = self.tree.node_mut(id);
            node.visits += 1;
            let visits = node.visits;
            if node.depth() >= k {
                break None;
            }
            let expanded = node.children.len();
            if self.params.variant.descends(expanded, visits, num_actions) {
                id = self.select_child(id);
                continue;
            }
            break Some(self.expand(id, visits, expanded));
        };
        self.tree.backpropagate(*path.last().expect("path starts at the root"));
        SampleRecord { path, expansion }
    }

    fn select_child(&self, id: NodeId) -> NodeId {
        let node = self.tree.node(id);
        let stats: Vec<ChildStat> = node
            .children
            .iter()
            .map(|(&action, &c)| {
                let ch = self.tree.node(c);
                ChildStat { action, reward: ch.reward, visits: ch.visits }
            })
            .collect();
        let a = ucb_select(node.visits, &stats, self.tree.max_finite_reward(), self.params.c);
        node.children[&a]
    }

    fn expand(&mut self, parent: NodeId, parent_visits: u64, expanded_before: usize) -> Expansion {
        let m = self.space.dims();
        let word = self.tree.node(parent).word.clone();
        let d = word.len();
        let mut regions: Vec<BoxDomain> = word.iter().map(|&a| self.space.reg(&self.space.action(a))).collect();
        let children = &self.tree.node(parent).children;
        let unexpanded: Vec<bool> = (0..self.space.num_actions()).map(|a| !children.contains_key(&a)).collect();

        let cell_box = match self.params.variant {
            Variant::Basic => {
                let free: Vec<usize> = (0..unexpanded.len()).filter(|&a| unexpanded[a]).collect();
                let a = free[self.tree_rng.random_range(0..free.len())];
                regions.push(self.space.reg(&self.space.action(a)));
                Err(a)
            }
            Variant::ProgressiveWidening { .. } => {
                let b = maximal_convex_subset(&self.space, &unexpanded, &mut self.convex_rng);
                regions.push(b.region(&self.space));
                Ok(b)
            }
        };
        let region = regions[d].clone();
        let dom = self.space.playout_domain(&regions);
        let evals = self.params.playout_evals.min(self.cap - self.simulations);
        let seed = self.playout_rng.next_u64();
        let res = self.minimize(&dom, evals, seed, None);
        self.simulations += res.evals_used;

        let action = match cell_box {
            Err(a) => a,
            Ok(b) => {
                let cell = self.space.cell_of(&res.best_point[d * m..(d + 1) * m]);
                self.space.action_id(&b.clamp(&cell))
            }
        };
        let child = self.tree.add_child(parent, action, res.best_value);
        let mut child_word = word;
        child_word.push(action);
        self.record(&res, Some(child_word));
        Expansion {
            parent,
            parent_visits,
            expanded_before,
            child,
            region,
            playout_point: res.best_point,
            robustness: res.best_value,
            simulations: res.evals_used,
        }
    }

    fn minimize(&mut self, dom: &BoxDomain, evals: usize, seed: u64, start: Option<Vec<f64>>) -> OptResult {
        let mut budget = Budget::evals(evals);
        budget.wall_clock = self.remaining_time();
        let opts = SolveOptions { stop_on_negative: true, start };
        let f = &mut *self.objective;
        self.params.solver.minimize(f, dom, budget, seed, &opts).expect("validated playout budget")
    }

    fn record(&mut self, res: &OptResult, word: Option<Vec<usize>>) {
        let improved = self.best.as_ref().is_none_or(|b| res.best_value < b.1);
        if improved && !res.history.is_empty() {
            self.best = Some((res.best_point.clone(), res.best_value));
            if let Some(w) = word {
                self.best_word = w;
            }
        }
        if res.best_value < 0.0 && self.falsifying.is_none() {
            self.falsifying = Some((res.best_point.clone(), res.best_value));
        }
    }

    /// The tree loop: samples while no negative reward reached the root and
    /// the tree, simulation and time budgets allow.
    pub fn preprocess(&mut self) -> FalsificationOutcome {
        while self.can_continue_preprocessing() {
            self.sample_once();
            self.iterations += 1;
        }
        self.outcome()
    }

    fn outcome(&self) -> FalsificationOutcome {
        match &self.falsifying {
            Some((x, r)) => FalsificationOutcome::FalsifyingInput { input: self.input(x), robustness: *r },
            None => {
                let (word, robustness) = self.best_prefix();
                FalsificationOutcome::BestPrefix { word, robustness }
            }
        }
    }

    fn input(&self, flat: &[f64]) -> PiecewiseConstantInput {
        PiecewiseConstantInput::from_flat(self.space.horizon(), self.space.dims(), flat)
            .expect("points of the search box are finite")
    }

    /// Preprocessing followed by the final hill-climb inside the cells of
    /// the best prefix, unless preprocessing already falsified.
    pub fn run(&mut self) -> SearchReport {
        self.preprocess();
        let preprocess_simulations = self.simulations;
        let falsified_in_preprocessing = self.falsifying.is_some();
        let remaining = self.cap - self.simulations;
        if !falsified_in_preprocessing && remaining > 0 && self.params.final_evals > 0 && !self.out_of_time() {
            let regions: Vec<BoxDomain> =
                self.best_word.iter().map(|&a| self.space.reg(&self.space.action(a))).collect();
            let dom = self.space.playout_domain(&regions);
            let start = if self.params.warm_start { self.best.as_ref().map(|b| b.0.clone()) } else { None };
            let seed = stream(self.params.seed, FINAL_STREAM).next_u64();
            let res = self.minimize(&dom, self.params.final_evals.min(remaining), seed, start);
            self.simulations += res.evals_used;
            self.record(&res, None);
        }
        SearchReport {
            outcome: self.outcome(),
            best_input: self.best.as_ref().map(|b| self.input(&b.0)),
            best_robustness: self.best.as_ref().map_or(f64::INFINITY, |b| b.1),
            iterations: self.iterations,
            simulations: self.simulations,
            preprocess_simulations,
            falsified_in_preprocessing,
            wall_s: self.clock.elapsed_s(),
            tree: self.tree.clone(),
        }
    }
}
