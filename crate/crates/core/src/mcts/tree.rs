use std::collections::BTreeMap;

/// Index of a node in its [`Tree`].
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Action ids from the root; empty for the root.
    pub word: Vec<usize>,
    pub visits: u64,
    /// Lowest robustness seen below this node; `+∞` until a playout ran.
    pub reward: f64,
    pub children: BTreeMap<usize, NodeId>,
    pub parent: Option<NodeId>,
}

impl Node {
    pub fn depth(&self) -> usize {
        self.word.len()
    }
}

/// Arena-allocated search tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Default for Tree {
    fn default() -> Self {
        Self::new()
    }
}

impl Tree {
    pub const ROOT: NodeId = 0;

    pub fn new() -> Self {
        Self {
            nodes: vec![Node {
                word: Vec::new(),
                visits: 0,
                reward: f64::INFINITY,
                children: BTreeMap::new(),
                parent: None,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id]
    }

    /// Adds the child `parent·action` with `N = 0` and the given reward.
    pub(crate) fn add_child(&mut self, parent: NodeId, action: usize, reward: f64) -> NodeId {
        assert!(!self.nodes[parent].children.contains_key(&action), "child {action} already expanded");
        let id = self.nodes.len();
        let mut word = self.nodes[parent].word.clone();
        word.push(action);
        self.nodes.push(Node { word, visits: 0, reward, children: BTreeMap::new(), parent: Some(parent) });
        self.nodes[parent].children.insert(action, id);
        id
    }

    /// Re-establishes `R(w) = min_a R(wa)` from `from` up to the root.
    pub(crate) fn backpropagate(&mut self, from: NodeId) {
        let mut cur = Some(from);
        while let Some(id) = cur {
            let node = &self.nodes[id];
            if !node.children.is_empty() {
                let r = node.children.values().map(|&c| self.nodes[c].reward).fold(f64::INFINITY, f64::min);
                self.nodes[id].reward = r;
            }
            cur = self.nodes[id].parent;
        }
    }

    /// Largest finite reward in the tree, if any.
    pub fn max_finite_reward(&self) -> Option<f64> {
        self.nodes.iter().map(|n| n.reward).filter(|r| r.is_finite()).reduce(f64::max)
    }

    /// Number of nodes at each depth `0..=max depth`.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let mut hist = Vec::new();
        for n in &self.nodes {
            if hist.len() <= n.depth() {
                hist.resize(n.depth() + 1, 0);
            }
            hist[n.depth()] += 1;
        }
        hist
    }

    /// Checks the structural invariants; returns the first violation found.
    pub fn audit(&self, max_depth: usize) -> Result<(), String> {
        for (id, n) in self.nodes.iter().enumerate() {
            if n.depth() > max_depth {
                return Err(format!("node {id} at depth {} exceeds {max_depth}", n.depth()));
            }
            if n.children.is_empty() {
                continue;
            }
            let min = n.children.values().map(|&c| self.nodes[c].reward).fold(f64::INFINITY, f64::min);
            if min != n.reward && !(min.is_nan() && n.reward.is_nan()) {
                return Err(format!("node {id}: R = {} but min over children is {min}", n.reward));
            }
            let child_visits: u64 = n.children.values().map(|&c| self.nodes[c].visits).sum();
            if child_visits > n.visits {
                return Err(format!("node {id}: N = {} below children's total {child_visits}", n.visits));
            }
        }
        Ok(())
    }
}

/// Reward and visit count of one expanded child, as seen by UCB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChildStat {
    pub action: usize,
    pub reward: f64,
    pub visits: u64,
}

/// UCB score `(1 − R/tree_max) + c·√(2 ln N / n)`. Unvisited children score
/// `+∞`; when `tree_max ≤ 0` the exploitation term is dropped.
pub fn ucb_score(parent_visits: u64, child: &ChildStat, tree_max: Option<f64>, c: f64) -> f64 {
    if child.visits == 0 {
        return f64::INFINITY;
    }
    let exploit = match tree_max {
        Some(m) if m > 0.0 => 1.0 - child.reward / m,
        _ => 0.0,
    };
    let explore = c * (2.0 * (parent_visits.max(1) as f64).ln() / child.visits as f64).sqrt();
    exploit + explore
}

/// Picks the child with the highest UCB score; ties go to the smaller
/// reward, then to the smaller action id.
pub fn ucb_select(parent_visits: u64, children: &[ChildStat], tree_max: Option<f64>, c: f64) -> usize {
    assert!(!children.is_empty(), "UCB selection needs at least one expanded child");
    let mut best = children[0];
    let mut best_score = ucb_score(parent_visits, &best, tree_max, c);
    for ch in &children[1..] {
        let s = ucb_score(parent_visits, ch, tree_max, c);
        let better = s > best_score
            || (s == best_score && (ch.reward < best.reward || (ch.reward == best.reward && ch.action < best.action)));
        if better || best_score.is_nan() {
            best = *ch;
            best_score = s;
        }
    }
    best.action
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stat(action: usize, reward: f64, visits: u64) -> ChildStat {
        ChildStat { action, reward, visits }
    }

    #[test]
    fn ucb_worked_example() {
        let kids = [stat(1, 2.0, 6), stat(2, 4.0, 4)];
        let s1 = ucb_score(10, &kids[0], Some(4.0), 0.2);
        let s2 = ucb_score(10, &kids[1], Some(4.0), 0.2);
        assert!((s1 - 0.675).abs() < 1e-3, "{s1}");
        assert!((s2 - 0.215).abs() < 1e-3, "{s2}");
        assert_eq!(ucb_select(10, &kids, Some(4.0), 0.2), 1);
    }

    #[test]
    fn pure_exploitation_prefers_lowest_reward() {
        let kids = [stat(0, 3.0, 1), stat(1, 0.5, 9), stat(2, 1.0, 2)];
        assert_eq!(ucb_select(12, &kids, Some(3.0), 0.0), 1);
    }

    #[test]
    fn unvisited_children_first_with_tie_breaks() {
        let kids = [stat(0, 0.1, 5), stat(3, 2.0, 0), stat(1, 1.0, 0), stat(2, 1.0, 0)];
        assert_eq!(ucb_select(5, &kids, Some(2.0), 0.5), 1);
    }

    #[test]
    fn guard_for_non_positive_tree_max() {
        let kids = [stat(0, 0.0, 4), stat(1, 0.0, 1)];
        // exploitation vanishes, exploration decides
        assert_eq!(ucb_select(5, &kids, Some(0.0), 0.3), 1);
        assert_eq!(ucb_select(5, &kids, None, 0.3), 1);
    }

    #[test]
    fn selection_is_scale_free() {
        let kids = [stat(0, 2.0, 3), stat(1, 5.0, 1), stat(2, 7.0, 2)];
        for c in [0.0, 0.1, 0.5, 2.0] {
            let a = ucb_select(6, &kids, Some(7.0), c);
            let scaled: Vec<ChildStat> = kids.iter().map(|k| stat(k.action, k.reward * 13.0, k.visits)).collect();
            assert_eq!(ucb_select(6, &scaled, Some(91.0), c), a);
        }
    }

    #[test]
    fn backpropagation_takes_min_over_expanded() {
        let mut t = Tree::new();
        let a = t.add_child(Tree::ROOT, 0, 3.0);
        t.backpropagate(a);
        assert_eq!(t.node(Tree::ROOT).reward, 3.0);
        let b = t.add_child(Tree::ROOT, 2, 1.5);
        t.backpropagate(b);
        assert_eq!(t.node(Tree::ROOT).reward, 1.5);
        let aa = t.add_child(a, 1, 0.5);
        t.backpropagate(aa);
        assert_eq!(t.node(a).reward, 0.5);
        assert_eq!(t.node(Tree::ROOT).reward, 0.5);
        assert_eq!(t.depth_histogram(), vec![1, 2, 1]);
        assert_eq!(t.max_finite_reward(), Some(1.5));
        t.node_mut(Tree::ROOT).visits = 1;
        assert!(t.audit(2).is_ok());
        assert!(t.audit(1).is_err());
    }
}
