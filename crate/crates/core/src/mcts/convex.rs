//! Selection of a maximal axis-aligned box of unexpanded cells, used as the
//! expansion region under progressive widening.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::hillclimb::BoxDomain;

use super::space::{Action, InputSpace};

/// A box of cells: `lo[i]..=hi[i]` along each dimension (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl CellBox {
    pub fn contains(&self, a: &Action) -> bool {
        a.indices.iter().enumerate().all(|(i, k)| (self.lo[i]..=self.hi[i]).contains(k))
    }

    pub fn cells(&self) -> Vec<Action> {
        let mut out = vec![Action::new(Vec::new())];
        for i in 0..self.lo.len() {
            out = out
                .into_iter()
                .flat_map(|a| {
                    (self.lo[i]..=self.hi[i]).map(move |k| {
                        let mut v = a.indices.clone();
                        v.push(k);
                        Action::new(v)
                    })
                })
                .collect();
        }
        out
    }

    /// Moves `a` into the box coordinate-wise.
    pub fn clamp(&self, a: &Action) -> Action {
        Action::new(a.indices.iter().enumerate().map(|(i, k)| (*k).clamp(self.lo[i], self.hi[i])).collect())
    }

    pub fn region(&self, space: &InputSpace) -> BoxDomain {
        BoxDomain::from_intervals((0..self.lo.len()).map(|i| space.cell_span(i, self.lo[i], self.hi[i])))
            .expect("cell boxes are non-degenerate")
    }
}

/// Grows a box from a random unexpanded seed cell, one slab at a time in a
/// random order of (axis, direction) moves, until no slab can be added
/// without covering an expanded cell. `is_unexpanded` is indexed by action id.
pub fn maximal_convex_subset(space: &InputSpace, is_unexpanded: &[bool], rng: &mut impl Rng) -> CellBox {
    let candidates: Vec<usize> = (0..space.num_actions()).filter(|&id| is_unexpanded[id]).collect();
    let seed = *candidates.choose(rng).expect("at least one unexpanded cell");
    let a = space.action(seed);
    let mut b = CellBox { lo: a.indices.clone(), hi: a.indices };

    let m = space.dims();
    let mut moves: Vec<(usize, bool)> = (0..m).flat_map(|i| [(i, false), (i, true)]).collect();
    moves.shuffle(rng);
    loop {
        let mut grew = false;
        for &(axis, up) in &moves {
            loop {
                let next = if up {
                    if b.hi[axis] == space.partitions()[axis] {
                        break;
                    }
                    b.hi[axis] + 1
                } else {
                    if b.lo[axis] == 1 {
                        break;
                    }
                    b.lo[axis] - 1
                };
                let mut slab = b.clone();
                slab.lo[axis] = next;
                slab.hi[axis] = next;
                if !slab.cells().iter().all(|c| is_unexpanded[space.action_id(c)]) {
                    break;
                }
                if up {
                    b.hi[axis] = next;
                } else {
                    b.lo[axis] = next;
                }
                grew = true;
            }
        }
        if !grew {
            return b;
        }
    }
}
