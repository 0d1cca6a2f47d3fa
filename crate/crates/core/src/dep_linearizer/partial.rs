//! Partial trees: random subsets of POS tags and labeled arcs.
//!
//! Each node draws, in index order, whether to keep its tag and then
//! whether to keep the labeled arc into it (label and arc go together).
//! A dropped arc detaches the child's subtree to the top level. The root
//! label is never kept since there is no arc to carry it.

use super::tree::DepTree;
use crate::rng::{derive_seed, SeededRng};

/// Retention levels of the 3x3 grid.
pub const LEVELS: [f64; 3] = [0.0, 0.5, 1.0];

pub fn sample_partial(tree: &DepTree, p_pos: f64, p_dep: f64, seed: u64) -> DepTree {
    let mut rng = SeededRng::new(seed);
    let mut out = tree.clone();
    for node in &mut out.nodes {
        if !rng.bernoulli(p_pos) {
            node.pos = None;
        }
        match node.head {
            Some(_) => {
                if !rng.bernoulli(p_dep) {
                    node.head = None;
                    node.label = None;
                }
            }
            None => node.label = None,
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub p_pos: f64,
    pub p_dep: f64,
    pub tree: DepTree,
}

/// All nine `(p_pos, p_dep)` cells, each with its own sub-stream of `seed`.
pub fn partial_grid(tree: &DepTree, seed: u64) -> Vec<GridCell> {
    let mut cells = Vec::with_capacity(9);
    for (i, &p_pos) in LEVELS.iter().enumerate() {
        for (j, &p_dep) in LEVELS.iter().enumerate() {
            let s = derive_seed(seed, (i * 3 + j) as u64);
            cells.push(GridCell {
                p_pos,
                p_dep,
                tree: sample_partial(tree, p_pos, p_dep, s),
            });
        }
    }
    cells
}
