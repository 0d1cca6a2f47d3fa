//! Minimum spanning trees over probe distances and attachment scoring.

use std::collections::{BTreeSet, VecDeque};

use ndarray::{Array2, ArrayView2};

use crate::dep_linearizer::DepTree;

/// Pairwise path lengths in the undirected tree.
pub fn tree_distances(tree: &DepTree) -> Array2<f64> {
    let n = tree.len();
    let mut adj = vec![Vec::new(); n];
    for (a, b) in tree.edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut d = Array2::from_elem((n, n), f64::INFINITY);
    for s in 0..n {
        d[[s, s]] = 0.0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if d[[s, v]].is_infinite() {
                    d[[s, v]] = d[[s, u]] + 1.0;
                    q.push_back(v);
                }
            }
        }
    }
    d
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Kruskal's algorithm; equal weights are taken in `(i, j)` order.
/// Returns sorted `(i, j)` pairs with `i < j`.
pub fn mst(dist: ArrayView2<f64>) -> Vec<(usize, usize)> {
    let n = dist.nrows();
    if n < 2 {
        return Vec::new();
    }
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((dist[[i, j]], i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n - 1);
    for (_, i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            out.push((i, j));
            if out.len() == n - 1 {
                break;
            }
        }
    }
    out.sort_unstable();
    out
}

/// `(matched, gold)` undirected edge counts.
pub fn attachment_counts(pred: &[(usize, usize)], gold: &DepTree) -> (usize, usize) {
    let g: BTreeSet<(usize, usize)> = gold.edges().into_iter().collect();
    let hit = pred
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect::<BTreeSet<_>>()
        .intersection(&g)
        .count();
    (hit, g.len())
}

/// Undirected unlabeled attachment score for one sentence. A single-word
/// sentence has nothing to attach and scores 1.
pub fn uuas(pred: &[(usize, usize)], gold: &DepTree) -> f64 {
    let (hit, total) = attachment_counts(pred, gold);
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}
