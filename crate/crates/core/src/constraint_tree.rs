//! Prefix tree restricting decoder output to permutations of an input
//! word multiset.
//!
//! Each input word is a non-empty sequence of subword ids. The tree merges
//! shared prefixes; every node counts how many input words pass through it
//! (`initial_count`) and how many end there (`terminal_count`). Decoding
//! state lives in [`ConstraintState`]: a cursor plus per-node remaining
//! counts, cloned per hypothesis with copy-on-write arrays.
//!
//! A word may end at an internal node when it is a strict prefix of another
//! input word (`{a}` and `{a b}`). When the same token can both continue
//! the current word and start a new one, the token sequence alone does not
//! fix the segmentation, so a state carries every feasible cursor
//! configuration ("branch"). With continuation-marked BPE tokens this
//! never happens and a state holds exactly one branch.

use std::sync::Arc;

use smallvec::SmallVec;

use crate::textprep::TokenId;

pub type NodeId = usize;

pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("empty input")]
    EmptyInput,
    #[error("input word {0} has no subwords")]
    EmptyWord(usize),
}

#[derive(Clone, Debug)]
pub struct Node {
    /// `None` only for the root.
    pub subword: Option<TokenId>,
    /// Sorted by token id.
    children: Vec<(TokenId, NodeId)>,
    pub initial_count: u32,
    pub terminal_count: u32,
}

impl Node {
    pub fn children(&self) -> &[(TokenId, NodeId)] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn child(&self, token: TokenId) -> Option<NodeId> {
        self.children
            .binary_search_by_key(&token, |&(t, _)| t)
            .ok()
            .map(|i| self.children[i].1)
    }
}

/// Immutable after [`ConstraintTree::build`].
#[derive(Clone, Debug)]
pub struct ConstraintTree {
    nodes: Vec<Node>,
    words: usize,
    subwords: usize,
}

impl ConstraintTree {
    pub fn build<W: AsRef<[TokenId]>>(words: &[W]) -> Result<Self, ConstraintError> {
        if words.is_empty() {
            return Err(ConstraintError::EmptyInput);
        }
        let mut nodes = vec![Node {
            subword: None,
            children: Vec::new(),
            initial_count: 0,
            terminal_count: 0,
        }];
        let mut subwords = 0;
        for (wi, w) in words.iter().enumerate() {
            let w = w.as_ref();
            if w.is_empty() {
                return Err(ConstraintError::EmptyWord(wi));
            }
            let mut cur = ROOT;
            for &tok in w {
                let next = match nodes[cur].children.binary_search_by_key(&tok, |&(t, _)| t) {
                    Ok(i) => nodes[cur].children[i].1,
                    Err(i) => {
                        let id = nodes.len();
                        nodes.push(Node {
                            subword: Some(tok),
                            children: Vec::new(),
                            initial_count: 0,
                            terminal_count: 0,
                        });
                        nodes[cur].children.insert(i, (tok, id));
                        id
                    }
                };
                nodes[next].initial_count += 1;
                cur = next;
            }
            nodes[cur].terminal_count += 1;
            subwords += w.len();
        }
        nodes[ROOT].initial_count = words.len() as u32;
        Ok(Self {
            nodes,
            words: words.len(),
            subwords,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Number of input words (with multiplicity).
    pub fn word_count(&self) -> usize {
        self.words
    }

    /// Total number of subwords over all input words; every complete
    /// output has exactly this length.
    pub fn subword_count(&self) -> usize {
        self.subwords
    }

    /// Follows `path` from the root.
    pub fn find(&self, path: &[TokenId]) -> Option<NodeId> {
        path.iter()
            .try_fold(ROOT, |cur, &t| self.nodes[cur].child(t))
    }

    pub fn initial_state(&self) -> ConstraintState {
        let remaining: Vec<u32> = self.nodes.iter().map(|n| n.initial_count).collect();
        let terminals: Vec<u32> = self.nodes.iter().map(|n| n.terminal_count).collect();
        let mut branches = SmallVec::new();
        branches.push(Branch {
            cursor: ROOT,
            remaining: Arc::new(remaining),
            terminals: Arc::new(terminals),
        });
        ConstraintState { branches }
    }

    /// Subwords that keep the output a prefix of some permutation of the
    /// input words, sorted ascending.
    pub fn valid_next(&self, state: &ConstraintState) -> Vec<TokenId> {
        let mut out: Vec<TokenId> = Vec::new();
        for b in &state.branches {
            self.extend_valid(b, &mut out);
        }
        if state.branches.len() > 1 {
            out.sort_unstable();
            out.dedup();
        }
        out
    }

    fn extend_valid(&self, b: &Branch, out: &mut Vec<TokenId>) {
        let open = |out: &mut Vec<TokenId>, node: NodeId| {
            out.extend(
                self.nodes[node]
                    .children
                    .iter()
                    .filter(|&&(_, c)| b.remaining[c] > 0)
                    .map(|&(t, _)| t),
            )
        };
        open(out, b.cursor);
        if b.cursor != ROOT && b.terminals[b.cursor] > 0 {
            let before = out.len();
            open(out, ROOT);
            if before > 0 && out.len() > before {
                out.sort_unstable();
                out.dedup();
            }
        }
    }

    /// Consumes `subword`. Invalid subwords yield a dead state.
    pub fn advance(&self, state: &ConstraintState, subword: TokenId) -> ConstraintState {
        let mut next: SmallVec<[Branch; 1]> = SmallVec::new();
        for b in &state.branches {
            // Continue the current word (or start one from the root).
            if let Some(c) = self.nodes[b.cursor].child(subword) {
                if b.remaining[c] > 0 {
                    let mut nb = b.clone();
                    Arc::make_mut(&mut nb.remaining)[c] -= 1;
                    nb.cursor = c;
                    self.settle(nb, &mut next);
                }
            }
            // End the current word here and start a new one.
            if b.cursor != ROOT && b.terminals[b.cursor] > 0 {
                if let Some(c) = self.nodes[ROOT].child(subword) {
                    if b.remaining[c] > 0 {
                        let mut nb = b.clone();
                        Arc::make_mut(&mut nb.terminals)[b.cursor] -= 1;
                        Arc::make_mut(&mut nb.remaining)[c] -= 1;
                        nb.cursor = c;
                        self.settle(nb, &mut next);
                    }
                }
            }
        }
        ConstraintState { branches: next }
    }

    /// Forces word termination when the cursor cannot continue, resetting
    /// it to the root, and drops infeasible branches.
    fn settle(&self, mut b: Branch, out: &mut SmallVec<[Branch; 1]>) {
        let can_continue = self.nodes[b.cursor]
            .children
            .iter()
            .any(|&(_, c)| b.remaining[c] > 0);
        if !can_continue {
            if b.terminals[b.cursor] == 0 {
                return;
            }
            Arc::make_mut(&mut b.terminals)[b.cursor] -= 1;
            b.cursor = ROOT;
        }
        if !out.contains(&b) {
            out.push(b);
        }
    }

    /// True once every input word has been emitted.
    pub fn is_exhausted(&self, state: &ConstraintState) -> bool {
        state.branches.iter().any(|b| {
            b.cursor == ROOT
                && self.nodes[ROOT]
                    .children
                    .iter()
                    .all(|&(_, c)| b.remaining[c] == 0)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Branch {
    cursor: NodeId,
    remaining: Arc<Vec<u32>>,
    terminals: Arc<Vec<u32>>,
}

/// Per-hypothesis traversal state. Cloning is cheap: count arrays are
/// shared until a branch writes to them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintState {
    branches: SmallVec<[Branch; 1]>,
}

/// Read-only view of one cursor configuration.
#[derive(Clone, Copy, Debug)]
pub struct BranchView<'a> {
    pub cursor: NodeId,
    pub remaining: &'a [u32],
    pub remaining_terminals: &'a [u32],
}

impl ConstraintState {
    /// The state reached after an invalid transition.
    pub fn dead() -> Self {
        Self {
            branches: SmallVec::new(),
        }
    }

    pub fn is_dead(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn branches(&self) -> impl Iterator<Item = BranchView<'_>> {
        self.branches.iter().map(|b| BranchView {
            cursor: b.cursor,
            remaining: &b.remaining,
            remaining_terminals: &b.terminals,
        })
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}
