//! Dependency trees and the CoNLL-style reader.
//!
//! Accepted row layouts (tab-separated, sentences separated by blank lines,
//! `#` comment lines ignored, `_` for an absent field):
//!
//! * 5 columns: `ID FORM POS HEAD LABEL`
//! * 8 or more columns (CoNLL-X / CoNLL-U): `ID FORM LEMMA CPOS POS FEATS
//!   HEAD DEPREL ...`; POS is read from column 5, falling back to column 4
//!   when it is `_`.
//!
//! IDs are 1-based and consecutive; HEAD 0 is the root.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("line {line}: {detail}")]
    Row { line: usize, detail: String },
    #[error("line {line}: head {head} out of range for {n} tokens")]
    HeadOutOfRange { line: usize, head: usize, n: usize },
    #[error("line {line}: sentence has no root")]
    NoRoot { line: usize },
    #[error("line {line}: second root (token {token})")]
    MultipleRoots { line: usize, token: usize },
    #[error("line {line}: cycle through token {token}")]
    Cycle { line: usize, token: usize },
    #[error("empty tree")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepNode {
    pub form: String,
    pub pos: Option<String>,
    /// `None` for the root (or, in partial trees, a detached node).
    pub head: Option<usize>,
    pub label: Option<String>,
}

/// Nodes are stored in surface order; node `i` is the `i+1`-th token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepTree {
    pub nodes: Vec<DepNode>,
}

impl DepTree {
    pub fn new(nodes: Vec<DepNode>) -> Result<Self, TreeError> {
        let t = Self { nodes };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn words(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.form.clone()).collect()
    }

    /// Nodes without a head, in index order.
    pub fn roots(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].head.is_none())
            .collect()
    }

    pub fn children(&self, head: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].head == Some(head))
            .collect()
    }

    /// Undirected arcs `(min, max)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.head.map(|h| (i.min(h), i.max(h))))
            .collect();
        e.sort_unstable();
        e
    }

    /// Exactly one root, heads in range, no cycles.
    pub fn validate(&self) -> Result<(), TreeError> {
        self.validate_forest()?;
        match self.roots().as_slice() {
            [] => Err(TreeError::NoRoot { line: 0 }),
            [_] => Ok(()),
            [_, second, ..] => Err(TreeError::MultipleRoots {
                line: 0,
                token: second + 1,
            }),
        }
    }

    /// Heads in range and acyclic; any number of roots.
    pub fn validate_forest(&self) -> Result<(), TreeError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        for node in &self.nodes {
            if let Some(h) = node.head {
                if h >= n {
                    return Err(TreeError::HeadOutOfRange {
                        line: 0,
                        head: h + 1,
                        n,
                    });
                }
            }
        }
        if let Some(token) = find_cycle(&self.nodes) {
            return Err(TreeError::Cycle { line: 0, token });
        }
        Ok(())
    }

    pub fn has_all_pos(&self) -> bool {
        self.nodes.iter().all(|n| n.pos.is_some())
    }

    /// Every arc (non-root node) carries a label.
    pub fn has_all_labels(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.head.is_none() || n.label.is_some())
    }

    /// Order-independent rendering: children and top-level groups are
    /// sorted, so two trees compare equal iff they match up to child order.
    pub fn canonical(&self) -> String {
        fn rec(t: &DepTree, i: usize) -> String {
            let n = &t.nodes[i];
            let mut s = format!("({}", n.form);
            if let Some(p) = &n.pos {
                s.push('/');
                s.push_str(p);
            }
            let mut kids: Vec<String> = t
                .children(i)
                .into_iter()
                .map(|c| match &t.nodes[c].label {
                    Some(l) => format!(" :{l} {}", rec(t, c)),
                    None => format!(" {}", rec(t, c)),
                })
                .collect();
            kids.sort();
            s.extend(kids);
            s.push(')');
            s
        }
        let mut groups: Vec<String> = self.roots().into_iter().map(|r| rec(self, r)).collect();
        groups.sort();
        groups.join(" ")
    }

    pub fn to_conll(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                i + 1,
                n.form,
                n.pos.as_deref().unwrap_or("_"),
                n.head.map_or(0, |h| h + 1),
                n.label.as_deref().unwrap_or("_"),
            );
        }
        out
    }
}

fn find_cycle(nodes: &[DepNode]) -> Option<usize> {
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut mark = vec![0u8; nodes.len()];
    for start in 0..nodes.len() {
        let mut path = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            match mark[i] {
                2 => break,
                1 => return Some(i + 1),
                _ => {
                    mark[i] = 1;
                    path.push(i);
                    cur = nodes[i].head;
                }
            }
        }
        for i in path {
            mark[i] = 2;
        }
    }
    None
}

fn field(s: &str) -> Option<String> {
    (s != "_" && !s.is_empty()).then(|| s.to_string())
}

/// Parses exactly one sentence.
pub fn parse_conll(text: &str) -> Result<DepTree, TreeError> {
    let mut trees = parse_conll_many(text)?;
    match trees.len() {
        0 => Err(TreeError::Empty),
        1 => Ok(trees.pop().unwrap()),
        _ => Err(TreeError::Row {
            line: 0,
            detail: format!("expected one sentence, found {}", trees.len()),
        }),
    }
}

pub fn parse_conll_many(text: &str) -> Result<Vec<DepTree>, TreeError> {
    let mut trees = Vec::new();
    let mut rows: Vec<(usize, DepNode)> = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !rows.is_empty() {
                trees.push(finish(std::mem::take(&mut rows), i)?);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        let (id, form, pos, head, label) = match cols.len() {
            5 => (cols[0], cols[1], field(cols[2]), cols[3], cols[4]),
            n if n >= 8 => (
                cols[0],
                cols[1],
                field(cols[4]).or_else(|| field(cols[3])),
                cols[6],
                cols[7],
            ),
            n => {
                return Err(TreeError::Row {
                    line: lineno,
                    detail: format!("expected 5 or at least 8 columns, got {n}"),
                })
            }
        };
        // Skip multiword-token and empty-node rows (CoNLL-U).
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let id: usize = id.parse().map_err(|_| TreeError::Row {
            line: lineno,
            detail: format!("bad id {id:?}"),
        })?;
        if id != rows.len() + 1 {
            return Err(TreeError::Row {
                line: lineno,
                detail: format!("expected id {}, got {id}", rows.len() + 1),
            });
        }
        let head: usize = head.parse().map_err(|_| TreeError::Row {
            line: lineno,
            detail: format!("bad head {head:?}"),
        })?;
        rows.push((
            lineno,
            DepNode {
                form: form.to_string(),
                pos,
                head: head.checked_sub(1),
                label: field(label),
            },
        ));
    }
    if !rows.is_empty() {
        trees.push(finish(rows, lines.len())?);
    }
    Ok(trees)
}

fn finish(rows: Vec<(usize, DepNode)>, end_line: usize) -> Result<DepTree, TreeError> {
    let n = rows.len();
    let mut root_seen = false;
    for (line, node) in &rows {
        match node.head {
            Some(h) if h >= n => {
                return Err(TreeError::HeadOutOfRange {
                    line: *line,
                    head: h + 1,
                    n,
                })
            }
            None if root_seen => {
                return Err(TreeError::MultipleRoots {
                    line: *line,
                    token: rows.iter().position(|r| r.0 == *line).unwrap() + 1,
                })
            }
            None => root_seen = true,
            _ => {}
        }
    }
    if !root_seen {
        return Err(TreeError::NoRoot { line: end_line });
    }
    let lines: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let nodes: Vec<DepNode> = rows.into_iter().map(|r| r.1).collect();
    if let Some(token) = find_cycle(&nodes) {
        return Err(TreeError::Cycle {
            line: lines[token - 1],
            token,
        });
    }
    Ok(DepTree { nodes })
}
