//! PENMAN-style serialization of dependency trees.
//!
//! ```text
//! base  food Bob eat_ s
//! brac  ( food ) ( Bob ) ( eat_ s )
//! pos   ( food NNP ) ( Bob NNP ) ( eat_ s VBZ )
//! udep  ( eat_ s ( Bob ) ( food ) )
//! ldep  ( eat_ s :sub ( Bob ) :obj ( food ) )
//! full  ( eat_ s VBZ :obj ( food NNP ) :sub ( Bob NNP ) )
//! ```
//!
//! Word forms are BPE-segmented; tags and `:label` atoms stay single
//! tokens. Flat modes shuffle all words, nested modes shuffle the
//! top-level groups and the children of every head. Forests (partial
//! trees) serialize as several top-level groups.

use serde::{Deserialize, Serialize};

use super::tree::{DepNode, DepTree, TreeError};
use crate::rng::SeededRng;
use crate::textprep::bpe::is_continuation;
use crate::textprep::{join_word, BpeMerges};

pub const OPEN: &str = "(";
pub const CLOSE: &str = ")";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenmanMode {
    Base,
    Brac,
    Pos,
    Udep,
    Ldep,
    Full,
}

impl PenmanMode {
    pub const ALL: [PenmanMode; 6] = [
        PenmanMode::Base,
        PenmanMode::Brac,
        PenmanMode::Pos,
        PenmanMode::Udep,
        PenmanMode::Ldep,
        PenmanMode::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenmanMode::Base => "base",
            PenmanMode::Brac => "brac",
            PenmanMode::Pos => "pos",
            PenmanMode::Udep => "udep",
            PenmanMode::Ldep => "ldep",
            PenmanMode::Full => "full",
        }
    }

    fn style(self) -> Style {
        use Need::*;
        let (brackets, nested, tags, labels) = match self {
            PenmanMode::Base => (false, false, Never, Never),
            PenmanMode::Brac => (true, false, Never, Never),
            PenmanMode::Pos => (true, false, Always, Never),
            PenmanMode::Udep => (true, true, Never, Never),
            PenmanMode::Ldep => (true, true, Never, Always),
            PenmanMode::Full => (true, true, Always, Always),
        };
        Style {
            brackets,
            nested,
            tags,
            labels,
        }
    }
}

impl std::str::FromStr for PenmanMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PenmanMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown PENMAN mode {s:?}"))
    }
}

impl std::fmt::Display for PenmanMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Need {
    Never,
    Always,
    IfPresent,
}

#[derive(Clone, Copy, Debug)]
struct Style {
    brackets: bool,
    nested: bool,
    tags: Need,
    labels: Need,
}

/// Rendering used for partial trees: nested, with whatever tags and
/// labels the tree carries.
const AVAILABLE: Style = Style {
    brackets: true,
    nested: true,
    tags: Need::IfPresent,
    labels: Need::IfPresent,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PenmanError {
    #[error("mode {mode} needs a POS tag on token {token}")]
    MissingPos { mode: PenmanMode, token: usize },
    #[error("mode {mode} needs a label on the arc into token {token}")]
    MissingLabel { mode: PenmanMode, token: usize },
    #[error("unbalanced brackets")]
    Unbalanced,
    #[error("unexpected token {token:?} at position {pos}")]
    Unexpected { pos: usize, token: String },
    #[error("unexpected end of sequence")]
    Truncated,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

fn is_label(tok: &str) -> bool {
    tok.len() > 1 && tok.starts_with(':')
}

fn segment(form: &str, bpe: Option<&BpeMerges>) -> Vec<String> {
    match bpe {
        Some(m) => m.apply(form),
        None => vec![form.to_string()],
    }
}

pub fn serialize_penman(
    tree: &DepTree,
    mode: PenmanMode,
    shuffle_seed: u64,
    bpe: Option<&BpeMerges>,
) -> Result<Vec<String>, PenmanError> {
    tree.validate_forest()?;
    let style = mode.style();
    for (i, n) in tree.nodes.iter().enumerate() {
        if style.tags == Need::Always && n.pos.is_none() {
            return Err(PenmanError::MissingPos { mode, token: i + 1 });
        }
        if style.labels == Need::Always && n.head.is_some() && n.label.is_none() {
            return Err(PenmanError::MissingLabel { mode, token: i + 1 });
        }
    }
    Ok(render(tree, style, shuffle_seed, bpe))
}

/// Serializes a (possibly partial) tree with every annotation it carries.
/// Words without a head and without retained children come out as
/// bracketed singletons.
pub fn serialize_available(
    tree: &DepTree,
    shuffle_seed: u64,
    bpe: Option<&BpeMerges>,
) -> Result<Vec<String>, PenmanError> {
    tree.validate_forest()?;
    Ok(render(tree, AVAILABLE, shuffle_seed, bpe))
}

fn render(tree: &DepTree, style: Style, seed: u64, bpe: Option<&BpeMerges>) -> Vec<String> {
    let mut rng = SeededRng::new(seed);
    let mut out = Vec::new();
    if !style.nested {
        let order = rng.permutation(tree.len());
        for i in order {
            let n = &tree.nodes[i];
            if style.brackets {
                out.push(OPEN.to_string());
            }
            out.extend(segment(&n.form, bpe));
            if style.tags != Need::Never {
                out.extend(n.pos.clone());
            }
            if style.brackets {
                out.push(CLOSE.to_string());
            }
        }
        return out;
    }
    let mut tops = tree.roots();
    rng.shuffle(&mut tops);
    for r in tops {
        group(tree, r, style, &mut rng, bpe, &mut out);
    }
    out
}

fn group(
    tree: &DepTree,
    i: usize,
    style: Style,
    rng: &mut SeededRng,
    bpe: Option<&BpeMerges>,
    out: &mut Vec<String>,
) {
    let n = &tree.nodes[i];
    out.push(OPEN.to_string());
    out.extend(segment(&n.form, bpe));
    if style.tags != Need::Never {
        out.extend(n.pos.clone());
    }
    let mut kids = tree.children(i);
    rng.shuffle(&mut kids);
    for c in kids {
        if style.labels != Need::Never {
            if let Some(l) = &tree.nodes[c].label {
                out.push(format!(":{l}"));
            }
        }
        group(tree, c, style, rng, bpe, out);
    }
    out.push(CLOSE.to_string());
}

/// Inverse of [`serialize_penman`] up to child order. Returns a forest
/// whose nodes are in emission order; forms are re-joined from subwords.
pub fn parse_penman<S: AsRef<str>>(tokens: &[S], mode: PenmanMode) -> Result<DepTree, PenmanError> {
    parse_with(tokens, mode.style())
}

/// Inverse of [`serialize_available`].
pub fn parse_available<S: AsRef<str>>(tokens: &[S]) -> Result<DepTree, PenmanError> {
    parse_with(tokens, AVAILABLE)
}

fn parse_with<S: AsRef<str>>(tokens: &[S], style: Style) -> Result<DepTree, PenmanError> {
    let toks: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
    let mut depth: i64 = 0;
    for t in &toks {
        match *t {
            OPEN => depth += 1,
            CLOSE => depth -= 1,
            _ => {}
        }
    }
    let mut p = Parser {
        toks,
        pos: 0,
        style,
        nodes: Vec::new(),
    };
    let result = if style.brackets {
        p.groups()
    } else {
        p.bare_words()
    };
    match result {
        Ok(()) => Ok(DepTree { nodes: p.nodes }),
        // A word may legitimately be "(" or ")", so only report
        // imbalance when the structure failed to parse.
        Err(_) if depth != 0 => Err(PenmanError::Unbalanced),
        Err(e) => Err(e),
    }
}

struct Parser<'a> {
    toks: Vec<&'a str>,
    pos: usize,
    style: Style,
    nodes: Vec<DepNode>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }

    fn bump(&mut self) -> Result<&'a str, PenmanError> {
        let t = self
            .toks
            .get(self.pos)
            .copied()
            .ok_or(PenmanError::Truncated)?;
        self.pos += 1;
        Ok(t)
    }

    fn unexpected(&self) -> PenmanError {
        match self.peek() {
            Some(t) => PenmanError::Unexpected {
                pos: self.pos,
                token: t.to_string(),
            },
            None => PenmanError::Truncated,
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), PenmanError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn word(&mut self) -> Result<String, PenmanError> {
        let mut parts = Vec::new();
        loop {
            let t = self.bump()?;
            parts.push(t);
            if !is_continuation(t) {
                break;
            }
        }
        Ok(join_word(&parts))
    }

    fn bare_words(&mut self) -> Result<(), PenmanError> {
        while self.peek().is_some() {
            let form = self.word()?;
            self.push(form, None, None, None);
        }
        Ok(())
    }

    fn groups(&mut self) -> Result<(), PenmanError> {
        if self.toks.is_empty() {
            return Err(PenmanError::Truncated);
        }
        while self.peek().is_some() {
            self.group(None, None)?;
        }
        Ok(())
    }

    fn push(
        &mut self,
        form: String,
        pos: Option<String>,
        head: Option<usize>,
        label: Option<String>,
    ) -> usize {
        self.nodes.push(DepNode {
            form,
            pos,
            head,
            label,
        });
        self.nodes.len() - 1
    }

    fn group(&mut self, head: Option<usize>, label: Option<String>) -> Result<(), PenmanError> {
        self.expect(OPEN)?;
        let form = self.word()?;
        let pos = match self.style.tags {
            Need::Never => None,
            Need::Always => match self.peek() {
                Some(t) if t != CLOSE && t != OPEN && !is_label(t) => {
                    Some(self.bump()?.to_string())
                }
                _ => return Err(self.unexpected()),
            },
            Need::IfPresent => match self.peek() {
                Some(t) if t != CLOSE && t != OPEN && !is_label(t) => {
                    Some(self.bump()?.to_string())
                }
                _ => None,
            },
        };
        let me = self.push(form, pos, head, label);
        loop {
            match self.peek() {
                Some(CLOSE) => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(OPEN) if self.style.nested && self.style.labels != Need::Always => {
                    self.group(Some(me), None)?;
                }
                Some(t) if self.style.nested && self.style.labels != Need::Never && is_label(t) => {
                    let l = t[1..].to_string();
                    self.pos += 1;
                    self.group(Some(me), Some(l))?;
                }
                _ => return Err(self.unexpected()),
            }
        }
    }
}
