use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub type TokenId = u32;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
/// Reserved input token used to simulate unconditional generation.
pub const NULL: &str = "<null>";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("empty vocabulary")]
    Empty,
    #[error("duplicate token {0:?} in vocabulary")]
    Duplicate(String),
    #[error("token {0:?} contains whitespace")]
    Whitespace(String),
}

/// Bijective token string <-> id mapping.
///
/// Vocabularies built with [`Vocab::with_specials`] always start with
/// `<s> </s> <unk> <null>` at ids 0..4. Vocabularies received from an
/// external scorer keep the scorer's order; their specials are looked up
/// by name and may be absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    pub fn with_specials() -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for s in [BOS, EOS, UNK, NULL] {
            v.insert(s);
        }
        v
    }

    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for t in tokens {
            let t: String = t.into();
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(VocabError::Whitespace(t));
            }
            if v.index.contains_key(&t) {
                return Err(VocabError::Duplicate(t));
            }
            v.index.insert(t.clone(), v.tokens.len() as TokenId);
            v.tokens.push(t);
        }
        if v.tokens.is_empty() {
            return Err(VocabError::Empty);
        }
        Ok(v)
    }

    /// Returns the id of `token`, adding it if absent.
    pub fn insert(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Maps out-of-vocabulary tokens to `<unk>` (or `None` without one).
    pub fn id_or_unk(&self, token: &str) -> Option<TokenId> {
        self.id(token).or_else(|| self.unk())
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn bos(&self) -> Option<TokenId> {
        self.id(BOS)
    }

    pub fn eos(&self) -> Option<TokenId> {
        self.id(EOS)
    }

    pub fn unk(&self) -> Option<TokenId> {
        self.id(UNK)
    }

    pub fn null(&self) -> Option<TokenId> {
        self.id(NULL)
    }

    /// True for `<s>`, `</s>`, `<unk>` and `<null>`.
    pub fn is_special(&self, id: TokenId) -> bool {
        matches!(self.token(id), Some(BOS | EOS | UNK | NULL))
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        let unk = self.unk().unwrap_or(0);
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or(unk))
            .collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .map(|&id| self.token(id).unwrap_or(UNK).to_string())
            .collect()
    }
}

impl TryFrom<Vec<String>> for Vocab {
    type Error = VocabError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        Self::from_tokens(tokens)
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}
