//! Construction definitions in the conll-c format.
//!
//! A construction (cxn) is a small dependency tree whose nodes are
//! constraints on tokens. On disk a cxn is a block of `#` comments (id,
//! name, function, links, free metadata) followed by one 13-column,
//! tab-separated row per node:
//!
//! ```text
//! ID  FORM  LEMMA  UPOS  FEATS  HEAD  DEPREL  REQUIRED  WITHOUT  SEM.FEATS  SEM.ROLES  ADJACENCY  IDENTITY
//! ```
//!
//! Node IDs are uppercase letters, `A*1`, `A*2`, ... for sub-token
//! (morphological) elements of word `A`.

mod parse;
mod validate;
mod write;
mod yaml;

use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::conllu::Token;

pub use parse::{parse_conllc, ParsedCxns};
pub use validate::{validate_cxn, KNOWN_DEPRELS, KNOWN_UPOS, MORPH_DEPRELS};
pub use write::{serialize_conllc, COLUMN_HEADER};
pub use yaml::{load_yaml_entry, to_yaml_entry};

/// UPOS tag for bound morphemes in sub-token nodes.
pub const BMORPH: &str = "BMORPH";

/// Metadata key that turns on deprel matching for cxn-root nodes.
pub const MATCH_ROOT_DEPREL: &str = "match_root_deprel";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ConllcError {
    pub line: usize,
    pub kind: ConllcErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConllcErrorKind {
    #[error("expected 13 tab-separated columns, found {0}")]
    ColumnCount(usize),
    #[error("invalid node id `{0}`")]
    InvalidNodeId(String),
    #[error("duplicate node id {0}")]
    DuplicateNodeId(CxnTokenId),
    #[error("missing cxn-id")]
    MissingCxnId,
    #[error("invalid cxn id `{0}`")]
    InvalidCxnId(String),
    #[error("invalid {column} value `{value}`")]
    InvalidValue { column: &'static str, value: String },
    #[error("invalid regular expression `{pattern}`: {message}")]
    BadRegex { pattern: String, message: String },
    #[error("node {node} has head {target}, which is not declared")]
    UndeclaredHead { node: CxnTokenId, target: CxnTokenId },
    #[error("head cycle through nodes {0}")]
    HeadCycle(String),
    #[error("cxn has no nodes")]
    NoNodes,
    #[error("yaml: {0}")]
    Yaml(String),
    #[error("yaml entry lacks `{0}`")]
    MissingYamlKey(&'static str),
    #[error("{field} mismatch between yaml ({yaml}) and conll-c block ({block})")]
    Mismatch {
        field: String,
        yaml: String,
        block: String,
    },
    #[error("expected exactly one cxn in the conll-c block, found {0}")]
    BlockCount(usize),
}

impl ConllcErrorKind {
    pub(crate) fn at(self, line: usize) -> ConllcError {
        ConllcError { line, kind: self }
    }
}

/// A node ID: a letter, optionally followed by `*k` for the k-th sub-token
/// element of that word. Orders as `A < A*1 < A*2 < B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CxnTokenId {
    letter: u8,
    sub: Option<u32>,
}

impl CxnTokenId {
    pub fn word(letter: char) -> Option<Self> {
        letter
            .is_ascii_uppercase()
            .then_some(CxnTokenId { letter: letter as u8, sub: None })
    }

    pub fn sub(letter: char, index: u32) -> Option<Self> {
        (letter.is_ascii_uppercase() && index > 0).then_some(CxnTokenId {
            letter: letter as u8,
            sub: Some(index),
        })
    }

    pub fn letter(&self) -> char {
        self.letter as char
    }

    pub fn sub_index(&self) -> Option<u32> {
        self.sub
    }

    pub fn is_subtoken(&self) -> bool {
        self.sub.is_some()
    }

    /// The word this ID belongs to (itself for word IDs).
    pub fn word_id(&self) -> CxnTokenId {
        CxnTokenId {
            letter: self.letter,
            sub: None,
        }
    }
}

impl fmt::Display for CxnTokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sub {
            None => write!(f, "{}", self.letter as char),
            Some(k) => write!(f, "{}*{}", self.letter as char, k),
        }
    }
}

impl FromStr for CxnTokenId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid cxn token id `{}`", s);
        let mut chars = s.chars();
        let letter = chars.next().ok_or_else(bad)?;
        let rest = chars.as_str();
        if rest.is_empty() {
            return CxnTokenId::word(letter).ok_or_else(bad);
        }
        let digits = rest.strip_prefix('*').ok_or_else(bad)?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let index = digits.parse().map_err(|_| bad())?;
        CxnTokenId::sub(letter, index).ok_or_else(bad)
    }
}

impl Serialize for CxnTokenId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CxnTokenId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A FORM or LEMMA constraint.
///
/// A value containing any regex metacharacter is a regular expression that
/// must match the whole field; otherwise it is a comma-separated set of
/// literal alternatives.
#[derive(Debug, Clone)]
pub enum Pattern {
    Literals(Vec<String>),
    Regex { source: String, compiled: Regex },
}

const REGEX_META: &[char] = &[
    '.', '^', '$', '*', '+', '?', '(', ')', '[', ']', '{', '}', '|', '\\',
];

impl Pattern {
    pub fn parse(raw: &str) -> Result<Pattern, regex::Error> {
        if raw.contains(REGEX_META) {
            let compiled = Regex::new(&format!("^(?:{})$", raw))?;
            Ok(Pattern::Regex {
                source: raw.to_string(),
                compiled,
            })
        } else {
            Ok(Pattern::Literals(
                raw.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            ))
        }
    }

    pub fn literals(values: &[&str]) -> Pattern {
        Pattern::Literals(values.iter().map(|s| s.to_string()).collect())
    }

    pub fn is_match(&self, value: &str) -> bool {
        match self {
            Pattern::Literals(alts) => alts.iter().any(|a| a == value),
            Pattern::Regex { compiled, .. } => compiled.is_match(value),
        }
    }

    pub fn is_regex(&self) -> bool {
        matches!(self, Pattern::Regex { .. })
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Pattern::Literals(a), Pattern::Literals(b)) => a == b,
            (Pattern::Regex { source: a, .. }, Pattern::Regex { source: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl Eq for Pattern {}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Literals(alts) => f.write_str(&alts.join(",")),
            Pattern::Regex { source, .. } => f.write_str(source),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeadRef {
    /// The node heads its pattern tree (written `0`).
    Root,
    Node(CxnTokenId),
}

impl fmt::Display for HeadRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeadRef::Root => f.write_str("0"),
            HeadRef::Node(id) => id.fmt(f),
        }
    }
}

/// Token columns that WITHOUT and IDENTITY may name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenField {
    Form,
    Lemma,
    Upos,
    Xpos,
    Feats,
    Deprel,
}

impl TokenField {
    pub fn name(&self) -> &'static str {
        match self {
            TokenField::Form => "FORM",
            TokenField::Lemma => "LEMMA",
            TokenField::Upos => "UPOS",
            TokenField::Xpos => "XPOS",
            TokenField::Feats => "FEATS",
            TokenField::Deprel => "DEPREL",
        }
    }

    /// The raw column value of a token.
    pub fn value_of(&self, token: &Token) -> String {
        match self {
            TokenField::Form => token.form.clone(),
            TokenField::Lemma => token.lemma.clone(),
            TokenField::Upos => token.upos.clone(),
            TokenField::Xpos => token.xpos.clone(),
            TokenField::Feats => token.feats.to_string(),
            TokenField::Deprel => token.deprel.clone(),
        }
    }
}

impl fmt::Display for TokenField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TokenField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Ok(match upper.strip_prefix("UD.").unwrap_or(&upper) {
            "FORM" => TokenField::Form,
            "LEMMA" => TokenField::Lemma,
            "UPOS" => TokenField::Upos,
            "XPOS" => TokenField::Xpos,
            "FEATS" => TokenField::Feats,
            "DEPREL" => TokenField::Deprel,
            _ => return Err(format!("unknown field `{}`", s)),
        })
    }
}

/// An entry of the WITHOUT column.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NegativeConstraint {
    /// The token's field must not have this value. For FEATS the value is a
    /// `Key=Value` pair that must be absent.
    Field { field: TokenField, value: String },
    /// No token may depend on this one with the given relation.
    Children { deprel: String },
}

impl fmt::Display for NegativeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegativeConstraint::Field { field, value } => write!(f, "{}={}", field, value),
            NegativeConstraint::Children { deprel } => write!(f, "CHILDREN:DEPREL={}", deprel),
        }
    }
}

/// One row of a conll-c table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeConstraint {
    pub id: CxnTokenId,
    pub form: Option<Pattern>,
    pub lemma: Option<Pattern>,
    pub upos: Vec<String>,
    pub feats: Vec<(String, String)>,
    pub head: HeadRef,
    pub deprel: Vec<String>,
    pub required: bool,
    pub without: Vec<NegativeConstraint>,
    pub sem_feats: Vec<String>,
    pub sem_roles: Vec<String>,
    /// The node that must stand immediately to the left of this one.
    pub adjacency: Option<CxnTokenId>,
    /// `(field, other)`: this node's field equals the other node's field.
    pub identity: Vec<(TokenField, CxnTokenId)>,
}

impl NodeConstraint {
    /// A required node with no constraints at all.
    pub fn unconstrained(id: CxnTokenId, head: HeadRef) -> Self {
        NodeConstraint {
            id,
            form: None,
            lemma: None,
            upos: Vec::new(),
            feats: Vec::new(),
            head,
            deprel: Vec::new(),
            required: true,
            without: Vec::new(),
            sem_feats: Vec::new(),
            sem_roles: Vec::new(),
            adjacency: None,
            identity: Vec::new(),
        }
    }

    pub fn is_subtoken(&self) -> bool {
        self.id.is_subtoken()
    }

    pub fn is_cxn_root(&self) -> bool {
        self.head == HeadRef::Root
    }

    pub fn children_exclusions(&self) -> impl Iterator<Item = &str> {
        self.without.iter().filter_map(|w| match w {
            NegativeConstraint::Children { deprel } => Some(deprel.as_str()),
            NegativeConstraint::Field { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cxn {
    pub cxn_id: u32,
    pub name: String,
    /// Natural-language function; may mention nodes as `ref:<ID>`.
    pub function: String,
    /// Parent cxns.
    pub vertical_links: Vec<u32>,
    /// Sibling cxns.
    pub horizontal_links: Vec<u32>,
    pub extra_metadata: Vec<(String, String)>,
    pub nodes: Vec<NodeConstraint>,
}

impl Cxn {
    pub fn node(&self, id: CxnTokenId) -> Option<&NodeConstraint> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: CxnTokenId) -> Option<&mut NodeConstraint> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn metadata(&self, key: &str) -> Option<&str> {
        self.extra_metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Whether the cxn-root node's DEPREL cell is enforced when matching.
    pub fn match_root_deprel(&self) -> bool {
        self.metadata(MATCH_ROOT_DEPREL)
            .is_some_and(|v| matches!(v.trim(), "true" | "yes" | "1"))
    }

    /// Node IDs referenced as `ref:<ID>` in the function string, in order.
    pub fn function_refs(&self) -> Vec<String> {
        function_refs(&self.function)
    }
}

pub(crate) fn function_refs(function: &str) -> Vec<String> {
    let mut refs = Vec::new();
    let mut rest = function;
    while let Some(pos) = rest.find("ref:") {
        let tail = &rest[pos + 4..];
        let end = tail
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '*'))
            .unwrap_or(tail.len());
        refs.push(tail[..end].to_string());
        rest = &tail[end..];
    }
    refs
}
