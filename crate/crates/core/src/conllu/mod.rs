//! CoNLL-U sentences with construction marks.
//!
//! Tokens carry the ten standard columns. Construction marks live in MISC as
//! `CXN=<cxn_id>:<label>` items; they are parsed into [`CxnMark`] values but
//! keep their position among the other MISC items so that a file
//! round-trips unchanged.
//!
//! Multiword-token ranges (`1-2`) and empty nodes (`1.1`) are kept as opaque
//! lines. They are written back where they were read and are otherwise
//! invisible: token indices always run 1..=n over syntactic words.

mod read;
mod write;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::conllc::CxnTokenId;

pub use read::{parse_conllu, parse_sentence_block, Parsed, ParsedSentence, SentenceReader};
pub use write::{serialize_conllu, serialize_sentence};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ConlluError {
    pub line: usize,
    pub kind: ConlluErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConlluErrorKind {
    #[error("expected 10 tab-separated columns, found {0}")]
    ColumnCount(usize),
    #[error("invalid token id `{0}`")]
    InvalidId(String),
    #[error("duplicate token index {0}")]
    DuplicateIndex(usize),
    #[error("token index {found} out of sequence, expected {expected}")]
    OutOfSequence { expected: usize, found: usize },
    #[error("invalid head `{0}`")]
    InvalidHead(String),
    #[error("invalid FEATS item `{0}`")]
    InvalidFeature(String),
    #[error("duplicate FEATS key `{0}`")]
    DuplicateFeature(String),
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("I/O error: {0}")]
    Io(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("token index {index} out of range 1..={len}")]
pub struct IndexError {
    pub index: usize,
    pub len: usize,
}

/// One construction mark, `CXN=<cxn_id>:<label>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CxnMark {
    pub cxn_id: u32,
    pub label: CxnTokenId,
}

impl CxnMark {
    pub fn new(cxn_id: u32, label: CxnTokenId) -> Self {
        CxnMark { cxn_id, label }
    }
}

impl fmt::Display for CxnMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CXN={}:{}", self.cxn_id, self.label)
    }
}

impl FromStr for CxnMark {
    type Err = String;

    /// Parses the full MISC item, including the `CXN=` prefix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value = s
            .strip_prefix("CXN=")
            .ok_or_else(|| format!("`{}` is not a CXN item", s))?;
        let (id, label) = value
            .split_once(':')
            .ok_or_else(|| format!("`{}` lacks `:` between cxn id and label", s))?;
        let cxn_id: u32 = id
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("`{}` has invalid cxn id `{}`", s, id))?;
        let label = label.parse().map_err(|e| format!("`{}`: {}", s, e))?;
        Ok(CxnMark { cxn_id, label })
    }
}

/// A MISC item. Anything that is not a well-formed construction mark is kept
/// verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MiscItem {
    Cxn(CxnMark),
    Other(String),
}

impl fmt::Display for MiscItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MiscItem::Cxn(mark) => mark.fmt(f),
            MiscItem::Other(raw) => f.write_str(raw),
        }
    }
}

/// FEATS as key/value pairs, kept sorted case-insensitively by key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Features(Vec<(String, String)>);

impl Features {
    pub fn new() -> Self {
        Features(Vec::new())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn contains(&self, key: &str, value: &str) -> bool {
        self.get(key) == Some(value)
    }

    /// Inserts or replaces a feature, keeping the canonical order.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => {
                self.0.push((key, value));
                self.0.sort_by_key(|(k, _)| k.to_lowercase());
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}={}", k, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    /// 1-based position among syntactic words.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Features,
    /// 0 marks the sentence root.
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: Vec<MiscItem>,
}

impl Token {
    /// A token with every column unspecified except the ones given.
    pub fn new(index: usize, form: &str, lemma: &str, upos: &str, head: usize, deprel: &str) -> Self {
        Token {
            index,
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            xpos: "_".to_string(),
            feats: Features::new(),
            head,
            deprel: deprel.to_string(),
            deps: "_".to_string(),
            misc: Vec::new(),
        }
    }

    pub fn cxn_marks(&self) -> impl Iterator<Item = &CxnMark> {
        self.misc.iter().filter_map(|item| match item {
            MiscItem::Cxn(mark) => Some(mark),
            MiscItem::Other(_) => None,
        })
    }

    pub fn has_mark(&self, mark: &CxnMark) -> bool {
        self.cxn_marks().any(|m| m == mark)
    }

    /// Appends a mark unless an identical one is already present.
    /// Returns whether the mark was added.
    pub fn add_mark(&mut self, mark: CxnMark) -> bool {
        if self.has_mark(&mark) {
            return false;
        }
        self.misc.push(MiscItem::Cxn(mark));
        true
    }

    /// Removes every mark of the given construction, returning how many went.
    pub fn remove_marks_of(&mut self, cxn_id: u32) -> usize {
        let before = self.misc.len();
        self.misc
            .retain(|item| !matches!(item, MiscItem::Cxn(m) if m.cxn_id == cxn_id));
        before - self.misc.len()
    }

    /// Looks up a MISC `key=value` item that is not a construction mark.
    pub fn misc_value(&self, key: &str) -> Option<&str> {
        self.misc.iter().find_map(|item| match item {
            MiscItem::Other(raw) => raw
                .split_once('=')
                .filter(|(k, _)| *k == key)
                .map(|(_, v)| v),
            MiscItem::Cxn(_) => None,
        })
    }

    pub fn space_after(&self) -> bool {
        self.misc_value("SpaceAfter") != Some("No")
    }
}

/// A `#` comment line.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Meta {
    Pair { key: String, value: String },
    Bare(String),
}

/// A multiword-token range or empty-node line, preserved verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpaqueLine {
    /// Number of syntactic words that precede this line.
    pub after_tokens: usize,
    pub line: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub metadata: Vec<Meta>,
    pub tokens: Vec<Token>,
    pub opaque: Vec<OpaqueLine>,
}

/// Why a sentence is not a rooted tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeProblem {
    NoRoot,
    MultipleRoots(Vec<usize>),
    DanglingHead { token: usize, head: usize },
    Cycle(Vec<usize>),
}

impl fmt::Display for TreeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeProblem::NoRoot => f.write_str("no token has head 0"),
            TreeProblem::MultipleRoots(roots) => write!(f, "several tokens have head 0: {:?}", roots),
            TreeProblem::DanglingHead { token, head } => {
                write!(f, "token {} has head {} which does not exist", token, head)
            }
            TreeProblem::Cycle(nodes) => write!(f, "head cycle through tokens {:?}", nodes),
        }
    }
}

impl Sentence {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find_map(|m| match m {
            Meta::Pair { key: k, value } if k == key => Some(value.as_str()),
            _ => None,
        })
    }

    /// Sets a metadata value in place, or appends it when absent.
    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        for m in &mut self.metadata {
            if let Meta::Pair { key: k, value: v } = m {
                if k == key {
                    *v = value;
                    return;
                }
            }
        }
        self.metadata.push(Meta::Pair {
            key: key.to_string(),
            value,
        });
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.meta("sent_id")
    }

    pub fn source(&self) -> Option<&str> {
        self.meta("source")
    }

    pub fn text(&self) -> Option<&str> {
        self.meta("text")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn token_mut(&mut self, index: usize) -> Option<&mut Token> {
        index.checked_sub(1).and_then(move |i| self.tokens.get_mut(i))
    }

    /// Indices of the tokens whose head is `index`.
    pub fn dependents(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.tokens
            .iter()
            .filter(move |t| t.head == index)
            .map(|t| t.index)
    }

    /// Checks that heads form a single rooted tree over the tokens.
    pub fn tree_problem(&self) -> Option<TreeProblem> {
        let n = self.tokens.len();
        for t in &self.tokens {
            if t.head > n {
                return Some(TreeProblem::DanglingHead {
                    token: t.index,
                    head: t.head,
                });
            }
        }
        let roots: Vec<usize> = self.dependents(0).collect();
        match roots.len() {
            0 if n > 0 => return Some(TreeProblem::NoRoot),
            0 | 1 => {}
            _ => return Some(TreeProblem::MultipleRoots(roots)),
        }
        // 0 = unvisited, 1 = on the current path, 2 = known to reach the root.
        let mut state = vec![0u8; n + 1];
        state[0] = 2;
        for start in 1..=n {
            let mut path = Vec::new();
            let mut cur = start;
            while state[cur] == 0 {
                state[cur] = 1;
                path.push(cur);
                cur = self.tokens[cur - 1].head;
            }
            if state[cur] == 1 {
                let pos = path.iter().position(|&p| p == cur).unwrap_or(0);
                return Some(TreeProblem::Cycle(path[pos..].to_vec()));
            }
            for p in path {
                state[p] = 2;
            }
        }
        None
    }

    pub fn is_tree_valid(&self) -> bool {
        self.tree_problem().is_none()
    }

    /// True if the sentence carries sub-token (bound morpheme) analyses.
    pub fn has_subtokens(&self) -> bool {
        self.tokens.iter().any(|t| t.upos == crate::conllc::BMORPH)
    }

    /// Surface text of the sentence and the character span of each token in
    /// it. Uses `# text` when the forms can be located in it, otherwise
    /// rebuilds the text from the forms and `SpaceAfter=No`.
    pub fn token_spans(&self) -> (String, Vec<(usize, usize)>) {
        if let Some(text) = self.text() {
            if let Some(spans) = locate_forms(text, &self.tokens) {
                return (text.to_string(), spans);
            }
        }
        let mut text = String::new();
        let mut spans = Vec::with_capacity(self.tokens.len());
        let mut pos = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            let len = t.form.chars().count();
            spans.push((pos, pos + len));
            text.push_str(&t.form);
            pos += len;
            if t.space_after() && i + 1 < self.tokens.len() {
                text.push(' ');
                pos += 1;
            }
        }
        (text, spans)
    }
}

fn locate_forms(text: &str, tokens: &[Token]) -> Option<Vec<(usize, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::with_capacity(tokens.len());
    let mut cursor = 0;
    for t in tokens {
        let form: Vec<char> = t.form.chars().collect();
        if form.is_empty() {
            return None;
        }
        let start = (cursor..=chars.len().saturating_sub(form.len()))
            .find(|&s| chars[s..s + form.len()] == form[..])?;
        spans.push((start, start + form.len()));
        cursor = start + form.len();
    }
    Some(spans)
}

/// The index of the token immediately to the left of `index`, if any.
pub fn linear_left_neighbor(sentence: &Sentence, index: usize) -> Result<Option<usize>, IndexError> {
    if index == 0 || index > sentence.len() {
        return Err(IndexError {
            index,
            len: sentence.len(),
        });
    }
    Ok(if index > 1 { Some(index - 1) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(heads: &[usize]) -> Sentence {
        Sentence {
            tokens: heads
                .iter()
                .enumerate()
                .map(|(i, &h)| Token::new(i + 1, "w", "w", "X", h, "dep"))
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn tree_problems() {
        assert_eq!(chain(&[0, 1, 2]).tree_problem(), None);
        assert_eq!(chain(&[2, 1]).tree_problem(), Some(TreeProblem::NoRoot));
        assert_eq!(
            chain(&[0, 0]).tree_problem(),
            Some(TreeProblem::MultipleRoots(vec![1, 2]))
        );
        assert_eq!(
            chain(&[0, 5]).tree_problem(),
            Some(TreeProblem::DanglingHead { token: 2, head: 5 })
        );
        assert_eq!(
            chain(&[0, 3, 2]).tree_problem(),
            Some(TreeProblem::Cycle(vec![2, 3]))
        );
        assert_eq!(
            chain(&[0, 2]).tree_problem(),
            Some(TreeProblem::Cycle(vec![2]))
        );
    }

    #[test]
    fn left_neighbor() {
        let s = chain(&[0; 1].iter().chain([1; 16].iter()).copied().collect::<Vec<_>>());
        assert_eq!(s.len(), 17);
        assert_eq!(linear_left_neighbor(&s, 1), Ok(None));
        assert_eq!(linear_left_neighbor(&s, 10), Ok(Some(9)));
        assert_eq!(linear_left_neighbor(&s, 17), Ok(Some(16)));
        assert!(linear_left_neighbor(&s, 0).is_err());
        assert!(linear_left_neighbor(&s, 18).is_err());
    }

    #[test]
    fn cxn_mark_syntax() {
        let m: CxnMark = "CXN=68:A".parse().unwrap();
        assert_eq!(m.cxn_id, 68);
        assert_eq!(m.to_string(), "CXN=68:A");
        assert_eq!("CXN=7:A*2".parse::<CxnMark>().unwrap().to_string(), "CXN=7:A*2");
        for bad in ["CXN=68", "CXN=x:A", "CXN=0:A", "CXN=68:a", "CXN=68:A*0", "CXN=68:AB"] {
            assert!(bad.parse::<CxnMark>().is_err(), "{}", bad);
        }
    }

    #[test]
    fn marks_keep_insertion_order() {
        let mut t = Token::new(1, "x", "x", "X", 0, "root");
        t.misc.push(MiscItem::Other("SpaceAfter=No".into()));
        assert!(t.add_mark(CxnMark::new(345, "A".parse().unwrap())));
        assert!(t.add_mark(CxnMark::new(68, "A".parse().unwrap())));
        assert!(!t.add_mark(CxnMark::new(68, "A".parse().unwrap())));
        let misc: Vec<String> = t.misc.iter().map(|m| m.to_string()).collect();
        assert_eq!(misc, ["SpaceAfter=No", "CXN=345:A", "CXN=68:A"]);
        assert!(!t.space_after());
        assert_eq!(t.remove_marks_of(68), 1);
    }

    #[test]
    fn features_sorted_case_insensitively() {
        let mut f = Features::new();
        f.insert("Tense", "Pres");
        f.insert("abbr", "Yes");
        f.insert("Number", "Sing");
        assert_eq!(f.to_string(), "abbr=Yes|Number=Sing|Tense=Pres");
        assert_eq!(Features::new().to_string(), "_");
    }

    #[test]
    fn spans_from_text_and_reconstruction() {
        let mut s = chain(&[0, 1, 1]);
        for (t, form) in s.tokens.iter_mut().zip(["Ciao", ",", "mondo"]) {
            t.form = form.to_string();
        }
        s.tokens[0].misc.push(MiscItem::Other("SpaceAfter=No".into()));
        let (text, spans) = s.token_spans();
        assert_eq!(text, "Ciao, mondo");
        assert_eq!(spans, vec![(0, 4), (4, 5), (6, 11)]);

        s.set_meta("text", "Ciao ,  mondo");
        let (text, spans) = s.token_spans();
        assert_eq!(text, "Ciao ,  mondo");
        assert_eq!(spans, vec![(0, 4), (5, 6), (8, 13)]);
    }
}
