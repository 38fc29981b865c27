//! Finding constructs: bindings of cxn nodes to sentence tokens.
//!
//! A binding must cover every required node, may cover optional nodes, is
//! injective, and satisfies every node, edge, adjacency and identity
//! constraint among the bound nodes. Only maximal bindings are reported:
//! ones that cannot be extended to a further optional node.
//!
//! Two routes compute the same thing. [`match_sentence`] runs a compiled
//! program with a backtracking search; [`oracle_match`] enumerates every
//! assignment and filters with [`check_binding`], which reads the
//! constraints straight off the [`Cxn`]. Tests hold the two against each
//! other.

mod compile;
mod evidence;
mod oracle;
mod search;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conllc::{Cxn, CxnTokenId};

pub use compile::{compile, CompileError, CompiledPattern, EdgeProgram, NodeProgram, Predicate};
pub use evidence::{binding_satisfies, check_binding};
pub use oracle::{oracle_match, OracleError, ORACLE_MAX_NODES, ORACLE_MAX_TOKENS};
pub use search::{match_corpus, match_corpus_parallel, match_sentence, CorpusMatches};

/// Node ID → 1-based token index.
pub type Binding = BTreeMap<CxnTokenId, usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Satisfied,
    Failed,
    /// The constraint names a node that is not bound.
    Vacuous,
    /// Recorded but never evaluated (semantic columns).
    Unchecked,
}

/// The outcome of one constraint on one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub node: CxnTokenId,
    /// Constraint name: `form`, `lemma`, `upos`, `feats`, `without`, `head`,
    /// `deprel`, `adjacency`, `identity`, `subtoken`, `bound`, `sem_feats`...
    pub constraint: String,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub(crate) fn new(node: CxnTokenId, constraint: &str, status: CheckStatus, detail: String) -> Self {
        Check {
            node,
            constraint: constraint.to_string(),
            status,
            detail,
        }
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Failed
    }
}

/// One construct found in a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub cxn_id: u32,
    pub sent_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub binding: Binding,
    pub evidence: Vec<Check>,
}

impl Match {
    pub fn record(&self) -> MatchRecord {
        MatchRecord {
            cxn_id: self.cxn_id,
            sent_id: self.sent_id.clone(),
            source: self.source.clone(),
            binding: self.binding.clone(),
        }
    }
}

/// A line of the match report: `{cxn_id, sent_id, source, binding}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchRecord {
    pub cxn_id: u32,
    pub sent_id: String,
    #[serde(default)]
    pub source: Option<String>,
    pub binding: Binding,
}

impl MatchRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("match record serializes")
    }
}

/// Parses a line-delimited JSON match report, skipping blank lines.
pub fn read_match_report(text: &str) -> Result<Vec<MatchRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Orders bindings by the token bound to the first node, then the second,
/// and so on; unbound sorts before bound.
pub(crate) fn binding_order_key(cxn_ids: &[CxnTokenId], b: &Binding) -> Vec<Option<usize>> {
    cxn_ids.iter().map(|id| b.get(id).copied()).collect()
}

/// Keeps the bindings that no other binding strictly extends.
pub(crate) fn keep_maximal(bindings: Vec<Binding>) -> Vec<Binding> {
    let extends = |big: &Binding, small: &Binding| {
        big.len() > small.len() && small.iter().all(|(k, v)| big.get(k) == Some(v))
    };
    bindings
        .iter()
        .filter(|b| !bindings.iter().any(|other| extends(other, b)))
        .cloned()
        .collect()
}

pub(crate) fn sorted_ids(cxn: &Cxn) -> Vec<CxnTokenId> {
    let mut ids: Vec<CxnTokenId> = cxn.nodes.iter().map(|n| n.id).collect();
    ids.sort();
    ids
}
