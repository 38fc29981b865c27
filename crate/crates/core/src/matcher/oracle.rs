use thiserror::Error;

use super::{binding_satisfies, check_binding, keep_maximal, sorted_ids, Binding, Match};
use crate::conllc::Cxn;
use crate::conllu::Sentence;

pub const ORACLE_MAX_NODES: usize = 6;
pub const ORACLE_MAX_TOKENS: usize = 25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("instance too large for exhaustive enumeration: {nodes} nodes, {tokens} tokens")]
pub struct OracleError {
    pub nodes: usize,
    pub tokens: usize,
}

/// Exhaustive reference matcher: tries every injective assignment of tokens
/// to node subsets that contain all required nodes, keeps the ones that
/// satisfy [`check_binding`], then the maximal ones.
pub fn oracle_match(cxn: &Cxn, sentence: &Sentence) -> Result<Vec<Match>, OracleError> {
    if cxn.nodes.len() > ORACLE_MAX_NODES || sentence.len() > ORACLE_MAX_TOKENS {
        return Err(OracleError {
            nodes: cxn.nodes.len(),
            tokens: sentence.len(),
        });
    }
    let ids = sorted_ids(cxn);
    let required: Vec<bool> = ids
        .iter()
        .map(|id| cxn.node(*id).is_some_and(|n| n.required))
        .collect();

    let mut valid = Vec::new();
    let mut current = Binding::new();
    let mut used = vec![false; sentence.len() + 1];
    enumerate(cxn, sentence, &ids, &required, 0, &mut current, &mut used, &mut valid);

    let mut kept = keep_maximal(valid);
    kept.sort_by_key(|b| super::binding_order_key(&ids, b));
    Ok(kept
        .into_iter()
        .map(|binding| Match {
            cxn_id: cxn.cxn_id,
            sent_id: sentence.sent_id().unwrap_or_default().to_string(),
            source: sentence.source().map(String::from),
            evidence: check_binding(cxn, sentence, &binding),
            binding,
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    cxn: &Cxn,
    sentence: &Sentence,
    ids: &[crate::conllc::CxnTokenId],
    required: &[bool],
    depth: usize,
    current: &mut Binding,
    used: &mut Vec<bool>,
    out: &mut Vec<Binding>,
) {
    if depth == ids.len() {
        if binding_satisfies(cxn, sentence, current) {
            out.push(current.clone());
        }
        return;
    }
    if !required[depth] {
        enumerate(cxn, sentence, ids, required, depth + 1, current, used, out);
    }
    for t in 1..=sentence.len() {
        if used[t] {
            continue;
        }
        used[t] = true;
        current.insert(ids[depth], t);
        enumerate(cxn, sentence, ids, required, depth + 1, current, used, out);
        current.remove(&ids[depth]);
        used[t] = false;
    }
}
