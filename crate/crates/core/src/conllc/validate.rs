use std::collections::{BTreeMap, BTreeSet};

use super::parse::find_head_cycle;
use super::{Cxn, CxnTokenId, HeadRef, BMORPH};
use crate::diag::Diagnostic;

pub const KNOWN_UPOS: &[&str] = &[
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X", BMORPH,
];

/// Universal relations; language-specific subtypes (`flat:name`) are
/// accepted through their base relation.
pub const KNOWN_DEPRELS: &[&str] = &[
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp", "clf", "compound",
    "conj", "cop", "csubj", "dep", "det", "discourse", "dislocated", "expl", "fixed", "flat",
    "goeswith", "iobj", "list", "mark", "nmod", "nsubj", "nummod", "obj", "obl", "orphan",
    "parataxis", "punct", "reparandum", "root", "vocative", "xcomp",
];

/// Relations between sub-token elements.
pub const MORPH_DEPRELS: &[&str] = &["root/m", "der/m", "case/m", "mod/m", "conj/m"];

fn known_deprel(label: &str) -> bool {
    MORPH_DEPRELS.contains(&label)
        || KNOWN_DEPRELS.contains(&label.split(':').next().unwrap_or(label))
}

/// Warnings for UPOS/DEPREL labels outside the known inventories.
pub(crate) fn label_warnings(cxn: &Cxn) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for node in &cxn.nodes {
        for upos in node.upos.iter().filter(|u| !KNOWN_UPOS.contains(&u.as_str())) {
            out.push(
                Diagnostic::warning("unknown-upos", format!("UPOS `{}` is not a known tag", upos))
                    .with_subject(node.id.to_string()),
            );
        }
        for rel in node.deprel.iter().filter(|d| !known_deprel(d)) {
            out.push(
                Diagnostic::warning("unknown-deprel", format!("DEPREL `{}` is not a known relation", rel))
                    .with_subject(node.id.to_string()),
            );
        }
    }
    out
}

/// Checks every structural rule of a cxn. The result is empty exactly when
/// the cxn is well formed.
pub fn validate_cxn(cxn: &Cxn) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let err = |rule: &str, id: CxnTokenId, msg: String| {
        Diagnostic::error(rule, msg).with_subject(id.to_string())
    };

    if cxn.nodes.is_empty() {
        out.push(Diagnostic::error("no-nodes", "cxn declares no nodes"));
        return out;
    }

    let mut declared = BTreeSet::new();
    for node in &cxn.nodes {
        if !declared.insert(node.id) {
            out.push(err("duplicate-id", node.id, format!("node {} is declared twice", node.id)));
        }
    }
    let by_id: BTreeMap<CxnTokenId, &super::NodeConstraint> =
        cxn.nodes.iter().map(|n| (n.id, n)).collect();

    for node in &cxn.nodes {
        let id = node.id;
        match node.head {
            HeadRef::Node(h) if h == id => {
                out.push(err("self-head", id, format!("node {} is its own head", id)))
            }
            HeadRef::Node(h) if !declared.contains(&h) => out.push(err(
                "undeclared-head",
                id,
                format!("head {} is not declared", h),
            )),
            HeadRef::Node(h) => {
                if node.required && !by_id[&h].required {
                    out.push(err(
                        "required-under-optional",
                        id,
                        format!("required node {} depends on optional node {}", id, h),
                    ));
                }
            }
            HeadRef::Root => {}
        }
        if let Some(adj) = node.adjacency {
            if adj == id {
                out.push(err("self-adjacency", id, format!("node {} is its own left neighbour", id)));
            } else if !declared.contains(&adj) {
                out.push(err(
                    "undeclared-adjacency",
                    id,
                    format!("ADJACENCY names undeclared node {}", adj),
                ));
            }
        }
        for (field, other) in &node.identity {
            if *other == id {
                out.push(err("self-identity", id, format!("IDENTITY {}={} names the node itself", field, other)));
            } else if !declared.contains(other) {
                out.push(err(
                    "undeclared-identity",
                    id,
                    format!("IDENTITY names undeclared node {}", other),
                ));
            }
        }
        if node.is_subtoken() {
            check_subtoken(node, &by_id, &mut out);
        }
    }

    let heads: BTreeMap<CxnTokenId, HeadRef> = cxn
        .nodes
        .iter()
        .filter(|n| n.head != HeadRef::Node(n.id))
        .map(|n| (n.id, n.head))
        .collect();
    if let Some(cycle) = find_head_cycle(&heads) {
        let shown: Vec<String> = cycle.iter().map(|c| c.to_string()).collect();
        out.push(err("head-cycle", cycle[0], format!("head cycle {}", shown.join(" -> "))));
    }

    if !cxn.nodes.iter().any(|n| n.required) {
        out.push(Diagnostic::error("no-required-node", "every node is optional"));
    }

    for r in cxn.function_refs() {
        let resolved = r
            .parse::<CxnTokenId>()
            .map(|id| declared.contains(&id))
            .unwrap_or(false);
        if !resolved {
            out.push(
                Diagnostic::error(
                    "unresolved-function-ref",
                    format!("function refers to ref:{}, which is not a declared node", r),
                )
                .with_subject(r),
            );
        }
    }

    out.extend(label_warnings(cxn));
    out
}

fn check_subtoken(
    node: &super::NodeConstraint,
    by_id: &BTreeMap<CxnTokenId, &super::NodeConstraint>,
    out: &mut Vec<Diagnostic>,
) {
    let id = node.id;
    let word = id.word_id();
    if !by_id.contains_key(&word) {
        out.push(
            Diagnostic::error("subtoken-orphan", format!("sub-token {} has no word node {}", id, word))
                .with_subject(id.to_string()),
        );
    }
    match node.head {
        HeadRef::Node(h) if h.word_id() == word => {}
        _ => out.push(
            Diagnostic::error(
                "subtoken-head",
                format!("sub-token {} must depend on word {} or one of its elements", id, word),
            )
            .with_subject(id.to_string()),
        ),
    }
    if node.deprel.iter().any(|d| !MORPH_DEPRELS.contains(&d.as_str())) {
        out.push(
            Diagnostic::error("subtoken-relation", format!("sub-token {} uses a non-morphological relation", id))
                .with_subject(id.to_string()),
        );
    }
    if node.upos.iter().any(|u| u != BMORPH) {
        out.push(
            Diagnostic::warning("subtoken-upos", format!("sub-token {} should have UPOS {}", id, BMORPH))
                .with_subject(id.to_string()),
        );
    }
}
