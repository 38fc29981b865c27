use std::collections::BTreeMap;

use thiserror::Error;

use crate::conllc::{validate_cxn, Cxn, CxnTokenId, HeadRef, NegativeConstraint, Pattern, TokenField};
use crate::conllu::Token;
use crate::diag::{Diagnostic, Severity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("vacuous pattern: cxn {0} has no required node")]
    VacuousPattern(u32),
    #[error("cxn {cxn_id} is not valid: {}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid {
        cxn_id: u32,
        diagnostics: Vec<Diagnostic>,
    },
}

/// A unary test on a single token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    Form(Pattern),
    Lemma(Pattern),
    Upos(Vec<String>),
    /// Every pair must be among the token's FEATS.
    Feats(Vec<(String, String)>),
    /// The token's field must differ from the value.
    FieldNot(TokenField, String),
    /// The FEATS pair must be absent.
    FeatAbsent(String, String),
    /// No token of the sentence depends on this one with the relation.
    NoChild(String),
    /// Sub-token nodes bind only bound-morpheme tokens.
    BoundMorpheme,
}

impl Predicate {
    pub(crate) fn holds(&self, token: &Token, sentence: &crate::conllu::Sentence) -> bool {
        match self {
            Predicate::Form(p) => p.is_match(&token.form),
            Predicate::Lemma(p) => p.is_match(&token.lemma),
            Predicate::Upos(set) => set.iter().any(|u| *u == token.upos),
            Predicate::Feats(pairs) => pairs.iter().all(|(k, v)| token.feats.contains(k, v)),
            Predicate::FieldNot(field, value) => field.value_of(token) != *value,
            Predicate::FeatAbsent(k, v) => !token.feats.contains(k, v),
            Predicate::NoChild(rel) => !sentence
                .tokens
                .iter()
                .any(|t| t.head == token.index && t.deprel == *rel),
            Predicate::BoundMorpheme => token.upos == crate::conllc::BMORPH,
        }
    }

    /// Short constraint name used in evidence records.
    pub fn name(&self) -> &'static str {
        match self {
            Predicate::Form(_) => "form",
            Predicate::Lemma(_) => "lemma",
            Predicate::Upos(_) => "upos",
            Predicate::Feats(_) => "feats",
            Predicate::FieldNot(..) | Predicate::FeatAbsent(..) | Predicate::NoChild(_) => "without",
            Predicate::BoundMorpheme => "subtoken",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Predicate::Form(p) => format!("FORM ~ {}", p),
            Predicate::Lemma(p) => format!("LEMMA ~ {}", p),
            Predicate::Upos(set) => format!("UPOS in {{{}}}", set.join(",")),
            Predicate::Feats(pairs) => {
                let shown: Vec<String> = pairs.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
                format!("FEATS has {}", shown.join("|"))
            }
            Predicate::FieldNot(f, v) => format!("{} != {}", f, v),
            Predicate::FeatAbsent(k, v) => format!("FEATS lacks {}={}", k, v),
            Predicate::NoChild(rel) => format!("no {} dependent", rel),
            Predicate::BoundMorpheme => "UPOS = BMORPH".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeProgram {
    pub id: CxnTokenId,
    pub required: bool,
    pub predicates: Vec<Predicate>,
}

/// `child` must depend on `parent` with a relation from `deprels` (any
/// relation when empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeProgram {
    pub child: CxnTokenId,
    pub parent: CxnTokenId,
    pub deprels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledPattern {
    pub cxn_id: u32,
    /// Node programs sorted by node ID.
    pub node_programs: Vec<NodeProgram>,
    pub edge_programs: Vec<EdgeProgram>,
    /// Deprel sets enforced on cxn-root nodes (only with `match_root_deprel`).
    pub root_deprels: Vec<(CxnTokenId, Vec<String>)>,
    /// `(node, left neighbour)`.
    pub order_constraints: Vec<(CxnTokenId, CxnTokenId)>,
    /// `(field, node, other)`: the field is equal on both tokens.
    pub identity_constraints: Vec<(TokenField, CxnTokenId, CxnTokenId)>,
    pub required_ids: Vec<CxnTokenId>,
    pub optional_ids: Vec<CxnTokenId>,
    /// Semantic columns carried along but never evaluated.
    pub unchecked: Vec<(CxnTokenId, &'static str, Vec<String>)>,
    pub(crate) slots: BTreeMap<CxnTokenId, usize>,
}

impl CompiledPattern {
    pub fn ids(&self) -> Vec<CxnTokenId> {
        self.node_programs.iter().map(|n| n.id).collect()
    }

    pub(crate) fn slot(&self, id: CxnTokenId) -> usize {
        self.slots[&id]
    }

    pub fn has_subtokens(&self) -> bool {
        self.node_programs.iter().any(|n| n.id.is_subtoken())
    }
}

/// Compiles a cxn into its matching program. The cxn must validate without
/// errors.
pub fn compile(cxn: &Cxn) -> Result<CompiledPattern, CompileError> {
    let errors: Vec<Diagnostic> = validate_cxn(cxn)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.iter().any(|d| d.rule == "no-required-node") {
        return Err(CompileError::VacuousPattern(cxn.cxn_id));
    }
    if !errors.is_empty() {
        return Err(CompileError::Invalid {
            cxn_id: cxn.cxn_id,
            diagnostics: errors,
        });
    }

    let mut nodes: Vec<_> = cxn.nodes.iter().collect();
    nodes.sort_by_key(|n| n.id);

    let mut node_programs = Vec::new();
    let mut edge_programs = Vec::new();
    let mut root_deprels = Vec::new();
    let mut order_constraints = Vec::new();
    let mut identity_constraints = Vec::new();
    let mut unchecked = Vec::new();
    for node in &nodes {
        let mut predicates = Vec::new();
        if node.is_subtoken() {
            predicates.push(Predicate::BoundMorpheme);
        }
        if let Some(p) = &node.form {
            predicates.push(Predicate::Form(p.clone()));
        }
        if let Some(p) = &node.lemma {
            predicates.push(Predicate::Lemma(p.clone()));
        }
        if !node.upos.is_empty() {
            predicates.push(Predicate::Upos(node.upos.clone()));
        }
        if !node.feats.is_empty() {
            predicates.push(Predicate::Feats(node.feats.clone()));
        }
        for w in &node.without {
            predicates.push(match w {
                NegativeConstraint::Children { deprel } => Predicate::NoChild(deprel.clone()),
                NegativeConstraint::Field {
                    field: TokenField::Feats,
                    value,
                } => {
                    let (k, v) = value.split_once('=').unwrap_or((value.as_str(), ""));
                    Predicate::FeatAbsent(k.to_string(), v.to_string())
                }
                NegativeConstraint::Field { field, value } => Predicate::FieldNot(*field, value.clone()),
            });
        }
        node_programs.push(NodeProgram {
            id: node.id,
            required: node.required,
            predicates,
        });
        match node.head {
            HeadRef::Node(parent) => edge_programs.push(EdgeProgram {
                child: node.id,
                parent,
                deprels: node.deprel.clone(),
            }),
            HeadRef::Root if !node.deprel.is_empty() => {
                if cxn.match_root_deprel() {
                    root_deprels.push((node.id, node.deprel.clone()));
                } else {
                    unchecked.push((node.id, "root_deprel", node.deprel.clone()));
                }
            }
            HeadRef::Root => {}
        }
        if let Some(left) = node.adjacency {
            order_constraints.push((node.id, left));
        }
        for (field, other) in &node.identity {
            identity_constraints.push((*field, node.id, *other));
        }
        if !node.sem_feats.is_empty() {
            unchecked.push((node.id, "sem_feats", node.sem_feats.clone()));
        }
        if !node.sem_roles.is_empty() {
            unchecked.push((node.id, "sem_roles", node.sem_roles.clone()));
        }
    }
    let slots = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    Ok(CompiledPattern {
        cxn_id: cxn.cxn_id,
        required_ids: nodes.iter().filter(|n| n.required).map(|n| n.id).collect(),
        optional_ids: nodes.iter().filter(|n| !n.required).map(|n| n.id).collect(),
        node_programs,
        edge_programs,
        root_deprels,
        order_constraints,
        identity_constraints,
        unchecked,
        slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllc::{parse_conllc, NodeConstraint};

    fn id(s: &str) -> CxnTokenId {
        s.parse().unwrap()
    }

    fn saltare_entries() -> Cxn {
        parse_conllc(include_str!("../../tests/fixtures/saltare_entries.conllc"))
            .unwrap()
            .cxns
            .remove(0)
    }

    #[test]
    fn cxn_68_program() {
        let p = compile(&saltare_entries()).unwrap();
        assert_eq!(p.node_programs.len(), 4);
        assert!(p.node_programs[0]
            .predicates
            .contains(&Predicate::NoChild("nsubj".into())));
        let edges: Vec<(String, String, Vec<String>)> = p
            .edge_programs
            .iter()
            .map(|e| (e.child.to_string(), e.parent.to_string(), e.deprels.clone()))
            .collect();
        assert_eq!(
            edges,
            vec![
                ("B".to_string(), "A".to_string(), vec!["advmod".to_string()]),
                ("C".to_string(), "D".to_string(), vec!["mark".to_string()]),
                ("D".to_string(), "A".to_string(), vec!["csubj".to_string()]),
            ]
        );
        assert!(p.order_constraints.is_empty());
        assert!(p.identity_constraints.is_empty());
        assert!(p.root_deprels.is_empty());
        assert_eq!(p.required_ids.len(), 4);
        assert_eq!(
            p.unchecked,
            vec![
                (id("A"), "root_deprel", vec!["root".to_string()]),
                (id("D"), "sem_roles", vec!["Eventuality".to_string()]),
            ]
        );
    }

    #[test]
    fn deterministic() {
        assert_eq!(compile(&saltare_entries()).unwrap(), compile(&saltare_entries()).unwrap());
    }

    fn single(node: NodeConstraint) -> Cxn {
        Cxn {
            cxn_id: 1,
            name: String::new(),
            function: String::new(),
            vertical_links: vec![],
            horizontal_links: vec![],
            extra_metadata: vec![],
            nodes: vec![node],
        }
    }

    #[test]
    fn unconstrained_node() {
        let p = compile(&single(NodeConstraint::unconstrained(id("A"), HeadRef::Root))).unwrap();
        assert_eq!(p.node_programs.len(), 1);
        assert!(p.node_programs[0].predicates.is_empty());
    }

    #[test]
    fn vacuous_pattern() {
        let mut n = NodeConstraint::unconstrained(id("A"), HeadRef::Root);
        n.required = false;
        assert_eq!(compile(&single(n)), Err(CompileError::VacuousPattern(1)));
    }

    #[test]
    fn identity_transcription() {
        let mut cxn = saltare_entries();
        cxn.node_mut(id("C")).unwrap().identity = vec![(TokenField::Form, id("A"))];
        let p = compile(&cxn).unwrap();
        assert_eq!(p.identity_constraints, vec![(TokenField::Form, id("C"), id("A"))]);
    }

    #[test]
    fn root_deprel_flag() {
        let mut cxn = saltare_entries();
        cxn.extra_metadata.push(("match_root_deprel".into(), "true".into()));
        let p = compile(&cxn).unwrap();
        assert_eq!(p.root_deprels, vec![(id("A"), vec!["root".to_string()])]);
    }
}
