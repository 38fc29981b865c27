//! Direct evaluation of a binding against the cxn's own constraint rows.
//!
//! Nothing here goes through [`super::CompiledPattern`]: this is the
//! reference reading of the columns used by the oracle, by soundness tests
//! and by annotation re-validation.

use std::collections::BTreeSet;

use super::{Binding, Check, CheckStatus};
use crate::conllc::{Cxn, HeadRef, NegativeConstraint, TokenField, BMORPH};
use crate::conllu::{Sentence, Token};

struct Recorder {
    checks: Vec<Check>,
    /// Stop at the first failure and skip detail strings.
    fast: bool,
    failed: bool,
}

impl Recorder {
    /// Records one outcome; returns false when evaluation should stop.
    fn record(&mut self, node: crate::conllc::CxnTokenId, constraint: &str, ok: bool, detail: impl FnOnce() -> String) -> bool {
        if ok {
            // Details describe the failure, so satisfied checks carry none.
            if !self.fast {
                self.checks.push(Check::new(node, constraint, CheckStatus::Satisfied, String::new()));
            }
            return true;
        }
        self.failed = true;
        self.checks.push(Check::new(node, constraint, CheckStatus::Failed, detail()));
        !self.fast
    }

    fn note(&mut self, node: crate::conllc::CxnTokenId, constraint: &str, status: CheckStatus, detail: String) {
        if !self.fast {
            self.checks.push(Check::new(node, constraint, status, detail));
        }
    }
}

fn in_set(values: &[String], v: &str) -> bool {
    values.iter().any(|x| x == v)
}

fn token_field(token: &Token, field: TokenField) -> String {
    field.value_of(token)
}

/// Evaluates every constraint of `cxn` under `binding` and returns one
/// check per constraint, failures included.
pub fn check_binding(cxn: &Cxn, sentence: &Sentence, binding: &Binding) -> Vec<Check> {
    let mut r = Recorder {
        checks: Vec::new(),
        fast: false,
        failed: false,
    };
    evaluate(cxn, sentence, binding, &mut r);
    r.checks
}

/// True when `binding` satisfies every constraint of `cxn`.
pub fn binding_satisfies(cxn: &Cxn, sentence: &Sentence, binding: &Binding) -> bool {
    let mut r = Recorder {
        checks: Vec::new(),
        fast: true,
        failed: false,
    };
    evaluate(cxn, sentence, binding, &mut r);
    !r.failed
}

fn evaluate(cxn: &Cxn, sentence: &Sentence, binding: &Binding, r: &mut Recorder) {
    // Shape of the binding itself.
    for (&id, &index) in binding {
        let declared = cxn.node(id).is_some();
        if !r.record(id, "declared", declared, || format!("{} is not a node of cxn {}", id, cxn.cxn_id)) {
            return;
        }
        let in_range = index >= 1 && index <= sentence.len();
        if !r.record(id, "token", in_range, || format!("token {} out of range", index)) {
            return;
        }
    }
    if r.failed {
        return;
    }
    let mut seen = BTreeSet::new();
    for (&id, &index) in binding {
        if !r.record(id, "injective", seen.insert(index), || format!("token {} bound twice", index)) {
            return;
        }
    }

    let tok = |id| binding.get(&id).map(|&i| &sentence.tokens[i - 1]);
    for node in &cxn.nodes {
        let id = node.id;
        let Some(t) = tok(id) else {
            if node.required {
                if !r.record(id, "bound", false, || format!("required node {} is not bound", id)) {
                    return;
                }
            } else {
                r.note(id, "bound", CheckStatus::Vacuous, "optional node unbound".into());
            }
            continue;
        };

        if id.is_subtoken() && !r.record(id, "subtoken", t.upos == BMORPH, || format!("UPOS {} is not {}", t.upos, BMORPH)) {
            return;
        }
        if let Some(p) = &node.form {
            if !r.record(id, "form", p.is_match(&t.form), || format!("FORM {} vs {}", t.form, p)) {
                return;
            }
        }
        if let Some(p) = &node.lemma {
            if !r.record(id, "lemma", p.is_match(&t.lemma), || format!("LEMMA {} vs {}", t.lemma, p)) {
                return;
            }
        }
        if !node.upos.is_empty()
            && !r.record(id, "upos", in_set(&node.upos, &t.upos), || {
                format!("UPOS {} not in {{{}}}", t.upos, node.upos.join(","))
            })
        {
            return;
        }
        for (k, v) in &node.feats {
            if !r.record(id, "feats", t.feats.get(k) == Some(v.as_str()), || format!("FEATS lacks {}={}", k, v)) {
                return;
            }
        }
        for w in &node.without {
            let ok = match w {
                NegativeConstraint::Children { deprel } => !sentence
                    .tokens
                    .iter()
                    .any(|c| c.head == t.index && c.deprel == *deprel),
                NegativeConstraint::Field { field: TokenField::Feats, value } => {
                    let (k, v) = value.split_once('=').unwrap_or((value, ""));
                    t.feats.get(k) != Some(v)
                }
                NegativeConstraint::Field { field, value } => token_field(t, *field) != *value,
            };
            if !r.record(id, "without", ok, || format!("excluded {}", w)) {
                return;
            }
        }

        match node.head {
            HeadRef::Node(parent_id) => match tok(parent_id) {
                Some(parent) => {
                    if !r.record(id, "head", t.head == parent.index, || {
                        format!("head of token {} is {}, not {} ({})", t.index, t.head, parent.index, parent_id)
                    }) {
                        return;
                    }
                    if !node.deprel.is_empty()
                        && !r.record(id, "deprel", in_set(&node.deprel, &t.deprel), || {
                            format!("DEPREL {} not in {{{}}}", t.deprel, node.deprel.join(","))
                        })
                    {
                        return;
                    }
                }
                None => {
                    if !r.record(id, "head", false, || format!("head node {} is not bound", parent_id)) {
                        return;
                    }
                }
            },
            HeadRef::Root => {
                if !node.deprel.is_empty() {
                    if cxn.match_root_deprel() {
                        if !r.record(id, "deprel", in_set(&node.deprel, &t.deprel), || {
                            format!("DEPREL {} not in {{{}}}", t.deprel, node.deprel.join(","))
                        }) {
                            return;
                        }
                    } else {
                        r.note(id, "root_deprel", CheckStatus::Unchecked, node.deprel.join(","));
                    }
                }
            }
        }

        if let Some(left) = node.adjacency {
            match binding.get(&left) {
                Some(&l) => {
                    if !r.record(id, "adjacency", t.index == l + 1, || {
                        format!("token {} does not follow token {} ({})", t.index, l, left)
                    }) {
                        return;
                    }
                }
                None => r.note(id, "adjacency", CheckStatus::Vacuous, format!("{} unbound", left)),
            }
        }
        for (field, other) in &node.identity {
            match tok(*other) {
                Some(o) => {
                    let (a, b) = (token_field(t, *field), token_field(o, *field));
                    if !r.record(id, "identity", a == b, || format!("{} {} != {}", field, a, b)) {
                        return;
                    }
                }
                None => r.note(id, "identity", CheckStatus::Vacuous, format!("{} unbound", other)),
            }
        }
        if !node.sem_feats.is_empty() {
            r.note(id, "sem_feats", CheckStatus::Unchecked, node.sem_feats.join(","));
        }
        if !node.sem_roles.is_empty() {
            r.note(id, "sem_roles", CheckStatus::Unchecked, node.sem_roles.join(","));
        }
    }
}
