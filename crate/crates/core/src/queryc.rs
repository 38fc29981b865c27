//! grew-style query text for compiled patterns.
//!
//! Optional nodes have no direct counterpart in the target syntax, so a
//! pattern becomes a set of queries, one per admissible subset of its
//! optional nodes (the full pattern first). Beyond [`MAX_OPTIONAL_VARIANTS`]
//! optional nodes only the full and the required-only variants are emitted.
//!
//! [`read_query`] is a small reader for the emitted subset of the syntax,
//! used to check that emission preserves every constraint.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::conllc::{CxnTokenId, Pattern, TokenField};
use crate::diag::Diagnostic;
use crate::matcher::{CompiledPattern, Predicate};

/// Up to this many optional nodes every subset gets its own query.
pub const MAX_OPTIONAL_VARIANTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Optional nodes present in this variant.
    pub included_optional: Vec<CxnTokenId>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySet {
    pub cxn_id: u32,
    pub queries: Vec<Query>,
    pub diagnostics: Vec<Diagnostic>,
}

impl QuerySet {
    /// All queries of the set, separated by blank lines.
    pub fn to_text(&self) -> String {
        self.queries
            .iter()
            .map(|q| q.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// File name used when queries are written to a directory.
    pub fn file_name(&self) -> String {
        format!("cxn_{}.grs.txt", self.cxn_id)
    }
}

fn parent_of(p: &CompiledPattern) -> BTreeMap<CxnTokenId, CxnTokenId> {
    p.edge_programs.iter().map(|e| (e.child, e.parent)).collect()
}

/// Subsets of the optional nodes in which every included node's parent is
/// present, largest first.
fn variants(p: &CompiledPattern, diagnostics: &mut Vec<Diagnostic>) -> Vec<Vec<CxnTokenId>> {
    let optional = &p.optional_ids;
    if optional.len() > MAX_OPTIONAL_VARIANTS {
        diagnostics.push(Diagnostic::warning(
            "variant-cap",
            format!(
                "{} optional nodes; only the full and required-only variants are emitted",
                optional.len()
            ),
        ));
        return vec![optional.clone(), Vec::new()];
    }
    let parents = parent_of(p);
    let mut subsets: Vec<Vec<CxnTokenId>> = (0u32..(1 << optional.len()))
        .map(|mask| {
            optional
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, id)| *id)
                .collect::<Vec<_>>()
        })
        .filter(|subset| {
            subset.iter().all(|id| match parents.get(id) {
                Some(parent) => !optional.contains(parent) || subset.contains(parent),
                None => true,
            })
        })
        .collect();
    subsets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    subsets
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn pattern_clause(name: &str, p: &Pattern) -> String {
    match p {
        Pattern::Literals(alts) => format!(
            "{}={}",
            name,
            alts.iter().map(|a| quote(a)).collect::<Vec<_>>().join("|")
        ),
        Pattern::Regex { source, .. } => format!("{}=re{}", name, quote(source)),
    }
}

fn field_name(field: TokenField) -> &'static str {
    match field {
        TokenField::Form => "form",
        TokenField::Lemma => "lemma",
        TokenField::Upos => "upos",
        TokenField::Xpos => "xpos",
        TokenField::Feats => "feats",
        TokenField::Deprel => "deprel",
    }
}

/// Emits the query set for a pattern.
pub fn emit_queries(p: &CompiledPattern) -> QuerySet {
    let mut diagnostics = Vec::new();
    let mut queries = Vec::new();
    for subset in variants(p, &mut diagnostics) {
        let included: BTreeSet<CxnTokenId> = p
            .required_ids
            .iter()
            .chain(subset.iter())
            .copied()
            .collect();
        if let Some(sub) = included.iter().find(|id| id.is_subtoken()) {
            diagnostics.push(
                Diagnostic::warning(
                    "subtoken-unsupported",
                    format!("variant with sub-token node {} omitted: treebanks carry no sub-token edges", sub),
                )
                .with_subject(sub.to_string()),
            );
            continue;
        }
        queries.push(Query {
            text: emit_variant(p, &included, &subset),
            included_optional: subset,
        });
    }
    QuerySet {
        cxn_id: p.cxn_id,
        queries,
        diagnostics,
    }
}

fn emit_variant(p: &CompiledPattern, included: &BTreeSet<CxnTokenId>, optional: &[CxnTokenId]) -> String {
    let mut out = String::new();
    let shown: Vec<String> = optional.iter().map(|i| i.to_string()).collect();
    let _ = writeln!(
        out,
        "% cxn {}, optional nodes included: {}",
        p.cxn_id,
        if shown.is_empty() { "none".to_string() } else { shown.join(" ") }
    );
    for (id, column, values) in &p.unchecked {
        if included.contains(id) {
            let _ = writeln!(out, "% {} {} (not matched): {}", id, column, values.join(","));
        }
    }
    for (id, rels) in &p.root_deprels {
        if included.contains(id) {
            let _ = writeln!(out, "% {} incoming relation must be one of: {}", id, rels.join(","));
        }
    }

    let mut withouts: Vec<String> = Vec::new();
    let mut fresh = 0;
    let next_name = |fresh: &mut usize| {
        *fresh += 1;
        format!("W{}", fresh)
    };

    out.push_str("pattern {\n");
    for prog in p.node_programs.iter().filter(|n| included.contains(&n.id)) {
        let mut clauses = Vec::new();
        for pred in &prog.predicates {
            match pred {
                Predicate::Form(pat) => clauses.push(pattern_clause("form", pat)),
                Predicate::Lemma(pat) => clauses.push(pattern_clause("lemma", pat)),
                Predicate::Upos(set) => clauses.push(format!("upos={}", set.join("|"))),
                Predicate::Feats(pairs) => {
                    clauses.extend(pairs.iter().map(|(k, v)| format!("{}={}", k, v)))
                }
                Predicate::NoChild(rel) => {
                    let w = next_name(&mut fresh);
                    withouts.push(format!("{} -[{}]-> {};", prog.id, rel, w));
                }
                Predicate::FieldNot(TokenField::Deprel, rel) => {
                    let w = next_name(&mut fresh);
                    withouts.push(format!("{} -[{}]-> {};", w, rel, prog.id));
                }
                Predicate::FieldNot(field, value) => {
                    withouts.push(format!("{}[{}={}];", prog.id, field_name(*field), quote(value)))
                }
                Predicate::FeatAbsent(k, v) => withouts.push(format!("{}[{}={}];", prog.id, k, v)),
                Predicate::BoundMorpheme => {}
            }
        }
        let _ = writeln!(out, "  {} [{}];", prog.id, clauses.join(", "));
    }
    for e in p
        .edge_programs
        .iter()
        .filter(|e| included.contains(&e.child) && included.contains(&e.parent))
    {
        if e.deprels.is_empty() {
            let _ = writeln!(out, "  {} -> {};", e.parent, e.child);
        } else {
            let _ = writeln!(out, "  {} -[{}]-> {};", e.parent, e.deprels.join("|"), e.child);
        }
    }
    for (node, left) in &p.order_constraints {
        if included.contains(node) && included.contains(left) {
            let _ = writeln!(out, "  {} < {};", left, node);
        }
    }
    for (field, node, other) in &p.identity_constraints {
        if included.contains(node) && included.contains(other) {
            let f = field_name(*field);
            let _ = writeln!(out, "  {}.{} = {}.{};", node, f, other, f);
        }
    }
    out.push_str("}\n");
    for w in withouts {
        let _ = writeln!(out, "without {{ {} }}", w);
    }
    out
}

/// What [`read_query`] recovers from one query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryStructure {
    /// Node name → raw feature clauses.
    pub nodes: BTreeMap<String, Vec<String>>,
    /// `(governor, labels, dependent)`; labels empty for `->`.
    pub edges: Vec<(String, Vec<String>, String)>,
    /// Bodies of the `without` blocks.
    pub withouts: Vec<String>,
    /// `(left, right)` immediate precedence.
    pub order: Vec<(String, String)>,
    /// `(node, field, other)`.
    pub identities: Vec<(String, String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("query line {line}: {message}")]
pub struct QueryReadError {
    pub line: usize,
    pub message: String,
}

fn split_clauses(body: &str) -> Vec<String> {
    // Commas inside quoted values do not separate clauses.
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut escaped = false;
    for c in body.chars() {
        match c {
            _ if escaped => {
                escaped = false;
                cur.push(c);
                continue;
            }
            '\\' if in_quotes => escaped = true,
            '"' => in_quotes = !in_quotes,
            ',' if !in_quotes => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn parse_edge(stmt: &str) -> Option<(String, Vec<String>, String)> {
    if let Some((from, rest)) = stmt.split_once("-[") {
        let (labels, to) = rest.split_once("]->")?;
        return Some((
            from.trim().to_string(),
            labels.split('|').map(|l| l.trim().to_string()).collect(),
            to.trim().to_string(),
        ));
    }
    let (from, to) = stmt.split_once("->")?;
    Some((from.trim().to_string(), Vec::new(), to.trim().to_string()))
}

/// Reads back a query produced by [`emit_queries`].
pub fn read_query(text: &str) -> Result<QueryStructure, QueryReadError> {
    let mut q = QueryStructure::default();
    let mut in_pattern = false;
    for (i, raw) in text.lines().enumerate() {
        let err = |message: &str| QueryReadError {
            line: i + 1,
            message: message.to_string(),
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if line == "pattern {" {
            in_pattern = true;
            continue;
        }
        if line == "}" {
            in_pattern = false;
            continue;
        }
        if let Some(body) = line.strip_prefix("without {") {
            let body = body.strip_suffix('}').ok_or_else(|| err("unterminated without"))?;
            q.withouts.push(body.trim().to_string());
            continue;
        }
        if !in_pattern {
            return Err(err("statement outside a block"));
        }
        let stmt = line.strip_suffix(';').ok_or_else(|| err("missing `;`"))?.trim();
        if stmt.contains("->") {
            q.edges.push(parse_edge(stmt).ok_or_else(|| err("malformed edge"))?);
        } else if let Some((left, right)) = stmt.split_once(" < ") {
            q.order.push((left.trim().to_string(), right.trim().to_string()));
        } else if let Some((a, b)) = stmt.split_once(" = ") {
            let (node, field) = a.split_once('.').ok_or_else(|| err("malformed equality"))?;
            let (other, _) = b.split_once('.').ok_or_else(|| err("malformed equality"))?;
            q.identities
                .push((node.trim().to_string(), field.trim().to_string(), other.trim().to_string()));
        } else if let Some((name, rest)) = stmt.split_once('[') {
            let body = rest.strip_suffix(']').ok_or_else(|| err("malformed node"))?;
            q.nodes.insert(name.trim().to_string(), split_clauses(body));
        } else {
            return Err(err("unknown statement"));
        }
    }
    Ok(q)
}
