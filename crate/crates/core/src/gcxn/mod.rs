//! The construction graph.
//!
//! Entries are cxns keyed by id. Vertical edges run from a parent cxn to a
//! child cxn and carry the node correspondence found by [`subsumes`], when
//! there is one; edges declared in an entry's `vertical_links` are kept
//! even when no correspondence exists. Horizontal edges are unordered pairs.
//!
//! Graph values are immutable once built: [`GcxnGraph::insert`] and
//! [`GcxnGraph::update_vertical_links`] return a new graph and share the
//! unchanged entries with the old one.

mod propagate;
mod subsume;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::Serialize;
use serde_json::json;

use crate::conllc::{load_yaml_entry, to_yaml_entry, validate_cxn, Cxn};
use crate::diag::{Diagnostic, Severity};

pub use subsume::{subsumes, Correspondence};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerticalEdge {
    /// `None` when the edge is declared but no correspondence was found.
    pub correspondence: Option<Correspondence>,
    /// Listed in the child's `vertical_links`; never removed automatically.
    pub declared: bool,
}

/// What an insertion changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GraphDelta {
    pub added: Vec<(u32, u32)>,
    pub removed: Vec<(u32, u32)>,
    /// Edges dropped by transitive reduction, including ones proposed and
    /// dropped within the same update.
    pub reduced: Vec<(u32, u32)>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> GraphError + '_ {
    move |source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GcxnGraph {
    entries: BTreeMap<u32, Arc<Cxn>>,
    vertical: BTreeMap<(u32, u32), VerticalEdge>,
    horizontal: BTreeSet<(u32, u32)>,
}

fn pair(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

impl GcxnGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the graph from entries and their declared links. Duplicate ids
    /// keep the first entry.
    pub fn from_entries(cxns: Vec<Cxn>) -> (Self, Vec<Diagnostic>) {
        let mut g = GcxnGraph::new();
        let mut diagnostics = Vec::new();
        for cxn in cxns {
            if g.entries.contains_key(&cxn.cxn_id) {
                diagnostics.push(
                    Diagnostic::error("duplicate-cxn", format!("cxn {} defined more than once", cxn.cxn_id))
                        .with_subject(format!("cxn {}", cxn.cxn_id)),
                );
                continue;
            }
            g.entries.insert(cxn.cxn_id, Arc::new(cxn));
        }
        let ids: Vec<u32> = g.entries.keys().copied().collect();
        for id in ids {
            g.attach_declared(id);
        }
        (g, diagnostics)
    }

    /// Adds the edges declared by entry `id` towards existing entries.
    fn attach_declared(&mut self, id: u32) {
        let cxn = Arc::clone(&self.entries[&id]);
        for &parent in &cxn.vertical_links {
            if let Some(p) = self.entries.get(&parent) {
                let correspondence = subsumes(p, &cxn);
                self.vertical.insert(
                    (parent, id),
                    VerticalEdge {
                        correspondence,
                        declared: true,
                    },
                );
            }
        }
        for &other in &cxn.horizontal_links {
            if self.entries.contains_key(&other) {
                self.horizontal.insert(pair(id, other));
            }
        }
        for (&other_id, other) in &self.entries {
            if other.vertical_links.contains(&id) && other_id != id {
                let correspondence = subsumes(&cxn, other);
                self.vertical.insert(
                    (id, other_id),
                    VerticalEdge {
                        correspondence,
                        declared: true,
                    },
                );
            }
            if other.horizontal_links.contains(&id) {
                self.horizontal.insert(pair(id, other_id));
            }
        }
    }

    /// Loads every `*.yaml` file under `dir`. Entries that fail to parse are
    /// reported and skipped.
    pub fn load_dir(dir: &Path) -> Result<(Self, Vec<Diagnostic>), GraphError> {
        let mut files = Vec::new();
        collect_yaml(dir, &mut files)?;
        files.sort();
        let mut cxns = Vec::new();
        let mut diagnostics = Vec::new();
        for path in files {
            let text = fs::read_to_string(&path).map_err(io_error(&path))?;
            let subject = path.display().to_string();
            match load_yaml_entry(&text) {
                Ok(cxn) => {
                    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                    if stem != cxn.cxn_id.to_string() {
                        diagnostics.push(
                            Diagnostic::warning(
                                "file-name",
                                format!("entry for cxn {} is not named {}.yaml", cxn.cxn_id, cxn.cxn_id),
                            )
                            .with_subject(subject),
                        );
                    }
                    cxns.push(cxn);
                }
                Err(e) => diagnostics.push(Diagnostic::error("bad-entry", e.to_string()).with_subject(subject)),
            }
        }
        let (g, more) = Self::from_entries(cxns);
        diagnostics.extend(more);
        Ok((g, diagnostics))
    }

    /// Writes one `<cxn_id>.yaml` per entry. Each entry's `vertical_links`
    /// lists its parents in the graph.
    pub fn save_dir(&self, dir: &Path) -> Result<(), GraphError> {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
        for (&id, cxn) in &self.entries {
            let mut cxn = Cxn::clone(cxn);
            cxn.vertical_links = self.parents_of(id).into_iter().map(|(p, _)| p).collect();
            let path = dir.join(format!("{}.yaml", id));
            fs::write(&path, to_yaml_entry(&cxn)).map_err(io_error(&path))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: u32) -> Option<&Cxn> {
        self.entries.get(&id).map(|c| c.as_ref())
    }

    pub fn entries(&self) -> impl Iterator<Item = &Cxn> {
        self.entries.values().map(|c| c.as_ref())
    }

    pub fn vertical_edges(&self) -> impl Iterator<Item = ((u32, u32), &VerticalEdge)> {
        self.vertical.iter().map(|(&k, v)| (k, v))
    }

    pub fn horizontal_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.horizontal.iter().copied()
    }

    pub fn parents_of(&self, id: u32) -> Vec<(u32, &VerticalEdge)> {
        self.vertical
            .iter()
            .filter(|((_, c), _)| *c == id)
            .map(|(&(p, _), e)| (p, e))
            .collect()
    }

    pub fn children_of(&self, id: u32) -> Vec<(u32, &VerticalEdge)> {
        self.vertical
            .iter()
            .filter(|((p, _), _)| *p == id)
            .map(|(&(_, c), e)| (c, e))
            .collect()
    }

    /// Every cxn reachable upwards from `id`, excluding `id`.
    pub fn ancestors(&self, id: u32) -> BTreeSet<u32> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            for (p, _) in self.parents_of(n) {
                if p != id && seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    fn reaches(&self, from: u32, to: u32, skip: Option<(u32, u32)>) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            for &(p, c) in self.vertical.keys() {
                if p != n || Some((p, c)) == skip {
                    continue;
                }
                if c == to {
                    return true;
                }
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        false
    }

    pub fn check_consistency(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (&id, cxn) in &self.entries {
            let subject = format!("cxn {}", id);
            for d in validate_cxn(cxn).into_iter().filter(|d| d.severity == Severity::Error) {
                let message = match &d.subject {
                    Some(node) => format!("{}: {}", node, d.message),
                    None => d.message.clone(),
                };
                out.push(Diagnostic::error(d.rule, message).with_subject(subject.clone()));
            }
            for (kind, links) in [("vertical", &cxn.vertical_links), ("horizontal", &cxn.horizontal_links)] {
                for link in links.iter().filter(|l| !self.entries.contains_key(l)) {
                    out.push(
                        Diagnostic::error("dangling-link", format!("dangling {} link {}", kind, link))
                            .with_subject(subject.clone()),
                    );
                }
            }
            for other in &cxn.horizontal_links {
                if let Some(o) = self.entries.get(other) {
                    if !o.horizontal_links.contains(&id) {
                        out.push(
                            Diagnostic::warning(
                                "asymmetric-horizontal",
                                format!("cxn {} lists {} as sibling but {} does not list {}", id, other, other, id),
                            )
                            .with_subject(subject.clone()),
                        );
                    }
                }
            }
        }

        let graph: DiGraphMap<u32, ()> = DiGraphMap::from_edges(self.vertical.keys().copied());
        for mut scc in tarjan_scc(&graph) {
            let looped = scc.len() == 1 && self.vertical.contains_key(&(scc[0], scc[0]));
            if scc.len() > 1 || looped {
                scc.sort();
                let ids: Vec<String> = scc.iter().map(u32::to_string).collect();
                out.push(
                    Diagnostic::error("vertical-cycle", format!("vertical cycle among cxns {}", ids.join(", ")))
                        .with_subject(format!("cxn {}", scc[0])),
                );
            }
        }

        for (&(p, c), edge) in &self.vertical {
            let subject = format!("cxn {}", c);
            match &edge.correspondence {
                None => out.push(
                    Diagnostic::warning(
                        "not-derivable",
                        format!("declared vertical link {} -> {} is not derivable by subsumption", p, c),
                    )
                    .with_subject(subject),
                ),
                Some(corr) => {
                    if let Some(problem) = self.correspondence_problem(p, c, corr) {
                        out.push(
                            Diagnostic::error("bad-correspondence", format!("edge {} -> {}: {}", p, c, problem))
                                .with_subject(subject),
                        );
                    }
                }
            }
        }
        out
    }

    fn correspondence_problem(&self, p: u32, c: u32, corr: &Correspondence) -> Option<String> {
        let (parent, child) = (self.entries.get(&p)?, self.entries.get(&c)?);
        if let Some(n) = parent.nodes.iter().find(|n| n.required && !corr.contains_key(&n.id)) {
            return Some(format!("required node {} is not mapped", n.id));
        }
        let mut targets = BTreeSet::new();
        for (from, to) in corr {
            if parent.node(*from).is_none() || child.node(*to).is_none() {
                return Some(format!("{} -> {} names an undeclared node", from, to));
            }
            if !targets.insert(*to) {
                return Some(format!("{} is the image of two nodes", to));
            }
        }
        None
    }

    /// Adds or replaces an entry and places it in the hierarchy.
    pub fn insert(&self, cxn: Cxn) -> (Self, GraphDelta) {
        let id = cxn.cxn_id;
        let mut g = self.clone();
        g.vertical.retain(|&(p, c), _| p != id && c != id);
        g.horizontal.retain(|&(a, b)| a != id && b != id);
        g.entries.insert(id, Arc::new(cxn));
        g.attach_declared(id);
        let (updated, mut delta) = g.update_vertical_links(id);
        let before: BTreeSet<(u32, u32)> = self.vertical.keys().copied().collect();
        let after: BTreeSet<(u32, u32)> = updated.vertical.keys().copied().collect();
        delta.added = after.difference(&before).copied().collect();
        delta.removed = before.difference(&after).copied().collect();
        (updated, delta)
    }

    /// Links `new_id` to every cxn it subsumes or is subsumed by, then
    /// reduces the derived edges transitively.
    pub fn update_vertical_links(&self, new_id: u32) -> (Self, GraphDelta) {
        let mut g = self.clone();
        let mut delta = GraphDelta::default();
        let Some(new) = self.entries.get(&new_id).cloned() else {
            delta.diagnostics.push(Diagnostic::error(
                "unknown-cxn",
                format!("cxn {} is not in the graph", new_id),
            ));
            return (g, delta);
        };
        let before: BTreeSet<(u32, u32)> = self.vertical.keys().copied().collect();

        let mut proposed = Vec::new();
        for (&other, cxn) in &self.entries {
            if other == new_id {
                continue;
            }
            let down = subsumes(cxn, &new);
            let up = subsumes(&new, cxn);
            match (down, up) {
                (Some(_), Some(_)) => delta.diagnostics.push(
                    Diagnostic::warning(
                        "equivalent-cxns",
                        format!("equivalent cxns {} and {}: each subsumes the other; no link added", new_id, other),
                    )
                    .with_subject(format!("cxn {}", new_id)),
                ),
                (Some(corr), None) => proposed.push(((other, new_id), corr)),
                (None, Some(corr)) => proposed.push(((new_id, other), corr)),
                (None, None) => {}
            }
        }
        for ((p, c), corr) in proposed {
            if let Some(existing) = g.vertical.get_mut(&(p, c)) {
                existing.correspondence = Some(corr);
                continue;
            }
            if g.reaches(c, p, None) {
                delta.diagnostics.push(
                    Diagnostic::warning(
                        "vertical-cycle",
                        format!("link {} -> {} rejected: it would close a vertical cycle", p, c),
                    )
                    .with_subject(format!("cxn {}", new_id)),
                );
                continue;
            }
            g.vertical.insert(
                (p, c),
                VerticalEdge {
                    correspondence: Some(corr),
                    declared: false,
                },
            );
        }

        delta.reduced = g.transitive_reduction();
        let after: BTreeSet<(u32, u32)> = g.vertical.keys().copied().collect();
        delta.added = after.difference(&before).copied().collect();
        delta.removed = before.difference(&after).copied().collect();
        (g, delta)
    }

    /// Removes derived edges implied by a longer path; declared edges stay.
    fn transitive_reduction(&mut self) -> Vec<(u32, u32)> {
        let derived: Vec<(u32, u32)> = self
            .vertical
            .iter()
            .filter(|(_, e)| !e.declared)
            .map(|(&k, _)| k)
            .collect();
        let mut removed = Vec::new();
        for (p, c) in derived {
            if self.reaches(p, c, Some((p, c))) {
                self.vertical.remove(&(p, c));
                removed.push((p, c));
            }
        }
        removed
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph gcxn {\n");
        for (id, cxn) in &self.entries {
            let label = format!("{} {}", id, cxn.name).trim().replace('"', "\\\"");
            let _ = writeln!(out, "  {} [label=\"{}\"];", id, label);
        }
        for (&(p, c), e) in &self.vertical {
            let style = if e.correspondence.is_none() { " [style=dotted]" } else { "" };
            let _ = writeln!(out, "  {} -> {}{};", p, c, style);
        }
        for &(a, b) in &self.horizontal {
            let _ = writeln!(out, "  {} -> {} [dir=none, style=dashed];", a, b);
        }
        out.push_str("}\n");
        out
    }

    /// `{nodes: [...], vertical: [...], horizontal: [...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .entries
            .values()
            .map(|c| json!({"id": c.cxn_id, "name": c.name}))
            .collect();
        let vertical: Vec<_> = self
            .vertical
            .iter()
            .map(|(&(p, c), e)| {
                json!({
                    "parent": p,
                    "child": c,
                    "declared": e.declared,
                    "correspondence": e.correspondence,
                })
            })
            .collect();
        let horizontal: Vec<_> = self.horizontal.iter().map(|&(a, b)| json!([a, b])).collect();
        json!({"nodes": nodes, "vertical": vertical, "horizontal": horizontal})
    }
}

fn collect_yaml(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), GraphError> {
    for entry in fs::read_dir(dir).map_err(io_error(dir))? {
        let path = entry.map_err(io_error(dir))?.path();
        if path.is_dir() {
            collect_yaml(&path, out)?;
        } else if matches!(path.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")) {
            out.push(path);
        }
    }
    Ok(())
}
