//! Syntactic subsumption between cxns.
//!
//! `subsumes(parent, child)` looks for an injective map from parent nodes to
//! child nodes under which every parent constraint is implied, field by
//! field, by the constraint of the node it maps to. Regexes compare by
//! source text, except that a parent regex accepts a child literal set when
//! it matches every literal.

use std::collections::{BTreeMap, BTreeSet};

use crate::conllc::{Cxn, CxnTokenId, HeadRef, NodeConstraint, Pattern};

/// Parent node ID → child node ID.
pub type Correspondence = BTreeMap<CxnTokenId, CxnTokenId>;

fn pattern_implied(parent: &Option<Pattern>, child: &Option<Pattern>) -> bool {
    match (parent, child) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(Pattern::Literals(p)), Some(Pattern::Literals(c))) => c.iter().all(|v| p.contains(v)),
        (Some(p @ Pattern::Regex { .. }), Some(Pattern::Literals(c))) => c.iter().all(|v| p.is_match(v)),
        (Some(Pattern::Regex { source: p, .. }), Some(Pattern::Regex { source: c, .. })) => p == c,
        (Some(Pattern::Literals(_)), Some(Pattern::Regex { .. })) => false,
    }
}

fn set_implied(parent: &[String], child: &[String]) -> bool {
    parent.is_empty() || (!child.is_empty() && child.iter().all(|v| parent.contains(v)))
}

/// Constraints of one node that do not involve other nodes.
fn unary_implied(parent_cxn: &Cxn, p: &NodeConstraint, child_cxn: &Cxn, c: &NodeConstraint) -> bool {
    if p.is_subtoken() != c.is_subtoken() {
        return false;
    }
    if p.required && !c.required {
        return false;
    }
    if !pattern_implied(&p.form, &c.form) || !pattern_implied(&p.lemma, &c.lemma) {
        return false;
    }
    if !set_implied(&p.upos, &c.upos) {
        return false;
    }
    if !p.feats.iter().all(|f| c.feats.contains(f)) {
        return false;
    }
    if !p.without.iter().all(|w| c.without.contains(w)) {
        return false;
    }
    // An enforced root deprel must be enforced at least as tightly below.
    if p.is_cxn_root() && parent_cxn.match_root_deprel() && !p.deprel.is_empty() {
        let child_enforces = !c.is_cxn_root() || child_cxn.match_root_deprel();
        if !child_enforces || !set_implied(&p.deprel, &c.deprel) {
            return false;
        }
    }
    true
}

/// Parent nodes ordered so that every node comes after its head.
fn head_first_order(cxn: &Cxn) -> Vec<&NodeConstraint> {
    let mut placed: BTreeSet<CxnTokenId> = BTreeSet::new();
    let mut nodes: Vec<&NodeConstraint> = cxn.nodes.iter().collect();
    nodes.sort_by_key(|n| n.id);
    let mut out = Vec::with_capacity(nodes.len());
    while out.len() < nodes.len() {
        let before = out.len();
        for n in &nodes {
            if placed.contains(&n.id) {
                continue;
            }
            let ready = match n.head {
                HeadRef::Root => true,
                HeadRef::Node(h) => placed.contains(&h) || cxn.node(h).is_none(),
            };
            if ready {
                placed.insert(n.id);
                out.push(*n);
            }
        }
        if out.len() == before {
            // Head cycle: the cxn does not validate; fall back to ID order.
            out.extend(nodes.iter().filter(|n| !placed.contains(&n.id)).copied());
            break;
        }
    }
    out
}

struct Search<'a> {
    parent: &'a Cxn,
    child: &'a Cxn,
    order: Vec<&'a NodeConstraint>,
    /// Candidates per position in `order`, by unary implication.
    candidates: Vec<Vec<&'a NodeConstraint>>,
    best: Option<Correspondence>,
}

impl Search<'_> {
    fn consistent(&self, map: &Correspondence, p: &NodeConstraint, c: &NodeConstraint) -> bool {
        match p.head {
            HeadRef::Node(h) => {
                let Some(&ch) = map.get(&h) else { return false };
                if c.head != HeadRef::Node(ch) || !set_implied(&p.deprel, &c.deprel) {
                    return false;
                }
            }
            HeadRef::Root => {}
        }
        // Adjacency and identity, in both directions between p and the
        // nodes already mapped.
        let child_identity = |a: &NodeConstraint, field, b: CxnTokenId| {
            a.identity.contains(&(field, b))
                || self
                    .child
                    .node(b)
                    .is_some_and(|bn| bn.identity.contains(&(field, a.id)))
        };
        let implied = |pn: &NodeConstraint, cn: &NodeConstraint, map: &Correspondence| {
            if let Some(l) = pn.adjacency {
                if let Some(&cl) = map.get(&l) {
                    if cn.adjacency != Some(cl) {
                        return false;
                    }
                }
            }
            pn.identity.iter().all(|(field, other)| match map.get(other) {
                Some(&co) => child_identity(cn, *field, co),
                None => true,
            })
        };
        let mut extended = map.clone();
        extended.insert(p.id, c.id);
        if !implied(p, c, &extended) {
            return false;
        }
        for (&pid, &cid) in map {
            let (Some(pn), Some(cn)) = (self.parent.node(pid), self.child.node(cid)) else {
                continue;
            };
            if (pn.adjacency == Some(p.id) || pn.identity.iter().any(|(_, o)| *o == p.id)) && !implied(pn, cn, &extended) {
                return false;
            }
        }
        true
    }

    fn run(&mut self, depth: usize, map: &mut Correspondence, used: &mut BTreeSet<CxnTokenId>) {
        if depth == self.order.len() {
            if self.best.as_ref().is_none_or(|b| map.len() > b.len()) {
                self.best = Some(map.clone());
            }
            return;
        }
        // No completion can beat the best found so far.
        if let Some(best) = &self.best {
            if map.len() + (self.order.len() - depth) <= best.len() {
                return;
            }
        }
        let p = self.order[depth];
        let head_mapped = match p.head {
            HeadRef::Root => true,
            HeadRef::Node(h) => map.contains_key(&h),
        };
        if head_mapped {
            for i in 0..self.candidates[depth].len() {
                let c = self.candidates[depth][i];
                if used.contains(&c.id) || !self.consistent(map, p, c) {
                    continue;
                }
                used.insert(c.id);
                map.insert(p.id, c.id);
                self.run(depth + 1, map, used);
                map.remove(&p.id);
                used.remove(&c.id);
            }
        }
        if !p.required {
            self.run(depth + 1, map, used);
        }
    }
}

/// The correspondence under which `parent` generalizes `child`, if any.
///
/// Every required parent node is mapped; optional parent nodes are mapped
/// when possible, preferring the map that pairs the most nodes.
pub fn subsumes(parent: &Cxn, child: &Cxn) -> Option<Correspondence> {
    let order = head_first_order(parent);
    let candidates = order
        .iter()
        .map(|p| {
            let mut cs: Vec<&NodeConstraint> = child
                .nodes
                .iter()
                .filter(|c| unary_implied(parent, p, child, c))
                .collect();
            cs.sort_by_key(|c| (c.id != p.id, c.id));
            cs
        })
        .collect::<Vec<_>>();
    if order
        .iter()
        .zip(&candidates)
        .any(|(p, cs)| p.required && cs.is_empty())
    {
        return None;
    }
    let mut search = Search {
        parent,
        child,
        order,
        candidates,
        best: None,
    };
    search.run(0, &mut Correspondence::new(), &mut BTreeSet::new());
    search.best
}
