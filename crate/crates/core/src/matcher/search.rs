use std::collections::{HashMap, VecDeque};
use std::io::BufRead;

use rayon::prelude::*;

use super::compile::{CompiledPattern, Predicate};
use super::{keep_maximal, Binding, Check, CheckStatus, Match};
use crate::conllc::TokenField;
use crate::conllu::{Sentence, SentenceReader};
use crate::diag::Diagnostic;

/// A binary constraint seen from one of its two slots.
#[derive(Debug, Clone, Copy)]
enum PairCheck {
    /// This slot's token must sit right after the other's.
    RightOf(usize),
    /// This slot's token must sit right before the other's.
    LeftOf(usize),
    SameField(TokenField, usize),
}

struct Plan<'a> {
    pattern: &'a CompiledPattern,
    sentence: &'a Sentence,
    parent: Vec<Option<usize>>,
    edge_deprels: Vec<&'a [String]>,
    /// `is_candidate[slot][token]`, tokens 1-based.
    is_candidate: Vec<Vec<bool>>,
    candidates: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    pairs: Vec<Vec<PairCheck>>,
    order: Vec<usize>,
}

impl<'a> Plan<'a> {
    fn new(pattern: &'a CompiledPattern, sentence: &'a Sentence) -> Self {
        let n = pattern.node_programs.len();
        let len = sentence.len();

        let mut parent = vec![None; n];
        let mut edge_deprels: Vec<&[String]> = vec![&[]; n];
        for e in &pattern.edge_programs {
            let c = pattern.slot(e.child);
            parent[c] = Some(pattern.slot(e.parent));
            edge_deprels[c] = &e.deprels;
        }

        let mut by_upos: HashMap<&str, Vec<usize>> = HashMap::new();
        let mut by_lemma: HashMap<&str, Vec<usize>> = HashMap::new();
        for t in &sentence.tokens {
            by_upos.entry(t.upos.as_str()).or_default().push(t.index);
            by_lemma.entry(t.lemma.as_str()).or_default().push(t.index);
        }
        let root_deprels: HashMap<usize, &[String]> = pattern
            .root_deprels
            .iter()
            .map(|(id, rels)| (pattern.slot(*id), rels.as_slice()))
            .collect();

        let mut candidates = Vec::with_capacity(n);
        let mut is_candidate = Vec::with_capacity(n);
        for (slot, prog) in pattern.node_programs.iter().enumerate() {
            let seed: Vec<usize> = prefilter(&prog.predicates, &by_upos, &by_lemma)
                .unwrap_or_else(|| (1..=len).collect());
            let list: Vec<usize> = seed
                .into_iter()
                .filter(|&i| {
                    let tok = &sentence.tokens[i - 1];
                    prog.predicates.iter().all(|p| p.holds(tok, sentence))
                        && root_deprels
                            .get(&slot)
                            .is_none_or(|rels| rels.iter().any(|r| *r == tok.deprel))
                })
                .collect();
            let mut mask = vec![false; len + 1];
            for &i in &list {
                mask[i] = true;
            }
            candidates.push(list);
            is_candidate.push(mask);
        }

        let mut children = vec![Vec::new(); len + 1];
        for t in &sentence.tokens {
            if t.head <= len {
                children[t.head].push(t.index);
            }
        }

        let mut pairs = vec![Vec::new(); n];
        for (node, left) in &pattern.order_constraints {
            let (a, b) = (pattern.slot(*node), pattern.slot(*left));
            pairs[a].push(PairCheck::RightOf(b));
            pairs[b].push(PairCheck::LeftOf(a));
        }
        for (field, x, y) in &pattern.identity_constraints {
            let (a, b) = (pattern.slot(*x), pattern.slot(*y));
            pairs[a].push(PairCheck::SameField(*field, b));
            pairs[b].push(PairCheck::SameField(*field, a));
        }

        // Parents before children; among the ready slots, fewest candidates
        // first.
        let mut order = Vec::with_capacity(n);
        let mut ready: Vec<usize> = (0..n).filter(|&s| parent[s].is_none()).collect();
        while !ready.is_empty() {
            let (pos, &slot) = ready
                .iter()
                .enumerate()
                .min_by_key(|(_, &s)| (candidates[s].len(), s))
                .expect("ready is not empty");
            ready.swap_remove(pos);
            order.push(slot);
            ready.extend((0..n).filter(|&c| parent[c] == Some(slot)));
        }

        Plan {
            pattern,
            sentence,
            parent,
            edge_deprels,
            is_candidate,
            candidates,
            children,
            pairs,
            order,
        }
    }

    fn pairs_ok(&self, slot: usize, token: usize, assign: &[Option<usize>]) -> bool {
        self.pairs[slot].iter().all(|check| match *check {
            PairCheck::RightOf(other) => assign[other].is_none_or(|o| token == o + 1),
            PairCheck::LeftOf(other) => assign[other].is_none_or(|o| o == token + 1),
            PairCheck::SameField(field, other) => assign[other].is_none_or(|o| {
                field.value_of(&self.sentence.tokens[token - 1])
                    == field.value_of(&self.sentence.tokens[o - 1])
            }),
        })
    }

    fn search(&self, depth: usize, assign: &mut Vec<Option<usize>>, used: &mut Vec<bool>, out: &mut Vec<Vec<Option<usize>>>) {
        let Some(&slot) = self.order.get(depth) else {
            out.push(assign.clone());
            return;
        };
        let required = self.pattern.node_programs[slot].required;
        let parent_token = match self.parent[slot] {
            Some(p) => match assign[p] {
                Some(t) => Some(t),
                // The parent stayed unbound, so this node cannot be bound.
                None => {
                    if !required {
                        self.search(depth + 1, assign, used, out);
                    }
                    return;
                }
            },
            None => None,
        };
        let pool: &[usize] = match parent_token {
            Some(t) => &self.children[t],
            None => &self.candidates[slot],
        };
        let rels = self.edge_deprels[slot];
        for &tok in pool {
            if used[tok] || !self.is_candidate[slot][tok] {
                continue;
            }
            if parent_token.is_some()
                && !rels.is_empty()
                && !rels.iter().any(|r| *r == self.sentence.tokens[tok - 1].deprel)
            {
                continue;
            }
            if !self.pairs_ok(slot, tok, assign) {
                continue;
            }
            assign[slot] = Some(tok);
            used[tok] = true;
            self.search(depth + 1, assign, used, out);
            used[tok] = false;
            assign[slot] = None;
        }
        if !required {
            self.search(depth + 1, assign, used, out);
        }
    }
}

/// Index lookups that narrow the candidates before the full predicate test.
fn prefilter(
    predicates: &[Predicate],
    by_upos: &HashMap<&str, Vec<usize>>,
    by_lemma: &HashMap<&str, Vec<usize>>,
) -> Option<Vec<usize>> {
    let union = |keys: &mut dyn Iterator<Item = &str>, index: &HashMap<&str, Vec<usize>>| {
        let mut v: Vec<usize> = keys.filter_map(|k| index.get(k)).flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for p in predicates {
        if let Predicate::Lemma(crate::conllc::Pattern::Literals(alts)) = p {
            return Some(union(&mut alts.iter().map(String::as_str), by_lemma));
        }
    }
    for p in predicates {
        if let Predicate::Upos(set) = p {
            return Some(union(&mut set.iter().map(String::as_str), by_upos));
        }
    }
    None
}

/// All maximal constructs of the pattern in one sentence, ordered by the
/// token bound to each node in ID order.
pub fn match_sentence(pattern: &CompiledPattern, sentence: &Sentence) -> Vec<Match> {
    let n = pattern.node_programs.len();
    if n == 0 {
        return Vec::new();
    }
    let plan = Plan::new(pattern, sentence);
    if pattern
        .node_programs
        .iter()
        .zip(&plan.candidates)
        .any(|(prog, c)| prog.required && c.is_empty())
    {
        return Vec::new();
    }
    let mut raw = Vec::new();
    let mut assign = vec![None; n];
    let mut used = vec![false; sentence.len() + 1];
    plan.search(0, &mut assign, &mut used, &mut raw);

    let ids = pattern.ids();
    let bindings: Vec<Binding> = raw
        .iter()
        .map(|a| {
            ids.iter()
                .zip(a)
                .filter_map(|(id, t)| t.map(|t| (*id, t)))
                .collect()
        })
        .collect();
    let mut kept = keep_maximal(bindings);
    kept.sort_by_key(|b| super::binding_order_key(&ids, b));
    kept.dedup();

    let sent_id = sentence.sent_id().unwrap_or_default().to_string();
    let source = sentence.source().map(String::from);
    kept.into_iter()
        .map(|binding| Match {
            cxn_id: pattern.cxn_id,
            sent_id: sent_id.clone(),
            source: source.clone(),
            evidence: evidence(pattern, sentence, &binding),
            binding,
        })
        .collect()
}

/// Evidence for a binding the search accepted, phrased from the program.
fn evidence(pattern: &CompiledPattern, sentence: &Sentence, binding: &Binding) -> Vec<Check> {
    let mut checks = Vec::new();
    let token_of = |id| binding.get(&id).map(|&i| &sentence.tokens[i - 1]);
    for prog in &pattern.node_programs {
        let Some(tok) = token_of(prog.id) else {
            checks.push(Check::new(prog.id, "bound", CheckStatus::Vacuous, "optional node unbound".into()));
            continue;
        };
        for p in &prog.predicates {
            let status = if p.holds(tok, sentence) {
                CheckStatus::Satisfied
            } else {
                CheckStatus::Failed
            };
            checks.push(Check::new(prog.id, p.name(), status, p.describe()));
        }
    }
    for e in &pattern.edge_programs {
        let (Some(child), Some(parent)) = (token_of(e.child), token_of(e.parent)) else {
            continue;
        };
        let head_ok = child.head == parent.index;
        checks.push(Check::new(
            e.child,
            "head",
            if head_ok { CheckStatus::Satisfied } else { CheckStatus::Failed },
            format!("head = {}", e.parent),
        ));
        if !e.deprels.is_empty() {
            let ok = e.deprels.contains(&child.deprel);
            checks.push(Check::new(
                e.child,
                "deprel",
                if ok { CheckStatus::Satisfied } else { CheckStatus::Failed },
                format!("DEPREL in {{{}}}", e.deprels.join(",")),
            ));
        }
    }
    for (id, rels) in &pattern.root_deprels {
        if let Some(tok) = token_of(*id) {
            let ok = rels.contains(&tok.deprel);
            checks.push(Check::new(
                *id,
                "deprel",
                if ok { CheckStatus::Satisfied } else { CheckStatus::Failed },
                format!("DEPREL in {{{}}}", rels.join(",")),
            ));
        }
    }
    for (node, left) in &pattern.order_constraints {
        let status = match (binding.get(node), binding.get(left)) {
            (Some(&a), Some(&b)) if a == b + 1 => CheckStatus::Satisfied,
            (Some(_), Some(_)) => CheckStatus::Failed,
            _ => CheckStatus::Vacuous,
        };
        checks.push(Check::new(*node, "adjacency", status, format!("left neighbour = {}", left)));
    }
    for (field, node, other) in &pattern.identity_constraints {
        let status = match (token_of(*node), token_of(*other)) {
            (Some(a), Some(b)) if field.value_of(a) == field.value_of(b) => CheckStatus::Satisfied,
            (Some(_), Some(_)) => CheckStatus::Failed,
            _ => CheckStatus::Vacuous,
        };
        checks.push(Check::new(*node, "identity", status, format!("{}={}", field, other)));
    }
    for (id, column, values) in &pattern.unchecked {
        checks.push(Check::new(*id, column, CheckStatus::Unchecked, values.join(",")));
    }
    checks
}

/// Streams matches over a CoNLL-U reader in corpus order. Sentences that
/// fail to parse come out as `Err` diagnostics and matching continues.
pub fn match_corpus<R: BufRead>(pattern: &CompiledPattern, reader: R) -> CorpusMatches<'_, R> {
    CorpusMatches {
        pattern,
        sentences: SentenceReader::new(reader),
        pending: VecDeque::new(),
    }
}

pub struct CorpusMatches<'p, R> {
    pattern: &'p CompiledPattern,
    sentences: SentenceReader<R>,
    pending: VecDeque<Match>,
}

impl<R: BufRead> Iterator for CorpusMatches<'_, R> {
    type Item = Result<Match, Diagnostic>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(m) = self.pending.pop_front() {
                return Some(Ok(m));
            }
            match self.sentences.next()? {
                Ok(parsed) => self
                    .pending
                    .extend(match_sentence(self.pattern, &parsed.sentence)),
                Err(e) => {
                    return Some(Err(Diagnostic::error("sentence-skipped", e.to_string()).at_line(e.line)))
                }
            }
        }
    }
}

/// Like [`match_corpus`], evaluating batches of sentences on `jobs` threads.
/// Results reach `sink` in corpus order.
pub fn match_corpus_parallel<R: BufRead>(
    patterns: &[CompiledPattern],
    reader: R,
    jobs: usize,
    mut sink: impl FnMut(Result<Match, Diagnostic>),
) -> Result<(), rayon::ThreadPoolBuildError> {
    const BATCH: usize = 512;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let mut sentences = SentenceReader::new(reader);
    loop {
        let batch: Vec<_> = sentences.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            return Ok(());
        }
        let results: Vec<Result<Vec<Match>, Diagnostic>> = pool.install(|| {
            batch
                .par_iter()
                .map(|item| match item {
                    Ok(parsed) => Ok(patterns
                        .iter()
                        .flat_map(|p| match_sentence(p, &parsed.sentence))
                        .collect()),
                    Err(e) => Err(Diagnostic::error("sentence-skipped", e.to_string()).at_line(e.line)),
                })
                .collect()
        });
        for r in results {
            match r {
                Ok(matches) => matches.into_iter().for_each(|m| sink(Ok(m))),
                Err(d) => sink(Err(d)),
            }
        }
    }
}
