//! Corpus-level operations: writing accepted matches into MISC as cxn marks,
//! re-checking existing marks, and the train/dev/test split.
//!
//! The split hashes each sentence's group key (UTF-8) with XXH64, using the
//! split seed as the XXH64 seed. The top 53 bits of the hash give a number
//! in [0, 1) that is bucketed by the cumulative ratios, so any XXH64
//! implementation reproduces the assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh64::xxh64;

use crate::conllc::CxnTokenId;
use crate::conllu::{serialize_conllu, CxnMark, Sentence};
use crate::diag::Diagnostic;
use crate::gcxn::GcxnGraph;
use crate::matcher::{check_binding, Binding, MatchRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverwritePolicy {
    /// Skip a match when any of its tokens already carries a mark of the
    /// same cxn.
    #[default]
    SkipExisting,
    /// Add whatever marks are missing.
    Merge,
    /// Drop the sentence's existing marks of the cxn, then add.
    Replace,
}

impl FromStr for OverwritePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skip-existing" => Ok(OverwritePolicy::SkipExisting),
            "merge" => Ok(OverwritePolicy::Merge),
            "replace" => Ok(OverwritePolicy::Replace),
            other => Err(format!("unknown overwrite policy `{}`", other)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkCounts {
    pub added: usize,
    pub skipped: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub per_cxn: BTreeMap<u32, MarkCounts>,
}

impl AnnotationReport {
    pub fn added(&self) -> usize {
        self.per_cxn.values().map(|c| c.added).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("matches refer to sentences that do not resolve to exactly one corpus sentence: {}", .0.join(", "))]
    Unresolved(Vec<String>),
    #[error("bindings point outside their sentence: {}", .0.join(", "))]
    BadBinding(Vec<String>),
    #[error("invalid split ratios {0:?}: need three non-negative numbers summing to 1")]
    BadRatios([f64; 3]),
}

/// Writes the marks of `matches` into `sentences`. Nothing is changed when
/// a match cannot be resolved.
pub fn apply_matches(
    sentences: &mut [Sentence],
    matches: &[MatchRecord],
    policy: OverwritePolicy,
) -> Result<AnnotationReport, CorpusError> {
    let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, s) in sentences.iter().enumerate() {
        if let Some(id) = s.sent_id() {
            positions.entry(id).or_default().push(i);
        }
    }
    let mut unresolved = BTreeSet::new();
    let mut bad = BTreeSet::new();
    let mut resolved = Vec::with_capacity(matches.len());
    for m in matches {
        match positions.get(m.sent_id.as_str()).map(Vec::as_slice) {
            Some(&[i]) => {
                let len = sentences[i].len();
                if let Some((id, t)) = m.binding.iter().find(|(_, &t)| t == 0 || t > len) {
                    bad.insert(format!("{} ({}={})", m.sent_id, id, t));
                }
                resolved.push(i);
            }
            _ => {
                unresolved.insert(m.sent_id.clone());
            }
        }
    }
    if !unresolved.is_empty() {
        return Err(CorpusError::Unresolved(unresolved.into_iter().collect()));
    }
    if !bad.is_empty() {
        return Err(CorpusError::BadBinding(bad.into_iter().collect()));
    }

    let mut report = AnnotationReport::default();
    let mut cleared: BTreeSet<(usize, u32)> = BTreeSet::new();
    for (m, i) in matches.iter().zip(resolved) {
        let counts = report.per_cxn.entry(m.cxn_id).or_default();
        let sentence = &mut sentences[i];
        match policy {
            OverwritePolicy::SkipExisting => {
                let taken = m.binding.values().any(|&t| {
                    sentence.tokens[t - 1]
                        .cxn_marks()
                        .any(|mark| mark.cxn_id == m.cxn_id)
                });
                if taken {
                    counts.skipped += m.binding.len();
                    continue;
                }
            }
            OverwritePolicy::Replace => {
                if cleared.insert((i, m.cxn_id)) {
                    for t in &mut sentence.tokens {
                        counts.removed += t.remove_marks_of(m.cxn_id);
                    }
                }
            }
            OverwritePolicy::Merge => {}
        }
        for (&label, &t) in &m.binding {
            if sentence.tokens[t - 1].add_mark(CxnMark::new(m.cxn_id, label)) {
                counts.added += 1;
            } else {
                counts.skipped += 1;
            }
        }
    }
    Ok(report)
}

/// Re-checks every cxn mark against its cxn in `graph`, one
/// [`mark_instances`] binding at a time.
pub fn validate_annotations(sentences: &[Sentence], graph: &GcxnGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (pos, sentence) in sentences.iter().enumerate() {
        let sent = sentence
            .sent_id()
            .map(String::from)
            .unwrap_or_else(|| format!("#{}", pos + 1));
        for (cxn_id, binding) in mark_instances(sentence) {
            let Some(cxn) = graph.entry(cxn_id) else {
                out.push(
                    Diagnostic::error("unknown-cxn", format!("marks refer to cxn {}, which is not in the graph", cxn_id))
                        .with_subject(sent.clone()),
                );
                continue;
            };
            for check in check_binding(cxn, sentence, &binding).into_iter().filter(|c| c.failed()) {
                let subject = match binding.get(&check.node) {
                    Some(t) => format!("{} token {}", sent, t),
                    None => sent.clone(),
                };
                out.push(
                    Diagnostic::error(
                        check.constraint.clone(),
                        format!("cxn {} node {}: {}", cxn_id, check.node, check.detail),
                    )
                    .with_subject(subject),
                );
            }
        }
    }
    out
}

/// The cxn instances marked in a sentence, as `(cxn_id, binding)`.
///
/// Marks of one cxn are grouped into instances: the k-th token carrying a
/// label (in sentence order) belongs to the k-th instance, and a label with
/// fewer tokens than instances reuses its last token.
pub fn mark_instances(sentence: &Sentence) -> Vec<(u32, Binding)> {
    let mut by_cxn: BTreeMap<u32, BTreeMap<CxnTokenId, Vec<usize>>> = BTreeMap::new();
    for t in &sentence.tokens {
        for m in t.cxn_marks() {
            by_cxn
                .entry(m.cxn_id)
                .or_default()
                .entry(m.label)
                .or_default()
                .push(t.index);
        }
    }
    let mut out = Vec::new();
    for (cxn_id, labels) in by_cxn {
        let count = labels.values().map(Vec::len).max().unwrap_or(0);
        for k in 0..count {
            let binding = labels
                .iter()
                .map(|(&label, tokens)| (label, tokens[k.min(tokens.len() - 1)]))
                .collect();
            out.push((cxn_id, binding));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratios: [f64; 3],
    /// Metadata key whose value groups sentences.
    pub key: String,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            ratios: [0.8, 0.1, 0.1],
            key: "source".into(),
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let ok = self.ratios.iter().all(|r| r.is_finite() && *r >= 0.0)
            && (self.ratios.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(CorpusError::BadRatios(self.ratios))
        }
    }

    pub fn assign(&self, group: &str) -> SplitName {
        let u = unit_interval(group_hash(self.seed, group));
        if u < self.ratios[0] {
            SplitName::Train
        } else if u < self.ratios[0] + self.ratios[1] {
            SplitName::Dev
        } else {
            SplitName::Test
        }
    }
}

/// XXH64 of the key, seeded with the split seed.
pub fn group_hash(seed: u64, key: &str) -> u64 {
    xxh64(key.as_bytes(), seed)
}

fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sent_id: Option<String>,
    pub group: String,
    pub split: SplitName,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<Sentence>,
    pub dev: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub manifest: Vec<ManifestEntry>,
}

impl Split {
    pub fn part(&self, name: SplitName) -> &[Sentence] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Dev => &self.dev,
            SplitName::Test => &self.test,
        }
    }

    /// `sent_id → split` for every sentence that has a sent_id.
    pub fn manifest_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .manifest
            .iter()
            .filter_map(|e| Some((e.sent_id.clone()?, e.split.as_str().into())))
            .collect();
        serde_json::Value::Object(map)
    }
}

/// `<stem>-train.conllu`, `<stem>-dev.conllu`, `<stem>-test.conllu`.
pub fn split_file_name(stem: &str, name: SplitName) -> String {
    format!("{}-{}.conllu", stem, name)
}

/// The value sentences are grouped by: the key's metadata value, else the
/// sent_id, else the sentence's own text.
pub fn group_key(sentence: &Sentence, key: &str) -> String {
    match sentence.meta(key).filter(|v| !v.is_empty()) {
        Some(v) => v.to_string(),
        None => match sentence.sent_id() {
            Some(id) => id.to_string(),
            None => serialize_conllu(std::slice::from_ref(sentence)),
        },
    }
}

/// Splits the corpus by group. With `only_cxn`, sentences without a mark of
/// that cxn are left out.
pub fn split_corpus(sentences: &[Sentence], spec: &SplitSpec, only_cxn: Option<u32>) -> Result<Split, CorpusError> {
    spec.validate()?;
    let mut split = Split::default();
    for s in sentences {
        if let Some(cxn) = only_cxn {
            if !s.tokens.iter().any(|t| t.cxn_marks().any(|m| m.cxn_id == cxn)) {
                continue;
            }
        }
        let group = group_key(s, &spec.key);
        let name = spec.assign(&group);
        match name {
            SplitName::Train => split.train.push(s.clone()),
            SplitName::Dev => split.dev.push(s.clone()),
            SplitName::Test => split.test.push(s.clone()),
        }
        split.manifest.push(ManifestEntry {
            sent_id: s.sent_id().map(String::from),
            group,
            split: name,
        });
    }
    Ok(split)
}
