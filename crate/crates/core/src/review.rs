//! The review queue.
//!
//! Candidates are matches waiting for a linguist's verdict. The queue is
//! event-sourced: `candidates.jsonl` holds one snapshot per candidate and
//! `decisions.jsonl` is an append-only log of verdicts, the latest per
//! candidate winning. Statuses are never stored, only replayed.
//!
//! A candidate id is the first 32 hex digits of the SHA-256 of
//! `cxn_id|sent_id|A=9,B=10,...`, bindings listed in node order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::conllu::{serialize_conllu, Sentence};
use crate::diag::Diagnostic;
use crate::matcher::{Binding, MatchRecord};

pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const DECISIONS_FILE: &str = "decisions.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pending,
    Accepted,
    Rejected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pending => "pending",
            Status::Accepted => "accepted",
            Status::Rejected => "rejected",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pending" => Ok(Status::Pending),
            "accepted" => Ok(Status::Accepted),
            "rejected" => Ok(Status::Rejected),
            other => Err(format!("unknown status `{}`", other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

impl Verdict {
    pub fn status(self) -> Status {
        match self {
            Verdict::Accepted => Status::Accepted,
            Verdict::Rejected => Status::Rejected,
        }
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accept" | "accepted" => Ok(Verdict::Accepted),
            "reject" | "rejected" => Ok(Verdict::Rejected),
            other => Err(format!("unknown verdict `{}`", other)),
        }
    }
}

/// A candidate as stored: the match plus the sentence it was found in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub candidate_id: String,
    pub cxn_id: u32,
    pub sent_id: String,
    #[serde(default)]
    pub source: Option<String>,
    pub binding: Binding,
    /// CoNLL-U text of the sentence at enqueue time.
    pub sentence: String,
}

impl Candidate {
    pub fn record(&self) -> MatchRecord {
        MatchRecord {
            cxn_id: self.cxn_id,
            sent_id: self.sent_id.clone(),
            source: self.source.clone(),
            binding: self.binding.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub candidate_id: String,
    pub verdict: Verdict,
    pub reviewer: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("unknown candidate {0}")]
    UnknownCandidate(String),
    #[error("candidate {candidate_id} is {actual}, not {expected}")]
    Stale {
        candidate_id: String,
        expected: Status,
        actual: Status,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

pub fn candidate_id(cxn_id: u32, sent_id: &str, binding: &Binding) -> String {
    let pairs: Vec<String> = binding.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
    let canonical = format!("{}|{}|{}", cxn_id, sent_id, pairs.join(","));
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(16).map(|b| format!("{:02x}", b)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EnqueueReport {
    pub added: Vec<String>,
    /// Candidates already in the queue.
    pub existing: usize,
    /// Left out by sampling.
    pub sampled_out: usize,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub pending: usize,
    pub accepted: usize,
    pub rejected: usize,
}

/// A rejected candidate sharing tokens with an accepted one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub sent_id: String,
    pub accepted: String,
    pub rejected: String,
    pub tokens: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct QueueStats {
    pub per_cxn: BTreeMap<u32, StatusCounts>,
    pub overlaps: Vec<Overlap>,
}

#[derive(Debug, Clone, Default)]
pub struct ReviewQueue {
    candidates: Vec<Candidate>,
    index: HashMap<String, usize>,
    decisions: Vec<Decision>,
    status: HashMap<String, Status>,
    /// Directory the queue persists to, if any.
    dir: Option<PathBuf>,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, ReviewError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(ReviewError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| ReviewError::Corrupt {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })
        })
        .collect()
}

fn append_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), ReviewError> {
    if items.is_empty() {
        return Ok(());
    }
    let io = |source| ReviewError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut buf = String::new();
    for item in items {
        buf.push_str(&serde_json::to_string(item).expect("review records serialize"));
        buf.push('\n');
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    f.write_all(buf.as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

/// Status of every decided candidate after applying the log in order.
pub fn replay(decisions: &[Decision]) -> HashMap<String, Status> {
    decisions
        .iter()
        .map(|d| (d.candidate_id.clone(), d.verdict.status()))
        .collect()
}

impl ReviewQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens (or starts) a queue persisted in `dir`.
    pub fn open(dir: &Path) -> Result<Self, ReviewError> {
        fs::create_dir_all(dir).map_err(|source| ReviewError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let candidates: Vec<Candidate> = read_jsonl(&dir.join(CANDIDATES_FILE))?;
        let decisions: Vec<Decision> = read_jsonl(&dir.join(DECISIONS_FILE))?;
        let mut q = ReviewQueue::from_parts(candidates, decisions);
        q.dir = Some(dir.to_path_buf());
        Ok(q)
    }

    pub fn from_parts(candidates: Vec<Candidate>, decisions: Vec<Decision>) -> Self {
        let mut q = ReviewQueue::new();
        for c in candidates {
            if !q.index.contains_key(&c.candidate_id) {
                q.index.insert(c.candidate_id.clone(), q.candidates.len());
                q.candidates.push(c);
            }
        }
        q.status = replay(&decisions);
        q.decisions = decisions;
        q
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidate(&self, id: &str) -> Option<&Candidate> {
        self.index.get(id).map(|&i| &self.candidates[i])
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn status(&self, id: &str) -> Option<Status> {
        self.index
            .contains_key(id)
            .then(|| self.status.get(id).copied().unwrap_or(Status::Pending))
    }

    /// Statuses of all candidates, pending ones included.
    pub fn statuses(&self) -> HashMap<String, Status> {
        self.candidates
            .iter()
            .map(|c| (c.candidate_id.clone(), self.status(&c.candidate_id).unwrap_or(Status::Pending)))
            .collect()
    }

    /// Candidates filtered by cxn and status, in queue order.
    pub fn select(&self, cxn_id: Option<u32>, status: Option<Status>) -> Vec<(&Candidate, Status)> {
        self.candidates
            .iter()
            .filter(|c| cxn_id.is_none_or(|id| c.cxn_id == id))
            .map(|c| (c, self.status(&c.candidate_id).unwrap_or(Status::Pending)))
            .filter(|(_, s)| status.is_none_or(|want| *s == want))
            .collect()
    }

    /// Adds a candidate for every match not already queued. With sampling,
    /// a reservoir sample of `size` candidates is drawn from all the
    /// matches (queued or not), so a repeated call adds nothing.
    pub fn enqueue(
        &mut self,
        matches: &[MatchRecord],
        corpus: &[Sentence],
        sampling: Option<Sampling>,
    ) -> Result<EnqueueReport, ReviewError> {
        let mut report = EnqueueReport::default();
        let by_id: HashMap<&str, &Sentence> = corpus
            .iter()
            .filter_map(|s| Some((s.sent_id()?, s)))
            .collect();

        let mut fresh: Vec<Candidate> = Vec::new();
        let mut offered: Vec<(String, Option<Candidate>)> = Vec::new();
        for m in matches {
            let Some(sentence) = by_id.get(m.sent_id.as_str()) else {
                report.diagnostics.push(
                    Diagnostic::warning("unknown-sentence", format!("match for cxn {} skipped: sentence not in corpus", m.cxn_id))
                        .with_subject(m.sent_id.clone()),
                );
                continue;
            };
            let id = candidate_id(m.cxn_id, &m.sent_id, &m.binding);
            if offered.iter().any(|(o, _)| *o == id) {
                continue;
            }
            let candidate = (!self.index.contains_key(&id)).then(|| Candidate {
                candidate_id: id.clone(),
                cxn_id: m.cxn_id,
                sent_id: m.sent_id.clone(),
                source: m.source.clone().or_else(|| sentence.source().map(String::from)),
                binding: m.binding.clone(),
                sentence: serialize_conllu(std::slice::from_ref(*sentence)),
            });
            offered.push((id, candidate));
        }

        let keep: Vec<usize> = match sampling {
            Some(Sampling { size, seed }) if size < offered.len() => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut picked = (0..offered.len()).choose_multiple(&mut rng, size);
                picked.sort_unstable();
                picked
            }
            _ => (0..offered.len()).collect(),
        };
        report.sampled_out = offered.len() - keep.len();
        for i in keep {
            match offered[i].1.take() {
                Some(c) => fresh.push(c),
                None => report.existing += 1,
            }
        }

        if let Some(dir) = &self.dir {
            append_jsonl(&dir.join(CANDIDATES_FILE), &fresh)?;
        }
        for c in fresh {
            report.added.push(c.candidate_id.clone());
            self.index.insert(c.candidate_id.clone(), self.candidates.len());
            self.candidates.push(c);
        }
        Ok(report)
    }

    /// Records a verdict stamped with the current time.
    pub fn decide(
        &mut self,
        candidate_id: &str,
        verdict: Verdict,
        reviewer: &str,
        note: Option<String>,
        expected: Option<Status>,
    ) -> Result<Decision, ReviewError> {
        let decision = Decision {
            candidate_id: candidate_id.to_string(),
            verdict,
            reviewer: reviewer.to_string(),
            timestamp: Utc::now(),
            note,
        };
        self.record(decision, expected)
    }

    /// Appends a prepared decision. With `expected`, the candidate must
    /// currently have that status.
    pub fn record(&mut self, decision: Decision, expected: Option<Status>) -> Result<Decision, ReviewError> {
        let actual = self
            .status(&decision.candidate_id)
            .ok_or_else(|| ReviewError::UnknownCandidate(decision.candidate_id.clone()))?;
        if let Some(expected) = expected {
            if expected != actual {
                return Err(ReviewError::Stale {
                    candidate_id: decision.candidate_id,
                    expected,
                    actual,
                });
            }
        }
        if let Some(dir) = &self.dir {
            append_jsonl(&dir.join(DECISIONS_FILE), std::slice::from_ref(&decision))?;
        }
        self.status
            .insert(decision.candidate_id.clone(), decision.verdict.status());
        self.decisions.push(decision.clone());
        Ok(decision)
    }

    pub fn stats(&self) -> QueueStats {
        let mut stats = QueueStats::default();
        for (c, s) in self.select(None, None) {
            let counts = stats.per_cxn.entry(c.cxn_id).or_default();
            match s {
                Status::Pending => counts.pending += 1,
                Status::Accepted => counts.accepted += 1,
                Status::Rejected => counts.rejected += 1,
            }
        }
        let accepted = self.select(None, Some(Status::Accepted));
        for (r, _) in self.select(None, Some(Status::Rejected)) {
            for (a, _) in &accepted {
                if a.sent_id != r.sent_id {
                    continue;
                }
                let mut tokens: Vec<usize> = r
                    .binding
                    .values()
                    .filter(|t| a.binding.values().any(|u| u == *t))
                    .copied()
                    .collect();
                if tokens.is_empty() {
                    continue;
                }
                tokens.sort_unstable();
                stats.overlaps.push(Overlap {
                    sent_id: r.sent_id.clone(),
                    accepted: a.candidate_id.clone(),
                    rejected: r.candidate_id.clone(),
                    tokens,
                });
            }
        }
        stats
    }

    /// The accepted candidates as match records, in queue order.
    pub fn export_accepted(&self) -> Vec<MatchRecord> {
        self.select(None, Some(Status::Accepted))
            .into_iter()
            .map(|(c, _)| c.record())
            .collect()
    }
}
