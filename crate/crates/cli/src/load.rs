use std::path::Path;

use anyhow::{bail, Context};
use cxnforge_core::conllc::{load_yaml_entry, parse_conllc, Cxn};
use cxnforge_core::conllu::{parse_conllu, Sentence};
use cxnforge_core::matcher::{read_match_report, MatchRecord};
use cxnforge_core::GcxnGraph;

use crate::output::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Conllc,
    Yaml,
    Conllu,
    Dir,
}

pub fn kind_of(path: &Path) -> anyhow::Result<Kind> {
    if path.is_dir() {
        return Ok(Kind::Dir);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("conllc") => Ok(Kind::Conllc),
        Some("yaml" | "yml") => Ok(Kind::Yaml),
        Some("conllu" | "conll") => Ok(Kind::Conllu),
        _ => bail!("{}: cannot tell the format from the extension (expected .conllc, .yaml, .conllu or a directory)", path.display()),
    }
}

pub fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Cxns from a conll-c file, a yaml entry or a directory of yaml entries.
/// Parse failures are returned as errors; findings go to `report`.
pub fn cxns(path: &Path, report: &mut Report) -> anyhow::Result<Vec<Cxn>> {
    match kind_of(path)? {
        Kind::Conllc => {
            let parsed = parse_conllc(&read(path)?).with_context(|| path.display().to_string())?;
            report.extend(Some(path), parsed.diagnostics);
            Ok(parsed.cxns)
        }
        Kind::Yaml => Ok(vec![load_yaml_entry(&read(path)?).with_context(|| path.display().to_string())?]),
        Kind::Dir => {
            let (g, diags) = GcxnGraph::load_dir(path)?;
            report.extend(Some(path), diags);
            Ok(g.entries().cloned().collect())
        }
        Kind::Conllu => bail!("{}: expected cxn definitions, got a CoNLL-U file", path.display()),
    }
}

/// A graph from a directory of entries, or from the cxns of a single file
/// with vertical links inferred.
pub fn graph(path: &Path, report: &mut Report) -> anyhow::Result<GcxnGraph> {
    if path.is_dir() {
        let (g, diags) = GcxnGraph::load_dir(path)?;
        report.extend(Some(path), diags);
        return Ok(g);
    }
    let cxns = cxns(path, report)?;
    let ids: Vec<u32> = cxns.iter().map(|c| c.cxn_id).collect();
    let (mut g, diags) = GcxnGraph::from_entries(cxns);
    report.extend(Some(path), diags);
    for id in ids {
        let (next, delta) = g.update_vertical_links(id);
        report.extend(Some(path), delta.diagnostics);
        g = next;
    }
    Ok(g)
}

pub fn corpus(path: &Path, report: &mut Report) -> anyhow::Result<Vec<Sentence>> {
    let parsed = parse_conllu(&read(path)?).with_context(|| path.display().to_string())?;
    report.extend(Some(path), parsed.diagnostics);
    Ok(parsed.sentences)
}

/// Match records from a line-delimited report, or from a JSON array of
/// records or full matches.
pub fn matches(path: &Path) -> anyhow::Result<Vec<MatchRecord>> {
    let text = read(path)?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).with_context(|| path.display().to_string());
    }
    read_match_report(&text).with_context(|| path.display().to_string())
}
