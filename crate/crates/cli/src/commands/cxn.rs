use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context};
use cxnforge_core::conllc::{load_yaml_entry, parse_conllc, serialize_conllc, to_yaml_entry, validate_cxn, Cxn};
use cxnforge_core::conllu::{parse_conllu, serialize_conllu, SentenceReader};
use cxnforge_core::corpus::{mark_instances, validate_annotations};
use cxnforge_core::matcher::{check_binding, compile, match_corpus_parallel, oracle_match, Binding, Check, CompiledPattern};
use cxnforge_core::queryc::emit_queries;
use cxnforge_core::{Diagnostic, GcxnGraph, Match, Severity};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::load::{self, Kind};
use crate::output::{print_json, write_data, Format, Report};
use crate::{EmitArgs, MatchArgs, NormalizeArgs, ValidateArgs};

fn scoped(cxn: &Cxn, mut d: Diagnostic) -> Diagnostic {
    d.subject = Some(match d.subject {
        Some(s) => format!("cxn {} node {}", cxn.cxn_id, s),
        None => format!("cxn {}", cxn.cxn_id),
    });
    d
}

fn syntax(e: impl std::fmt::Display) -> Diagnostic {
    Diagnostic::error("syntax", e.to_string())
}

pub fn validate(a: ValidateArgs, format: Format, report: &mut Report) -> anyhow::Result<()> {
    let graph = a.graph.as_deref().map(|p| load::graph(p, report)).transpose()?;
    let mut rows = Vec::new();
    for path in &a.files {
        let (errors, warnings) = (report.errors(), report.count(Severity::Warning));
        let origin = Some(path.as_path());
        let kind = load::kind_of(path)?;
        let (label, items) = match kind {
            Kind::Conllc => match parse_conllc(&load::read(path)?) {
                Ok(parsed) => {
                    report.extend(origin, parsed.diagnostics);
                    for c in &parsed.cxns {
                        report.extend(origin, validate_cxn(c).into_iter().map(|d| scoped(c, d)));
                    }
                    ("cxns", parsed.cxns.len())
                }
                Err(e) => {
                    report.add(origin, syntax(e));
                    ("cxns", 0)
                }
            },
            Kind::Yaml => match load_yaml_entry(&load::read(path)?) {
                Ok(c) => {
                    report.extend(origin, validate_cxn(&c).into_iter().map(|d| scoped(&c, d)));
                    ("cxns", 1)
                }
                Err(e) => {
                    report.add(origin, syntax(e));
                    ("cxns", 0)
                }
            },
            Kind::Conllu => match parse_conllu(&load::read(path)?) {
                Ok(parsed) => {
                    report.extend(origin, parsed.diagnostics);
                    if let Some(g) = &graph {
                        report.extend(origin, validate_annotations(&parsed.sentences, g));
                    }
                    ("sentences", parsed.sentences.len())
                }
                Err(e) => {
                    report.add(origin, syntax(e));
                    ("sentences", 0)
                }
            },
            Kind::Dir => {
                let (g, diags) = GcxnGraph::load_dir(path)?;
                report.extend(origin, diags);
                report.extend(origin, g.check_consistency());
                ("cxns", g.len())
            }
        };
        rows.push(json!({
            "file": path.display().to_string(),
            label: items,
            "errors": report.errors() - errors,
            "warnings": report.count(Severity::Warning) - warnings,
        }));
    }
    match format {
        Format::Json => print_json(&json!({ "files": rows })),
        Format::Text => {
            let lines: String = rows
                .iter()
                .map(|r| {
                    let (label, n) = r
                        .as_object()
                        .and_then(|o| o.iter().find(|(k, _)| *k == "cxns" || *k == "sentences"))
                        .map(|(k, v)| (k.clone(), v.clone()))
                        .unwrap_or_default();
                    format!("{}: {} {}, {} errors, {} warnings\n", r["file"].as_str().unwrap_or(""), n, label, r["errors"], r["warnings"])
                })
                .collect();
            write_data(None, &lines)
        }
    }
}

pub fn normalize(a: NormalizeArgs, format: Format, report: &mut Report) -> anyhow::Result<()> {
    let origin = Some(a.file.as_path());
    let text = match load::kind_of(&a.file)? {
        Kind::Conllc => {
            let parsed = parse_conllc(&load::read(&a.file)?).with_context(|| a.file.display().to_string())?;
            report.extend(origin, parsed.diagnostics);
            serialize_conllc(&parsed.cxns)
        }
        Kind::Yaml => to_yaml_entry(&load_yaml_entry(&load::read(&a.file)?).with_context(|| a.file.display().to_string())?),
        Kind::Conllu => {
            let parsed = parse_conllu(&load::read(&a.file)?).with_context(|| a.file.display().to_string())?;
            report.extend(origin, parsed.diagnostics);
            serialize_conllu(&parsed.sentences)
        }
        Kind::Dir => bail!("{}: normalize takes a single file", a.file.display()),
    };
    match format {
        Format::Text => write_data(a.output.as_deref(), &text),
        Format::Json => match &a.output {
            Some(p) => {
                write_data(Some(p), &text)?;
                print_json(&json!({ "output": p.display().to_string() }))
            }
            None => print_json(&json!({ "text": text })),
        },
    }
}

/// A cxn instance marked in the corpus that the cxn's constraints reject.
#[derive(Debug, Serialize)]
struct NearMiss {
    cxn_id: u32,
    sent_id: String,
    binding: Binding,
    failed: Vec<Check>,
}

fn compile_all<'c>(cxns: &'c [Cxn], origin: &Path, report: &mut Report) -> (Vec<CompiledPattern>, BTreeMap<u32, &'c Cxn>) {
    let mut patterns = Vec::new();
    let mut by_id = BTreeMap::new();
    for c in cxns {
        match compile(c) {
            Ok(p) => {
                patterns.push(p);
                by_id.insert(c.cxn_id, c);
            }
            Err(e) => report.add(Some(origin), Diagnostic::error("compile", e.to_string()).with_subject(format!("cxn {}", c.cxn_id))),
        }
    }
    (patterns, by_id)
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("reading {}", path.display()))?))
}

pub fn run_match(a: MatchArgs, config: &Config, format: Format, report: &mut Report) -> anyhow::Result<()> {
    let cxns = load::cxns(&a.cxns, report)?;
    let (patterns, by_id) = compile_all(&cxns, &a.cxns, report);
    let jobs = a
        .jobs
        .or(config.matching.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));

    let mut matches: Vec<Match> = Vec::new();
    if a.oracle {
        for s in load::corpus(&a.corpus, report)? {
            for c in by_id.values() {
                matches.extend(oracle_match(c, &s)?);
            }
        }
    } else {
        match_corpus_parallel(&patterns, open(&a.corpus)?, jobs, |r| match r {
            Ok(m) => matches.push(m),
            Err(d) => report.add(Some(&a.corpus), d),
        })?;
    }
    tracing::info!("{} matches over {} cxns", matches.len(), patterns.len());

    let found: HashSet<(u32, &str, &Binding)> = matches.iter().map(|m| (m.cxn_id, m.sent_id.as_str(), &m.binding)).collect();
    let mut misses = Vec::new();
    for parsed in SentenceReader::new(open(&a.corpus)?).flatten() {
        let s = &parsed.sentence;
        let sent_id = s.sent_id().unwrap_or_default();
        for (cxn_id, binding) in mark_instances(s) {
            let Some(cxn) = by_id.get(&cxn_id) else { continue };
            if found.contains(&(cxn_id, sent_id, &binding)) {
                continue;
            }
            let failed: Vec<Check> = check_binding(cxn, s, &binding).into_iter().filter(|c| c.failed()).collect();
            if !failed.is_empty() {
                misses.push(NearMiss { cxn_id, sent_id: sent_id.to_string(), binding, failed });
            }
        }
    }

    let data = match format {
        Format::Text => matches.iter().map(|m| m.record().to_json_line() + "\n").collect::<String>(),
        Format::Json => serde_json::to_string_pretty(&matches)? + "\n",
    };
    write_data(a.output.as_deref(), &data)?;
    if let (Format::Json, Some(p)) = (format, &a.output) {
        print_json(&json!({ "matches": matches.len(), "output": p.display().to_string() }))?;
    }

    match format {
        Format::Json => eprintln!("{}", json!({ "near_misses": misses })),
        Format::Text => {
            for p in &patterns {
                let n = matches.iter().filter(|m| m.cxn_id == p.cxn_id).count();
                eprintln!("cxn {}: {} matches", p.cxn_id, n);
            }
            for m in &misses {
                let shown: Vec<String> = m.binding.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
                eprintln!("cxn {} in {}: marked instance {} does not match", m.cxn_id, m.sent_id, shown.join(","));
                for c in &m.failed {
                    let token = m.binding.get(&c.node).map(|t| format!(" (token {})", t)).unwrap_or_default();
                    eprintln!("  node {}{} {}: {}", c.node, token, c.constraint, c.detail);
                }
            }
        }
    }
    Ok(())
}

pub fn emit(a: EmitArgs, format: Format, report: &mut Report) -> anyhow::Result<()> {
    let cxns = load::cxns(&a.cxns, report)?;
    let (patterns, _) = compile_all(&cxns, &a.cxns, report);
    if !a.stdout {
        std::fs::create_dir_all(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    }
    let mut rows: Vec<Value> = Vec::new();
    let mut text = String::new();
    for p in &patterns {
        let set = emit_queries(p);
        report.extend(Some(&a.cxns), set.diagnostics.iter().cloned().map(|mut d| {
            d.subject = Some(format!("cxn {}", set.cxn_id));
            d
        }));
        let mut row = json!({
            "cxn_id": set.cxn_id,
            "queries": set.queries.iter().map(|q| json!({
                "included_optional": q.included_optional.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
                "text": q.text,
            })).collect::<Vec<_>>(),
        });
        if a.stdout {
            text.push_str(&set.to_text());
        } else {
            let path = a.output.join(set.file_name());
            write_data(Some(&path), &set.to_text())?;
            text.push_str(&format!("{}\n", path.display()));
            row["file"] = json!(path.display().to_string());
        }
        rows.push(row);
    }
    match format {
        Format::Text => write_data(None, &text),
        Format::Json => print_json(&Value::Array(rows)),
    }
}
