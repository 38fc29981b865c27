use anyhow::{anyhow, Context};
use cxnforge_core::conllu::{serialize_conllu, Sentence};
use cxnforge_core::corpus::{apply_matches, split_corpus, split_file_name, CorpusError, OverwritePolicy, SplitName, SplitSpec};
use cxnforge_core::Diagnostic;
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::load;
use crate::output::{emit_corpus, print_json, write_data, Format, Report};
use crate::{AnnotateArgs, PropagateArgs, SplitArgs};

fn mark_count(corpus: &[Sentence]) -> usize {
    corpus.iter().flat_map(|s| &s.tokens).map(|t| t.cxn_marks().count()).sum()
}

pub fn propagate(a: PropagateArgs, format: Format, report: &mut Report) -> anyhow::Result<()> {
    let g = load::graph(&a.graph, report)?;
    let corpus = load::corpus(&a.corpus, report)?;
    let before = mark_count(&corpus);
    let mut out = Vec::with_capacity(corpus.len());
    for s in &corpus {
        let (s, diags) = g.propagate_annotations(s);
        report.extend(Some(&a.corpus), diags);
        out.push(s);
    }
    let summary = json!({ "sentences": out.len(), "marks_added": mark_count(&out) - before });
    emit_corpus(format, a.output.as_deref(), &serialize_conllu(&out), summary)
}

pub fn annotate(a: AnnotateArgs, config: &Config, format: Format, report: &mut Report) -> anyhow::Result<()> {
    let policy: OverwritePolicy = a
        .policy
        .as_deref()
        .or(config.annotate.policy.as_deref())
        .map(str::parse)
        .transpose()
        .map_err(|e: String| anyhow!(e))?
        .unwrap_or_default();
    let mut corpus = load::corpus(&a.corpus, report)?;
    let matches = load::matches(&a.matches)?;
    match apply_matches(&mut corpus, &matches, policy) {
        Ok(r) => {
            let summary = json!({ "sentences": corpus.len(), "report": r });
            if format == Format::Text {
                eprintln!("{} marks added", r.added());
            }
            emit_corpus(format, a.output.as_deref(), &serialize_conllu(&corpus), summary)
        }
        // Nothing is written when the report does not fit the corpus.
        Err(CorpusError::Unresolved(items) | CorpusError::BadBinding(items)) => {
            report.extend(Some(&a.matches), items.into_iter().map(|m| Diagnostic::error("bad-match", m)));
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn split(a: SplitArgs, config: &Config, format: Format, report: &mut Report) -> anyhow::Result<()> {
    let defaults = SplitSpec::default();
    let ratios = match a.ratios {
        Some(v) => <[f64; 3]>::try_from(v.as_slice()).map_err(|_| anyhow!("--ratios takes three values, got {}", v.len()))?,
        None => config.split.ratios.unwrap_or(defaults.ratios),
    };
    let spec = SplitSpec {
        ratios,
        seed: a.seed.or(config.split.seed).unwrap_or(defaults.seed),
        key: a.key.or_else(|| config.split.key.clone()).unwrap_or(defaults.key),
    };
    spec.validate()?;
    let corpus = load::corpus(&a.corpus, report)?;
    let split = split_corpus(&corpus, &spec, a.cxn)?;

    std::fs::create_dir_all(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    let stem = a
        .corpus
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    let mut parts = Map::new();
    let mut text = String::new();
    for name in SplitName::ALL {
        let path = a.output.join(split_file_name(&stem, name));
        let sentences = split.part(name);
        write_data(Some(&path), &serialize_conllu(sentences))?;
        text.push_str(&format!("{}\t{}\t{}\n", name.as_str(), sentences.len(), path.display()));
        parts.insert(name.as_str().into(), json!({ "sentences": sentences.len(), "file": path.display().to_string() }));
    }
    let manifest = a.output.join(format!("{}-split.json", stem));
    write_data(Some(&manifest), &(serde_json::to_string_pretty(&split.manifest_json())? + "\n"))?;
    match format {
        Format::Text => write_data(None, &text),
        Format::Json => {
            let mut v = Value::Object(parts);
            v["manifest"] = json!(manifest.display().to_string());
            v["seed"] = json!(spec.seed);
            v["key"] = json!(spec.key);
            print_json(&v)
        }
    }
}
