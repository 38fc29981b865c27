use std::io::Write;
use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use cxnforge_core::{Diagnostic, Severity};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Diagnostics collected during a command, each tagged with the file it
/// came from.
#[derive(Debug, Default)]
pub struct Report {
    items: Vec<(Option<String>, Diagnostic)>,
}

impl Report {
    pub fn add(&mut self, origin: Option<&Path>, d: Diagnostic) {
        self.items.push((origin.map(|p| p.display().to_string()), d));
    }

    pub fn extend(&mut self, origin: Option<&Path>, ds: impl IntoIterator<Item = Diagnostic>) {
        for d in ds {
            self.add(origin, d);
        }
    }

    pub fn errors(&self) -> usize {
        self.count(Severity::Error)
    }

    pub fn count(&self, severity: Severity) -> usize {
        self.items.iter().filter(|(_, d)| d.severity == severity).count()
    }

    /// Prints everything to stderr: one line per diagnostic in text mode,
    /// one JSON array in json mode.
    pub fn print(&self, format: Format) {
        if self.items.is_empty() {
            return;
        }
        let mut err = std::io::stderr().lock();
        match format {
            Format::Text => {
                for (origin, d) in &self.items {
                    let _ = match origin {
                        Some(o) => writeln!(err, "{}: {}", o, d),
                        None => writeln!(err, "{}", d),
                    };
                }
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .items
                    .iter()
                    .map(|(origin, d)| {
                        let mut v = json!(d);
                        if let Some(o) = origin {
                            v["file"] = json!(o);
                        }
                        v
                    })
                    .collect();
                let _ = writeln!(err, "{}", Value::Array(rows));
            }
        }
    }
}

/// Writes `text` to `path`, or to stdout when there is none.
pub fn write_data(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn print_json(v: &Value) -> anyhow::Result<()> {
    write_data(None, &format!("{}\n", serde_json::to_string_pretty(v)?))
}

/// Emits a corpus produced by a command. Text mode writes CoNLL-U; json
/// mode writes the CoNLL-U to `-o` (or inlines it) and prints `summary`.
pub fn emit_corpus(format: Format, path: Option<&Path>, conllu: &str, mut summary: Value) -> anyhow::Result<()> {
    match format {
        Format::Text => write_data(path, conllu),
        Format::Json => {
            match path {
                Some(p) => {
                    write_data(Some(p), conllu)?;
                    summary["output"] = json!(p.display().to_string());
                }
                None => summary["conllu"] = json!(conllu),
            }
            print_json(&summary)
        }
    }
}
