use std::net::SocketAddr;

use anyhow::{anyhow, Context};
use cxnforge_core::review::{ReviewError, ReviewQueue, Sampling, Status, Verdict};
use cxnforge_core::Diagnostic;
use cxnforge_server::AppState;
use serde_json::json;

use crate::config::Config;
use crate::load;
use crate::output::{print_json, write_data, Format, Report};
use crate::ReviewCommand;

const DEFAULT_BIND: &str = "127.0.0.1:8080";

pub fn run(cmd: ReviewCommand, config: &Config, format: Format, report: &mut Report) -> anyhow::Result<()> {
    match cmd {
        ReviewCommand::Enqueue { queue, matches, corpus, sample, seed } => {
            let mut q = ReviewQueue::open(&queue)?;
            let records = load::matches(&matches)?;
            let corpus = load::corpus(&corpus, report)?;
            let sampling = sample.map(|size| Sampling { size, seed });
            let r = q.enqueue(&records, &corpus, sampling)?;
            report.extend(Some(&matches), r.diagnostics.iter().cloned());
            match format {
                Format::Json => print_json(&json!({ "added": r.added, "existing": r.existing, "sampled_out": r.sampled_out })),
                Format::Text => write_data(
                    None,
                    &format!("{} added, {} already queued, {} sampled out\n", r.added.len(), r.existing, r.sampled_out),
                ),
            }
        }
        ReviewCommand::Decide { queue, candidate, verdict, reviewer, note, expect } => {
            let verdict: Verdict = verdict.parse().map_err(|e: String| anyhow!(e))?;
            let expected: Option<Status> = expect.as_deref().map(str::parse).transpose().map_err(|e: String| anyhow!(e))?;
            let reviewer = reviewer
                .or_else(|| config.review.reviewer.clone())
                .context("no reviewer: pass --reviewer or set review.reviewer in the config")?;
            let mut q = ReviewQueue::open(&queue)?;
            match q.decide(&candidate, verdict, &reviewer, note, expected) {
                Ok(d) => match format {
                    Format::Json => print_json(&json!(d)),
                    Format::Text => write_data(None, &format!("{} {}\n", d.candidate_id, d.verdict.status())),
                },
                // A stale snapshot is a finding, not a usage error.
                Err(e @ ReviewError::Stale { .. }) => {
                    report.add(Some(&queue), Diagnostic::error("stale", e.to_string()).with_subject(candidate));
                    Ok(())
                }
                Err(e) => Err(e.into()),
            }
        }
        ReviewCommand::Stats { queue } => {
            let stats = ReviewQueue::open(&queue)?.stats();
            match format {
                Format::Json => print_json(&json!(stats)),
                Format::Text => {
                    let mut text = String::new();
                    for (cxn, c) in &stats.per_cxn {
                        text.push_str(&format!("cxn {}: {} pending, {} accepted, {} rejected\n", cxn, c.pending, c.accepted, c.rejected));
                    }
                    for o in &stats.overlaps {
                        text.push_str(&format!(
                            "overlap in {}: accepted {} and rejected {} share tokens {:?}\n",
                            o.sent_id, o.accepted, o.rejected, o.tokens
                        ));
                    }
                    write_data(None, &text)
                }
            }
        }
        ReviewCommand::Export { queue, output } => {
            let accepted = ReviewQueue::open(&queue)?.export_accepted();
            let data = match format {
                Format::Text => accepted.iter().map(|m| m.to_json_line() + "\n").collect::<String>(),
                Format::Json => serde_json::to_string_pretty(&accepted)? + "\n",
            };
            write_data(output.as_deref(), &data)?;
            match (format, &output) {
                (Format::Json, Some(p)) => print_json(&json!({ "accepted": accepted.len(), "output": p.display().to_string() })),
                _ => Ok(()),
            }
        }
        ReviewCommand::Serve { queue, graph, corpus, bind, ui } => {
            let q = ReviewQueue::open(&queue)?;
            let g = load::graph(&graph, report)?;
            let corpus = load::corpus(&corpus, report)?;
            let bind = bind.or_else(|| config.review.bind.clone()).unwrap_or_else(|| DEFAULT_BIND.into());
            let addr: SocketAddr = bind.parse().with_context(|| format!("bad bind address `{}`", bind))?;
            let ui = ui.or_else(|| config.review.ui.clone());
            report.print(format);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("serving review API on http://{}", addr);
            rt.block_on(cxnforge_server::serve(AppState::new(g, corpus, q), addr, ui))?;
            Ok(())
        }
    }
}
