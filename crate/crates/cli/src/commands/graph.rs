use anyhow::bail;
use cxnforge_core::gcxn::subsumes;
use cxnforge_core::{GcxnGraph, Severity};
use serde_json::json;

use crate::load;
use crate::output::{print_json, write_data, Format, Report};
use crate::GraphCommand;

fn edges(v: &[(u32, u32)]) -> String {
    v.iter().map(|(p, c)| format!("{} -> {}", p, c)).collect::<Vec<_>>().join(", ")
}

pub fn run(cmd: GraphCommand, format: Format, report: &mut Report) -> anyhow::Result<()> {
    match cmd {
        GraphCommand::Check { graph } => {
            let g = load::graph(&graph, report)?;
            report.extend(Some(&graph), g.check_consistency());
            let summary = json!({
                "cxns": g.len(),
                "vertical": g.vertical_edges().count(),
                "horizontal": g.horizontal_edges().count(),
                "errors": report.errors(),
                "warnings": report.count(Severity::Warning),
            });
            match format {
                Format::Json => print_json(&summary),
                Format::Text => write_data(
                    None,
                    &format!(
                        "{} cxns, {} vertical links, {} horizontal links, {} errors, {} warnings\n",
                        summary["cxns"], summary["vertical"], summary["horizontal"], summary["errors"], summary["warnings"]
                    ),
                ),
            }
        }
        GraphCommand::Insert { graph, cxns, dry_run } => {
            if !graph.is_dir() {
                bail!("{}: insert needs a directory of entries", graph.display());
            }
            let mut g = load::graph(&graph, report)?;
            let (mut added, mut removed, mut reduced) = (Vec::new(), Vec::new(), Vec::new());
            for c in load::cxns(&cxns, report)? {
                let (next, delta) = g.insert(c);
                g = next;
                added.extend(delta.added);
                removed.extend(delta.removed);
                reduced.extend(delta.reduced);
                report.extend(Some(&cxns), delta.diagnostics);
            }
            if !dry_run {
                g.save_dir(&graph)?;
            }
            match format {
                Format::Json => print_json(&json!({ "added": added, "removed": removed, "reduced": reduced, "saved": !dry_run })),
                Format::Text => write_data(
                    None,
                    &format!("added: {}\nremoved: {}\nreduced: {}\n", edges(&added), edges(&removed), edges(&reduced)),
                ),
            }
        }
        GraphCommand::Subsumes { graph, parent, child } => {
            let g = load::graph(&graph, report)?;
            let (Some(p), Some(c)) = (g.entry(parent), g.entry(child)) else {
                bail!("cxn {} or {} is not in the graph", parent, child);
            };
            let corr = subsumes(p, c);
            match format {
                Format::Json => print_json(&json!({
                    "parent": parent,
                    "child": child,
                    "subsumes": corr.is_some(),
                    "correspondence": corr.as_ref().map(|m| m.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect::<std::collections::BTreeMap<_, _>>()),
                })),
                Format::Text => {
                    let line = match &corr {
                        Some(m) => {
                            let pairs: Vec<String> = m.iter().map(|(a, b)| format!("{}={}", a, b)).collect();
                            format!("{} subsumes {}: {}\n", parent, child, pairs.join(","))
                        }
                        None => format!("{} does not subsume {}\n", parent, child),
                    };
                    write_data(None, &line)
                }
            }
        }
        GraphCommand::Export { graph } => {
            let g: GcxnGraph = load::graph(&graph, report)?;
            match format {
                Format::Json => print_json(&g.to_json()),
                Format::Text => write_data(None, &g.to_dot()),
            }
        }
    }
}
