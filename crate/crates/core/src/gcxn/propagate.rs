use std::collections::BTreeSet;

use super::GcxnGraph;
use crate::conllu::{CxnMark, Sentence};
use crate::diag::Diagnostic;

impl GcxnGraph {
    /// Copies every cxn mark up the vertical edges: a token marked
    /// `CXN=M:L` gains `CXN=N:P` for each parent N of M whose correspondence
    /// sends P to L, and so on up to a fixpoint. Existing marks are never
    /// removed and running the propagation twice changes nothing.
    pub fn propagate_annotations(&self, sentence: &Sentence) -> (Sentence, Vec<Diagnostic>) {
        let mut out = sentence.clone();
        let mut diagnostics: BTreeSet<(String, String, String)> = BTreeSet::new();
        let subject = sentence.sent_id().unwrap_or_default().to_string();

        for token in &mut out.tokens {
            let mut frontier: Vec<CxnMark> = token.cxn_marks().cloned().collect();
            while let Some(mark) = frontier.pop() {
                if !self.entries.contains_key(&mark.cxn_id) {
                    diagnostics.insert((
                        "unknown-cxn".into(),
                        subject.clone(),
                        format!("marked for cxn {}, which is not in the graph", mark.cxn_id),
                    ));
                    continue;
                }
                for (parent, edge) in self.parents_of(mark.cxn_id) {
                    let Some(corr) = &edge.correspondence else {
                        diagnostics.insert((
                            "no-correspondence".into(),
                            subject.clone(),
                            format!("edge {} -> {} has no node correspondence; {} skipped", parent, mark.cxn_id, parent),
                        ));
                        continue;
                    };
                    let Some((&label, _)) = corr.iter().find(|(_, &child)| child == mark.label) else {
                        continue;
                    };
                    let lifted = CxnMark::new(parent, label);
                    if token.add_mark(lifted.clone()) {
                        frontier.push(lifted);
                    }
                }
            }
        }
        let diagnostics = diagnostics
            .into_iter()
            .map(|(rule, subject, message)| Diagnostic::warning(rule, message).with_subject(subject))
            .collect();
        (out, diagnostics)
    }
}
