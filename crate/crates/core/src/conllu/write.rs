use std::fmt::Write;

use super::{Meta, Sentence, Token};

/// Writes sentences as CoNLL-U: single tabs between columns, a blank line
/// after every sentence.
pub fn serialize_conllu(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        serialize_sentence(s, &mut out);
    }
    out
}

/// Appends one sentence (including its trailing blank line) to `out`.
pub fn serialize_sentence(sentence: &Sentence, out: &mut String) {
    for meta in &sentence.metadata {
        match meta {
            Meta::Pair { key, value } if value.is_empty() => {
                let _ = writeln!(out, "# {} =", key);
            }
            Meta::Pair { key, value } => {
                let _ = writeln!(out, "# {} = {}", key, value);
            }
            Meta::Bare(text) => {
                let _ = writeln!(out, "# {}", text);
            }
        }
    }
    let mut opaque = sentence.opaque.iter().peekable();
    for position in 0..=sentence.tokens.len() {
        while let Some(line) = opaque.next_if(|o| o.after_tokens == position) {
            out.push_str(&line.line);
            out.push('\n');
        }
        if let Some(token) = sentence.tokens.get(position) {
            write_token(token, out);
        }
    }
    // Opaque lines recorded past the end, should a caller have built one.
    for line in opaque {
        out.push_str(&line.line);
        out.push('\n');
    }
    out.push('\n');
}

fn write_token(t: &Token, out: &mut String) {
    let misc = if t.misc.is_empty() {
        "_".to_string()
    } else {
        t.misc
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join("|")
    };
    let _ = writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        t.index, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel, t.deps, misc
    );
}
