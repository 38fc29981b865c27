use std::io::BufRead;

use super::{
    ConlluError, ConlluErrorKind, CxnMark, Features, Meta, MiscItem, OpaqueLine, Sentence, Token,
};
use crate::diag::Diagnostic;

/// A whole document: sentences in order plus the non-fatal findings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Parsed {
    pub sentences: Vec<Sentence>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSentence {
    pub sentence: Sentence,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses a complete CoNLL-U document. The first malformed sentence aborts
/// parsing; use [`SentenceReader`] to skip bad sentences instead.
pub fn parse_conllu(input: &str) -> Result<Parsed, ConlluError> {
    let mut parsed = Parsed::default();
    for item in SentenceReader::new(input.as_bytes()) {
        let ParsedSentence {
            sentence,
            diagnostics,
        } = item?;
        parsed.sentences.push(sentence);
        parsed.diagnostics.extend(diagnostics);
    }
    Ok(parsed)
}

/// Streams sentences from a reader, one blank-line-delimited block at a
/// time. An error for one block does not stop the iteration.
pub struct SentenceReader<R> {
    reader: R,
    line_no: usize,
    done: bool,
}

impl<R: BufRead> SentenceReader<R> {
    pub fn new(reader: R) -> Self {
        SentenceReader {
            reader,
            line_no: 0,
            done: false,
        }
    }

    fn next_block(&mut self) -> Result<Option<(usize, Vec<String>)>, ConlluError> {
        let mut lines = Vec::new();
        let mut first = 0;
        loop {
            let mut buf = String::new();
            let read = self.reader.read_line(&mut buf).map_err(|e| ConlluError {
                line: self.line_no + 1,
                kind: ConlluErrorKind::Io(e.to_string()),
            })?;
            if read == 0 {
                self.done = true;
                break;
            }
            self.line_no += 1;
            let line = buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                if lines.is_empty() {
                    continue;
                }
                break;
            }
            if lines.is_empty() {
                first = self.line_no;
            }
            lines.push(line.to_string());
        }
        Ok(if lines.is_empty() {
            None
        } else {
            Some((first, lines))
        })
    }
}

impl<R: BufRead> Iterator for SentenceReader<R> {
    type Item = Result<ParsedSentence, ConlluError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_block() {
            Ok(Some((first, lines))) => Some(parse_sentence_block(&lines, first)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Parses the lines of one sentence. `first_line` is the 1-based line number
/// of `lines[0]`, used for error locations.
pub fn parse_sentence_block<S: AsRef<str>>(
    lines: &[S],
    first_line: usize,
) -> Result<ParsedSentence, ConlluError> {
    let mut sentence = Sentence::default();
    let mut diagnostics = Vec::new();
    for (offset, line) in lines.iter().enumerate() {
        let line = line.as_ref();
        let line_no = first_line + offset;
        let err = |kind| ConlluError {
            line: line_no,
            kind,
        };
        if let Some(comment) = line.strip_prefix('#') {
            sentence.metadata.push(parse_meta(comment));
            continue;
        }
        let columns: Vec<&str> = line.split('\t').collect();
        if columns.len() != 10 {
            return Err(err(ConlluErrorKind::ColumnCount(columns.len())));
        }
        let id = columns[0];
        if is_opaque_id(id) {
            sentence.opaque.push(OpaqueLine {
                after_tokens: sentence.tokens.len(),
                line: line.to_string(),
            });
            continue;
        }
        let index: usize = id
            .parse()
            .ok()
            .filter(|&i| i > 0)
            .ok_or_else(|| err(ConlluErrorKind::InvalidId(id.to_string())))?;
        let expected = sentence.tokens.len() + 1;
        if index < expected {
            return Err(err(ConlluErrorKind::DuplicateIndex(index)));
        }
        if index > expected {
            return Err(err(ConlluErrorKind::OutOfSequence {
                expected,
                found: index,
            }));
        }
        let head: usize = columns[6]
            .parse()
            .map_err(|_| err(ConlluErrorKind::InvalidHead(columns[6].to_string())))?;
        let feats = parse_feats(columns[5]).map_err(err)?;
        let misc = parse_misc(columns[9], index, line_no, &mut diagnostics);
        sentence.tokens.push(Token {
            index,
            form: columns[1].to_string(),
            lemma: columns[2].to_string(),
            upos: columns[3].to_string(),
            xpos: columns[4].to_string(),
            feats,
            head,
            deprel: columns[7].to_string(),
            deps: columns[8].to_string(),
            misc,
        });
    }
    if sentence.tokens.is_empty() {
        return Err(ConlluError {
            line: first_line,
            kind: ConlluErrorKind::EmptySentence,
        });
    }
    if let Some(problem) = sentence.tree_problem() {
        let mut d = Diagnostic::warning("not-a-tree", problem.to_string()).at_line(first_line);
        if let Some(id) = sentence.sent_id() {
            d = d.with_subject(id.to_string());
        }
        diagnostics.push(d);
    }
    Ok(ParsedSentence {
        sentence,
        diagnostics,
    })
}

fn is_opaque_id(id: &str) -> bool {
    let check = |sep| {
        id.split_once(sep).is_some_and(|(a, b)| {
            !a.is_empty()
                && !b.is_empty()
                && a.bytes().all(|c| c.is_ascii_digit())
                && b.bytes().all(|c| c.is_ascii_digit())
        })
    };
    check('-') || check('.')
}

fn parse_meta(comment: &str) -> Meta {
    let body = comment.trim();
    match body.split_once('=') {
        Some((key, value)) if !key.trim().is_empty() => Meta::Pair {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        },
        _ => Meta::Bare(body.to_string()),
    }
}

fn parse_feats(column: &str) -> Result<Features, ConlluErrorKind> {
    let mut feats = Features::new();
    if column == "_" {
        return Ok(feats);
    }
    for item in column.split('|') {
        let (k, v) = item
            .split_once('=')
            .filter(|(k, v)| !k.is_empty() && !v.is_empty())
            .ok_or_else(|| ConlluErrorKind::InvalidFeature(item.to_string()))?;
        if feats.get(k).is_some() {
            return Err(ConlluErrorKind::DuplicateFeature(k.to_string()));
        }
        feats.insert(k, v);
    }
    Ok(feats)
}

fn parse_misc(
    column: &str,
    token: usize,
    line: usize,
    diagnostics: &mut Vec<Diagnostic>,
) -> Vec<MiscItem> {
    if column == "_" {
        return Vec::new();
    }
    column
        .split('|')
        .map(|item| {
            if item.starts_with("CXN=") {
                match item.parse::<CxnMark>() {
                    Ok(mark) => return MiscItem::Cxn(mark),
                    Err(msg) => diagnostics.push(
                        Diagnostic::warning("bad-cxn-mark", msg)
                            .with_subject(format!("token {}", token))
                            .at_line(line),
                    ),
                }
            }
            MiscItem::Other(item.to_string())
        })
        .collect()
}
