use std::collections::{BTreeMap, BTreeSet};

use super::{
    ConllcError, ConllcErrorKind, Cxn, CxnTokenId, HeadRef, NegativeConstraint, NodeConstraint,
    Pattern, TokenField,
};
use crate::diag::Diagnostic;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedCxns {
    pub cxns: Vec<Cxn>,
    /// Non-fatal findings, e.g. labels outside the known UD inventory.
    pub diagnostics: Vec<Diagnostic>,
}

/// Header and node lines of one cxn before the cross-row checks.
#[derive(Debug, Default)]
pub(crate) struct RawCxn {
    pub first_line: usize,
    pub cxn_id: Option<u32>,
    pub name: Option<String>,
    pub function: Option<String>,
    pub vertical_links: Option<Vec<u32>>,
    pub horizontal_links: Option<Vec<u32>>,
    pub extra_metadata: Vec<(String, String)>,
    pub nodes: Vec<(usize, NodeConstraint)>,
}

/// Parses every cxn in a conll-c document.
pub fn parse_conllc(input: &str) -> Result<ParsedCxns, ConllcError> {
    let mut parsed = ParsedCxns::default();
    for raw in parse_raw(input)? {
        let cxn = finish(raw)?;
        parsed
            .diagnostics
            .extend(super::validate::label_warnings(&cxn));
        parsed.cxns.push(cxn);
    }
    Ok(parsed)
}

pub(crate) fn parse_raw(input: &str) -> Result<Vec<RawCxn>, ConllcError> {
    let mut out = Vec::new();
    let mut current = RawCxn::default();
    let mut started = false;
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            // A comment-only block belongs to the table that follows it.
            if !current.nodes.is_empty() {
                out.push(std::mem::take(&mut current));
                started = false;
            }
            continue;
        }
        if !started {
            current.first_line = line_no;
            started = true;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            parse_comment(comment, line_no, &mut current)?;
            continue;
        }
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cells[0].eq_ignore_ascii_case("ID") {
            continue;
        }
        if cells.len() != 13 {
            return Err(ConllcErrorKind::ColumnCount(cells.len()).at(line_no));
        }
        let node = parse_node(&cells, line_no)?;
        if current.nodes.iter().any(|(_, n)| n.id == node.id) {
            return Err(ConllcErrorKind::DuplicateNodeId(node.id).at(line_no));
        }
        current.nodes.push((line_no, node));
    }
    if started {
        out.push(current);
    }
    Ok(out)
}

fn parse_comment(comment: &str, line: usize, raw: &mut RawCxn) -> Result<(), ConllcError> {
    let Some((key, value)) = comment.split_once('=') else {
        // Free-text comment without a key: keep it as metadata with an
        // empty value so it survives a round trip.
        raw.extra_metadata.push((comment.trim().to_string(), String::new()));
        return Ok(());
    };
    let key = key.trim();
    let value = value.trim();
    match canonical_key(key).as_str() {
        "cxn_id" => {
            raw.cxn_id = Some(parse_cxn_id(value).map_err(|k| k.at(line))?);
        }
        "cxn_name" => raw.name = Some(value.to_string()),
        "function" => raw.function = Some(value.to_string()),
        "vertical_links" => raw.vertical_links = Some(parse_links(value).map_err(|k| k.at(line))?),
        "horizontal_links" => {
            raw.horizontal_links = Some(parse_links(value).map_err(|k| k.at(line))?)
        }
        _ => raw.extra_metadata.push((key.to_string(), value.to_string())),
    }
    Ok(())
}

/// Maps the accepted spellings of the header keys onto one name.
pub(crate) fn canonical_key(key: &str) -> String {
    let k = key.trim().to_ascii_lowercase().replace('-', "_");
    match k.as_str() {
        "cxn_id" | "cnx_id" => "cxn_id".into(),
        "cxn_name" | "cnx_name" | "name" => "cxn_name".into(),
        "function" | "cxn_function" => "function".into(),
        "vertical_links" | "horizontal_links" => k,
        _ => key.to_string(),
    }
}

pub(crate) fn parse_cxn_id(value: &str) -> Result<u32, ConllcErrorKind> {
    value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConllcErrorKind::InvalidCxnId(value.to_string()))
}

pub(crate) fn parse_links(value: &str) -> Result<Vec<u32>, ConllcErrorKind> {
    value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(parse_cxn_id)
        .collect()
}

fn parse_node(cells: &[&str], line: usize) -> Result<NodeConstraint, ConllcError> {
    let invalid = |column: &'static str, value: &str| {
        ConllcErrorKind::InvalidValue {
            column,
            value: value.to_string(),
        }
        .at(line)
    };
    let id: CxnTokenId = cells[0]
        .parse()
        .map_err(|_| ConllcErrorKind::InvalidNodeId(cells[0].to_string()).at(line))?;
    let pattern = |cell: &str| -> Result<Option<Pattern>, ConllcError> {
        if is_unset(cell) {
            return Ok(None);
        }
        Pattern::parse(cell).map(Some).map_err(|e| {
            ConllcErrorKind::BadRegex {
                pattern: cell.to_string(),
                message: e.to_string(),
            }
            .at(line)
        })
    };
    let form = pattern(cells[1])?;
    let lemma = pattern(cells[2])?;
    let upos = comma_list(cells[3]);
    let feats = if is_unset(cells[4]) {
        Vec::new()
    } else {
        cells[4]
            .split('|')
            .map(|item| {
                item.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                    .ok_or_else(|| invalid("FEATS", item))
            })
            .collect::<Result<_, _>>()?
    };
    let head = match cells[5] {
        "0" | "_" => HeadRef::Root,
        other => HeadRef::Node(other.parse().map_err(|_| invalid("HEAD", other))?),
    };
    let deprel = comma_list(cells[6]);
    let required = match cells[7] {
        "1" | "_" => true,
        "0" => false,
        other => return Err(invalid("REQUIRED", other)),
    };
    let without = if is_unset(cells[8]) {
        Vec::new()
    } else {
        cells[8]
            .split('|')
            .map(|item| parse_exclusion(item).ok_or_else(|| invalid("WITHOUT", item)))
            .collect::<Result<_, _>>()?
    };
    let sem_feats = comma_list(cells[9]);
    let sem_roles = comma_list(cells[10]);
    let adjacency = if is_unset(cells[11]) {
        None
    } else {
        Some(cells[11].parse().map_err(|_| invalid("ADJACENCY", cells[11]))?)
    };
    let identity = if is_unset(cells[12]) {
        Vec::new()
    } else {
        cells[12]
            .split('|')
            .map(|item| {
                let (field, target) = item.split_once('=').ok_or_else(|| invalid("IDENTITY", item))?;
                let field: TokenField = field.parse().map_err(|_| invalid("IDENTITY", item))?;
                let target = target.trim().parse().map_err(|_| invalid("IDENTITY", item))?;
                Ok((field, target))
            })
            .collect::<Result<_, ConllcError>>()?
    };
    Ok(NodeConstraint {
        id,
        form,
        lemma,
        upos,
        feats,
        head,
        deprel,
        required,
        without,
        sem_feats,
        sem_roles,
        adjacency,
        identity,
    })
}

fn parse_exclusion(item: &str) -> Option<NegativeConstraint> {
    let (key, value) = item.trim().split_once('=')?;
    let value = value.trim();
    if value.is_empty() {
        return None;
    }
    let key = key.trim().to_ascii_uppercase();
    if key == "CHILDREN" || key == "CHILDREN:DEPREL" {
        return Some(NegativeConstraint::Children {
            deprel: value.to_string(),
        });
    }
    let field: TokenField = key.parse().ok()?;
    if field == TokenField::Feats && !value.contains('=') {
        return None;
    }
    Some(NegativeConstraint::Field {
        field,
        value: value.to_string(),
    })
}

fn is_unset(cell: &str) -> bool {
    cell.is_empty() || cell == "_"
}

fn comma_list(cell: &str) -> Vec<String> {
    if is_unset(cell) {
        return Vec::new();
    }
    cell.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// Turns a raw block into a [`Cxn`], enforcing the structural invariants
/// that make a block unusable when broken.
pub(crate) fn finish(raw: RawCxn) -> Result<Cxn, ConllcError> {
    let cxn_id = raw
        .cxn_id
        .ok_or_else(|| ConllcErrorKind::MissingCxnId.at(raw.first_line))?;
    if raw.nodes.is_empty() {
        return Err(ConllcErrorKind::NoNodes.at(raw.first_line));
    }
    let declared: BTreeSet<CxnTokenId> = raw.nodes.iter().map(|(_, n)| n.id).collect();
    for (line, node) in &raw.nodes {
        if let HeadRef::Node(target) = node.head {
            if !declared.contains(&target) {
                return Err(ConllcErrorKind::UndeclaredHead {
                    node: node.id,
                    target,
                }
                .at(*line));
            }
        }
    }
    let heads: BTreeMap<CxnTokenId, HeadRef> =
        raw.nodes.iter().map(|(_, n)| (n.id, n.head)).collect();
    if let Some(cycle) = find_head_cycle(&heads) {
        let line = raw
            .nodes
            .iter()
            .find(|(_, n)| n.id == cycle[0])
            .map_or(raw.first_line, |(l, _)| *l);
        let shown: Vec<String> = cycle.iter().map(|c| c.to_string()).collect();
        return Err(ConllcErrorKind::HeadCycle(shown.join(" -> ")).at(line));
    }
    Ok(Cxn {
        cxn_id,
        name: raw.name.unwrap_or_default(),
        function: raw.function.unwrap_or_default(),
        vertical_links: raw.vertical_links.unwrap_or_default(),
        horizontal_links: raw.horizontal_links.unwrap_or_default(),
        extra_metadata: raw.extra_metadata,
        nodes: raw.nodes.into_iter().map(|(_, n)| n).collect(),
    })
}

/// Returns the nodes of some head cycle, if there is one. Heads pointing at
/// undeclared nodes end the walk.
pub(crate) fn find_head_cycle(heads: &BTreeMap<CxnTokenId, HeadRef>) -> Option<Vec<CxnTokenId>> {
    let mut done = BTreeSet::new();
    for &start in heads.keys() {
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            if done.contains(&cur) {
                break;
            }
            if let Some(pos) = path.iter().position(|&p| p == cur) {
                return Some(path[pos..].to_vec());
            }
            path.push(cur);
            match heads.get(&cur) {
                Some(HeadRef::Node(next)) => cur = *next,
                _ => break,
            }
        }
        done.extend(path);
    }
    None
}
