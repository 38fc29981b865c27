//! The yaml entry that wraps a conll-c block in the construction graph.
//!
//! ```yaml
//! cxn_id: 68
//! cxn_name: saltare fuori che V
//! function: ref:D is found out unexpectedly
//! vertical_links: []
//! horizontal_links: [167]
//! register: informal
//! conll_c: |
//!   # cxn-id = 68
//!   ...
//! ```
//!
//! Top-level keys and the block's own comments must agree where both are
//! given; whichever side is missing is filled from the other.

use serde_yaml::{Mapping, Value};

use super::parse::{canonical_key, finish, parse_links, parse_raw};
use super::{serialize_conllc, ConllcError, ConllcErrorKind, Cxn};

fn yaml_error(e: serde_yaml::Error) -> ConllcError {
    ConllcErrorKind::Yaml(e.to_string()).at(e.location().map_or(0, |l| l.line()))
}

fn scalar_string(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => serde_yaml::to_string(other)
            .map(|s| s.trim().to_string())
            .unwrap_or_default(),
    }
}

fn links(value: &Value, key: &'static str) -> Result<Vec<u32>, ConllcError> {
    let invalid = |v: &Value| {
        ConllcErrorKind::InvalidValue {
            column: key,
            value: scalar_string(v),
        }
        .at(0)
    };
    match value {
        Value::Null => Ok(Vec::new()),
        Value::Sequence(items) => items
            .iter()
            .map(|item| match item {
                Value::Number(n) => n
                    .as_u64()
                    .and_then(|n| u32::try_from(n).ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(|| invalid(item)),
                Value::String(s) => s.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| invalid(item)),
                _ => Err(invalid(item)),
            })
            .collect(),
        other => parse_links(&scalar_string(other)).map_err(|k| k.at(0)),
    }
}

fn mismatch(field: &str, yaml: String, block: String) -> ConllcError {
    ConllcErrorKind::Mismatch {
        field: field.to_string(),
        yaml,
        block,
    }
    .at(0)
}

fn merge_text(field: &str, yaml: Option<String>, block: &mut Option<String>) -> Result<(), ConllcError> {
    match (yaml, block.as_ref()) {
        (Some(y), Some(b)) if !y.is_empty() && !b.is_empty() && y.trim() != b.trim() => {
            Err(mismatch(field, y, b.clone()))
        }
        (Some(y), Some(b)) if b.is_empty() => {
            *block = Some(y);
            Ok(())
        }
        (Some(y), None) => {
            *block = Some(y);
            Ok(())
        }
        _ => Ok(()),
    }
}

fn merge_links(field: &str, yaml: Option<Vec<u32>>, block: &mut Option<Vec<u32>>) -> Result<(), ConllcError> {
    let show = |v: &[u32]| format!("{:?}", v);
    match (yaml, block.as_ref()) {
        (Some(y), Some(b)) => {
            let (mut ys, mut bs) = (y.clone(), b.clone());
            ys.sort_unstable();
            ys.dedup();
            bs.sort_unstable();
            bs.dedup();
            if ys != bs {
                return Err(mismatch(field, show(&y), show(b)));
            }
            Ok(())
        }
        (Some(y), None) => {
            *block = Some(y);
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Reads one yaml entry and the conll-c block it embeds.
pub fn load_yaml_entry(input: &str) -> Result<Cxn, ConllcError> {
    let value: Value = serde_yaml::from_str(input).map_err(yaml_error)?;
    let Value::Mapping(map) = value else {
        return Err(ConllcErrorKind::Yaml("entry is not a mapping".into()).at(0));
    };

    let mut yaml_id = None;
    let mut yaml_name = None;
    let mut yaml_function = None;
    let mut yaml_vertical = None;
    let mut yaml_horizontal = None;
    let mut block = None;
    let mut extra = Vec::new();
    for (key, value) in &map {
        let key = scalar_string(key);
        if key == "conll_c" || key == "conll-c" {
            block = Some(scalar_string(value));
            continue;
        }
        match canonical_key(&key).as_str() {
            "cxn_id" => {
                yaml_id = Some(
                    super::parse::parse_cxn_id(&scalar_string(value)).map_err(|k| k.at(0))?,
                )
            }
            "cxn_name" => yaml_name = Some(scalar_string(value)),
            "function" => yaml_function = Some(scalar_string(value)),
            "vertical_links" => yaml_vertical = Some(links(value, "vertical_links")?),
            "horizontal_links" => yaml_horizontal = Some(links(value, "horizontal_links")?),
            _ => extra.push((key, scalar_string(value))),
        }
    }
    let block = block.ok_or_else(|| ConllcErrorKind::MissingYamlKey("conll_c").at(0))?;
    let mut raws = parse_raw(&block)?;
    if raws.len() != 1 {
        return Err(ConllcErrorKind::BlockCount(raws.len()).at(0));
    }
    let mut raw = raws.remove(0);

    match (yaml_id, raw.cxn_id) {
        (Some(y), Some(b)) if y != b => {
            return Err(ConllcErrorKind::Mismatch {
                field: "id".into(),
                yaml: y.to_string(),
                block: b.to_string(),
            }
            .at(0))
        }
        (Some(y), None) => raw.cxn_id = Some(y),
        (None, _) => return Err(ConllcErrorKind::MissingYamlKey("cxn_id").at(0)),
        _ => {}
    }
    merge_text("cxn_name", yaml_name, &mut raw.name)?;
    merge_text("function", yaml_function, &mut raw.function)?;
    merge_links("vertical_links", yaml_vertical, &mut raw.vertical_links)?;
    merge_links("horizontal_links", yaml_horizontal, &mut raw.horizontal_links)?;
    for (key, value) in extra {
        match raw.extra_metadata.iter().find(|(k, _)| *k == key) {
            Some((_, existing)) if *existing != value => {
                return Err(mismatch(&key, value, existing.clone()))
            }
            Some(_) => {}
            None => raw.extra_metadata.push((key, value)),
        }
    }
    finish(raw)
}

/// Writes a cxn as a yaml entry with the conll-c block embedded literally.
pub fn to_yaml_entry(cxn: &Cxn) -> String {
    let mut map = Mapping::new();
    let ids = |v: &[u32]| Value::Sequence(v.iter().map(|&i| Value::from(i)).collect());
    map.insert("cxn_id".into(), Value::from(cxn.cxn_id));
    map.insert("cxn_name".into(), cxn.name.clone().into());
    map.insert("function".into(), cxn.function.clone().into());
    map.insert("vertical_links".into(), ids(&cxn.vertical_links));
    map.insert("horizontal_links".into(), ids(&cxn.horizontal_links));
    for (k, v) in &cxn.extra_metadata {
        map.insert(k.clone().into(), v.clone().into());
    }
    map.insert("conll_c".into(), serialize_conllc(std::slice::from_ref(cxn)).into());
    serde_yaml::to_string(&Value::Mapping(map)).expect("string mapping serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOCK: &str = "# cxn-id = 68\n# cxn-name = saltare fuori che V\nA\t_\tsaltare\tVERB\t_\t0\troot\t1\t_\t_\t_\t_\t_\n";

    fn entry(id: u32, extra: &str) -> String {
        let indented: String = BLOCK.lines().map(|l| format!("  {}\n", l)).collect();
        format!("cxn_id: {}\ncxn_name: saltare fuori che V\nvertical_links: []\nhorizontal_links: 167\n{}conll_c: |\n{}", id, extra, indented)
    }

    #[test]
    fn matching_entry_loads() {
        let cxn = load_yaml_entry(&entry(68, "")).unwrap();
        assert_eq!(cxn.cxn_id, 68);
        assert_eq!(cxn.horizontal_links, vec![167]);
    }

    #[test]
    fn id_mismatch() {
        let err = load_yaml_entry(&entry(99, "")).unwrap_err();
        assert!(err.to_string().contains("id mismatch"), "{}", err);
    }

    #[test]
    fn extra_metadata_is_kept() {
        let cxn = load_yaml_entry(&entry(68, "register: informal\n")).unwrap();
        assert_eq!(cxn.metadata("register"), Some("informal"));
    }

    #[test]
    fn missing_block() {
        let err = load_yaml_entry("cxn_id: 3\n").unwrap_err();
        assert_eq!(err.kind, ConllcErrorKind::MissingYamlKey("conll_c"));
    }

    #[test]
    fn entry_round_trip() {
        let cxn = load_yaml_entry(&entry(68, "register: informal\n")).unwrap();
        let again = load_yaml_entry(&to_yaml_entry(&cxn)).unwrap();
        assert_eq!(again, cxn);
    }
}
