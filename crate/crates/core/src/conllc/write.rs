use std::fmt::Write;

use super::{Cxn, NodeConstraint};

/// Column header row written before each cxn table.
pub const COLUMN_HEADER: &str =
    "ID\tUD.FORM\tLEMMA\tUPOS\tFEATS\tHEAD\tDEPREL\tREQUIRED\tWITHOUT\tSEM.FEATS\tSEM.ROLES\tADJACENCY\tIDENTITY";

pub fn serialize_conllc(cxns: &[Cxn]) -> String {
    let mut out = String::new();
    for cxn in cxns {
        write_cxn(cxn, &mut out);
    }
    out
}

fn comment(out: &mut String, key: &str, value: &str) {
    if value.is_empty() {
        let _ = writeln!(out, "# {} =", key);
    } else {
        let _ = writeln!(out, "# {} = {}", key, value);
    }
}

fn join_ids(ids: &[u32]) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

fn write_cxn(cxn: &Cxn, out: &mut String) {
    comment(out, "cxn-id", &cxn.cxn_id.to_string());
    comment(out, "cxn-name", &cxn.name);
    comment(out, "function", &cxn.function);
    comment(out, "vertical_links", &join_ids(&cxn.vertical_links));
    comment(out, "horizontal_links", &join_ids(&cxn.horizontal_links));
    for (key, value) in &cxn.extra_metadata {
        comment(out, key, value);
    }
    out.push_str(COLUMN_HEADER);
    out.push('\n');
    for node in &cxn.nodes {
        write_node(node, out);
    }
    out.push('\n');
}

fn cell<T: ToString>(values: &[T], sep: &str) -> String {
    if values.is_empty() {
        "_".to_string()
    } else {
        values
            .iter()
            .map(T::to_string)
            .collect::<Vec<_>>()
            .join(sep)
    }
}

fn write_node(n: &NodeConstraint, out: &mut String) {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "_".to_string());
    let feats: Vec<String> = n.feats.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
    let identity: Vec<String> = n
        .identity
        .iter()
        .map(|(field, id)| format!("{}={}", field, id))
        .collect();
    let cells = [
        n.id.to_string(),
        opt(n.form.as_ref().map(|p| p.to_string())),
        opt(n.lemma.as_ref().map(|p| p.to_string())),
        cell(&n.upos, ","),
        cell(&feats, "|"),
        n.head.to_string(),
        cell(&n.deprel, ","),
        if n.required { "1" } else { "0" }.to_string(),
        cell(&n.without, "|"),
        cell(&n.sem_feats, ","),
        cell(&n.sem_roles, ","),
        opt(n.adjacency.map(|a| a.to_string())),
        cell(&identity, "|"),
    ];
    out.push_str(&cells.join("\t"));
    out.push('\n');
}
