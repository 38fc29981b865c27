//! Shared fixtures and random instance generators for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use cxnforge_core::conllc::{
    parse_conllc, Cxn, CxnTokenId, HeadRef, NegativeConstraint, NodeConstraint, Pattern, TokenField,
};
use cxnforge_core::conllu::{parse_conllu, CxnMark, Features, Meta, MiscItem, Sentence, Token};
use cxnforge_core::gcxn::Correspondence;
use cxnforge_core::matcher::Binding;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn cxn68() -> Cxn {
    parse_conllc(&fixture("saltare_entries.conllc")).unwrap().cxns.remove(0)
}

pub fn cxn345() -> Cxn {
    parse_conllc(&fixture("cxn345.conllc")).unwrap().cxns.remove(0)
}

/// The saltare sentence as printed.
pub fn saltare_printed() -> Sentence {
    parse_conllu(&fixture("saltare_printed.conllu")).unwrap().sentences.remove(0)
}

pub fn id(s: &str) -> CxnTokenId {
    s.parse().unwrap()
}

/// The saltare sentence with token 14 reanalysed so that cxn 68 holds: a VERB heading
/// a csubj relation.
pub fn saltare_reanalysed() -> Sentence {
    let mut s = saltare_printed();
    let t = &mut s.tokens[13];
    t.upos = "VERB".into();
    t.deprel = "csubj".into();
    s
}

pub fn strip_marks(s: &mut Sentence) {
    for t in &mut s.tokens {
        t.misc.retain(|m| !matches!(m, MiscItem::Cxn(_)));
    }
}

/// cxn 68 generalized: no UPOS on D, no FEATS on A.
pub fn generalized68(cxn_id: u32) -> Cxn {
    let mut g = cxn68();
    g.cxn_id = cxn_id;
    g.name = "saltare fuori che (general)".into();
    g.horizontal_links.clear();
    g.node_mut(id("D")).unwrap().upos.clear();
    g.node_mut(id("A")).unwrap().feats.clear();
    g
}

const LEMMAS: [&str; 4] = ["a", "b", "c", "d"];
const UPOS: [&str; 4] = ["NOUN", "VERB", "ADJ", "ADV"];
const DEPRELS: [&str; 4] = ["nsubj", "obj", "advmod", "mark"];

fn pick<'a, R: Rng>(rng: &mut R, from: &[&'a str]) -> &'a str {
    from.choose(rng).unwrap()
}

fn subset<R: Rng>(rng: &mut R, from: &[&str], max: usize) -> Vec<String> {
    let n = rng.gen_range(1..=max);
    let mut v: Vec<String> = from.choose_multiple(rng, n).map(|s| s.to_string()).collect();
    v.sort();
    v
}

/// A random rooted tree over a tiny vocabulary, so that random patterns
/// match often enough to be interesting.
pub fn random_sentence<R: Rng>(rng: &mut R, max_tokens: usize) -> Sentence {
    let n = rng.gen_range(1..=max_tokens);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n + 1];
    for i in 1..n {
        heads[order[i]] = order[rng.gen_range(0..i)];
    }
    let tokens = (1..=n)
        .map(|i| {
            let lemma = pick(rng, &LEMMAS);
            let form = if rng.gen_bool(0.3) { lemma.to_uppercase() } else { lemma.to_string() };
            let deprel = if heads[i] == 0 { "root" } else { pick(rng, &DEPRELS) };
            let mut t = Token::new(i, &form, lemma, pick(rng, &UPOS), heads[i], deprel);
            if rng.gen_bool(0.5) {
                t.feats.insert("Number", if rng.gen_bool(0.5) { "Sing" } else { "Plur" });
            }
            t
        })
        .collect();
    Sentence {
        metadata: vec![Meta::Pair {
            key: "sent_id".into(),
            value: format!("r{}", rng.gen::<u32>()),
        }],
        tokens,
        opaque: Vec::new(),
    }
}

/// A random valid cxn over the same vocabulary.
pub fn random_cxn<R: Rng>(rng: &mut R, max_nodes: usize) -> Cxn {
    let n = rng.gen_range(1..=max_nodes);
    let ids: Vec<CxnTokenId> = (0..n)
        .map(|i| CxnTokenId::word((b'A' + i as u8) as char).unwrap())
        .collect();
    let mut nodes: Vec<NodeConstraint> = Vec::new();
    for (i, &nid) in ids.iter().enumerate() {
        let head = if i == 0 { HeadRef::Root } else { HeadRef::Node(ids[rng.gen_range(0..i)]) };
        let mut node = NodeConstraint::unconstrained(nid, head);
        if i > 0 {
            let parent_required = match head {
                HeadRef::Node(h) => nodes.iter().find(|n| n.id == h).unwrap().required,
                HeadRef::Root => true,
            };
            node.required = parent_required && rng.gen_bool(0.6);
            if !parent_required {
                node.required = false;
            }
            if rng.gen_bool(0.5) {
                node.deprel = subset(rng, &DEPRELS, 2);
            }
        }
        if rng.gen_bool(0.4) {
            node.lemma = Some(if rng.gen_bool(0.2) {
                Pattern::parse("[ab]").unwrap()
            } else {
                let lemmas = subset(rng, &LEMMAS, 2);
                Pattern::Literals(lemmas)
            });
        }
        if rng.gen_bool(0.15) {
            node.form = Some(Pattern::parse("[A-Z]+").unwrap());
        }
        if rng.gen_bool(0.4) {
            node.upos = subset(rng, &UPOS, 3);
        }
        if rng.gen_bool(0.2) {
            node.feats = vec![("Number".into(), "Sing".into())];
        }
        if rng.gen_bool(0.2) {
            node.without.push(if rng.gen_bool(0.5) {
                NegativeConstraint::Children {
                    deprel: pick(rng, &DEPRELS).into(),
                }
            } else {
                NegativeConstraint::Field {
                    field: TokenField::Upos,
                    value: pick(rng, &UPOS).into(),
                }
            });
        }
        if i > 0 && rng.gen_bool(0.2) {
            node.adjacency = Some(ids[rng.gen_range(0..i)]);
        }
        if i > 0 && rng.gen_bool(0.15) {
            node.identity.push((TokenField::Lemma, ids[rng.gen_range(0..i)]));
        }
        nodes.push(node);
    }
    Cxn {
        cxn_id: rng.gen_range(1..1000),
        name: String::new(),
        function: String::new(),
        vertical_links: vec![],
        horizontal_links: vec![],
        extra_metadata: vec![],
        nodes,
    }
}

/// Marks the tokens of `binding` with `cxn_id`.
pub fn mark(s: &mut Sentence, cxn_id: u32, pairs: &[(&str, usize)]) {
    for (label, t) in pairs {
        s.tokens[t - 1].add_mark(CxnMark::new(cxn_id, id(label)));
    }
}

pub fn feats(pairs: &[(&str, &str)]) -> Features {
    let mut f = Features::new();
    for (k, v) in pairs {
        f.insert(*k, *v);
    }
    f
}

/// A child binding read through a parent-to-child correspondence.
pub fn compose(corr: &Correspondence, child: &Binding) -> Binding {
    corr.iter()
        .filter_map(|(p, c)| child.get(c).map(|t| (*p, *t)))
        .collect()
}

/// Six cxns related by generalization, for graph tests.
pub fn fixture_library() -> Vec<Cxn> {
    let small = parse_conllc(
        "# cxn-id = 901\nX\t_\tsaltare\tVERB\t_\t0\t_\t1\t_\t_\t_\t_\t_\nY\t_\t_\t_\t_\tX\tadvmod\t1\t_\t_\t_\t_\t_\n",
    )
    .unwrap()
    .cxns
    .remove(0);
    let mut regex = generalized68(902);
    regex.node_mut(id("A")).unwrap().lemma = Some(Pattern::parse("salt.*").unwrap());
    let mut loose = generalized68(903);
    loose.nodes.retain(|n| n.id != id("B"));
    vec![cxn68(), generalized68(900), cxn345(), small, regex, loose]
}

/// `n` small sentences with sent_ids `s0..` and sources `doc0..doc{sources-1}`.
pub fn synthetic_corpus(n: usize, sources: usize) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    (0..n)
        .map(|i| {
            let mut s = random_sentence(&mut rng, 3);
            s.metadata = vec![
                Meta::Pair { key: "sent_id".into(), value: format!("s{}", i) },
                Meta::Pair { key: "source".into(), value: format!("doc{}", i % sources) },
            ];
            s
        })
        .collect()
}
