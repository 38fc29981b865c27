mod common;

use std::collections::BTreeSet;

use common::*;
use cxnforge_core::conllc::{Cxn, HeadRef, Pattern};
use cxnforge_core::corpus::{apply_matches, validate_annotations, OverwritePolicy};
use cxnforge_core::gcxn::{subsumes, GcxnGraph};
use cxnforge_core::matcher::{check_binding, compile, match_sentence};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Drops constraints at random; the result subsumes `cxn` by construction.
fn generalize<R: Rng>(rng: &mut R, cxn: &Cxn, new_id: u32) -> Cxn {
    let mut g = cxn.clone();
    g.cxn_id = new_id;
    for n in &mut g.nodes {
        if rng.gen_bool(0.3) {
            n.lemma = None;
        }
        if let Some(Pattern::Literals(v)) = &mut n.lemma {
            if rng.gen_bool(0.3) && !v.contains(&"d".to_string()) {
                v.push("d".into());
            }
        }
        if rng.gen_bool(0.3) {
            n.form = None;
        }
        if rng.gen_bool(0.3) {
            n.upos.clear();
        }
        if rng.gen_bool(0.3) {
            n.feats.clear();
        }
        if rng.gen_bool(0.3) {
            n.deprel.clear();
        }
        if rng.gen_bool(0.3) {
            n.without.clear();
        }
        if rng.gen_bool(0.3) {
            n.adjacency = None;
        }
        if rng.gen_bool(0.3) {
            n.identity.clear();
        }
    }
    // Drop a leaf that nothing refers to.
    if g.nodes.len() > 1 && rng.gen_bool(0.4) {
        let referenced: BTreeSet<_> = g
            .nodes
            .iter()
            .flat_map(|n| {
                let head = match n.head {
                    HeadRef::Node(h) => Some(h),
                    HeadRef::Root => None,
                };
                head.into_iter().chain(n.adjacency).chain(n.identity.iter().map(|(_, o)| *o))
            })
            .collect();
        let leaves: Vec<_> = g
            .nodes
            .iter()
            .filter(|n| !n.is_cxn_root() && !referenced.contains(&n.id))
            .map(|n| n.id)
            .collect();
        if let Some(&drop) = leaves.choose(rng) {
            g.nodes.retain(|n| n.id != drop);
        }
    }
    g
}

#[test]
fn subsumption_is_reflexive_and_transitive_on_fixtures() {
    let lib = fixture_library();
    for c in &lib {
        let corr = subsumes(c, c).unwrap();
        assert!(corr.iter().all(|(a, b)| a == b), "cxn {}", c.cxn_id);
    }
    for a in &lib {
        for b in &lib {
            for c in &lib {
                if subsumes(a, b).is_some() && subsumes(b, c).is_some() {
                    assert!(subsumes(a, c).is_some(), "{} > {} > {}", a.cxn_id, b.cxn_id, c.cxn_id);
                }
            }
        }
    }
    assert!(subsumes(&lib[3], &lib[0]).is_some());
    assert!(subsumes(&lib[4], &lib[1]).is_some());
    assert!(subsumes(&lib[1], &lib[4]).is_none());
}

#[test]
fn fixture_soundness_against_evidence() {
    let lib = fixture_library();
    let corpus = [saltare_printed(), saltare_reanalysed()];
    let mut checked = 0;
    for parent in &lib {
        for child in &lib {
            let Some(corr) = subsumes(parent, child) else { continue };
            let p = compile(child).unwrap();
            for s in &corpus {
                for m in match_sentence(&p, s) {
                    let b = compose(&corr, &m.binding);
                    let failed: Vec<_> = check_binding(parent, s, &b).into_iter().filter(|c| c.failed()).collect();
                    assert!(failed.is_empty(), "{} over {}: {:?}", parent.cxn_id, child.cxn_id, failed);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generalization_is_recognized_and_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let child = random_cxn(&mut rng, 4);
        let parent = generalize(&mut rng, &child, 5000);
        let corr = subsumes(&parent, &child);
        prop_assert!(corr.is_some());
        let corr = corr.unwrap();
        let p = compile(&child).unwrap();
        for _ in 0..5 {
            let s = random_sentence(&mut rng, 12);
            for m in match_sentence(&p, &s) {
                let b = compose(&corr, &m.binding);
                prop_assert!(check_binding(&parent, &s, &b).iter().all(|c| !c.failed()));
            }
        }
    }

    #[test]
    fn subsumption_on_random_pairs_is_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_cxn(&mut rng, 3);
        let b = random_cxn(&mut rng, 3);
        if let Some(corr) = subsumes(&a, &b) {
            let p = compile(&b).unwrap();
            for _ in 0..5 {
                let s = random_sentence(&mut rng, 10);
                for m in match_sentence(&p, &s) {
                    let bind = compose(&corr, &m.binding);
                    prop_assert!(check_binding(&a, &s, &bind).iter().all(|c| !c.failed()));
                }
            }
        }
    }

    #[test]
    fn incremental_insertion_yields_the_hasse_diagram(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = ["a", "b", "c", "d"];
        let count = rng.gen_range(2..7);
        let cxns: Vec<Cxn> = (0..count)
            .map(|i| {
                let mut c = random_cxn(&mut rng, 1);
                c.cxn_id = i + 1;
                let mut node = cxnforge_core::NodeConstraint::unconstrained(id("A"), HeadRef::Root);
                let k = rng.gen_range(1..=4);
                let mut lemmas: Vec<String> = vocab.choose_multiple(&mut rng, k).map(|s| s.to_string()).collect();
                lemmas.sort();
                if k < 4 {
                    node.lemma = Some(Pattern::Literals(lemmas));
                }
                c.nodes = vec![node];
                c
            })
            .collect();

        let mut g = GcxnGraph::new();
        for c in cxns.iter().cloned() {
            g = g.insert(c).0;
            prop_assert!(g.check_consistency().iter().all(|d| d.rule != "vertical-cycle"));
        }

        let strict = |p: &Cxn, c: &Cxn| subsumes(p, c).is_some() && subsumes(c, p).is_none();
        let mut expected = BTreeSet::new();
        for p in &cxns {
            for c in &cxns {
                if strict(p, c) && !cxns.iter().any(|q| strict(p, q) && strict(q, c)) {
                    expected.insert((p.cxn_id, c.cxn_id));
                }
            }
        }
        let got: BTreeSet<(u32, u32)> = g.vertical_edges().map(|(k, _)| k).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn propagation_is_sound_idempotent_and_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut child = random_cxn(&mut rng, 4);
        child.cxn_id = 1;
        let parent = generalize(&mut rng, &child, 2);
        let grand = generalize(&mut rng, &parent, 3);
        let mut g = GcxnGraph::new();
        for c in [child.clone(), parent, grand] {
            g = g.insert(c).0;
        }
        let p = compile(&child).unwrap();
        for _ in 0..5 {
            let mut s = random_sentence(&mut rng, 12);
            let ms = match_sentence(&p, &s);
            if ms.len() != 1 {
                continue;
            }
            let records: Vec<_> = ms.iter().map(|m| m.record()).collect();
            let mut corpus = vec![s.clone()];
            apply_matches(&mut corpus, &records, OverwritePolicy::SkipExisting).unwrap();
            s = corpus.remove(0);
            let (once, d1) = g.propagate_annotations(&s);
            prop_assert!(d1.is_empty());
            let (twice, _) = g.propagate_annotations(&once);
            prop_assert_eq!(&once, &twice);
            for (a, b) in s.tokens.iter().zip(&once.tokens) {
                prop_assert!(a.cxn_marks().all(|m| b.has_mark(m)));
            }
            prop_assert!(validate_annotations(std::slice::from_ref(&once), &g).is_empty());
        }
    }
}

#[test]
fn three_chain_reduction() {
    let bare = |cxn_id: u32, lemmas: Option<&[&str]>| {
        let mut c = cxn345();
        c.cxn_id = cxn_id;
        c.name = String::new();
        c.function = String::new();
        c.vertical_links.clear();
        c.horizontal_links.clear();
        c.nodes.truncate(1);
        c.nodes[0] = cxnforge_core::NodeConstraint::unconstrained(id("A"), HeadRef::Root);
        c.nodes[0].lemma = lemmas.map(Pattern::literals);
        c
    };
    let a = bare(1, None);
    let b = bare(2, Some(&["x", "y"]));
    let c = bare(3, Some(&["x"]));
    let (g, _) = GcxnGraph::from_entries(vec![a, b]);
    let (g, _) = g.update_vertical_links(1);
    let (g, delta) = g.insert(c);
    assert_eq!(delta.added, [(2, 3)]);
    assert_eq!(delta.reduced, [(1, 3)]);
    let edges: Vec<_> = g.vertical_edges().map(|(k, _)| k).collect();
    assert_eq!(edges, [(1, 2), (2, 3)]);
}
