//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any failure.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use cxnforge_core::conllc::{parse_conllc, serialize_conllc, Cxn, HeadRef, NegativeConstraint, NodeConstraint, Pattern};
use cxnforge_core::conllu::{parse_conllu, serialize_conllu, CxnMark, Meta, Sentence, Token};
use cxnforge_core::corpus::{apply_matches, split_corpus, validate_annotations, OverwritePolicy, SplitName, SplitSpec};
use cxnforge_core::gcxn::{subsumes, GcxnGraph};
use cxnforge_core::matcher::{check_binding, compile, match_sentence, oracle_match, MatchRecord};
use cxnforge_core::queryc::{emit_queries, read_query};
use cxnforge_core::review::{replay, ReviewQueue, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn golden_round_trip() -> Outcome {
    let l1 = fixture("saltare_entries.conllc");
    let parsed = parse_conllc(&l1).map_err(|e| e.to_string())?;
    let normalized = serialize_conllc(&parsed.cxns);
    ensure!(normalized == fixture("saltare_entries.normalized.conllc"), "the saltare entries does not normalize to the golden text");
    let again = parse_conllc(&normalized).map_err(|e| e.to_string())?;
    ensure!(serialize_conllc(&again.cxns) == normalized, "the saltare entries normalized form is not a fixpoint");

    let l2 = fixture("saltare_printed.conllu");
    let s = parse_conllu(&l2).map_err(|e| e.to_string())?;
    ensure!(serialize_conllu(&s.sentences) == l2, "the printed sentence is not reproduced byte for byte");

    let t9 = s.sentences[0].token(9).ok_or("no token 9")?;
    ensure!(t9.lemma == "saltare", "token 9 lemma is {}", t9.lemma);
    ensure!(t9.has_mark(&CxnMark::new(68, id("A"))), "token 9 lacks CXN=68:A");
    let a = parsed.cxns[0].node(id("A")).ok_or("no node A")?;
    ensure!(
        a.without.contains(&NegativeConstraint::Children { deprel: "nsubj".into() }),
        "node A lacks the nsubj exclusion"
    );
    Ok(())
}

fn matcher_oracle() -> Outcome {
    let mut with_matches = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cxn = random_cxn(&mut rng, 4);
        let sentence = random_sentence(&mut rng, 15);
        let fast: BTreeSet<_> = match_sentence(&compile(&cxn).map_err(|e| e.to_string())?, &sentence)
            .iter()
            .map(|m| m.binding.clone())
            .collect();
        let slow: BTreeSet<_> = oracle_match(&cxn, &sentence)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|m| m.binding.clone())
            .collect();
        ensure!(fast == slow, "instance {} disagrees: {} vs {} matches", seed, fast.len(), slow.len());
        if !fast.is_empty() {
            with_matches += 1;
        }
    }
    ensure!(with_matches >= 200, "only {} instances had matches", with_matches);
    Ok(())
}

fn validation_flags_token_14() -> Outcome {
    let (graph, _) = GcxnGraph::from_entries(vec![cxn68(), cxn345()]);
    let d = validate_annotations(&[saltare_printed()], &graph);
    let subject = format!("{} token 14", saltare_printed().sent_id().unwrap_or_default());
    let got: Vec<(&str, Option<&str>)> = d.iter().map(|d| (d.rule.as_str(), d.subject.as_deref())).collect();
    ensure!(
        got == [("upos", Some(subject.as_str())), ("deprel", Some(subject.as_str()))],
        "unexpected diagnostics: {:?}",
        got
    );
    Ok(())
}

fn nsubj_flips_match() -> Outcome {
    let p = compile(&cxn68()).map_err(|e| e.to_string())?;
    let mut s = saltare_reanalysed();
    let before = match_sentence(&p, &s).len();
    let next = s.len() + 1;
    s.tokens.push(Token::new(next, "lui", "lui", "PRON", 9, "nsubj"));
    let after = match_sentence(&p, &s).len();
    ensure!((before, after) == (1, 0), "match count went {} -> {}", before, after);
    Ok(())
}

fn bare(cxn_id: u32, lemmas: Option<&[&str]>) -> Cxn {
    let mut node = NodeConstraint::unconstrained(id("A"), HeadRef::Root);
    node.lemma = lemmas.map(Pattern::literals);
    Cxn {
        cxn_id,
        name: String::new(),
        function: String::new(),
        vertical_links: vec![],
        horizontal_links: vec![],
        extra_metadata: vec![],
        nodes: vec![node],
    }
}

fn graph_suite() -> Outcome {
    // Cycle injection through declared links.
    let mut a = cxn68();
    let mut b = generalized68(900);
    a.vertical_links = vec![900];
    b.vertical_links = vec![68];
    let (g, _) = GcxnGraph::from_entries(vec![a, b]);
    ensure!(
        g.check_consistency().iter().any(|d| d.rule == "vertical-cycle"),
        "injected cycle not reported"
    );

    // Three-chain update against a brute-force reduction.
    let chain = vec![bare(1, None), bare(2, Some(&["x", "y"])), bare(3, Some(&["x"]))];
    let mut g = GcxnGraph::new();
    for c in chain.iter().cloned() {
        g = g.insert(c).0;
    }
    let strict = |p: &Cxn, c: &Cxn| subsumes(p, c).is_some() && subsumes(c, p).is_none();
    let mut expected = BTreeSet::new();
    for p in &chain {
        for c in &chain {
            if strict(p, c) && !chain.iter().any(|q| strict(p, q) && strict(q, c)) {
                expected.insert((p.cxn_id, c.cxn_id));
            }
        }
    }
    let got: BTreeSet<(u32, u32)> = g.vertical_edges().map(|(k, _)| k).collect();
    ensure!(got == expected, "edges {:?}, expected {:?}", got, expected);

    // Soundness on every fixture pair.
    let lib = fixture_library();
    let corpus = [saltare_printed(), saltare_reanalysed()];
    let mut checked = 0;
    for parent in &lib {
        for child in &lib {
            let Some(corr) = subsumes(parent, child) else { continue };
            let p = compile(child).map_err(|e| e.to_string())?;
            for s in &corpus {
                for m in match_sentence(&p, s) {
                    let failed = check_binding(parent, s, &compose(&corr, &m.binding))
                        .into_iter()
                        .filter(|c| c.failed())
                        .count();
                    ensure!(failed == 0, "{} over {} is unsound", parent.cxn_id, child.cxn_id);
                    checked += 1;
                }
            }
        }
    }
    ensure!(checked > 0, "no fixture pair produced evidence");
    Ok(())
}

fn propagation() -> Outcome {
    let (g, _) = GcxnGraph::from_entries(vec![cxn68()]);
    let (g, _) = g.insert(generalized68(900));
    let mut s = saltare_reanalysed();
    for t in &mut s.tokens {
        t.remove_marks_of(345);
    }
    let (once, _) = g.propagate_annotations(&s);
    let mut got = Vec::new();
    for t in &once.tokens {
        for m in t.cxn_marks().filter(|m| m.cxn_id == 900) {
            got.push((t.index, m.label.to_string()));
        }
    }
    let want: Vec<(usize, String)> = [(9, "A"), (10, "B"), (11, "C"), (14, "D")]
        .iter()
        .map(|(t, l)| (*t, l.to_string()))
        .collect();
    ensure!(got == want, "parent marks {:?}", got);
    let (twice, _) = g.propagate_annotations(&once);
    ensure!(twice == once, "second propagation changed the sentence");
    Ok(())
}

fn split() -> Outcome {
    let corpus = synthetic_corpus(1000, 1000);
    let spec = SplitSpec { seed: 7, ..SplitSpec::default() };
    let run = || -> Result<Vec<String>, String> {
        let s = split_corpus(&corpus, &spec, None).map_err(|e| e.to_string())?;
        Ok(SplitName::ALL.iter().map(|n| serialize_conllu(s.part(*n))).collect())
    };
    let first = run()?;
    ensure!(first == run()?, "two runs differ");

    let split = split_corpus(&corpus, &spec, None).map_err(|e| e.to_string())?;
    let sizes = [split.train.len(), split.dev.len(), split.test.len()];
    ensure!(
        sizes.iter().zip([800, 100, 100]).all(|(got, want)| got.abs_diff(want) <= 30),
        "sizes {:?}",
        sizes
    );

    let one = synthetic_corpus(50, 1);
    for seed in 0..20 {
        let s = split_corpus(&one, &SplitSpec { seed, ..SplitSpec::default() }, None).map_err(|e| e.to_string())?;
        let used = SplitName::ALL.iter().filter(|n| !s.part(**n).is_empty()).count();
        ensure!(used == 1, "single source spread over {} splits (seed {})", used, seed);
    }
    Ok(())
}

fn query_emission() -> Outcome {
    let p = compile(&cxn68()).map_err(|e| e.to_string())?;
    let set = emit_queries(&p);
    ensure!(set.queries.len() == 1, "{} queries", set.queries.len());
    let q = read_query(&set.queries[0].text).map_err(|e| e.to_string())?;
    ensure!(q.nodes.len() == 4, "{} nodes", q.nodes.len());
    let mut labels: Vec<String> = q.edges.iter().flat_map(|(_, l, _)| l.clone()).collect();
    labels.sort();
    ensure!(labels == ["advmod", "csubj", "mark"], "edge labels {:?}", labels);
    ensure!(q.withouts.len() == 1, "{} without clauses", q.withouts.len());
    ensure!(emit_queries(&p) == set, "emission is not deterministic");
    Ok(())
}

fn review_end_to_end() -> Outcome {
    let mut a = saltare_reanalysed();
    strip_marks(&mut a);
    let mut b = a.clone();
    b.metadata = vec![Meta::Pair { key: "sent_id".into(), value: "copy".into() }];
    let corpus = vec![a, b];
    let p = compile(&cxn68()).map_err(|e| e.to_string())?;
    let matches: Vec<MatchRecord> = corpus.iter().flat_map(|s| match_sentence(&p, s)).map(|m| m.record()).collect();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut q = ReviewQueue::open(dir.path()).map_err(|e| e.to_string())?;
    let added = q.enqueue(&matches, &corpus, None).map_err(|e| e.to_string())?.added;
    ensure!(added.len() == 2, "{} candidates enqueued", added.len());
    q.decide(&added[0], Verdict::Accepted, "reviewer", None, None).map_err(|e| e.to_string())?;
    q.decide(&added[1], Verdict::Rejected, "reviewer", None, None).map_err(|e| e.to_string())?;

    let reopened = ReviewQueue::open(dir.path()).map_err(|e| e.to_string())?;
    ensure!(reopened.statuses() == q.statuses(), "replayed state differs");
    ensure!(replay(reopened.decisions()).len() == 2, "replay lost decisions");

    let accepted = reopened.export_accepted();
    ensure!(accepted.len() == 1, "{} accepted records", accepted.len());
    let mut annotated: Vec<Sentence> = corpus.clone();
    apply_matches(&mut annotated, &accepted, OverwritePolicy::SkipExisting).map_err(|e| e.to_string())?;
    let accepted_sent = &reopened.candidate(&added[0]).ok_or("accepted candidate missing")?.sent_id;
    for s in &annotated {
        let marks = s.tokens.iter().filter(|t| t.cxn_marks().any(|m| m.cxn_id == 68)).count();
        let want = if s.sent_id() == Some(accepted_sent.as_str()) { 4 } else { 0 };
        ensure!(marks == want, "{:?} has {} marks", s.sent_id(), marks);
    }
    Ok(())
}

fn main() {
    let checks: [(&str, fn() -> Outcome, Option<Duration>); 9] = [
        ("golden round-trip", golden_round_trip, Some(Duration::from_secs(1))),
        ("matcher/oracle equivalence on 1000 instances", matcher_oracle, Some(Duration::from_secs(60))),
        ("annotation validation flags token 14", validation_flags_token_14, None),
        ("nsubj dependent blocks cxn 68", nsubj_flips_match, None),
        ("graph consistency, reduction and soundness", graph_suite, None),
        ("propagation marks and idempotence", propagation, None),
        ("seeded group split", split, None),
        ("query emission for cxn 68", query_emission, None),
        ("review queue end to end", review_end_to_end, None),
    ];
    let mut failures = 0;
    for (name, check, limit) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(()), Some(l)) if elapsed > l => Err(format!("took longer than {:?}", l)),
            (o, _) => o,
        };
        match outcome {
            Ok(()) => println!("PASS {} ({} ms)", name, elapsed.as_millis()),
            Err(e) => {
                failures += 1;
                println!("FAIL {} ({} ms): {}", name, elapsed.as_millis(), e);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
