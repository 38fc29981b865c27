use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn cxnforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cxnforge"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({}): {}", e, stdout(o)))
}

/// A parent of cxn 68: saltare with an advmod dependent.
const PARENT: &str = "# cxn-id = 900\n# cxn-name = saltare + advmod\n\
X\t_\tsaltare\tVERB\t_\t0\t_\t1\t_\t_\t_\t_\t_\n\
Y\t_\t_\t_\t_\tX\tadvmod\t1\t_\t_\t_\t_\t_\n";

/// The saltare sentence reanalysed so that cxn 68 matches, plus an unmarked copy.
fn corpus(dir: &Path) -> PathBuf {
    let printed = std::fs::read_to_string(fixture("saltare_printed.conllu")).unwrap();
    let fixed = printed.replace("14\tChris\tChris\tPROPN\t_\t_\t9\tccomp", "14\tChris\tChris\tVERB\t_\t_\t9\tcsubj");
    let unmarked: String = fixed
        .lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split('\t').collect();
            if cols.len() == 10 {
                cols[9] = if cols[9] == "SpaceAfter=No" { "SpaceAfter=No" } else { "_" };
            }
            cols.join("\t") + "\n"
        })
        .collect();
    let copy = unmarked.replace("2_Paisa_FP06072024", "copy").replace("# source = http", "# source = other http");
    let path = dir.join("corpus.conllu");
    std::fs::write(&path, format!("{}{}", unmarked, copy)).unwrap();
    path
}

#[test]
fn validate_saltare_entries_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = cxnforge(dir.path(), &["validate", fixture("saltare_entries.conllc").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn match_printed_saltare_printed_reports_d() {
    let dir = tempfile::tempdir().unwrap();
    let o = cxnforge(
        dir.path(),
        &["match", fixture("saltare_entries.conllc").to_str().unwrap(), fixture("saltare_printed.conllu").to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "");
    let err = stderr(&o);
    assert!(err.contains("cxn 68: 0 matches"), "{}", err);
    assert!(err.contains("node D (token 14) upos"), "{}", err);
    assert!(err.contains("node D (token 14) deprel"), "{}", err);

    let o = cxnforge(
        dir.path(),
        &["--format", "json", "match", fixture("saltare_entries.conllc").to_str().unwrap(), fixture("saltare_printed.conllu").to_str().unwrap()],
    );
    assert_eq!(json_out(&o), Value::Array(vec![]));
    let evidence: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    let failed = evidence["near_misses"][0]["failed"].as_array().unwrap();
    assert!(failed.iter().all(|c| c["node"] == "D"));
    assert_eq!(failed.len(), 2);
}

#[test]
fn split_all_train_reproduces_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = corpus(dir.path());
    let o = cxnforge(dir.path(), &["split", "corpus.conllu", "--ratios", "1,0,0", "-o", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let train = std::fs::read(dir.path().join("out/corpus-train.conllu")).unwrap();
    assert_eq!(train, std::fs::read(&input).unwrap());
    assert_eq!(std::fs::read_to_string(dir.path().join("out/corpus-dev.conllu")).unwrap(), "");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Dangling horizontal link 167.
    let o = cxnforge(dir.path(), &["graph", "check", fixture("saltare_entries.conllc").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("dangling-link"));
    assert_eq!(code(&cxnforge(dir.path(), &["validate", "missing.conllc"])), 2);
    assert_eq!(code(&cxnforge(dir.path(), &["no-such-command"])), 2);
    assert_eq!(code(&cxnforge(dir.path(), &["split", "x.conllu", "--ratios", "0.5,0.5"])), 2);

    std::fs::write(dir.path().join("bad.conllc"), "# cxn-id = 1\nA\t_\t_\t_\t_\tB\t_\t1\t_\t_\t_\t_\t_\n").unwrap();
    let o = cxnforge(dir.path(), &["validate", "bad.conllc"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn config_file_sets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    std::fs::write(dir.path().join("cxnforge.toml"), "format = \"json\"\n[split]\nratios = [0.0, 1.0, 0.0]\n").unwrap();
    let o = cxnforge(dir.path(), &["split", "corpus.conllu", "-o", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json_out(&o);
    assert_eq!(v["dev"]["sentences"], 2);
    // Flags win over the file.
    let o = cxnforge(dir.path(), &["--format", "text", "split", "corpus.conllu", "--ratios", "1,0,0", "-o", "out"]);
    assert!(stdout(&o).starts_with("train\t2"));

    std::fs::write(dir.path().join("other.toml"), "colour = 1\n").unwrap();
    assert_eq!(code(&cxnforge(dir.path(), &["--config", "other.toml", "graph", "export", "x"])), 2);
}

/// Runs the whole pipeline with `--format json` and checks every stdout is
/// one JSON document.
#[test]
fn every_subcommand_speaks_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    std::fs::copy(fixture("saltare_entries.conllc"), d.join("cxn68.conllc")).unwrap();
    std::fs::write(d.join("parent.conllc"), PARENT).unwrap();
    std::fs::create_dir(d.join("graph")).unwrap();

    let run = |args: &[&str]| -> Value {
        let mut full = vec!["--format", "json"];
        full.extend_from_slice(args);
        let o = cxnforge(d, &full);
        assert!(code(&o) <= 1, "{:?}: {}", args, stderr(&o));
        json_out(&o)
    };

    let v = run(&["validate", "cxn68.conllc", "corpus.conllu"]);
    assert_eq!(v["files"][1]["sentences"], 2);
    assert_eq!(run(&["normalize", "cxn68.conllc"])["text"], std::fs::read_to_string(fixture("saltare_entries.normalized.conllc")).unwrap());

    assert_eq!(run(&["graph", "insert", "graph", "cxn68.conllc"])["saved"], true);
    let v = run(&["graph", "insert", "graph", "parent.conllc"]);
    assert_eq!(v["added"], serde_json::json!([[900, 68]]));
    assert!(d.join("graph/900.yaml").is_file());
    assert_eq!(run(&["graph", "check", "graph"])["vertical"], 1);
    assert_eq!(run(&["graph", "subsumes", "graph", "900", "68"])["correspondence"], serde_json::json!({ "X": "A", "Y": "B" }));
    assert_eq!(run(&["graph", "export", "graph"])["vertical"][0]["parent"], 900);

    assert_eq!(run(&["emit-queries", "graph", "--stdout"]).as_array().unwrap().len(), 2);
    let v = run(&["emit-queries", "cxn68.conllc", "-o", "queries"]);
    assert!(d.join("queries/cxn_68.grs.txt").is_file(), "{}", v);

    let v = run(&["match", "graph", "corpus.conllu", "--jobs", "2", "-o", "matches.json"]);
    assert_eq!(v["matches"], 4);
    let matches: Value = serde_json::from_str(&std::fs::read_to_string(d.join("matches.json")).unwrap()).unwrap();
    // Each sentence matches 68 and 900.
    assert_eq!(matches.as_array().unwrap().len(), 4);
    let oracle = cxnforge(d, &["match", "--oracle", "graph", "corpus.conllu"]);
    let fast = cxnforge(d, &["match", "graph", "corpus.conllu"]);
    assert_eq!(stdout(&oracle), stdout(&fast));
    assert_eq!(stdout(&fast).lines().count(), 4);

    let v = run(&["match", "cxn68.conllc", "corpus.conllu"]);
    std::fs::write(d.join("m68.json"), v.to_string()).unwrap();

    let v = run(&["review", "enqueue", "queue", "m68.json", "corpus.conllu"]);
    let ids: Vec<String> = v["added"].as_array().unwrap().iter().map(|i| i.as_str().unwrap().to_string()).collect();
    assert_eq!(ids.len(), 2);
    assert_eq!(run(&["review", "decide", "queue", &ids[0], "accept", "--reviewer", "r"])["verdict"], "accepted");
    assert_eq!(run(&["review", "decide", "queue", &ids[1], "reject", "--reviewer", "r"])["verdict"], "rejected");
    assert_eq!(run(&["review", "stats", "queue"])["per_cxn"]["68"]["accepted"], 1);
    assert_eq!(run(&["review", "export", "queue"]).as_array().unwrap().len(), 1);
    cxnforge(d, &["review", "export", "queue", "-o", "accepted.jsonl"]);

    let v = run(&["annotate", "corpus.conllu", "accepted.jsonl", "-o", "annotated.conllu"]);
    assert_eq!(v["report"]["per_cxn"]["68"]["added"], 4);
    let v = run(&["propagate", "graph", "annotated.conllu"]);
    assert_eq!(v["marks_added"], 2);
    assert!(v["conllu"].as_str().unwrap().contains("CXN=68:A|CXN=900:X"));
    let v = run(&["validate", "--graph", "graph", "annotated.conllu"]);
    assert_eq!(v["files"][0]["errors"], 0);

    let v = run(&["split", "annotated.conllu", "--seed", "3", "--cxn", "68", "-o", "split"]);
    let total: u64 = ["train", "dev", "test"].iter().map(|n| v[n]["sentences"].as_u64().unwrap()).sum();
    assert_eq!(total, 1);

    // Serving fails fast on a bad address; the error is still JSON.
    let o = cxnforge(d, &["--format", "json", "review", "serve", "queue", "--graph", "graph", "--corpus", "corpus.conllu", "--bind", "nowhere"]);
    assert_eq!(code(&o), 2);
    let err: Value = serde_json::from_str(stderr(&o).lines().last().unwrap()).unwrap();
    assert!(err["error"].as_str().unwrap().contains("bind"));
}

#[test]
fn stale_decision_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    let o = cxnforge(d, &["match", fixture("saltare_entries.conllc").to_str().unwrap(), "corpus.conllu", "-o", "m.jsonl"]);
    assert_eq!(code(&o), 0);
    let o = cxnforge(d, &["--format", "json", "review", "enqueue", "q", "m.jsonl", "corpus.conllu"]);
    let id = json_out(&o)["added"][0].as_str().unwrap().to_string();
    assert_eq!(code(&cxnforge(d, &["review", "decide", "q", &id, "accepted", "--reviewer", "a", "--expect", "pending"])), 0);
    let o = cxnforge(d, &["review", "decide", "q", &id, "rejected", "--reviewer", "b", "--expect", "pending"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("stale"));
    assert_eq!(code(&cxnforge(d, &["review", "decide", "q", "nope", "accepted", "--reviewer", "a"])), 2);
    assert_eq!(code(&cxnforge(d, &["review", "decide", "q", &id, "maybe", "--reviewer", "a"])), 2);
}

/// Each pipeline operation and the one subcommand that exposes it.
const COVERAGE: &[(&str, &[&str])] = &[
    ("conllu::parse_conllu", &["validate"]),
    ("conllu::serialize_conllu", &["normalize"]),
    ("conllc::parse_conllc", &["validate"]),
    ("conllc::serialize_conllc", &["normalize"]),
    ("conllc::load_yaml_entry", &["validate"]),
    ("conllc::validate_cxn", &["validate"]),
    ("matcher::compile", &["match"]),
    ("matcher::match_corpus", &["match"]),
    ("matcher::oracle_match", &["match", "--oracle"]),
    ("queryc::emit_queries", &["emit-queries"]),
    ("gcxn::check_consistency", &["graph", "check"]),
    ("gcxn::subsumes", &["graph", "subsumes"]),
    ("gcxn::update_vertical_links", &["graph", "insert"]),
    ("gcxn::propagate_annotations", &["propagate"]),
    ("corpus::apply_matches", &["annotate"]),
    ("corpus::validate_annotations", &["validate", "--graph"]),
    ("corpus::split_corpus", &["split"]),
    ("review::enqueue", &["review", "enqueue"]),
    ("review::decide", &["review", "decide"]),
    ("review::serve", &["review", "serve"]),
];

#[test]
fn every_operation_has_a_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    for (op, path) in COVERAGE {
        let mut args: Vec<&str> = path.iter().copied().filter(|a| !a.starts_with("--")).collect();
        args.push("--help");
        let o = cxnforge(dir.path(), &args);
        assert_eq!(code(&o), 0, "{} -> {:?}", op, path);
        if let Some(flag) = path.iter().find(|a| a.starts_with("--")) {
            assert!(stdout(&o).contains(flag), "{} -> {:?}", op, path);
        }
    }
    let ops: std::collections::BTreeSet<_> = COVERAGE.iter().map(|(op, _)| op).collect();
    assert_eq!(ops.len(), COVERAGE.len(), "an operation is listed twice");
}
