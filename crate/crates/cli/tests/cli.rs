use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixture(path: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(path)
        .to_string_lossy()
        .into_owned()
}

fn sema(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sema"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<&str>> {
    text.lines()
        .map(|l| l.split_whitespace().collect())
        .collect()
}

/// `n` entries; entry `i` is a star with `i % 7` children, and the test side
/// renames the first child of every third entry.
fn synthetic_corpus(n: usize) -> (tempfile::NamedTempFile, tempfile::NamedTempFile) {
    let mut test = tempfile::NamedTempFile::new().unwrap();
    let mut gold = tempfile::NamedTempFile::new().unwrap();
    for i in 0..n {
        let kids = |rename: bool| {
            (0..i % 7)
                .map(|k| {
                    let concept = if rename && k == 0 {
                        "other".to_string()
                    } else {
                        format!("leaf-{k}")
                    };
                    format!(" :ARG{k} (c{k} / {concept})")
                })
                .collect::<String>()
        };
        writeln!(gold, "# ::id s{i}\n(r / hub{}{})\n", i % 3, kids(false)).unwrap();
        writeln!(
            test,
            "# ::id s{i}\n(r / hub{}{})\n",
            i % 3,
            kids(i % 3 == 0)
        )
        .unwrap();
    }
    (test, gold)
}

#[test]
fn identical_files_score_one() {
    let gold = fixture("worked_example/reference.amr");
    let out = sema(&["score", &gold, &gold, "--metric", "sema"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "sema P=1.00 R=1.00 F=1.00 (M=15 C=15 T=15)\n");
}

#[test]
fn compare_worked_example() {
    let out = sema(&[
        "compare",
        &fixture("worked_example/test.amr"),
        &fixture("worked_example/reference.amr"),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        rows(&text).contains(&vec!["tolerance", "0.40", "0.69", "-0.29"]),
        "{text}"
    );
}

#[test]
fn eval_split_partitions_entries() {
    let (test, gold) = synthetic_corpus(100);
    let test = test.path().to_str().unwrap();
    let gold = gold.path().to_str().unwrap();
    let out = sema(&["eval", test, gold, "--split-by-relation-avg"]);
    assert!(out.status.success());
    assert!(
        out.stderr.is_empty(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let count = |heading: &str| -> usize {
        let line = text.lines().find(|l| l.starts_with(heading)).unwrap();
        line.split(['(', ' ']).find_map(|w| w.parse().ok()).unwrap()
    };
    let (below, above) = (count("Below average"), count("Above average"));
    assert_eq!(below + above, 100);
    assert!(below > 0 && above > 0);

    let out = sema(&[
        "eval",
        test,
        gold,
        "--split-by-relation-avg",
        "--format",
        "json",
        "--metric",
        "both",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let splits = &json["splits"];
    let len = |k: &str| splits[k]["entries"].as_array().unwrap().len();
    assert_eq!((len("below"), len("above")), (below, above));
}

#[test]
fn json_output_follows_schema() {
    let out = sema(&[
        "eval",
        &fixture("perturbed/test.amr"),
        &fixture("perturbed/gold.amr"),
        "--metric",
        "both",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let entries = json["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 20);
    for entry in entries {
        assert!(entry["id"].is_string());
        assert!(entry["relations"].is_u64());
        for metric in ["sema", "smatch"] {
            let s = &entry[metric];
            for key in ["M", "C", "T"] {
                assert!(s[key].is_u64(), "{entry}");
            }
            for key in ["P", "R", "F"] {
                assert!(s[key].is_string(), "{entry}");
            }
        }
    }
    for metric in ["sema", "smatch"] {
        let agg = &json["aggregates"][metric];
        for part in ["micro", "macro"] {
            for key in ["P", "R", "F"] {
                assert!(agg[part][key].is_string(), "{agg}");
            }
        }
    }
}

#[test]
fn output_is_deterministic() {
    let args = [
        "compare",
        &fixture("perturbed/test.amr"),
        &fixture("perturbed/gold.amr"),
        "--seed",
        "3",
        "--exact-threshold",
        "1",
        "--format",
        "json",
    ];
    let first = sema(&args);
    assert!(first.status.success());
    for _ in 0..3 {
        assert_eq!(sema(&args).stdout, first.stdout);
    }
}

#[test]
fn stdin_input() {
    let gold = fixture("worked_example/reference.amr");
    let mut child = Command::new(env!("CARGO_BIN_EXE_sema"))
        .args(["score", "-", &gold, "--metric", "smatch"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let text = std::fs::read(fixture("worked_example/test.amr")).unwrap();
    child.stdin.take().unwrap().write_all(&text).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "smatch P=0.69 R=0.69 F=0.69 (M=11 C=16 T=16)\n"
    );
}

#[test]
fn no_top_drops_the_root_triple() {
    let gold = fixture("worked_example/reference.amr");
    let out = sema(&["score", &gold, &gold, "--metric", "smatch", "--no-top"]);
    assert_eq!(
        stdout(&out),
        "smatch P=1.00 R=1.00 F=1.00 (M=15 C=15 T=15)\n"
    );
}

#[test]
fn exit_codes() {
    let gold = fixture("worked_example/reference.amr");
    assert_eq!(sema(&["--help"]).status.code(), Some(0));
    assert_eq!(sema(&["--version"]).status.code(), Some(0));
    assert_eq!(sema(&["score", &gold]).status.code(), Some(1));
    assert_eq!(
        sema(&["eval", &gold, &gold, "--metric", "all"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        sema(&[
            "eval",
            &gold,
            &gold,
            "--restarts",
            "0",
            "--metric",
            "smatch"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        sema(&["score", "/no/such/file", &gold]).status.code(),
        Some(2)
    );

    let mut broken = tempfile::NamedTempFile::new().unwrap();
    writeln!(broken, "(a / and :op1 (b / fear)").unwrap();
    let broken = broken.path().to_str().unwrap();
    let out = sema(&["score", broken, &gold]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unbalanced"));

    // A corpus with one bad entry still evaluates; the failure goes to stderr.
    let out = sema(&["eval", broken, &gold]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("Entries: 1 (1 with errors)"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error: entry"));
}
