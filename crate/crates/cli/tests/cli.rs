use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn systems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("systems")
}

fn sys(name: &str) -> String {
    systems().join(name).to_string_lossy().into_owned()
}

fn cfsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfsm")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn example22_verdicts_and_exit_codes() {
    let f = sys("example22.sys");
    assert_eq!(code(&cfsm(&["check", "k-sync", "--file", &f, "--k", "1"])), 0);
    let out = cfsm(&["check", "k-sync", "--file", &f, "--k", "2"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    let witness = text.lines().find_map(|l| l.trim().strip_prefix("witness: ")).unwrap();
    let letters: Vec<&str> = witness.split(' ').map(|t| t.split('@').next().unwrap()).collect();
    assert_eq!(letters, ["a", "a", "b", "c", "d"]);
    assert_eq!(code(&cfsm(&["check", "ring-sync", "--file", &f])), 3);
}

#[test]
fn json_reports_match_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let f = sys("example22.sys");
    for (file, args) in [
        ("example22-k2.json", vec!["--json", "check", "k-sync", "--file", &f, "--k", "2"]),
        ("example22-ring.json", vec!["--json", "check", "ring-sync", "--file", &f]),
    ] {
        let expected = fs::read_to_string(golden.join(file)).unwrap();
        assert_eq!(stdout(&cfsm(&args)), expected, "{file}");
    }
}

#[test]
fn json_schema_is_stable() {
    let out = cfsm(&["--json", "check", "k-sync", "--file", &sys("ring2-sync.sys"), "--k", "2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let keys: BTreeSet<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, BTreeSet::from(["command", "verdict", "stats"]));
    let stats: BTreeSet<&str> = v["stats"].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(stats, BTreeSet::from(["states", "edges", "k", "semantics"]));
    assert_eq!(v["verdict"], "holds");
}

#[test]
fn ring_commands() {
    assert_eq!(code(&cfsm(&["check", "ring-sync", "--file", &sys("ring2-sync.sys")])), 0);
    assert_eq!(code(&cfsm(&["check", "ring-sync", "--file", &sys("ring3-unsync.sys")])), 1);
    assert_eq!(code(&cfsm(&["reach", "--file", &sys("ring3-sync.sys"), "--k", "3"])), 0);
    assert_eq!(code(&cfsm(&["reach", "--file", &sys("ring2-unsync.sys")])), 3);
    let out = cfsm(&["trace", "normalize", "--file", &sys("ring-normalize.sys"), "--trace", "!a !c ?a"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("witness: !?a !c"));
}

#[test]
fn stability_and_draining() {
    let ex22 = sys("example22.sys");
    let idle = sys("send-idle.sys");
    assert_eq!(code(&cfsm(&["check", "stable", "--file", &ex22, "--k", "0"])), 0);
    assert_eq!(code(&cfsm(&["check", "stable", "--file", &ex22, "--k", "1"])), 1);
    assert_eq!(code(&cfsm(&["check", "strong-stable", "--file", &idle, "--k", "1"])), 0);
    assert_eq!(code(&cfsm(&["check", "k-sync", "--file", &idle, "--k", "1"])), 1);
    let out = cfsm(&["drain", "--file", &idle]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("orphan (q1, q0 | 1>2: a)"));
}

#[test]
fn trace_commands() {
    let ex22 = sys("example22.sys");
    let g = sys("genest-sync.sys");
    assert_eq!(code(&cfsm(&["trace", "run", "--file", &ex22, "--trace", "!a !a ?a"])), 0);
    assert_eq!(code(&cfsm(&["trace", "run", "--file", &ex22, "--trace", "!a ?b"])), 1);
    let t = "!a !a !b !b ?a ?a ?b ?b";
    assert_eq!(code(&cfsm(&["trace", "exists-kbounded", "--file", &g, "--trace", t, "--k", "1"])), 1);
    assert_eq!(code(&cfsm(&["trace", "exists-kbounded", "--file", &g, "--trace", t, "--k", "2"])), 0);
    let eq = ["trace", "equiv", "--file", &g, "--trace", "!a !b ?a ?b", "--other"];
    assert_eq!(code(&cfsm(&[&eq[..], &["!b !a ?b ?a"]].concat())), 0);
    // Peer 1 sends before receiving in one and after in the other.
    assert_eq!(code(&cfsm(&[&eq[..], &["!b ?b !a ?a"]].concat())), 1);
}

#[test]
fn reduction_pipeline_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let fifo = dir.path().join("t.fifo");
    let merged = dir.path().join("t.sys");
    let out = cfsm(&["generate", "tiling-fifo", "--file", &sys("singleton.tiling")]);
    assert_eq!(code(&out), 0);
    fs::write(&fifo, &out.stdout).unwrap();
    let out = cfsm(&["generate", "fifo-system-merged", "--file", fifo.to_str().unwrap(), "--letter", "t"]);
    assert_eq!(code(&out), 0);
    fs::write(&merged, &out.stdout).unwrap();
    let m = merged.to_str().unwrap();
    assert_eq!(code(&cfsm(&["check", "k-sync", "--file", m, "--k", "2", "--language-only"])), 1);
    for cmd in ["fifo-system", "fifo-system-prime"] {
        let mut args = vec!["generate", cmd, "--file", fifo.to_str().unwrap()];
        if cmd.ends_with("prime") {
            args.extend(["--letter", "t"]);
        }
        assert_eq!(code(&cfsm(&args)), 0, "{cmd}");
    }
    let s = cfsm(&["generate", "fifo-system-prime", "--file", &sys("example33.fifo"), "--letter", "m"]);
    let prime = dir.path().join("prime.sys");
    fs::write(&prime, &s.stdout).unwrap();
    for k in ["1", "2", "3"] {
        assert_eq!(code(&cfsm(&["check", "k-sync", "--file", prime.to_str().unwrap(), "--k", k])), 0);
    }
}

#[test]
fn explore_writes_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("lts.dot");
    let out = cfsm(&["explore", "--file", &sys("example22.sys"), "--k", "2", "--dot", dot.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph lts {"));
    assert_eq!(text.matches("->").count(), 24);
    assert!(stdout(&out).contains("states: 18, edges: 24, k: 2, semantics: p2p"));
}

#[test]
fn semantics_flag() {
    let f = sys("intro-unsync.sys");
    for sem in ["p2p", "mailbox", "bag"] {
        assert_eq!(code(&cfsm(&["check", "k-sync", "--file", &f, "--semantics", sem])), 1, "{sem}");
    }
    assert_eq!(code(&cfsm(&["check", "k-sync", "--file", &f, "--semantics", "smoke"])), 2);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sys");
    fs::write(&bad, "system s\npeers 2\nmsg a 1 1\n").unwrap();
    let out = cfsm(&["check", "k-sync", "--file", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":3:"), "{err}");
    assert_eq!(code(&cfsm(&["check", "k-sync", "--file", "/nonexistent.sys"])), 2);
    assert_eq!(code(&cfsm(&["check", "k-sync", "--file", &sys("example22.sys"), "--k", "0"])), 2);
    assert_eq!(code(&cfsm(&["trace", "run", "--file", &sys("example22.sys"), "--trace", "!zz"])), 2);
    assert_eq!(code(&cfsm(&["examples", "emit", "mailbox-counterexample"])), 2);
    assert_eq!(code(&cfsm(&["frobnicate"])), 2);
}

#[test]
fn shipped_files_match_builtins() {
    for entry in fs::read_dir(systems()).unwrap() {
        let path = entry.unwrap().path();
        let ext = path.extension().unwrap().to_str().unwrap();
        if ext == "tiling" {
            continue;
        }
        let name = path.file_stem().unwrap().to_str().unwrap();
        let out = cfsm(&["examples", "emit", name]);
        assert_eq!(code(&out), 0, "{name}");
        assert_eq!(stdout(&out), fs::read_to_string(&path).unwrap(), "{name}");
    }
}

#[test]
fn examples_list_and_property_suites() {
    let out = cfsm(&["examples", "list"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).lines().any(|l| l.starts_with("example22 ")));
    let out = cfsm(&["verify", "lemmas"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}
