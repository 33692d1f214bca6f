use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).to_str().unwrap().to_string()
}

fn twf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twf")).args(args).output().unwrap()
}

fn scratch(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("twf-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn output_is_deterministic() {
    for args in [["check", "--json"], ["strong-check", "--json"]] {
        let f = corpus("recette.twf");
        let runs: Vec<_> = (0..3).map(|_| twf(&[args[0], args[1], &f]).stdout).collect();
        assert!(runs.windows(2).all(|w| w[0] == w[1]));
    }
    let a = twf(&["oracle-verify", "--instances", "60", "--seed", "7"]);
    let b = twf(&["oracle-verify", "--instances", "60", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_is_self_describing() {
    let o = twf(&["check", "--json", "--unroll-bound", "2", &corpus("fig2b.twf")]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["unroll_bound"], 2);
    assert_eq!(v["bounded"], true);
    assert_eq!(v["verdict"], true);
    assert!(!v["witness"]["executions"].as_array().unwrap().is_empty());
}

#[test]
fn human_output_flags_bounded_verdicts() {
    let o = twf(&["check", &corpus("fig2b.twf")]);
    assert!(stdout(&o).contains("bounded: loops unrolled at most 3 times"));
    let o = twf(&["check", &corpus("seqchain.twf")]);
    assert!(!stdout(&o).contains("bounded"));
}

#[test]
fn exit_codes() {
    let bad = scratch("bad.twf", "workflow w = or{ a | }\n");
    let o = twf(&["check", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.twf:1:22:"), "{err}");

    let unsat = scratch("unsat.twf", "workflow w = a -> b\nconstraints { b {b} a; }\n");
    assert_eq!(twf(&["check", &unsat]).status.code(), Some(1));
    assert_eq!(twf(&["strong-check", &unsat]).status.code(), Some(1));
    assert_eq!(twf(&["scenario", &unsat]).status.code(), Some(1));

    let big = scratch("big.twf", "workflow w = loop{ a -> b -> c }\nconstraints { c {b} a; }\n");
    assert_eq!(twf(&["check", "--atom-budget", "4", &big]).status.code(), Some(2));
    assert_eq!(twf(&["check", "--unroll-bound", "0", &big]).status.code(), Some(2));
    assert_eq!(twf(&["check", "missing.twf"]).status.code(), Some(2));
    assert_eq!(twf(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn subsumption_verdicts() {
    let chain = scratch("chain.twf", "workflow w = x -> y\nconstraints { x {b} y; }\n");
    let par = scratch("par.twf", "workflow w = and{ x ; y }\nconstraints { x {b,m} y; }\n");
    let o = twf(&["subsumes", &chain, &par]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(0), "holds"));
    let o = twf(&["subsumes", &par, &chain]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(1), "unknown"));
}

#[test]
fn transforms_print_parseable_text() {
    let o = twf(&["normalize", &corpus("recette.twf")]);
    assert_eq!(o.status.code(), Some(0));
    let again = scratch("normal.twf", &stdout(&o));
    assert_eq!(stdout(&twf(&["normalize", &again])), stdout(&o));

    let o = twf(&["seqfree", &corpus("fig2b.twf")]);
    assert!(!stdout(&o).contains("->"));
    let sf = scratch("sf.twf", &stdout(&o));
    assert_eq!(twf(&["strong-check", &sf]).status.code(), Some(0));
}

#[test]
fn scenario_and_dot() {
    let o = twf(&["scenario", &corpus("recette.twf")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("'saisir le foie gras' {f} 'frire le tournedos';"), "{text}");
    assert!(text.contains("schedule:"));

    let out = std::env::temp_dir().join(format!("twf-cli-{}-fig2b.dot", std::process::id()));
    let o = twf(&["dot", &corpus("fig2b.twf"), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let dot = fs::read_to_string(&out).unwrap();
    assert!(dot.starts_with("digraph \"fig2b\" {"));
    let _ = fs::remove_file(out);
}
