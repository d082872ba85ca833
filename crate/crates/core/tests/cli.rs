use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn ucp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucp"))
        .args(args)
        .output()
        .expect("run ucp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = ucp(&["validate", &fixture("example.json")]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).starts_with("valid"));
    assert!(stdout(&ok).contains("sufficient check: holds"));
    for f in ["counterexample_ab.json", "counterexample_ba.json"] {
        let bad = ucp(&["validate", &fixture(f)]);
        assert_eq!(bad.status.code(), Some(1));
        assert!(stdout(&bad).starts_with("invalid"));
        assert!(stdout(&bad).contains("violations: 2"));
    }
}

#[test]
fn queries_on_the_worked_example() {
    let net = fixture("example.json");
    let o = ucp(&["eval", &net, "A=a;B=b;C=cbar;D=dbar"]);
    assert_eq!(stdout(&o).trim(), "10.4");
    let o = ucp(&["compare", &net, "A=a;B=b;C=cbar;D=dbar", "A=abar;B=b;C=cbar;D=dbar"]);
    assert_eq!(stdout(&o).trim(), "first (10.4 vs 8)");
    let o = ucp(&["optimize", &net, "--evidence", "C=cbar"]);
    assert_eq!(stdout(&o), "A=a;B=b;C=cbar;D=d\nutility 10.5\n");
    let o = ucp(&["decide", &net, &fixture("example_scenario.json")]);
    assert!(stdout(&o).starts_with("choose middle\n"), "{}", stdout(&o));
}

#[test]
fn optimize_refuses_invalid_nets_unless_forced() {
    let net = fixture("counterexample_ab.json");
    let o = ucp(&["optimize", &net]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[E_INVALID_NET]"));
    let o = ucp(&["optimize", &net, "--force"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_and_domain_errors() {
    let o = ucp(&["eval", "/nonexistent/net.json", "A=a"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("E_IO") && stderr(&o).contains("/nonexistent/net.json"));
    let o = ucp(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ucp(&["eval", &fixture("example.json"), "A=q"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[E_ASSIGNMENT]"));
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"format_version\": 1,\n  oops\n}").unwrap();
    let o = ucp(&["validate", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn regret_on_the_normalized_example() {
    let o = ucp(&["regret", &fixture("example_normalized.json"), &fixture("example_scenario.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("recommend middle\n") && text.ends_with("MMR 140\n"), "{text}");
}

#[test]
fn scripted_elicitation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("answers.txt");
    std::fs::write(&script, "# prefer the gamble\n\n1\n").unwrap();
    let args = [
        "elicit",
        &fixture("example_normalized.json"),
        &fixture("example_two_actions.json"),
        "--tau",
        "5",
        "--script",
        script.to_str().unwrap(),
    ];
    let a = ucp(&args);
    let b = ucp(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).ends_with("recommend gamble (MMR 0)\n"), "{}", stdout(&a));
}

#[test]
fn elicitation_needs_enough_answers() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("answers.txt");
    std::fs::write(&script, "").unwrap();
    let o = ucp(&[
        "elicit",
        &fixture("example_normalized.json"),
        &fixture("example_two_actions.json"),
        "--script",
        script.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ran out"));
}

// With three actions the recommendation has two adversaries at the same
// regret; every single query leaves one of them untouched, so the greedy
// loop has nothing worth asking.
#[test]
fn tied_adversaries_stop_the_greedy_loop() {
    let o = ucp(&[
        "elicit",
        &fixture("example_normalized.json"),
        &fixture("example_scenario.json"),
        "--script",
        "/dev/null",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("stop (no-useful-query): best so far middle (MMR 140)\n"));
}

#[test]
fn gai_conversion_and_normalization_round_trip() {
    let o = ucp(&["gai2ucp", &fixture("gai_example.json"), "--order", "A,B,C"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    std::fs::write(&net, stdout(&o)).unwrap();
    let e = ucp(&["eval", net.to_str().unwrap(), "A=a;B=b;C=c"]);
    // 4 + 1 + 0.5
    assert_eq!(stdout(&e).trim(), "5.5");
    let bad = ucp(&["gai2ucp", &fixture("gai_example.json"), "--order", "A,Z"]);
    assert_eq!(bad.status.code(), Some(2));

    let n = ucp(&["normalize", &fixture("example.json")]);
    assert_eq!(stdout(&n), std::fs::read_to_string(fixture("example_normalized.json")).unwrap());
}
