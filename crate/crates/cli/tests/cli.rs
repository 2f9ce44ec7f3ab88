use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use onecounter::ctl;

fn ocp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ocp-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, file: &str, text: &str) -> String {
    let p = dir.join(file);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL: &str = "ocp\nloc a b\nprop done : b\npos a -1 a\nzero a 0 b\n";

#[test]
fn divisibility_formula_at_tb5() {
    let dir = scratch("phi2");
    let fig = write(&dir, "fig7.ocp", &stdout(&ocp(&["gadget", "fig7"])));
    let phi = stdout(&ocp(&["gadget", "phidiv", "2"]));
    let out = ocp(&["check", "--ocp", &fig, "--formula", phi.trim(), "--at", "tb:5", "--record"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("answer=true\nengine=auto\n"), "{text}");
    assert!(!text.contains("time"));
    let out = ocp(&["check", "--ocp", &fig, "--formula", phi.trim(), "--at", "tb:8"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn periodic_over_budget_is_an_error() {
    let dir = scratch("budget");
    let fig = write(&dir, "fig7.ocp", &stdout(&ocp(&["gadget", "fig7"])));
    let phi = stdout(&ocp(&["gadget", "phidiv", "2"]));
    let out = ocp(&[
        "check", "--ocp", &fig, "--formula", phi.trim(), "--at", "t:4", "--engine", "periodic",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configurations"));
}

#[test]
fn huge_counter_uses_the_representative() {
    let dir = scratch("huge");
    let net = write(&dir, "small.ocp", SMALL);
    for at in ["a:1000000000000000000", "a:0b110111100000101101101011001110100111011001000000000000000000"] {
        let out = ocp(&["check", "--ocp", &net, "--formula", "EX EX done", "--at", at, "--record"]);
        assert_eq!(out.status.code(), Some(1), "{at}");
        assert!(stdout(&out).contains("step1=periodic"));
    }
    let out = ocp(&["check", "--ocp", &net, "--formula", "EF done", "--at", "a:1000000000000000000"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bounded_engines() {
    let dir = scratch("bounded");
    let net = write(&dir, "small.ocp", SMALL);
    let run = |engine: &str, at: &str| {
        ocp(&["check", "--ocp", &net, "--formula", "EF done", "--at", at, "--engine", engine])
            .status
            .code()
    };
    assert_eq!(run("tv:8", "a:3"), Some(0));
    assert_eq!(run("capped:8", "a:3"), Some(0));
    assert_eq!(run("capped:2", "a:3"), Some(2));
    assert_eq!(run("tv:x", "a:3"), Some(2));
    assert_eq!(run("fast", "a:3"), Some(2));
    // The deadlock at b is reachable, so AG EX true fails.
    let out = ocp(&[
        "check", "--ocp", &net, "--formula", "~EF ~EX true", "--at", "a:3", "--engine", "tv:8",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = scratch("malformed");
    let bad = write(&dir, "bad.ocp", "ocp\nloc a\npos a 2 a\n");
    let good = write(&dir, "small.ocp", SMALL);
    for args in [
        vec!["check", "--ocp", &bad, "--formula", "true", "--at", "a:0"],
        vec!["check", "--ocp", &good, "--formula", "EX (", "--at", "a:0"],
        vec!["check", "--ocp", &good, "--formula", "true", "--at", "z:0"],
        vec!["check", "--ocp", &good, "--formula", "true", "--at", "a:-1"],
        vec!["check", "--ocp", "/nonexistent", "--formula", "true", "--at", "a:0"],
        vec!["gadget", "phidiv", "0"],
        vec!["selftest", "nope"],
    ] {
        assert_eq!(ocp(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn gadget_output_is_deterministic() {
    let a = ocp(&["gadget", "fig7"]);
    let b = ocp(&["gadget", "fig7"]);
    assert_eq!(a.stdout, b.stdout);
    let fig = onecounter::text::parse_ocp(&stdout(&a)).unwrap();
    assert_eq!(fig.num_locations(), 10);
    assert!(fig.is_net());
    let phi = ctl::parse(&stdout(&ocp(&["gadget", "phidiv", "3"]))).unwrap();
    assert_eq!(phi.lud(), 3);
}

#[test]
fn qbf_gadget_round_trip() {
    let dir = scratch("qbf");
    for (text, code) in [
        ("forall a exists b : (a & b) | (~a & ~b)", 0),
        ("exists b forall a : (a & b) | (~a & ~b)", 1),
    ] {
        let f = write(&dir, "f.qbf", text);
        let prefix = dir.join("q");
        let prefix = prefix.to_str().unwrap();
        assert!(ocp(&["gadget", "qbf", &f, "-o", prefix]).status.success());
        let out = ocp(&[
            "check",
            "--ocp",
            &format!("{prefix}.ocp"),
            "--formula-file",
            &format!("{prefix}.ctl"),
            "--at",
            "tb:0",
            "--engine",
            "capped:16",
        ]);
        assert_eq!(out.status.code(), Some(code), "{text}");
    }
}

#[test]
fn serial_and_wagner_gadgets() {
    let dir = scratch("serial");
    let nfa = write(
        &dir,
        "a.nfa",
        "nfa\nstate s0 sf\ninit s0\nfinal sf\ntrans s0 1 sf\ntrans sf 0 sf\ntrans sf 1 sf\n",
    );
    for (pred, code) in [("1000", 0), ("0111", 1)] {
        let p = write(&dir, "t.pred", pred);
        for eg in [false, true] {
            let prefix = dir.join("s");
            let prefix = prefix.to_str().unwrap();
            let mut args = vec!["gadget", "serial", "--nfa", &nfa, "--pred", &p, "--m", "2", "-o", prefix];
            if eg {
                args.push("--eg");
            }
            assert!(ocp(&args).status.success());
            let ocp_file = format!("{prefix}.ocp");
            let ctl_file = format!("{prefix}.ctl");
            let out = ocp(&[
                "check", "--ocp", &ocp_file, "--formula-file", &ctl_file, "--at", "s_s0:0", "--engine", "capped:8",
            ]);
            assert_eq!(out.status.code(), Some(code), "{pred} eg={eg}");
        }
    }
    let short = write(&dir, "short.pred", "10");
    assert_eq!(
        ocp(&["gadget", "serial", "--nfa", &nfa, "--pred", &short, "--m", "2"]).status.code(),
        Some(2)
    );

    // Largest satisfying value of ~x1 | x2 is 3 (odd); of ~x1 it is 2.
    for (cnf, code) in [("p cnf 2 1\n-1 2 0\n", 1), ("p cnf 2 1\n-1 0\n", 0)] {
        let f = write(&dir, "w.cnf", cnf);
        let prefix = dir.join("w");
        let prefix = prefix.to_str().unwrap();
        assert!(ocp(&["gadget", "wagner", &f, "-o", prefix]).status.success());
        let ocp_file = format!("{prefix}.ocp");
        let ctl_file = format!("{prefix}.ctl");
        let out = ocp(&[
            "check", "--ocp", &ocp_file, "--formula-file", &ctl_file, "--at", "q0:0", "--engine", "capped:8",
        ]);
        assert_eq!(out.status.code(), Some(code), "{cnf}");
    }
}

#[test]
fn prop1_gadget_tracks_residues() {
    let dir = scratch("prop1");
    let f = write(&dir, "f.crr", "x1_0 & x2_1 | x3_4\n");
    let prefix = dir.join("p");
    let prefix = prefix.to_str().unwrap();
    assert!(ocp(&["gadget", "prop1", "--crr", &f, "--primes", "3", "-o", prefix]).status.success());
    let ocp_file = format!("{prefix}.ocp");
    let ctl_file = format!("{prefix}.ctl");
    for m in 0..30u32 {
        let expected = (m % 2 == 0 && m % 3 == 1) || m % 5 == 4;
        let at = format!("in:{m}");
        let out = ocp(&["check", "--ocp", &ocp_file, "--formula-file", &ctl_file, "--at", &at, "--engine", "tv:30"]);
        assert_eq!(out.status.code(), Some(if expected { 0 } else { 1 }), "M = {m}");
    }
}

#[test]
fn mdp_values_and_sandwich() {
    let dir = scratch("mdp");
    let target_self = write(&dir, "t.ocmdp", "ocmdp\nnloc g\nzero g 0 g\npos g -1 g\ntarget g\n");
    let out = ocp(&["mdp", "value", "--mdp", &target_self, "--at", "g:0", "--bound", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("pessimistic.value: 1\n"), "{text}");
    assert!(text.contains("sandwich: pessimistic 1 <= optimistic 1: PASS"));

    // A fair coin that either wins or climbs; climbing past the bound is
    // counted as a loss or a win depending on the frontier.
    let walk = write(
        &dir,
        "w.ocmdp",
        "ocmdp\nploc c\nnloc win\n\
         zero c 0 win 1/2\nzero c +1 c 1/2\npos c 0 win 1/2\npos c +1 c 1/2\n\
         zero win 0 win\npos win -1 win\ntarget win\n",
    );
    let out = ocp(&["mdp", "value", "--mdp", &walk, "--at", "c:0", "--bound", "2"]);
    let text = stdout(&out);
    assert!(text.contains("pessimistic.value: 7/8\n"), "{text}");
    assert!(text.contains("optimistic.value: 1\n"), "{text}");
    let out = ocp(&["mdp", "asure", "--mdp", &walk, "--at", "c:0", "--bound", "2", "--frontier", "pess"]);
    assert_eq!(out.status.code(), Some(1));
    let unannotated = write(&dir, "u.ocmdp", "ocmdp\nploc c\nzero c 0 c\ntarget c\n");
    let out = ocp(&["mdp", "value", "--mdp", &unannotated, "--at", "c:0", "--bound", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_reports_counts_and_catches_a_broken_figure() {
    let out = ocp(&["selftest", "lemma2"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("lemma2: PASS 1806/1806 cases"));

    let dir = scratch("broken");
    let fig = stdout(&ocp(&["gadget", "fig7"]));
    let broken: String = fig
        .lines()
        .filter(|l| *l != "pos q3 -1 q0")
        .map(|l| format!("{l}\n"))
        .collect();
    assert_ne!(broken, fig);
    let path = write(&dir, "broken.ocp", &broken);
    let out = ocp(&["selftest", "lemma2", "lemma4", "--ocp", &path]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("lemma2: FAIL"), "{text}");
    assert!(text.contains("first counterexample: i="), "{text}");
}
