use std::process::{Command, Output};

use hsb_core::conditions::ConditionTableDoc;
use hsb_core::Dim;
use serde_json::Value;

fn hsb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn check_exit_codes_and_witness() {
    let inside = hsb(&[
        "check",
        "--matrix",
        "1,1,1;3/8,3/8,3/8",
        "--dim",
        "3",
        "--json",
    ]);
    assert_eq!(code(&inside), 0);
    let v = json(&inside);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["verdict"]["verdict"], "Product");
    assert_eq!(v["input"], "1/1,1/1,1/1;3/8,3/8,3/8");

    let violated = hsb(&[
        "check",
        "--matrix",
        "0,1/2,1/2;0,1/4,1/4",
        "--dim",
        "3",
        "--json",
    ]);
    assert_eq!(code(&violated), 1);
    let v = json(&violated);
    assert_eq!(v["verdict"]["verdict"], "NotProduct");
    assert_eq!(v["witness"]["condition"], "B5");
    assert_eq!(v["witness"]["family"], 3);
    assert!(v["rules"].is_null());

    let malformed = hsb(&["check", "--matrix", "1,1;1,1,1"]);
    assert_eq!(code(&malformed), 3);
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("--matrix"));
}

#[test]
fn unknown_region_exits_two() {
    // On the B1, B3, B4 edge with a failing boundary rule, and no type theorem applies.
    let out = hsb(&["check", "--matrix", "3/2,1,3/2;1/2,1/2,-1/2", "--json"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["verdict"]["verdict"], "Unknown");
    assert_eq!(v["general_verdict"]["verdict"], "Unknown");
}

#[test]
fn type_theorem_proves_what_the_general_rules_leave_open() {
    let out = hsb(&["check", "--matrix", "3/4,1/4,1/4;-1/4,3/4,3/4", "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["general_verdict"]["verdict"], "Unknown");
    assert_eq!(v["verdict"]["verdict"], "Product");
    assert_eq!(v["verdict"]["basis"], "PThm5");
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(code(&hsb(&["check"])), 3);
    assert_eq!(
        code(&hsb(&["check", "--matrix", "1,1,1;1,1,1", "--dim", "0"])),
        3
    );
    let out = hsb(&["leibniz", "--samples", "many"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--samples"));
    assert_eq!(
        code(&hsb(&[
            "blocks",
            "--sizes",
            "4,4,4",
            "--modulations",
            "1,1,32"
        ])),
        3
    );
    assert_eq!(code(&hsb(&["--help"])), 0);
}

#[test]
fn hs_check_and_classify() {
    let out = hsb(&["hs-check", "--s", "1/2,1/2,1/2", "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["product"], true);
    let out = hsb(&["hs-check", "--s", "1/2,1/2,-1/2"]);
    assert_eq!(code(&out), 1);
    let out = hsb(&["classify", "--matrix", "0,0,0;1/2,-1/4,1/2", "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["type"], "II");
}

#[test]
fn verification_subcommands_report_pass_and_fail() {
    let out = hsb(&["dyadic", "--fn", "SigmaA", "--a", "1", "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["pass"], true);
    // Main exponent 1/8 and implied constant ≈ 76: the ratio cap is exceeded.
    let out = hsb(&[
        "dyadic", "--fn", "rho", "--p", "1/2", "--b0", "1/8", "--b1", "3/4", "--b2", "1/4",
    ]);
    assert_eq!(code(&out), 1);
    let out = hsb(&["dyadic", "--fn", "gamma", "--b1", "1/8", "--b2", "1/8"]);
    assert_eq!(code(&out), 3);

    for args in [
        vec!["leibniz", "--samples", "20000"],
        vec!["identities", "--samples", "20000"],
        vec!["blocks", "--samples", "20000"],
        vec!["rules-equivalence", "--samples", "2000"],
        vec!["dyadic", "--totality", "--samples", "2000"],
        vec!["counterexample", "--family", "1", "--samples", "4000"],
    ] {
        let out = hsb(&args);
        assert_eq!(
            code(&out),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
}

#[test]
fn json_is_byte_identical_and_independent_of_workers() {
    for args in [
        ["counterexample", "--family", "8", "--samples", "8000"],
        ["blocks", "--samples", "9000", "--seed", "4"],
        ["leibniz", "--samples", "9000", "--seed", "5"],
    ] {
        let mut with_json: Vec<&str> = args.to_vec();
        with_json.push("--json");
        let a = hsb(&with_json);
        let b = hsb(&with_json);
        assert_eq!(a.stdout, b.stdout);
        let mut two = with_json.clone();
        two.extend(["--workers", "2"]);
        assert_eq!(hsb(&two).stdout, a.stdout);
        let mut other_seed = with_json.clone();
        other_seed.extend(["--seed", "99"]);
        assert_ne!(hsb(&other_seed).stdout, a.stdout);
    }
}

#[test]
fn exported_conditions_round_trip() {
    let out = hsb(&["export-conditions", "--dim", "3"]);
    assert_eq!(code(&out), 0);
    let doc: ConditionTableDoc = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc, ConditionTableDoc::new(Dim::THREE));
    assert_eq!(doc.conditions.len(), 21);
}

#[test]
fn single_block_accepts_free_leading_modulation() {
    let out = hsb(&[
        "blocks",
        "--sizes",
        "1,64,64",
        "--modulations",
        "-,1,1",
        "--signs",
        "PP",
        "--samples",
        "20000",
        "--json",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["blocks"][0]["spec"]["L"][0], Value::Null);
    assert_eq!(v["blocks"][0]["pass"], true);
}

#[test]
fn every_json_report_is_versioned() {
    let runs: [&[&str]; 11] = [
        &["check", "--matrix", "1,1,1;1,1,1"],
        &["hs-check", "--s", "1,1,1"],
        &["classify", "--matrix", "1,1,1;1,1,1"],
        &["counterexample", "--family", "1", "--samples", "2000"],
        &["dyadic", "--fn", "SigmaA", "--a", "1"],
        &["dyadic", "--totality", "--samples", "500"],
        &["rules-equivalence", "--samples", "500"],
        &["leibniz", "--samples", "1000"],
        &["identities", "--samples", "1000"],
        &["blocks", "--samples", "1000"],
        &["export-conditions"],
    ];
    for args in runs {
        let mut full = args.to_vec();
        full.push("--json");
        let v = json(&hsb(&full));
        assert_eq!(v["schema_version"], 1, "{args:?}");
    }
}
