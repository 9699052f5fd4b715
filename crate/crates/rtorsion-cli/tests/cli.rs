//! End-to-end tests of the command-line surface: exit codes, output
//! shape, and determinism of the seeded suite.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rtorsion"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("rtorsion-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{}-{}", std::process::id(), name));
    std::fs::write(&path, contents).unwrap();
    path
}

fn point_complex() -> PathBuf {
    write_temp(
        "point.json",
        r#"{"dim": 0, "alphabet_size": 0, "cells": [1], "relators": [], "boundaries": [], "marks": {}}"#,
    )
}

fn circle_complex() -> PathBuf {
    write_temp(
        "circle.json",
        r#"{
            "dim": 1, "alphabet_size": 1, "cells": [1, 1],
            "boundaries": [[[ [[1, [[0, 1]]], [-1, []]] ]]],
            "relators": [], "marks": {"point": [[0, 0]]}
        }"#,
    )
}

fn trivial_rep() -> PathBuf {
    write_temp(
        "rep0.json",
        r#"{"n": 2, "alphabet_size": 0, "images": []}"#,
    )
}

fn generic_rep() -> PathBuf {
    write_temp(
        "rep1.json",
        r#"{"n": 2, "alphabet_size": 1, "images": [[[[2.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]]]}"#,
    )
}

fn diag_rep() -> PathBuf {
    write_temp(
        "rep_diag.json",
        r#"{"n": 2, "alphabet_size": 1, "images": [[[[2.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]]}"#,
    )
}

fn point_bases() -> PathBuf {
    write_temp(
        "bases_point.json",
        r#"{"bases": [[
            [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]],
            [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
        ]]}"#,
    )
}

#[test]
fn torsion_of_point_prints_one() {
    let out = run(&[
        "torsion",
        point_complex().to_str().unwrap(),
        trivial_rep().to_str().unwrap(),
        "--bases",
        point_bases().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("torsion = 1.00000000000e0+0.00000000000e0i"), "{text}");
    assert!(text.contains("homology dimensions: [3]"), "{text}");
    assert!(!text.contains("NaN"));
}

#[test]
fn torsion_without_needed_bases_is_degenerate() {
    // The adjoint of any SL(2) element fixes a line, so the circle is
    // never acyclic; with no bases supplied the assembly is degenerate.
    for rep in [diag_rep(), generic_rep()] {
        let out = run(&[
            "torsion",
            circle_complex().to_str().unwrap(),
            rep.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("DegenerateAssembly"), "{err}");
    }
}

#[test]
fn parse_error_is_exit_2() {
    let bad = write_temp("bad.json", "{ not json");
    let out = run(&[
        "torsion",
        bad.to_str().unwrap(),
        trivial_rep().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_error_is_exit_3_with_error_name() {
    // det = 2: not unimodular.
    let bad_rep = write_temp(
        "rep_bad.json",
        r#"{"n": 2, "alphabet_size": 1, "images": [[[[1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]]]]}"#,
    );
    let out = run(&[
        "torsion",
        circle_complex().to_str().unwrap(),
        bad_rep.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotUnimodular"));

    // Alphabet mismatch between files.
    let out = run(&[
        "torsion",
        circle_complex().to_str().unwrap(),
        trivial_rep().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("AlphabetMismatch"));
}

#[test]
fn verify_mv_scenarios_pass() {
    for scenario in ["wedge", "disk-sum"] {
        let out = run(&["verify", "mv", scenario, "--seed", "5"]);
        assert!(
            out.status.success(),
            "{scenario}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("PASS"), "{text}");
        assert!(text.contains("ratio"), "{text}");
    }
}

#[test]
fn verify_connected_sum_passes() {
    let out = run(&[
        "verify",
        "connected-sum",
        "solid_torus",
        "lens",
        "5",
        "1",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("T(M # N)"), "{text}");
    assert!(text.contains("PASS"), "{text}");
}

#[test]
fn verify_rejects_unusable_recipes() {
    let out = run(&["verify", "connected-sum", "circle", "lens", "5", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["verify", "connected-sum", "solid_torus", "lens", "4", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["verify", "mv", "mystery"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn suite_names_a_forced_failure() {
    let out = bin()
        .args(["suite", "--seed", "1"])
        .env("RTORSION_SUITE_SELFTEST", "1")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("selftest/forced-failure"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn suite_is_deterministic_per_seed() {
    let a = run(&["suite", "--seed", "11"]);
    let b = run(&["suite", "--seed", "11"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout, "same seed must give byte-identical output");
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.contains("all properties passed"), "{text}");
    assert!(!text.contains("NaN"));
}

#[test]
fn committed_fixtures_stay_valid() {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = run(&[
        "torsion",
        fixtures.join("lens_5_1.json").to_str().unwrap(),
        fixtures.join("rep_zeta5.json").to_str().unwrap(),
        "--bases",
        fixtures.join("bases_lens_5_1_zeta5.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("homology dimensions: [1, 0, 0, 1]"), "{text}");

    let out = run(&[
        "torsion",
        fixtures.join("point.json").to_str().unwrap(),
        fixtures.join("rep_trivial.json").to_str().unwrap(),
        "--bases",
        fixtures.join("bases_point.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
}

#[test]
fn json_output_is_structured() {
    let out = run(&[
        "torsion",
        point_complex().to_str().unwrap(),
        trivial_rep().to_str().unwrap(),
        "--bases",
        point_bases().to_str().unwrap(),
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid json");
    assert_eq!(v["homology_dims"], serde_json::json!([3]));
    assert_eq!(v["torsion"][0], serde_json::json!(1.0));
}
