//! End-to-end tests against the built binary: observable behavior of
//! every subcommand, the exit-code contract, and the format round trips.

use std::path::PathBuf;
use std::process::Command;

use biset_core::biset::BisetTable;
use biset_core::iso::{verify_iso, IsoWitness};
use biset_core::mcg::parse_mcg_word;
use biset_core::word::Word;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_biset"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).expect("utf8 stdout"),
        String::from_utf8(out.stderr).expect("utf8 stderr"),
    )
}

fn tmp(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("biset-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join(name);
    std::fs::write(&path, content).expect("temp file");
    path
}

fn base_file(name: &str, d: u32, n: u32) -> PathBuf {
    tmp(name, &BisetTable::base(d, n).unwrap().to_text())
}

#[test]
fn reduce_matches_the_documented_example() {
    let (code, stdout, _) = run(&["reduce", "g1*g2*g2^-1"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "g1\n");
}

#[test]
fn reduce_requires_an_explicit_rank_for_boundary_words() {
    let (code, _, stderr) = run(&["reduce", "ginf"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--n"), "stderr: {stderr}");
    let (code, stdout, _) = run(&["reduce", "ginf", "--n", "3"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), Word::infinity(3).to_string());
}

#[test]
fn twist_prints_the_generator_images() {
    let (code, stdout, _) = run(&["twist", "1", "inf", "--n", "3"]);
    assert_eq!(code, 0);
    let a = parse_mcg_word("t(1,inf)", 3).unwrap();
    let expected: String =
        (1..=3).map(|k| format!("g{k} -> {}\n", a.image(k))).collect();
    assert_eq!(stdout, expected);
}

#[test]
fn twist_rejects_bad_indices() {
    let (code, _, stderr) = run(&["twist", "3", "2", "--n", "3"]);
    assert_eq!(code, 2, "stderr: {stderr}");
}

#[test]
fn apply_runs_twist_words_left_to_right() {
    let (code, stdout, _) = run(&["apply", "t(1,2)*t(1,2)^-1", "g1"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "g1");
    let a = parse_mcg_word("t(1,2)", 3).unwrap();
    let expected = a.apply(&Word::parse("g2", 3).unwrap()).unwrap();
    let (code, stdout, _) = run(&["apply", "t(1,2)", "g2", "--n", "3"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), expected.to_string());
}

#[test]
fn base_output_round_trips_through_the_parser() {
    let (code, stdout, _) = run(&["base", "--d", "2", "--n", "3"]);
    assert_eq!(code, 0);
    let parsed = BisetTable::parse(&stdout).unwrap();
    assert_eq!(parsed, BisetTable::base(2, 3).unwrap());
}

#[test]
fn base_json_output_is_accepted_back_as_a_table_file() {
    let (code, stdout, _) = run(&["base", "--d", "2", "--n", "3", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["d"], 2);
    assert_eq!(v["entries"].as_array().unwrap().len(), 8);
    let file = tmp("base23.json", &stdout);
    let t = BisetTable::base(2, 3).unwrap();
    let (coeff, sheet) = t.act_word(1, &Word::parse("g1", 3).unwrap()).unwrap();
    let (code, stdout, _) = run(&["act", file.to_str().unwrap(), "1", "g1"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, format!("coeff {coeff}\nsheet {sheet}\n"));
}

#[test]
fn pre_and_post_write_parseable_tables() {
    let file = base_file("base34.txt", 3, 4);
    let t = BisetTable::base(3, 4).unwrap();
    let a = parse_mcg_word("t(1,inf)", 4).unwrap();

    let (code, stdout, _) = run(&["post", file.to_str().unwrap(), "t(1,inf)"]);
    assert_eq!(code, 0);
    let parsed = BisetTable::parse(&stdout).unwrap();
    assert_eq!(parsed, t.postcompose(a.images()).unwrap());

    let (code, stdout, _) = run(&["pre", file.to_str().unwrap(), "t(1,inf)"]);
    assert_eq!(code, 0);
    let parsed = BisetTable::parse(&stdout).unwrap();
    assert_eq!(parsed, t.precompose(a.images()).unwrap());
}

#[test]
fn iso_emits_a_witness_that_verifies() {
    let t = BisetTable::base(2, 3).unwrap();
    let lhs = t.postcompose(parse_mcg_word("t(1,inf)", 3).unwrap().images()).unwrap();
    let rhs = t.precompose(parse_mcg_word("t(3,inf)", 3).unwrap().images()).unwrap();
    let fa = tmp("iso_a.txt", &lhs.to_text());
    let fb = tmp("iso_b.txt", &rhs.to_text());

    let (code, stdout, _) = run(&["iso", fa.to_str().unwrap(), fb.to_str().unwrap()]);
    assert_eq!(code, 0);
    let w = IsoWitness::parse(&stdout, 3).unwrap();
    assert!(verify_iso(&lhs, &rhs, &w).unwrap());
}

#[test]
fn iso_json_witness_pipes_back_into_verification() {
    let t = BisetTable::base(2, 3).unwrap();
    let lhs = t.postcompose(parse_mcg_word("t(1,inf)", 3).unwrap().images()).unwrap();
    let rhs = t.precompose(parse_mcg_word("t(3,inf)", 3).unwrap().images()).unwrap();
    let fa = tmp("isoj_a.txt", &lhs.to_text());
    let fb = tmp("isoj_b.txt", &rhs.to_text());

    let (code, stdout, _) =
        run(&["iso", fa.to_str().unwrap(), fb.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["isomorphic"], true);

    let wf = tmp("isoj_w.json", &stdout);
    let (code, stdout, _) = run(&[
        "iso",
        fa.to_str().unwrap(),
        fb.to_str().unwrap(),
        "--witness",
        wf.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("witness verifies"));
}

#[test]
fn iso_negative_result_is_exit_one_not_three() {
    let t = BisetTable::base(2, 3).unwrap();
    let twisted = t.postcompose(parse_mcg_word("t(2,inf)", 3).unwrap().images()).unwrap();
    let fa = base_file("neg_a.txt", 2, 3);
    let fb = tmp("neg_b.txt", &twisted.to_text());

    let (code, stdout, _) = run(&["iso", fa.to_str().unwrap(), fb.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("not isomorphic"), "stdout: {stdout}");

    let (code, stdout, _) =
        run(&["iso", fa.to_str().unwrap(), fb.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["isomorphic"], false);
}

#[test]
fn iso_rejects_a_wrong_witness_with_exit_one() {
    let t = BisetTable::base(2, 3).unwrap();
    let lhs = t.postcompose(parse_mcg_word("t(1,inf)", 3).unwrap().images()).unwrap();
    let rhs = t.precompose(parse_mcg_word("t(3,inf)", 3).unwrap().images()).unwrap();
    let fa = tmp("wrongw_a.txt", &lhs.to_text());
    let fb = tmp("wrongw_b.txt", &rhs.to_text());
    let wf = tmp("wrongw_w.txt", &IsoWitness::identity(2, 3).to_text());

    let (code, stdout, _) = run(&[
        "iso",
        fa.to_str().unwrap(),
        fb.to_str().unwrap(),
        "--witness",
        wf.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(stdout.contains("does not verify"));
}

#[test]
fn verify_lemma_single_instance_prints_the_witness() {
    let (code, stdout, _) = run(&["verify-lemma", "--which", "1", "--d", "2", "--n", "3"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("ok which=1 d=2 n=3"));
    assert!(stdout.contains("witness v1"));
}

#[test]
fn verify_lemma_sweep_prints_a_summary() {
    let (code, stdout, _) = run(&["verify-lemma", "--all", "--d", "2", "--n", "3"]);
    assert_eq!(code, 0);
    // identity 1 once, identities 2 and 3 at i=1,2, identity 4 at (1,2)
    assert!(stdout.contains("checked 6 instances: all hold"), "stdout: {stdout}");
}

#[test]
fn verify_lemma_usage_errors_are_exit_two() {
    for args in [
        &["verify-lemma"][..],
        &["verify-lemma", "--all", "--i", "1"][..],
        &["verify-lemma", "--which", "4", "--d", "2", "--n", "4", "--i", "1"][..],
        &["verify-lemma", "--which", "5", "--d", "2", "--n", "3"][..],
        &["verify-lemma", "--which", "1", "--d", "2", "--n", "3", "--i", "1"][..],
    ] {
        let (code, _, stderr) = run(args);
        assert_eq!(code, 2, "args {args:?} gave stderr: {stderr}");
    }
}

#[test]
fn lift_positive_includes_images_and_witness() {
    let (code, stdout, _) = run(&["lift", "t(1,inf)", "--d", "2", "--n", "3"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("liftable"));
    assert!(stdout.contains("psi g1 ="));
    assert!(stdout.contains("witness v1"));
}

#[test]
fn lift_negative_reports_every_failed_alignment() {
    let (code, stdout, _) = run(&["lift", "t(2,inf)", "--d", "2", "--n", "3"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("not liftable"));

    let (code, stdout, _) =
        run(&["lift", "t(2,inf)", "--d", "2", "--n", "3", "--format", "json"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["liftable"], false);
    assert_eq!(v["candidates_tried"], 2);
    assert_eq!(v["failures"].as_array().unwrap().len(), 2);
}

#[test]
fn closure_lists_all_ten_pairs_at_four_points() {
    let (code, stdout, _) = run(&["closure", "--n", "4"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("complete true"));
    let members = stdout
        .lines()
        .find(|l| l.starts_with("members "))
        .expect("members line");
    assert_eq!(members.split_whitespace().count(), 11); // keyword + 10 pairs

    let (code, _, _) = run(&["closure", "--n", "2"]);
    assert_eq!(code, 2);
}

#[test]
fn orbit_reports_the_quadratic_classes() {
    let (code, stdout, _) =
        run(&["orbit", "--d", "2", "--n", "3", "--depth", "2", "--bound", "4"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("classes 2"), "stdout: {stdout}");

    let (code, stdout, _) = run(&[
        "orbit", "--d", "2", "--n", "3", "--depth", "2", "--bound", "4", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["classes"].as_array().unwrap().len(), 2);
    assert_eq!(v["partial"], false);
}

#[test]
fn missing_files_are_usage_errors_naming_the_path() {
    let (code, _, stderr) = run(&["act", "/no/such/table.txt", "1", "g1"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("/no/such/table.txt"));
}

#[test]
fn malformed_table_files_report_the_position() {
    let file = tmp("broken.txt", "biset v1\nd 2\nn 3\ng1 1\n");
    let (code, _, stderr) = run(&["act", file.to_str().unwrap(), "1", "g1"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("broken.txt"), "stderr: {stderr}");
}

#[test]
fn unknown_subcommands_are_usage_errors() {
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
}
