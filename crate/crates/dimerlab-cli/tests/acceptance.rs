//! Acceptance gate for the command line interface: the determinism
//! criterion proper, plus interface checks for schemas, oracle verdicts,
//! and the exit-code contract.

use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dimerlab"));
    c.env_remove("DIMERLAB_PRECISION");
    c
}

fn run(args: &[&str]) -> (String, String, i32) {
    let out = bin().args(args).output().expect("spawn dimerlab");
    (
        String::from_utf8(out.stdout).expect("stdout utf8"),
        String::from_utf8(out.stderr).expect("stderr utf8"),
        out.status.code().expect("exit code"),
    )
}

/// Splits one CSV line into cells, honoring double-quote escaping.
fn csv_cells(line: &str) -> Vec<String> {
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' => quoted = true,
            ',' if !quoted => cells.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    cells.push(cur);
    cells
}

/// Data rows of a CSV payload: comment lines and the header stripped.
fn data_rows(stdout: &str) -> Vec<Vec<String>> {
    stdout
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(csv_cells)
        .collect()
}

fn cell_f64(cell: &str) -> f64 {
    cell.parse::<f64>()
        .unwrap_or_else(|_| panic!("cell {cell:?} is not numeric"))
}

/// Criterion 9: two runs of every command produce byte-identical data
/// output, on both output formats.
#[test]
fn criterion_9_determinism_every_command() {
    let commands: &[&[&str]] = &[
        &["count", "--m", "8", "--n", "8", "--oracle"],
        &["count", "--m", "6", "--n", "5", "--monomers", "1,1:6,5"],
        &["hookup", "--m", "6", "--n", "5", "--oracle"],
        &["continuum", "--l", "1.3"],
        &["continuum", "--l", "0.02"],
        &["converge", "--l", "1", "--sizes", "3,7"],
        &["verify"],
    ];
    let mut checked = 0usize;
    for args in commands {
        for format in ["csv", "json"] {
            let mut full: Vec<&str> = vec!["--format", format];
            full.extend_from_slice(args);
            let (out_a, err_a, code_a) = run(&full);
            let (out_b, err_b, code_b) = run(&full);
            assert_eq!(code_a, 0, "{full:?} failed: {err_a}");
            assert_eq!(code_b, 0, "{full:?} failed on rerun: {err_b}");
            assert!(!out_a.is_empty(), "{full:?} produced no output");
            assert_eq!(out_a, out_b, "{full:?} output differs between runs");
            checked += 1;
        }
    }
    println!("[PASS] criterion 9: {checked} command invocations byte-identical across reruns");
}

#[test]
fn count_full_grid_agrees_with_closed_form() {
    let (out, _, code) = run(&["count", "--m", "8", "--n", "8", "--oracle"]);
    assert_eq!(code, 0);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row[3], "12988816");
    assert_eq!(row[4], "12988816");
    assert_eq!(row[5], "MATCH");
}

#[test]
fn count_handles_trivial_and_monomer_cases() {
    let (out, _, code) = run(&["count", "--m", "2", "--n", "1"]);
    assert_eq!(code, 0);
    assert_eq!(data_rows(&out)[0][3], "1");

    let (out, _, code) = run(&[
        "count", "--m", "2", "--n", "3", "--monomers", "1,1:2,1", "--oracle",
    ]);
    assert_eq!(code, 0);
    let rows = data_rows(&out);
    assert_eq!(rows[0][2], "1,1:2,1");
    assert_eq!(rows[0][3], "2");
    assert_eq!(rows[0][4], "2");
    assert_eq!(rows[0][5], "MATCH");
}

#[test]
fn count_rejects_oversized_grid_with_resource_code() {
    let (_, err, code) = run(&["count", "--m", "30", "--n", "30"]);
    assert_eq!(code, 4, "expected resource-cap exit, stderr: {err}");
    assert!(err.contains("limit"), "stderr should name the cap: {err}");
}

#[test]
fn hookup_small_grid_matches_exhaustive_classification() {
    let (out, _, code) = run(&["hookup", "--m", "2", "--n", "3", "--oracle"]);
    assert_eq!(code, 0);
    let rows = data_rows(&out);
    let row = &rows[0];
    let p = cell_f64(&row[6]);
    assert!((p - 0.6).abs() < 1e-12, "P(2,3) = {p}, expected 3/5");
    assert_eq!(row[7], "3/5");
    assert_eq!(row[8], "MATCH");
}

#[test]
fn hookup_large_grid_approaches_one_third() {
    let (out, _, code) = run(&["hookup", "--m", "64", "--n", "63"]);
    assert_eq!(code, 0);
    let p = cell_f64(&data_rows(&out)[0][6]);
    assert!(
        (p - 1.0 / 3.0).abs() <= 0.05,
        "P(64,63) = {p}, expected within 0.05 of 1/3"
    );
}

#[test]
fn hookup_rejects_bad_parity_as_usage_error() {
    let (_, err, code) = run(&["hookup", "--m", "3", "--n", "3"]);
    assert_eq!(code, 1, "expected usage exit, stderr: {err}");
}

#[test]
fn continuum_unit_ratio_gives_one_third_with_tight_spread() {
    let (out, _, code) = run(&["continuum", "--l", "1"]);
    assert_eq!(code, 0);
    let rows = data_rows(&out);
    let row = &rows[0];
    let h = cell_f64(&row[2]);
    assert!((h - 1.0 / 3.0).abs() < 1e-15, "H(1) = {h}");
    let spread = cell_f64(&row[5]);
    assert!(spread < 1e-18, "route spread {spread} too wide at L = 1");
}

#[test]
fn continuum_saturates_honestly_far_out() {
    let (out, _, code) = run(&["continuum", "--l", "1e9"]);
    assert_eq!(code, 0);
    let row = &data_rows(&out)[0];
    assert_eq!(row[2], "0", "H must saturate to an exact zero, got {:?}", row[2]);
    assert_eq!(row[5], "0", "spread must be zero at saturation");
}

#[test]
fn converge_schema_is_fixed_and_error_shrinks() {
    let (out, _, code) = run(&["converge", "--l", "1", "--sizes", "3,7,15"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# "), "first line must be the comment");
    assert!(comment.contains("L_eff"), "comment documents the synthesis rule");
    assert_eq!(
        lines.next().unwrap(),
        "M,N,L_eff,P_discrete,H_continuum,abs_error,Z_ratio"
    );
    let rows = data_rows(&out);
    let widths: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(widths, ["4", "8", "16"]);
    let errs: Vec<f64> = rows.iter().map(|r| cell_f64(&r[5])).collect();
    assert!(
        errs.windows(2).all(|w| w[1] < w[0]),
        "abs_error must shrink along {errs:?}"
    );
}

#[test]
fn verify_battery_passes_and_reports_each_check() {
    let (out, _, code) = run(&["verify"]);
    assert_eq!(code, 0);
    let rows = data_rows(&out);
    assert!(rows.len() >= 40, "battery unexpectedly small: {}", rows.len());
    for row in &rows {
        assert_eq!(row[4], "PASS", "failed check: {row:?}");
    }
}

#[test]
fn json_output_is_well_formed() {
    let (out, _, code) = run(&["--format", "json", "verify", "--suite", "discrete"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).expect("valid json");
    let rows = v["rows"].as_array().expect("rows array");
    assert!(!rows.is_empty());
    for row in rows {
        for key in ["check", "at", "deviation", "tolerance", "verdict"] {
            assert!(row[key].is_string(), "row lacks {key}: {row}");
        }
        assert_eq!(row["verdict"], "PASS");
    }
}

#[test]
fn usage_errors_exit_one() {
    let (_, _, code) = run(&["count", "--m", "4", "--n", "4", "--frobnicate"]);
    assert_eq!(code, 1);
    let (_, _, code) = run(&["--epsilon", "2", "continuum", "--l", "1"]);
    assert_eq!(code, 1);
    let (_, _, code) = run(&["--precision", "16", "continuum", "--l", "1"]);
    assert_eq!(code, 1);
    let (_, _, code) = run(&["converge", "--l", "1", "--sizes", "4"]);
    assert_eq!(code, 1);
    let (_, _, code) = run(&["verify", "--suite", "nope"]);
    assert_eq!(code, 1);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = std::env::temp_dir().join("dimerlab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("converge.csv");
    let path_str = path.to_str().unwrap();

    let (direct, _, code) = run(&["converge", "--l", "1", "--sizes", "3,7"]);
    assert_eq!(code, 0);
    let (stdout, _, code) = run(&[
        "--out", path_str, "converge", "--l", "1", "--sizes", "3,7",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty(), "data must go to the file, not stdout");
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, direct);
    std::fs::remove_file(&path).ok();
}

#[test]
fn precision_env_var_sets_the_default() {
    let out = bin()
        .env("DIMERLAB_PRECISION", "128")
        .args(["continuum", "--l", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let narrow = String::from_utf8(out.stdout).unwrap();
    let narrow_h = &data_rows(&narrow)[0][2];

    let (wide, _, _) = run(&["continuum", "--l", "1"]);
    let wide_h = &data_rows(&wide)[0][2];
    assert!(
        narrow_h.len() < wide_h.len(),
        "128-bit run should print fewer digits: {narrow_h} vs {wide_h}"
    );
    assert_eq!(&wide_h[..20], &narrow_h[..20], "leading digits must agree");
}
