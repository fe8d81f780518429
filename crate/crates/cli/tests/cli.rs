use std::io::Write;
use std::process::{Command, Output};

use coincidence::report::MachineReport;
use coincidence_cli::run_cli;

fn coincidence(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coincidence"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CASE: &str = r#"
case_name = "two small wards"
suspect = "N"
variant = "corrected"

[[wards]]
name = "A"
total_shifts = 200
suspect_shifts = 40
total_incidents = 6
suspect_incidents = 4
nurse_count = 5

[[wards]]
name = "B"
total_shifts = 150
suspect_shifts = 30
total_incidents = 5
suspect_incidents = 3

[[evidence]]
label = "witness"
lr = 4.0
provenance = "assigned"
"#;

fn case_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn pooled_builtin_reports_pooled_tail() {
    let o = coincidence(&["analyze", "--builtin", "corrected", "--method", "pooled"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("pooled_tail"));
    assert!(out.contains("p-value = 0.0045460138"), "{out}");
    assert!(out.contains("data variant: corrected"));
    assert!(out.contains("conditional on the total number of incidents and the total number of shifts"));

    let o = coincidence(&["analyze", "--builtin", "original", "--method", "pooled"]);
    assert!(stdout(&o).contains("p-value = 0.0038215"));
}

#[test]
fn elffers_carries_not_a_p_value_caveat() {
    let o = coincidence(&["analyze", "--builtin", "original", "--method", "elffers", "--jkz-multiplier", "27"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("value (not a p-value) = 0.0000000031791"), "{out}");
    assert!(out.contains("caveat: the product of per-ward tail probabilities is NOT a p-value"));
}

#[test]
fn elffers_requires_multiplier() {
    let o = coincidence(&["analyze", "--builtin", "corrected", "--method", "elffers"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--jkz-multiplier"));
}

#[test]
fn missing_file_exits_nonzero() {
    let o = coincidence(&["analyze", "missing.file", "--method", "pooled"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.file"));
    let o = coincidence(&["analyze", "missing.file"]);
    assert!(!o.status.success());
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = coincidence(&["analyze", "--builtin", "corrected", "--method", "pooled", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_case_reports_location() {
    let f = case_file("case_name = \"x\"\nsuspect = \"y\"\nvariant = \"corrected\"\n\n[[wards]]\nname = \"A\"\ntotal_shifts = \"many\"\n");
    let o = coincidence(&["analyze", "--case", f.path().to_str().unwrap(), "--method", "per-ward"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 7"), "{}", String::from_utf8_lossy(&o.stderr));

    let f = case_file(&CASE.replace("suspect_shifts = 40", "suspect_shifts = 400"));
    let o = coincidence(&["analyze", f.path().to_str().unwrap(), "--method", "per-ward"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("suspect_shifts exceeds total_shifts"));
}

#[test]
fn machine_output_matches_text() {
    let f = case_file(CASE);
    let path = f.path().to_str().unwrap();
    for method in ["per-ward", "bonferroni", "pooled", "convolved", "fisher", "poisson-lr", "binomial-cond", "bayes"] {
        let machine = coincidence(&["analyze", path, "--method", method, "--wards", "A,B", "--output", "machine"]);
        let text = coincidence(&["analyze", path, "--method", method, "--wards", "A,B"]);
        if method == "bonferroni" {
            // ward B has no nurse count
            assert!(!machine.status.success());
            continue;
        }
        assert!(machine.status.success(), "{method}: {}", String::from_utf8_lossy(&machine.stderr));
        let report: MachineReport = toml::from_str(&stdout(&machine)).unwrap();
        assert_eq!(report.case_name, "two small wards");
        assert!(!report.results.is_empty());
        let text = stdout(&text);
        for r in &report.results {
            assert!(text.contains(&r.fingerprint), "{method}");
            assert!(text.contains(&format!("= {}", r.value)), "{method}: {} missing", r.value);
        }
    }
}

#[test]
fn default_wards_skip_first() {
    let f = case_file(CASE);
    let o = coincidence(&["analyze", f.path().to_str().unwrap(), "--method", "pooled"]);
    let out = stdout(&o);
    assert!(out.contains("pooled tail, B ["), "{out}");
}

#[test]
fn poisson_basis_flag() {
    let o = coincidence(&["analyze", "--builtin", "corrected", "--method", "poisson-lr", "--mu-basis", "include-suspect"]);
    assert!(stdout(&o).contains("value (not a p-value) = 25.12"));
    let o = coincidence(&["analyze", "--builtin", "corrected", "--method", "poisson-lr", "--mu-basis", "fixed=0.02"]);
    assert!(o.status.success());
    let o = coincidence(&["analyze", "--builtin", "corrected", "--method", "poisson-lr", "--mu-basis", "fixed=-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn relative_risk_is_seeded() {
    let args = ["analyze", "--builtin", "corrected", "--method", "relative-risk", "--replicates", "5000", "--seed", "9", "--output", "machine"];
    let a = stdout(&coincidence(&args));
    let b = stdout(&coincidence(&args));
    assert_eq!(a, b);
    let report: MachineReport = toml::from_str(&a).unwrap();
    let r = &report.results[0];
    assert_eq!(r.numbers["nurse_count"], 11.0);
    assert_eq!(r.numbers["replicates"], 5000.0);
    assert!(r.inputs.contains("seed=9"));
}

#[test]
fn reproduce_paper_lists_rows_and_fails_on_any_failure() {
    let (outcome, err) = run_cli(["coincidence", "reproduce-paper", "--seed", "3"]);
    assert!(err.is_none());
    assert!(outcome.stdout.contains("Monte Carlo seed 3"));
    assert!(outcome.stdout.contains("Poisson LR, mu = 13/614"));
    let failing = outcome.stdout.lines().filter(|l| l.ends_with("FAIL")).count();
    assert_eq!(outcome.status, i32::from(failing > 0));
}
