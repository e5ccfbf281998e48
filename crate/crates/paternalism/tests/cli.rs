//! End-to-end tests of the `paternalism` binary: artifact pipelines,
//! byte-level reproducibility, and exit-code mapping.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use paternalism::{welfare_gap, OptionId};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paternalism"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("UTF-8 output")
}

/// Data rows (no comments, no header) of a CSV artifact.
fn data_rows(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .collect()
}

#[test]
fn posterior_table_emits_provenance_and_is_idempotent() {
    let args = [
        "posterior-table",
        "--p",
        "0.2",
        "--ref",
        "0.2",
        "--digits",
        "3",
    ];
    let first = stdout_of(&args);
    let second = stdout_of(&args);
    assert_eq!(
        first, second,
        "identical invocations must produce identical bytes"
    );

    let mut lines = first.lines();
    let provenance = lines.next().unwrap();
    assert!(provenance.starts_with("# paternalism "));
    assert!(provenance.contains("cmd: posterior-table"));
    assert_eq!(
        lines.next().unwrap(),
        "k,mean,median,mode,var,mae,rmse,kl,w1"
    );
    assert_eq!(data_rows(&first).len(), 9);
    assert!(first.lines().last().unwrap().starts_with("inf,"));

    // A restricted grid honors the flag.
    let small = stdout_of(
        [
            "posterior-table",
            "--p",
            "0.5",
            "--ref",
            "0.5",
            "--k-grid",
            "0,inf",
        ]
        .as_ref(),
    );
    assert_eq!(data_rows(&small).len(), 2);
}

#[test]
fn regions_writes_grid_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("regions.csv");
    let svg = dir.path().join("regions.svg");
    let out = run(&[
        "regions",
        "--steps",
        "41",
        "--eps-x",
        "0.05",
        "--eps-y",
        "0.1",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(data_rows(&text).len(), 41 * 41);
    assert!(text.lines().nth(1).unwrap().starts_with("phi,q,decision,"));
    let svg_text = fs::read_to_string(&svg).unwrap();
    assert!(svg_text.starts_with("<svg") && svg_text.trim_end().ends_with("</svg>"));
}

#[test]
fn simulate_is_reproducible_and_feeds_fit_without_transformation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{"n_choosers": 400, "n_cas": 120, "seed": 9, "k_grid": [0, 5, "exact"]}"#,
    )
    .unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let cfg = cfg_path.to_str().unwrap();
        let res = run(&["simulate", "--config", cfg, "--out", out.to_str().unwrap()]);
        assert!(
            res.status.success(),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
    for name in ["cas.csv", "choosers.csv", "rates.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let cas = fs::read_to_string(out_a.join("cas.csv")).unwrap();
    assert!(cas.starts_with("# paternalism "));
    assert!(cas
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("ca_id,ca_pref,pi,intervened,imposed"));
    assert_eq!(data_rows(&cas).len(), 120 * 3);
    let rates = fs::read_to_string(out_a.join("rates.csv")).unwrap();
    assert_eq!(data_rows(&rates).len(), 3);

    // The panel feeds the estimator as-is. This degenerate-belief panel is
    // honestly flagged as a boundary fit, but the pipeline itself is clean.
    let fit_json = stdout_of(&["fit", "--input", out_a.join("cas.csv").to_str().unwrap()]);
    let parsed: serde_json::Value = serde_json::from_str(&fit_json).unwrap();
    let mut keys: Vec<&str> = parsed
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "ci_phi",
            "ci_sigma",
            "converged",
            "loglik",
            "n_obs",
            "phi_hat",
            "sigma_hat"
        ]
    );
    assert!(parsed["n_obs"].as_u64().unwrap() > 0);
}

/// Writes a probit-generated panel with spread-out beliefs so the fit is
/// healthy, then drives fit -> predict end to end.
fn write_probit_panel(path: &Path, n: usize) {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.8).unwrap();
    let mut text = String::from("ca_id,ca_pref,pi,intervened,imposed\n");
    for i in 0..n {
        let ca_type = if rng.gen_bool(0.5) {
            OptionId::One
        } else {
            OptionId::Two
        };
        let pi: f64 = rng.gen_range(0.2..=0.9);
        let gap = welfare_gap(ca_type, 0.3, pi);
        let imposed = if gap + noise.sample(&mut rng) > 0.0 {
            1
        } else {
            2
        };
        let pref = match ca_type {
            OptionId::One => 1,
            OptionId::Two => 2,
        };
        text.push_str(&format!("{i},{pref},{pi},1,{imposed}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let panel = dir.path().join("panel.csv");
    write_probit_panel(&panel, 3000);

    let fit_path = dir.path().join("fit.json");
    let out = run(&[
        "fit",
        "--input",
        panel.to_str().unwrap(),
        "--out",
        fit_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fitted: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&fit_path).unwrap()).unwrap();
    assert_eq!(fitted["converged"], serde_json::Value::Bool(true));
    let phi_hat = fitted["phi_hat"].as_f64().unwrap();
    assert!((phi_hat - 0.3).abs() < 0.1, "phi_hat = {phi_hat}");

    let predictions = stdout_of(&[
        "predict",
        "--input",
        panel.to_str().unwrap(),
        "--fit",
        fit_path.to_str().unwrap(),
    ]);
    let rows = data_rows(&predictions);
    assert_eq!(rows.len(), 3000);
    assert!(predictions
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("row,p_impose_one,"));
    // Probabilities are probabilities and the classifier beats coin flips.
    let mut correct = 0usize;
    for row in &rows {
        let fields: Vec<&str> = row.split(',').collect();
        let p: f64 = fields[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&p), "p = {p}");
        if fields[2] == fields[3] {
            correct += 1;
        }
    }
    assert!(
        correct as f64 / rows.len() as f64 > 0.55,
        "accuracy {correct}/3000"
    );
}

#[test]
fn stats_subcommands_emit_single_result_rows() {
    let prop = stdout_of(&["stats", "prop", "--a", "43/54", "--b", "12/23"]);
    let rows = data_rows(&prop);
    assert_eq!(rows.len(), 1);
    let fields: Vec<&str> = rows[0].split(',').collect();
    let chi2: f64 = fields[0].parse().unwrap();
    assert!((chi2 - 4.6885).abs() < 1e-3);

    let dir = tempfile::tempdir().unwrap();
    let panel = dir.path().join("panel.csv");
    fs::write(&panel, "a,b,c\n1,2,3\n1.5,2.5,3.5\n0.5,1.5,2.5\n").unwrap();
    let pagel = stdout_of(&["stats", "pagel", "--input", panel.to_str().unwrap()]);
    let rows = data_rows(&pagel);
    assert_eq!(rows.len(), 1);
    assert!(pagel.contains("l,z,chi2,p,tied"));
    let l: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert_eq!(l, 42.0, "perfect rising trend on 3 subjects x 3 conditions");
}

#[test]
fn exit_codes_distinguish_domain_and_usage_errors() {
    // Success.
    assert_eq!(
        run(&[
            "posterior-table",
            "--p",
            "0.2",
            "--ref",
            "0.2",
            "--k-grid",
            "1"
        ])
        .status
        .code(),
        Some(0)
    );
    // Domain errors from the library surface as exit 1 with a diagnostic.
    let domain = run(&["posterior-table", "--p", "1.7", "--ref", "0.2"]);
    assert_eq!(domain.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&domain.stderr).starts_with("error: "));
    // Missing files are execution errors, not usage errors.
    assert_eq!(
        run(&["fit", "--input", "/nonexistent/panel.csv"])
            .status
            .code(),
        Some(1)
    );
    // Usage problems (unknown flags, missing required arguments) exit 2.
    assert_eq!(
        run(&["posterior-table", "--p", "0.2"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        run(&["stats", "prop", "--a", "4/3", "--b", "1/2"])
            .status
            .code(),
        Some(2)
    );
}
