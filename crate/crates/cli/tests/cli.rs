use std::fs;
use std::path::Path;
use std::process::Command;

use cvnc_core::data::to_csv_string;
use cvnc_core::stats::bootstrap;
use cvnc_core::{
    inject_phase_noise, sample_dataset_at, select_phase_window, three_bin_r_from_values,
    BootstrapSpec, Params, ResampleMode, Statistic,
};
use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        assert_eq!(self.code, 0, "stderr: {}", self.stderr);
        serde_json::from_str(&self.stdout).expect("stdout is JSON")
    }

    fn error(&self) -> Value {
        let line = self
            .stderr
            .lines()
            .last()
            .expect("stderr has an error line");
        serde_json::from_str(line).expect("stderr ends with a JSON error")
    }
}

fn cvnc(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_cvnc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn simulate_writes_data_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = cvnc(
        dir.path(),
        &[
            "simulate", "--r", "0.3", "--loss", "0.1", "--delta", "0.15", "--n", "10000", "--seed",
            "7", "--out", "s.csv",
        ],
    )
    .json();
    assert_eq!(out["n"], 10000);
    assert_eq!(out["config"]["seed"], 7);
    assert!(dir.path().join("s.csv").exists());
    assert!(dir.path().join("s.meta.json").exists());
}

#[test]
fn target_db_hits_requested_variance() {
    let dir = tempfile::tempdir().unwrap();
    let out = cvnc(
        dir.path(),
        &[
            "simulate",
            "--target-db",
            "-2.3",
            "--loss",
            "0.37",
            "--delta",
            "0.15",
            "--n",
            "200000",
            "--out",
            "s.csv",
        ],
    )
    .json();
    // Relative std of the sample variance is about 0.4% here, i.e. 0.017 dB.
    assert!(
        (f(&out["var_x_db"]) + 2.3).abs() < 0.06,
        "{}",
        out["var_x_db"]
    );
}

#[test]
fn missing_squeezing_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = cvnc(
        dir.path(),
        &["simulate", "--loss", "0.1", "--n", "10", "--out", "s.csv"],
    );
    assert_eq!(run.code, 1);
    assert_eq!(run.error()["error"]["kind"], "usage");
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cvnc(dir.path(), &["three-bin", "--in", "missing.csv"]);
    assert_eq!(missing.code, 2);
    assert_eq!(missing.error()["error"]["exit_code"], 2);

    fs::write(dir.path().join("bad.csv"), "theta,x\n0,abc\n").unwrap();
    assert_eq!(cvnc(dir.path(), &["three-bin", "--in", "bad.csv"]).code, 2);

    let bad_param = cvnc(dir.path(), &["ep", "--r", "0.3", "--loss", "1.5"]);
    assert_eq!(bad_param.code, 1);

    // Vacuum data has no identifiable loss: a numeric failure of the fit.
    for (name, center) in [("x.csv", "0"), ("p.csv", "1.5707963267948966")] {
        cvnc(
            dir.path(),
            &[
                "simulate", "--r", "0", "--n", "5000", "--center", center, "--out", name,
            ],
        )
        .json();
    }
    let fit = cvnc(
        dir.path(),
        &["estimate", "--in-x", "x.csv", "--in-p", "p.csv"],
    );
    assert_eq!(fit.code, 3, "{}", fit.stderr);
    assert_eq!(fit.error()["error"]["kind"], "numeric");
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let run = cvnc(dir.path(), &["--help"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("three-bin"));
}

#[test]
fn commands_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sim = [
        "simulate", "--r", "0.5", "--loss", "0.2", "--delta", "0.2", "--n", "20000", "--seed", "3",
    ];
    cvnc(dir.path(), &[&sim[..], &["--out", "a.csv"]].concat()).json();
    cvnc(dir.path(), &[&sim[..], &["--out", "b.csv"]].concat()).json();
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
    let args = [
        "sweep-sigma",
        "--in",
        "a.csv",
        "--sigma-from",
        "0.5",
        "--sigma-to",
        "1.5",
        "--steps",
        "3",
        "--seed",
        "9",
    ];
    let first = cvnc(dir.path(), &args);
    let second = cvnc(dir.path(), &args);
    assert_eq!(first.code, 0);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn pipeline_matches_in_memory_computation() {
    let dir = tempfile::tempdir().unwrap();
    let params = Params::new(0.8, 0.3, 0.15).unwrap();
    let pi = std::f64::consts::PI.to_string();
    cvnc(
        dir.path(),
        &[
            "simulate",
            "--r",
            "0.8",
            "--loss",
            "0.3",
            "--delta",
            "0.15",
            "--n",
            "50000",
            "--seed",
            "11",
            "--phase-window",
            &pi,
            "--out",
            "raw.csv",
        ],
    )
    .json();
    cvnc(
        dir.path(),
        &[
            "inject",
            "--in",
            "raw.csv",
            "--delta-e",
            "0.3",
            "--seed",
            "12",
            "--out",
            "noisy.csv",
        ],
    )
    .json();
    cvnc(
        dir.path(),
        &[
            "select",
            "--in",
            "noisy.csv",
            "--center",
            "0",
            "--half-width",
            "0.2",
            "--out",
            "sel.csv",
        ],
    )
    .json();
    let out = cvnc(
        dir.path(),
        &[
            "three-bin",
            "--in",
            "sel.csv",
            "--sigma",
            "0.7",
            "--d",
            "1",
            "--bootstrap",
            "50",
            "--seed",
            "13",
            "--csv",
            "row.csv",
        ],
    )
    .json();

    let raw = sample_dataset_at(&params, 50_000, 11, 0.0, std::f64::consts::PI).unwrap();
    let noisy = inject_phase_noise(&raw, 0.3, 12).unwrap();
    let sel = select_phase_window(&noisy, 0.0, 0.2).unwrap();
    assert_eq!(
        fs::read_to_string(dir.path().join("sel.csv")).unwrap(),
        to_csv_string(&sel)
    );

    let point = three_bin_r_from_values(&sel.quadratures(), 0.7, 1).unwrap();
    let spec = BootstrapSpec {
        resample_size: sel.len(),
        n_resamples: 50,
        master_seed: 13,
        mode: ResampleMode::WithReplacement,
    };
    let boot = bootstrap(&sel, &spec, Statistic::ThreeBin { sigma: 0.7, d: 1 }).unwrap();
    let csv = fs::read_to_string(dir.path().join("row.csv")).unwrap();
    let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[2], point.r_value.to_string());
    assert_eq!(fields[3], boot.mean.to_string());
    assert_eq!(fields[4], boot.std.to_string());
    // Effective Δ after inject + select is √(0.15² + 0.3²).
    assert!(f(&out["row"]["analytic"]) > 0.0);
}

#[test]
fn single_step_sweep_equals_three_bin() {
    let dir = tempfile::tempdir().unwrap();
    cvnc(
        dir.path(),
        &[
            "simulate", "--r", "0.6", "--loss", "0.2", "--n", "20000", "--out", "s.csv",
        ],
    )
    .json();
    let one = cvnc(
        dir.path(),
        &[
            "three-bin",
            "--in",
            "s.csv",
            "--sigma",
            "1.3",
            "--d",
            "2",
            "--seed",
            "4",
        ],
    )
    .json();
    let sweep = cvnc(
        dir.path(),
        &[
            "sweep-sigma",
            "--in",
            "s.csv",
            "--sigma-from",
            "1.3",
            "--sigma-to",
            "3",
            "--steps",
            "1",
            "--d",
            "2",
            "--seed",
            "4",
        ],
    )
    .json();
    let rows = sweep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0], one["row"]);
}

#[test]
fn ep_of_unsqueezed_state_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    for (l, d) in [("0", "0"), ("0.3", "0.4"), ("0.9", "1.2")] {
        let out = cvnc(dir.path(), &["ep", "--r", "0", "--loss", l, "--delta", d]).json();
        assert_eq!(f(&out["ep"]), 0.0);
    }
}

#[test]
fn estimate_recovers_simulated_params() {
    let dir = tempfile::tempdir().unwrap();
    let state = [
        "--r", "0.7", "--loss", "0.25", "--delta", "0.3", "--n", "100000",
    ];
    cvnc(
        dir.path(),
        &[
            &["simulate"][..],
            &state,
            &["--seed", "1", "--out", "x.csv"],
        ]
        .concat(),
    )
    .json();
    cvnc(
        dir.path(),
        &[
            &["simulate"][..],
            &state,
            &[
                "--seed",
                "2",
                "--center",
                "1.5707963267948966",
                "--out",
                "p.csv",
            ],
        ]
        .concat(),
    )
    .json();
    let out = cvnc(
        dir.path(),
        &[
            "estimate", "--in-x", "x.csv", "--in-p", "p.csv", "--seed", "5",
        ],
    )
    .json();
    let boot = &out["bootstrap"];
    for (key, std_key, truth) in [
        ("r", "r_std", 0.7),
        ("l", "l_std", 0.25),
        ("delta", "delta_std", 0.3),
    ] {
        let (est, sd) = (f(&out[key]), f(&boot[std_key]));
        assert!(
            (est - truth).abs() <= 4.0 * sd,
            "{key}: {est} ± {sd} vs {truth}"
        );
    }
}

#[test]
fn compare_reproduces_moment_method_blind_spot() {
    let dir = tempfile::tempdir().unwrap();
    cvnc(
        dir.path(),
        &[
            "simulate", "--r", "1.0409", "--loss", "0.414", "--delta", "0.37", "--n", "40000",
            "--seed", "21", "--out", "s.csv",
        ],
    )
    .json();
    let out = cvnc(
        dir.path(),
        &[
            "compare", "--in", "s.csv", "--n-list", "2,3,4", "--seed", "2", "--csv", "t.csv",
        ],
    )
    .json();
    let reports = out["rows"][0]["reports"].as_array().unwrap();
    assert_eq!(reports[0]["method"], "bin");
    assert!(f(&reports[0]["v"]) > 0.0);
    assert_eq!(reports[1]["method"], "moment");
    assert_eq!(reports[1]["parameters"]["n"], 2);
    assert_eq!(reports[1]["verdict"], "no detection");
    assert!(f(&out["rows"][0]["ep"]) > 0.0);
    let table = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(table.starts_with("input,delta,v_bin,v_moment_2,v_moment_3,v_moment_4,ep\n"));
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"r": 0.4, "loss": 0.2, "cutoff": 8}"#,
    )
    .unwrap();
    let out = cvnc(dir.path(), &["ep", "--config", "c.json", "--loss", "0.5"]).json();
    assert_eq!(f(&out["config"]["r"]), 0.4);
    assert_eq!(f(&out["config"]["loss"]), 0.5);
    assert_eq!(out["config"]["cutoff"], 8);

    fs::write(dir.path().join("bad.json"), r#"{"r": 0.4, "colour": 1}"#).unwrap();
    assert_eq!(cvnc(dir.path(), &["ep", "--config", "bad.json"]).code, 1);
    assert_eq!(cvnc(dir.path(), &["ep", "--config", "none.json"]).code, 2);
}
