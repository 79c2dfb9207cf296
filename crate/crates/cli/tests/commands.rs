use std::path::Path;
use std::process::{Command, Output};

fn bpre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpre"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let (header, rest) = text.split_once('\n').unwrap();
    assert!(header.starts_with("# generated_unix="), "{header}");
    rest.to_string()
}

fn rows(csv_body: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(csv_body.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn survival_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("case_ii.conf");
    std::fs::write(
        &config,
        "family = linear_fractional\np0 = 0.5\nnoise = uniform\neps_list = 0.1, 0.05\nrho = 1\nestimator = both\n",
    )
    .unwrap();
    let outs: Vec<_> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}.csv"));
            let status = bpre(&[
                "survival",
                "--config",
                config.to_str().unwrap(),
                "--seed",
                "17",
                "--reps",
                "500",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(status.status.success(), "{status:?}");
            body(&out)
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    let table = rows(&outs[0]);
    assert_eq!(table.len(), 4);
    for row in &table {
        assert_eq!(row["seed"], "17");
        assert_eq!(row["n_reps"], "500");
    }
}

#[test]
fn case_i_ratio_approaches_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = bpre(&[
        "sweep",
        "--seed",
        "1",
        "--reps",
        "20",
        "--out",
        out.to_str().unwrap(),
        "eps_list=0.1,0.05,0.02",
        "rho=0",
        "tol_q=1e-12",
    ]);
    assert!(o.status.success(), "{o:?}");
    let ratios: Vec<f64> = rows(&body(&out))
        .iter()
        .map(|r| r["ratio"].parse().unwrap())
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    assert!((0.85..=1.0).contains(&ratios[2]));
}

#[test]
fn noise_dominated_rows_predict_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iii.csv");
    let o = bpre(&[
        "survival",
        "--seed",
        "2",
        "--reps",
        "2000",
        "--out",
        out.to_str().unwrap(),
        "epsilon=0.05",
        "rho=3",
    ]);
    assert!(o.status.success(), "{o:?}");
    let table = rows(&body(&out));
    assert_eq!(table[0]["prediction"], "0.0");
    assert_eq!(table[0]["ratio"], "");
    assert!(table[0]["pi_hat"].parse::<f64>().unwrap() < 1e-3);
}

#[test]
fn config_errors_exit_2() {
    let o = bpre(&["survival", "--seed", "1", "epsilon=0.05", "nu=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("positivity"));

    let o = bpre(&["survival", "--seed", "1", "epsilon=0.05", "rho=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));

    let o = bpre(&["survival", "epsilon=0.05", "rho=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let o = bpre(&["perpetuity", "--seed", "1", "a=1", "b=1,3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("inadmissible"));
}

#[test]
fn resource_overrun_exits_3() {
    // A horizon this short cannot reach the stopping tolerances.
    let o = bpre(&[
        "survival",
        "--seed",
        "1",
        "--reps",
        "4",
        "epsilon=0.01",
        "rho=1",
        "n_max=10",
    ]);
    assert_eq!(o.status.code(), Some(3), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("n_flagged"));
}

#[test]
fn perpetuity_limit_kinds() {
    let run = |args: &[&str]| {
        let o = bpre(args);
        assert!(o.status.success(), "{o:?}");
        let text = String::from_utf8(o.stdout).unwrap();
        rows(text.split_once('\n').unwrap().1).remove(0)
    };
    let dirac = run(&[
        "perpetuity",
        "--seed",
        "1",
        "a=1",
        "b=0.5",
        "n_samples=1000",
    ]);
    assert_eq!(dirac["limit_kind"], "dirac");

    let ig = run(&[
        "perpetuity",
        "--seed",
        "1",
        "epsilon=0.05",
        "rho=1",
        "n_samples=1000",
    ]);
    assert_eq!(ig["limit_kind"], "inverse_gamma");
    let rho_hat: f64 = ig["rho_hat"].parse().unwrap();
    let a: f64 = ig["limit_a"].parse().unwrap();
    assert!((a - (2.0 * rho_hat + 1.0)).abs() < 1e-12);
}

#[test]
fn json_mirror_has_the_same_fields() {
    let o = bpre(&[
        "survival",
        "--seed",
        "1",
        "--reps",
        "10",
        "--json",
        "epsilon=0.1",
        "rho=0",
    ]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let row = &doc["rows"][0];
    for key in ["family", "pi_hat", "stderr", "ratio", "n_reps", "seed"] {
        assert!(row.get(key).is_some(), "{key}");
    }
}

#[test]
fn verify_fast_and_mutation() {
    assert_eq!(bpre(&["verify"]).status.code(), Some(0));
    let o = bpre(&["verify", "--mutate-shape"]);
    assert_eq!(o.status.code(), Some(1));
    let table = String::from_utf8_lossy(&o.stdout);
    let failed: Vec<&str> = table.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].contains("survival series identity"));
}
