use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn iapd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iapd"))
        .args(args)
        .env_remove("IAPD_OUT_DIR")
        .output()
        .expect("spawn iapd")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, kind: &str, dims: &str, rank: &str, seed: &str) -> std::path::PathBuf {
    let file = dir.join(format!("{kind}_{seed}.txt"));
    let out = iapd(&["generate", "--kind", kind, "--dims", dims, "--rank", rank, "--seed", seed, "--out", p(&file)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    file
}

#[test]
fn decompose_odeco_recovers() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "odeco_exact", "4,4,4", "2", "3");
    let out_dir = tmp.path().join("out");
    let report = tmp.path().join("report.json");
    let out = iapd(&[
        "decompose", "--input", p(&input), "--rank", "2", "--kappa", "0.25", "--out", p(&out_dir), "--json-report", p(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert!(summary["residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(summary["termination"], "converged");
    for f in ["factor_1.txt", "factor_2.txt", "factor_3.txt", "lambda.txt", "trace.csv", "summary.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let factor = iapd::io::read_matrix(out_dir.join("factor_2.txt")).unwrap();
    assert_eq!(factor.shape(), (4, 2));
}

#[test]
fn trace_csv_schema() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "gaussian", "3,4,5,2", "1", "8");
    let out_dir = tmp.path().join("out");
    let out = iapd(&["decompose", "--input", p(&input), "--rank", "2", "--out", p(&out_dir)]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    let text = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep,f,delta_f,step_norm,kkt_residual,sigma_min_mode_1,sigma_min_mode_2,sigma_min_mode_3,sigma_min_mode_4,proximal_flags,truncated_indices"
    );
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[0].parse::<usize>().unwrap(), i + 1);
        for v in &fields[1..9] {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
        assert!(fields[9].parse::<u64>().unwrap() < 16);
        assert!(fields[10].is_empty() || fields[10].split(';').all(|j| j.parse::<usize>().is_ok()));
    }
}

#[test]
fn max_sweeps_exits_two() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "gaussian", "5,5,5", "1", "1");
    let out = iapd(&["decompose", "--input", p(&input), "--rank", "2", "--max-sweeps", "3", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let o = tmp.path().join("o");
    let missing = tmp.path().join("missing.txt");
    assert_eq!(iapd(&["decompose", "--input", p(&missing), "--rank", "2", "--out", p(&o)]).status.code(), Some(1));

    let garbage = tmp.path().join("garbage.txt");
    fs::write(&garbage, "3 2 2 2\n1 2 3 x 5 6 7 8\n").unwrap();
    let out = iapd(&["decompose", "--input", p(&garbage), "--rank", "1", "--out", p(&o)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let input = generate(tmp.path(), "gaussian", "3,4,5", "1", "2");
    assert_eq!(iapd(&["decompose", "--input", p(&input), "--rank", "4", "--out", p(&o)]).status.code(), Some(1));
    assert_eq!(iapd(&["decompose", "--input", p(&input), "--rank", "2", "--mode", "fast"]).status.code(), Some(1));
    assert_eq!(
        iapd(&["decompose", "--input", p(&input), "--rank", "2", "--kappa", "1e9", "--out", p(&o)]).status.code(),
        Some(1)
    );
    assert_eq!(
        iapd(&["decompose", "--input", p(&input), "--rank", "2", "--mode", "revised", "--epsilon", "1", "--tau", "0.5", "--out", p(&o)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(iapd(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(iapd(&["--help"]).status.code(), Some(0));
}

#[test]
fn out_dir_from_environment() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "odeco_exact", "3,3,3", "1", "4");
    let env_dir = tmp.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_iapd"))
        .args(["decompose", "--input", p(&input), "--rank", "1"])
        .env("IAPD_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.join("summary.json").exists());
}

#[test]
fn verify_passes_and_filters() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("verdict.json");
    let out = iapd(&["verify", "--out", p(tmp.path()), "--json-report", p(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(verdict["passed"], true);
    assert_eq!(verdict["criteria"].as_array().unwrap().len(), 11);

    let out = iapd(&["verify", "--only", "polar-error-bound", "--out", p(tmp.path()), "--json-report", p(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let names: Vec<&str> = verdict["criteria"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["polar-error-bound"]);

    assert_eq!(iapd(&["verify", "--only", "no-such-check", "--out", p(tmp.path())]).status.code(), Some(1));
}

#[test]
fn injected_fault_fails_verify() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("verdict.json");
    let out = iapd(&[
        "verify", "--only", "sufficient-decrease", "--inject-fault", "decrease", "--out", p(tmp.path()), "--json-report", p(&report),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sufficient-decrease"));
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(verdict["failed"][0], "sufficient-decrease");
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn benchmark_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"name":"g","generator":{"kind":"gaussian","dims":[5,5,5],"seed":31},"rank":2,"repeats":4,"modes":["classic","revised"]}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = iapd(&["benchmark", "--input", p(&config), "--out", p(dir)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for mode in ["classic", "revised"] {
        for i in 0..4 {
            let rel = format!("g/{mode}/run_{i:04}.csv");
            let (x, y) = (fs::read(a.join(&rel)).unwrap(), fs::read(b.join(&rel)).unwrap());
            assert!(!x.is_empty());
            assert_eq!(x, y, "{rel}");
        }
    }
    let agg: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("g/aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["runs"].as_array().unwrap().len(), 8);
    for m in agg["modes"].as_array().unwrap() {
        assert!(m["rho"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap() < 1.0));
    }
}

#[test]
fn benchmark_defective_family_truncates() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"name":"d","generator":{"kind":"defective_rank","dims":[4,4,4],"rank":3,"seed":2},"rank":3,"repeats":5,"modes":["classic"],"solver":{"kappa":0.25}}"#,
    );
    let out = iapd(&["benchmark", "--input", p(&config), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(0));
    let agg: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("d/aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["modes"][0]["truncation_frequency"], 1.0);
}

#[test]
fn benchmark_rejects_bad_configs() {
    let tmp = TempDir::new().unwrap();
    let base = r#""generator":{"kind":"gaussian","dims":[3,3,3],"seed":1},"rank":2"#;
    for body in [
        format!("{{{base},\"repeat\":3}}"),
        format!("{{{base},\"solver\":{{\"epsilon\":0.1,\"eps\":1}}}}"),
        format!("{{{base},\"repeats\":0}}"),
        r#"{"generator":{"kind":"gaussian","dims":[3,3,3]},"rank":4}"#.to_string(),
        r#"{"generator":{"kind":"odeco_noisy","dims":[3,3,3],"rank":2,"noise":-1},"rank":2}"#.to_string(),
        r#"{"generator":{"kind":"gaussian","dims":[3,3,3],"sigma":1},"rank":2}"#.to_string(),
        "not json".to_string(),
    ] {
        let config = write_config(tmp.path(), &body);
        let out = iapd(&["benchmark", "--input", p(&config), "--out", p(tmp.path())]);
        assert_eq!(out.status.code(), Some(1), "{body}");
    }
}
