use std::fs;
use std::process::Command;

use alebo::runner::{read_trace, Method, RunConfig};

fn alebo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alebo"))
}

#[test]
fn run_writes_traces_and_summary_then_report_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new("branin_d20", Method::Hesbo, 3, 2, 5);
    cfg.n_init = Some(3);
    cfg.replicates = 2;
    cfg.options.gp_restarts = 2;
    let config_path = dir.path().join("cfg.json");
    fs::write(&config_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("runs");

    let status = alebo()
        .args(["run", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let mut traces: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    traces.sort();
    assert_eq!(traces.len(), 2);
    let t = read_trace(std::io::BufReader::new(fs::File::open(&traces[0]).unwrap())).unwrap();
    assert_eq!(t.records.len(), 5);
    assert_eq!(t.config.seed, 5);

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("iteration,mean_best,se_best,mean_log_regret"));
    assert_eq!(lines.count(), 5);

    let csv = dir.path().join("report.csv");
    assert!(alebo().args(["report", "--in"]).arg(&out).arg("--out").arg(&csv).status().unwrap().success());
    let report = fs::read_to_string(&csv).unwrap();
    assert!(report.starts_with("label,n_traces,iteration,"));
    assert!(report.lines().nth(1).unwrap().starts_with("branin_d20_hesbo,2,0,"));

    let svg = dir.path().join("report.svg");
    assert!(alebo().args(["report", "--in"]).arg(&out).arg("--out").arg(&svg).status().unwrap().success());
    assert!(fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(
        &path,
        r#"{"schema":1,"problem_id":"branin_d20","method":"sobol","n_bo":2,"seed":0,"colour":"red"}"#,
    )
    .unwrap();
    let output = alebo().args(["run", "--config"]).arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("colour"));
}

#[test]
fn popt_emits_one_row_per_embedding_dimension() {
    let output = alebo()
        .args(["popt", "--strategy", "hesbo", "--big-d", "30", "--true-d", "2", "--embed-d-list", "2,4,8"])
        .args(["--n-mc", "50", "--seed", "1"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "strategy,D,d,d_e,n_mc,estimate,standard_error");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("hesbo,30,2,4,50,"));
}

#[test]
fn modelfit_sweep_writes_all_models() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fit.csv");
    let status = alebo()
        .args(["modelfit", "--problem", "branin_d20", "--embed-d", "2", "--n-test", "4", "--seed", "3"])
        .args(["--train-sizes", "6,8", "--out"])
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("n_train,model,test_index,target,mean,variance,noise_variance"));
    // 2 sizes x 3 models x 4 test points
    assert_eq!(text.lines().count(), 1 + 24);
    for model in ["mahalanobis_sampled", "mahalanobis_point", "ard_rbf"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("8,{model},"))));
    }
}
