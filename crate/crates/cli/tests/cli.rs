use std::process::{Command, Output};

fn borel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_borel"))
        .args(args)
        .env_remove("BOREL_SEED")
        .env_remove("BOREL_SAMPLES")
        .env_remove("BOREL_NMAX")
        .output()
        .expect("binary runs")
}

fn json_lines(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is JSON"))
        .collect()
}

#[test]
fn oracle_norm_passes_on_three_points() {
    let out = borel(&["oracle", "--n", "3", "--check", "norm"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["data"]["passed"], 29);
    assert_eq!(lines[0]["ok"], true);
}

#[test]
fn parse_error_exits_two() {
    let out = borel(&["classify", "--set", "open((0,1)"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1:11"));
}

#[test]
fn unknown_check_exits_two() {
    assert_eq!(borel(&["oracle", "--n", "3", "--check", "nope"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    let out = borel(&["separate", "--a", "closed([0,1/2])", "--b", "closed([1/4,1])", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let lines = json_lines(&out);
    assert_eq!(lines[0]["checks"][0]["status"], "fail");
    assert!(lines[0]["checks"][0]["witness"].is_string());
}

#[test]
fn separate_passes() {
    let out = borel(&["separate", "--a", "closed([0,1/4])", "--b", "closed([1/2,1])", "--alpha", "1", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn extend_to_interval_writes_report() {
    let dir = std::env::temp_dir().join(format!("borel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("extend.json");
    let out = borel(&[
        "extend", "--func", "id", "--from", "closed([0,1/2])", "--alpha", "1", "--stages", "4", "--tol", "1/4",
        "--target", "interval", "0", "1", "--samples", "200", "--report", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["ok"], true);
    assert!(doc["checks"].as_array().unwrap().len() >= 4);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn script_runs_every_command() {
    let dir = std::env::temp_dir().join(format!("borel-script-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("s.borel");
    std::fs::write(
        &path,
        "space X = unit;\nset A = closed([0,1/3]);\nset B = closed([2/3,1]);\nclassify A;\nseparate A, B alpha 1;\n",
    )
    .unwrap();
    let out = borel(&["run", path.to_str().unwrap(), "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json_lines(&out).len(), 2);

    let pretty = borel(&["--pretty", "classify", path.to_str().unwrap(), "--set", "union(A, B)"]);
    assert_eq!(pretty.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&pretty.stdout).contains("passed"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["--seed", "7", "--samples", "300", "disjointify", "--sets", "open((0,1/2));open((1/3,1))", "--alpha", "1"];
    let a = borel(&args);
    let b = borel(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}
