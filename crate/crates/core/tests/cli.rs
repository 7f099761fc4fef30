use std::path::PathBuf;
use std::process::Command;

fn out_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cubicnet-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(args: &[&str], dir: &PathBuf) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_cubicnet"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn json(dir: &PathBuf, file: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(file)).unwrap()).unwrap()
}

#[test]
fn trees_count() {
    let d = out_dir("trees");
    assert_eq!(run(&["trees", "--m", "5"], &d), 0);
    let t = json(&d, "trees.json");
    assert_eq!(t["count"], 16);
    assert_eq!(t["mutable_count"], 8);
    assert_eq!(json(&d, "config.json")["m"], 5);
}

#[test]
fn quiver_dot_for_two_zeros() {
    let d = out_dir("quiver");
    assert_eq!(run(&["quiver", "--m", "2"], &d), 0);
    let dot = std::fs::read_to_string(d.join("quiver.dot")).unwrap();
    let mut arrows: Vec<&str> = dot.lines().map(str::trim).filter(|l| l.contains("->")).collect();
    arrows.sort();
    let mut expect = vec![
        r#""T123" -> "T124";"#,
        r#""T124" -> "T125";"#,
        r#""T124" -> "T234";"#,
        r#""T145" -> "T245";"#,
        r#""T234" -> "T245";"#,
        r#""T245" -> "T124";"#,
        r#""T245" -> "T345";"#,
    ];
    expect.sort();
    assert_eq!(arrows, expect);
    assert_eq!(dot.matches("shape=ellipse").count(), 2);
}

#[test]
fn exit_codes() {
    let d = out_dir("exit");
    assert_eq!(run(&["trace", "--zeros", "[[1,0],[1,0]]"], &d), 1);
    assert_eq!(run(&["trace", "--coeffs", "[[1,0],[-2,0],[1,0]]"], &d), 1);
    assert_eq!(run(&["trees", "--m", "1"], &d), 1);
    assert_eq!(run(&["trees", "--bogus"], &d), 1);
    assert_eq!(run(&["trees", "--m", "3", "--states", "[5,0]"], &d), 2);
    assert_eq!(run(&["rh", "--zeros", "[[0,1],[0.3,0.4],[-1,0]]"], &d), 2);
}

#[test]
fn rerun_from_config_is_identical() {
    let a = out_dir("cfg-a");
    assert_eq!(run(&["coords", "--m", "3", "--seed", "7", "--threads", "2"], &a), 0);
    let b = out_dir("cfg-b");
    let cfg = a.join("config.json");
    assert_eq!(run(&["coords", "--config", cfg.to_str().unwrap(), "--threads", "1"], &b), 0);
    assert_eq!(std::fs::read(a.join("coords.json")).unwrap(), std::fs::read(b.join("coords.json")).unwrap());
}
