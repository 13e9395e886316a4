use std::fs;
use std::process::{Command, Output};

fn mrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrp")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn run_prints_a_metrics_row() {
    let out = mrp(&["run", "--planner", "BCP", "--n-weeds", "10", "--seed", "4"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("schema_version,planner,"));
    assert!(lines[1].starts_with("1,BCP,uniform,10,"));
    assert!(lines[1].contains(",100.0,"));
}

#[test]
fn run_accepts_aliases_and_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("run.svg");
    let out = mrp(&[
        "run",
        "--planner",
        "jl",
        "--dist",
        "gauss",
        "--sigma",
        "2",
        "--R",
        "1.5",
        "--Sd",
        "8",
        "--Sw",
        "8",
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn run_reads_a_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    fs::write(
        &path,
        r#"{"pasture":{"L":30,"W":10},"mower":{"R":2,"B":2,"v":1,"Sd":12,"Sw":12,"ds":0.1},
            "weeds":[{"id":0,"x":12,"y":6},{"id":1,"x":20,"y":2.5}]}"#,
    )
    .unwrap();
    let out = mrp(&["run", "--planner", "SNAKE_STATIC", "--json-scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("SNAKE_STATIC,list,2,"));

    let both = mrp(&["run", "--json-scenario", path.to_str().unwrap(), "--R", "3"]);
    assert_eq!(code(&both), 2);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let bad_json = dir.path().join("bad.json");
    fs::write(&bad_json, "{ not json").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["run", "--bogus"],
        vec!["run", "--planner", "ZIGZAG"],
        vec!["run", "--dist", "poisson"],
        vec!["run", "--R", "-1"],
        vec!["run", "--L", "50", "--W", "1"],
        vec!["run", "--json-scenario", missing.to_str().unwrap()],
        vec!["run", "--json-scenario", bad_json.to_str().unwrap()],
        vec!["sweep", "--grid", bad_json.to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        vec!["sweep", "--seeds", "0", "--out", dir.path().to_str().unwrap()],
        vec!["plot", "--csv", missing.to_str().unwrap(), "--x", "n_weeds", "--out", "x.svg"],
    ];
    for args in cases {
        let out = mrp(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn planner_abort_exits_with_one() {
    // A pasture this small cannot hold the turns, so the guard trips.
    let out = mrp(&["run", "--planner", "SS", "--L", "3", "--W", "3", "--n-weeds", "5"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(",failed,"));
}

#[test]
fn sweep_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"n_weeds":[10,20],"distributions":["uniform"],"planners":["JUMP_HIGH","BCP"],"seeds_per_cell":5}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = mrp(&[
        "sweep",
        "--grid",
        grid.to_str().unwrap(),
        "--seeds",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let results = out_dir.join("results.csv");
    assert_eq!(fs::read_to_string(&results).unwrap().lines().count(), 1 + 2 * 2 * 2);
    assert!(out_dir.join("summary.csv").is_file());
    assert!(out_dir.join("timings.csv").is_file());

    let svg = dir.path().join("trend.svg");
    let plot = |x: &str| {
        mrp(&["plot", "--csv", results.to_str().unwrap(), "--x", x, "--out", svg.to_str().unwrap()])
    };
    assert_eq!(code(&plot("n_weeds")), 0);
    assert!(fs::read_to_string(&svg).unwrap().contains("class=\"series\""));
    assert_eq!(code(&plot("colour")), 2);

    let header = fs::read_to_string(&results).unwrap().lines().next().unwrap().to_string();
    fs::write(&results, header + "\n").unwrap();
    assert_eq!(code(&plot("n_weeds")), 2);
}
