use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use promo_gym_core::learner::QTable;
use promo_gym_core::mdp::{make_frozen_lake, value_iteration};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_promo-gym"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_manifest(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("manifest.json");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn retail_pipeline_closes() {
    let out = tempfile::tempdir().unwrap();
    let manifest = fixtures().join("retail/manifest.json");
    for cmd in [
        "ingest",
        "build",
        "train",
        "eval",
        "render",
        "export-metrics",
    ] {
        let o = run(&[
            cmd,
            "--manifest",
            path(&manifest),
            "--out",
            path(out.path()),
        ]);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "series.csv",
        "bins.json",
        "spec.json",
        "table.json",
        "qtable.json",
        "eval.json",
        "export/episodic.csv",
    ] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    let header = fs::read_to_string(out.path().join("mean_cumulative.csv")).unwrap();
    assert!(header.starts_with("step,mean_cumulative_reward\n"));
}

#[test]
fn same_seed_gives_identical_qtable() {
    let manifest = fixtures().join("promo/manifest.json");
    let mut docs = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let args = ["--manifest", path(&manifest), "--out", path(out.path())];
        assert_eq!(code(&run(&[&["build"][..], &args].concat())), 0);
        assert_eq!(
            code(&run(&[&["train", "--seed", "12"][..], &args].concat())),
            0
        );
        docs.push(fs::read(out.path().join("qtable.json")).unwrap());
    }
    assert_eq!(docs[0], docs[1]);
}

#[test]
fn zero_training_episodes_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    let manifest = fixtures().join("promo/manifest.json");
    let args = ["--manifest", path(&manifest), "--out", path(out.path())];
    assert_eq!(code(&run(&[&["build"][..], &args].concat())), 0);
    let o = run(&[&["train", "--episodes", "0"][..], &args].concat());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("episodes"));
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(
        code(&run(&["build", "--manifest", "/nonexistent/m.json"])),
        2
    );

    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        r#"{"environment": {"kind": "frozen-lake"}, "bogus": 1}"#,
    );
    assert_eq!(code(&run(&["build", "--manifest", path(&m)])), 2);

    // Train before build: no table yet.
    let m = write_manifest(dir.path(), r#"{"environment": {"kind": "frozen-lake"}}"#);
    assert_eq!(code(&run(&["train", "--manifest", path(&m)])), 2);
}

fn retail_copy(dir: &Path) {
    for f in [
        "promo_plan.csv",
        "online_transactions.csv",
        "rx_transactions.csv",
        "holidays.csv",
        "zip_stores.csv",
        "manifest.json",
    ] {
        fs::copy(fixtures().join("retail").join(f), dir.join(f)).unwrap();
    }
}

#[test]
fn header_mismatch_and_empty_series_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    retail_copy(dir.path());
    let m = dir.path().join("manifest.json");
    fs::write(
        dir.path().join("rx_transactions.csv"),
        "store,product,day,qty,uom\n",
    )
    .unwrap();
    let o = run(&["ingest", "--manifest", path(&m)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("header"));

    fs::write(
        dir.path().join("rx_transactions.csv"),
        "store_id,product_id,date,eod_sales_qty,qty_uom\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("online_transactions.csv"),
        "product_id,date,eod_sales_qty,eod_return_qty,zip,city,state,geo_area_code\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["ingest", "--manifest", path(&m)])), 2);
}

#[test]
fn week_without_promotions_needs_flag() {
    let dir = tempfile::tempdir().unwrap();
    retail_copy(dir.path());
    let m = dir.path().join("manifest.json");
    let text = fs::read_to_string(&m)
        .unwrap()
        .replace("2015-06-22", "2015-05-04");
    fs::write(&m, text).unwrap();
    assert_eq!(code(&run(&["ingest", "--manifest", path(&m)])), 0);
    assert_eq!(code(&run(&["build", "--manifest", path(&m)])), 2);
    let o = run(&["build", "--manifest", path(&m), "--allow-empty-promos"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0 goals"));
}

fn eval_report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("eval.json")).unwrap()).unwrap()
}

#[test]
fn oracle_q_solves_the_lake_every_time() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), r#"{"environment": {"kind": "frozen-lake"}}"#);
    assert_eq!(code(&run(&["build", "--manifest", path(&m)])), 0);
    let sol = value_iteration(&make_frozen_lake(false), 0.99, 1e-10, 10_000).unwrap();
    let q = dir.path().join("oracle_q.json");
    fs::write(&q, QTable::from_rows(&sol.q).to_json()).unwrap();
    let o = run(&[
        "eval",
        "--manifest",
        path(&m),
        "--qtable",
        path(&q),
        "--episodes",
        "100",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = eval_report(&dir.path().join("out"));
    assert_eq!(r["episodes"], 100);
    assert_eq!(r["success_rate"], 1.0);
    assert_eq!(r["min_total_reward"], 1.0);
    assert_eq!(r["max_total_reward"], 1.0);
}

#[test]
fn zero_q_on_promo_grid_only_realigns() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixtures().join("promo/listing_spec.json");
    let body = format!(
        r#"{{"environment": {{"kind": "promo", "spec_file": {:?}}}, "learner": {{"max_steps_per_episode": 30}}}}"#,
        path(&spec)
    );
    let m = write_manifest(dir.path(), &body);
    assert_eq!(code(&run(&["build", "--manifest", path(&m)])), 0);
    let q = dir.path().join("zero_q.json");
    fs::write(&q, QTable::new(50, 4).to_json()).unwrap();
    let o = run(&[
        "eval",
        "--manifest",
        path(&m),
        "--qtable",
        path(&q),
        "--episodes",
        "10",
    ]);
    assert_eq!(code(&o), 0);
    let r = eval_report(&dir.path().join("out"));
    // Ties go to action 0; realign never reaches row 2, where the goal is.
    assert_eq!(r["success_rate"], 0.0);
    assert_eq!(r["truncation_rate"], 1.0);
    assert_eq!(r["mean_total_reward"], -30.0);

    let o = run(&[
        "eval",
        "--manifest",
        path(&m),
        "--qtable",
        path(&q),
        "--episodes",
        "0",
    ]);
    assert_eq!(code(&o), 0);
    let r = eval_report(&dir.path().join("out"));
    assert_eq!(r["episodes"], 0);
    assert!(r["success_rate"].is_null());

    let small = dir.path().join("small_q.json");
    fs::write(&small, QTable::new(16, 4).to_json()).unwrap();
    assert_eq!(
        code(&run(&[
            "eval",
            "--manifest",
            path(&m),
            "--qtable",
            path(&small)
        ])),
        2
    );
}

fn promo_run(dir: &Path) -> PathBuf {
    let spec = fixtures().join("promo/listing_spec.json");
    let m = write_manifest(
        dir,
        &format!(
            r#"{{"environment": {{"kind": "promo", "spec_file": {:?}}}}}"#,
            path(&spec)
        ),
    );
    assert_eq!(code(&run(&["build", "--manifest", path(&m)])), 0);
    m
}

#[test]
fn render_single_increase_step() {
    let dir = tempfile::tempdir().unwrap();
    let m = promo_run(dir.path());
    let trace = dir.path().join("t.csv");
    fs::write(
        &trace,
        "step,state,action,reward,next_state,done\n1,35,2,-1,45,false\n",
    )
    .unwrap();
    let o = run(&["render", "--manifest", path(&m), "--trace", path(&trace)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(
        text.matches("Mon Tue Wed Thu Fri Sat Sun  A7  A8  A9")
            .count(),
        2,
        "{text}"
    );
    assert!(text.contains("increase"));
    let marker_rows: Vec<&str> = text.lines().filter(|l| l.contains('●')).collect();
    assert_eq!(marker_rows.len(), 2);
    assert!(marker_rows[0].starts_with("r3") && marker_rows[1].starts_with("r4"));
    // Column 5 (Sat) in both frames.
    for row in marker_rows {
        let cells: Vec<&str> = row.split_whitespace().skip(1).collect();
        assert_eq!(cells.iter().position(|c| *c == "●"), Some(5));
    }
}

#[test]
fn render_empty_and_goal_traces() {
    let dir = tempfile::tempdir().unwrap();
    let m = promo_run(dir.path());
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "step,state,action,reward,next_state,done\n").unwrap();
    let o = run(&["render", "--manifest", path(&m), "--trace", path(&empty)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);

    let goal = dir.path().join("goal.csv");
    fs::write(
        &goal,
        "step,state,action,reward,next_state,done\n1,34,1,-1,24,false\n2,24,3,20,24,true\n",
    )
    .unwrap();
    let o = run(&["render", "--manifest", path(&m), "--trace", path(&goal)]);
    assert!(stdout(&o).contains("FORECAST ✓"));
    assert!(stdout(&o).contains("20"));

    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "step,state,action,reward,next_state,done\n1,99,1,-1,24,false\n",
    )
    .unwrap();
    assert_eq!(
        code(&run(&[
            "render",
            "--manifest",
            path(&m),
            "--trace",
            path(&bad)
        ])),
        2
    );
}

#[test]
fn slippery_flag_overrides_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        r#"{"environment": {"kind": "frozen-lake", "slippery": false}}"#,
    );
    let o = run(&["build", "--manifest", path(&m), "--slippery", "true"]);
    assert!(stdout(&o).contains("slippery"));
    assert!(!stdout(&o).contains("non-slippery"));
    let table = fs::read_to_string(dir.path().join("out/table.json")).unwrap();
    assert!(table.contains("0.3333333333333333"));
}
