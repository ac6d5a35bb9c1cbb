use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fouriercsp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let toy = dir.path().join("toy.csp");
    fs::write(&toy, "var x1 3\nvar x2 3\ncon expr x1 < x2\ncon expr x2 < 2\n").unwrap();
    let o = run(&["solve", p(&toy), "--seed", "7", "--timeout", "10"]);
    assert_eq!(o.status.code(), Some(10), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(report["satisfied"], true);
    assert_eq!(report["assignment"], serde_json::json!([0, 1]));

    let unsat = dir.path().join("unsat.csp");
    fs::write(&unsat, "var x1 2\ncon expr x1 = 0\ncon expr x1 = 1\n").unwrap();
    let o = run(&["solve", p(&unsat), "--restarts", "3"]);
    assert_eq!(o.status.code(), Some(20));
    let report: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(report["hard_satisfied"], 1);
    assert_eq!(report["hard_total"], 2);

    let missing = dir.path().join("missing.csp");
    let o = run(&["solve", p(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.csp"));
}

#[test]
fn parse_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csp");
    fs::write(&bad, "var x1 2\ncon expr x1 &\n").unwrap();
    let o = run(&["solve", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bad.csp") && err.contains("line 2"), "{err}");
}

#[test]
fn report_written_to_file_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("s.csp");
    let o = run(&["gen", "scheduling", "--workers", "8", "--ratio", "2", "--seed", "1", "--off-grid", "--out", p(&inst)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reports = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("r{threads}.json"));
        let o = run(&[
            "--threads", threads, "solve", p(&inst), "--seed", "3", "--deterministic", "--restarts", "4",
            "--max-iter", "300", "--out", p(&out),
        ]);
        assert!(matches!(o.status.code(), Some(10 | 20)));
        assert!(stdout(&o).is_empty());
        reports.push(fs::read(&out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert!(!String::from_utf8_lossy(&reports[0]).contains("wall_time"));
}

#[test]
fn gen_counts_and_reproducibility() {
    let o = run(&["gen", "scheduling", "--workers", "32", "--ratio", "4", "--seed", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("var t")).count(), 128);
    let again = run(&["gen", "scheduling", "--workers", "32", "--ratio", "4", "--seed", "2"]);
    assert_eq!(stdout(&again), text);

    let o = run(&["gen", "coloring", "--nodes", "512", "--colors", "8", "--seed", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains(" parity ")).count(), 512);

    let o = run(&["gen", "scheduling", "--workers", "33", "--ratio", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[32, 64, 128, 256, 512]"));
}

#[test]
fn mdd_build_eval_check() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam");
    assert!(run(&["gen", "family", "--out-dir", p(&fam)]).status.success());
    assert_eq!(fs::read_dir(&fam).unwrap().count(), 36);
    let o = run(&["mdd", "build", p(&fam.join("c13.csp")), "--out-dir", p(dir.path()), "--pad-to", "15"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mdd = dir.path().join("c13.mdd");
    let text = fs::read_to_string(&mdd).unwrap();
    assert!(text.starts_with("# vid, nid, eid, cid\n1 1 0 5\n1 1 1 2\n"));

    let o = run(&["mdd", "eval", p(&mdd), "--point", "uniform"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    // only x = (1,1,1,1) satisfies: (1/3)^4
    assert!((v["cop"].as_f64().unwrap() - 1.0 / 81.0).abs() < 1e-15);

    let point = dir.path().join("p.csv");
    fs::write(&point, "0,1,0\n0,1,0\n0,1,0\n0,0.5,0.5\n").unwrap();
    let o = run(&["mdd", "eval", p(&mdd), "--point", p(&point)]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["cop"].as_f64().unwrap() - 0.5).abs() < 1e-15);

    assert!(run(&["mdd", "check", p(&mdd)]).status.success());
    let dangling = dir.path().join("bad.mdd");
    fs::write(&dangling, text.replace("4 4 1 6", "4 4 1 9")).unwrap();
    let o = run(&["mdd", "check", p(&dangling)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_csv_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no instances"));

    fs::write(dir.path().join("a.csp"), "var x1 2\ncon expr x1 = 1\n").unwrap();
    fs::write(
        dir.path().join("b.csp"),
        "var x1 2\nobjective min-violations\ncon expr x1 = 1\ncon soft expr x1 = 0\n",
    )
    .unwrap();
    fs::write(dir.path().join("broken.csp"), "var x1\n").unwrap();
    let best = dir.path().join("best.csv");
    fs::write(&best, "instance,best\nb,1\n").unwrap();
    let o = run(&["bench", p(dir.path()), "--best-known", p(&best), "--deterministic", "--timeout", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(&rows[0][col("solved")], "true");
    assert_eq!(&rows[1][col("relative_score")], "1.0");
    // a failed row is charged the full penalty
    assert_eq!(&rows[2][col("solved")], "false");
    assert_eq!(&rows[2][col("par2_contrib")], "10.0");
    assert!(stderr(&o).contains("par2"));
}
