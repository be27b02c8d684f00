use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use geoconvex::experiment::GAP_RESOLUTION;
use geoconvex::problems::KarcherProblem;
use geoconvex::solver::RunTrace;

fn geoconvex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoconvex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = geoconvex(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_trace(path: &Path) -> RunTrace {
    RunTrace::read_csv(fs::read_to_string(path).unwrap().as_bytes()).unwrap()
}

const SMALL: [&str; 6] = ["--problem", "karcher", "--n", "3", "--N", "5"];

#[test]
fn identical_seeds_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        let mut args = vec!["run"];
        args.extend(SMALL);
        args.extend([
            "--algo", "sgd-st", "--t", "200", "--repeat", "3", "--seed", "4", "--out", out,
        ]);
        ok(&args);
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(
        names.len(),
        5,
        "three traces, summary and mean gap: {names:?}"
    );
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?} differs"
        );
    }
}

#[test]
fn horizon_one_has_one_row_and_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run"];
    args.extend(SMALL);
    args.extend([
        "--algo",
        "gd",
        "--t",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let summary = ok(&args);
    let trace = read_trace(&dir.path().join("gd_seed0.csv"));
    assert_eq!(trace.records.len(), 1);
    let row = summary.lines().find(|l| l.starts_with("gd,")).unwrap();
    assert!(row.ends_with(",,,,,,"), "fit cells should be empty: {row}");
}

#[test]
fn repeated_runs_write_one_trace_each_and_a_mean() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run"];
    args.extend(SMALL);
    args.extend([
        "--algo",
        "sgd-st",
        "--t",
        "50",
        "--repeat",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    ok(&args);
    let traces = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            let n = e.as_ref().unwrap().file_name().into_string().unwrap();
            n.starts_with("sgd-st_seed") && n.ends_with(".csv")
        })
        .count();
    assert_eq!(traces, 50);
    let mean = fs::read_to_string(dir.path().join("mean_gap.csv")).unwrap();
    assert!(mean.starts_with("# seeds=50\ns,passes,mean_gap\n"));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.contains("sgd-st,T4,mean,50,"));
    assert!(summary.contains("# note: sgd-st step 2/(mu(s+1)) with mu=2N equals 1/(N(s+1))"));
}

#[test]
fn summary_matches_last_trace_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run"];
    args.extend(SMALL);
    args.extend([
        "--algo",
        "T6",
        "--t",
        "40",
        "--seed",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let summary = ok(&args);
    let trace = read_trace(&dir.path().join("sgd-sm_seed2.csv"));
    let last = trace.last();
    let row: Vec<&str> = summary
        .lines()
        .find(|l| l.starts_with("sgd-sm,"))
        .unwrap()
        .split(',')
        .collect();
    let final_f: f64 = row[5].parse().unwrap();
    let f_star: f64 = row[6].parse().unwrap();
    let gap: f64 = row[7].parse().unwrap();
    assert_eq!(final_f, last.f_avg.unwrap());
    assert_eq!(Some(f_star), trace.meta.f_star);
    assert_eq!(gap, final_f - f_star);
}

#[test]
fn gradient_descent_decreases_on_desk_data() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "run",
        "--problem",
        "karcher",
        "--algo",
        "gd",
        "--t",
        "100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let trace = read_trace(&dir.path().join("gd_seed0.csv"));
    let f: Vec<f64> = trace.records.iter().map(|r| r.f_x.unwrap()).collect();
    assert_eq!(f.len(), 100);
    // Once converged, successive values differ only by rounding.
    let floor = |v: f64| GAP_RESOLUTION * (1.0 + v.abs());
    assert!(f.windows(2).all(|w| w[1] <= w[0] + floor(w[0])));
    assert!(f[99] < f[0]);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.contains("full-scale Q=1e8 is replaced by at most Q=1e4"));
    let fit = ok(&[
        "fit",
        dir.path().join("gd_seed0.csv").to_str().unwrap(),
        "--model",
        "semilog",
        "--window",
        "1,100",
    ]);
    let cells: Vec<&str> = fit.lines().nth(1).unwrap().split(',').collect();
    assert!(cells[1].parse::<f64>().unwrap() < 0.0);
    assert!(cells[3].parse::<f64>().unwrap() >= 0.99);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "problem = karcher\nn = 3\nN = 4\nalgo = gd\nt = 7 # short\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--t",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(read_trace(&out.join("gd_seed0.csv")).records.len(), 5);
}

#[test]
fn generated_data_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.txt");
    ok(&[
        "gen-data",
        "--n",
        "4",
        "--N",
        "6",
        "--Q",
        "100",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    let p = KarcherProblem::read_text(fs::read_to_string(&path).unwrap().as_bytes(), -0.5).unwrap();
    assert_eq!((p.n(), p.len()), (4, 6));
}

#[test]
fn exit_codes() {
    assert_eq!(geoconvex(&["run", "--algo", "adam"]).status.code(), Some(1));
    assert_eq!(geoconvex(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        geoconvex(&["fit", "/nonexistent/trace.csv"]).status.code(),
        Some(1)
    );
    assert_eq!(geoconvex(&["--help"]).status.code(), Some(0));
    let explode = geoconvex(&[
        "run",
        "--problem",
        "euclidean-quad",
        "--algo",
        "st-subgrad",
        "--Q",
        "1e300",
        "--t",
        "50",
    ]);
    assert_eq!(
        explode.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&explode.stderr)
    );
}

#[test]
fn bounds_hold_on_the_distance_objective() {
    let text = ok(&[
        "verify-bounds",
        "--problem",
        "hyperbolic-dist",
        "--algo",
        "subgrad",
    ]);
    assert!(
        text.lines()
            .filter(|l| l.trim_end().ends_with("yes"))
            .count()
            == 4,
        "{text}"
    );
    let flat = geoconvex(&[
        "verify-bounds",
        "--problem",
        "euclidean-quad",
        "--all",
        "--repeat",
        "5",
        "--checkpoints",
        "10,100",
    ]);
    assert_eq!(flat.status.code(), Some(0));
    let karcher = ok(&[
        "verify-bounds",
        "--problem",
        "karcher",
        "--n",
        "3",
        "--N",
        "5",
        "--algo",
        "gd",
        "--checkpoints",
        "10,100",
    ]);
    assert!(karcher.contains("advisory:"));
}

#[test]
fn quick_certification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["certify", "--quick", "--out", dir.path().to_str().unwrap()]);
    assert!(!text.contains("FAIL"), "{text}");
    let csv = fs::read_to_string(dir.path().join("certify.csv")).unwrap();
    assert!(csv.starts_with("check_name,n_samples,min_residual,max_violation,seed\n"));
    assert_eq!(csv.lines().count(), 13);
}
