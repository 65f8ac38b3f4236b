use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use warpres_cli::{from_toml, generate, parse_problem, read_problem, to_toml, Exit};

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn warpres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpres"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Run {
    out: Output,
    trace: Option<String>,
    summary: Option<serde_json::Value>,
}

fn solve(file: &Path, extra: &[&str]) -> Run {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    let summary = dir.path().join("summary.json");
    let mut args = vec![
        "--problem",
        file.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = warpres(&args);
    Run {
        out,
        trace: std::fs::read_to_string(&trace).ok(),
        summary: std::fs::read_to_string(&summary)
            .ok()
            .map(|s| serde_json::from_str(&s).unwrap()),
    }
}

fn rows(trace: &str) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_reader(trace.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn minimal_ball_problem_converges() {
    let run = solve(&problem("ball.toml"), &[]);
    assert_eq!(code(&run.out), 0, "{}", stderr(&run.out));
    let s = run.summary.unwrap();
    assert_eq!(s["stop"], "converged");
    let p = floats(&s["point"]);
    assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12, "{p:?}");
}

#[test]
fn oversized_fbf_step_is_rejected_before_running() {
    let run = solve(&problem("fbf_step_too_large.toml"), &[]);
    assert_eq!(code(&run.out), 1);
    let msg = stderr(&run.out);
    assert!(msg.contains("(alpha - epsilon)/beta"), "{msg}");
    assert!(run.trace.is_none());
    assert!(parse_problem(&problem("fbf_step_too_large.toml")).is_err());
}

#[test]
fn coupled_scalar_problem_solves_to_one_minus_one() {
    let run = solve(&problem("coupled_scalar.toml"), &[]);
    assert_eq!(code(&run.out), 0, "{}", stderr(&run.out));
    let s = run.summary.unwrap();
    // x + v* = 0 and x − 2 = v*
    let x = floats(&s["coupled"]["x"]);
    let v = floats(&s["coupled"]["v_star"]);
    assert!((x[0] - 1.0).abs() < 1e-8 && (v[0] + 1.0).abs() < 1e-8, "{x:?} {v:?}");
    // the literal transcription agrees
    let dir = TempDir::new().unwrap();
    let mut f = read_problem(&problem("coupled_scalar.toml")).unwrap();
    f.solver.mode = Some("literal".into());
    let path = dir.path().join("literal.toml");
    std::fs::write(&path, to_toml(&f).unwrap()).unwrap();
    let lit = solve(&path, &[]);
    assert_eq!(code(&lit.out), 0);
    let d = floats(&lit.summary.unwrap()["point"]);
    let p = floats(&s["point"]);
    assert!(d.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn halving_trace_has_twenty_rows() {
    let run = solve(&problem("halving.toml"), &[]);
    assert_eq!(code(&run.out), 0, "{}", stderr(&run.out));
    let trace = run.trace.unwrap();
    let header = trace.lines().next().unwrap();
    assert_eq!(header, "n,residual,step_norm,theta,sigma,rho,fejer_gap_0");
    let rows = rows(&trace);
    // x_n = 2^{-n} and y_n = x_n / 2, so ‖y_n*‖ = 2^{-(n+1)}; the first
    // value at or below 1.4e-6 is 2^{-20}
    assert_eq!(rows.len(), 20);
    for (n, r) in rows.iter().enumerate() {
        assert_eq!(r[0], n as f64);
        assert_eq!(r[1], 0.5f64.powi(n as i32 + 1));
        assert_eq!(r[6], 0.5f64.powi(n as i32));
    }
}

#[test]
fn iteration_limit_has_its_own_code() {
    let run = solve(&problem("halving.toml"), &["--max-iter", "5"]);
    assert_eq!(code(&run.out), Exit::MaxIterations as i32);
    assert_eq!(rows(&run.trace.unwrap()).len(), 5);
    assert_eq!(run.summary.unwrap()["stop"], "max_iterations");
}

#[test]
fn infeasible_anchor_has_its_own_code() {
    let run = solve(&problem("infeasible_anchor.toml"), &[]);
    assert_eq!(code(&run.out), Exit::Infeasible as i32);
    let s = run.summary.unwrap();
    assert_eq!(s["stop"], "failed");
    assert!(s["error"].as_str().unwrap().contains("empty intersection"));
    assert_eq!(floats(&s["point"]), vec![0.0, 2.0]);
    assert_eq!(rows(&run.trace.unwrap()).len(), 0);
}

#[test]
fn reruns_are_byte_identical() {
    for name in ["box_rotation.toml", "coupled_scalar.toml"] {
        let a = solve(&problem(name), &[]);
        let b = solve(&problem(name), &[]);
        assert_eq!(code(&a.out), 0, "{name}: {}", stderr(&a.out));
        assert!(a.trace.is_some());
        assert_eq!(a.trace, b.trace, "{name}");
        assert_eq!(a.summary, b.summary, "{name}");
    }
}

#[test]
fn flags_override_the_file() {
    let run = solve(
        &problem("ball.toml"),
        &["--algo", "strong", "--relax", "1.5", "--tol-residual", "1e-12", "--tol-step", "1e-12"],
    );
    assert_eq!(code(&run.out), 0, "{}", stderr(&run.out));
    assert_eq!(run.summary.unwrap()["algo"], "strong");
    let bad = solve(&problem("ball.toml"), &["--relax", "2.5"]);
    assert_eq!(code(&bad.out), 1);
    assert!(stderr(&bad.out).contains("lambda"));
    let unknown = solve(&problem("ball.toml"), &["--algo", "newton"]);
    assert_eq!(code(&unknown.out), 1);
    assert!(stderr(&unknown.out).contains("newton"));
}

#[test]
fn declared_solution_mismatch_is_reported() {
    let dir = TempDir::new().unwrap();
    let mut f = read_problem(&problem("ball.toml")).unwrap();
    f.solution.as_mut().unwrap().point = vec![0.8, 0.6];
    let path = dir.path().join("wrong.toml");
    std::fs::write(&path, to_toml(&f).unwrap()).unwrap();
    let run = solve(&path, &[]);
    assert_eq!(code(&run.out), Exit::SolutionMismatch as i32);
    assert_eq!(run.summary.unwrap()["stop"], "solution_mismatch");
}

#[test]
fn input_errors_map_to_codes() {
    let missing = warpres(&["--problem", "/nonexistent/problem.toml"]);
    assert_eq!(code(&missing), Exit::Io as i32);

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "kind = \"inclusion\"\ndim = 2\n[set\nname = \"ball\"\n").unwrap();
    let broken = warpres(&["--problem", path.to_str().unwrap()]);
    assert_eq!(code(&broken), 1);
    assert!(stderr(&broken).contains(":3:"), "{}", stderr(&broken));

    let ball = problem("ball.toml");
    let unwritable = warpres(&["--problem", ball.to_str().unwrap(), "--trace", "/nonexistent/dir/t.csv"]);
    assert_eq!(code(&unwritable), Exit::Io as i32, "{}", stderr(&unwritable));

    assert_eq!(code(&warpres(&["--max-iter", "many"])), 1);
    assert_eq!(code(&warpres(&[])), 1);
    assert_eq!(code(&warpres(&["--help"])), 0);
}

#[test]
fn sample_problems_round_trip() {
    let dir = std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")).unwrap();
    let mut seen = 0;
    for entry in dir {
        let path = entry.unwrap().path();
        let f = read_problem(&path).unwrap();
        let text = to_toml(&f).unwrap();
        assert_eq!(from_toml(&text, "again").unwrap(), f, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn generated_problems_are_deterministic_and_solvable() {
    let a = warpres(&["generate", "--seed", "11", "--dim", "5"]);
    let b = warpres(&["generate", "--seed", "11", "--dim", "5"]);
    let c = warpres(&["generate", "--seed", "12", "--dim", "5"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);

    let dir = TempDir::new().unwrap();
    for seed in 0..8 {
        for dim in [1, 3, 6] {
            let path = dir.path().join(format!("g{seed}_{dim}.toml"));
            let f = generate::box_vi(seed, dim);
            assert_eq!(from_toml(&to_toml(&f).unwrap(), "gen").unwrap(), f);
            std::fs::write(&path, to_toml(&f).unwrap()).unwrap();
            for algo in ["fbf", "tseng", "weak"] {
                let run = solve(&path, &["--algo", algo]);
                assert_eq!(code(&run.out), 0, "seed {seed} dim {dim} {algo}: {}", String::from_utf8_lossy(&run.out.stdout));
            }
        }
    }
}
