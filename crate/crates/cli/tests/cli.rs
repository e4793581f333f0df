use std::path::Path;
use std::process::{Command, Output};

use vi_cli::trace::{read_trace, BASE_COLUMNS};
use vi_core::gamebench::{generate_game, GameInstance};
use vi_core::Algorithm;

fn vi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vi"))
        .current_dir(dir)
        .env_remove("VI_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_iterations_write_only_the_initial_record() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(
        dir.path(),
        &["run", "--algo", "fogda-vi", "--m", "2", "--n", "2", "--seed", "1", "--iters", "0", "--alpha", "3", "--out", "t.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = read_trace(&dir.path().join("t.csv")).unwrap();
    assert_eq!(t.columns, BASE_COLUMNS.map(String::from).to_vec());
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0][0], "0");
    assert_eq!(t.header.algorithm, Algorithm::FogdaVi);
    assert_eq!((t.header.m, t.header.n, t.header.seed, t.header.iters), (2, 2, 1, 0));
    assert_eq!(t.header.lipschitz, generate_game(2, 2, 1).unwrap().lipschitz);
}

#[test]
fn step_size_beyond_the_bound_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(dir.path(), &["run", "--algo", "eg", "--gamma", "10", "--m", "2", "--n", "2", "--iters", "5", "--out", "t.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("EG requires γ < 1/L"), "{}", stderr(&o));
    let o = vi(dir.path(), &["run", "--algo", "arg", "--gamma", "1", "--m", "2", "--n", "2", "--iters", "5", "--out", "t.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ARG requires γ ≤ 1/(12L)"), "{}", stderr(&o));
    assert!(!dir.path().join("t.csv").exists());
}

#[test]
fn unknown_algorithm_and_bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(dir.path(), &["run", "--algo", "gda", "--m", "2", "--n", "2", "--iters", "5", "--out", "t.csv"]);
    assert_eq!(code(&o), 2);
    let o = vi(dir.path(), &["run", "--algo", "eg", "--iters", "5", "--out", "t.csv"]);
    assert_eq!(code(&o), 2);
    let o = vi(dir.path(), &["run", "--algo", "fogda-vi", "--alpha", "2", "--m", "2", "--n", "2", "--iters", "5", "--out", "t.csv"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn replay_reproduces_every_metric() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(
        dir.path(),
        &["run", "--algo", "fogda-vi", "--m", "6", "--n", "4", "--seed", "9", "--iters", "3000", "--alpha", "7", "--stride", "3", "--reference", "--out", "a.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = vi(dir.path(), &["replay", "a.csv", "--out", "b.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (a, b) = (read_trace(&dir.path().join("a.csv")).unwrap(), read_trace(&dir.path().join("b.csv")).unwrap());
    assert_eq!(a.header, b.header);
    assert_eq!(a.rows.len(), b.rows.len());
    let wall = a.column("wall_ns").unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for (i, (x, y)) in ra.iter().zip(rb).enumerate() {
            if i != wall {
                assert_eq!(x, y);
            }
        }
    }
    let k: Vec<usize> = a.rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(k.windows(2).all(|w| w[0] < w[1]));
    assert!(a.header.delta0.is_some());
    assert!(a.rows.iter().all(|r| !r[a.column("dist_to_ref").unwrap()].is_empty()));
}

#[test]
fn compare_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(
        dir.path(),
        &["compare", "--algos", "eg,fogda-vi", "--m", "4", "--n", "3", "--seed", "2", "--iters", "100", "--out-dir", "out"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    for label in ["eg", "fogda-vi"] {
        let t = read_trace(&out.join(format!("{label}.csv"))).unwrap();
        assert_eq!(t.rows.last().unwrap()[0], "100");
    }
    let text = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("label,algo,gamma,alpha,iters,res_initial,res_final"));
    let eg: Vec<&str> = lines[1].split(',').collect();
    let cols: Vec<&str> = lines[0].split(',').collect();
    let col = |name: &str| cols.iter().position(|c| *c == name).unwrap();
    assert_eq!(eg[0], "eg");
    assert_eq!(eg[col("op_evals")], "200");
    assert_eq!(eg[col("projections")], "201");
    assert_eq!(eg[col("res_k100")], eg[col("res_final")]);
    assert_eq!(eg[col("res_k1000")], "");
}

#[test]
fn alpha_sweep_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(
        dir.path(),
        &["compare", "--alphas", "3,10,50,100", "--algo", "fogda-vi", "--m", "3", "--n", "3", "--iters", "50", "--out-dir", "sweep"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let n = std::fs::read_dir(dir.path().join("sweep")).unwrap().count();
    assert_eq!(n, 5);
    let t = read_trace(&dir.path().join("sweep/fogda-vi-a50.csv")).unwrap();
    assert_eq!(t.header.alpha, 50.0);
    assert!(std::fs::read_to_string(dir.path().join("sweep/fogda-vi-a50.csv")).unwrap().contains(" alpha=50.0 "));

    let o = vi(dir.path(), &["compare", "--algos", "eg,popov,eg", "--m", "3", "--n", "3", "--iters", "5", "--out-dir", "dup"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("dup/summary.csv").exists());
}

#[test]
fn lyapunov_report_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(
        dir.path(),
        &["lyapunov", "--m", "5", "--n", "5", "--seed", "7", "--iters", "200", "--alpha", "4", "--out", "l.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("λ=2.0833333333333335"), "{report}");
    assert!(report.contains("λ range: (1.6666666666666667, 2.5)"));
    assert!(report.contains("first valid k 2"));
    let t = read_trace(&dir.path().join("l.csv")).unwrap();
    assert_eq!(t.rows.len(), 201);
    for c in vi_cli::commands::LYAP_COLUMNS {
        assert!(t.column(c).is_some(), "{c}");
    }
    let g = t.column("lyap_g").unwrap();
    let lower = t.column("lyap_lower").unwrap();
    for r in &t.rows {
        let (g, lb): (f64, f64) = (r[g].parse().unwrap(), r[lower].parse().unwrap());
        assert!(g >= lb - 1e-9 * (1.0 + g.abs()) && lb >= 0.0);
    }

    let o = vi(dir.path(), &["lyapunov", "--trace", "l.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), report);
}

#[test]
fn lyapunov_rejects_other_methods() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(dir.path(), &["run", "--algo", "eg", "--m", "3", "--n", "3", "--iters", "10", "--out", "eg.csv"]);
    assert_eq!(code(&o), 0);
    let o = vi(dir.path(), &["lyapunov", "--trace", "eg.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("fogda-vi"));
}

#[test]
fn generated_instances_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(dir.path(), &["generate", "--m", "4", "--n", "3", "--seed", "11", "--out", "g.csv"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert_eq!(GameInstance::parse(&text).unwrap(), generate_game(4, 3, 11).unwrap());

    let o = vi(dir.path(), &["run", "--algo", "rg", "--instance", "g.csv", "--iters", "30", "--out", "r.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = read_trace(&dir.path().join("r.csv")).unwrap();
    assert_eq!(t.header.instance.as_deref(), Some(Path::new("g.csv")));
    let o = vi(dir.path(), &["replay", "r.csv", "--out", "r2.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    std::fs::write(dir.path().join("bad.csv"), "# vi-game 2 2 0 1.0\n1,2\n").unwrap();
    let o = vi(dir.path(), &["run", "--algo", "rg", "--instance", "bad.csv", "--iters", "3", "--out", "x.csv"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn thread_count_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vi"))
        .current_dir(dir.path())
        .env("VI_THREADS", "none")
        .args(["generate", "--m", "2", "--n", "2", "--out", "g.csv"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_vi"))
        .current_dir(dir.path())
        .env("VI_THREADS", "2")
        .args(["compare", "--algos", "eg,fbf,popov", "--m", "3", "--n", "3", "--iters", "20", "--out-dir", "c"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn stop_tolerance_ends_the_run_early() {
    let dir = tempfile::tempdir().unwrap();
    let o = vi(
        dir.path(),
        &["run", "--algo", "eg", "--m", "3", "--n", "3", "--iters", "100000", "--tol", "1e-3", "--cadence", "every", "--out", "t.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = read_trace(&dir.path().join("t.csv")).unwrap();
    let res: f64 = t.rows.last().unwrap()[1].parse().unwrap();
    assert!(res <= 1e-3);
    assert!(t.rows.len() < 100_001);
    assert_eq!(t.rows.len(), t.rows.last().unwrap()[0].parse::<usize>().unwrap() + 1);
}
