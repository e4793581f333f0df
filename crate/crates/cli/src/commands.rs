use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use vi_core::gamebench::{
    self, generate_game, presolve_reference, GameInstance, Presolve, RunEntry, RunSpec, PRESOLVE_TOL,
};
use vi_core::lyapunov::{self, EnergyParams, LyapunovReport, Snapshot, SummabilityReport, SummabilityTracker};
use vi_core::{run, Algorithm, IterTrace, Outcome, RunOptions, SolverConfig, VIProblem};

use crate::args::{CompareArgs, GenerateArgs, InstanceArgs, LyapunovArgs, RecordArgs, ReplayArgs, RunArgs, StepArgs};
use crate::error::{CliError, CliResult};
use crate::output::atomic_write;
use crate::trace::{self, ExtraColumns, TraceHeader};

pub const LYAP_COLUMNS: [&str; 6] = [
    "lyap_e",
    "lyap_g",
    "lyap_lower",
    "lyap_rk",
    "lyap_descent_slack",
    "lyap_chain_slack",
];

struct Loaded {
    game: GameInstance,
    path: Option<PathBuf>,
}

fn load_instance(path: Option<&Path>, m: Option<usize>, n: Option<usize>, seed: u64) -> CliResult<Loaded> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(Loaded {
                game: GameInstance::parse(&text)?,
                path: Some(p.to_path_buf()),
            })
        }
        None => {
            let (Some(m), Some(n)) = (m, n) else {
                return Err(CliError::Config("either --instance or both --m and --n are required".into()));
            };
            Ok(Loaded {
                game: generate_game(m, n, seed)?,
                path: None,
            })
        }
    }
}

fn instance_of(a: &InstanceArgs) -> CliResult<Loaded> {
    load_instance(a.instance.as_deref(), a.m, a.n, a.seed)
}

fn solver_config(
    algorithm: Algorithm,
    gamma: Option<f64>,
    gamma_frac: Option<f64>,
    alpha: f64,
    stride: usize,
    iters: usize,
) -> SolverConfig {
    let mut cfg = SolverConfig::new(algorithm)
        .with_alpha(alpha)
        .with_stride(stride)
        .with_max_iters(iters);
    if let Some(g) = gamma {
        cfg = cfg.with_gamma(g);
    }
    if let Some(f) = gamma_frac {
        cfg = cfg.with_safety_fraction(f);
    }
    cfg
}

fn step_config(algorithm: Algorithm, s: &StepArgs, iters: usize) -> SolverConfig {
    solver_config(algorithm, s.gamma, s.gamma_frac, s.alpha, s.stride, iters)
}

fn run_options(r: &RecordArgs) -> CliResult<RunOptions> {
    if !(r.tol >= 0.0) {
        return Err(CliError::Config(format!("--tol must be nonnegative (got {})", r.tol)));
    }
    Ok(RunOptions {
        cadence: r.cadence,
        stop_tol: Some(r.tol),
    })
}

fn with_reference(game: &GameInstance, reference: bool) -> CliResult<(VIProblem, Option<Presolve>)> {
    let problem = game.problem();
    if !reference {
        return Ok((problem, None));
    }
    let pre = presolve_reference(&problem, &game.default_start(), PRESOLVE_TOL)?;
    Ok((problem.with_reference(pre.z.clone())?, Some(pre)))
}

fn header_for(loaded: &Loaded, t: &IterTrace, iters: usize, opts: &RunOptions, reference: bool) -> TraceHeader {
    TraceHeader {
        algorithm: t.algorithm,
        gamma: t.gamma,
        alpha: t.alpha,
        stride: t.stride,
        seed: loaded.game.seed,
        m: loaded.game.m(),
        n: loaded.game.n(),
        lipschitz: loaded.game.lipschitz,
        delta0: t.delta0,
        iters,
        cadence: opts.cadence,
        tol: opts.stop_tol,
        reference,
        instance: loaded.path.clone(),
    }
}

fn describe(label: &str, t: &IterTrace) -> String {
    let last = t.last();
    let status = match &t.outcome {
        Outcome::MaxIters => "ok".to_string(),
        Outcome::Converged { residual } => format!("converged (Res {residual:.3e})"),
        Outcome::Diverged { iterations, reason } => format!("diverged at k={iterations}: {reason}"),
    };
    format!(
        "{label}: γ={:.6e} k={} Res={:.3e} gap={} F-evals={} projections={} {status}",
        t.gamma,
        last.k,
        last.res_natural,
        last.gap.map_or_else(|| "-".into(), |g| format!("{g:.3e}")),
        t.op_evals,
        t.projections,
    )
}

fn diverged(label: &str, t: &IterTrace) -> CliResult<()> {
    match &t.outcome {
        Outcome::Diverged { iterations, reason } => Err(CliError::Numerical(format!(
            "{label} diverged at k={iterations}: {reason}"
        ))),
        _ => Ok(()),
    }
}

/// Runs, writes the trace, then reports divergence.
fn execute(
    loaded: &Loaded,
    cfg: &SolverConfig,
    opts: &RunOptions,
    reference: bool,
    out: &Path,
) -> CliResult<IterTrace> {
    cfg.resolve_gamma(loaded.game.lipschitz)?;
    let (problem, _) = with_reference(&loaded.game, reference)?;
    let t = run(cfg, &problem, &loaded.game.default_start(), opts, &mut |_| {})?;
    let header = header_for(loaded, &t, cfg.max_iters, opts, reference);
    trace::write_trace(out, &header, &t.records, &ExtraColumns::default())?;
    println!("{}", describe(cfg.algorithm.name(), &t));
    diverged(cfg.algorithm.name(), &t)?;
    Ok(t)
}

pub fn cmd_run(a: &RunArgs) -> CliResult<()> {
    let loaded = instance_of(&a.instance)?;
    let cfg = step_config(a.algo, &a.step, a.iters);
    execute(&loaded, &cfg, &run_options(&a.record)?, a.record.reference, &a.out).map(|_| ())
}

pub fn cmd_replay(a: &ReplayArgs) -> CliResult<()> {
    let h = trace::read_header(&a.trace)?;
    let loaded = match &h.instance {
        Some(p) => load_instance(Some(p), None, None, 0)?,
        None => load_instance(None, Some(h.m), Some(h.n), h.seed)?,
    };
    if loaded.game.m() != h.m || loaded.game.n() != h.n {
        return Err(CliError::Config(format!(
            "instance is {}×{} but the trace header says {}×{}",
            loaded.game.m(),
            loaded.game.n(),
            h.m,
            h.n
        )));
    }
    let cfg = solver_config(h.algorithm, Some(h.gamma), None, h.alpha, h.stride, h.iters);
    let opts = RunOptions {
        cadence: h.cadence,
        stop_tol: h.tol,
    };
    execute(&loaded, &cfg, &opts, h.reference, &a.out).map(|_| ())
}

pub fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    let loaded = instance_of(&a.instance)?;
    let mut spec = if a.alphas.is_empty() {
        RunSpec::for_algorithms(&a.algos, &step_config(a.algos[0], &a.step, a.iters))
    } else {
        RunSpec::for_alphas(&a.alphas, &step_config(a.algo, &a.step, a.iters))
    };
    spec.options = run_options(&a.record)?;
    spec.validate(loaded.game.lipschitz)?;

    let (problem, _) = with_reference(&loaded.game, a.record.reference)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let results = gamebench::run_comparison(&problem, &spec)?;

    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in &results {
        let RunEntry { label, config } = &r.entry;
        match &r.trace {
            Ok(t) => {
                let header = header_for(&loaded, t, config.max_iters, &spec.options, a.record.reference);
                let path = a.out_dir.join(format!("{label}.csv"));
                trace::write_trace(&path, &header, &t.records, &ExtraColumns::default())?;
                println!("{}", describe(label, t));
                if let Err(e) = diverged(label, t) {
                    failures.push(e.to_string());
                }
                rows.push(Ok(gamebench::summary_row(label, t)));
            }
            Err(e) => {
                eprintln!("{label}: {e}");
                failures.push(format!("{label}: {e}"));
                rows.push(Err((label.clone(), e.to_string())));
            }
        }
    }
    atomic_write(&a.out_dir.join("summary.csv"), &trace::render_summary(&rows))?;
    print!("{}", trace::summary_table(&rows));
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failures.join("; ")))
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let game = generate_game(a.m, a.n, a.seed)?;
    atomic_write(&a.out, game.to_file_string().as_bytes())?;
    println!(
        "{}×{} game, seed {}, L = {}, written to {}",
        a.m,
        a.n,
        a.seed,
        game.lipschitz,
        a.out.display()
    );
    Ok(())
}

struct EnergyRun {
    loaded: Loaded,
    trace: IterTrace,
    report: LyapunovReport,
    summability: Option<SummabilityReport>,
    opts: RunOptions,
}

fn energy_run(a: &LyapunovArgs) -> CliResult<EnergyRun> {
    let (loaded, cfg) = match &a.trace {
        Some(path) => {
            let h = trace::read_header(path)?;
            if h.algorithm != Algorithm::FogdaVi {
                return Err(CliError::Config(format!(
                    "{} holds a {} trace; energy diagnostics need fogda-vi",
                    path.display(),
                    h.algorithm
                )));
            }
            let loaded = match &h.instance {
                Some(p) => load_instance(Some(p), None, None, 0)?,
                None => load_instance(None, Some(h.m), Some(h.n), h.seed)?,
            };
            let cfg = solver_config(h.algorithm, Some(h.gamma), None, h.alpha, h.stride, h.iters);
            (loaded, cfg)
        }
        None => {
            let loaded = load_instance(a.instance.as_deref(), a.m, a.n, a.seed)?;
            let iters = a.iters.ok_or_else(|| CliError::Config("--iters is required".into()))?;
            let cfg = solver_config(Algorithm::FogdaVi, a.gamma, a.gamma_frac, a.alpha, 1, iters);
            (loaded, cfg)
        }
    };
    if cfg.stride != 1 {
        return Err(CliError::Config("energy diagnostics need counter stride 1".into()));
    }
    let gamma = cfg.resolve_gamma(loaded.game.lipschitz)?;
    let params = match a.lambda {
        Some(l) => EnergyParams::new(cfg.alpha, gamma, loaded.game.lipschitz, l)?,
        None => EnergyParams::with_default_lambda(cfg.alpha, gamma, loaded.game.lipschitz)?,
    };

    let (problem, pre) = with_reference(&loaded.game, true)?;
    let z_ref = pre.expect("reference requested").z;
    let opts = RunOptions {
        cadence: vi_core::Cadence::Every,
        stop_tol: None,
    };
    let mut snaps: Vec<Snapshot> = Vec::with_capacity(cfg.max_iters + 1);
    let mut tracker = SummabilityTracker::new();
    let t = run(&cfg, &problem, &loaded.game.default_start(), &opts, &mut |s| {
        snaps.push(Snapshot::from_state(&problem, s));
        tracker.observe(s);
    })?;
    diverged("fogda-vi", &t)?;
    let report = lyapunov::analyze(&params, &snaps, &z_ref)?;
    Ok(EnergyRun {
        loaded,
        trace: t,
        report,
        summability: tracker.report().ok(),
        opts,
    })
}

fn lyap_columns(r: &LyapunovReport) -> ExtraColumns {
    // snapshot k runs one ahead of the completed-iteration count
    let offset = Algorithm::FogdaVi.first_index();
    let mut extra = ExtraColumns {
        names: LYAP_COLUMNS.to_vec(),
        ..Default::default()
    };
    for rec in &r.records {
        extra.rows.insert(
            rec.k - offset,
            vec![Some(rec.e), Some(rec.g), Some(rec.lower_bound), Some(rec.rk_certificate), None, None],
        );
    }
    for c in &r.descent.checks {
        if let Some(row) = extra.rows.get_mut(&(c.k - offset)) {
            row[4] = Some(c.slack);
        }
    }
    for s in &r.lipschitz.steps {
        if let Some(row) = extra.rows.get_mut(&(s.k - offset)) {
            row[5] = Some(s.stated_slack());
        }
    }
    extra
}

pub fn render_report(r: &LyapunovReport, s: Option<&SummabilityReport>) -> String {
    let p = &r.params;
    let yes = |b: bool| if b { "holds" } else { "FAILS" };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "parameters: α={} γ={:.6e} L={:.6e} ε={:.6e} λ={}",
        p.alpha, p.gamma, p.lipschitz, p.epsilon, p.lambda
    );
    let _ = writeln!(
        out,
        "λ range: ({}, {}), λ {} inside",
        r.lambda_range.0,
        r.lambda_range.1,
        if p.lambda_in_range() { "is" } else { "is NOT" }
    );
    let opt = |k: Option<usize>| k.map_or_else(|| "none ≤ 1e6".into(), |k| k.to_string());
    let _ = writeln!(
        out,
        "thresholds: k₀={} k_λ={} k_ε={}",
        r.k0,
        opt(r.k_lambda),
        opt(r.k_epsilon)
    );
    let _ = writeln!(
        out,
        "lower bound G ≥ lb ≥ 0: {} ({} violations)",
        yes(r.lower_bound_holds()),
        r.lower_bound_violations.len()
    );
    let _ = writeln!(
        out,
        "descent from k₀: {} ({} violations, worst slack {:.3e}, first valid k {})",
        yes(r.descent.violations == 0),
        r.descent.violations,
        r.descent.worst_slack,
        opt(r.descent.first_valid_k)
    );
    let _ = writeln!(
        out,
        "R_k certificate from k_λ: {} ({} violations)",
        yes(r.k_lambda.is_some() && r.rk_violations.is_empty()),
        r.rk_violations.len()
    );
    let _ = writeln!(
        out,
        "relative variation over k ≥ {}: E {:.3e}, G {:.3e}",
        r.variation_from, r.e_variation, r.g_variation
    );
    let _ = writeln!(
        out,
        "chain with γL: {} ({} of {} steps violate, max ratio {:.3}); with 2γL: {} violations",
        yes(r.lipschitz.stated_violations == 0),
        r.lipschitz.stated_violations,
        r.lipschitz.steps.len(),
        r.lipschitz.max_ratio,
        r.lipschitz.doubled_violations
    );
    if let Some(s) = s {
        for (i, name) in SummabilityReport::SERIES.iter().enumerate() {
            let _ = writeln!(
                out,
                "{name}: {:.6e}, final-half growth {:.3e}",
                s.partial_sums[i], s.growth_final_half[i]
            );
        }
        let _ = writeln!(
            out,
            "k‖z_k−z_(k−1)‖: global max {:.3e}, last-decade max {:.3e} (ratio {:.3e})",
            s.scaled_step_global_max,
            s.scaled_step_last_decade_max,
            s.scaled_step_ratio()
        );
    }
    out
}

pub fn cmd_lyapunov(a: &LyapunovArgs) -> CliResult<()> {
    let e = energy_run(a)?;
    print!("{}", render_report(&e.report, e.summability.as_ref()));
    if let Some(out) = &a.out {
        let header = header_for(&e.loaded, &e.trace, e.trace.iterations(), &e.opts, true);
        trace::write_trace(out, &header, &e.trace.records, &lyap_columns(&e.report))?;
    }
    Ok(())
}
