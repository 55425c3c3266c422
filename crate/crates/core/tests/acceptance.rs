//! Acceptance criteria 1 to 10, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use degiorgi::constants::{
    dg_constants_from_pde, full_chain, gradient_bound, ChainOptions, DgParams, PdeParams,
    CHAIN_STAGES,
};
use degiorgi::corpus::{field_request, run_corpus, Battery, CorpusConfig, CorpusReport};
use degiorgi::fields::{
    build_coefficients, build_field, CoefficientSpec, DiffusionKind, DriftKind, FieldKind,
    GridSpec, SourceKind,
};
use degiorgi::iterate::{
    geometric_derivative_closed, geometric_derivative_direct, recurrence_threshold,
    s_k_bound_exact, simulate_recurrence, RecurrenceSpec,
};
use degiorgi::solver::{solve, Boundary, Profile, SolveConfig};
use degiorgi::verify::{check_first_lemma_iteration, check_ivl_parabolic, IvlOrientation, Verdict};
use degiorgi::Execution;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    started: Instant,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: u32, title: &'static str, budget_secs: u64) -> Self {
        Self {
            id,
            title,
            budget: Duration::from_secs(budget_secs),
            started: Instant::now(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(mut self) {
        let elapsed = self.started.elapsed();
        // the budgets are for optimized builds
        if !cfg!(debug_assertions) && elapsed > self.budget {
            self.failures
                .push(format!("took {elapsed:.2?}, budget {:?}", self.budget));
        }
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {:>2}: {} ({elapsed:.2?})",
            self.id, self.title
        );
        for f in &self.failures {
            println!("       - {f}");
        }
        assert!(self.failures.is_empty(), "criterion {} failed", self.id);
    }
}

fn unit() -> DgParams {
    DgParams::new(1.0, 1.0, 1.0, 1.0)
}

#[test]
fn criterion_01_constant_chain() {
    let mut c = Criterion::new(1, "constant chain", 1);
    let chain = full_chain(1, &unit(), &ChainOptions::default()).unwrap();

    // theta = 1 - 2^-e with e = k0_max + 3 > 1, so theta lies in (1/2, 1)
    let log2_e = chain.log2_theta_gap.log2_neg();
    c.check(log2_e > 0.0 && log2_e.is_finite(), || format!("log2 e = {log2_e}"));

    // -log2(1 - x) = x / ln 2 (1 + x/2 + ...) with x = 2^-e underflowing
    let e = -chain.log2_theta_gap.value();
    let expected = -e - std::f64::consts::LN_2.log2();
    let got = chain.alpha_holder.log2;
    let rel = ((got - expected) / expected).abs();
    c.check(rel <= 1e-12, || format!("log2 alpha_holder {got} vs {expected}"));

    c.check(chain.log2_beta.difference(&chain.log2_mu) == Some(1), || {
        format!("log2_beta - log2_mu = {:?}", chain.log2_beta.difference(&chain.log2_mu))
    });

    let names: Vec<&str> = chain.ledger.iter().map(|l| l.name.as_str()).collect();
    c.check(names == CHAIN_STAGES, || format!("ledger stages {names:?}"));
    c.check(chain.ledger.iter().all(|l| !l.citation.is_empty()), || "uncited ledger entry".into());

    let base = chain.alpha_holder;
    let doubled = [
        full_chain(1, &DgParams::new(1.0, 2.0, 1.0, 1.0), &ChainOptions::default()).unwrap(),
        full_chain(1, &DgParams::new(1.0, 1.0, 2.0, 1.0), &ChainOptions::default()).unwrap(),
        full_chain(
            1,
            &unit(),
            &ChainOptions {
                c_ivl_factor: 2.0,
                ..Default::default()
            },
        )
        .unwrap(),
    ];
    for (name, ch) in ["gamma2", "gamma3", "C_ivl"].iter().zip(&doubled) {
        c.check(ch.alpha_holder <= base, || {
            format!("doubling {name} raised alpha_holder: {:?} > {:?}", ch.alpha_holder, base)
        });
    }
    c.finish();
}

#[test]
fn criterion_02_pde_quadruple() {
    let mut c = Criterion::new(2, "class parameters from the equation", 1);
    let dg = dg_constants_from_pde(&PdeParams {
        lambda: 1.0,
        big_lambda: 2.0,
        q: 4.0,
        g_norm: 1.0,
        d: 1,
    })
    .unwrap();
    c.check(dg == DgParams::new(0.5, 20.0, 1.0, 4.0 / 3.0), || format!("{dg:?}"));
    c.finish();
}

#[test]
fn criterion_03_gradient_bound() {
    let mut c = Criterion::new(3, "gradient bound formula", 1);
    let g = gradient_bound(1, 0.0, &unit()).unwrap();
    c.check(g == 105.0, || format!("got {g}"));
    c.finish();
}

#[test]
fn criterion_04_recurrence() {
    let mut c = Criterion::new(4, "recurrence engine", 1);
    let t = recurrence_threshold(2.0, 2.0).unwrap();
    c.check(t == 1.0 / 16.0, || format!("threshold {t}"));

    let rep = simulate_recurrence(&RecurrenceSpec {
        c: 2.0,
        alpha: 2.0,
        v0: 0.05,
        kmax: 20,
    })
    .unwrap();
    for row in &rep.rows {
        // envelope 0.8^(2^k), in log form
        let log2_env = (row.k as f64).exp2() * 0.8f64.log2();
        let slack = 1e-12 * log2_env.abs();
        c.check(row.log2_v <= log2_env + slack, || {
            format!("k={}: log2 V = {} above log2 envelope {log2_env}", row.k, row.log2_v)
        });
    }
    c.check(rep.rows.len() == 21, || format!("{} rows", rep.rows.len()));

    for alpha in [1.1, 1.5, 2.0, 3.0] {
        let first_bad = s_k_bound_exact(alpha, 60).unwrap();
        c.check(first_bad.is_none(), || format!("S_k bound fails at {first_bad:?} for alpha={alpha}"));
    }

    for x in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for k in [1, 2, 5, 10, 20] {
            let a = geometric_derivative_direct(x, k);
            let b = geometric_derivative_closed(x, k);
            c.check(((a - b) / a).abs() <= 1e-12, || format!("x={x} k={k}: {a} vs {b}"));
        }
    }
    c.finish();
}

fn heat_rate_error() -> f64 {
    // dx = 4/512 = 1/128, output every 1/8, substeps chosen at the CFL limit
    let spec = GridSpec::q2(1, 32, 512).unwrap();
    let coeffs = build_coefficients(
        &spec,
        &CoefficientSpec {
            lambda: 1.0,
            big_lambda: 1.0,
            q: 4.0,
            diffusion: DiffusionKind::Identity,
            drift: DriftKind::Zero,
            source: SourceKind::Zero,
        },
    )
    .unwrap();
    let u = solve(&SolveConfig::new(coeffs, Profile::sine(1.0, 1, 1), Boundary::Constant { value: 0.0 })).unwrap();
    let grid = spec.spatial();
    let mode: Vec<f64> = (0..grid.len())
        .map(|i| (PI * (grid.point(i)[0] + 2.0) / 4.0).sin())
        .collect();
    let project = |j: usize| -> f64 { u.slice(j).iter().zip(&mode).map(|(a, b)| a * b).sum() };
    let (j0, j1) = (0, spec.nt - 1);
    let rate = (project(j0) / project(j1)).ln() / (spec.time_center(j1) - spec.time_center(j0));
    let exact = (PI / 4.0).powi(2);
    ((rate - exact) / exact).abs()
}

#[test]
fn criterion_05_solver() {
    let mut c = Criterion::new(5, "solver oracles", 30);
    let err = heat_rate_error();
    c.check(err <= 0.02, || format!("heat mode rate relative error {err}"));

    let cfg = CorpusConfig {
        nt: 64,
        nx: 64,
        ..Default::default()
    };
    let req = field_request(&cfg, 0).unwrap();
    let constant = SolveConfig::new(
        req.resolve(std::path::Path::new(".")).unwrap().coeffs,
        Profile::Constant { value: -0.3 },
        Boundary::Constant { value: -0.3 },
    );
    let u = solve(&constant).unwrap();
    let drift = u.values().iter().map(|v| (v + 0.3).abs()).fold(0.0, f64::max);
    c.check(drift <= 4.0 * f64::EPSILON, || format!("constant moved by {drift}"));

    for i in 0..50 {
        let cfg = CorpusConfig {
            seed: 1000 + i as u64,
            ..cfg.clone()
        };
        let req = field_request(&cfg, i).unwrap();
        let Profile::Modes { offset, modes } = &req.initial else {
            unreachable!()
        };
        let grid = req.grid.spatial();
        let (mut lo, mut hi) = (*offset, *offset);
        for p in 0..grid.len() {
            let x = grid.point(p)[0];
            let v = offset
                + modes
                    .iter()
                    .map(|m| m.amplitude * (PI * m.k[0] as f64 * (x + 2.0) / 4.0).sin())
                    .sum::<f64>();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let u = solve(&req.resolve(std::path::Path::new(".")).unwrap()).unwrap();
        let bad = u.values().iter().filter(|&&v| v < lo - 1e-12 || v > hi + 1e-12).count();
        c.check(bad == 0, || format!("run {i}: {bad} values outside [{lo}, {hi}]"));
    }
    c.finish();
}

fn corpus50() -> &'static (CorpusReport, Vec<Battery>, Duration) {
    static CORPUS: OnceLock<(CorpusReport, Vec<Battery>, Duration)> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let t = Instant::now();
        let cfg = CorpusConfig {
            n: 50,
            seed: 2024,
            ..Default::default()
        };
        let (r, b) = run_corpus(&cfg, Execution::Parallel).unwrap();
        (r, b, t.elapsed())
    })
}

#[test]
fn criterion_06_dg_membership() {
    let mut c = Criterion::new(6, "DG membership on 50 solver outputs", 120);
    let (report, batteries, _) = corpus50();
    c.check(report.config.lambda == 1.0 && report.config.big_lambda == 2.0, || "wrong ellipticity".into());
    c.check(report.config.dg == DgParams::new(0.5, 20.0, 0.0, 1.0), || "wrong class".into());
    c.check(batteries.len() == 50, || format!("{} fields", batteries.len()));
    for (i, b) in batteries.iter().enumerate() {
        let r = &b.dg;
        let worst = r.min_margin().unwrap_or(f64::NEG_INFINITY);
        c.check(r.verdict == Verdict::Pass && worst >= -r.tolerance.value, || {
            format!("field {i}: min margin {worst}, tolerance {}", r.tolerance.value)
        });
        c.check(r.samples.len() + r.skipped_samples == 200, || format!("field {i}: sample count"));
    }
    c.finish();
}

#[test]
fn criterion_07_ivl() {
    let mut c = Criterion::new(7, "intermediate value suite", 60);
    let (report, batteries, _) = corpus50();
    for (i, b) in batteries.iter().enumerate() {
        c.check(b.ivl.passed(), || format!("canonical IVL fails on field {i}"));
    }
    c.check(report.ivl_implied_by_dg, || "IVL not implied by DG membership".into());

    let dg = DgParams::new(0.5, 20.0, 0.0, 1.0);
    for nx in [128, 256, 512] {
        let spec = GridSpec::q2(1, 4 * nx, nx).unwrap();
        let f = build_field(&spec, &FieldKind::JumpCounterexample).unwrap();
        let swapped = check_ivl_parabolic(&f, &dg, 0.0, 1.0, &IvlOrientation::as_printed(1), false).unwrap();
        let s = &swapped.samples[0];
        c.check(s.lhs == 4.0 && s.rhs == 0.0 && swapped.verdict == Verdict::Fail, || {
            format!("dx=4/{nx}: swapped lhs {} rhs {} {:?}", s.lhs, s.rhs, swapped.verdict)
        });
        let canon = check_ivl_parabolic(&f, &dg, 0.0, 1.0, &IvlOrientation::canonical(1), false).unwrap();
        let s = &canon.samples[0];
        c.check(s.lhs == 0.0 && canon.passed(), || {
            format!("dx=4/{nx}: canonical lhs {} {:?}", s.lhs, canon.verdict)
        });
    }
    c.finish();
}

#[test]
fn criterion_08_first_lemma() {
    let mut c = Criterion::new(8, "first lemma", 60);
    let cfg = CorpusConfig::default();
    let chain = cfg.chain().unwrap();

    let req = field_request(&cfg, 3).unwrap();
    let mut solve_cfg = req.resolve(std::path::Path::new(".")).unwrap();
    // |u| <= 1e-32 by the maximum principle, so U_0 <= 2e-64 < delta
    solve_cfg.initial = Profile::sine(1e-32, 1, 1);
    solve_cfg.boundary = Boundary::Constant { value: 0.0 };
    let u = solve(&solve_cfg).unwrap();
    let rep = check_first_lemma_iteration(&u, &chain, 20).unwrap();
    let conclusion = rep.samples.iter().find(|s| s.label == "conclusion");
    c.check(conclusion.is_some(), || "U_0 above delta for the tiny solution".into());
    c.check(rep.passed(), || format!("tiny solution: {:?}", rep.verdict));
    if let Some(s) = conclusion {
        c.check(s.lhs <= 0.5, || format!("max on Q_1/2 = {}", s.lhs));
    }

    let (_, batteries, _) = corpus50();
    for (i, b) in batteries.iter().enumerate() {
        let monotone = b
            .first_lemma
            .samples
            .iter()
            .filter(|s| s.label == "monotone")
            .all(|s| s.lhs <= s.rhs);
        c.check(monotone, || format!("U_k increases on field {i}"));
        c.check(b.first_lemma.verdict != Verdict::Fail, || format!("first lemma fails on field {i}"));
    }
    c.finish();
}

#[test]
fn criterion_09_lowering_max_and_holder() {
    let mut c = Criterion::new(9, "lowering the maximum and Hölder decay", 120);
    let (report, batteries, _) = corpus50();
    let cap = report.chain.k0_max;
    for (i, b) in batteries.iter().take(20).enumerate() {
        let lm = &b.lowering_max;
        match lm.k_found {
            Some(k) => c.check(cap.admits(k) && lm.report.passed(), || {
                format!("field {i}: k={k}, {:?}, margin {:?}", lm.report.verdict, lm.report.min_margin())
            }),
            None => c.check(false, || format!("field {i}: no k found ({:?})", lm.report.verdict)),
        }
    }
    let chain = report.config.chain().unwrap();
    for (i, b) in batteries.iter().enumerate() {
        let h = &b.holder;
        c.check(chain.holder_bound_met(h.alpha_hat) && h.report.passed(), || {
            format!("field {i}: alpha_hat {} ({:?})", h.alpha_hat, h.report.verdict)
        });
    }
    c.finish();
}

#[test]
fn criterion_10_reproducibility() {
    let mut c = Criterion::new(10, "byte-identical corpus reports", 120);
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (i, dir) in dirs.iter().enumerate() {
        let mut argv = vec![
            "degiorgi".to_string(),
            "--out".into(),
            dir.path().display().to_string(),
            "corpus".into(),
            "--n".into(),
            "10".into(),
            "--seed".into(),
            "7".into(),
        ];
        if i == 2 {
            argv.push("--sequential".into());
        }
        let code = degiorgi::cli::execute(argv);
        c.check(code == 0, || format!("run {i} exited {code}"));
    }
    for name in ["corpus.json", "corpus.csv"] {
        let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(name)).unwrap_or_default();
        let first = read(&dirs[0]);
        c.check(!first.is_empty(), || format!("{name} missing"));
        c.check(first == read(&dirs[1]), || format!("{name} differs between runs"));
        c.check(first == read(&dirs[2]), || format!("{name} differs between parallel and sequential"));
    }
    c.finish();
}
