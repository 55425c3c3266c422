//! Seeded solver corpus and the battery of checks run on each field.
//!
//! Field `i` of a corpus is determined by `(config, i)` alone: its recipe
//! is drawn from stream `i` of a ChaCha8 generator keyed by the corpus
//! seed. Fields are produced and checked concurrently, and assembled in
//! index order, so reports do not depend on scheduling.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{full_chain, ChainOptions, ConstantChain, DgParams, IterationCap, Tiny};
use crate::error::Result;
use crate::fields::{
    CoefficientSpec, Cylinder, DiffusionKind, DriftKind, GridField, GridSpec, SourceKind,
};
use crate::par::{map_indexed, Execution};
use crate::solver::{solve, Boundary, CoefficientSource, Profile, Scheme, SineMode, SolveRequest};
use crate::verify::{
    check_close_times, check_dg_membership, check_first_lemma_iteration, check_ivl_parabolic,
    estimate_holder, run_lowering_max, time_lattice, CheckReport, DgCheckOptions, HolderEstimate,
    IvlOrientation, LoweringMax, Verdict, DEFAULT_FIRST_LEMMA_STEPS, DEFAULT_TOLERANCE_CONSTANT,
};

/// Lowering-the-maximum inputs are scaled so that their maximum on
/// `Q_{3/2}` is `1 / LOWERING_HEADROOM`.
pub const LOWERING_HEADROOM: f64 = 1.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub n: usize,
    pub seed: u64,
    pub d: usize,
    pub nt: usize,
    pub nx: usize,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    /// Upper bound for the drift magnitude, at most `Lambda`.
    pub max_drift: f64,
    /// Side of the coarse cells on which the coefficients are constant.
    pub cell_size: f64,
    pub modes: usize,
    pub max_wavenumber: u32,
    /// Bound on `|offset| + sum |amplitude|`, hence on `|u|`.
    pub amplitude: f64,
    pub dg: DgParams,
    pub dg_samples: usize,
    pub close_lattice: usize,
    pub holder_scales: usize,
    pub tolerance_constant: f64,
    pub chain: ChainOptions,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n: 10,
            seed: 0,
            d: 1,
            nt: 512,
            nx: 128,
            lambda: 1.0,
            big_lambda: 2.0,
            max_drift: 2.0,
            cell_size: 0.25,
            modes: 3,
            max_wavenumber: 6,
            amplitude: 0.9,
            dg: DgParams::new(0.5, 20.0, 0.0, 1.0),
            dg_samples: 200,
            close_lattice: 6,
            holder_scales: 4,
            tolerance_constant: DEFAULT_TOLERANCE_CONSTANT,
            chain: ChainOptions::default(),
        }
    }
}

impl CorpusConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::q2(self.d, self.nt, self.nx)
    }

    pub fn chain(&self) -> Result<ConstantChain> {
        full_chain(self.d, &self.dg, &self.chain)
    }
}

fn stream(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Solve request of field `i`: checkerboard diffusion in `{lambda, Lambda}`,
/// checkerboard drift, no source, a few random sine modes on top of an
/// offset that is also the boundary value.
pub fn field_request(cfg: &CorpusConfig, i: usize) -> Result<SolveRequest> {
    let grid = cfg.grid()?;
    let mut rng = stream(cfg.seed, i);
    let drift = rng.random_range(0.0..=cfg.max_drift.min(cfg.big_lambda));
    let coefficients = CoefficientSpec {
        lambda: cfg.lambda,
        big_lambda: cfg.big_lambda,
        q: 4.0,
        diffusion: DiffusionKind::Checkerboard {
            cell_size: cfg.cell_size,
            seed: rng.random(),
        },
        drift: DriftKind::Checkerboard {
            magnitude: drift,
            cell_size: cfg.cell_size,
            seed: rng.random(),
        },
        source: SourceKind::Zero,
    };
    let offset_share: f64 = rng.random_range(0.0..1.0 / 3.0);
    let offset = cfg.amplitude * offset_share * if rng.random::<bool>() { 1.0 } else { -1.0 };
    let weights: Vec<f64> = (0..cfg.modes).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let budget = cfg.amplitude - offset.abs();
    let modes = weights
        .iter()
        .map(|w| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            SineMode {
                amplitude: sign * budget * w / total,
                k: (0..cfg.d).map(|_| rng.random_range(1..=cfg.max_wavenumber)).collect(),
            }
        })
        .collect();
    Ok(SolveRequest {
        grid,
        coefficients: CoefficientSource::Recipe(coefficients),
        initial: Profile::Modes { offset, modes },
        boundary: Boundary::Constant { value: offset },
        scheme: Scheme::Explicit,
        cfl_safety: crate::solver::DEFAULT_CFL_SAFETY,
        substeps: None,
        residual: crate::solver::DEFAULT_RESIDUAL,
        max_sweeps: crate::solver::DEFAULT_MAX_SWEEPS,
    })
}

pub fn generate_field(cfg: &CorpusConfig, i: usize) -> Result<GridField> {
    let req = field_request(cfg, i)?;
    solve(&req.resolve(Path::new("."))?)
}

/// Affine image of `u` meeting the lowering-the-maximum hypotheses:
/// `v = (u - m) / s` with `m` the median of `u` on `Qbar_1` (so `{v <= 0}`
/// holds half of it) and `s` chosen so that `max v = 1/LOWERING_HEADROOM`
/// on `Q_{3/2}`.
pub fn lowering_max_input(u: &GridField) -> Result<GridField> {
    let d = u.spec().d;
    let mut vals = u.values_in(&Cylinder::q_bar_1(d))?;
    vals.sort_by(f64::total_cmp);
    let median = if vals.is_empty() { 0.0 } else { vals[(vals.len() - 1) / 2] };
    let (_, max) = u.range_on(&Cylinder::standard(d, 1.5))?;
    let spread = max - median;
    if spread > 0.0 {
        let s = LOWERING_HEADROOM * spread;
        u.map(|x| (x - median) / s)
    } else {
        u.map(|x| x - median)
    }
}

/// Every check of the battery on one field.
#[derive(Clone, Debug, Serialize)]
pub struct Battery {
    pub dg: CheckReport,
    pub ivl: CheckReport,
    pub close_times: CheckReport,
    pub first_lemma: CheckReport,
    pub lowering_max: LoweringMax,
    pub holder: HolderEstimate,
}

impl Battery {
    pub fn reports(&self) -> [&CheckReport; 6] {
        [
            &self.dg,
            &self.ivl,
            &self.close_times,
            &self.first_lemma,
            &self.lowering_max.report,
            &self.holder.report,
        ]
    }

    /// No check failed outright.
    pub fn ok(&self) -> bool {
        self.reports().iter().all(|r| r.verdict != Verdict::Fail)
    }
}

/// Runs the battery: DG membership, canonical IVL at `k = 0, l = 1/2`,
/// close times on a time lattice, the first lemma, lowering the maximum on
/// the normalized field, and the oscillation decay at the origin.
pub fn run_battery(
    u: &GridField,
    cfg: &CorpusConfig,
    chain: &ConstantChain,
    seed: u64,
    exec: Execution,
) -> Result<Battery> {
    let d = u.spec().d;
    let dg = check_dg_membership(
        u,
        &cfg.dg,
        &DgCheckOptions {
            n_samples: cfg.dg_samples,
            seed,
            tolerance_constant: cfg.tolerance_constant,
            exec,
            ..Default::default()
        },
    )?;
    let ivl = check_ivl_parabolic(u, &cfg.dg, 0.0, 0.5, &IvlOrientation::canonical(d), true)?;
    let close_times = check_close_times(u, &cfg.dg, 0.0, 0.5, &time_lattice(cfg.close_lattice))?;
    let first_lemma = check_first_lemma_iteration(u, chain, DEFAULT_FIRST_LEMMA_STEPS)?;
    let lowering_max = run_lowering_max(&lowering_max_input(u)?, chain)?;
    let holder = estimate_holder(u, 0.0, &vec![0.0; d], cfg.holder_scales, chain)?;
    Ok(Battery {
        dg,
        ivl,
        close_times,
        first_lemma,
        lowering_max,
        holder,
    })
}

/// Compact view of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub verdict: Verdict,
    pub samples: usize,
    pub skipped_samples: usize,
    pub min_margin: Option<f64>,
    pub tolerance: f64,
}

impl From<&CheckReport> for CheckSummary {
    fn from(r: &CheckReport) -> Self {
        Self {
            name: r.name.clone(),
            verdict: r.verdict,
            samples: r.samples.len(),
            skipped_samples: r.skipped_samples,
            min_margin: r.min_margin(),
            tolerance: r.tolerance.value,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldOutcome {
    pub index: usize,
    pub seed: u64,
    pub request: SolveRequest,
    pub value_range: (f64, f64),
    pub checks: Vec<CheckSummary>,
    pub lowering_k: Option<u64>,
    pub lowering_bound: Option<f64>,
    /// `None` when every oscillation vanishes.
    pub alpha_hat: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerdictCounts {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    pub inconclusive: usize,
}

impl VerdictCounts {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Pass => self.pass += 1,
            Verdict::Fail => self.fail += 1,
            Verdict::Skipped => self.skipped += 1,
            Verdict::Inconclusive => self.inconclusive += 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainSummary {
    pub log2_delta: f64,
    pub c_ivl: f64,
    pub k0_max: IterationCap,
    pub alpha_holder: Tiny,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub config: CorpusConfig,
    pub chain: ChainSummary,
    pub fields: Vec<FieldOutcome>,
    pub totals: BTreeMap<String, VerdictCounts>,
    /// Canonical IVL passes on every field that passes DG membership.
    pub ivl_implied_by_dg: bool,
    pub passed: bool,
}

impl CorpusReport {
    /// One row per (field, check).
    pub fn to_csv_string(&self) -> Result<String> {
        use crate::verify::fmt_f64;
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(["field", "check", "verdict", "samples", "skipped", "min_margin", "tolerance"])?;
        for f in &self.fields {
            for c in &f.checks {
                out.write_record([
                    f.index.to_string(),
                    c.name.clone(),
                    serde_json::to_value(c.verdict)?.as_str().unwrap_or_default().to_string(),
                    c.samples.to_string(),
                    c.skipped_samples.to_string(),
                    c.min_margin.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(c.tolerance),
                ])?;
            }
        }
        let bytes = out.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Seed of the DG sampler for field `i`.
pub fn field_seed(seed: u64, i: usize) -> u64 {
    stream(seed ^ 0x5eed, i).random()
}

/// Generates `cfg.n` fields and runs the battery on each.
pub fn run_corpus(cfg: &CorpusConfig, exec: Execution) -> Result<(CorpusReport, Vec<Battery>)> {
    let chain = cfg.chain()?;
    let outcomes = map_indexed(exec, cfg.n, |i| -> Result<(FieldOutcome, Battery)> {
        let request = field_request(cfg, i)?;
        let u = solve(&request.resolve(Path::new("."))?)?;
        let seed = field_seed(cfg.seed, i);
        let battery = run_battery(&u, cfg, &chain, seed, exec)?;
        let (lo, hi) = u
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let alpha = battery.holder.alpha_hat;
        let outcome = FieldOutcome {
            index: i,
            seed,
            request,
            value_range: (lo, hi),
            checks: battery.reports().iter().map(|r| CheckSummary::from(*r)).collect(),
            lowering_k: battery.lowering_max.k_found,
            lowering_bound: battery.lowering_max.bound,
            alpha_hat: alpha.is_finite().then_some(alpha),
        };
        Ok((outcome, battery))
    });
    let mut fields = Vec::with_capacity(cfg.n);
    let mut batteries = Vec::with_capacity(cfg.n);
    for o in outcomes {
        let (f, b) = o?;
        fields.push(f);
        batteries.push(b);
    }
    let mut totals: BTreeMap<String, VerdictCounts> = BTreeMap::new();
    for b in &batteries {
        for r in b.reports() {
            totals.entry(r.name.clone()).or_default().add(r.verdict);
        }
    }
    let ivl_implied_by_dg = batteries
        .iter()
        .all(|b| !b.dg.passed() || b.ivl.passed());
    let passed = batteries.iter().all(Battery::ok);
    let report = CorpusReport {
        config: cfg.clone(),
        chain: ChainSummary {
            log2_delta: chain.log2_delta,
            c_ivl: chain.c_ivl,
            k0_max: chain.k0_max,
            alpha_holder: chain.alpha_holder,
        },
        fields,
        totals,
        ivl_implied_by_dg,
        passed,
    };
    Ok((report, batteries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CorpusConfig {
        CorpusConfig {
            n: 3,
            seed: 11,
            nt: 128,
            nx: 32,
            dg_samples: 20,
            ..Default::default()
        }
    }

    #[test]
    fn requests_are_seeded_and_bounded() {
        let cfg = small();
        let a = field_request(&cfg, 1).unwrap();
        assert_eq!(a, field_request(&cfg, 1).unwrap());
        assert_ne!(a, field_request(&cfg, 2).unwrap());
        let Profile::Modes { offset, modes } = &a.initial else {
            panic!("expected modes")
        };
        let total: f64 = offset.abs() + modes.iter().map(|m| m.amplitude.abs()).sum::<f64>();
        assert!(total <= cfg.amplitude + 1e-12);
    }

    #[test]
    fn lowering_input_meets_hypotheses() {
        let u = generate_field(&small(), 0).unwrap();
        let v = lowering_max_input(&u).unwrap();
        let (_, max) = v.range_on(&Cylinder::standard(1, 1.5)).unwrap();
        assert!((max - 1.0 / LOWERING_HEADROOM).abs() < 1e-12);
    }

    #[test]
    fn corpus_is_reproducible_across_execution_modes() {
        let cfg = small();
        let (a, _) = run_corpus(&cfg, Execution::Parallel).unwrap();
        let (b, _) = run_corpus(&cfg, Execution::Sequential).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.passed, "{}", serde_json::to_string_pretty(&a.totals).unwrap());
        assert_eq!(a.to_csv_string().unwrap().lines().count(), 1 + 3 * 6);
    }
}
