//! The L2 to L-infinity lemma and the lowering-the-maximum iteration.

use serde::Serialize;

use super::report::{CheckReport, Sample, Tolerance, Verdict, DEFAULT_TOLERANCE_CONSTANT};
use crate::constants::{ConstantChain, IterationCap};
use crate::error::{Error, Result};
use crate::fields::{energy_integrals, grid_measure, measure_level_set, Cylinder, GridField, LevelSet};

pub const DEFAULT_FIRST_LEMMA_STEPS: usize = 20;

/// `log2 x <= log2_delta`, robust when `delta` underflows.
fn below_delta(x: f64, chain: &ConstantChain) -> bool {
    x <= 0.0 || x.log2() <= chain.log2_delta
}

#[derive(Clone, Debug, Serialize)]
struct FirstLemmaDetails {
    delta: f64,
    log2_delta: f64,
    u_k: Vec<f64>,
    /// `log2(U_k / U_{k-2}^alpha) / k` against `log2 C_iter`.
    log2_ratio_per_k: Vec<Option<f64>>,
    log2_c_iter: f64,
    hypothesis_met: bool,
}

/// Computes `U_k = int_{Q_{r_k}} (u - c_k)_+^2` with `r_k = (1 + 2^-k)/2`,
/// `c_k = (1 - 2^-k)/2`. When `U_0 <= delta`, checks `u <= 1/2` on
/// `Q_{1/2}`; in every case records that `U_k` is nonincreasing.
pub fn check_first_lemma_iteration(
    u: &GridField,
    chain: &ConstantChain,
    steps: usize,
) -> Result<CheckReport> {
    let d = u.spec().d;
    let mut uk = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let h = (-(k as f64)).exp2();
        let r = 0.5 * (1.0 + h);
        let c = 0.5 * (1.0 - h);
        uk.push(energy_integrals(u, &Cylinder::standard(d, r), c, 1.0)?.l2_plus);
    }
    let alpha = chain.alpha_iter;
    let log2_ratio_per_k = (0..=steps)
        .map(|k| {
            (k >= 2 && uk[k] > 0.0 && uk[k - 2] > 0.0)
                .then(|| (uk[k].log2() - alpha * uk[k - 2].log2()) / k as f64)
        })
        .collect();
    let mut samples: Vec<Sample> = (1..=steps)
        .map(|k| Sample::new("monotone", &[("k", k as f64)], uk[k], uk[k - 1]))
        .collect();
    let hypothesis = below_delta(uk[0], chain);
    let mut tol = Tolerance::zero();
    if hypothesis {
        let (_, max_half) = u.range_on(&Cylinder::standard(d, 0.5))?;
        samples.push(Sample::new("conclusion", &[], max_half, 0.5));
        tol = Tolerance::grid(u.spec(), DEFAULT_TOLERANCE_CONSTANT, 0.5);
    }
    let details = FirstLemmaDetails {
        delta: chain.delta,
        log2_delta: chain.log2_delta,
        u_k: uk,
        log2_ratio_per_k,
        log2_c_iter: chain.c_iter.log2(),
        hypothesis_met: hypothesis,
    };
    let mut rep = CheckReport::from_samples("first_lemma", samples, tol).with_details(details);
    if !hypothesis {
        let monotone = rep.samples.iter().all(|s| s.margin >= 0.0);
        rep = rep
            .with_verdict(if monotone { Verdict::Skipped } else { Verdict::Fail })
            .with_note("U_0 > delta: conclusion not tested, monotonicity of U_k recorded");
    }
    Ok(rep)
}

/// Outcome of the lowering-the-maximum iteration.
#[derive(Clone, Debug, Serialize)]
pub struct LoweringMax {
    /// First `k` with `int_{Q_1} (v_k)_+^2 <= delta`.
    pub k_found: Option<u64>,
    /// Certified `1 - 2^{-(k+1)}` on `Q_{1/2}`.
    pub bound: Option<f64>,
    pub report: CheckReport,
}

/// Iterations actually carried out; `v_k` is represented exactly below it.
pub const LOWERING_MAX_STEP_CAP: u64 = 1000;

/// Iterates `v_k = 2^k (v - (1 - 2^-k))` until the first lemma applies.
pub fn run_lowering_max(v: &GridField, chain: &ConstantChain) -> Result<LoweringMax> {
    let spec = v.spec();
    let d = spec.d;
    let q32 = Cylinder::standard(d, 1.5);
    let (_, vmax) = v.range_on(&q32)?;
    if vmax > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!(
            "v <= 1 on Q_3/2 fails (max {vmax})"
        )));
    }
    let qbar = Cylinder::q_bar_1(d);
    let low = measure_level_set(v, &qbar, LevelSet::Below(0.0))?;
    let total = grid_measure(spec, &qbar)?;
    if low < 0.5 * total {
        return Err(Error::Precondition(format!(
            "|{{v <= 0}} in Qbar_1| = {low} is below half of {total}"
        )));
    }
    let q1 = Cylinder::standard(d, 1.0);
    let cap = match chain.k0_max {
        IterationCap::Exact { value } => value.min(LOWERING_MAX_STEP_CAP),
        IterationCap::Log2 { .. } => LOWERING_MAX_STEP_CAP,
    };
    let mut found = None;
    let mut energies = Vec::new();
    for k in 0..=cap {
        let scale = (k as f64).exp2();
        let vk = v.map(|x| scale * (x - 1.0) + 1.0)?;
        let e = energy_integrals(&vk, &q1, 0.0, 1.0)?.l2_plus;
        energies.push(e);
        if below_delta(e, chain) {
            found = Some(k);
            break;
        }
    }
    let (_, max_half) = v.range_on(&Cylinder::standard(d, 0.5))?;
    let Some(k) = found else {
        let verdict = if chain.k0_max.admits(cap + 1) {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        };
        let rep = CheckReport::from_samples("lowering_max", vec![], Tolerance::zero())
            .with_verdict(verdict)
            .with_note(format!("no k <= {cap} with int (v_k)_+^2 <= delta"))
            .with_details(energies);
        return Ok(LoweringMax {
            k_found: None,
            bound: None,
            report: rep,
        });
    };
    let bound = 1.0 - (-(k as f64 + 1.0)).exp2();
    let tol = Tolerance::grid(spec, DEFAULT_TOLERANCE_CONSTANT, 1.0 - bound);
    let rep = CheckReport::from_samples(
        "lowering_max",
        vec![Sample::new("bound", &[("k", k as f64)], max_half, bound)],
        tol,
    )
    .with_details(energies);
    Ok(LoweringMax {
        k_found: Some(k),
        bound: Some(bound),
        report: rep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{full_chain, ChainOptions, DgParams};
    use crate::fields::{build_field, FieldKind, GridSpec};

    fn chain() -> ConstantChain {
        full_chain(1, &DgParams::new(0.5, 20.0, 0.0, 1.0), &ChainOptions::default()).unwrap()
    }

    fn spec() -> GridSpec {
        GridSpec::q2(1, 128, 64).unwrap()
    }

    #[test]
    fn zero_field_satisfies_the_lemma() {
        let u = build_field(&spec(), &FieldKind::Constant { value: 0.0 }).unwrap();
        let rep = check_first_lemma_iteration(&u, &chain(), 20).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.samples.iter().any(|s| s.label == "conclusion"));
    }

    #[test]
    fn large_constant_is_skipped() {
        let u = build_field(&spec(), &FieldKind::Constant { value: 0.6 }).unwrap();
        let rep = check_first_lemma_iteration(&u, &chain(), 20).unwrap();
        assert_eq!(rep.verdict, Verdict::Skipped);
        assert!((rep.samples[0].rhs - 0.36 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn lowering_max_on_constants() {
        let c = chain();
        let zero = build_field(&spec(), &FieldKind::Constant { value: 0.0 }).unwrap();
        let out = run_lowering_max(&zero, &c).unwrap();
        assert_eq!(out.k_found, Some(0));
        assert_eq!(out.bound, Some(0.5));
        assert_eq!(out.report.verdict, Verdict::Pass);
        let one = build_field(&spec(), &FieldKind::Constant { value: 1.0 }).unwrap();
        assert!(matches!(run_lowering_max(&one, &c), Err(Error::Precondition(_))));
    }

    #[test]
    fn lowering_max_finds_gap_below_one() {
        // v <= 0 on the early half, 0.9 afterwards
        let v = GridField::from_fn(spec(), |t, _| if t <= -1.5 { -0.5 } else { 0.9 }).unwrap();
        let out = run_lowering_max(&v, &chain()).unwrap();
        // 2^k (0.9 - 1) + 1 <= 0 first at k = 4
        assert_eq!(out.k_found, Some(4));
        assert_eq!(out.report.verdict, Verdict::Pass);
    }
}
