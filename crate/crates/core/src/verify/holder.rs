//! Empirical oscillation decay on dyadic cylinders.

use serde::Serialize;

use super::report::{CheckReport, Sample, Tolerance, Verdict};
use crate::constants::{ConstantChain, Tiny};
use crate::error::Result;
use crate::fields::{oscillation, Cylinder, GridField};

/// Noise floor factor: oscillations below `NOISE_FACTOR dx osc_0` are not
/// resolved.
pub const NOISE_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, Serialize)]
pub struct HolderEstimate {
    pub theta_hat: f64,
    /// `-log2 theta_hat`; `+inf` when every oscillation vanishes.
    #[serde(serialize_with = "crate::constants::ext_real::serialize")]
    pub alpha_hat: f64,
    pub report: CheckReport,
}

#[derive(Clone, Debug, Serialize)]
struct HolderDetails {
    center_t: f64,
    center_x: Vec<f64>,
    oscillations: Vec<f64>,
    noise: f64,
    alpha_holder: Tiny,
}

/// Oscillations over `Q_{2^-n}(t0, x0)`, `n = 0..=n_scales`; `theta_hat` is
/// the largest ratio `osc_{n+1}/osc_n` over scales whose `osc_n` exceeds the
/// noise floor.
pub fn estimate_holder(
    u: &GridField,
    t0: f64,
    x0: &[f64],
    n_scales: usize,
    chain: &ConstantChain,
) -> Result<HolderEstimate> {
    let spec = u.spec();
    let mut osc = Vec::new();
    for n in 0..=n_scales {
        let cyl = Cylinder::parabolic(t0, x0, (-(n as f64)).exp2());
        let sel = spec.select(&cyl)?;
        if sel.count() < 4 {
            break;
        }
        osc.push(oscillation(u, &cyl)?);
    }
    let noise = NOISE_FACTOR * spec.dx_max() * osc.first().copied().unwrap_or(0.0);
    let mut samples = Vec::new();
    for n in 0..osc.len().saturating_sub(1) {
        if osc[n] > noise {
            samples.push(Sample::new(
                "ratio",
                &[("n", n as f64), ("ratio", osc[n + 1] / osc[n])],
                osc[n + 1],
                osc[n],
            ));
        }
    }
    let all_zero = !osc.is_empty() && osc.iter().all(|&o| o == 0.0);
    let theta_hat = if all_zero {
        0.0
    } else {
        samples
            .iter()
            .map(|s| s.lhs / s.rhs)
            .fold(f64::NAN, f64::max)
    };
    let alpha_hat = if all_zero { f64::INFINITY } else { -theta_hat.log2() };
    let verdict = if all_zero {
        Verdict::Pass
    } else if samples.is_empty() {
        Verdict::Inconclusive
    } else if chain.holder_bound_met(alpha_hat) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let details = HolderDetails {
        center_t: t0,
        center_x: x0.to_vec(),
        oscillations: osc,
        noise,
        alpha_holder: chain.alpha_holder,
    };
    let report = CheckReport::from_samples("holder", samples, Tolerance::zero())
        .with_verdict(verdict)
        .with_details(details);
    Ok(HolderEstimate {
        theta_hat,
        alpha_hat,
        report,
    })
}
