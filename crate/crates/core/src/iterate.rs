//! The nonlinear recurrence `V_k <= C^k V_{k-1}^alpha`.
//!
//! Values decay double-exponentially, so the dynamics run on `log2 V`.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSpec {
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    pub kmax: usize,
}

impl RecurrenceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("C must be positive and finite"));
        }
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::NonContractive { alpha: self.alpha });
        }
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return Err(Error::param("V0 must be nonnegative and finite"));
        }
        Ok(())
    }
}

/// `alpha^2 / (alpha - 1)^2`.
pub fn threshold_exponent(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::NonContractive { alpha });
    }
    Ok(alpha * alpha / ((alpha - 1.0) * (alpha - 1.0)))
}

/// `C^{-alpha^2/(alpha-1)^2}`.
pub fn recurrence_threshold(c: f64, alpha: f64) -> Result<f64> {
    let r = threshold_exponent(alpha)?;
    if !(c > 0.0) {
        return Err(Error::param("C must be positive"));
    }
    Ok(c.powf(-r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceVerdict {
    Converges,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecurrenceRow {
    pub k: usize,
    pub v: f64,
    pub log2_v: f64,
    pub envelope: f64,
    pub log2_envelope: f64,
    /// `S_k = sum_{i=1}^k i alpha^{k-i}`.
    pub s_k: f64,
    /// `alpha^2/(alpha-1)^2 alpha^{k-1}`.
    pub s_k_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub spec: RecurrenceSpec,
    pub threshold: f64,
    /// Threshold of `max(C, 1)`, the constant the envelope is built from;
    /// the envelope argument needs `C >= 1`.
    pub effective_threshold: f64,
    pub verdict: RecurrenceVerdict,
    pub rows: Vec<RecurrenceRow>,
    /// `V_k <= envelope_k` for every row (up to rounding of the logarithms).
    pub within_envelope: bool,
    /// Exact rational check of the `S_k` bound for `1 <= k <= kmax`.
    pub s_k_bound_holds: bool,
}

/// Runs the equality dynamics `V_k = C^k V_{k-1}^alpha` and the envelope
/// `(C^{alpha^2/(alpha-1)^2} V0)^{alpha^k}`.
pub fn simulate_recurrence(spec: &RecurrenceSpec) -> Result<RecurrenceReport> {
    spec.validate()?;
    let r = threshold_exponent(spec.alpha)?;
    let threshold = recurrence_threshold(spec.c, spec.alpha)?;
    let c_eff = spec.c.max(1.0);
    let effective_threshold = recurrence_threshold(c_eff, spec.alpha)?;
    let log2_c = spec.c.log2();
    let log2_base = r * c_eff.log2() + spec.v0.log2();

    let mut rows = Vec::with_capacity(spec.kmax + 1);
    let mut log2_v = spec.v0.log2();
    let mut lin_v = spec.v0;
    let base = c_eff.powf(r) * spec.v0;
    let mut alpha_k = 1.0;
    let mut s_k = 0.0;
    let mut within = true;
    let mut overflow = false;
    for k in 0..=spec.kmax {
        if k > 0 {
            log2_v = k as f64 * log2_c + spec.alpha * log2_v;
            lin_v = spec.c.powi(k as i32) * lin_v.powf(spec.alpha);
            alpha_k *= spec.alpha;
            s_k = spec.alpha * s_k + k as f64;
        }
        let log2_env = if log2_base == 0.0 { 0.0 } else { alpha_k * log2_base };
        // linear values while they stay normal, logarithms beyond
        let v = if lin_v.is_normal() { lin_v } else { log2_v.exp2() };
        let env_lin = base.powf(alpha_k);
        let envelope = if env_lin.is_normal() { env_lin } else { log2_env.exp2() };
        overflow |= v.is_infinite() || log2_v.is_nan();
        if log2_v.is_finite() && log2_env.is_finite() {
            let slack = 8.0 * f64::EPSILON * log2_v.abs().max(log2_env.abs());
            within &= log2_v <= log2_env + slack;
        } else if log2_v == f64::INFINITY || log2_v.is_nan() {
            within = false;
        }
        rows.push(RecurrenceRow {
            k,
            v,
            log2_v,
            envelope,
            log2_envelope: log2_env,
            s_k,
            s_k_bound: r * spec.alpha.powi(k as i32 - 1),
        });
    }
    let converges = spec.v0 < effective_threshold && !overflow;
    Ok(RecurrenceReport {
        spec: *spec,
        threshold,
        effective_threshold,
        verdict: if converges {
            RecurrenceVerdict::Converges
        } else {
            RecurrenceVerdict::Inconclusive
        },
        rows,
        within_envelope: within,
        s_k_bound_holds: s_k_bound_exact(spec.alpha, spec.kmax.max(1))?.is_none(),
    })
}

/// Checks `S_k <= alpha^{k+1}/(alpha-1)^2` for `1 <= k <= kmax` in exact
/// rational arithmetic on the binary value of `alpha`; returns the first
/// failing `k`.
pub fn s_k_bound_exact(alpha: f64, kmax: usize) -> Result<Option<usize>> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::NonContractive { alpha });
    }
    let a = BigRational::from_float(alpha).expect("finite alpha");
    let one = BigRational::from_integer(BigInt::from(1));
    let gap = &a - &one;
    let denom = &gap * &gap;
    let mut s = BigRational::from_integer(BigInt::from(0));
    let mut a_pow = a.clone();
    for k in 1..=kmax {
        s = &s * &a + BigRational::from_integer(BigInt::from(k));
        a_pow = &a_pow * &a;
        if s.clone() * &denom > a_pow {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// `sum_{i=0}^k i x^{i-1}` by direct summation.
pub fn geometric_derivative_direct(x: f64, k: u32) -> f64 {
    (1..=k).map(|i| i as f64 * x.powi(i as i32 - 1)).sum()
}

/// Closed form `(x^k (k x - (k+1)) + 1) / (1 - x)^2`.
pub fn geometric_derivative_closed(x: f64, k: u32) -> f64 {
    let kf = k as f64;
    (x.powi(k as i32) * (kf * x - (kf + 1.0)) + 1.0) / ((1.0 - x) * (1.0 - x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(recurrence_threshold(2.0, 2.0).unwrap(), 0.0625);
        assert_eq!(recurrence_threshold(1.0, 1.7).unwrap(), 1.0);
        assert!((recurrence_threshold(4.0, 2.0).unwrap() - 3.90625e-3).abs() < 1e-18);
        assert!(matches!(
            recurrence_threshold(2.0, 1.0),
            Err(Error::NonContractive { .. })
        ));
    }

    #[test]
    fn converging_run_stays_under_envelope() {
        let rep = simulate_recurrence(&RecurrenceSpec {
            c: 2.0,
            alpha: 2.0,
            v0: 0.05,
            kmax: 20,
        })
        .unwrap();
        assert_eq!(rep.verdict, RecurrenceVerdict::Converges);
        assert!(rep.within_envelope && rep.s_k_bound_holds);
        for w in rep.rows.windows(2) {
            assert!(w[1].log2_v < w[0].log2_v);
        }
        assert!(rep.rows[20].log2_v < -100.0 * 10f64.log2());
        for row in &rep.rows {
            let env = 0.8f64.log2() * 2f64.powi(row.k as i32);
            assert!((row.log2_envelope - env).abs() <= 1e-9 * env.abs().max(1.0));
        }
    }

    #[test]
    fn equality_case_is_inconclusive() {
        let rep = simulate_recurrence(&RecurrenceSpec {
            c: 2.0,
            alpha: 2.0,
            v0: 0.0625,
            kmax: 10,
        })
        .unwrap();
        assert_eq!(rep.verdict, RecurrenceVerdict::Inconclusive);
        assert!(rep.rows.iter().all(|r| r.envelope == 1.0));
    }

    #[test]
    fn closed_form_with_unit_constant() {
        let rep = simulate_recurrence(&RecurrenceSpec {
            c: 1.0,
            alpha: 2.0,
            v0: 0.5,
            kmax: 8,
        })
        .unwrap();
        assert_eq!(rep.verdict, RecurrenceVerdict::Converges);
        for row in &rep.rows {
            assert_eq!(row.log2_v, -(2f64.powi(row.k as i32)));
        }
    }

    #[test]
    fn overflow_saturates() {
        let rep = simulate_recurrence(&RecurrenceSpec {
            c: 8.0,
            alpha: 3.0,
            v0: 2.0,
            kmax: 1000,
        })
        .unwrap();
        assert_eq!(rep.verdict, RecurrenceVerdict::Inconclusive);
        assert!(rep.rows.last().unwrap().v.is_infinite());
    }

    #[test]
    fn s_k_bound_holds_exactly() {
        for alpha in [1.1, 1.5, 2.0, 3.0] {
            assert_eq!(s_k_bound_exact(alpha, 60).unwrap(), None, "alpha={alpha}");
        }
    }

    #[test]
    fn s_k_bound_is_tight_in_the_limit() {
        // S_k / alpha^{k+1} increases to 1/(alpha-1)^2
        let a = 2.0f64;
        let mut s = 0.0;
        for k in 1..=50 {
            s = a * s + k as f64;
        }
        let ratio = s / a.powi(51) * (a - 1.0).powi(2);
        assert!(ratio < 1.0 && ratio > 0.999);
    }

    #[test]
    fn geometric_identity() {
        for x in [0.1, 0.5, 0.9] {
            for k in 0..=40 {
                let d = geometric_derivative_direct(x, k);
                let c = geometric_derivative_closed(x, k);
                let rel = (d - c).abs() / d.abs().max(f64::MIN_POSITIVE);
                assert!(k == 0 && d == 0.0 && c.abs() < 1e-15 || rel < 1e-12, "x={x} k={k}");
            }
        }
    }
}
