//! Explicit constants of the quantitative De Giorgi chain.
//!
//! Every constant is computed from the dimension and the De Giorgi class
//! parameters `(gamma1, gamma2, gamma3, p)` (or from the PDE data via
//! [`dg_constants_from_pde`]). The final quantities are astronomically
//! small, so the lowering-the-maximum cap and everything downstream of it
//! is carried symbolically in base-2 logarithms.

use std::cmp::Ordering;
use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log2(ln 2)`.
const LOG2_LN2: f64 = -0.528_766_372_944_897_7;

/// Largest count stored exactly in an [`IterationCap`].
const EXACT_CAP_LIMIT_LOG2: f64 = 52.0;

/// Parameters of the parabolic equation with rough coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub q: f64,
    pub g_norm: f64,
    pub d: usize,
}

impl PdeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= self.big_lambda && self.big_lambda.is_finite()) {
            return Err(Error::param(format!(
                "need 0 < lambda <= Lambda, got lambda={} Lambda={}",
                self.lambda, self.big_lambda
            )));
        }
        if self.d == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        let q_min = f64::max(2.0, (self.d as f64 + 2.0) / 2.0);
        if !(self.q > q_min) {
            return Err(Error::param(format!(
                "source exponent q={} must exceed {q_min}",
                self.q
            )));
        }
        if !(self.g_norm >= 0.0 && self.g_norm.is_finite()) {
            return Err(Error::param("source norm must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// The quadruple `(gamma1, gamma2, gamma3, p)` of a parabolic De Giorgi class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub p: f64,
}

impl DgParams {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64, p: f64) -> Self {
        Self {
            gamma1,
            gamma2,
            gamma3,
            p,
        }
    }

    /// Checks the class invariants in dimension `d`, including the strict
    /// upper bound `p < (d+2)/d` that the iteration needs.
    pub fn validate(&self, d: usize) -> Result<()> {
        if d == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0 && self.gamma1.is_finite() && self.gamma2.is_finite()) {
            return Err(Error::param("gamma1 and gamma2 must be positive and finite"));
        }
        if !(self.gamma3 >= 0.0 && self.gamma3.is_finite()) {
            return Err(Error::param("gamma3 must be nonnegative and finite"));
        }
        let p_max = (d as f64 + 2.0) / d as f64;
        if !(self.p >= 1.0 && self.p < p_max) {
            return Err(Error::param(format!(
                "p={} must satisfy 1 <= p < (d+2)/d = {p_max}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Lebesgue measure of a ball of radius `r` in `R^d`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 * r };
    let mut k = if d % 2 == 0 { 0 } else { 1 };
    while k < d {
        k += 2;
        v *= 2.0 * PI * r * r / k as f64;
    }
    v
}

/// Measure of the standard cylinder `Q_r = (-r^2, 0) x B_r`.
pub fn cylinder_volume(d: usize, r: f64) -> f64 {
    r * r * ball_volume(d, r)
}

/// Default Sobolev embedding constant per dimension.
pub fn default_sobolev_constant(d: usize) -> f64 {
    if d == 1 {
        2.0
    } else {
        10.0
    }
}

/// Sobolev exponent `rho`; `+inf` in dimension one, `q2` in dimension two.
pub fn sobolev_exponent(d: usize, q2: Option<f64>) -> Result<f64> {
    match d {
        0 => Err(Error::param("dimension must be at least 1")),
        1 => Ok(f64::INFINITY),
        2 => match q2 {
            Some(q) if q > 4.0 && q.is_finite() => Ok(q),
            Some(q) => Err(Error::param(format!("d=2 needs q2 in (4, inf), got {q}"))),
            None => Err(Error::param("d=2 needs an explicit exponent q2 in (4, inf)")),
        },
        _ => Ok(2.0 * d as f64 / (d as f64 - 2.0)),
    }
}

/// Exponent `(1/p)(2 - 2/rho)` of the two-step first-lemma recurrence.
pub fn iteration_exponent(p: f64, rho: f64) -> Result<f64> {
    if !(p >= 1.0) || !(rho > 2.0) {
        return Err(Error::param(format!("need p >= 1 and rho > 2, got p={p}, rho={rho}")));
    }
    let alpha = (2.0 - 2.0 / rho) / p;
    // the endpoint p = (d+2)/d lands on 1 up to rounding
    if alpha <= 1.0 + 1e-12 {
        return Err(Error::NonContractive { alpha });
    }
    Ok(alpha)
}

/// De Giorgi class parameters satisfied by sub/supersolutions of the PDE.
pub fn dg_constants_from_pde(params: &PdeParams) -> Result<DgParams> {
    params.validate()?;
    Ok(DgParams {
        gamma1: params.lambda / 2.0,
        gamma2: 5.0 * params.big_lambda * params.big_lambda / params.lambda,
        gamma3: params.g_norm,
        p: params.q / (params.q - 1.0),
    })
}

/// Universal bound on `int int_{B_{5/4}} |grad (u-k)_+|^2` over any time
/// window inside `(-2, 0)` for `u <= 1` on `Q_{3/2}`.
pub fn gradient_bound(d: usize, k: f64, dg: &DgParams) -> Result<f64> {
    if d == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    if !(k <= 1.0) {
        return Err(Error::param(format!("truncation level k={k} must be <= 1")));
    }
    if !(dg.gamma1 > 0.0) || dg.gamma2 < 0.0 || dg.gamma3 < 0.0 || !(dg.p >= 1.0) {
        return Err(Error::param("invalid De Giorgi parameters"));
    }
    let ball = ball_volume(d, 1.5);
    let h = 1.0 - k;
    let g1 = dg.gamma1;
    Ok(h * h / g1 * ball
        + 32.0 * dg.gamma2 / g1 * ball * h * h
        + 2f64.powf(1.0 / dg.p) * dg.gamma3 / g1 * ball.powf(1.0 / dg.p) * h)
}

/// Constants of the close-times inequality and of the parabolic
/// intermediate value inequality at levels `k < l <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvlConstants {
    pub k: f64,
    pub l: f64,
    /// Gradient energy bound at level `k`.
    pub c_bar: f64,
    /// Coefficient of `|{k<u<l}|^{1/2}` in the close-times inequality.
    pub close_measure: f64,
    /// Coefficient of `(t2 - t1)^{2+1/p}` in the close-times inequality.
    pub close_time: f64,
    /// Constant of `(l-k)^2 |{u<=k}| |{u>=l}| <= C |{k<u<l}|^{1/(4p+2)}`.
    pub theorem: f64,
}

/// Tracks the constants through the close-times lemma and the pigeonhole
/// argument.
///
/// Close times, with `B = |B_{5/4}|`, `h = 1-k`:
/// `close_measure = 2 h^2 B ((2B)^{1/2} + (5/4) c_bar^{1/2} / (l-k))`,
/// `close_time = B (2 gamma2 h^2 B 2^{1-1/p} + gamma3 h B^{1/p} / 4)`.
/// Pigeonhole, with `m = |Q_2|^{p/(4p+2)}`:
/// `theorem = 4 (2 + m)^2 (close_measure + (l-k)^2 |B_1|^{3/2}) + 16 close_time`.
pub fn ivl_constants(d: usize, k: f64, l: f64, dg: &DgParams) -> Result<IvlConstants> {
    if !(k < l && l <= 1.0) {
        return Err(Error::param(format!("need k < l <= 1, got k={k}, l={l}")));
    }
    let c_bar = gradient_bound(d, k, dg)?;
    let b54 = ball_volume(d, 1.25);
    let b1 = ball_volume(d, 1.0);
    let h = 1.0 - k;
    let w = l - k;
    let p = dg.p;
    let close_measure = 2.0 * h * h * b54 * ((2.0 * b54).sqrt() + 1.25 * c_bar.sqrt() / w);
    let close_time = b54
        * (2.0 * dg.gamma2 * h * h * b54 * 2f64.powf(1.0 - 1.0 / p)
            + dg.gamma3 * h * b54.powf(1.0 / p) / 4.0);
    let m = cylinder_volume(d, 2.0).powf(p / (4.0 * p + 2.0));
    let theorem =
        4.0 * (2.0 + m).powi(2) * (close_measure + w * w * b1.powf(1.5)) + 16.0 * close_time;
    Ok(IvlConstants {
        k,
        l,
        c_bar,
        close_measure,
        close_time,
        theorem,
    })
}

/// The lowering-the-maximum iteration cap `k0_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IterationCap {
    Exact { value: u64 },
    /// Beyond 2^52 only the logarithm is meaningful; the ceiling and the
    /// `+1` are below resolution.
    Log2 { log2: f64 },
}

impl IterationCap {
    /// Builds `ceil(2^log2_count) + 1`.
    pub fn from_log2_count(log2_count: f64) -> Self {
        if log2_count < EXACT_CAP_LIMIT_LOG2 {
            IterationCap::Exact {
                value: log2_count.exp2().ceil() as u64 + 1,
            }
        } else {
            IterationCap::Log2 { log2: log2_count }
        }
    }

    pub fn log2(&self) -> f64 {
        match *self {
            IterationCap::Exact { value } => (value as f64).log2(),
            IterationCap::Log2 { log2 } => log2,
        }
    }

    pub fn exact(&self) -> Option<u64> {
        match *self {
            IterationCap::Exact { value } => Some(value),
            IterationCap::Log2 { .. } => None,
        }
    }

    /// The cap as a float; `+inf` once it leaves the f64 range.
    pub fn as_f64(&self) -> f64 {
        match *self {
            IterationCap::Exact { value } => value as f64,
            IterationCap::Log2 { log2 } => log2.exp2(),
        }
    }

    /// Whether `k <= k0_max`.
    pub fn admits(&self, k: u64) -> bool {
        match *self {
            IterationCap::Exact { value } => k <= value,
            IterationCap::Log2 { .. } => true,
        }
    }
}

impl PartialOrd for IterationCap {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.exact(), other.exact()) {
            (Some(a), Some(b)) => a.partial_cmp(&b),
            _ => self.log2().partial_cmp(&other.log2()),
        }
    }
}

/// A base-2 exponent of the form `-(k0_max + offset)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapExponent {
    pub cap: IterationCap,
    pub offset: u64,
}

impl CapExponent {
    /// `-(k0_max + offset)`; loses the offset above 2^53 and is `-inf`
    /// once the cap leaves the f64 range.
    pub fn value(&self) -> f64 {
        match self.cap {
            IterationCap::Exact { value } => -((value + self.offset) as f64),
            IterationCap::Log2 { log2 } => -(log2.exp2() + self.offset as f64),
        }
    }

    /// `log2(k0_max + offset)`; always finite.
    pub fn log2_neg(&self) -> f64 {
        match self.cap {
            IterationCap::Exact { value } => ((value + self.offset) as f64).log2(),
            IterationCap::Log2 { log2 } => log2,
        }
    }

    /// Exact `self - other` for exponents sharing the same cap.
    pub fn difference(&self, other: &CapExponent) -> Option<i64> {
        (self.cap == other.cap).then(|| other.offset as i64 - self.offset as i64)
    }
}

/// A positive real below one stored by its logarithms: `log2` may be `-inf`
/// when the exponent itself overflows, `log2_neg_log2 = log2(-log2 x)` is
/// always finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tiny {
    #[serde(with = "ext_real")]
    pub log2: f64,
    pub log2_neg_log2: f64,
}

impl Tiny {
    pub fn from_log2(log2: f64) -> Self {
        Self {
            log2,
            log2_neg_log2: (-log2).log2(),
        }
    }

    /// The value as a float (zero on underflow).
    pub fn value(&self) -> f64 {
        self.log2.exp2()
    }

    /// Whether this number is at most `x` (any positive float).
    pub fn le_f64(&self, x: f64) -> bool {
        if x <= 0.0 {
            return false;
        }
        if self.log2.is_finite() {
            self.log2 <= x.log2()
        } else {
            true
        }
    }
}

impl PartialOrd for Tiny {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.log2.is_finite() && other.log2.is_finite() {
            self.log2.partial_cmp(&other.log2)
        } else {
            other.log2_neg_log2.partial_cmp(&self.log2_neg_log2)
        }
    }
}

/// Hölder exponent lower bound `-log2(1 - 2^{-e})` for `e = k0_max + 3`.
pub fn holder_exponent_for(gap: &CapExponent) -> Tiny {
    if let Some(v) = gap.cap.exact() {
        let e = v + gap.offset;
        if e <= 1000 {
            let x = (-(e as f64)).exp2();
            let alpha = -(-x).ln_1p() / LN_2;
            return Tiny::from_log2(alpha.log2());
        }
    }
    let e = -gap.value();
    if e.is_finite() {
        // -ln(1-x) = x (1 + x/2 + ...), and x < 2^-1000 here
        Tiny::from_log2(-e - LOG2_LN2)
    } else {
        Tiny {
            log2: f64::NEG_INFINITY,
            log2_neg_log2: gap.log2_neg(),
        }
    }
}

/// Tunable inputs of [`full_chain`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    /// Sobolev embedding constant; `None` picks [`default_sobolev_constant`].
    pub sobolev_constant: Option<f64>,
    /// Sobolev exponent in dimension two.
    pub q2: Option<f64>,
    /// Multiplier applied to the tracked intermediate value constant
    /// (sensitivity studies; 1 for the tracked value).
    pub c_ivl_factor: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            sobolev_constant: None,
            q2: None,
            c_ivl_factor: 1.0,
        }
    }
}

/// One audited step of the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    pub formula: String,
    pub citation: String,
    #[serde(skip_serializing_if = "Option::is_none", default, with = "opt_ext_real")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log2_value: Option<f64>,
    /// `log2(-log2 x)` for quantities whose logarithm overflows.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log2_neg_log2_value: Option<f64>,
}

/// Names of the chain stages, in ledger order.
pub const CHAIN_STAGES: [&str; 14] = [
    "rho",
    "alpha_iter",
    "sobolev_constant",
    "C_iter",
    "delta",
    "C_bar",
    "close_measure",
    "close_time",
    "C_ivl",
    "k0_max",
    "log2_mu",
    "log2_beta",
    "theta",
    "alpha_holder",
];

/// Every derived constant of the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantChain {
    pub d: usize,
    pub dg: DgParams,
    #[serde(with = "ext_real")]
    pub rho: f64,
    pub alpha_iter: f64,
    pub sobolev_constant: f64,
    pub c_iter: f64,
    /// `delta` as a float; may underflow to zero, see `log2_delta`.
    pub delta: f64,
    pub log2_delta: f64,
    pub c_bar: f64,
    pub c_ivl: f64,
    pub k0_max: IterationCap,
    pub log2_mu: CapExponent,
    pub log2_beta: CapExponent,
    /// `log2(1 - theta)`.
    pub log2_theta_gap: CapExponent,
    pub alpha_holder: Tiny,
    pub ledger: Vec<LedgerEntry>,
}

impl ConstantChain {
    /// `theta = 1 - mu/2`; rounds to one for realistic chains.
    pub fn theta(&self) -> f64 {
        1.0 - self.log2_theta_gap.value().exp2()
    }

    /// Hölder exponent as a float (zero on underflow).
    pub fn alpha_holder_value(&self) -> f64 {
        self.alpha_holder.value()
    }

    /// Whether an observed exponent meets the certified lower bound.
    pub fn holder_bound_met(&self, alpha_hat: f64) -> bool {
        alpha_hat == f64::INFINITY || self.alpha_holder.le_f64(alpha_hat)
    }
}

/// Composes the whole chain from the dimension and class parameters.
pub fn full_chain(d: usize, dg: &DgParams, opts: &ChainOptions) -> Result<ConstantChain> {
    dg.validate(d)?;
    let rho = sobolev_exponent(d, opts.q2)?;
    let alpha = iteration_exponent(dg.p, rho)?;
    let cs = opts.sobolev_constant.unwrap_or_else(|| default_sobolev_constant(d));
    if !(cs > 0.0 && cs.is_finite()) {
        return Err(Error::param("Sobolev constant must be positive"));
    }
    if !(opts.c_ivl_factor > 0.0 && opts.c_ivl_factor.is_finite()) {
        return Err(Error::param("C_ivl factor must be positive"));
    }

    // U_k <= Cs^2 (1 + 1/g1) (1 + g2 + g3)^{2-2/rho} b^{k+1} U_{k-2}^alpha
    let inv_rho = if rho.is_infinite() { 0.0 } else { 1.0 / rho };
    let base = 4.0 * 16f64.powf(1.0 - 2.0 * inv_rho);
    let prefactor = cs * cs
        * (1.0 + 1.0 / dg.gamma1)
        * (1.0 + dg.gamma2 + dg.gamma3).powf(2.0 - 2.0 * inv_rho)
        * base;
    let c_iter = prefactor.max(1.0) * base;

    let ratio = alpha * alpha / ((alpha - 1.0) * (alpha - 1.0));
    let log2_delta = -1.0 - 2.0 * ratio * c_iter.log2();
    let delta = log2_delta.exp2();

    let ivl = ivl_constants(d, 0.0, 0.5, dg)?;
    let c_ivl = 4.0 * ivl.theorem * opts.c_ivl_factor;

    let exponent = 4.0 * dg.p + 2.0;
    let q1_bar = ball_volume(d, 1.0);
    let q2 = cylinder_volume(d, 2.0);
    let log2_count =
        exponent * (1.0 + c_ivl.log2() - log2_delta - q1_bar.log2()) + q2.log2();
    let k0_max = IterationCap::from_log2_count(log2_count);
    let log2_mu = CapExponent { cap: k0_max, offset: 2 };
    let log2_beta = CapExponent { cap: k0_max, offset: 1 };
    let log2_theta_gap = CapExponent { cap: k0_max, offset: 3 };
    let alpha_holder = holder_exponent_for(&log2_theta_gap);

    let plain = |name: &str, formula: &str, citation: &str, value: f64| LedgerEntry {
        name: name.into(),
        formula: formula.into(),
        citation: citation.into(),
        value: Some(value),
        log2_value: None,
        log2_neg_log2_value: None,
    };
    let symbolic = |name: &str, formula: &str, citation: &str, e: &CapExponent| LedgerEntry {
        name: name.into(),
        formula: formula.into(),
        citation: citation.into(),
        value: None,
        log2_value: e.value().is_finite().then(|| e.value()),
        log2_neg_log2_value: Some(e.log2_neg()),
    };

    let mut ledger = vec![
        plain(
            "rho",
            "2d/(d-2) if d>2; q2 if d=2; +inf if d=1",
            "Sobolev embedding exponent of the L2-Linfty lemma",
            rho,
        ),
        plain(
            "alpha_iter",
            "(1/p)(2 - 2/rho)",
            "exponent of the two-step recurrence U_k <= C^k U_{k-2}^alpha",
            alpha,
        ),
        plain(
            "sobolev_constant",
            "configured C(d) (defaults d=1: 2, d>=2: 10)",
            "Sobolev inequality on balls, constant taken as input",
            cs,
        ),
        plain(
            "C_iter",
            "max(K,1) b with b = 4*16^{1-2/rho}, K = C(d)^2 (1+1/g1) (1+g2+g3)^{2-2/rho} b",
            "Hölder + Sobolev + energy inequality with level gap 2^{-k-1} and radius gap 2^{-k-1}",
            c_iter,
        ),
        LedgerEntry {
            value: Some(delta),
            log2_value: Some(log2_delta),
            ..plain(
                "delta",
                "(1/2) (C_iter^2)^{-alpha^2/(alpha-1)^2}",
                "recurrence threshold for V_k = U_{2k} <= (C^2)^k V_{k-1}^alpha",
                0.0,
            )
        },
        plain(
            "C_bar",
            "(1-k)^2/g1 |B_3/2| + 32 g2/g1 |B_3/2| (1-k)^2 + 2^{1/p} g3/g1 |B_3/2|^{1/p} (1-k), k=0",
            "energy inequality with r=5/4, R=3/2 on a window of length <= 2",
            ivl.c_bar,
        ),
        plain(
            "close_measure",
            "2 (1-k)^2 |B_5/4| ((2|B_5/4|)^{1/2} + (5/4) C_bar^{1/2}/(l-k)), k=0, l=1/2",
            "close-times inequality: H1 intermediate value lemma on B_5/4 integrated over s, t",
            ivl.close_measure,
        ),
        plain(
            "close_time",
            "|B_5/4| (2 g2 (1-k)^2 |B_5/4| 2^{1-1/p} + g3 (1-k) |B_5/4|^{1/p}/4), k=0",
            "close-times inequality: time-error terms bounded by (t2-t1)^{2+1/p}",
            ivl.close_time,
        ),
        plain(
            "C_ivl",
            "4 [4 (2 + |Q_2|^{p/(4p+2)})^2 (close_measure + (l-k)^2 |B_1|^{3/2}) + 16 close_time]",
            "pigeonhole over n = floor(2/M^{p/(4p+2)})+1 slabs, divided by (l-k)^2 = 1/4",
            c_ivl,
        ),
        LedgerEntry {
            value: k0_max.exact().map(|v| v as f64),
            log2_value: Some(k0_max.log2()),
            ..plain(
                "k0_max",
                "ceil((2 C_ivl/(delta |Qbar_1|))^{4p+2} |Q_2|) + 1",
                "disjoint intermediate sets of v_k = 2^k(v-(1-2^-k)) exhaust |Q_2|",
                0.0,
            )
        },
        symbolic(
            "log2_mu",
            "-(k0_max + 1) - 1",
            "lowering the maximum: v <= 1 - 2^{-(k+1)} on Q_1/2",
            &log2_mu,
        ),
        symbolic(
            "log2_beta",
            "log2_mu + 1",
            "source rescaling keeping v_k, k <= k0_max, in the class",
            &log2_beta,
        ),
        symbolic(
            "theta",
            "1 - 2^{log2_mu - 1} (stored as log2(1-theta))",
            "oscillation decay factor theta = 1 - mu/2",
            &log2_theta_gap,
        ),
        LedgerEntry {
            name: "alpha_holder".into(),
            formula: "-log2(theta) = -log1p(-2^{log2_mu-1})/ln 2".into(),
            citation: "theta = 2^{-alpha} on dyadic cylinders".into(),
            value: None,
            log2_value: alpha_holder.log2.is_finite().then_some(alpha_holder.log2),
            log2_neg_log2_value: Some(alpha_holder.log2_neg_log2),
        },
    ];
    debug_assert_eq!(ledger.len(), CHAIN_STAGES.len());
    for (entry, name) in ledger.iter_mut().zip(CHAIN_STAGES) {
        debug_assert_eq!(entry.name, name);
    }

    Ok(ConstantChain {
        d,
        dg: *dg,
        rho,
        alpha_iter: alpha,
        sobolev_constant: cs,
        c_iter,
        delta,
        log2_delta,
        c_bar: ivl.c_bar,
        c_ivl,
        k0_max,
        log2_mu,
        log2_beta,
        log2_theta_gap,
        alpha_holder,
        ledger,
    })
}

/// Serializes extended reals, writing infinities as strings.
pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad extended real {t}"))),
        }
    }
}

mod opt_ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::ext_real::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::ext_real")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
