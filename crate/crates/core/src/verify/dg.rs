//! Sampled check of the De Giorgi class energy inequality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Sample, Tolerance, DEFAULT_TOLERANCE_CONSTANT};
use crate::constants::DgParams;
use crate::error::{Error, Result};
use crate::fields::{slice_energy, GridField, Sign, SpatialGrid};
use crate::par::{map_indexed, Execution};

/// One instance `(k, s, t, r, R, x0)` of the class inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgSample {
    pub sign: Sign,
    pub k: f64,
    pub s: f64,
    pub t: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub x0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgCheckOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub signs: Vec<Sign>,
    pub tolerance_constant: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for DgCheckOptions {
    fn default() -> Self {
        Self {
            n_samples: 200,
            seed: 0,
            signs: vec![Sign::Plus],
            tolerance_constant: DEFAULT_TOLERANCE_CONSTANT,
            exec: Execution::default(),
        }
    }
}

/// Draws samples covering the quantifier ranges of the class definition:
/// `B_R(x0)` inside the domain ball, `1/4 <= r <= R - 2dx`, `s < t` in the
/// time window, `k` in the value range widened by one half.
pub fn draw_dg_samples(u: &GridField, opts: &DgCheckOptions) -> Vec<DgSample> {
    let spec = u.spec();
    let dom = &spec.domain;
    let d = spec.d;
    let dx = spec.dx_max();
    let (lo, hi) = u
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let r_min = 0.25;
    let x_max = (dom.radius - r_min - 2.0 * dx).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::with_capacity(opts.n_samples * opts.signs.len());
    for _ in 0..opts.n_samples {
        let x0: Vec<f64> = loop {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-x_max..=x_max)).collect();
            if v.iter().map(|c| c * c).sum::<f64>().sqrt() <= x_max {
                break v.iter().zip(&dom.center).map(|(a, c)| a + c).collect();
            }
        };
        let off = super::dist(&x0, &dom.center);
        let big_r = rng.random_range(r_min + 2.0 * dx..=(dom.radius - off).max(r_min + 2.0 * dx));
        let r = rng.random_range(r_min..=(big_r - 2.0 * dx).max(r_min));
        let a = rng.random_range(dom.t_lo..=dom.t_hi);
        let b = rng.random_range(dom.t_lo..=dom.t_hi);
        let k = rng.random_range(lo - 0.5..=hi + 0.5);
        for &sign in &opts.signs {
            out.push(DgSample {
                sign,
                k,
                s: a.min(b),
                t: a.max(b),
                r,
                big_r,
                x0: x0.clone(),
            });
        }
    }
    out
}

/// Evaluates `(lhs, rhs)` of the class inequality on the grid, or `None`
/// when the sample is degenerate at this resolution.
///
/// `s` and `t` snap to the nearest time-cell centers; time integrals use the
/// trapezoid rule between them.
pub fn evaluate_dg_sample(
    u: &GridField,
    grid: &SpatialGrid,
    dg: &DgParams,
    smp: &DgSample,
) -> Result<Option<(f64, f64)>> {
    let spec = u.spec();
    if !(smp.r > 0.0 && smp.r < smp.big_r && smp.s < smp.t) {
        return Err(Error::param("need 0 < r < R and s < t"));
    }
    if super::dist(&smp.x0, &spec.domain.center) + smp.big_r > spec.domain.radius * (1.0 + 1e-12) {
        return Err(Error::geometry("B_R(x0) must lie inside the domain ball"));
    }
    let snap = |t: f64| -> usize {
        let j = ((t - spec.domain.t_lo) / spec.dt() - 0.5).round();
        (j.max(0.0) as usize).min(spec.nt - 1)
    };
    let (js, jt) = (snap(smp.s), snap(smp.t));
    if js >= jt {
        return Ok(None);
    }
    let inner = grid.ball_cells(&smp.x0, smp.r);
    let outer = grid.ball_cells(&smp.x0, smp.big_r);
    if inner.is_empty() || outer.len() <= inner.len() {
        return Ok(None);
    }
    let dt = spec.dt();
    let p = dg.p;
    let mut grad = 0.0;
    let mut l2_out = 0.0;
    let mut lp_out = 0.0;
    for j in js..=jt {
        let w = if j == js || j == jt { 0.5 * dt } else { dt };
        let ei = slice_energy(grid, u.slice(j), &inner, smp.k, smp.sign, p);
        let eo = slice_energy(grid, u.slice(j), &outer, smp.k, smp.sign, p);
        grad += w * ei.grad;
        l2_out += w * eo.l2;
        lp_out += w * eo.lp;
    }
    let at_t = slice_energy(grid, u.slice(jt), &inner, smp.k, smp.sign, p).l2;
    let at_s = slice_energy(grid, u.slice(js), &outer, smp.k, smp.sign, p).l2;
    let gap = smp.big_r - smp.r;
    let lhs = at_t + dg.gamma1 * grad;
    let rhs = at_s + dg.gamma2 / (gap * gap) * l2_out + dg.gamma3 * lp_out.powf(1.0 / p);
    Ok(Some((lhs, rhs)))
}

fn sample_params(smp: &DgSample) -> Vec<(&'static str, f64)> {
    let mut v = vec![
        ("sign", if smp.sign == Sign::Plus { 1.0 } else { -1.0 }),
        ("k", smp.k),
        ("s", smp.s),
        ("t", smp.t),
        ("r", smp.r),
        ("R", smp.big_r),
        ("x0_1", smp.x0[0]),
    ];
    if smp.x0.len() > 1 {
        v.push(("x0_2", smp.x0[1]));
    }
    v
}

/// Evaluates the given samples; tolerance `c (dx + dt) max lhs`.
pub fn check_dg_samples(
    u: &GridField,
    dg: &DgParams,
    samples: &[DgSample],
    tolerance_constant: f64,
    exec: Execution,
) -> Result<CheckReport> {
    let grid = u.spec().spatial();
    let evaluated = map_indexed(exec, samples.len(), |i| {
        evaluate_dg_sample(u, &grid, dg, &samples[i])
    });
    let mut out = Vec::with_capacity(samples.len());
    let mut skipped = 0;
    for (smp, res) in samples.iter().zip(evaluated) {
        match res? {
            Some((lhs, rhs)) => out.push(Sample::new("energy", &sample_params(smp), lhs, rhs)),
            None => skipped += 1,
        }
    }
    let scale = out.iter().map(|s| s.lhs.abs()).fold(0.0, f64::max);
    let tol = Tolerance::grid(u.spec(), tolerance_constant, scale);
    let mut rep = CheckReport::from_samples("dg_membership", out, tol);
    rep.skipped_samples = skipped;
    Ok(rep.with_details(dg))
}

/// Draws `opts.n_samples` seeded samples and checks them.
pub fn check_dg_membership(u: &GridField, dg: &DgParams, opts: &DgCheckOptions) -> Result<CheckReport> {
    let samples = draw_dg_samples(u, opts);
    check_dg_samples(u, dg, &samples, opts.tolerance_constant, opts.exec)
}
