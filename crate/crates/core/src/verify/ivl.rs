//! Intermediate value inequalities: spatial, close times, parabolic.

use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Sample, Tolerance, Verdict, DEFAULT_TOLERANCE_CONSTANT};
use crate::constants::{ball_volume, ivl_constants, DgParams};
use crate::error::{Error, Result};
use crate::fields::{measure_level_set, Cylinder, GridField, LevelSet, SpatialField};

fn check_levels(k: f64, l: f64) -> Result<()> {
    if !(k < l) {
        return Err(Error::param(format!("need k < l, got k={k}, l={l}")));
    }
    Ok(())
}

fn check_bounded_by_one(u: &GridField) -> Result<()> {
    let (_, max) = u.range_on(&Cylinder::standard(u.spec().d, 1.5))?;
    if max > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("u <= 1 on Q_3/2 fails (max {max})")));
    }
    Ok(())
}

/// `(l-k) |{u<=k}| |{u>=l}| <= R |B_R| |{k<u<l}|^{1/2} ||grad (u-k)_+||_2`
/// on the ball `B_R` centered at the grid center.
pub fn check_ivl_h1(slice: &SpatialField, k: f64, l: f64, big_r: f64) -> Result<CheckReport> {
    check_levels(k, l)?;
    let grid = &slice.grid;
    if !(big_r > 0.0 && big_r <= grid.radius * (1.0 + 1e-12)) {
        return Err(Error::geometry(format!("B_{big_r} does not fit the slice")));
    }
    let x0 = grid.center.clone();
    let low = slice.measure(&x0, big_r, LevelSet::Below(k));
    let high = slice.measure(&x0, big_r, LevelSet::Above(l));
    let mid = slice.measure(&x0, big_r, LevelSet::Between(k, l));
    let cells = grid.ball_cells(&x0, big_r);
    let grad: f64 = cells
        .iter()
        .map(|&i| grid.grad_sq_with(i, |c| (slice.values[c] - k).max(0.0)))
        .sum::<f64>()
        * grid.cell_volume();
    let lhs = (l - k) * low * high;
    let rhs = big_r * ball_volume(grid.d, big_r) * mid.sqrt() * grad.sqrt();
    let dx = grid.dx.iter().cloned().fold(0.0, f64::max);
    let tol = Tolerance::new(DEFAULT_TOLERANCE_CONSTANT, dx, 0.0, lhs);
    let sample = Sample::new(
        "h1",
        &[("k", k), ("l", l), ("R", big_r), ("low", low), ("high", high), ("mid", mid), ("grad_l2", grad)],
        lhs,
        rhs,
    );
    Ok(CheckReport::from_samples("ivl_h1", vec![sample], tol))
}

/// Close-times inequality over `(t1, tau) x B_1` (low) and `(tau, t2) x B_1`
/// (high), one sample per triple.
pub fn check_close_times(
    u: &GridField,
    dg: &DgParams,
    k: f64,
    l: f64,
    triples: &[(f64, f64, f64)],
) -> Result<CheckReport> {
    check_levels(k, l)?;
    if l > 1.0 {
        return Err(Error::param("need l <= 1"));
    }
    check_bounded_by_one(u)?;
    let d = u.spec().d;
    let cst = ivl_constants(d, k, l, dg)?;
    let zero = vec![0.0; d];
    let mut samples = Vec::with_capacity(triples.len());
    for &(t1, tau, t2) in triples {
        if !(-2.0 < t1 && t1 < tau && tau < t2 && t2 < 0.0) {
            return Err(Error::param(format!(
                "need -2 < t1 < tau < t2 < 0, got ({t1}, {tau}, {t2})"
            )));
        }
        let early = Cylinder::new(t1, tau, zero.clone(), 1.0)?;
        let late = Cylinder::new(tau, t2, zero.clone(), 1.0)?;
        let wide = Cylinder::new(t1, tau, zero.clone(), 2.0)?;
        let low = measure_level_set(u, &early, LevelSet::Below(k))?;
        let high = measure_level_set(u, &late, LevelSet::Above(l))?;
        let mid = measure_level_set(u, &wide, LevelSet::Between(k, l))?;
        let lhs = (l - k) * (l - k) * high * low;
        let rhs = cst.close_measure * mid.sqrt()
            + cst.close_time * (t2 - t1).powf(2.0 + 1.0 / dg.p);
        samples.push(Sample::new(
            "close_times",
            &[("t1", t1), ("tau", tau), ("t2", t2), ("low", low), ("high", high), ("mid", mid)],
            lhs,
            rhs,
        ));
    }
    let scale = samples.iter().map(|s| s.lhs).fold(0.0, f64::max);
    let tol = Tolerance::grid(u.spec(), DEFAULT_TOLERANCE_CONSTANT, scale);
    Ok(CheckReport::from_samples("close_times", samples, tol).with_details(cst))
}

/// Admissible triples `t1 < tau < t2` drawn from `n` equally spaced points
/// of `(-2, 0)`.
pub fn time_lattice(n: usize) -> Vec<(f64, f64, f64)> {
    let pts: Vec<f64> = (0..n).map(|i| -2.0 + 2.0 * (i as f64 + 0.5) / n as f64).collect();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push((pts[a], pts[b], pts[c]));
            }
        }
    }
    out
}

/// Where the low set `{u<=k}` and the high set `{u>=l}` are measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvlOrientation {
    pub low_cylinder: Cylinder,
    pub high_cylinder: Cylinder,
}

impl IvlOrientation {
    /// Low set early (`Qbar_1`), high set late (`Q_1`).
    pub fn canonical(d: usize) -> Self {
        Self {
            low_cylinder: Cylinder::q_bar_1(d),
            high_cylinder: Cylinder::standard(d, 1.0),
        }
    }

    /// Low set late (`Q_1`), high set early (`Qbar_1`).
    pub fn as_printed(d: usize) -> Self {
        Self {
            low_cylinder: Cylinder::standard(d, 1.0),
            high_cylinder: Cylinder::q_bar_1(d),
        }
    }

    pub fn is_canonical(&self) -> bool {
        *self == Self::canonical(self.low_cylinder.d())
    }
}

/// Time slabs of the pigeonhole argument on `t_j = -2 + j/n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PigeonholeTrace {
    pub n: u64,
    /// Slab `(t_{i-1}, t_i)` in `(-2, -1)` holding at least `1/n` of the low set.
    pub i: Option<u64>,
    /// Slab `(t_j, t_{j+1})` in `(-1, 0)` holding at least `1/n` of the high set.
    pub j: Option<u64>,
    /// Adjacent slabs `(t_{p-1}, t_p)`, `(t_p, t_{p+1})` used by the argument.
    pub p: Option<u64>,
    /// `|u<l, (t_{p-1}, t_p) x B_1|`.
    pub below_l_before: Option<f64>,
    /// `|u>=l, (t_p, t_{p+1}) x B_1|`.
    pub above_l_after: Option<f64>,
    pub low_mass: f64,
    pub high_mass: f64,
}

/// Largest `n` for which the trace is computed.
pub const PIGEONHOLE_MAX_SLABS: u64 = 1 << 16;

fn pigeonhole(u: &GridField, k: f64, l: f64, mid: f64, p_exp: f64) -> Result<Option<PigeonholeTrace>> {
    if mid <= 0.0 {
        return Ok(None);
    }
    let nf = (2.0 / mid.powf(p_exp / (4.0 * p_exp + 2.0))).floor() + 1.0;
    if nf > PIGEONHOLE_MAX_SLABS as f64 {
        return Ok(None);
    }
    let n = nf as u64;
    let d = u.spec().d;
    let t = |j: u64| -2.0 + j as f64 / n as f64;
    let slab = |a: u64| Cylinder::new(t(a), t(a + 1), vec![0.0; d], 1.0);
    let low_mass = measure_level_set(u, &Cylinder::q_bar_1(d), LevelSet::Below(k))?;
    let high_mass = measure_level_set(u, &Cylinder::standard(d, 1.0), LevelSet::Above(l))?;
    let nn = n as f64;
    let mut i = None;
    for a in 1..=n {
        if measure_level_set(u, &slab(a - 1)?, LevelSet::Below(k))? >= low_mass / nn {
            i = Some(a);
            break;
        }
    }
    let mut j = None;
    for a in n..2 * n {
        if measure_level_set(u, &slab(a)?, LevelSet::Above(l))? >= high_mass / nn {
            j = Some(a);
            break;
        }
    }
    // |u<l| = |slab| - |u>=l| on each slab
    let below_l = |a: u64| -> Result<f64> {
        let s = slab(a)?;
        Ok(crate::fields::grid_measure(u.spec(), &s)? - measure_level_set(u, &s, LevelSet::Above(l))?)
    };
    let mut p = None;
    if let (Some(i), Some(j)) = (i, j) {
        for m in i..2 * n {
            if below_l(m)? < low_mass / (2.0 * nn) {
                p = Some(m);
                break;
            }
        }
        if p.is_none() {
            p = Some(j);
        }
    }
    let (before, after) = match p {
        Some(p) if p >= 1 && p < 2 * n => (
            Some(below_l(p - 1)?),
            Some(measure_level_set(u, &slab(p)?, LevelSet::Above(l))?),
        ),
        _ => (None, None),
    };
    Ok(Some(PigeonholeTrace {
        n,
        i,
        j,
        p,
        below_l_before: before,
        above_l_after: after,
        low_mass,
        high_mass,
    }))
}

#[derive(Clone, Debug, Serialize)]
struct IvlDetails {
    k: f64,
    l: f64,
    constant: f64,
    exponent: f64,
    orientation: IvlOrientation,
    definitive_violation: bool,
    trace: Option<PigeonholeTrace>,
}

/// `(l-k)^2 |{u<=k} ∩ low| |{u>=l} ∩ high| <= C |{k<u<l} ∩ Q_2|^{1/(4p+2)}`.
///
/// A zero intermediate measure with both low and high sets charged is a
/// violation regardless of the tolerance.
pub fn check_ivl_parabolic(
    u: &GridField,
    dg: &DgParams,
    k: f64,
    l: f64,
    orientation: &IvlOrientation,
    trace: bool,
) -> Result<CheckReport> {
    check_levels(k, l)?;
    if l > 1.0 {
        return Err(Error::param("need l <= 1"));
    }
    check_bounded_by_one(u)?;
    let d = u.spec().d;
    let cst = ivl_constants(d, k, l, dg)?;
    let low = measure_level_set(u, &orientation.low_cylinder, LevelSet::Below(k))?;
    let high = measure_level_set(u, &orientation.high_cylinder, LevelSet::Above(l))?;
    let mid = measure_level_set(u, &Cylinder::standard(d, 2.0), LevelSet::Between(k, l))?;
    let exponent = 1.0 / (4.0 * dg.p + 2.0);
    let lhs = (l - k) * (l - k) * low * high;
    let rhs = cst.theorem * mid.powf(exponent);
    let definitive = mid == 0.0 && lhs > 0.0;
    let tol = Tolerance::grid(u.spec(), DEFAULT_TOLERANCE_CONSTANT, lhs);
    let sample = Sample::new(
        "ivl",
        &[("k", k), ("l", l), ("low", low), ("high", high), ("mid", mid)],
        lhs,
        rhs,
    );
    let trace = if trace { pigeonhole(u, k, l, mid, dg.p)? } else { None };
    let mut rep = CheckReport::from_samples("ivl_parabolic", vec![sample], tol);
    if definitive {
        rep = rep
            .with_verdict(Verdict::Fail)
            .with_note("intermediate set is empty while both level sets are charged");
    }
    Ok(rep.with_details(IvlDetails {
        k,
        l,
        constant: cst.theorem,
        exponent,
        orientation: orientation.clone(),
        definitive_violation: definitive,
        trace,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{build_field, FieldKind, GridSpec};

    fn dg() -> DgParams {
        DgParams::new(0.5, 20.0, 0.0, 1.0)
    }

    #[test]
    fn h1_linear_function() {
        let f = SpatialField::from_fn(&[256], &[0.0], 1.0, |x| x[0]);
        let rep = check_ivl_h1(&f, -0.5, 0.5, 1.0).unwrap();
        let s = &rep.samples[0];
        assert!((s.lhs - 0.25).abs() < 1e-12);
        assert!((s.rhs - 2.0 * 1.5f64.sqrt()).abs() < 0.02, "rhs {}", s.rhs);
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn h1_constant_and_step() {
        let f = SpatialField::from_fn(&[64], &[0.0], 1.0, |_| 0.3);
        let rep = check_ivl_h1(&f, -0.5, 0.5, 1.0).unwrap();
        assert_eq!(rep.samples[0].lhs, 0.0);
        assert_eq!(rep.verdict, Verdict::Pass);
        for n in [33, 65, 129] {
            let dx = 2.0 / n as f64;
            let f = SpatialField::from_fn(&[n], &[0.0], 1.0, |x| (x[0] / dx).round().clamp(-1.0, 1.0));
            let rep = check_ivl_h1(&f, -0.5, 0.5, 1.0).unwrap();
            assert_eq!(rep.verdict, Verdict::Pass, "n={n}");
        }
        assert!(check_ivl_h1(&f, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn jump_field_orientations() {
        for n in [128, 256, 512] {
            let spec = GridSpec::q2(1, 4 * n, n).unwrap();
            let f = build_field(&spec, &FieldKind::JumpCounterexample).unwrap();
            let canon = check_ivl_parabolic(&f, &dg(), 0.0, 1.0, &IvlOrientation::canonical(1), true).unwrap();
            assert_eq!(canon.samples[0].lhs, 0.0);
            assert_eq!(canon.verdict, Verdict::Pass);
            let swapped = check_ivl_parabolic(&f, &dg(), 0.0, 1.0, &IvlOrientation::as_printed(1), false).unwrap();
            assert_eq!(swapped.samples[0].lhs, 4.0);
            assert_eq!(swapped.samples[0].rhs, 0.0);
            assert_eq!(swapped.verdict, Verdict::Fail);
        }
    }

    #[test]
    fn half_constant_passes_both_ways() {
        let spec = GridSpec::q2(1, 64, 32).unwrap();
        let f = build_field(&spec, &FieldKind::Constant { value: 0.5 }).unwrap();
        for o in [IvlOrientation::canonical(1), IvlOrientation::as_printed(1)] {
            let rep = check_ivl_parabolic(&f, &dg(), 0.0, 1.0, &o, true).unwrap();
            assert_eq!(rep.samples[0].lhs, 0.0);
            assert_eq!(rep.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn close_times_on_jump_lattice() {
        let spec = GridSpec::q2(1, 256, 64).unwrap();
        let f = build_field(&spec, &FieldKind::JumpCounterexample).unwrap();
        let lattice = time_lattice(10);
        assert_eq!(lattice.len(), 120);
        let rep = check_close_times(&f, &dg(), 0.0, 1.0, &lattice).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.samples.iter().all(|s| s.lhs == 0.0));
        assert!(check_close_times(&f, &dg(), 0.0, 1.0, &[(-1.0, -1.5, -0.5)]).is_err());
    }

    #[test]
    fn pigeonhole_trace_on_a_ramp() {
        let spec = GridSpec::q2(1, 256, 64).unwrap();
        let f = GridField::from_fn(spec, |t, _| (-(t + 1.0)).clamp(-1.0, 1.0) * 0.5 + 0.25).unwrap();
        let rep = check_ivl_parabolic(&f, &dg(), 0.0, 0.5, &IvlOrientation::canonical(1), true).unwrap();
        let tr = &rep.details["trace"];
        assert!(tr["n"].as_u64().unwrap() >= 2);
        assert_eq!(rep.verdict, Verdict::Pass);
    }
}
