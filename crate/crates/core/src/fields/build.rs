//! Built-in fields and coefficient generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{GridField, GridSpec};
use crate::error::{Error, Result};

/// Analytic fields on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    /// `1` for `t <= -1`, `0` afterwards: a subsolution with a downward
    /// jump in time.
    JumpCounterexample,
    /// The negated jump, `-1` for `t <= -1` and `0` afterwards.
    NegatedJump,
    Constant { value: f64 },
    /// `u(t, x) = x_1`.
    LinearX,
    /// `exp(-|x|^2) exp(t/4)`, smooth and bounded by one on `Q_2`.
    SmoothBump,
}

pub fn build_field(spec: &GridSpec, kind: &FieldKind) -> Result<GridField> {
    let spec = spec.clone();
    match *kind {
        FieldKind::JumpCounterexample => {
            GridField::from_fn(spec, |t, _| if t <= -1.0 { 1.0 } else { 0.0 })
        }
        FieldKind::NegatedJump => {
            GridField::from_fn(spec, |t, _| if t <= -1.0 { -1.0 } else { 0.0 })
        }
        FieldKind::Constant { value } => GridField::from_fn(spec, |_, _| value),
        FieldKind::LinearX => GridField::from_fn(spec, |_, x| x[0]),
        FieldKind::SmoothBump => GridField::from_fn(spec, |t, x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (-r2).exp() * (0.25 * t).exp()
        }),
    }
}

/// Layout of the diffusion matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionKind {
    /// `A = lambda I`.
    Identity,
    /// `A = lambda I` or `Lambda I`, drawn independently per coarse
    /// space-time cell of side `cell_size`.
    Checkerboard { cell_size: f64, seed: u64 },
    /// Smoothly varying scalar multiple of the identity in `[lambda, Lambda]`.
    Smooth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftKind {
    Zero,
    Constant { b: Vec<f64> },
    /// Random vector of norm `magnitude` per coarse cell.
    Checkerboard {
        magnitude: f64,
        cell_size: f64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceKind {
    Zero,
    Constant { value: f64 },
}

/// Recipe for a coefficient field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub q: f64,
    pub diffusion: DiffusionKind,
    pub drift: DriftKind,
    pub source: SourceKind,
}

/// Per-cell data `(A, B, g)` of the equation, time-major like [`GridField`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    spec: GridSpec,
    /// `d*d` entries per cell, row-major.
    a: Vec<f64>,
    /// `d` entries per cell.
    b: Vec<f64>,
    g: Vec<f64>,
    pub lambda: f64,
    pub big_lambda: f64,
    pub q: f64,
}

/// Relative slack on the ellipticity bounds.
const ELLIPTIC_EPS: f64 = 1e-12;

impl CoefficientField {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: GridSpec,
        a: Vec<f64>,
        b: Vec<f64>,
        g: Vec<f64>,
        lambda: f64,
        big_lambda: f64,
        q: f64,
    ) -> Result<Self> {
        spec.validate()?;
        let d = spec.d;
        let n = spec.len();
        if a.len() != n * d * d || b.len() != n * d || g.len() != n {
            return Err(Error::param("coefficient payload sizes do not match the grid"));
        }
        if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
            return Err(Error::param(format!(
                "need 0 < lambda <= Lambda, got {lambda}, {big_lambda}"
            )));
        }
        if !(q > 0.0) {
            return Err(Error::param("q must be positive"));
        }
        let lo = lambda * (1.0 - ELLIPTIC_EPS);
        let hi = big_lambda * (1.0 + ELLIPTIC_EPS);
        for c in 0..n {
            let m = &a[c * d * d..(c + 1) * d * d];
            let (e0, e1) = sym_eigen(m, d).ok_or_else(|| {
                Error::param(format!("A at cell {c} is not symmetric and finite"))
            })?;
            if e0 < lo || e1 > hi {
                return Err(Error::param(format!(
                    "A at cell {c} has eigenvalues [{e0}, {e1}] outside [{lambda}, {big_lambda}]"
                )));
            }
            let bn = b[c * d..(c + 1) * d].iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(bn <= hi) {
                return Err(Error::param(format!("|B| = {bn} exceeds Lambda at cell {c}")));
            }
            if !g[c].is_finite() {
                return Err(Error::param(format!("g not finite at cell {c}")));
            }
        }
        Ok(Self {
            spec,
            a,
            b,
            g,
            lambda,
            big_lambda,
            q,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// Entry `A_{mm}` at time index `j`, spatial cell `i`.
    pub fn a_diag(&self, j: usize, i: usize, m: usize) -> f64 {
        let d = self.spec.d;
        self.a[(j * self.spec.n_space() + i) * d * d + m * d + m]
    }

    pub fn b_at(&self, j: usize, i: usize, m: usize) -> f64 {
        let d = self.spec.d;
        self.b[(j * self.spec.n_space() + i) * d + m]
    }

    pub fn g_at(&self, j: usize, i: usize) -> f64 {
        self.g[j * self.spec.n_space() + i]
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.spec.d;
        self.a.chunks(d * d).all(|m| {
            (0..d).all(|r| (0..d).all(|c| r == c || m[r * d + c] == 0.0))
        })
    }

    pub fn drift_free(&self) -> bool {
        self.b.iter().all(|&v| v == 0.0)
    }

    /// Midpoint-rule `L^q` norm of `g` over the domain ball.
    pub fn g_lq_norm(&self) -> f64 {
        let grid = self.spec.spatial();
        let n = grid.len();
        let sum: f64 = self
            .g
            .iter()
            .enumerate()
            .filter(|(c, _)| grid.in_domain(c % n))
            .map(|(_, v)| v.abs().powf(self.q))
            .sum();
        (sum * self.spec.cell_volume()).powf(1.0 / self.q)
    }
}

/// Extreme eigenvalues of a symmetric matrix of size one or two.
fn sym_eigen(m: &[f64], d: usize) -> Option<(f64, f64)> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    match d {
        1 => Some((m[0], m[0])),
        2 => {
            if m[1] != m[2] {
                return None;
            }
            let tr = 0.5 * (m[0] + m[3]);
            let disc = (0.25 * (m[0] - m[3]).powi(2) + m[1] * m[1]).sqrt();
            Some((tr - disc, tr + disc))
        }
        _ => None,
    }
}

/// Independent coin flips on the coarse cells covering the domain box.
struct CoarseCells {
    counts: Vec<usize>,
    lo: Vec<f64>,
    size: f64,
}

impl CoarseCells {
    fn new(spec: &GridSpec, size: f64) -> Result<Self> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::param("coarse cell size must be positive"));
        }
        let dom = &spec.domain;
        let mut counts = vec![((dom.t_hi - dom.t_lo) / size).ceil().max(1.0) as usize];
        let mut lo = vec![dom.t_lo];
        for m in 0..spec.d {
            counts.push((2.0 * dom.radius / size).ceil().max(1.0) as usize);
            lo.push(dom.center[m] - dom.radius);
        }
        Ok(Self { counts, lo, size })
    }

    fn total(&self) -> usize {
        self.counts.iter().product()
    }

    /// Flat coarse index of the point `(t, x)`.
    fn index(&self, t: f64, x: &[f64]) -> usize {
        let mut idx = 0;
        for (axis, &v) in std::iter::once(&t).chain(x).enumerate() {
            let c = (((v - self.lo[axis]) / self.size).floor().max(0.0) as usize)
                .min(self.counts[axis] - 1);
            idx = idx * self.counts[axis] + c;
        }
        idx
    }
}

/// Evaluates `f(t, x)` at every cell and concatenates the `width` outputs.
fn per_cell(spec: &GridSpec, width: usize, mut f: impl FnMut(f64, &[f64], &mut Vec<f64>)) -> Vec<f64> {
    let grid = spec.spatial();
    let mut out = Vec::with_capacity(spec.len() * width);
    for j in 0..spec.nt {
        let t = spec.time_center(j);
        for i in 0..grid.len() {
            f(t, grid.point(i), &mut out);
        }
    }
    out
}

pub fn build_coefficients(spec: &GridSpec, cs: &CoefficientSpec) -> Result<CoefficientField> {
    spec.validate()?;
    let d = spec.d;
    let (lam, big) = (cs.lambda, cs.big_lambda);
    if !(lam > 0.0 && lam <= big) {
        return Err(Error::param(format!("need 0 < lambda <= Lambda, got {lam}, {big}")));
    }
    let push_scalar = |out: &mut Vec<f64>, s: f64| {
        for r in 0..d {
            for c in 0..d {
                out.push(if r == c { s } else { 0.0 });
            }
        }
    };
    let a = match &cs.diffusion {
        DiffusionKind::Identity => per_cell(spec, d * d, |_, _, out| push_scalar(out, lam)),
        DiffusionKind::Checkerboard { cell_size, seed } => {
            let cells = CoarseCells::new(spec, *cell_size)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let high: Vec<bool> = (0..cells.total()).map(|_| rng.random::<bool>()).collect();
            per_cell(spec, d * d, |t, x, out| {
                push_scalar(out, if high[cells.index(t, x)] { big } else { lam })
            })
        }
        DiffusionKind::Smooth => per_cell(spec, d * d, |t, x, out| {
            let w = 0.5 * (1.0 + (3.0 * x[0] + 0.5 * t).sin() * x.get(1).map_or(1.0, |y| (2.0 * y).cos()));
            push_scalar(out, lam + (big - lam) * w)
        }),
    };
    let b = match &cs.drift {
        DriftKind::Zero => vec![0.0; spec.len() * d],
        DriftKind::Constant { b } => {
            if b.len() != d {
                return Err(Error::param("constant drift must have d components"));
            }
            per_cell(spec, d, |_, _, out| out.extend_from_slice(b))
        }
        DriftKind::Checkerboard {
            magnitude,
            cell_size,
            seed,
        } => {
            if !(*magnitude >= 0.0 && *magnitude <= big) {
                return Err(Error::param("drift magnitude must lie in [0, Lambda]"));
            }
            let cells = CoarseCells::new(spec, *cell_size)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let dirs: Vec<[f64; 2]> = (0..cells.total())
                .map(|_| {
                    if d == 1 {
                        [if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0]
                    } else {
                        let th = rng.random_range(0.0..std::f64::consts::TAU);
                        [th.cos(), th.sin()]
                    }
                })
                .collect();
            per_cell(spec, d, |t, x, out| {
                let dir = dirs[cells.index(t, x)];
                out.extend(dir[..d].iter().map(|v| magnitude * v));
            })
        }
    };
    let g = match cs.source {
        SourceKind::Zero => vec![0.0; spec.len()],
        SourceKind::Constant { value } => vec![value; spec.len()],
    };
    CoefficientField::new(spec.clone(), a, b, g, lam, big, cs.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::{measure_level_set, oscillation, Cylinder, LevelSet};

    fn spec() -> GridSpec {
        GridSpec::q2(1, 64, 64).unwrap()
    }

    #[test]
    fn jump_values() {
        let s = GridSpec::q2(1, 8, 4).unwrap();
        let f = build_field(&s, &FieldKind::JumpCounterexample).unwrap();
        // time centers: -3.75, -3.25, ..., -0.25
        assert_eq!(s.time_center(4), -1.75);
        assert_eq!(f.value(4, 0), 1.0);
        assert_eq!(s.time_center(6), -0.75);
        assert_eq!(f.value(6, 0), 0.0);
    }

    #[test]
    fn jump_measures_and_oscillation() {
        let f = build_field(&spec(), &FieldKind::JumpCounterexample).unwrap();
        let qb = Cylinder::q_bar_1(1);
        assert_eq!(measure_level_set(&f, &qb, LevelSet::Above(1.0)).unwrap(), 2.0);
        assert_eq!(oscillation(&f, &Cylinder::standard(1, 2.0)).unwrap(), 1.0);
    }

    fn checker(lam: f64, big: f64, seed: u64) -> CoefficientSpec {
        CoefficientSpec {
            lambda: lam,
            big_lambda: big,
            q: 4.0,
            diffusion: DiffusionKind::Checkerboard {
                cell_size: 0.25,
                seed,
            },
            drift: DriftKind::Checkerboard {
                magnitude: big,
                cell_size: 0.5,
                seed: seed + 1,
            },
            source: SourceKind::Zero,
        }
    }

    #[test]
    fn checkerboard_degenerate_range() {
        let c = build_coefficients(&spec(), &checker(1.5, 1.5, 3)).unwrap();
        assert!(c.a().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn checkerboard_uses_both_values_and_is_deterministic() {
        let c1 = build_coefficients(&spec(), &checker(1.0, 2.0, 9)).unwrap();
        let c2 = build_coefficients(&spec(), &checker(1.0, 2.0, 9)).unwrap();
        assert_eq!(c1, c2);
        assert!(c1.a().contains(&1.0) && c1.a().contains(&2.0));
        assert!(c1.a().iter().all(|&v| v == 1.0 || v == 2.0));
        assert!(c1.b().iter().all(|v| v.abs() <= 2.0));
        let c3 = build_coefficients(&spec(), &checker(1.0, 2.0, 10)).unwrap();
        assert_ne!(c1.a(), c3.a());
    }

    #[test]
    fn two_dimensional_coefficients() {
        let s = GridSpec::q2(2, 8, 16).unwrap();
        let c = build_coefficients(&s, &checker(1.0, 3.0, 1)).unwrap();
        assert!(c.is_diagonal());
        assert_eq!(c.a().len(), s.len() * 4);
        for ch in c.b().chunks(2) {
            assert!((ch[0].hypot(ch[1]) - 3.0).abs() < 1e-12);
        }
        let smooth = CoefficientSpec {
            diffusion: DiffusionKind::Smooth,
            ..checker(1.0, 3.0, 1)
        };
        build_coefficients(&s, &smooth).unwrap();
    }

    #[test]
    fn rejects_bad_coefficients() {
        let s = GridSpec::q2(1, 4, 4).unwrap();
        let n = s.len();
        assert!(CoefficientField::new(s.clone(), vec![0.5; n], vec![0.0; n], vec![0.0; n], 1.0, 2.0, 4.0).is_err());
        assert!(CoefficientField::new(s.clone(), vec![1.0; n], vec![3.0; n], vec![0.0; n], 1.0, 2.0, 4.0).is_err());
        assert!(CoefficientField::new(s, vec![1.0; n], vec![0.0; n], vec![0.0; n], 2.0, 1.0, 4.0).is_err());
    }

    #[test]
    fn source_norm() {
        let cs = CoefficientSpec {
            lambda: 1.0,
            big_lambda: 1.0,
            q: 2.0,
            diffusion: DiffusionKind::Identity,
            drift: DriftKind::Zero,
            source: SourceKind::Constant { value: 1.0 },
        };
        let c = build_coefficients(&spec(), &cs).unwrap();
        // |Q_2| = 4 * 4 = 16
        assert!((c.g_lq_norm() - 4.0).abs() < 1e-12);
    }
}
