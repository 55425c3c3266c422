//! Cylinders, uniform space-time grids and grid functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on geometric comparisons (containment, ball membership).
const GEOM_EPS: f64 = 1e-12;

/// A space-time cylinder `(t_lo, t_hi] x B_radius(center)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub t_lo: f64,
    pub t_hi: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Cylinder {
    pub fn new(t_lo: f64, t_hi: f64, center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(t_lo < t_hi) || !(radius > 0.0) || center.is_empty() {
            return Err(Error::geometry(format!(
                "bad cylinder ({t_lo}, {t_hi}) x B_{radius}"
            )));
        }
        Ok(Self {
            t_lo,
            t_hi,
            center,
            radius,
        })
    }

    /// `Q_r(t0, x0) = (t0 - r^2, t0) x B_r(x0)`.
    pub fn parabolic(t0: f64, x0: &[f64], r: f64) -> Self {
        Self {
            t_lo: t0 - r * r,
            t_hi: t0,
            center: x0.to_vec(),
            radius: r,
        }
    }

    /// `Q_r` centered at the origin in dimension `d`.
    pub fn standard(d: usize, r: f64) -> Self {
        Self::parabolic(0.0, &vec![0.0; d], r)
    }

    /// The time-shifted unit cylinder `(-2, -1) x B_1`.
    pub fn q_bar_1(d: usize) -> Self {
        Self {
            t_lo: -2.0,
            t_hi: -1.0,
            center: vec![0.0; d],
            radius: 1.0,
        }
    }

    /// Same ball over a different time window.
    pub fn with_times(&self, t_lo: f64, t_hi: f64) -> Self {
        Self {
            t_lo,
            t_hi,
            ..self.clone()
        }
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        Self {
            radius,
            ..self.clone()
        }
    }

    pub fn d(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        (self.t_hi - self.t_lo) * crate::constants::ball_volume(self.d(), self.radius)
    }

    pub fn contains_time(&self, t: f64) -> bool {
        self.t_lo < t && t <= self.t_hi
    }

    pub fn ball_contains(&self, x: &[f64]) -> bool {
        dist(x, &self.center) <= self.radius * (1.0 + GEOM_EPS)
    }

    /// Whether `self` lies inside `outer` (time window and ball).
    pub fn is_within(&self, outer: &Cylinder) -> bool {
        self.d() == outer.d()
            && self.t_lo >= outer.t_lo - GEOM_EPS
            && self.t_hi <= outer.t_hi + GEOM_EPS
            && dist(&self.center, &outer.center) + self.radius <= outer.radius * (1.0 + GEOM_EPS)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Uniform grid over the bounding box of a cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub nt: usize,
    pub nx: Vec<usize>,
    pub domain: Cylinder,
}

impl GridSpec {
    pub fn new(d: usize, nt: usize, nx: Vec<usize>, domain: Cylinder) -> Result<Self> {
        let spec = Self { d, nt, nx, domain };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid over `Q_2 = (-4, 0) x B_2` with `n` cells per spatial axis.
    pub fn q2(d: usize, nt: usize, n: usize) -> Result<Self> {
        Self::new(d, nt, vec![n; d], Cylinder::standard(d, 2.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.d) {
            return Err(Error::param(format!("dimension {} not supported (1 or 2)", self.d)));
        }
        if self.nx.len() != self.d || self.domain.d() != self.d {
            return Err(Error::param("axis counts and domain must match the dimension"));
        }
        if self.nt < 2 || self.nx.iter().any(|&n| n < 2) {
            return Err(Error::param("need at least two cells per axis"));
        }
        if !(self.domain.t_lo < self.domain.t_hi) || !(self.domain.radius > 0.0) {
            return Err(Error::geometry("degenerate domain"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.domain.t_hi - self.domain.t_lo) / self.nt as f64
    }

    pub fn dx(&self, axis: usize) -> f64 {
        2.0 * self.domain.radius / self.nx[axis] as f64
    }

    /// Largest spatial step.
    pub fn dx_max(&self) -> f64 {
        (0..self.d).map(|m| self.dx(m)).fold(0.0, f64::max)
    }

    pub fn dx_min(&self) -> f64 {
        (0..self.d).map(|m| self.dx(m)).fold(f64::INFINITY, f64::min)
    }

    pub fn n_space(&self) -> usize {
        self.nx.iter().product()
    }

    pub fn len(&self) -> usize {
        self.nt * self.n_space()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time_center(&self, j: usize) -> f64 {
        self.domain.t_lo + (j as f64 + 0.5) * self.dt()
    }

    /// Spatial cell volume `prod dx`.
    pub fn space_volume(&self) -> f64 {
        (0..self.d).map(|m| self.dx(m)).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.dt() * self.space_volume()
    }

    pub fn spatial(&self) -> SpatialGrid {
        SpatialGrid::new(&self.nx, &self.domain.center, self.domain.radius)
    }

    /// Time indices whose centers lie in `(t_lo, t_hi]`.
    pub fn time_range(&self, t_lo: f64, t_hi: f64) -> std::ops::Range<usize> {
        let first = (0..self.nt)
            .find(|&j| self.time_center(j) > t_lo)
            .unwrap_or(self.nt);
        let end = (first..self.nt)
            .find(|&j| self.time_center(j) > t_hi)
            .unwrap_or(self.nt);
        first..end
    }

    /// Index of the time cell containing `t` (clamped).
    pub fn time_index(&self, t: f64) -> usize {
        let j = ((t - self.domain.t_lo) / self.dt()).floor();
        (j.max(0.0) as usize).min(self.nt - 1)
    }

    /// Cells of `cyl`, which must lie inside the domain.
    pub fn select(&self, cyl: &Cylinder) -> Result<Selection> {
        self.select_with(&self.spatial(), cyl)
    }

    pub(crate) fn select_with(&self, grid: &SpatialGrid, cyl: &Cylinder) -> Result<Selection> {
        if !cyl.is_within(&self.domain) {
            return Err(Error::geometry(format!(
                "cylinder ({}, {}] x B_{}({:?}) not inside the domain",
                cyl.t_lo, cyl.t_hi, cyl.radius, cyl.center
            )));
        }
        Ok(Selection {
            times: self.time_range(cyl.t_lo, cyl.t_hi),
            space: grid.ball_cells(&cyl.center, cyl.radius),
        })
    }
}

/// Cells of a cylinder: a contiguous range of time slices times a set of
/// spatial cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub times: std::ops::Range<usize>,
    pub space: Vec<usize>,
}

impl Selection {
    pub fn count(&self) -> usize {
        self.times.len() * self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// Spatial part of a grid: cell centers, domain-ball mask and neighbors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialGrid {
    pub d: usize,
    pub nx: Vec<usize>,
    pub dx: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
    strides: Vec<usize>,
    centers: Vec<[f64; 2]>,
    in_ball: Vec<bool>,
}

impl SpatialGrid {
    pub fn new(nx: &[usize], center: &[f64], radius: f64) -> Self {
        let d = nx.len();
        let dx: Vec<f64> = nx.iter().map(|&n| 2.0 * radius / n as f64).collect();
        let mut strides = vec![1; d];
        for m in (0..d.saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * nx[m + 1];
        }
        let n: usize = nx.iter().product();
        let mut centers = Vec::with_capacity(n);
        let mut in_ball = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = [0.0; 2];
            for m in 0..d {
                let im = (i / strides[m]) % nx[m];
                x[m] = center[m] - radius + (im as f64 + 0.5) * dx[m];
            }
            in_ball.push(dist(&x[..d], center) <= radius * (1.0 + GEOM_EPS));
            centers.push(x);
        }
        Self {
            d,
            nx: nx.to_vec(),
            dx,
            center: center.to_vec(),
            radius,
            strides,
            centers,
            in_ball,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.centers[i][..self.d]
    }

    pub fn in_domain(&self, i: usize) -> bool {
        self.in_ball[i]
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx.iter().product()
    }

    /// Axis index of cell `i` along `axis`.
    pub fn coord(&self, i: usize, axis: usize) -> usize {
        (i / self.strides[axis]) % self.nx[axis]
    }

    /// Neighbor of `i` along `axis` in direction `dir` (+1/-1), if inside
    /// the box and the domain ball.
    pub fn neighbor(&self, i: usize, axis: usize, dir: i32) -> Option<usize> {
        let c = self.coord(i, axis);
        let j = if dir > 0 {
            (c + 1 < self.nx[axis]).then(|| i + self.strides[axis])
        } else {
            (c > 0).then(|| i - self.strides[axis])
        }?;
        self.in_ball[j].then_some(j)
    }

    /// Cells whose centers lie in `B_r(x0)` and in the domain ball.
    pub fn ball_cells(&self, x0: &[f64], r: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.in_ball[i] && dist(self.point(i), x0) <= r * (1.0 + GEOM_EPS))
            .collect()
    }

    /// Squared finite-difference gradient of `w` at cell `i`: centered in
    /// the interior, one-sided where a neighbor leaves the domain ball.
    pub fn grad_sq(&self, w: &[f64], i: usize) -> f64 {
        self.grad_sq_with(i, |c| w[c])
    }

    /// As [`SpatialGrid::grad_sq`] with the function given cellwise.
    #[inline]
    pub fn grad_sq_with(&self, i: usize, w: impl Fn(usize) -> f64) -> f64 {
        let mut s = 0.0;
        for m in 0..self.d {
            let g = match (self.neighbor(i, m, 1), self.neighbor(i, m, -1)) {
                (Some(a), Some(b)) => (w(a) - w(b)) / (2.0 * self.dx[m]),
                (Some(a), None) => (w(a) - w(i)) / self.dx[m],
                (None, Some(b)) => (w(i) - w(b)) / self.dx[m],
                (None, None) => 0.0,
            };
            s += g * g;
        }
        s
    }
}

/// Which part of `u - k` an energy integral uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    /// `(u - k)_+`
    Plus,
    /// `(u - k)_- = (k - u)_+`
    Minus,
}

impl Sign {
    #[inline]
    pub fn part(self, u: f64, k: f64) -> f64 {
        match self {
            Sign::Plus => (u - k).max(0.0),
            Sign::Minus => (k - u).max(0.0),
        }
    }
}

/// Level-set predicates. `Below` and `Above` are closed, `Between` is open
/// on both sides, so the three partition any cylinder when `k < l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSet {
    Below(f64),
    Above(f64),
    Between(f64, f64),
}

impl LevelSet {
    #[inline]
    pub fn holds(&self, u: f64) -> bool {
        match *self {
            LevelSet::Below(k) => u <= k,
            LevelSet::Above(l) => u >= l,
            LevelSet::Between(k, l) => k < u && u < l,
        }
    }
}

/// Spatial integrals of one slice at one level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SliceEnergy {
    /// `int w^2`
    pub l2: f64,
    /// `int |grad w|^2`
    pub grad: f64,
    /// `int w^p`
    pub lp: f64,
}

/// Computes the three spatial integrals of `w = sign(u - k)` over `cells`.
pub fn slice_energy(
    grid: &SpatialGrid,
    slice: &[f64],
    cells: &[usize],
    k: f64,
    sign: Sign,
    p: f64,
) -> SliceEnergy {
    let mut e = SliceEnergy::default();
    for &i in cells {
        let wi = sign.part(slice[i], k);
        e.l2 += wi * wi;
        e.grad += grid.grad_sq_with(i, |c| sign.part(slice[c], k));
        if wi > 0.0 {
            e.lp += if p == 1.0 { wi } else { wi.powf(p) };
        }
    }
    let vol = grid.cell_volume();
    e.l2 *= vol;
    e.grad *= vol;
    e.lp *= vol;
    e
}

/// A scalar function sampled at the cell centers of a space-time grid,
/// stored time-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::param(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite value at index {pos}")));
        }
        Ok(Self { spec, values })
    }

    /// Samples `f(t, x)` at every cell center.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, &[f64]) -> f64) -> Result<Self> {
        spec.validate()?;
        let grid = spec.spatial();
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.nt {
            let t = spec.time_center(j);
            for i in 0..grid.len() {
                values.push(f(t, grid.point(i)));
            }
        }
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        let n = self.spec.n_space();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn value(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.spec.n_space() + i]
    }

    /// Pointwise image under `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.spec.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a u + b`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        self.map(|v| a * v + b)
    }

    /// Spatial slice at time index `j`.
    pub fn time_slice(&self, j: usize) -> SpatialField {
        SpatialField {
            grid: self.spec.spatial(),
            values: self.slice(j).to_vec(),
        }
    }

    /// Cell values inside `cyl`.
    pub fn values_in(&self, cyl: &Cylinder) -> Result<Vec<f64>> {
        let sel = self.spec.select(cyl)?;
        Ok(sel
            .times
            .clone()
            .flat_map(|j| sel.space.iter().map(move |&i| (j, i)))
            .map(|(j, i)| self.value(j, i))
            .collect())
    }

    /// `(min, max)` over the cells of `cyl`.
    pub fn range_on(&self, cyl: &Cylinder) -> Result<(f64, f64)> {
        let vals = self.values_in(cyl)?;
        if vals.is_empty() {
            return Err(Error::geometry("cylinder contains no cell centers"));
        }
        Ok(vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            }))
    }
}

/// Measure of `{u in set} ∩ cyl`, computed as a cell count times the cell
/// volume.
pub fn measure_level_set(u: &GridField, cyl: &Cylinder, set: LevelSet) -> Result<f64> {
    let sel = u.spec.select(cyl)?;
    let count = sel
        .times
        .clone()
        .map(|j| {
            let s = u.slice(j);
            sel.space.iter().filter(|&&i| set.holds(s[i])).count()
        })
        .sum::<usize>();
    Ok(count as f64 * u.spec.cell_volume())
}

/// Grid measure of `cyl` itself (number of cells inside times cell volume).
pub fn grid_measure(spec: &GridSpec, cyl: &Cylinder) -> Result<f64> {
    Ok(spec.select(cyl)?.count() as f64 * spec.cell_volume())
}

/// Pointwise truncation: `0` below `k`, `u - k` between, `l - k` above.
pub fn truncate(u: &GridField, k: f64, l: f64) -> Result<GridField> {
    if !(k < l) {
        return Err(Error::param(format!("truncation needs k < l, got k={k}, l={l}")));
    }
    u.map(|v| truncate_value(v, k, l))
}

#[inline]
pub fn truncate_value(u: f64, k: f64, l: f64) -> f64 {
    if u <= k {
        0.0
    } else if u < l {
        u - k
    } else {
        l - k
    }
}

/// Space-time integrals of `(u-k)_+^2`, `|D(u-k)_+|^2` and `(u-k)_+^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyIntegrals {
    pub l2_plus: f64,
    pub grad_l2_plus: f64,
    pub lp_plus: f64,
}

/// Midpoint-rule energy integrals over `cyl`.
pub fn energy_integrals(u: &GridField, cyl: &Cylinder, k: f64, p: f64) -> Result<EnergyIntegrals> {
    energy_integrals_signed(u, cyl, k, p, Sign::Plus)
}

pub fn energy_integrals_signed(
    u: &GridField,
    cyl: &Cylinder,
    k: f64,
    p: f64,
    sign: Sign,
) -> Result<EnergyIntegrals> {
    if !(p >= 1.0) {
        return Err(Error::param("exponent p must be >= 1"));
    }
    let grid = u.spec.spatial();
    let sel = u.spec.select_with(&grid, cyl)?;
    let dt = u.spec.dt();
    let mut out = EnergyIntegrals {
        l2_plus: 0.0,
        grad_l2_plus: 0.0,
        lp_plus: 0.0,
    };
    for j in sel.times.clone() {
        let e = slice_energy(&grid, u.slice(j), &sel.space, k, sign, p);
        out.l2_plus += e.l2 * dt;
        out.grad_l2_plus += e.grad * dt;
        out.lp_plus += e.lp * dt;
    }
    Ok(out)
}

/// `max - min` over the cells of `cyl`.
pub fn oscillation(u: &GridField, cyl: &Cylinder) -> Result<f64> {
    let (lo, hi) = u.range_on(cyl)?;
    Ok(hi - lo)
}

/// A function on the spatial grid (one time slice).
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialField {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
}

impl SpatialField {
    pub fn from_fn(nx: &[usize], center: &[f64], radius: f64, f: impl Fn(&[f64]) -> f64) -> Self {
        let grid = SpatialGrid::new(nx, center, radius);
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    /// Measure of `{u in set} ∩ B_r(x0)`.
    pub fn measure(&self, x0: &[f64], r: f64, set: LevelSet) -> f64 {
        let count = self
            .grid
            .ball_cells(x0, r)
            .into_iter()
            .filter(|&i| set.holds(self.values[i]))
            .count();
        count as f64 * self.grid.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q2_grid(nt: usize, nx: usize) -> GridSpec {
        GridSpec::q2(1, nt, nx).unwrap()
    }

    #[test]
    fn constant_field_measures() {
        let spec = q2_grid(64, 64);
        let u = GridField::from_fn(spec, |_, _| 1.0).unwrap();
        let q1 = Cylinder::standard(1, 1.0);
        assert_eq!(measure_level_set(&u, &q1, LevelSet::Below(0.0)).unwrap(), 0.0);
        assert_eq!(measure_level_set(&u, &q1, LevelSet::Above(0.5)).unwrap(), 2.0);
    }

    #[test]
    fn ties_follow_closed_sets() {
        let spec = q2_grid(8, 8);
        let u = GridField::from_fn(spec, |_, _| 0.25).unwrap();
        let q = Cylinder::standard(1, 2.0);
        let below = measure_level_set(&u, &q, LevelSet::Below(0.25)).unwrap();
        let above = measure_level_set(&u, &q, LevelSet::Above(0.25)).unwrap();
        assert_eq!(below, 16.0);
        assert_eq!(above, 16.0);
        assert_eq!(measure_level_set(&u, &q, LevelSet::Between(0.0, 0.25)).unwrap(), 0.0);
    }

    #[test]
    fn cylinder_outside_domain_is_rejected() {
        let u = GridField::from_fn(q2_grid(8, 8), |_, _| 0.0).unwrap();
        let bad = Cylinder::parabolic(0.0, &[1.5], 1.0);
        assert!(matches!(
            measure_level_set(&u, &bad, LevelSet::Below(0.0)),
            Err(Error::Geometry(_))
        ));
        let late = Cylinder::new(-1.0, 1.0, vec![0.0], 1.0).unwrap();
        assert!(oscillation(&u, &late).is_err());
    }

    #[test]
    fn truncation_branches() {
        assert_eq!(truncate_value(0.3, 0.0, 0.5), 0.3);
        assert_eq!(truncate_value(-1.0, 0.0, 0.5), 0.0);
        assert_eq!(truncate_value(7.0, 0.0, 0.5), 0.5);
        let u = GridField::from_fn(q2_grid(4, 4), |_, x| x[0]).unwrap();
        assert!(truncate(&u, 0.5, 0.5).is_err());
    }

    #[test]
    fn energy_of_constants() {
        let u = GridField::from_fn(q2_grid(32, 32), |_, _| 0.75).unwrap();
        let q1 = Cylinder::standard(1, 1.0);
        let e = energy_integrals(&u, &q1, 0.25, 1.0).unwrap();
        assert!((e.l2_plus - 0.25 * 2.0).abs() < 1e-12);
        assert_eq!(e.grad_l2_plus, 0.0);
        let z = energy_integrals(&u, &q1, 0.75, 1.5).unwrap();
        assert_eq!((z.l2_plus, z.grad_l2_plus, z.lp_plus), (0.0, 0.0, 0.0));
    }

    #[test]
    fn energy_of_linear_field_converges() {
        let q1 = Cylinder::standard(1, 1.0);
        let mut errs = vec![];
        for n in [64, 128, 256] {
            let u = GridField::from_fn(q2_grid(16, n), |_, x| x[0]).unwrap();
            let e = energy_integrals(&u, &q1, 0.0, 1.0).unwrap();
            let dx = 4.0 / n as f64;
            assert!((e.l2_plus - 1.0 / 3.0).abs() < 2.0 * dx, "l2 {}", e.l2_plus);
            errs.push((e.grad_l2_plus - 1.0).abs());
            assert!((e.lp_plus - 0.5).abs() < 2.0 * dx);
        }
        assert!(errs[2] < errs[0] && errs[2] < 0.02);
    }

    #[test]
    fn oscillation_of_linear_and_constant() {
        let u = GridField::from_fn(q2_grid(16, 256), |_, x| x[0]).unwrap();
        let q1 = Cylinder::standard(1, 1.0);
        let osc = oscillation(&u, &q1).unwrap();
        assert!((osc - 2.0).abs() <= 4.0 / 256.0 + 1e-12);
        let c = GridField::from_fn(q2_grid(8, 8), |_, _| 3.0).unwrap();
        assert_eq!(oscillation(&c, &q1).unwrap(), 0.0);
    }

    #[test]
    fn two_dimensional_disk_measure() {
        let spec = GridSpec::q2(2, 4, 128).unwrap();
        let u = GridField::from_fn(spec, |_, _| 1.0).unwrap();
        let q1 = Cylinder::standard(2, 1.0);
        let m = measure_level_set(&u, &q1, LevelSet::Above(0.0)).unwrap();
        assert!((m - std::f64::consts::PI).abs() < 0.05, "disk measure {m}");
    }

    #[test]
    fn gradient_uses_one_sided_at_boundary() {
        let grid = SpatialGrid::new(&[8], &[0.0], 2.0);
        let w: Vec<f64> = (0..8).map(|i| grid.point(i)[0]).collect();
        for i in 0..8 {
            assert!((grid.grad_sq(&w, i) - 1.0).abs() < 1e-12);
        }
    }
}
