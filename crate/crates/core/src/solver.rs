//! Finite-difference solver for `u_t = div(A grad u) + B . grad u + g`.
//!
//! Diffusion is discretized in flux form with arithmetic face averages of
//! `A`, drift by first-order upwinding, the source explicitly. Dirichlet data
//! are imposed on boundary cells: cells with a neighbor outside the grid box
//! or the domain ball. Output values are sampled at the time-cell centers of
//! the coefficient grid; the march between them uses internal substeps.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    build_coefficients, io, CoefficientField, CoefficientSpec, GridField, GridSpec, SpatialGrid,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Explicit,
    ImplicitEuler,
}

/// One separable sine mode `amplitude * prod_m sin(pi k_m (x_m - lo_m) / (2R))`,
/// vanishing on the faces of the grid box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineMode {
    pub amplitude: f64,
    pub k: Vec<u32>,
}

/// Initial profile at `t = t_lo`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    Modes { offset: f64, modes: Vec<SineMode> },
    /// One value per spatial cell.
    Values { values: Vec<f64> },
}

impl Profile {
    pub fn sine(amplitude: f64, k: u32, d: usize) -> Self {
        Profile::Modes {
            offset: 0.0,
            modes: vec![SineMode {
                amplitude,
                k: vec![k; d],
            }],
        }
    }

    fn sample(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        let out: Vec<f64> = match self {
            Profile::Constant { value } => vec![*value; grid.len()],
            Profile::Modes { offset, modes } => (0..grid.len())
                .map(|i| offset + modes.iter().map(|m| mode_value(m, grid, grid.point(i))).sum::<f64>())
                .collect(),
            Profile::Values { values } => {
                if values.len() != grid.len() {
                    return Err(Error::Configuration(format!(
                        "initial profile has {} values, grid has {} cells",
                        values.len(),
                        grid.len()
                    )));
                }
                values.clone()
            }
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Configuration("initial profile is not finite".into()));
        }
        Ok(out)
    }
}

fn mode_value(mode: &SineMode, grid: &SpatialGrid, x: &[f64]) -> f64 {
    let w = 2.0 * grid.radius;
    mode.amplitude
        * x.iter()
            .enumerate()
            .map(|(m, &xm)| {
                let k = mode.k.get(m).copied().unwrap_or(1) as f64;
                (std::f64::consts::PI * k * (xm - grid.center[m] + grid.radius) / w).sin()
            })
            .product::<f64>()
}

/// Dirichlet data on boundary cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Constant { value: f64 },
    /// Hold the initial values of the boundary cells.
    Initial,
    /// `offset + amplitude sin(2 pi t / period)`.
    Oscillating { offset: f64, amplitude: f64, period: f64 },
}

impl Boundary {
    fn value(&self, t: f64, initial: f64) -> f64 {
        match *self {
            Boundary::Constant { value } => value,
            Boundary::Initial => initial,
            Boundary::Oscillating {
                offset,
                amplitude,
                period,
            } => offset + amplitude * (std::f64::consts::TAU * t / period).sin(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Boundary::Constant { value } => value.is_finite(),
            Boundary::Initial => true,
            Boundary::Oscillating {
                offset,
                amplitude,
                period,
            } => offset.is_finite() && amplitude.is_finite() && period.is_finite() && period != 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Configuration("boundary data must be finite".into()))
        }
    }
}

pub const DEFAULT_CFL_SAFETY: f64 = 0.9;
pub const DEFAULT_RESIDUAL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// Everything a solve needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub coeffs: CoefficientField,
    pub initial: Profile,
    pub boundary: Boundary,
    pub scheme: Scheme,
    pub cfl_safety: f64,
    /// Fixed number of substeps per output interval; chosen from the
    /// stability limit when absent.
    pub substeps: Option<usize>,
    /// Gauss–Seidel residual target for the implicit scheme.
    pub residual: f64,
    pub max_sweeps: usize,
}

impl SolveConfig {
    pub fn new(coeffs: CoefficientField, initial: Profile, boundary: Boundary) -> Self {
        Self {
            coeffs,
            initial,
            boundary,
            scheme: Scheme::Explicit,
            cfl_safety: DEFAULT_CFL_SAFETY,
            substeps: None,
            residual: DEFAULT_RESIDUAL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

/// Where a serialized solve request takes its coefficients from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    Recipe(CoefficientSpec),
    /// Path to a coefficient file, relative to the request file.
    File(PathBuf),
}

fn default_safety() -> f64 {
    DEFAULT_CFL_SAFETY
}
fn default_residual() -> f64 {
    DEFAULT_RESIDUAL
}
fn default_sweeps() -> usize {
    DEFAULT_MAX_SWEEPS
}

/// JSON form of a [`SolveConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub grid: GridSpec,
    pub coefficients: CoefficientSource,
    pub initial: Profile,
    pub boundary: Boundary,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub substeps: Option<usize>,
    #[serde(default = "default_residual")]
    pub residual: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
}

impl SolveRequest {
    /// Builds the coefficients; relative file paths resolve against `base`.
    pub fn resolve(&self, base: &Path) -> Result<SolveConfig> {
        let coeffs = match &self.coefficients {
            CoefficientSource::Recipe(cs) => build_coefficients(&self.grid, cs)?,
            CoefficientSource::File(p) => {
                let c = io::read_coefficients(&base.join(p))?;
                if c.spec() != &self.grid {
                    return Err(Error::Configuration(
                        "coefficient file grid differs from the requested grid".into(),
                    ));
                }
                c
            }
        };
        Ok(SolveConfig {
            coeffs,
            initial: self.initial.clone(),
            boundary: self.boundary.clone(),
            scheme: self.scheme,
            cfl_safety: self.cfl_safety,
            substeps: self.substeps,
            residual: self.residual,
            max_sweeps: self.max_sweeps,
        })
    }
}

/// Largest stable explicit step `dx^2 / (2 d Lambda + sqrt(d) Lambda dx)`,
/// with `dx` the smallest spatial step.
pub fn stability_limit(coeffs: &CoefficientField) -> f64 {
    let spec = coeffs.spec();
    let d = spec.d as f64;
    let dx = spec.dx_min();
    let big = coeffs.big_lambda;
    dx * dx / (2.0 * d * big + d.sqrt() * big * dx)
}

/// Counters of a finished solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveStats {
    pub steps: usize,
    pub max_step: f64,
    pub max_sweeps_used: usize,
}

pub fn solve(config: &SolveConfig) -> Result<GridField> {
    solve_detailed(config).map(|(u, _)| u)
}

pub fn solve_detailed(config: &SolveConfig) -> Result<(GridField, SolveStats)> {
    let coeffs = &config.coeffs;
    let spec = coeffs.spec().clone();
    if !coeffs.is_diagonal() {
        return Err(Error::Configuration(
            "the solver supports diagonal diffusion matrices only".into(),
        ));
    }
    if !(config.cfl_safety > 0.0 && config.cfl_safety <= 1.0) {
        return Err(Error::Configuration("cfl_safety must lie in (0, 1]".into()));
    }
    config.boundary.validate()?;
    let grid = spec.spatial();
    let dt = spec.dt();
    let limit = config.cfl_safety * stability_limit(coeffs);
    let h_max = match (config.scheme, config.substeps) {
        (_, Some(0)) => return Err(Error::Configuration("substeps must be positive".into())),
        (Scheme::Explicit, Some(s)) => {
            let h = dt / s as f64;
            if h > limit {
                return Err(Error::Configuration(format!(
                    "explicit step {h:.3e} exceeds cfl_safety * stability limit = {limit:.3e}"
                )));
            }
            h
        }
        (Scheme::Explicit, None) => limit,
        (Scheme::ImplicitEuler, Some(s)) => dt / s as f64,
        (Scheme::ImplicitEuler, None) => dt / 2.0,
    };

    let stencil = Stencil::new(&grid);
    let initial = config.initial.sample(&grid)?;
    let mut u = initial.clone();
    let t0 = spec.domain.t_lo;
    stencil.impose(&mut u, &initial, &config.boundary, t0);

    let mut out = Vec::with_capacity(spec.len());
    let mut scratch = vec![0.0; u.len()];
    let mut t = t0;
    let mut stats = SolveStats {
        steps: 0,
        max_step: 0.0,
        max_sweeps_used: 0,
    };
    for j in 0..spec.nt {
        let target = spec.time_center(j);
        let n = ((target - t) / h_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (target - t) / n as f64;
        stats.max_step = stats.max_step.max(h);
        for s in 0..n {
            let t_new = if s + 1 == n { target } else { t + h };
            match config.scheme {
                Scheme::Explicit => {
                    let jc = spec.time_index(t);
                    stencil.explicit_step(coeffs, jc, &u, &mut scratch, h);
                    std::mem::swap(&mut u, &mut scratch);
                }
                Scheme::ImplicitEuler => {
                    let jc = spec.time_index(t_new);
                    let sweeps = stencil.implicit_step(
                        coeffs,
                        jc,
                        &mut u,
                        &mut scratch,
                        h,
                        &initial,
                        &config.boundary,
                        t_new,
                        config.residual,
                        config.max_sweeps,
                    );
                    stats.max_sweeps_used = stats.max_sweeps_used.max(sweeps);
                }
            }
            stencil.impose(&mut u, &initial, &config.boundary, t_new);
            stats.steps += 1;
            if u.iter().any(|v| !v.is_finite() || v.abs() > 1e300) {
                return Err(Error::Divergence {
                    step: stats.steps,
                    time: t_new,
                });
            }
            t = t_new;
        }
        out.extend_from_slice(&u);
    }
    Ok((GridField::new(spec, out)?, stats))
}

/// Neighbor structure of the spatial grid.
struct Stencil {
    d: usize,
    dx: Vec<f64>,
    /// Boundary cells receive Dirichlet data.
    boundary: Vec<bool>,
    /// `(plus, minus)` neighbors per axis for interior cells.
    nbrs: Vec<[(usize, usize); 2]>,
}

impl Stencil {
    fn new(grid: &SpatialGrid) -> Self {
        let n = grid.len();
        let mut boundary = vec![false; n];
        let mut nbrs = vec![[(0, 0); 2]; n];
        for i in 0..n {
            if !grid.in_domain(i) {
                boundary[i] = true;
                continue;
            }
            for m in 0..grid.d {
                match (grid.neighbor(i, m, 1), grid.neighbor(i, m, -1)) {
                    (Some(p), Some(q)) => nbrs[i][m] = (p, q),
                    _ => boundary[i] = true,
                }
            }
        }
        Self {
            d: grid.d,
            dx: grid.dx.clone(),
            boundary,
            nbrs,
        }
    }

    fn impose(&self, u: &mut [f64], initial: &[f64], bc: &Boundary, t: f64) {
        for (i, b) in self.boundary.iter().enumerate() {
            if *b {
                u[i] = bc.value(t, initial[i]);
            }
        }
    }

    /// Off-diagonal weights `(c_plus, c_minus)` along axis `m` at cell `i`.
    #[inline]
    fn weights(&self, c: &CoefficientField, j: usize, i: usize, m: usize) -> (usize, f64, usize, f64) {
        let (p, q) = self.nbrs[i][m];
        let dx = self.dx[m];
        let ai = c.a_diag(j, i, m);
        let ap = 0.5 * (ai + c.a_diag(j, p, m));
        let am = 0.5 * (ai + c.a_diag(j, q, m));
        let b = c.b_at(j, i, m);
        (
            p,
            ap / (dx * dx) + b.max(0.0) / dx,
            q,
            am / (dx * dx) + (-b).max(0.0) / dx,
        )
    }

    fn explicit_step(&self, c: &CoefficientField, j: usize, u: &[f64], out: &mut [f64], h: f64) {
        for i in 0..u.len() {
            if self.boundary[i] {
                out[i] = u[i];
                continue;
            }
            let mut acc = c.g_at(j, i);
            for m in 0..self.d {
                let (p, cp, q, cm) = self.weights(c, j, i, m);
                acc += cp * (u[p] - u[i]) + cm * (u[q] - u[i]);
            }
            out[i] = u[i] + h * acc;
        }
    }

    /// Gauss–Seidel for `(I - hL) u_new = u_old + h g`; returns sweeps used.
    #[allow(clippy::too_many_arguments)]
    fn implicit_step(
        &self,
        c: &CoefficientField,
        j: usize,
        u: &mut [f64],
        old: &mut [f64],
        h: f64,
        initial: &[f64],
        bc: &Boundary,
        t_new: f64,
        tol: f64,
        max_sweeps: usize,
    ) -> usize {
        old.copy_from_slice(u);
        self.impose(u, initial, bc, t_new);
        let n = u.len();
        for sweep in 1..=max_sweeps {
            for i in 0..n {
                if self.boundary[i] {
                    continue;
                }
                let mut num = old[i] + h * c.g_at(j, i);
                let mut den = 1.0;
                for m in 0..self.d {
                    let (p, cp, q, cm) = self.weights(c, j, i, m);
                    num += h * (cp * u[p] + cm * u[q]);
                    den += h * (cp + cm);
                }
                u[i] = num / den;
            }
            let mut res: f64 = 0.0;
            for i in 0..n {
                if self.boundary[i] {
                    continue;
                }
                let mut r = u[i] - old[i] - h * c.g_at(j, i);
                for m in 0..self.d {
                    let (p, cp, q, cm) = self.weights(c, j, i, m);
                    r -= h * (cp * (u[p] - u[i]) + cm * (u[q] - u[i]));
                }
                res = res.max(r.abs());
            }
            if res <= tol || !res.is_finite() {
                return sweep;
            }
        }
        max_sweeps
    }
}
