use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use super::grid::{theta_integral, DensityGrid};
use super::linalg::{bicgstab, solve_cyclic_constant, LinearOperator, SolveStats, SolverSettings};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Largest time step accepted by the split scheme.
pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionScheme {
    #[default]
    Centered,
    Upwind,
}

impl fmt::Display for AdvectionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdvectionScheme::Centered => "centered",
            AdvectionScheme::Upwind => "upwind",
        })
    }
}

impl FromStr for AdvectionScheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "centered" => Ok(AdvectionScheme::Centered),
            "upwind" => Ok(AdvectionScheme::Upwind),
            other => Err(format!("unknown advection scheme '{other}'")),
        }
    }
}

/// What to do when a step produces `min ρ < -1e-10·max ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativityPolicy {
    #[default]
    Abort,
    /// Zero the negative cells and rescale to the pre-clip mass.
    Clip,
}

impl fmt::Display for NegativityPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NegativityPolicy::Abort => "abort",
            NegativityPolicy::Clip => "clip",
        })
    }
}

impl FromStr for NegativityPolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "abort" => Ok(NegativityPolicy::Abort),
            "clip" => Ok(NegativityPolicy::Clip),
            other => Err(format!("unknown negativity policy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FdParams {
    pub model: ModelParams,
    /// Use the printed coefficients (λ inside the drift, none on transport).
    pub verbatim: bool,
    pub advection: AdvectionScheme,
    pub negativity: NegativityPolicy,
    pub solver: SolverSettings,
}

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::InvalidParams(format!(
            "dt must lie in (0, {MAX_DT}] (got {dt})"
        )));
    }
    Ok(())
}

/// Implicit update `((1 + dt·γ) - dt·σ_c D²) c' = c + dt·source`.
pub(crate) fn advance_field(c: &[f64], source: &[f64], model: &ModelParams, dt: f64) -> Result<Vec<f64>> {
    let n = c.len();
    let inv_dx2 = (n * n) as f64;
    let off = -dt * model.sigma_c * inv_dx2;
    let diag = 1.0 + dt * model.gamma + 2.0 * dt * model.sigma_c * inv_dx2;
    let rhs: Vec<f64> = c.iter().zip(source).map(|(ci, si)| ci + dt * si).collect();
    solve_cyclic_constant(off, diag, off, &rhs)
}

/// Centered first and second differences of a periodic 1D field.
pub(crate) fn centered_derivatives(c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = c.len();
    let inv_dx = n as f64;
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for j in 0..n {
        let cp = c[(j + 1) % n];
        let cm = c[(j + n - 1) % n];
        d1[j] = 0.5 * (cp - cm) * inv_dx;
        d2[j] = (cp - 2.0 * c[j] + cm) * inv_dx * inv_dx;
    }
    (d1, d2)
}

/// Angular drift at the faces `θ_{k+1/2}`, row-major in `x`.
pub(crate) fn face_drift(c: &[f64], n_theta: usize, params: &FdParams) -> Vec<f64> {
    let m = &params.model;
    let (cx, cxx) = centered_derivatives(c);
    let dth = TAU / n_theta as f64;
    let (k1, k2) = if params.verbatim {
        (m.chi * m.lambda, m.chi * m.lambda)
    } else {
        (m.chi, m.chi * m.tau)
    };
    let mut b = Vec::with_capacity(c.len() * n_theta);
    for j in 0..c.len() {
        for k in 0..n_theta {
            let th = (k as f64 + 0.5) * dth;
            let (s, co) = th.sin_cos();
            b.push(-k1 * s * cx[j] - k2 * s * co * cxx[j]);
        }
    }
    b
}

/// Five-point stencil of `I - dt·L` on the periodic `(x, θ)` grid.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub n_x: usize,
    pub n_theta: usize,
    pub center: Vec<f64>,
    pub theta_plus: Vec<f64>,
    pub theta_minus: Vec<f64>,
    pub x_plus: Vec<f64>,
    pub x_minus: Vec<f64>,
}

impl Stencil {
    /// `face_b[j·n_θ + k]` is the drift at `(x_j, θ_{k+1/2})`; `loss` is an
    /// extra per-`x` decay rate added to the diagonal.
    pub fn build(
        n_x: usize,
        n_theta: usize,
        face_b: &[f64],
        loss: Option<&[f64]>,
        params: &FdParams,
        dt: f64,
    ) -> Stencil {
        let m = &params.model;
        let n = n_x * n_theta;
        let dx = 1.0 / n_x as f64;
        let dth = TAU / n_theta as f64;
        let diff_t = m.sigma_theta / (dth * dth);
        let diff_x = m.sigma_x / (dx * dx);
        let speed = if params.verbatim { 1.0 } else { m.lambda };
        let mut s = Stencil {
            n_x,
            n_theta,
            center: vec![0.0; n],
            theta_plus: vec![0.0; n],
            theta_minus: vec![0.0; n],
            x_plus: vec![0.0; n],
            x_minus: vec![0.0; n],
        };
        for j in 0..n_x {
            let rate = loss.map_or(0.0, |l| l[j]);
            for k in 0..n_theta {
                let i = j * n_theta + k;
                let bp = face_b[i];
                let bm = face_b[j * n_theta + (k + n_theta - 1) % n_theta];
                let v = speed * (k as f64 * dth).cos();
                // entries of L
                let (mut lc, mut ltp, mut ltm, mut lxp, mut lxm) = (
                    -2.0 * diff_t - 2.0 * diff_x - rate,
                    diff_t,
                    diff_t,
                    diff_x,
                    diff_x,
                );
                match params.advection {
                    AdvectionScheme::Centered => {
                        lc -= (bp - bm) / (2.0 * dth);
                        ltp -= bp / (2.0 * dth);
                        ltm += bm / (2.0 * dth);
                        lxp -= v / (2.0 * dx);
                        lxm += v / (2.0 * dx);
                    }
                    AdvectionScheme::Upwind => {
                        lc += (-bp.max(0.0) + bm.min(0.0)) / dth;
                        ltp -= bp.min(0.0) / dth;
                        ltm += bm.max(0.0) / dth;
                        lc -= v.abs() / dx;
                        lxp -= v.min(0.0) / dx;
                        lxm += v.max(0.0) / dx;
                    }
                }
                s.center[i] = 1.0 - dt * lc;
                s.theta_plus[i] = -dt * ltp;
                s.theta_minus[i] = -dt * ltm;
                s.x_plus[i] = -dt * lxp;
                s.x_minus[i] = -dt * lxm;
            }
        }
        s
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let nt = self.n_theta;
        let nx = self.n_x;
        for j in 0..nx {
            let row = j * nt;
            let up = ((j + 1) % nx) * nt;
            let down = ((j + nx - 1) % nx) * nt;
            for k in 0..nt {
                let kp = if k + 1 == nt { 0 } else { k + 1 };
                let km = if k == 0 { nt - 1 } else { k - 1 };
                let i = row + k;
                y[i] = self.center[i] * x[i]
                    + self.theta_plus[i] * x[row + kp]
                    + self.theta_minus[i] * x[row + km]
                    + self.x_plus[i] * x[up + k]
                    + self.x_minus[i] * x[down + k];
            }
        }
    }
}

impl LinearOperator for Stencil {
    fn len(&self) -> usize {
        self.center.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.center.clone()
    }
}

/// Applies the negativity policy in place; `t` is only used for reporting.
pub(crate) fn enforce_positivity(rho: &mut [f64], policy: NegativityPolicy, t: f64) -> Result<()> {
    let max = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::Invariant(format!("non-finite density at t={t}")));
    }
    if min >= -1e-10 * max.abs() {
        return Ok(());
    }
    match policy {
        NegativityPolicy::Abort => Err(Error::NegativeDensity { t, min, max }),
        NegativityPolicy::Clip => {
            let before: f64 = rho.iter().sum();
            rho.iter_mut().for_each(|v| *v = v.max(0.0));
            let after: f64 = rho.iter().sum();
            if after > 0.0 {
                let scale = before / after;
                rho.iter_mut().for_each(|v| *v *= scale);
            }
            Ok(())
        }
    }
}

/// One split step: implicit `c`, then implicit `ρ` with the drift frozen.
pub fn step(grid: &DensityGrid, params: &FdParams, dt: f64) -> Result<DensityGrid> {
    step_with_stats(grid, params, dt).map(|(g, _)| g)
}

pub fn step_with_stats(
    grid: &DensityGrid,
    params: &FdParams,
    dt: f64,
) -> Result<(DensityGrid, SolveStats)> {
    check_dt(dt)?;
    params.model.validate()?;
    let mu = params.model.mu;
    let source: Vec<f64> = theta_integral(&grid.rho, grid.n_x, grid.n_theta)
        .into_iter()
        .map(|s| mu * s)
        .collect();
    let c = advance_field(&grid.c, &source, &params.model, dt)?;
    let b = face_drift(&c, grid.n_theta, params);
    let op = Stencil::build(grid.n_x, grid.n_theta, &b, None, params, dt);
    let mut rho = grid.rho.clone();
    let stats = bicgstab(&op, &grid.rho, &mut rho, &params.solver)?;
    enforce_positivity(&mut rho, params.negativity, f64::NAN)?;
    Ok((DensityGrid::new(grid.n_x, grid.n_theta, rho, c), stats))
}

#[derive(Debug, Clone)]
pub struct SteadyOutcome {
    pub grid: DensityGrid,
    pub converged: bool,
    pub t_stop: f64,
    pub steps: u64,
}

/// `max(‖ρ_a - ρ_b‖_∞, ‖c_a - c_b‖_∞) / dt`.
pub fn steady_residual(a: &DensityGrid, b: &DensityGrid, dt: f64) -> f64 {
    let sup = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    sup(&a.rho, &b.rho).max(sup(&a.c, &b.c)) / dt
}

/// Steps until `max(‖Δρ‖_∞, ‖Δc‖_∞)/dt < tol` or `t_max` is reached. The
/// observer sees every accepted step `(step_index, t, grid)`.
pub fn run_to_steady<F>(
    grid: &DensityGrid,
    params: &FdParams,
    dt: f64,
    t_max: f64,
    tol: f64,
    mut observer: F,
) -> Result<SteadyOutcome>
where
    F: FnMut(u64, f64, &DensityGrid) -> Result<()>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive (got {tol})")));
    }
    check_dt(dt)?;
    let max_steps = (t_max / dt + 1e-9).floor().max(0.0) as u64;
    let mut current = grid.clone();
    for n in 1..=max_steps {
        let t = n as f64 * dt;
        let next = step(&current, params, dt).map_err(|e| match e {
            Error::NegativeDensity { min, max, .. } => Error::NegativeDensity { t, min, max },
            other => other,
        })?;
        observer(n, t, &next)?;
        let residual = steady_residual(&next, &current, dt);
        current = next;
        if residual < tol {
            return Ok(SteadyOutcome {
                grid: current,
                converged: true,
                t_stop: t,
                steps: n,
            });
        }
    }
    Ok(SteadyOutcome {
        grid: current,
        converged: false,
        t_stop: max_steps as f64 * dt,
        steps: max_steps,
    })
}
