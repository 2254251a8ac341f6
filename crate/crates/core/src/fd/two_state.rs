use std::f64::consts::TAU;

use super::grid::{theta_integral, total_mass, DensityGrid};
use super::linalg::{bicgstab, solve_cyclic_constant, LinearOperator, SolveStats};
use super::single::{
    advance_field, check_dt, enforce_positivity, face_drift, FdParams, Stencil,
};
use crate::azimuthal::AngularDensity;
use crate::error::{Error, Result};

/// Orientation change applied to agents switching state.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionOp {
    Identity,
    /// `J[f](θ) = f(θ + π)`; needs an even number of θ cells.
    UTurn,
    /// Circular convolution with quadrature weights summing to one.
    Convolution { weights: Vec<f64> },
}

impl TransitionOp {
    /// Builds the convolution operator from a kernel sampled on the θ-grid.
    pub fn convolution(kernel: &AngularDensity) -> Result<TransitionOp> {
        if kernel.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParams(
                "transition kernel must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = kernel.values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParams("transition kernel has zero mass".into()));
        }
        Ok(TransitionOp::Convolution {
            weights: kernel.values.iter().map(|v| v / total).collect(),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransitionOp::Identity => "identity",
            TransitionOp::UTurn => "u_turn",
            TransitionOp::Convolution { .. } => "convolution",
        }
    }

    pub fn check(&self, n_theta: usize) -> Result<()> {
        match self {
            TransitionOp::Identity => Ok(()),
            TransitionOp::UTurn if n_theta % 2 == 0 => Ok(()),
            TransitionOp::UTurn => Err(Error::InvalidParams(format!(
                "u-turn needs an even n_theta (got {n_theta})"
            ))),
            TransitionOp::Convolution { weights } if weights.len() == n_theta => Ok(()),
            TransitionOp::Convolution { weights } => Err(Error::InvalidParams(format!(
                "kernel has {} samples but n_theta = {n_theta}",
                weights.len()
            ))),
        }
    }

    /// Applies `J` to one θ-row.
    pub fn apply_row(&self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        match self {
            TransitionOp::Identity => out.copy_from_slice(f),
            TransitionOp::UTurn => {
                let half = n / 2;
                for k in 0..n {
                    out[k] = f[(k + half) % n];
                }
            }
            TransitionOp::Convolution { weights } => {
                for k in 0..n {
                    out[k] = weights
                        .iter()
                        .enumerate()
                        .map(|(m, w)| w * f[(k + n - m) % n])
                        .sum();
                }
            }
        }
    }

    /// Applies `J` to every row of a row-major `(x, θ)` array.
    pub fn apply(&self, f: &[f64], n_theta: usize) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for (src, dst) in f.chunks(n_theta).zip(out.chunks_mut(n_theta)) {
            self.apply_row(src, dst);
        }
        out
    }
}

/// Affine production `G^α = aa·f + ab·g`, `G^β = ba·f + bb·g` with
/// `f = ∫ρ^α dθ` and `g = ∫ρ^β dθ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductionSpec {
    pub aa: f64,
    pub ab: f64,
    pub ba: f64,
    pub bb: f64,
}

impl Default for ProductionSpec {
    fn default() -> Self {
        ProductionSpec {
            aa: 1.0,
            ab: 0.0,
            ba: 0.0,
            bb: 1.0,
        }
    }
}

impl ProductionSpec {
    pub fn validate(&self) -> Result<()> {
        let all = [self.aa, self.ab, self.ba, self.bb];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParams(format!(
                "production coefficients must be finite and nonnegative: {all:?}"
            )));
        }
        Ok(())
    }

    fn sources(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a = f.iter().zip(g).map(|(f, g)| self.aa * f + self.ab * g).collect();
        let b = f.iter().zip(g).map(|(f, g)| self.ba * f + self.bb * g).collect();
        (a, b)
    }
}

/// Stationary smell field `d` solving `γ_a d - σ_a d'' = rate` and its
/// centered gradient; the drift contribution is `χ_a·(-sin θ)·d'`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmellField {
    pub d: Vec<f64>,
    pub gradient: Vec<f64>,
    pub chi: f64,
}

impl SmellField {
    pub fn none(n_x: usize) -> SmellField {
        SmellField {
            d: vec![0.0; n_x],
            gradient: vec![0.0; n_x],
            chi: 0.0,
        }
    }

    pub fn drift(&self, j: usize, theta: f64) -> f64 {
        -self.chi * theta.sin() * self.gradient[j]
    }
}

pub fn smell_field(rate: &[f64], gamma_a: f64, sigma_a: f64, chi_a: f64) -> Result<SmellField> {
    if !(gamma_a > 0.0) {
        return Err(Error::InvalidParams(format!(
            "smell evaporation rate must be positive (got {gamma_a})"
        )));
    }
    if !(sigma_a >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "smell diffusion must be nonnegative (got {sigma_a})"
        )));
    }
    let n = rate.len();
    let inv_dx2 = (n * n) as f64;
    let d = solve_cyclic_constant(
        -sigma_a * inv_dx2,
        gamma_a + 2.0 * sigma_a * inv_dx2,
        -sigma_a * inv_dx2,
        rate,
    )?;
    let inv_2dx = 0.5 * n as f64;
    let gradient = (0..n)
        .map(|j| (d[(j + 1) % n] - d[(j + n - 1) % n]) * inv_2dx)
        .collect();
    Ok(SmellField {
        d,
        gradient,
        chi: chi_a,
    })
}

/// Two populations, each carrying its own density and chemical field.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStateGrid {
    pub alpha: DensityGrid,
    pub beta: DensityGrid,
    /// Switching rate `α(x_j)` from state α to β.
    pub alpha_rate: Vec<f64>,
    /// Switching rate `β(x_j)` from state β to α.
    pub beta_rate: Vec<f64>,
    pub smell_alpha: SmellField,
    pub smell_beta: SmellField,
}

impl TwoStateGrid {
    pub fn n_x(&self) -> usize {
        self.alpha.n_x
    }

    pub fn n_theta(&self) -> usize {
        self.alpha.n_theta
    }

    pub fn total_mass(&self) -> f64 {
        self.alpha.mass() + self.beta.mass()
    }

    fn check(&self) -> Result<()> {
        let (nx, nt) = (self.n_x(), self.n_theta());
        if self.beta.n_x != nx || self.beta.n_theta != nt {
            return Err(Error::InvalidParams("state grids differ in shape".into()));
        }
        for (name, v) in [
            ("alpha_rate", &self.alpha_rate),
            ("beta_rate", &self.beta_rate),
            ("smell_alpha", &self.smell_alpha.gradient),
            ("smell_beta", &self.smell_beta.gradient),
        ] {
            if v.len() != nx {
                return Err(Error::InvalidParams(format!(
                    "{name} has {} samples, expected {nx}",
                    v.len()
                )));
            }
        }
        if self
            .alpha_rate
            .iter()
            .chain(&self.beta_rate)
            .any(|r| !(r.is_finite() && *r >= 0.0))
        {
            return Err(Error::InvalidParams("switching rates must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `[A_α, -dt·β J; -dt·α J, A_β]` acting on `[ρ^α; ρ^β]`.
struct CoupledOperator<'a> {
    alpha: Stencil,
    beta: Stencil,
    alpha_rate: &'a [f64],
    beta_rate: &'a [f64],
    transition: &'a TransitionOp,
    dt: f64,
}

impl LinearOperator for CoupledOperator<'_> {
    fn len(&self) -> usize {
        2 * self.alpha.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.alpha.len();
        let nt = self.alpha.n_theta;
        let (xa, xb) = x.split_at(n);
        let (ya, yb) = y.split_at_mut(n);
        self.alpha.apply_into(xa, ya);
        self.beta.apply_into(xb, yb);
        let mut jrow = vec![0.0; nt];
        for (j, (ra, rb)) in self.alpha_rate.iter().zip(self.beta_rate).enumerate() {
            let rows = j * nt..(j + 1) * nt;
            if *rb != 0.0 {
                self.transition.apply_row(&xb[rows.clone()], &mut jrow);
                for (yi, ji) in ya[rows.clone()].iter_mut().zip(&jrow) {
                    *yi -= self.dt * rb * ji;
                }
            }
            if *ra != 0.0 {
                self.transition.apply_row(&xa[rows.clone()], &mut jrow);
                for (yi, ji) in yb[rows].iter_mut().zip(&jrow) {
                    *yi -= self.dt * ra * ji;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = self.alpha.diagonal();
        d.extend(self.beta.diagonal());
        d
    }
}

fn state_drift(field: &[f64], smell: &SmellField, n_theta: usize, params: &FdParams) -> Vec<f64> {
    let mut b = face_drift(field, n_theta, params);
    if smell.chi != 0.0 {
        let dth = TAU / n_theta as f64;
        for (j, row) in b.chunks_mut(n_theta).enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v += smell.drift(j, (k as f64 + 0.5) * dth);
            }
        }
    }
    b
}

/// One split step of the two-state system. The exchange terms, `J` included,
/// enter the implicit solve so that the total mass is conserved exactly.
pub fn step_two_state(
    grid: &TwoStateGrid,
    params: &FdParams,
    transition: &TransitionOp,
    production: &ProductionSpec,
    dt: f64,
) -> Result<TwoStateGrid> {
    step_two_state_with_stats(grid, params, transition, production, dt).map(|(g, _)| g)
}

pub fn step_two_state_with_stats(
    grid: &TwoStateGrid,
    params: &FdParams,
    transition: &TransitionOp,
    production: &ProductionSpec,
    dt: f64,
) -> Result<(TwoStateGrid, SolveStats)> {
    check_dt(dt)?;
    params.model.validate()?;
    production.validate()?;
    grid.check()?;
    let (nx, nt) = (grid.n_x(), grid.n_theta());
    transition.check(nt)?;

    let f = theta_integral(&grid.alpha.rho, nx, nt);
    let g = theta_integral(&grid.beta.rho, nx, nt);
    let (src_a, src_b) = production.sources(&f, &g);
    let c_alpha = advance_field(&grid.alpha.c, &src_a, &params.model, dt)?;
    let c_beta = advance_field(&grid.beta.c, &src_b, &params.model, dt)?;

    let b_alpha = state_drift(&c_alpha, &grid.smell_alpha, nt, params);
    let b_beta = state_drift(&c_beta, &grid.smell_beta, nt, params);
    let op = CoupledOperator {
        alpha: Stencil::build(nx, nt, &b_alpha, Some(&grid.alpha_rate), params, dt),
        beta: Stencil::build(nx, nt, &b_beta, Some(&grid.beta_rate), params, dt),
        alpha_rate: &grid.alpha_rate,
        beta_rate: &grid.beta_rate,
        transition,
        dt,
    };
    let mut rhs = grid.alpha.rho.clone();
    rhs.extend_from_slice(&grid.beta.rho);
    let mut x = rhs.clone();
    let stats = bicgstab(&op, &rhs, &mut x, &params.solver)?;
    let rho_beta = x.split_off(nx * nt);
    let mut rho_alpha = x;
    enforce_positivity(&mut rho_alpha, params.negativity, f64::NAN)?;
    let mut rho_beta = rho_beta;
    enforce_positivity(&mut rho_beta, params.negativity, f64::NAN)?;

    Ok((
        TwoStateGrid {
            alpha: DensityGrid::new(nx, nt, rho_alpha, c_alpha),
            beta: DensityGrid::new(nx, nt, rho_beta, c_beta),
            alpha_rate: grid.alpha_rate.clone(),
            beta_rate: grid.beta_rate.clone(),
            smell_alpha: grid.smell_alpha.clone(),
            smell_beta: grid.smell_beta.clone(),
        },
        stats,
    ))
}

/// Per-row θ-mass of `J[f]` minus that of `f`, maximised over rows.
pub fn transition_mass_defect(op: &TransitionOp, f: &[f64], n_theta: usize) -> f64 {
    let jf = op.apply(f, n_theta);
    let dth = TAU / n_theta as f64;
    f.chunks(n_theta)
        .zip(jf.chunks(n_theta))
        .map(|(a, b)| (total_mass(a, 1.0, dth) - total_mass(b, 1.0, dth)).abs())
        .fold(0.0, f64::max)
}
