//! Periodic heat kernels, their mixed-norm estimates and exponent fits.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A kernel value with a certified bound on the truncated remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub tail_bound: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("kernel time must be positive (got {t})")));
    }
    Ok(())
}

fn gaussian(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// Maps `x` into `[-L/2, L/2)`.
fn centered(x: f64, period: f64) -> f64 {
    (x + 0.5 * period).rem_euclid(period) - 0.5 * period
}

/// Bound on `Σ_{|k|>K} G(x + kL)` for `|x| ≤ L/2`.
fn image_tail(t: f64, period: f64, k_max: u32) -> f64 {
    let a = period * period / (16.0 * t);
    let k = k_max as f64;
    let lead = (-a * (2.0 * k + 1.0).powi(2)).exp();
    let ratio = (-8.0 * a * (k + 1.0)).exp();
    2.0 * lead / ((1.0 - ratio) * (4.0 * PI * t).sqrt())
}

fn images_sum(t: f64, x: f64, period: f64, k_max: u32, derivative: bool) -> f64 {
    let x = centered(x, period);
    let k = k_max as i64;
    (-k..=k)
        .map(|i| {
            let y = x + i as f64 * period;
            let g = gaussian(t, y);
            if derivative {
                -y / (2.0 * t) * g
            } else {
                g
            }
        })
        .sum()
}

/// Smallest image count whose tail bound drops below `1e-17` relative to the peak.
fn images_needed(t: f64, period: f64) -> u32 {
    let peak = 1.0 / (4.0 * PI * t).sqrt();
    (0..10_000)
        .find(|&k| image_tail(t, period, k) < 1e-17 * peak)
        .unwrap_or(10_000)
}

/// Image-sum heat kernel on the circle of length `2π` with `2K+1` images.
pub fn eta_images(t: f64, x: f64, k_max: u32) -> Result<KernelValue> {
    check_time(t)?;
    Ok(KernelValue {
        value: images_sum(t, x, TAU, k_max, false),
        tail_bound: image_tail(t, TAU, k_max),
    })
}

/// Image sum with the truncation chosen automatically.
pub fn eta_images_auto(t: f64, x: f64) -> Result<KernelValue> {
    check_time(t)?;
    eta_images(t, x, images_needed(t, TAU))
}

fn fourier_tail(t: f64, m: u32) -> f64 {
    let m = m as f64;
    (-t * (m + 1.0).powi(2)).exp() / (PI * (1.0 - (-t * (2.0 * m + 3.0)).exp()))
}

/// Cosine-series heat kernel on the circle, scaled by `1/(2π)` so that it
/// integrates to one: `(1 + 2Σ_{n≤M} e^{-tn²} cos nx) / (2π)`.
pub fn eta_fourier(t: f64, x: f64, m_max: u32) -> Result<KernelValue> {
    check_time(t)?;
    let series: f64 = (1..=m_max)
        .map(|n| {
            let n = n as f64;
            (-t * n * n).exp() * (n * x).cos()
        })
        .sum();
    Ok(KernelValue {
        value: (1.0 + 2.0 * series) / TAU,
        tail_bound: fourier_tail(t, m_max),
    })
}

pub fn eta_fourier_auto(t: f64, x: f64) -> Result<KernelValue> {
    check_time(t)?;
    let m = (1..1_000_000u32)
        .find(|&m| fourier_tail(t, m) < 1e-18)
        .unwrap_or(1_000_000);
    eta_fourier(t, x, m)
}

/// Where the spatial heat kernel lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XDomain {
    /// `R²`.
    Line,
    /// `T²` with period `2π` in each direction.
    #[default]
    Circle2Pi,
    /// `T²` with unit period.
    UnitTorus,
}

impl XDomain {
    fn period(self) -> Option<f64> {
        match self {
            XDomain::Line => None,
            XDomain::Circle2Pi => Some(TAU),
            XDomain::UnitTorus => Some(1.0),
        }
    }
}

impl fmt::Display for XDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XDomain::Line => "line",
            XDomain::Circle2Pi => "circle_2pi",
            XDomain::UnitTorus => "unit_torus",
        })
    }
}

impl FromStr for XDomain {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "line" => Ok(XDomain::Line),
            "circle_2pi" => Ok(XDomain::Circle2Pi),
            "unit_torus" => Ok(XDomain::UnitTorus),
            other => Err(format!(
                "unknown kernel domain '{other}' (use line, circle_2pi or unit_torus)"
            )),
        }
    }
}

const GL_ORDER: usize = 20;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        rule.push((z, 2.0 / ((1.0 - z * z) * dp * dp)));
    }
    rule
}

/// Composite Gauss–Legendre over `[a, b]` split at `breaks`, each piece into
/// `panels` equal panels.
fn composite<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], panels: usize, rule: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let a = w[0] + p as f64 * h;
            let mid = a + 0.5 * h;
            total += rule
                .iter()
                .map(|(z, wt)| wt * f(mid + 0.5 * h * z))
                .sum::<f64>()
                * 0.5
                * h;
        }
    }
    total
}

/// Integrates `f` over `[0, end]` with breakpoints graded on the width `√t`,
/// doubling the panel count until the change is below `1e-13` relative (or
/// `1e-15` absolute, for integrands at rounding level).
fn graded_integral<F: Fn(f64) -> f64>(f: F, t: f64, end: f64) -> Result<f64> {
    let width = (4.0 * t).sqrt();
    let mut breaks = vec![0.0];
    let mut b = 0.5 * width;
    while b < end {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(end);
    let rule = gauss_legendre(GL_ORDER);
    let mut panels = 1;
    let mut prev = composite(&f, &breaks, panels, &rule);
    let mut change = f64::INFINITY;
    for _ in 0..8 {
        panels *= 2;
        let next = composite(&f, &breaks, panels, &rule);
        let gap = (next - prev).abs();
        change = gap / next.abs().max(f64::MIN_POSITIVE);
        prev = next;
        if change < 1e-13 || gap < 1e-15 {
            return Ok(prev);
        }
    }
    if t >= 1e-4 && change < 1e-8 {
        return Ok(prev);
    }
    Err(Error::Quadrature { t, change })
}

/// `(‖η‖_p^p, ‖∂η‖_p^p)` of the one-dimensional kernel.
fn kernel_1d_powers(t: f64, p: f64, period: Option<f64>) -> Result<(f64, f64)> {
    match period {
        None => {
            let end = (4.0 * t).sqrt() * 12.0;
            let v = graded_integral(|x| gaussian(t, x).powf(p), t, end)?;
            let d = graded_integral(|x| (x / (2.0 * t) * gaussian(t, x)).powf(p), t, end)?;
            Ok((2.0 * v, 2.0 * d))
        }
        Some(l) => {
            let k = images_needed(t, l);
            let v = graded_integral(|x| images_sum(t, x, l, k, false).abs().powf(p), t, 0.5 * l)?;
            let d = graded_integral(|x| images_sum(t, x, l, k, true).abs().powf(p), t, 0.5 * l)?;
            Ok((2.0 * v, 2.0 * d))
        }
    }
}

/// Mixed norms (outer `L^p` in `x`, inner `L¹` in `θ`) of the product kernel
/// on `X × T_{2π}`, with `X` two-dimensional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNorms {
    pub t: f64,
    pub p: f64,
    pub f0: f64,
    pub fx: f64,
    pub ftheta: f64,
}

pub fn kernel_norms(t: f64, p: f64, domain: XDomain) -> Result<KernelNorms> {
    check_time(t)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParams(format!("p must lie in [1, ∞) (got {p})")));
    }
    // x-kernel factorises over the two coordinates
    let (vp, dp) = kernel_1d_powers(t, p, domain.period())?;
    let eta_x = vp.powf(1.0 / p);
    let eta_x_2d = eta_x * eta_x;
    let grad_x_2d = (dp * vp).powf(1.0 / p);
    let (theta_l1, dtheta_l1) = kernel_1d_powers(t, 1.0, Some(TAU))?;
    Ok(KernelNorms {
        t,
        p,
        f0: eta_x_2d * theta_l1,
        fx: grad_x_2d * theta_l1,
        ftheta: eta_x_2d * dtheta_l1,
    })
}

/// `‖∂_x η_t‖_{L¹}` on the circle of length `2π`.
pub fn derivative_l1(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(kernel_1d_powers(t, 1.0, Some(TAU))?.1)
}

/// `‖η_t‖_{L¹}` on the circle of length `2π`.
pub fn kernel_l1(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(kernel_1d_powers(t, 1.0, Some(TAU))?.0)
}

/// Ordinary least-squares slope of `ln value` against `ln t`.
pub fn fit_exponent(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 4 {
        return Err(Error::InvalidParams(format!(
            "exponent fit needs at least 4 samples (got {})",
            series.len()
        )));
    }
    if series.iter().any(|(t, v)| !(*t > 0.0 && *v > 0.0)) {
        return Err(Error::InvalidParams("exponent fit needs positive samples".into()));
    }
    let n = series.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = series.iter().map(|(t, v)| (t.ln(), v.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Largest pointwise gap between `η_{t+s}` and the discrete circular
/// convolution `η_t ⊛ η_s` on `n` nodes.
pub fn semigroup_defect(t: f64, s: f64, n: usize) -> Result<f64> {
    check_time(t)?;
    check_time(s)?;
    let h = TAU / n as f64;
    let sample = |tt: f64| -> Result<Vec<f64>> {
        (0..n)
            .map(|i| eta_images_auto(tt, i as f64 * h).map(|v| v.value))
            .collect()
    };
    let a = sample(t)?;
    let b = sample(s)?;
    let target = sample(t + s)?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let conv: f64 = (0..n).map(|j| a[j] * b[(i + n - j) % n]).sum::<f64>() * h;
        worst = worst.max((conv - target[i]).abs());
    }
    Ok(worst)
}

/// Theoretical exponents: `-(p-1)/p` for `f0`, `-((p-1)/p + 1/2)` otherwise.
pub fn theoretical_exponent(quantity: NormQuantity, p: f64) -> f64 {
    let base = (1.0 - p) / p;
    match quantity {
        NormQuantity::F0 => base,
        NormQuantity::Fx | NormQuantity::Ftheta => base - 0.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormQuantity {
    F0,
    Fx,
    Ftheta,
}

impl NormQuantity {
    pub const ALL: [NormQuantity; 3] = [NormQuantity::F0, NormQuantity::Fx, NormQuantity::Ftheta];

    pub fn pick(self, n: &KernelNorms) -> f64 {
        match self {
            NormQuantity::F0 => n.f0,
            NormQuantity::Fx => n.fx,
            NormQuantity::Ftheta => n.ftheta,
        }
    }
}

impl fmt::Display for NormQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormQuantity::F0 => "f0",
            NormQuantity::Fx => "fx",
            NormQuantity::Ftheta => "ftheta",
        })
    }
}

/// Relative tolerance on fitted exponents. A zero exponent is compared
/// against `REL_TOL · 1/2`, the smallest nonzero theoretical magnitude.
pub const REL_TOL: f64 = 0.05;

pub fn exponent_matches(fitted: f64, theory: f64) -> bool {
    (fitted - theory).abs() <= REL_TOL * theory.abs().max(0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub quantity: NormQuantity,
    pub p: f64,
    pub fitted: f64,
    pub theory: f64,
}

impl ExponentFit {
    pub fn passes(&self) -> bool {
        exponent_matches(self.fitted, self.theory)
    }
}

#[derive(Debug, Clone)]
pub struct KernelStudy {
    pub domain: XDomain,
    pub ps: Vec<f64>,
    pub ts: Vec<f64>,
}

impl Default for KernelStudy {
    fn default() -> Self {
        KernelStudy {
            domain: XDomain::Circle2Pi,
            ps: vec![1.0, 2.0, 5.0],
            ts: log_spaced(1e-3, 1e-1, 9),
        }
    }
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone)]
pub struct KernelReport {
    pub domain: XDomain,
    pub norms: Vec<KernelNorms>,
    pub fits: Vec<ExponentFit>,
    pub derivative_fit: f64,
}

impl KernelReport {
    pub fn all_pass(&self) -> bool {
        self.fits.iter().all(ExponentFit::passes)
            && exponent_matches(self.derivative_fit, -0.5)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "quantity,p,t,value")?;
        for q in NormQuantity::ALL {
            for n in &self.norms {
                writeln!(out, "{q},{},{},{:e}", n.p, n.t, q.pick(n))?;
            }
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "domain: {}", self.domain)?;
        writeln!(out, "quantity  p      fitted     theory     status")?;
        for f in &self.fits {
            writeln!(
                out,
                "{:<9} {:<6} {:<10.5} {:<10.5} {}",
                f.quantity.to_string(),
                f.p,
                f.fitted,
                f.theory,
                if f.passes() { "pass" } else { "FAIL" }
            )?;
        }
        writeln!(
            out,
            "d_x eta L1 exponent: {:.5} (expected in [-0.55, -0.45])",
            self.derivative_fit
        )
    }
}

pub fn run_study(study: &KernelStudy) -> Result<KernelReport> {
    if study.ts.len() < 4 {
        return Err(Error::InvalidParams("kernel study needs at least 4 times".into()));
    }
    let jobs: Vec<(f64, f64)> = study
        .ps
        .iter()
        .flat_map(|p| study.ts.iter().map(move |t| (*p, *t)))
        .collect();
    let norms = jobs
        .par_iter()
        .map(|(p, t)| kernel_norms(*t, *p, study.domain))
        .collect::<Result<Vec<_>>>()?;
    let mut fits = Vec::new();
    for &p in &study.ps {
        for q in NormQuantity::ALL {
            let series: Vec<(f64, f64)> = norms
                .iter()
                .filter(|n| n.p == p)
                .map(|n| (n.t, q.pick(n)))
                .collect();
            fits.push(ExponentFit {
                quantity: q,
                p,
                fitted: fit_exponent(&series)?,
                theory: theoretical_exponent(q, p),
            });
        }
    }
    let derivative_series = study
        .ts
        .iter()
        .map(|t| derivative_l1(*t).map(|v| (*t, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelReport {
        domain: study.domain,
        norms,
        fits,
        derivative_fit: fit_exponent(&derivative_series)?,
    })
}
