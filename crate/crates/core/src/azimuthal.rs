//! The angle dynamics in a frozen terrain `(p, A)`: explicit stationary law,
//! regime classification, and Monte-Carlo validation of both.

use std::f64::consts::TAU;
use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{rotate_vec, Angle, HessianSym};
use crate::model::{drift_b, potential_h};
use crate::particles::RngState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainProfile {
    pub p: [f64; 2],
    pub a: HessianSym,
    pub chi: f64,
    pub tau: f64,
}

impl TerrainProfile {
    pub fn new(p: [f64; 2], a: HessianSym, chi: f64, tau: f64) -> Self {
        TerrainProfile { p, a, chi, tau }
    }

    pub fn potential(&self, theta: f64) -> f64 {
        potential_h(Angle::new(theta), self.p, &self.a, self.tau)
    }

    pub fn drift(&self, theta: f64) -> f64 {
        drift_b(Angle::new(theta), self.p, &self.a, self.tau)
    }

    /// Joint rotation `p → R p`, `A → R A Rᵀ`.
    pub fn rotated(&self, alpha: f64) -> Self {
        TerrainProfile {
            p: rotate_vec(self.p, alpha),
            a: self.a.rotated(alpha),
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = self.p.iter().all(|v| v.is_finite())
            && self.a.is_finite()
            && self.chi.is_finite()
            && self.tau.is_finite();
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidParams("terrain profile must be finite".into()))
        }
    }
}

/// Density samples at `θ_k = 2πk/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularDensity {
    pub values: Vec<f64>,
}

impl AngularDensity {
    pub fn n_grid(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        TAU * k as f64 / self.values.len() as f64
    }

    /// Periodic trapezoidal integral.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing()
    }

    pub fn uniform(n: usize) -> Self {
        AngularDensity {
            values: vec![1.0 / TAU; n],
        }
    }

    /// Indices of strict local maxima on the periodic grid, plateaus merged.
    pub fn local_maxima(&self) -> Vec<usize> {
        periodic_maxima(&self.values, 0.0)
    }

    /// `Σ |f - g| Δθ` against another density on the same grid.
    pub fn l1_distance(&self, other: &AngularDensity) -> f64 {
        assert_eq!(self.n_grid(), other.n_grid());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.spacing()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "theta,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.node(k), v)?;
        }
        Ok(())
    }
}

/// `exp(χH)` normalized by periodic trapezoidal quadrature.
pub fn stationary_density(profile: &TerrainProfile, n_grid: usize) -> Result<AngularDensity> {
    if n_grid < 16 {
        return Err(Error::InvalidParams(format!("n_grid must be >= 16 (got {n_grid})")));
    }
    profile.validate()?;
    let exponent: Vec<f64> = (0..n_grid)
        .map(|k| profile.chi * profile.potential(TAU * k as f64 / n_grid as f64))
        .collect();
    let shift = exponent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut values: Vec<f64> = exponent.iter().map(|e| (e - shift).exp()).collect();
    let z = values.iter().sum::<f64>() * TAU / n_grid as f64;
    for v in &mut values {
        *v /= z;
    }
    Ok(AngularDensity { values })
}

/// Bin averages of the stationary density over the histogram cells
/// `[θ_k - Δ/2, θ_k + Δ/2)`, by composite midpoint quadrature.
pub fn stationary_bin_averages(profile: &TerrainProfile, bins: usize) -> Result<AngularDensity> {
    let sub = 64;
    let fine = stationary_density(profile, bins * sub)?;
    let mut values = vec![0.0; bins];
    let n = fine.values.len();
    for (k, v) in values.iter_mut().enumerate() {
        // fine nodes k*sub - sub/2 .. k*sub + sub/2 with half weights at the ends
        let centre = k * sub;
        let mut acc = 0.0;
        for off in 0..=sub {
            let idx = (centre + n + off - sub / 2) % n;
            let w = if off == 0 || off == sub { 0.5 } else { 1.0 };
            acc += w * fine.values[idx];
        }
        *v = acc / sub as f64;
    }
    Ok(AngularDensity { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Uniform,
    Unimodal,
    Bimodal,
    /// More than two maxima, which the degree-two potential cannot produce.
    Degenerate,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Uniform => "uniform",
            Regime::Unimodal => "unimodal",
            Regime::Bimodal => "bimodal",
            Regime::Degenerate => "degenerate",
        })
    }
}

/// Strict local maxima of a periodic sequence; runs of values within `tol` of
/// each other count once, at their first index.
pub(crate) fn periodic_maxima(values: &[f64], tol: f64) -> Vec<usize> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    // compress into runs of (start index, value)
    let mut runs: Vec<(usize, f64)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match runs.last() {
            Some(&(_, last)) if (v - last).abs() <= tol => {}
            _ => runs.push((i, v)),
        }
    }
    if runs.len() > 1 && (runs[0].1 - runs[runs.len() - 1].1).abs() <= tol {
        // the wrap-around joins the last run to the first
        let (start, v) = runs.pop().unwrap();
        runs[0] = (start, v);
    }
    let m = runs.len();
    if m < 2 {
        return Vec::new();
    }
    (0..m)
        .filter(|&r| {
            let prev = runs[(r + m - 1) % m].1;
            let next = runs[(r + 1) % m].1;
            runs[r].1 > prev + tol && runs[r].1 > next + tol
        })
        .map(|r| runs[r].0)
        .collect()
}

pub fn classify(profile: &TerrainProfile, n_grid: usize) -> Result<Regime> {
    if n_grid < 256 {
        return Err(Error::InvalidParams(format!("classification needs n_grid >= 256 (got {n_grid})")));
    }
    profile.validate()?;
    let h: Vec<f64> = (0..n_grid)
        .map(|k| profile.potential(TAU * k as f64 / n_grid as f64))
        .collect();
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min < 1e-12 {
        return Ok(Regime::Uniform);
    }
    let tol = 1e-14 * max.abs().max(min.abs());
    Ok(match periodic_maxima(&h, tol).len() {
        0 | 1 => Regime::Unimodal,
        2 => Regime::Bimodal,
        _ => Regime::Degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutonomousRun {
    pub dt: f64,
    pub n_steps: u64,
    pub n_samples: usize,
    pub bins: usize,
    pub seed: u64,
}

impl AutonomousRun {
    fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            bad.push(format!("azimuthal.dt must be in (0, 1e-2] (got {})", self.dt));
        }
        if (self.n_steps as f64) * self.dt < 10.0 {
            bad.push(format!(
                "azimuthal run too short: steps·dt = {} < 10",
                self.n_steps as f64 * self.dt
            ));
        }
        if self.n_samples == 0 {
            bad.push("azimuthal.samples must be >= 1".into());
        }
        if self.bins < 4 {
            bad.push(format!("azimuthal.bins must be >= 4 (got {})", self.bins));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

/// Euler–Maruyama for `dΦ = χ B(Φ) dt + √2 dW` on the circle; returns the
/// occupation density over the second half of the run, binned on cells
/// centred at `2πk/bins`.
pub fn simulate_autonomous(profile: &TerrainProfile, run: &AutonomousRun) -> Result<AngularDensity> {
    run.validate()?;
    profile.validate()?;
    let rng = RngState::new(run.seed);
    let burn_in = run.n_steps / 2;
    let bins = run.bins;
    let width = TAU / bins as f64;
    let noise = (2.0 * run.dt).sqrt();
    let counts = (0..run.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.stream(i as u64);
            let mut counts = vec![0u64; bins];
            // start from the stationary-independent point 0
            let mut phi = 0.0f64;
            for step in 0..run.n_steps {
                let z: f64 = StandardNormal.sample(&mut r);
                phi += profile.chi * profile.drift(phi) * run.dt + noise * z;
                phi = crate::geometry::wrap(phi, TAU);
                if step >= burn_in {
                    let b = ((phi / width + 0.5) as usize) % bins;
                    counts[b] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let total: u64 = counts.iter().sum();
    let values = counts
        .iter()
        .map(|&c| c as f64 / (total as f64 * width))
        .collect();
    Ok(AngularDensity { values })
}
