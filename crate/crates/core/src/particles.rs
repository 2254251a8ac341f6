//! Interacting particle simulation on the unit torus.
//!
//! Every particle owns the Fourier coefficients of the field it deposits; the
//! field steering particle `i` is the total minus its own contribution, so one
//! step costs `O(N · N_F²)`. Positions and angles advance by Euler–Maruyama
//! with the field frozen at the start of the step, then each own field takes an
//! implicit-Euler step sourced by a regularized Dirac mass at the new position.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{unit_direction, Angle, TorusPoint};
use crate::model::{drift_b, ModelParams};
use crate::spectral::{
    axpy, axpy_in_place, decay_denominators, eval_probe_difference, phases, CoefficientGrid,
    RateConvention,
};

/// Particles per block in the deterministic field reduction.
const REDUCTION_CHUNK: usize = 64;

/// Law of the initial particle states.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    /// Uniform positions and angles.
    Uniform,
    /// Every particle at the same state.
    Dirac { x: TorusPoint, theta: Angle },
    /// Wrapped normal positions around `x` with standard deviation `spread`, uniform angles.
    GaussianWrapped { x: TorusPoint, spread: f64 },
    /// Positions wrapped-normal around the vertical line `x₁ = x1`, angles
    /// pointing along it (π/2 or 3π/2) up to `spread` radians of noise.
    NearTrail { x1: f64, spread: f64 },
}

/// Initial chemical field `c₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldInit {
    Zero,
    Constant(f64),
    /// `amplitude · cos(2π(x₁ - x1))`, a ridge along `x₁ = x1`.
    Trail { x1: f64, amplitude: f64 },
}

impl FieldInit {
    pub fn coefficients(&self, n_f: usize) -> CoefficientGrid {
        let mut g = CoefficientGrid::zeros(n_f);
        match *self {
            FieldInit::Zero => {}
            FieldInit::Constant(v) => g.set(0, 0, Complex64::new(v, 0.0)),
            FieldInit::Trail { x1, amplitude } => {
                // cos(2π(x - x1)) = Re(e^{-i2πx1} e^{i2πx})
                let (s, c) = (TAU * x1).sin_cos();
                let h = Complex64::new(c, -s) * (0.5 * amplitude);
                g.set(1, 0, h);
                g.set(-1, 0, h.conj());
            }
        }
        g
    }
}

/// When to write snapshots. Step 0 and the final step are always included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Stride(u64),
    /// `count` steps spaced geometrically in `[1, n_t]`.
    Geometric(u64),
}

impl Schedule {
    pub fn steps(&self, n_t: u64) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        out.insert(0);
        out.insert(n_t);
        match *self {
            Schedule::Stride(s) => {
                let s = s.max(1);
                out.extend((0..=n_t).step_by(s as usize));
            }
            Schedule::Geometric(count) if n_t > 0 && count > 1 => {
                let last = (n_t as f64).ln();
                for k in 0..count {
                    let v = (last * k as f64 / (count - 1) as f64).exp().round() as u64;
                    out.insert(v.clamp(1, n_t));
                }
            }
            Schedule::Geometric(_) => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleConfig {
    pub n: usize,
    pub n_f: usize,
    pub dt: f64,
    pub steps: u64,
    /// Dirac regularization time; `None` means `dt`.
    pub eps: Option<f64>,
    pub rate_convention: RateConvention,
    pub init: InitialLaw,
    pub field_init: FieldInit,
    /// Re-sum own fields and compare to the running total every this many steps.
    pub resync_every: u64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    pub schedule: Schedule,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        ParticleConfig {
            n: 1000,
            n_f: 8,
            dt: 0.01,
            steps: 1000,
            eps: None,
            rate_convention: RateConvention::Physical,
            init: InitialLaw::Uniform,
            field_init: FieldInit::Zero,
            resync_every: 50,
            threads: 0,
            schedule: Schedule::Geometric(8),
        }
    }
}

impl ParticleConfig {
    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.n < 2 {
            bad.push(format!("particles.n must be >= 2 (got {})", self.n));
        }
        if self.n_f < 1 || self.n_f > 64 {
            bad.push(format!("particles.n_f must be in 1..=64 (got {})", self.n_f));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push(format!("particles.dt must be > 0 (got {})", self.dt));
        }
        if let Some(e) = self.eps {
            if !(e >= 0.0 && e.is_finite()) {
                bad.push(format!("particles.eps must be >= 0 (got {e})"));
            }
        }
        if self.resync_every == 0 {
            bad.push("particles.resync_every must be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub step_index: u64,
    pub dt: f64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        SimClock { step_index: 0, dt }
    }

    pub fn t(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    pub fn tick(&mut self) {
        self.step_index += 1;
    }
}

/// Seed from which every per-particle stream is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed }
    }

    /// Independent stream for particle (or sample path) `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone)]
pub struct ParticleState {
    pub xs: Vec<TorusPoint>,
    pub thetas: Vec<Angle>,
    pub own_fields: Vec<CoefficientGrid>,
    pub total_field: CoefficientGrid,
    rngs: Vec<ChaCha8Rng>,
}

impl ParticleState {
    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn n_f(&self) -> usize {
        self.total_field.n_f()
    }

    /// Re-sums the own fields in the fixed reduction order.
    pub fn resummed_total(&self) -> CoefficientGrid {
        let n_f = self.n_f();
        let partials: Vec<CoefficientGrid> = self
            .own_fields
            .par_chunks(REDUCTION_CHUNK)
            .map(|chunk| {
                let mut acc = CoefficientGrid::zeros(n_f);
                for f in chunk {
                    axpy_in_place(&mut acc, 1.0, f);
                }
                acc
            })
            .collect();
        let mut total = CoefficientGrid::zeros(n_f);
        for p in &partials {
            axpy_in_place(&mut total, 1.0, p);
        }
        total
    }

    /// Largest mode-wise gap between the running total and the re-summed one,
    /// relative to the largest coefficient.
    pub fn total_drift(&self) -> f64 {
        let resum = self.resummed_total();
        let scale = resum.max_abs().max(f64::MIN_POSITIVE);
        resum
            .coeffs()
            .iter()
            .zip(self.total_field.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

fn wrapped_normal(rng: &mut ChaCha8Rng, center: f64, spread: f64, period: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    crate::geometry::wrap(center + spread * z, period)
}

/// Samples `n` i.i.d. states from the initial law and splits `c₀` evenly
/// across the own fields.
pub fn init(cfg: &ParticleConfig, rng: &RngState) -> Result<ParticleState> {
    cfg.validate()?;
    let n = cfg.n;
    let mut rngs: Vec<ChaCha8Rng> = (0..n as u64).map(|i| rng.stream(i)).collect();
    let mut xs = Vec::with_capacity(n);
    let mut thetas = Vec::with_capacity(n);
    for r in rngs.iter_mut() {
        let (x, th) = match &cfg.init {
            InitialLaw::Uniform => (
                TorusPoint::new(r.random::<f64>(), r.random::<f64>()),
                Angle::new(TAU * r.random::<f64>()),
            ),
            InitialLaw::Dirac { x, theta } => (*x, *theta),
            InitialLaw::GaussianWrapped { x, spread } => (
                TorusPoint::new(
                    wrapped_normal(r, x.x1(), *spread, 1.0),
                    wrapped_normal(r, x.x2(), *spread, 1.0),
                ),
                Angle::new(TAU * r.random::<f64>()),
            ),
            InitialLaw::NearTrail { x1, spread } => {
                let p = TorusPoint::new(wrapped_normal(r, *x1, *spread, 1.0), r.random::<f64>());
                let base = if r.random::<bool>() { 0.5 * PI } else { 1.5 * PI };
                (p, Angle::new(wrapped_normal(r, base, *spread, TAU)))
            }
        };
        xs.push(x);
        thetas.push(th);
    }
    let c0 = cfg.field_init.coefficients(cfg.n_f);
    let mut share = c0.clone();
    share.scale(1.0 / n as f64);
    let own_fields = vec![share; n];
    let mut state = ParticleState {
        xs,
        thetas,
        own_fields,
        total_field: c0,
        rngs,
    };
    // the even split is only exact up to rounding; keep the invariant literal
    state.total_field = state.resummed_total();
    Ok(state)
}

/// `total − own_fields[i]`, one axpy.
pub fn exclusion_field(state: &ParticleState, i: usize) -> Result<CoefficientGrid> {
    if state.n() < 2 {
        return Err(Error::InvalidParams(format!(
            "exclusion needs at least two particles (have {})",
            state.n()
        )));
    }
    if i >= state.n() {
        return Err(Error::InvalidParams(format!(
            "particle index {i} out of range for n={}",
            state.n()
        )));
    }
    Ok(axpy(&state.total_field, -1.0, &state.own_fields[i]))
}

/// Per-step constants shared by all particles.
pub struct StepKernel {
    denom: Vec<f64>,
    damp: Vec<f64>,
    weight: f64,
    dt: f64,
    gamma: f64,
}

impl StepKernel {
    pub fn new(params: &ModelParams, cfg: &ParticleConfig, n: usize) -> Self {
        let conv = cfg.rate_convention;
        let n_f = cfg.n_f;
        let eps = cfg.eps();
        let nn = n_f as i32;
        let mut damp = Vec::with_capacity((2 * n_f + 1).pow(2));
        for xi in -nn..=nn {
            for zeta in -nn..=nn {
                damp.push(if eps == 0.0 {
                    1.0
                } else {
                    (-params.sigma_c * eps * conv.kappa(xi, zeta)).exp()
                });
            }
        }
        StepKernel {
            denom: decay_denominators(n_f, cfg.dt, params.gamma, params.sigma_c, conv),
            damp,
            weight: params.mu / (n as f64 - 1.0),
            dt: cfg.dt,
            gamma: params.gamma,
        }
    }

    /// Expected `(0,0)` mode of the total after one step from `c00`.
    pub fn zero_mode_update(&self, c00: f64, n: usize) -> f64 {
        (c00 + self.dt * self.weight * n as f64) / (1.0 + self.dt * self.gamma)
    }
}

/// One Euler–Maruyama step for every particle followed by the implicit field update.
pub fn em_step(
    state: &mut ParticleState,
    params: &ModelParams,
    kernel: &StepKernel,
    clock: &mut SimClock,
) -> Result<()> {
    let dt = clock.dt;
    let n_f = state.n_f();
    let noise_x = (2.0 * params.sigma_x * dt).sqrt();
    let noise_th = (2.0 * params.sigma_theta * dt).sqrt();
    let total = &state.total_field;

    state
        .xs
        .par_iter_mut()
        .zip(state.thetas.par_iter_mut())
        .zip(state.own_fields.par_iter())
        .zip(state.rngs.par_iter_mut())
        .for_each(|(((x, th), own), rng)| {
            let probe = eval_probe_difference(total, own, *x);
            let v = unit_direction(*th);
            let b = drift_b(*th, probe.grad, &probe.hess, params.tau);
            let eta: f64 = StandardNormal.sample(rng);
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            let new_th = th.rotate(params.chi * b * dt + noise_th * eta);
            *x = x.translate([
                params.lambda * v[0] * dt + noise_x * z1,
                params.lambda * v[1] * dt + noise_x * z2,
            ]);
            *th = new_th;
        });

    // deposit at the new positions; sources summed per fixed-size chunk
    let side = 2 * n_f + 1;
    let scale = kernel.dt * kernel.weight;
    let partials: Vec<Vec<Complex64>> = state
        .own_fields
        .par_chunks_mut(REDUCTION_CHUNK)
        .zip(state.xs.par_chunks(REDUCTION_CHUNK))
        .map(|(fields, xs)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); side * side];
            for (field, x) in fields.iter_mut().zip(xs) {
                let e1 = phases(x.x1(), n_f);
                let e2 = phases(x.x2(), n_f);
                let coeffs = field.coeffs_mut();
                for (a, p1) in e1.iter().enumerate() {
                    for (b, p2) in e2.iter().enumerate() {
                        let m = a * side + b;
                        let s = p1 * p2 * kernel.damp[m];
                        acc[m] += s;
                        coeffs[m] = (coeffs[m] + s * scale) / kernel.denom[m];
                    }
                }
            }
            acc
        })
        .collect();

    let c00_before = state.total_field.get(0, 0).re;
    let mut sources = vec![Complex64::new(0.0, 0.0); side * side];
    for p in &partials {
        for (s, v) in sources.iter_mut().zip(p) {
            *s += v;
        }
    }
    for ((c, s), d) in state
        .total_field
        .coeffs_mut()
        .iter_mut()
        .zip(&sources)
        .zip(&kernel.denom)
    {
        *c = (*c + s * scale) / d;
    }
    clock.tick();

    let expected = kernel.zero_mode_update(c00_before, state.n());
    let got = state.total_field.get(0, 0).re;
    if (got - expected).abs() > 1e-12 * expected.abs().max(1.0) {
        return Err(Error::Invariant(format!(
            "zero mode {got} departs from scalar recurrence {expected} at step {}",
            clock.step_index
        )));
    }
    Ok(())
}

/// Receives snapshots from [`run`].
pub trait SnapshotSink: Send {
    fn snapshot(&mut self, clock: &SimClock, state: &ParticleState) -> Result<()>;
}

/// A sink that keeps nothing.
pub struct NullSink;

impl SnapshotSink for NullSink {
    fn snapshot(&mut self, _: &SimClock, _: &ParticleState) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub steps: u64,
    /// Wall time of each step, seconds.
    pub step_seconds: Vec<f64>,
    /// Largest relative drift seen at a resync.
    pub max_total_drift: f64,
}

impl RunSummary {
    pub fn median_step_seconds(&self) -> f64 {
        median(&self.step_seconds)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Initializes and advances `cfg.steps` steps, emitting snapshots on schedule.
pub fn run(
    params: &ModelParams,
    cfg: &ParticleConfig,
    seed: u64,
    sink: &mut dyn SnapshotSink,
) -> Result<(ParticleState, RunSummary)> {
    params.validate()?;
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(params, cfg, seed, sink))
}

fn run_in_pool(
    params: &ModelParams,
    cfg: &ParticleConfig,
    seed: u64,
    sink: &mut dyn SnapshotSink,
) -> Result<(ParticleState, RunSummary)> {
    let mut state = init(cfg, &RngState::new(seed))?;
    let kernel = StepKernel::new(params, cfg, cfg.n);
    let mut clock = SimClock::new(cfg.dt);
    let emit = cfg.schedule.steps(cfg.steps);
    let mut summary = RunSummary::default();
    sink.snapshot(&clock, &state)?;
    for _ in 0..cfg.steps {
        let start = Instant::now();
        em_step(&mut state, params, &kernel, &mut clock)?;
        summary.step_seconds.push(start.elapsed().as_secs_f64());
        if clock.step_index % cfg.resync_every == 0 {
            let drift = state.total_drift();
            summary.max_total_drift = summary.max_total_drift.max(drift);
            if drift > 1e-9 {
                return Err(Error::Invariant(format!(
                    "total field drifted {drift:.3e} from the sum of own fields at step {}",
                    clock.step_index
                )));
            }
            state.total_field = state.resummed_total();
        }
        if emit.contains(&clock.step_index) {
            sink.snapshot(&clock, &state)?;
        }
    }
    summary.steps = clock.step_index;
    Ok((state, summary))
}

/// `L^p` norms (`p = ∞` as `f64::INFINITY`) of the binned position density on
/// a `bins × bins` grid of the torus.
pub fn position_density_norm(state: &ParticleState, bins: usize, p: f64) -> f64 {
    let mut counts = vec![0usize; bins * bins];
    for x in &state.xs {
        let i = ((x.x1() * bins as f64) as usize).min(bins - 1);
        let j = ((x.x2() * bins as f64) as usize).min(bins - 1);
        counts[i * bins + j] += 1;
    }
    let cell = 1.0 / (bins * bins) as f64;
    let dens: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (state.n() as f64 * cell))
        .collect();
    lp_norm(&dens, cell, p)
}

/// Discrete `L^p` norm with cell measure `w`.
pub fn lp_norm(values: &[f64], w: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * w).powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_params() -> ModelParams {
        ModelParams {
            lambda: 1.0,
            chi: 0.0,
            tau: 0.0,
            sigma_x: 1e-300,
            sigma_theta: 1e-300,
            sigma_c: 1.0,
            gamma: 1.0,
            mu: 1.0,
        }
    }

    fn cfg(n: usize) -> ParticleConfig {
        ParticleConfig {
            n,
            n_f: 2,
            dt: 0.01,
            steps: 0,
            ..ParticleConfig::default()
        }
    }

    #[test]
    fn dirac_law_puts_everyone_together() {
        let c = ParticleConfig {
            init: InitialLaw::Dirac {
                x: TorusPoint::new(0.5, 0.5),
                theta: Angle::new(0.0),
            },
            ..cfg(17)
        };
        let s = init(&c, &RngState::new(1)).unwrap();
        assert!(s.xs.iter().all(|x| *x == TorusPoint::new(0.5, 0.5)));
        assert!(s.thetas.iter().all(|t| t.value() == 0.0));
        assert!(s.total_field.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn uniform_law_mean_is_centered() {
        let n = 10_000;
        let s = init(&cfg(n), &RngState::new(7)).unwrap();
        let m1 = s.xs.iter().map(|x| x.x1()).sum::<f64>() / n as f64;
        let m2 = s.xs.iter().map(|x| x.x2()).sum::<f64>() / n as f64;
        let bound = 4.0 / (n as f64).sqrt();
        assert!((m1 - 0.5).abs() < bound && (m2 - 0.5).abs() < bound);
    }

    #[test]
    fn even_split_of_initial_field() {
        let c = ParticleConfig {
            field_init: FieldInit::Trail {
                x1: 0.3,
                amplitude: 0.4,
            },
            ..cfg(10)
        };
        let s = init(&c, &RngState::new(3)).unwrap();
        let c0 = c.field_init.coefficients(2);
        for (a, b) in s.total_field.coeffs().iter().zip(c0.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(s.total_field.hermitian_defect(), 0.0);
    }

    #[test]
    fn deterministic_free_motion_and_wrap() {
        let params = quiet_params();
        let c = ParticleConfig {
            dt: 0.02,
            init: InitialLaw::Dirac {
                x: TorusPoint::new(0.99, 0.5),
                theta: Angle::new(0.0),
            },
            ..cfg(3)
        };
        let mut s = init(&c, &RngState::new(0)).unwrap();
        let k = StepKernel::new(&params, &c, 3);
        let mut clock = SimClock::new(c.dt);
        em_step(&mut s, &params, &k, &mut clock).unwrap();
        for (x, th) in s.xs.iter().zip(&s.thetas) {
            assert!((x.x1() - 0.01).abs() < 1e-12);
            assert!((x.x2() - 0.5).abs() < 1e-12);
            assert!(th.value() < 1e-100 || th.value() > TAU - 1e-100);
        }
        assert_eq!(clock.step_index, 1);
        assert!((clock.t() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn exclusion_identities() {
        let c = ParticleConfig {
            field_init: FieldInit::Constant(0.0),
            ..cfg(2)
        };
        let params = ModelParams::default();
        let mut s = init(&c, &RngState::new(9)).unwrap();
        let k = StepKernel::new(&params, &c, 2);
        let mut clock = SimClock::new(c.dt);
        for _ in 0..5 {
            em_step(&mut s, &params, &k, &mut clock).unwrap();
        }
        let e0 = exclusion_field(&s, 0).unwrap();
        for (a, b) in e0.coeffs().iter().zip(s.own_fields[1].coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }

        let c5 = cfg(5);
        let mut s = init(&c5, &RngState::new(9)).unwrap();
        let k = StepKernel::new(&params, &c5, 5);
        for _ in 0..5 {
            em_step(&mut s, &params, &k, &mut clock).unwrap();
        }
        let mut sum = CoefficientGrid::zeros(2);
        for i in 0..5 {
            axpy_in_place(&mut sum, 1.0, &exclusion_field(&s, i).unwrap());
        }
        let expect = axpy(&CoefficientGrid::zeros(2), 4.0, &s.total_field);
        for (a, b) in sum.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }

        s.own_fields[2] = CoefficientGrid::zeros(2);
        assert_eq!(exclusion_field(&s, 2).unwrap(), s.total_field);
        assert!(exclusion_field(&s, 5).is_err());
    }

    #[test]
    fn exclusion_rejects_single_particle() {
        let mut s = init(&cfg(2), &RngState::new(0)).unwrap();
        s.xs.truncate(1);
        assert!(exclusion_field(&s, 0).is_err());
    }

    #[test]
    fn config_validation_collects_all() {
        let bad = ParticleConfig {
            n: 1,
            n_f: 0,
            dt: -1.0,
            resync_every: 0,
            ..ParticleConfig::default()
        };
        match bad.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(Schedule::Stride(5).steps(0).into_iter().collect::<Vec<_>>(), vec![0]);
        assert_eq!(
            Schedule::Stride(4).steps(10).into_iter().collect::<Vec<_>>(),
            vec![0, 4, 8, 10]
        );
        let g = Schedule::Geometric(8).steps(1000);
        assert!(g.contains(&1) && g.contains(&1000) && g.len() == 9);
    }
}
