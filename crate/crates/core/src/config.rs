//! Flat `section.key = value` run configuration.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! line       := blank | comment | header | assignment
//! comment    := '#' anything
//! header     := '[' ident ']'
//! assignment := key '=' value [comment]
//! key        := ident | ident '.' ident
//! value      := '"' text '"' | 'true' | 'false' | number | ident
//! ```
//!
//! A key without a dot inside a `[section]` belongs to that section; outside
//! any section it is a top-level key (`mode`, `seed`, `preset`, `out`). A
//! `preset` key loads the named catalog entry first, then every explicit key
//! overrides it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fd::linalg::SolverSettings;
use crate::fd::{AdvectionScheme, FdParams, NegativityPolicy, ProductionSpec};
use crate::geometry::{HessianSym, TorusPoint};
use crate::kernels::{log_spaced, KernelStudy, XDomain};
use crate::model::ModelParams;
use crate::particles::{FieldInit, InitialLaw, ParticleConfig, Schedule};
use crate::presets;
use crate::spectral::RateConvention;

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const NAMES: &'static [&'static str] = &[$($text),+];
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("'{other}' is not one of {}", $name::NAMES.join(", "))),
                }
            }
        }
    };
}

keyword_enum!(Mode {
    Particles => "particles",
    Fd => "fd",
    Fd2State => "fd2state",
    Azimuthal => "azimuthal",
    Kernels => "kernels",
});

keyword_enum!(
    /// Initial particle law.
    InitKind {
        Uniform => "uniform",
        Dirac => "dirac",
        Gaussian => "gaussian",
        NearTrail => "near_trail",
    }
);

keyword_enum!(FieldKind {
    Zero => "zero",
    Constant => "constant",
    Trail => "trail",
});

keyword_enum!(ScheduleKind {
    Stride => "stride",
    Geometric => "geometric",
});

keyword_enum!(TransitionKind {
    Identity => "identity",
    UTurn => "u_turn",
    Convolution => "convolution",
});

/// A scalar as written in the source; numbers keep their text so integers
/// are parsed exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Num(String),
    Bool(bool),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Str(s) => format!("\"{s}\""),
            Value::Num(n) => n.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }

    fn num(v: f64) -> Value {
        Value::Num(format!("{v:?}"))
    }

    fn int(v: u64) -> Value {
        Value::Num(v.to_string())
    }

    fn text<T: fmt::Display>(v: T) -> Value {
        Value::Str(v.to_string())
    }

    fn as_f64(&self) -> std::result::Result<f64, String> {
        match self {
            Value::Num(n) => n
                .parse::<f64>()
                .map_err(|_| format!("'{n}' is not a number")),
            other => Err(format!("expected a number, found {}", other.render())),
        }
    }

    fn as_u64(&self) -> std::result::Result<u64, String> {
        match self {
            Value::Num(n) => n.parse::<u64>().or_else(|_| {
                let v: f64 = n.parse().map_err(|_| format!("'{n}' is not a number"))?;
                if v >= 0.0 && v.fract() == 0.0 && v < 9.0e15 {
                    Ok(v as u64)
                } else {
                    Err(format!("'{n}' is not a nonnegative integer"))
                }
            }),
            other => Err(format!("expected an integer, found {}", other.render())),
        }
    }

    fn as_usize(&self) -> std::result::Result<usize, String> {
        self.as_u64().map(|v| v as usize)
    }

    fn as_bool(&self) -> std::result::Result<bool, String> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(format!("expected true or false, found {}", other.render())),
        }
    }

    fn as_str(&self) -> std::result::Result<&str, String> {
        match self {
            Value::Str(s) => Ok(s),
            other => Err(format!("expected a string, found {}", other.render())),
        }
    }

    fn parse_as<T: FromStr<Err = String>>(&self) -> std::result::Result<T, String> {
        self.as_str()?.parse()
    }
}

/// Key/value pairs with the line each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, (Value, usize)>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_value(text: &str) -> std::result::Result<Value, String> {
    if let Some(rest) = text.strip_prefix('"') {
        return match rest.find('"') {
            Some(end) if rest[end + 1..].trim().is_empty() => Ok(Value::Str(rest[..end].to_string())),
            Some(_) => Err("unexpected text after closing quote".into()),
            None => Err("unterminated string".into()),
        };
    }
    match text {
        "" => Err("missing value".into()),
        "true" => Ok(Value::Bool(true)),
        "false" => Ok(Value::Bool(false)),
        _ if text.parse::<f64>().is_ok() => Ok(Value::Num(text.to_string())),
        _ if is_ident(text) => Ok(Value::Str(text.to_string())),
        _ => Err(format!("cannot read value '{text}'")),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

/// First pass: syntax only. Every problem is reported, with line numbers.
pub fn parse_raw(text: &str) -> Result<RawConfig> {
    let mut raw = RawConfig::default();
    let mut errors = Vec::new();
    let mut section: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let n = idx + 1;
        let line = strip_comment(line).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            match inner.strip_suffix(']').map(str::trim) {
                Some(name) if is_ident(name) => section = Some(name.to_string()),
                _ => errors.push(format!("line {n}: malformed section header '{line}'")),
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {n}: expected 'key = value', found '{line}'"));
            continue;
        };
        let key = key.trim();
        let parts: Vec<&str> = key.split('.').collect();
        let full = match (parts.as_slice(), &section) {
            ([k], None) if is_ident(k) => k.to_string(),
            ([k], Some(s)) if is_ident(k) => format!("{s}.{k}"),
            ([s, k], None) if is_ident(s) && is_ident(k) => key.to_string(),
            ([_, _], Some(s)) => {
                errors.push(format!(
                    "line {n}: dotted key '{key}' inside section [{s}] nests too deep"
                ));
                continue;
            }
            _ => {
                errors.push(format!("line {n}: invalid key '{key}'"));
                continue;
            }
        };
        let value = match parse_value(value.trim()) {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("line {n}: {e}"));
                continue;
            }
        };
        if let Some((_, first)) = raw.entries.get(&full) {
            errors.push(format!(
                "line {n}: duplicate key '{full}' (first set on line {first}, again on line {n})"
            ));
            continue;
        }
        raw.entries.insert(full, (value, n));
    }
    if errors.is_empty() {
        Ok(raw)
    } else {
        Err(Error::Config(errors))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSection {
    pub n: usize,
    pub n_f: usize,
    pub dt: f64,
    pub steps: u64,
    pub eps: Option<f64>,
    pub rate_convention: RateConvention,
    pub init: InitKind,
    pub init_x1: f64,
    pub init_x2: f64,
    pub init_theta: f64,
    pub init_spread: f64,
    pub field: FieldKind,
    pub field_value: f64,
    pub field_x1: f64,
    pub field_amplitude: f64,
    pub resync_every: u64,
    pub threads: usize,
    pub schedule: ScheduleKind,
    pub schedule_value: u64,
    /// Histogram resolution per axis for the position-density diagnostic.
    pub density_bins: usize,
}

impl Default for ParticleSection {
    fn default() -> Self {
        let base = ParticleConfig::default();
        ParticleSection {
            n: base.n,
            n_f: base.n_f,
            dt: base.dt,
            steps: base.steps,
            eps: None,
            rate_convention: base.rate_convention,
            init: InitKind::Uniform,
            init_x1: 0.5,
            init_x2: 0.5,
            init_theta: 0.0,
            init_spread: 0.05,
            field: FieldKind::Zero,
            field_value: 0.0,
            field_x1: 0.5,
            field_amplitude: 0.05,
            resync_every: base.resync_every,
            threads: 0,
            schedule: ScheduleKind::Geometric,
            schedule_value: 8,
            density_bins: 16,
        }
    }
}

impl ParticleSection {
    pub fn to_config(&self) -> ParticleConfig {
        let init = match self.init {
            InitKind::Uniform => InitialLaw::Uniform,
            InitKind::Dirac => InitialLaw::Dirac {
                x: TorusPoint::new(self.init_x1, self.init_x2),
                theta: self.init_theta.into(),
            },
            InitKind::Gaussian => InitialLaw::GaussianWrapped {
                x: TorusPoint::new(self.init_x1, self.init_x2),
                spread: self.init_spread,
            },
            InitKind::NearTrail => InitialLaw::NearTrail {
                x1: self.init_x1,
                spread: self.init_spread,
            },
        };
        let field_init = match self.field {
            FieldKind::Zero => FieldInit::Zero,
            FieldKind::Constant => FieldInit::Constant(self.field_value),
            FieldKind::Trail => FieldInit::Trail {
                x1: self.field_x1,
                amplitude: self.field_amplitude,
            },
        };
        let schedule = match self.schedule {
            ScheduleKind::Stride => Schedule::Stride(self.schedule_value),
            ScheduleKind::Geometric => Schedule::Geometric(self.schedule_value),
        };
        ParticleConfig {
            n: self.n,
            n_f: self.n_f,
            dt: self.dt,
            steps: self.steps,
            eps: self.eps,
            rate_convention: self.rate_convention,
            init,
            field_init,
            resync_every: self.resync_every,
            threads: self.threads,
            schedule,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdSection {
    pub n_x: usize,
    pub n_theta: usize,
    pub dt: f64,
    pub t_max: f64,
    pub steady_tol: f64,
    pub verbatim: bool,
    pub advection: AdvectionScheme,
    pub negativity: NegativityPolicy,
    pub solver_tol: f64,
    pub max_iter: usize,
    /// Initial density is `mass/(2π)` everywhere.
    pub mass: f64,
    /// Initial field `c_level + c_amplitude·cos(2π·c_mode·x)`.
    pub c_level: f64,
    pub c_amplitude: f64,
    pub c_mode: u32,
    pub snapshot_every: u64,
}

impl Default for FdSection {
    fn default() -> Self {
        let solver = SolverSettings::default();
        FdSection {
            n_x: 128,
            n_theta: 64,
            dt: 1e-3,
            t_max: 1.0,
            steady_tol: 1e-6,
            verbatim: false,
            advection: AdvectionScheme::Centered,
            negativity: NegativityPolicy::Abort,
            solver_tol: solver.tol,
            max_iter: solver.max_iter,
            mass: 1.0,
            c_level: 0.0,
            c_amplitude: 0.0,
            c_mode: 1,
            snapshot_every: 100,
        }
    }
}

impl FdSection {
    pub fn params(&self, model: &ModelParams) -> FdParams {
        FdParams {
            model: *model,
            verbatim: self.verbatim,
            advection: self.advection,
            negativity: self.negativity,
            solver: SolverSettings {
                tol: self.solver_tol,
                max_iter: self.max_iter,
            },
        }
    }

    pub fn initial_field(&self) -> Vec<f64> {
        (0..self.n_x)
            .map(|j| {
                let x = j as f64 / self.n_x as f64;
                self.c_level
                    + self.c_amplitude * (std::f64::consts::TAU * self.c_mode as f64 * x).cos()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStateSection {
    /// `α(x) = max(0, alpha_rate + alpha_amplitude·cos 2πx)`.
    pub alpha_rate: f64,
    pub alpha_amplitude: f64,
    pub beta_rate: f64,
    pub beta_amplitude: f64,
    pub transition: TransitionKind,
    /// Standard deviation of the wrapped normal convolution kernel.
    pub kernel_spread: f64,
    pub production: ProductionSpec,
    pub smell_gamma: f64,
    pub smell_sigma: f64,
    pub smell_chi_alpha: f64,
    pub smell_chi_beta: f64,
    /// Share of the initial mass in state α.
    pub alpha_fraction: f64,
}

impl Default for TwoStateSection {
    fn default() -> Self {
        TwoStateSection {
            alpha_rate: 0.5,
            alpha_amplitude: 0.0,
            beta_rate: 0.5,
            beta_amplitude: 0.0,
            transition: TransitionKind::UTurn,
            kernel_spread: 0.5,
            production: ProductionSpec::default(),
            smell_gamma: 1.0,
            smell_sigma: 0.1,
            smell_chi_alpha: 0.0,
            smell_chi_beta: 0.0,
            alpha_fraction: 0.5,
        }
    }
}

impl TwoStateSection {
    pub fn rates(&self, n_x: usize) -> (Vec<f64>, Vec<f64>) {
        let sample = |base: f64, amp: f64| -> Vec<f64> {
            (0..n_x)
                .map(|j| {
                    let x = j as f64 / n_x as f64;
                    (base + amp * (std::f64::consts::TAU * x).cos()).max(0.0)
                })
                .collect()
        };
        (
            sample(self.alpha_rate, self.alpha_amplitude),
            sample(self.beta_rate, self.beta_amplitude),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AzimuthalSection {
    pub p: [f64; 2],
    pub a: HessianSym,
    pub dt: f64,
    pub t_end: f64,
    pub samples: usize,
    pub bins: usize,
    pub n_grid: usize,
}

impl Default for AzimuthalSection {
    fn default() -> Self {
        AzimuthalSection {
            p: [0.0, 0.0],
            a: HessianSym::ZERO,
            dt: 1e-3,
            t_end: 20.0,
            samples: 10_000,
            bins: 64,
            n_grid: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSection {
    pub domain: XDomain,
    pub p_values: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub semigroup_n: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            domain: XDomain::Circle2Pi,
            p_values: vec![1.0, 2.0, 5.0],
            t_min: 1e-3,
            t_max: 1e-1,
            n_t: 9,
            semigroup_n: 256,
        }
    }
}

impl KernelSection {
    pub fn study(&self) -> KernelStudy {
        KernelStudy {
            domain: self.domain,
            ps: self.p_values.clone(),
            ts: log_spaced(self.t_min, self.t_max, self.n_t),
        }
    }
}

fn render_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{s}' in list is not a number"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub preset: Option<String>,
    pub out: Option<String>,
    pub model: ModelParams,
    pub particles: ParticleSection,
    pub fd: FdSection,
    pub two_state: TwoStateSection,
    pub azimuthal: AzimuthalSection,
    pub kernels: KernelSection,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode,
            seed: 0,
            preset: None,
            out: None,
            model: ModelParams::default(),
            particles: ParticleSection::default(),
            fd: FdSection::default(),
            two_state: TwoStateSection::default(),
            azimuthal: AzimuthalSection::default(),
            kernels: KernelSection::default(),
        }
    }

    /// Applies one key. `mode` and `preset` are handled by the caller.
    fn set(&mut self, key: &str, v: &Value) -> std::result::Result<(), String> {
        let m = &mut self.model;
        let p = &mut self.particles;
        let fd = &mut self.fd;
        let ts = &mut self.two_state;
        let az = &mut self.azimuthal;
        let k = &mut self.kernels;
        match key {
            "seed" => self.seed = v.as_u64()?,
            "out" => self.out = Some(v.as_str()?.to_string()),

            "model.lambda" => m.lambda = v.as_f64()?,
            "model.chi" => m.chi = v.as_f64()?,
            "model.tau" => m.tau = v.as_f64()?,
            "model.sigma_x" => m.sigma_x = v.as_f64()?,
            "model.sigma_theta" => m.sigma_theta = v.as_f64()?,
            "model.sigma_c" => m.sigma_c = v.as_f64()?,
            "model.gamma" => m.gamma = v.as_f64()?,
            "model.mu" => m.mu = v.as_f64()?,

            "particles.n" => p.n = v.as_usize()?,
            "particles.n_f" => p.n_f = v.as_usize()?,
            "particles.dt" => p.dt = v.as_f64()?,
            "particles.steps" => p.steps = v.as_u64()?,
            "particles.eps" => p.eps = Some(v.as_f64()?),
            "particles.rate_convention" => p.rate_convention = v.parse_as()?,
            "particles.init" => p.init = v.parse_as()?,
            "particles.init_x1" => p.init_x1 = v.as_f64()?,
            "particles.init_x2" => p.init_x2 = v.as_f64()?,
            "particles.init_theta" => p.init_theta = v.as_f64()?,
            "particles.init_spread" => p.init_spread = v.as_f64()?,
            "particles.field" => p.field = v.parse_as()?,
            "particles.field_value" => p.field_value = v.as_f64()?,
            "particles.field_x1" => p.field_x1 = v.as_f64()?,
            "particles.field_amplitude" => p.field_amplitude = v.as_f64()?,
            "particles.resync_every" => p.resync_every = v.as_u64()?,
            "particles.threads" => p.threads = v.as_usize()?,
            "particles.schedule" => p.schedule = v.parse_as()?,
            "particles.schedule_value" => p.schedule_value = v.as_u64()?,
            "particles.density_bins" => p.density_bins = v.as_usize()?,

            "fd.n_x" => fd.n_x = v.as_usize()?,
            "fd.n_theta" => fd.n_theta = v.as_usize()?,
            "fd.dt" => fd.dt = v.as_f64()?,
            "fd.t_max" => fd.t_max = v.as_f64()?,
            "fd.steady_tol" => fd.steady_tol = v.as_f64()?,
            "fd.verbatim" => fd.verbatim = v.as_bool()?,
            "fd.advection" => fd.advection = v.parse_as()?,
            "fd.negativity" => fd.negativity = v.parse_as()?,
            "fd.solver_tol" => fd.solver_tol = v.as_f64()?,
            "fd.max_iter" => fd.max_iter = v.as_usize()?,
            "fd.mass" => fd.mass = v.as_f64()?,
            "fd.c_level" => fd.c_level = v.as_f64()?,
            "fd.c_amplitude" => fd.c_amplitude = v.as_f64()?,
            "fd.c_mode" => fd.c_mode = v.as_u64()? as u32,
            "fd.snapshot_every" => fd.snapshot_every = v.as_u64()?,

            "two_state.alpha_rate" => ts.alpha_rate = v.as_f64()?,
            "two_state.alpha_amplitude" => ts.alpha_amplitude = v.as_f64()?,
            "two_state.beta_rate" => ts.beta_rate = v.as_f64()?,
            "two_state.beta_amplitude" => ts.beta_amplitude = v.as_f64()?,
            "two_state.transition" => ts.transition = v.parse_as()?,
            "two_state.kernel_spread" => ts.kernel_spread = v.as_f64()?,
            "two_state.production_aa" => ts.production.aa = v.as_f64()?,
            "two_state.production_ab" => ts.production.ab = v.as_f64()?,
            "two_state.production_ba" => ts.production.ba = v.as_f64()?,
            "two_state.production_bb" => ts.production.bb = v.as_f64()?,
            "two_state.smell_gamma" => ts.smell_gamma = v.as_f64()?,
            "two_state.smell_sigma" => ts.smell_sigma = v.as_f64()?,
            "two_state.smell_chi_alpha" => ts.smell_chi_alpha = v.as_f64()?,
            "two_state.smell_chi_beta" => ts.smell_chi_beta = v.as_f64()?,
            "two_state.alpha_fraction" => ts.alpha_fraction = v.as_f64()?,

            "azimuthal.p1" => az.p[0] = v.as_f64()?,
            "azimuthal.p2" => az.p[1] = v.as_f64()?,
            "azimuthal.a11" => az.a.a11 = v.as_f64()?,
            "azimuthal.a12" => az.a.a12 = v.as_f64()?,
            "azimuthal.a22" => az.a.a22 = v.as_f64()?,
            "azimuthal.dt" => az.dt = v.as_f64()?,
            "azimuthal.t_end" => az.t_end = v.as_f64()?,
            "azimuthal.samples" => az.samples = v.as_usize()?,
            "azimuthal.bins" => az.bins = v.as_usize()?,
            "azimuthal.n_grid" => az.n_grid = v.as_usize()?,

            "kernels.domain" => k.domain = v.parse_as()?,
            "kernels.p_values" => k.p_values = parse_list(v.as_str()?)?,
            "kernels.t_min" => k.t_min = v.as_f64()?,
            "kernels.t_max" => k.t_max = v.as_f64()?,
            "kernels.n_t" => k.n_t = v.as_usize()?,
            "kernels.semigroup_n" => k.semigroup_n = v.as_usize()?,

            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Every key in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, Value)> {
        let m = &self.model;
        let p = &self.particles;
        let fd = &self.fd;
        let ts = &self.two_state;
        let az = &self.azimuthal;
        let k = &self.kernels;
        let mut out = vec![("mode", Value::text(self.mode))];
        if let Some(preset) = &self.preset {
            out.push(("preset", Value::Str(preset.clone())));
        }
        out.push(("seed", Value::int(self.seed)));
        if let Some(dir) = &self.out {
            out.push(("out", Value::Str(dir.clone())));
        }
        out.extend([
            ("model.lambda", Value::num(m.lambda)),
            ("model.chi", Value::num(m.chi)),
            ("model.tau", Value::num(m.tau)),
            ("model.sigma_x", Value::num(m.sigma_x)),
            ("model.sigma_theta", Value::num(m.sigma_theta)),
            ("model.sigma_c", Value::num(m.sigma_c)),
            ("model.gamma", Value::num(m.gamma)),
            ("model.mu", Value::num(m.mu)),
            ("particles.n", Value::int(p.n as u64)),
            ("particles.n_f", Value::int(p.n_f as u64)),
            ("particles.dt", Value::num(p.dt)),
            ("particles.steps", Value::int(p.steps)),
        ]);
        if let Some(eps) = p.eps {
            out.push(("particles.eps", Value::num(eps)));
        }
        out.extend([
            ("particles.rate_convention", Value::text(p.rate_convention)),
            ("particles.init", Value::text(p.init)),
            ("particles.init_x1", Value::num(p.init_x1)),
            ("particles.init_x2", Value::num(p.init_x2)),
            ("particles.init_theta", Value::num(p.init_theta)),
            ("particles.init_spread", Value::num(p.init_spread)),
            ("particles.field", Value::text(p.field)),
            ("particles.field_value", Value::num(p.field_value)),
            ("particles.field_x1", Value::num(p.field_x1)),
            ("particles.field_amplitude", Value::num(p.field_amplitude)),
            ("particles.resync_every", Value::int(p.resync_every)),
            ("particles.threads", Value::int(p.threads as u64)),
            ("particles.schedule", Value::text(p.schedule)),
            ("particles.schedule_value", Value::int(p.schedule_value)),
            ("particles.density_bins", Value::int(p.density_bins as u64)),
            ("fd.n_x", Value::int(fd.n_x as u64)),
            ("fd.n_theta", Value::int(fd.n_theta as u64)),
            ("fd.dt", Value::num(fd.dt)),
            ("fd.t_max", Value::num(fd.t_max)),
            ("fd.steady_tol", Value::num(fd.steady_tol)),
            ("fd.verbatim", Value::Bool(fd.verbatim)),
            ("fd.advection", Value::text(fd.advection)),
            ("fd.negativity", Value::text(fd.negativity)),
            ("fd.solver_tol", Value::num(fd.solver_tol)),
            ("fd.max_iter", Value::int(fd.max_iter as u64)),
            ("fd.mass", Value::num(fd.mass)),
            ("fd.c_level", Value::num(fd.c_level)),
            ("fd.c_amplitude", Value::num(fd.c_amplitude)),
            ("fd.c_mode", Value::int(fd.c_mode as u64)),
            ("fd.snapshot_every", Value::int(fd.snapshot_every)),
            ("two_state.alpha_rate", Value::num(ts.alpha_rate)),
            ("two_state.alpha_amplitude", Value::num(ts.alpha_amplitude)),
            ("two_state.beta_rate", Value::num(ts.beta_rate)),
            ("two_state.beta_amplitude", Value::num(ts.beta_amplitude)),
            ("two_state.transition", Value::text(ts.transition)),
            ("two_state.kernel_spread", Value::num(ts.kernel_spread)),
            ("two_state.production_aa", Value::num(ts.production.aa)),
            ("two_state.production_ab", Value::num(ts.production.ab)),
            ("two_state.production_ba", Value::num(ts.production.ba)),
            ("two_state.production_bb", Value::num(ts.production.bb)),
            ("two_state.smell_gamma", Value::num(ts.smell_gamma)),
            ("two_state.smell_sigma", Value::num(ts.smell_sigma)),
            ("two_state.smell_chi_alpha", Value::num(ts.smell_chi_alpha)),
            ("two_state.smell_chi_beta", Value::num(ts.smell_chi_beta)),
            ("two_state.alpha_fraction", Value::num(ts.alpha_fraction)),
            ("azimuthal.p1", Value::num(az.p[0])),
            ("azimuthal.p2", Value::num(az.p[1])),
            ("azimuthal.a11", Value::num(az.a.a11)),
            ("azimuthal.a12", Value::num(az.a.a12)),
            ("azimuthal.a22", Value::num(az.a.a22)),
            ("azimuthal.dt", Value::num(az.dt)),
            ("azimuthal.t_end", Value::num(az.t_end)),
            ("azimuthal.samples", Value::int(az.samples as u64)),
            ("azimuthal.bins", Value::int(az.bins as u64)),
            ("azimuthal.n_grid", Value::int(az.n_grid as u64)),
            ("kernels.domain", Value::text(k.domain)),
            ("kernels.p_values", Value::Str(render_list(&k.p_values))),
            ("kernels.t_min", Value::num(k.t_min)),
            ("kernels.t_max", Value::num(k.t_max)),
            ("kernels.n_t", Value::int(k.n_t as u64)),
            ("kernels.semigroup_n", Value::int(k.semigroup_n as u64)),
        ]);
        out
    }

    /// Checks the sections the mode uses; returns every violation.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if let Err(Error::InvalidParams(msg)) = self.model.validate() {
            bad.push(msg);
        }
        match self.mode {
            Mode::Particles => self.particle_violations(&mut bad),
            Mode::Fd => self.fd_violations(&mut bad),
            Mode::Fd2State => {
                self.fd_violations(&mut bad);
                self.two_state_violations(&mut bad);
            }
            Mode::Azimuthal => self.azimuthal_violations(&mut bad),
            Mode::Kernels => self.kernel_violations(&mut bad),
        }
        bad
    }

    fn particle_violations(&self, bad: &mut Vec<String>) {
        let p = &self.particles;
        if let Err(Error::Config(list)) = p.to_config().validate() {
            bad.extend(list);
        }
        if p.init_spread < 0.0 || !p.init_spread.is_finite() {
            bad.push(format!("particles.init_spread must be >= 0 (got {})", p.init_spread));
        }
        if p.density_bins == 0 {
            bad.push("particles.density_bins must be >= 1".into());
        }
        if p.schedule_value == 0 {
            bad.push("particles.schedule_value must be >= 1".into());
        }
    }

    fn fd_violations(&self, bad: &mut Vec<String>) {
        let fd = &self.fd;
        if fd.n_x < 3 {
            bad.push(format!("fd.n_x must be >= 3 (got {})", fd.n_x));
        }
        if fd.n_theta < 4 {
            bad.push(format!("fd.n_theta must be >= 4 (got {})", fd.n_theta));
        }
        if !(fd.dt > 0.0 && fd.dt <= crate::fd::MAX_DT) {
            bad.push(format!("fd.dt must be in (0, {}] (got {})", crate::fd::MAX_DT, fd.dt));
        }
        if !(fd.t_max >= 0.0 && fd.t_max.is_finite()) {
            bad.push(format!("fd.t_max must be >= 0 (got {})", fd.t_max));
        }
        if !(fd.steady_tol > 0.0) {
            bad.push(format!("fd.steady_tol must be > 0 (got {})", fd.steady_tol));
        }
        if !(fd.solver_tol > 0.0 && fd.solver_tol < 1.0) {
            bad.push(format!("fd.solver_tol must be in (0, 1) (got {})", fd.solver_tol));
        }
        if fd.max_iter == 0 {
            bad.push("fd.max_iter must be >= 1".into());
        }
        if !(fd.mass > 0.0 && fd.mass.is_finite()) {
            bad.push(format!("fd.mass must be > 0 (got {})", fd.mass));
        }
        if fd.snapshot_every == 0 {
            bad.push("fd.snapshot_every must be >= 1".into());
        }
    }

    fn two_state_violations(&self, bad: &mut Vec<String>) {
        let ts = &self.two_state;
        if let Err(Error::InvalidParams(msg)) = ts.production.validate() {
            bad.push(msg);
        }
        if ts.alpha_rate < 0.0 || ts.beta_rate < 0.0 {
            bad.push("two_state rates must be >= 0".into());
        }
        if ts.transition == TransitionKind::UTurn && self.fd.n_theta % 2 != 0 {
            bad.push(format!("u_turn needs an even fd.n_theta (got {})", self.fd.n_theta));
        }
        if ts.transition == TransitionKind::Convolution && !(ts.kernel_spread > 0.0) {
            bad.push(format!("two_state.kernel_spread must be > 0 (got {})", ts.kernel_spread));
        }
        if !(ts.smell_gamma > 0.0) {
            bad.push(format!("two_state.smell_gamma must be > 0 (got {})", ts.smell_gamma));
        }
        if !(ts.smell_sigma >= 0.0) {
            bad.push(format!("two_state.smell_sigma must be >= 0 (got {})", ts.smell_sigma));
        }
        if !(0.0..=1.0).contains(&ts.alpha_fraction) {
            bad.push(format!(
                "two_state.alpha_fraction must be in [0, 1] (got {})",
                ts.alpha_fraction
            ));
        }
    }

    fn azimuthal_violations(&self, bad: &mut Vec<String>) {
        let az = &self.azimuthal;
        if !(az.dt > 0.0 && az.dt <= 1e-2) {
            bad.push(format!("azimuthal.dt must be in (0, 1e-2] (got {})", az.dt));
        }
        if !(az.t_end >= 10.0 && az.t_end.is_finite()) {
            bad.push(format!("azimuthal.t_end must be >= 10 (got {})", az.t_end));
        }
        if az.samples == 0 {
            bad.push("azimuthal.samples must be >= 1".into());
        }
        if az.bins < 4 {
            bad.push(format!("azimuthal.bins must be >= 4 (got {})", az.bins));
        }
        if az.n_grid < 256 {
            bad.push(format!("azimuthal.n_grid must be >= 256 (got {})", az.n_grid));
        }
    }

    fn kernel_violations(&self, bad: &mut Vec<String>) {
        let k = &self.kernels;
        if k.p_values.is_empty() || k.p_values.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
            bad.push(format!("kernels.p_values must be finite and >= 1 (got {:?})", k.p_values));
        }
        if !(k.t_min > 0.0 && k.t_max > k.t_min) {
            bad.push(format!(
                "kernels needs 0 < t_min < t_max (got {} and {})",
                k.t_min, k.t_max
            ));
        }
        if k.n_t < 4 {
            bad.push(format!("kernels.n_t must be >= 4 (got {})", k.n_t));
        }
        if k.semigroup_n < 16 {
            bad.push(format!("kernels.semigroup_n must be >= 16 (got {})", k.semigroup_n));
        }
    }
}

/// Canonical text: every key, one per line, in a fixed order.
pub fn serialize(cfg: &RunConfig) -> String {
    let mut text = String::new();
    for (key, value) in cfg.entries() {
        text.push_str(key);
        text.push_str(" = ");
        text.push_str(&value.render());
        text.push('\n');
    }
    text
}

/// Builds a validated config from raw entries, expanding a preset first.
/// `forced_mode` (from the command line) must agree with any `mode` key.
pub fn from_raw(raw: &RawConfig, forced_mode: Option<Mode>) -> Result<RunConfig> {
    let mut errors = Vec::new();
    let mut cfg = match raw.entries.get("preset") {
        Some((value, line)) => match value.as_str() {
            Ok(name) => match presets::lookup(name) {
                Some(preset) => {
                    let mut base = load_preset(preset)?;
                    base.preset = Some(name.to_string());
                    Some(base)
                }
                None => {
                    errors.push(format!(
                        "line {line}: unknown preset '{name}' (known: {})",
                        presets::names().join(", ")
                    ));
                    None
                }
            },
            Err(e) => {
                errors.push(format!("line {line}: preset: {e}"));
                None
            }
        },
        None => None,
    };

    let mode = match raw.entries.get("mode") {
        Some((value, line)) => match value.parse_as::<Mode>() {
            Ok(m) => Some(m),
            Err(e) => {
                errors.push(format!("line {line}: mode: {e}"));
                None
            }
        },
        None => None,
    };
    let sources = [
        ("the command line", forced_mode),
        ("the config", mode),
        ("the preset", cfg.as_ref().map(|c| c.mode)),
    ];
    let mut chosen: Option<(&str, Mode)> = None;
    for (origin, m) in sources {
        match (chosen, m) {
            (None, Some(m)) => chosen = Some((origin, m)),
            (Some((first, c)), Some(m)) if c != m => {
                errors.push(format!("mode '{c}' from {first} conflicts with '{m}' from {origin}"));
            }
            _ => {}
        }
    }
    let mode = chosen.map(|(_, m)| m);
    let Some(mode) = mode else {
        errors.insert(0, "mode missing".into());
        return Err(Error::Config(errors));
    };
    let mut cfg = cfg.take().unwrap_or_else(|| RunConfig::new(mode));
    cfg.mode = mode;

    for (key, (value, line)) in &raw.entries {
        if key == "mode" || key == "preset" {
            continue;
        }
        if let Err(e) = cfg.set(key, value) {
            errors.push(format!("line {line}: {key}: {e}"));
        }
    }
    errors.extend(cfg.violations());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

fn load_preset(preset: &presets::Preset) -> Result<RunConfig> {
    let raw = parse_raw(preset.text)?;
    if raw.entries.contains_key("preset") {
        return Err(Error::Config(vec![format!(
            "preset '{}' refers to another preset",
            preset.name
        )]));
    }
    from_raw(&raw, None)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    from_raw(&parse_raw(text)?, None)
}
