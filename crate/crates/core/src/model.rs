//! Physical parameters, the anticipation-reaction drift and its angular potential.

use crate::error::{Error, Result};
use crate::geometry::{dot, unit_direction, unit_normal, Angle, HessianSym};

/// Physical constants of the model. The antenna half-angle is absorbed in `chi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Walking speed.
    pub lambda: f64,
    /// Reaction strength.
    pub chi: f64,
    /// Anticipation rate (look-ahead length).
    pub tau: f64,
    pub sigma_x: f64,
    pub sigma_theta: f64,
    pub sigma_c: f64,
    /// Evaporation rate.
    pub gamma: f64,
    /// Deposition rate.
    pub mu: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            lambda: 1.0,
            chi: 1.0,
            tau: 1.0,
            sigma_x: 1.0,
            sigma_theta: 1.0,
            sigma_c: 1.0,
            gamma: 1.0,
            mu: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let all = [
            ("lambda", self.lambda),
            ("chi", self.chi),
            ("tau", self.tau),
            ("sigma_x", self.sigma_x),
            ("sigma_theta", self.sigma_theta),
            ("sigma_c", self.sigma_c),
            ("gamma", self.gamma),
            ("mu", self.mu),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                bad.push(format!("{name} must be finite"));
            }
        }
        let positive = [
            ("lambda", self.lambda),
            ("sigma_x", self.sigma_x),
            ("sigma_theta", self.sigma_theta),
            ("sigma_c", self.sigma_c),
            ("mu", self.mu),
        ];
        for (name, v) in positive {
            if v.is_finite() && v <= 0.0 {
                bad.push(format!("{name} must be > 0 (got {v})"));
            }
        }
        for (name, v) in [("chi", self.chi), ("tau", self.tau), ("gamma", self.gamma)] {
            if v.is_finite() && v < 0.0 {
                bad.push(format!("{name} must be >= 0 (got {v})"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }
}

/// Angular drift `v⊥(θ)·p + τ v⊥(θ)·A v(θ)`.
pub fn drift_b(theta: Angle, grad: [f64; 2], hess: &HessianSym, tau: f64) -> f64 {
    let v = unit_direction(theta);
    let n = unit_normal(theta);
    dot(n, grad) + tau * dot(n, hess.apply(v))
}

/// Potential `v(θ)·p + (τ/2) v(θ)·A v(θ)`; its θ-derivative is [`drift_b`].
pub fn potential_h(theta: Angle, grad: [f64; 2], hess: &HessianSym, tau: f64) -> f64 {
    let v = unit_direction(theta);
    dot(v, grad) + 0.5 * tau * dot(v, hess.apply(v))
}

/// Factors mapping normalized quantities back to raw units:
/// `t_raw = t / time`, `x_raw = space · x`, `c_raw = field · c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaling {
    pub time: f64,
    pub space: f64,
    pub field: f64,
}

impl Rescaling {
    pub fn to_raw_time(&self, t: f64) -> f64 {
        t / self.time
    }

    pub fn to_raw_length(&self, x: f64) -> f64 {
        self.space * x
    }

    pub fn to_raw_field(&self, c: f64) -> f64 {
        self.field * c
    }
}

/// Parameters of the rescaled system in which both density diffusions are 1.
///
/// Time is multiplied by `σ_θ`, space divided by `√(σ_x/σ_θ)`, and the field
/// divided by `μ`. The chemical source then carries weight `1/σ_θ`, which is
/// stored in `mu` of the returned set (it is 1 whenever `σ_θ = 1`).
pub fn normalize_params(raw: &ModelParams) -> Result<(ModelParams, Rescaling)> {
    raw.validate()?;
    let ModelParams {
        lambda,
        chi,
        tau,
        sigma_x,
        sigma_theta,
        sigma_c,
        gamma,
        mu,
    } = *raw;
    let ratio = (sigma_theta / sigma_x).sqrt();
    let normalized = ModelParams {
        lambda: lambda / (sigma_x * sigma_theta).sqrt(),
        chi: chi * mu / (sigma_theta * sigma_x).sqrt(),
        tau: tau * ratio,
        sigma_x: 1.0,
        sigma_theta: 1.0,
        sigma_c: sigma_c / sigma_x,
        gamma: gamma / sigma_theta,
        mu: 1.0 / sigma_theta,
    };
    let scale = Rescaling {
        time: sigma_theta,
        space: (sigma_x / sigma_theta).sqrt(),
        field: mu,
    };
    Ok((normalized, scale))
}
