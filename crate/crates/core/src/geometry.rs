//! Torus geometry and the small value types shared by every solver.

use std::f64::consts::TAU;

/// An orientation on the circle, always stored in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Self {
        Angle(wrap(radians, TAU))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rotates by `delta` radians and reduces again.
    pub fn rotate(self, delta: f64) -> Self {
        Angle::new(self.0 + delta)
    }
}

impl From<f64> for Angle {
    fn from(radians: f64) -> Self {
        Angle::new(radians)
    }
}

/// A point of the unit torus `[0,1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorusPoint {
    x1: f64,
    x2: f64,
}

impl TorusPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        TorusPoint {
            x1: wrap(x1, 1.0),
            x2: wrap(x2, 1.0),
        }
    }

    pub fn x1(self) -> f64 {
        self.x1
    }

    pub fn x2(self) -> f64 {
        self.x2
    }

    pub fn translate(self, d: [f64; 2]) -> Self {
        TorusPoint::new(self.x1 + d[0], self.x2 + d[1])
    }
}

/// Reduces `x` into `[0, period)`. Total on finite input; non-finite input maps to 0.
pub fn wrap(x: f64, period: f64) -> f64 {
    if !x.is_finite() {
        return 0.0;
    }
    let r = x.rem_euclid(period);
    // rem_euclid can round up to exactly `period` for tiny negative inputs
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Symmetric 2×2 matrix, used for the Hessian of a scalar field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HessianSym {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl HessianSym {
    pub const ZERO: HessianSym = HessianSym {
        a11: 0.0,
        a12: 0.0,
        a22: 0.0,
    };

    pub const IDENTITY: HessianSym = HessianSym {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        HessianSym { a11, a12, a22 }
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        HessianSym { a11, a12: 0.0, a22 }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a12 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn scale(&self, s: f64) -> Self {
        HessianSym::new(s * self.a11, s * self.a12, s * self.a22)
    }

    pub fn add(&self, other: &HessianSym) -> Self {
        HessianSym::new(
            self.a11 + other.a11,
            self.a12 + other.a12,
            self.a22 + other.a22,
        )
    }

    /// `R A Rᵀ` for the rotation `R` by angle `alpha`.
    pub fn rotated(&self, alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        // columns of R A Rᵀ computed entrywise
        let a11 = c * c * self.a11 - 2.0 * s * c * self.a12 + s * s * self.a22;
        let a22 = s * s * self.a11 + 2.0 * s * c * self.a12 + c * c * self.a22;
        let a12 = s * c * (self.a11 - self.a22) + (c * c - s * s) * self.a12;
        HessianSym::new(a11, a12, a22)
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }
}

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldProbe {
    pub c: f64,
    pub grad: [f64; 2],
    pub hess: HessianSym,
}

impl FieldProbe {
    pub fn is_finite(&self) -> bool {
        self.c.is_finite() && self.grad.iter().all(|g| g.is_finite()) && self.hess.is_finite()
    }
}

/// `v(θ) = (cos θ, sin θ)`.
pub fn unit_direction(theta: Angle) -> [f64; 2] {
    let (s, c) = theta.value().sin_cos();
    [c, s]
}

/// `v⊥(θ) = (−sin θ, cos θ)`, the θ-derivative of [`unit_direction`].
pub fn unit_normal(theta: Angle) -> [f64; 2] {
    let (s, c) = theta.value().sin_cos();
    [-s, c]
}

pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn rotate_vec(v: [f64; 2], alpha: f64) -> [f64; 2] {
    let (s, c) = alpha.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}
