//! Chemical fields on the unit torus as truncated Fourier series.
//!
//! Coefficients are indexed by integer frequencies `-n_f ≤ ξ, ζ ≤ n_f` in the
//! basis `exp(i2π(ξx₁ + ζx₂))`. The full square is stored; real fields keep the
//! Hermitian constraint `c[-ξ,-ζ] = conj(c[ξ,ζ])`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;

use crate::geometry::{FieldProbe, HessianSym, TorusPoint};

/// Which frequency factor enters the decay rate and the Dirac regularizer.
///
/// `Physical` uses the Laplacian eigenvalue `4π²(ξ²+ζ²)` of the unit torus;
/// `Paper` uses the bare `ξ²+ζ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateConvention {
    #[default]
    Physical,
    Paper,
}

impl RateConvention {
    pub fn kappa(self, xi: i32, zeta: i32) -> f64 {
        let k2 = (xi * xi + zeta * zeta) as f64;
        match self {
            RateConvention::Physical => 4.0 * PI * PI * k2,
            RateConvention::Paper => k2,
        }
    }
}

impl fmt::Display for RateConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateConvention::Physical => "physical",
            RateConvention::Paper => "paper",
        })
    }
}

impl FromStr for RateConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "physical" => Ok(RateConvention::Physical),
            "paper" => Ok(RateConvention::Paper),
            other => Err(format!("unknown rate convention `{other}` (expected physical|paper)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid {
    n_f: usize,
    coeffs: Vec<Complex64>,
}

impl CoefficientGrid {
    pub fn zeros(n_f: usize) -> Self {
        assert!(n_f >= 1, "truncation order must be at least 1");
        let side = 2 * n_f + 1;
        CoefficientGrid {
            n_f,
            coeffs: vec![Complex64::new(0.0, 0.0); side * side],
        }
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn side(&self) -> usize {
        2 * self.n_f + 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    fn index(&self, xi: i32, zeta: i32) -> usize {
        let n = self.n_f as i32;
        debug_assert!(xi.abs() <= n && zeta.abs() <= n);
        (xi + n) as usize * self.side() + (zeta + n) as usize
    }

    pub fn get(&self, xi: i32, zeta: i32) -> Complex64 {
        self.coeffs[self.index(xi, zeta)]
    }

    pub fn set(&mut self, xi: i32, zeta: i32, value: Complex64) {
        let i = self.index(xi, zeta);
        self.coeffs[i] = value;
    }

    /// Iterates `(ξ, ζ, coefficient)` in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (i32, i32, Complex64)> + '_ {
        let n = self.n_f as i32;
        let side = self.side();
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| ((i / side) as i32 - n, (i % side) as i32 - n, *c))
    }

    /// Largest violation of the Hermitian constraint, including `Im c[0,0]`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n_f as i32;
        let mut worst = 0.0f64;
        for xi in -n..=n {
            for zeta in -n..=n {
                let d = (self.get(xi, zeta) - self.get(-xi, -zeta).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Writes the snapshot format: a comment header naming `n_f` and the
    /// convention, a column header, then one `xi,zeta,re,im` row per mode.
    pub fn write_snapshot<W: Write>(
        &self,
        out: &mut W,
        conv: RateConvention,
        step: u64,
        t: f64,
    ) -> std::io::Result<()> {
        writeln!(
            out,
            "# n_f={} rate_convention={} step={} t={}",
            self.n_f, conv, step, t
        )?;
        writeln!(out, "xi,zeta,re,im")?;
        for (xi, zeta, c) in self.modes() {
            writeln!(out, "{xi},{zeta},{},{}", c.re, c.im)?;
        }
        Ok(())
    }

    /// Reads back a snapshot written by [`CoefficientGrid::write_snapshot`].
    pub fn read_snapshot<R: BufRead>(input: R) -> Result<(Self, RateConvention), String> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or("empty snapshot")?
            .map_err(|e| e.to_string())?;
        let mut n_f = None;
        let mut conv = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            if let Some(v) = tok.strip_prefix("n_f=") {
                n_f = Some(v.parse::<usize>().map_err(|e| e.to_string())?);
            } else if let Some(v) = tok.strip_prefix("rate_convention=") {
                conv = Some(v.parse::<RateConvention>()?);
            }
        }
        let n_f = n_f.ok_or("header lacks n_f")?;
        let conv = conv.ok_or("header lacks rate_convention")?;
        let mut grid = CoefficientGrid::zeros(n_f);
        for line in lines.skip(1) {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(format!("malformed row `{line}`"));
            }
            let xi: i32 = f[0].parse().map_err(|_| format!("bad xi in `{line}`"))?;
            let zeta: i32 = f[1].parse().map_err(|_| format!("bad zeta in `{line}`"))?;
            let re: f64 = f[2].parse().map_err(|_| format!("bad re in `{line}`"))?;
            let im: f64 = f[3].parse().map_err(|_| format!("bad im in `{line}`"))?;
            if xi.unsigned_abs() as usize > n_f || zeta.unsigned_abs() as usize > n_f {
                return Err(format!("mode ({xi},{zeta}) outside n_f={n_f}"));
            }
            grid.set(xi, zeta, Complex64::new(re, im));
        }
        Ok((grid, conv))
    }
}

/// `exp(i2πkx)` for `k = -n..=n`, with exact conjugate symmetry.
pub(crate) fn phases(x: f64, n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0); 2 * n + 1];
    for k in 1..=n {
        let (s, c) = (TAU * k as f64 * x).sin_cos();
        out[n + k] = Complex64::new(c, s);
        out[n - k] = Complex64::new(c, -s);
    }
    out
}

/// Fourier coefficients of a unit Dirac mass at `x`, smoothed by the heat
/// kernel at time `σ_c·eps`.
pub fn dirac_coefficients(
    x: TorusPoint,
    eps: f64,
    sigma_c: f64,
    n_f: usize,
    conv: RateConvention,
) -> CoefficientGrid {
    let mut grid = CoefficientGrid::zeros(n_f);
    add_scaled_dirac(&mut grid, x, eps, sigma_c, conv, 1.0);
    grid
}

/// `grid += weight · dirac_coefficients(x, …)` without allocating.
pub(crate) fn add_scaled_dirac(
    grid: &mut CoefficientGrid,
    x: TorusPoint,
    eps: f64,
    sigma_c: f64,
    conv: RateConvention,
    weight: f64,
) {
    let n = grid.n_f;
    let e1 = phases(x.x1(), n);
    let e2 = phases(x.x2(), n);
    let side = grid.side();
    for (a, p1) in e1.iter().enumerate() {
        let xi = a as i32 - n as i32;
        let row = &mut grid.coeffs[a * side..(a + 1) * side];
        for (b, p2) in e2.iter().enumerate() {
            let zeta = b as i32 - n as i32;
            let damp = if eps == 0.0 {
                1.0
            } else {
                (-sigma_c * eps * conv.kappa(xi, zeta)).exp()
            };
            row[b] += p1 * p2 * (damp * weight);
        }
    }
}

/// Per-mode decay denominators `1 + dt·(γ + σ_c κ)`.
pub(crate) fn decay_denominators(
    n_f: usize,
    dt: f64,
    gamma: f64,
    sigma_c: f64,
    conv: RateConvention,
) -> Vec<f64> {
    let n = n_f as i32;
    let mut out = Vec::with_capacity((2 * n_f + 1).pow(2));
    for xi in -n..=n {
        for zeta in -n..=n {
            out.push(1.0 + dt * (gamma + sigma_c * conv.kappa(xi, zeta)));
        }
    }
    out
}

/// One implicit-Euler step of `dc/dt = -(γ + σ_c κ) c + s`, mode by mode.
pub fn decay_step(
    grid: &CoefficientGrid,
    source: &CoefficientGrid,
    dt: f64,
    gamma: f64,
    sigma_c: f64,
    conv: RateConvention,
) -> CoefficientGrid {
    assert_eq!(grid.n_f, source.n_f, "grids must share n_f");
    let denom = decay_denominators(grid.n_f, dt, gamma, sigma_c, conv);
    let coeffs = grid
        .coeffs
        .iter()
        .zip(&source.coeffs)
        .zip(&denom)
        .map(|((c, s), d)| (c + s * dt) / d)
        .collect();
    CoefficientGrid {
        n_f: grid.n_f,
        coeffs,
    }
}

/// Value, gradient and Hessian of the reconstructed real field at `x`.
pub fn eval_probe(grid: &CoefficientGrid, x: TorusPoint) -> FieldProbe {
    probe_with(grid.n_f, x, |i| grid.coeffs[i])
}

/// Probe of the mode-wise difference `a - b`, fused so no grid is materialized.
pub fn eval_probe_difference(a: &CoefficientGrid, b: &CoefficientGrid, x: TorusPoint) -> FieldProbe {
    assert_eq!(a.n_f, b.n_f);
    probe_with(a.n_f, x, |i| a.coeffs[i] - b.coeffs[i])
}

#[inline]
fn probe_with(n_f: usize, x: TorusPoint, coeff: impl Fn(usize) -> Complex64) -> FieldProbe {
    let e1 = phases(x.x1(), n_f);
    let e2 = phases(x.x2(), n_f);
    let side = 2 * n_f + 1;
    let n = n_f as f64;
    let (mut c, mut g1, mut g2, mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, p1) in e1.iter().enumerate() {
        let xi = a as f64 - n;
        // accumulate per row, then apply the ξ factors once
        let (mut v, mut w, mut wz, mut vz, mut vzz) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (b, p2) in e2.iter().enumerate() {
            let zeta = b as f64 - n;
            let ph = p1 * p2;
            let cf = coeff(a * side + b);
            // Re(c e^{iφ}) and Im(c e^{iφ})
            let re = cf.re * ph.re - cf.im * ph.im;
            let im = cf.re * ph.im + cf.im * ph.re;
            v += re;
            w += im;
            wz += zeta * im;
            vz += zeta * re;
            vzz += zeta * zeta * re;
        }
        c += v;
        g1 += xi * w;
        g2 += wz;
        h11 += xi * xi * v;
        h12 += xi * vz;
        h22 += vzz;
    }
    let two_pi = TAU;
    let four_pi2 = TAU * TAU;
    FieldProbe {
        c,
        grad: [-two_pi * g1, -two_pi * g2],
        hess: HessianSym::new(-four_pi2 * h11, -four_pi2 * h12, -four_pi2 * h22),
    }
}

/// `dst + scale·src`, mode by mode.
pub fn axpy(dst: &CoefficientGrid, scale: f64, src: &CoefficientGrid) -> CoefficientGrid {
    let mut out = dst.clone();
    axpy_in_place(&mut out, scale, src);
    out
}

pub fn axpy_in_place(dst: &mut CoefficientGrid, scale: f64, src: &CoefficientGrid) {
    assert_eq!(dst.n_f, src.n_f, "grids must share n_f");
    for (d, s) in dst.coeffs.iter_mut().zip(&src.coeffs) {
        *d += s * scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n_f: usize, rng: &mut impl Rng) -> CoefficientGrid {
        let mut g = CoefficientGrid::zeros(n_f);
        let n = n_f as i32;
        for xi in -n..=n {
            for zeta in -n..=n {
                if (xi, zeta) < (0, 0) {
                    continue;
                }
                let v = if (xi, zeta) == (0, 0) {
                    Complex64::new(rng.random_range(-1.0..1.0), 0.0)
                } else {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        / 2f64.sqrt()
                };
                g.set(xi, zeta, v);
                g.set(-xi, -zeta, v.conj());
            }
        }
        g
    }

    /// Direct complex-exponential evaluation, used as an independent check.
    fn naive_value(g: &CoefficientGrid, x: TorusPoint) -> Complex64 {
        g.modes()
            .map(|(xi, zeta, c)| {
                let phi = TAU * (xi as f64 * x.x1() + zeta as f64 * x.x2());
                c * Complex64::new(phi.cos(), phi.sin())
            })
            .sum()
    }

    fn cos_field() -> CoefficientGrid {
        let mut g = CoefficientGrid::zeros(2);
        g.set(1, 0, Complex64::new(0.5, 0.0));
        g.set(-1, 0, Complex64::new(0.5, 0.0));
        g
    }

    #[test]
    fn dirac_examples() {
        let g = dirac_coefficients(TorusPoint::new(0.0, 0.0), 0.0, 1.0, 3, RateConvention::Physical);
        assert!(g.coeffs().iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        for conv in [RateConvention::Physical, RateConvention::Paper] {
            let g = dirac_coefficients(TorusPoint::new(0.3, 0.8), 0.05, 0.7, 4, conv);
            assert_eq!(g.get(0, 0), Complex64::new(1.0, 0.0));
            assert_eq!(g.hermitian_defect(), 0.0);
        }
        let g = dirac_coefficients(TorusPoint::new(0.25, 0.0), 0.0, 1.0, 2, RateConvention::Physical);
        let c = g.get(1, 0);
        assert!(c.re.abs() < 1e-15 && (c.im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dirac_regularizer_uses_convention() {
        let x = TorusPoint::new(0.0, 0.0);
        let g = dirac_coefficients(x, 0.1, 0.5, 2, RateConvention::Paper);
        assert!((g.get(1, 1).re - (-0.5f64 * 0.1 * 2.0).exp()).abs() < 1e-15);
        let g = dirac_coefficients(x, 0.1, 0.5, 2, RateConvention::Physical);
        assert!((g.get(1, 1).re - (-0.5f64 * 0.1 * 2.0 * 4.0 * PI * PI).exp()).abs() < 1e-15);
    }

    #[test]
    fn dirac_field_has_unit_mass() {
        // midpoint quadrature of the reconstructed field over the torus
        let g = dirac_coefficients(TorusPoint::new(0.37, 0.61), 0.01, 1.0, 6, RateConvention::Physical);
        let m = 64;
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = TorusPoint::new(i as f64 / m as f64, j as f64 / m as f64);
                total += eval_probe(&g, x).c;
            }
        }
        assert!((total / (m * m) as f64 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn decay_examples() {
        let z = CoefficientGrid::zeros(2);
        assert_eq!(decay_step(&z, &z, 0.1, 1.0, 1.0, RateConvention::Physical), z);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_hermitian(3, &mut rng);
        let dt = 0.25;
        let next = decay_step(&g, &CoefficientGrid::zeros(3), dt, 1.0, 0.0, RateConvention::Physical);
        for (a, b) in next.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b / (1.0 + dt)).norm() < 1e-15);
        }
    }

    #[test]
    fn decay_converges_to_fixed_point() {
        let mut src = CoefficientGrid::zeros(2);
        let s = 1.7;
        let gamma = 0.8;
        src.set(0, 0, Complex64::new(s, 0.0));
        let mut c = CoefficientGrid::zeros(2);
        for _ in 0..2000 {
            c = decay_step(&c, &src, 0.1, gamma, 1.0, RateConvention::Physical);
        }
        assert!((c.get(0, 0).re - s / gamma).abs() < 1e-10);
        assert_eq!(c.hermitian_defect(), 0.0);
    }

    #[test]
    fn probe_of_cosine() {
        let g = cos_field();
        let p = eval_probe(&g, TorusPoint::new(0.0, 0.0));
        assert!((p.c - 1.0).abs() < 1e-12);
        assert!(p.grad[0].abs() < 1e-12 && p.grad[1].abs() < 1e-12);
        assert!((p.hess.a11 + 4.0 * PI * PI).abs() < 1e-12);
        assert!(p.hess.a12.abs() < 1e-12 && p.hess.a22.abs() < 1e-12);

        let p = eval_probe(&g, TorusPoint::new(0.25, 0.0));
        assert!(p.c.abs() < 1e-12);
        assert!((p.grad[0] + TAU).abs() < 1e-12);

        let z = eval_probe(&CoefficientGrid::zeros(3), TorusPoint::new(0.4, 0.2));
        assert_eq!(z, FieldProbe::default());
    }

    #[test]
    fn axpy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(3, &mut rng);
        let b = random_hermitian(3, &mut rng);
        assert_eq!(axpy(&a, 0.0, &b), a);
        assert_eq!(axpy(&CoefficientGrid::zeros(3), 1.0, &b), b);
        let back = axpy(&axpy(&a, -1.0, &b), 1.0, &b);
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_hermitian(2, &mut rng);
        let mut buf = Vec::new();
        g.write_snapshot(&mut buf, RateConvention::Paper, 7, 0.07).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# n_f=2 rate_convention=paper"));
        let (back, conv) = CoefficientGrid::read_snapshot(&buf[..]).unwrap();
        assert_eq!(back, g);
        assert_eq!(conv, RateConvention::Paper);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn probe_is_real_and_matches_exponential_sum(seed in any::<u64>(), n_f in 1usize..=8, x1 in 0.0..1.0f64, x2 in 0.0..1.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_hermitian(n_f, &mut rng);
            let x = TorusPoint::new(x1, x2);
            let direct = naive_value(&g, x);
            prop_assert!(direct.im.abs() < 1e-12);
            prop_assert!((direct.re - eval_probe(&g, x).c).abs() < 1e-12);
        }

        #[test]
        fn operations_preserve_hermitian(seed in any::<u64>(), x1 in 0.0..1.0f64, x2 in 0.0..1.0f64, dt in 1e-4..1.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_hermitian(4, &mut rng);
            let d = dirac_coefficients(TorusPoint::new(x1, x2), dt, 0.3, 4, RateConvention::Physical);
            prop_assert_eq!(d.hermitian_defect(), 0.0);
            let s = decay_step(&g, &d, dt, 0.5, 0.3, RateConvention::Physical);
            prop_assert!(s.hermitian_defect() <= 1e-15);
            let a = axpy(&g, -0.3, &d);
            prop_assert!(a.hermitian_defect() <= 1e-15);
        }

        #[test]
        fn zero_source_contracts(seed in any::<u64>(), dt in 1e-4..1.0f64, gamma in 0.0..2.0f64, sc in 0.0..2.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_hermitian(3, &mut rng);
            let next = decay_step(&g, &CoefficientGrid::zeros(3), dt, gamma, sc, RateConvention::Physical);
            for (a, b) in next.coeffs().iter().zip(g.coeffs()) {
                prop_assert!(a.norm() <= b.norm());
            }
        }
    }
}
