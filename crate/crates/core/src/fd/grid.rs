use std::f64::consts::TAU;
use std::io::Write;

use crate::particles::lp_norm;

/// Density `ρ(x_j, θ_k)` on the periodic `n_x × n_theta` grid of `T₁ × T_{2π}`
/// (row-major in `x`) and the companion chemical field `c(x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub n_x: usize,
    pub n_theta: usize,
    pub rho: Vec<f64>,
    pub c: Vec<f64>,
}

impl DensityGrid {
    pub fn new(n_x: usize, n_theta: usize, rho: Vec<f64>, c: Vec<f64>) -> Self {
        assert_eq!(rho.len(), n_x * n_theta, "rho has the wrong length");
        assert_eq!(c.len(), n_x, "c has the wrong length");
        DensityGrid {
            n_x,
            n_theta,
            rho,
            c,
        }
    }

    /// `ρ ≡ mass/(2π)` (unit length in `x`) and `c ≡ c_level`.
    pub fn uniform(n_x: usize, n_theta: usize, mass: f64, c_level: f64) -> Self {
        DensityGrid::new(
            n_x,
            n_theta,
            vec![mass / TAU; n_x * n_theta],
            vec![c_level; n_x],
        )
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.dtheta()
    }

    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.rho[j * self.n_theta + k]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rho[j * self.n_theta..(j + 1) * self.n_theta]
    }

    pub fn mass(&self) -> f64 {
        total_mass(&self.rho, self.dx(), self.dtheta())
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ_k ρ(x_j, θ_k) Δθ` for every `j`.
    pub fn theta_average(&self) -> Vec<f64> {
        theta_integral(&self.rho, self.n_x, self.n_theta)
    }

    /// Discrete `L^p` norm in `x` of the θ-integrated density.
    pub fn averaged_norm(&self, p: f64) -> f64 {
        lp_norm(&self.theta_average(), self.dx(), p)
    }

    /// Periodic shift by `cells` grid cells in `x`.
    pub fn shifted(&self, cells: usize) -> DensityGrid {
        let n = self.n_x;
        let mut rho = vec![0.0; self.rho.len()];
        let mut c = vec![0.0; n];
        for j in 0..n {
            let to = (j + cells) % n;
            rho[to * self.n_theta..(to + 1) * self.n_theta].copy_from_slice(self.row(j));
            c[to] = self.c[j];
        }
        DensityGrid::new(n, self.n_theta, rho, c)
    }

    /// Discrete `H¹` seminorm squared of `ρ` (both directions).
    pub fn h1_seminorm(&self) -> f64 {
        let (nx, nt) = (self.n_x, self.n_theta);
        let (dx, dth) = (self.dx(), self.dtheta());
        let mut acc = 0.0;
        for j in 0..nx {
            let jp = (j + 1) % nx;
            for k in 0..nt {
                let kp = (k + 1) % nt;
                let gx = (self.at(jp, k) - self.at(j, k)) / dx;
                let gt = (self.at(j, kp) - self.at(j, k)) / dth;
                acc += (gx * gx + gt * gt) * dx * dth;
            }
        }
        acc
    }

    pub fn write_density_rows<W: Write>(&self, out: &mut W, t: f64) -> std::io::Result<()> {
        for j in 0..self.n_x {
            for k in 0..self.n_theta {
                writeln!(out, "{},{},{},{}", t, self.x(j), self.theta(k), self.at(j, k))?;
            }
        }
        Ok(())
    }

    pub fn write_field_rows<W: Write>(&self, out: &mut W, t: f64) -> std::io::Result<()> {
        for j in 0..self.n_x {
            writeln!(out, "{},{},{}", t, self.x(j), self.c[j])?;
        }
        Ok(())
    }
}

pub(crate) fn total_mass(rho: &[f64], dx: f64, dtheta: f64) -> f64 {
    rho.iter().sum::<f64>() * dx * dtheta
}

pub(crate) fn theta_integral(rho: &[f64], n_x: usize, n_theta: usize) -> Vec<f64> {
    let dth = TAU / n_theta as f64;
    rho.chunks(n_theta)
        .take(n_x)
        .map(|row| row.iter().sum::<f64>() * dth)
        .collect()
}

pub const DENSITY_HEADER: &str = "t,x,theta,rho";
pub const FIELD_HEADER: &str = "t,x,c";
