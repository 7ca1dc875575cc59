//! The stochastic heat equation with mass on `[0, 2 pi]`,
//! `d phi = (phi_xx - m^2 phi) dt + W(dt, dx)`, with periodic and Neumann
//! conditions. Two solvers read the same [`NoiseRealization`]: the Green
//! kernel mild form and the spectral G-Ornstein-Uhlenbeck modes.

mod contraction;
mod diagnostics;
mod kernel;
mod solve;

pub use contraction::{contraction_check, ContractionReport};
pub use diagnostics::{
    ou_cov_bound_check, ou_cov_grid, second_moment_sup, weak_solution_residual, OuCovReport,
    SecondMomentReport, TestFunction, TimeProfile,
};
pub use kernel::GreenKernel;
pub use solve::{cosine_coeffs, heat_semigroup, mild_solve, spectral_solve, MildSolver, SpectralSolver, SINE_TOLERANCE};

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hilbert::{Basis, MeasureSpace};
use crate::noise::io::fmt_f64;
use crate::noise::{NoiseLayout, NoiseRealization, TimePartition};

/// Mass, discretization and truncation of one SPDE run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdeConfig {
    pub mass: f64,
    pub n_modes: usize,
    /// Spatial grid `x_k = 2 pi k / nx`, `k < nx`.
    pub nx: usize,
    pub partition: TimePartition,
    pub space: MeasureSpace,
}

impl Default for SpdeConfig {
    fn default() -> Self {
        Self::new(1.0, 0.5, 64, 64, 128).expect("default SPDE config is valid")
    }
}

impl SpdeConfig {
    /// Uniform partition of `[0, horizon]` into `slices` pieces.
    pub fn new(mass: f64, horizon: f64, slices: usize, n_modes: usize, nx: usize) -> Result<Self> {
        Self::with_partition(mass, TimePartition::uniform(horizon, slices)?, n_modes, nx)
    }

    pub fn with_partition(mass: f64, partition: TimePartition, n_modes: usize, nx: usize) -> Result<Self> {
        let cfg = Self {
            mass,
            n_modes,
            nx,
            partition,
            space: MeasureSpace::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the parameter space, which must still be `[0, 2 pi]`.
    pub fn with_space(mut self, space: MeasureSpace) -> Result<Self> {
        self.space = space;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::invalid(format!("mass must be positive, got {}", self.mass)));
        }
        if (self.space.length() - 2.0 * PI).abs() > 1e-12 {
            return Err(Error::invalid("the SPDE domain is [0, 2 pi]"));
        }
        let limit = Basis::Cosine.band_limit(&self.space);
        if self.n_modes == 0 || self.n_modes > limit {
            return Err(Error::BandLimit {
                requested: self.n_modes,
                limit,
            });
        }
        if self.nx < 4 {
            return Err(Error::invalid(format!("nx must be at least 4, got {}", self.nx)));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.partition.horizon()
    }

    /// `a_n = -(n^2 + m^2)`.
    pub fn drift(&self, n: usize) -> f64 {
        -((n * n) as f64 + self.mass * self.mass)
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        let h = self.dx();
        (0..self.nx).map(|k| k as f64 * h).collect()
    }

    /// Cosine noise layout matching this configuration.
    pub fn layout(&self) -> Result<NoiseLayout> {
        NoiseLayout::new(self.partition.clone(), self.space, Basis::Cosine, self.n_modes)
    }

    /// Every slice split into `factor` pieces.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Ok(Self {
            partition: self.partition.refine(factor)?,
            ..self.clone()
        })
    }

    pub(crate) fn check_noise(&self, noise: &NoiseRealization) -> Result<()> {
        let l = noise.layout();
        if l.basis != Basis::Cosine {
            return Err(Error::Misaligned("SPDE noise must use the cosine basis".into()));
        }
        if l.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        if l.partition != self.partition {
            return Err(Error::Misaligned(
                "noise partition differs from the solver partition".into(),
            ));
        }
        if l.n_modes < self.n_modes {
            return Err(Error::BandLimit {
                requested: self.n_modes,
                limit: l.n_modes,
            });
        }
        Ok(())
    }
}

/// One spectral mode `d phi_n = a phi_n dt + dW_n`, `phi_n(0) = psi_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GOUMode {
    pub index: usize,
    pub drift: f64,
    pub psi: f64,
}

impl GOUMode {
    pub fn new(index: usize, mass: f64, psi: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() || !psi.is_finite() {
            return Err(Error::invalid("mode needs positive mass and finite psi"));
        }
        Ok(Self {
            index,
            drift: -((index * index) as f64 + mass * mass),
            psi,
        })
    }

    /// `psi e^{a t}`.
    pub fn mean(&self, t: f64) -> f64 {
        self.psi * (self.drift * t).exp()
    }

    /// `(hi / 2a)(e^{a(s+t)} - e^{a|t-s|})`.
    pub fn cov_bound(&self, s: f64, t: f64, hi: f64) -> f64 {
        let a = self.drift;
        hi / (2.0 * a) * ((a * (s + t)).exp() - (a * (t - s).abs()).exp())
    }

    /// Covariance of the classical OU process with variance rate `theta`.
    pub fn classical_cov(&self, s: f64, t: f64, theta: f64) -> f64 {
        self.cov_bound(s, t, theta)
    }

    /// Stochastic part at the partition points:
    /// `S_{j+1} = e^{a dt} S_j + e^{a(t_{j+1} - s*_j)} dW_{j,n}`.
    pub fn stochastic_path(&self, noise: &NoiseRealization) -> Result<Vec<f64>> {
        if self.index >= noise.n_modes() {
            return Err(Error::BandLimit {
                requested: self.index + 1,
                limit: noise.n_modes(),
            });
        }
        let p = noise.partition();
        let mut out = Vec::with_capacity(p.n_slices() + 1);
        let mut s = 0.0;
        out.push(s);
        for j in 0..p.n_slices() {
            let dt = p.dt(j);
            s = (self.drift * dt).exp() * s + (self.drift * 0.5 * dt).exp() * noise.increment(j, self.index);
            out.push(s);
        }
        Ok(out)
    }

    /// `psi e^{a t_j} + S_j`.
    pub fn path(&self, noise: &NoiseRealization) -> Result<Vec<f64>> {
        let s = self.stochastic_path(noise)?;
        Ok(noise
            .partition()
            .times()
            .iter()
            .zip(s)
            .map(|(&t, s)| self.mean(t) + s)
            .collect())
    }
}

/// A solved field on the partition times and the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPath {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    /// `values[j][k] = phi(t_j, x_k)`.
    pub values: Vec<Vec<f64>>,
    /// Cosine coefficients `modes[j][n]` when the solver is spectral.
    pub modes: Option<Vec<Vec<f64>>>,
}

impl FieldPath {
    /// `max |self - other| / max |other|` over all times and grid points.
    pub fn rel_sup_diff(&self, other: &FieldPath) -> Result<f64> {
        if self.times.len() != other.times.len() || self.xs.len() != other.xs.len() {
            return Err(Error::DimensionMismatch {
                expected: other.times.len() * other.xs.len(),
                got: self.times.len() * self.xs.len(),
            });
        }
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            for (x, y) in a.iter().zip(b) {
                diff = diff.max((x - y).abs());
                scale = scale.max(y.abs());
            }
        }
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    /// `<phi(t_j), e_n>` by the periodic trapezoid rule on the grid.
    pub fn grid_coeff(&self, j: usize, n: usize) -> f64 {
        let nx = self.xs.len();
        let h = 2.0 * PI / nx as f64;
        let s = if n == 0 { (2.0 * PI).sqrt().recip() } else { PI.sqrt().recip() };
        self.values[j]
            .iter()
            .zip(&self.xs)
            .map(|(v, &x)| v * s * (n as f64 * x).cos())
            .sum::<f64>()
            * h
    }

    /// CSV with columns `t,x,value`.
    pub fn snapshot_csv(&self) -> String {
        let mut out = String::from("t,x,value\n");
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, v) in self.xs.iter().zip(row) {
                let _ = writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(*x), fmt_f64(*v));
            }
        }
        out
    }

    /// CSV with columns `t,n,coefficient`; `None` for kernel solutions.
    pub fn mode_table_csv(&self) -> Option<String> {
        let modes = self.modes.as_ref()?;
        let mut out = String::from("t,n,coefficient\n");
        for (t, row) in self.times.iter().zip(modes) {
            for (n, c) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{n},{}", fmt_f64(*t), fmt_f64(*c));
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let cfg = SpdeConfig::default();
        assert_eq!(cfg.n_modes, 64);
        assert_eq!(cfg.nx, 128);
        assert_eq!(cfg.partition.n_slices(), 64);
        assert_eq!(cfg.drift(3), -10.0);
        assert!(SpdeConfig::new(0.0, 0.5, 4, 4, 16).is_err());
        assert!(SpdeConfig::new(1.0, 0.5, 4, 200, 16).is_err());
        assert!(SpdeConfig::new(1.0, 0.5, 4, 4, 2).is_err());
        let other = MeasureSpace::new(1.0, 64).unwrap();
        assert!(cfg.with_space(other).is_err());
    }

    #[test]
    fn ou_formulas() {
        let m = GOUMode::new(1, 1.0, 1.0).unwrap();
        assert_eq!(m.drift, -2.0);
        assert!((m.mean(0.5) - (-1.0f64).exp()).abs() < 1e-15);
        let v = m.cov_bound(0.4, 0.4, 4.0);
        assert!((v - 4.0 / 4.0 * (1.0 - (-1.6f64).exp())).abs() < 1e-14);
        assert_eq!(m.cov_bound(0.0, 0.3, 4.0), 0.0);
        assert!(m.cov_bound(0.3, 0.7, 4.0) > 0.0);
    }

    #[test]
    fn rel_diff_and_csv() {
        let a = FieldPath {
            times: vec![0.0, 1.0],
            xs: vec![0.0, 1.0],
            values: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            modes: Some(vec![vec![0.5], vec![0.25]]),
        };
        let mut b = a.clone();
        b.values[1][1] = 4.4;
        assert!((a.rel_sup_diff(&b).unwrap() - 0.4 / 4.4).abs() < 1e-15);
        assert_eq!(a.snapshot_csv().lines().count(), 5);
        assert!(a.mode_table_csv().unwrap().starts_with("t,n,coefficient\n"));
    }
}
