//! Finite-difference oracle for the G-heat equation `u_t = G(D^2 u)`.
//!
//! `u(T, 0)` equals the sublinear expectation of `phi(X)` for a G-normal `X`
//! with variance band `T [lo, hi]`. The scheme is explicit in time with a
//! central second difference, and the nonlinearity is applied pointwise to
//! the discrete second derivative, which keeps it monotone under the CFL
//! restriction.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{g_scalar, psd_jitter, GFunction, VolBand};

/// Truncation padding in units of `sigma_hi sqrt(T)`.
pub const MIN_PADDING: f64 = 6.0;
/// Safety factor applied to the CFL limit by [`PdeGrid::auto`].
pub const CFL_SAFETY: f64 = 0.9;

/// A payoff together with its declared polynomial growth degree.
#[derive(Clone)]
pub struct PayoffSpec<F> {
    pub evaluator: F,
    pub growth_degree: u32,
}

impl<F> PayoffSpec<F> {
    pub fn new(evaluator: F, growth_degree: u32) -> Self {
        Self {
            evaluator,
            growth_degree,
        }
    }
}

/// Spatial truncation and time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub half_width: f64,
    /// Points per axis; odd, so that the origin is a node.
    pub nx: usize,
    pub dt: f64,
}

impl PdeGrid {
    /// Grid with padding `(6 + degree) sigma_hi sqrt(T)` and the largest
    /// stable step scaled by [`CFL_SAFETY`].
    pub fn auto(band: VolBand, horizon: f64, dim: usize, nx: usize, growth_degree: u32) -> Self {
        let nx = nx | 1;
        let half_width =
            ((MIN_PADDING + growth_degree as f64) * band.sigma_hi() * horizon.sqrt()).max(1e-300);
        let dx = 2.0 * half_width / (nx - 1) as f64;
        let dt = if band.hi() > 0.0 {
            CFL_SAFETY * dx * dx / (dim as f64 * band.hi())
        } else {
            horizon
        };
        Self { half_width, nx, dt }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.nx - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    /// Validates the grid and returns `(steps, step)` covering `[0, T]`.
    fn schedule(&self, band: VolBand, horizon: f64, dim: usize) -> Result<(usize, f64)> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if self.nx < 5 || self.nx % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "nx must be odd and at least 5, got {}",
                self.nx
            )));
        }
        let need = MIN_PADDING * band.sigma_hi() * horizon.sqrt();
        if !(self.half_width >= need) || !self.half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half_width = {} is below the padding {need}",
                self.half_width
            )));
        }
        let dx = self.dx();
        let limit = dx * dx / (dim as f64 * band.hi());
        if !(self.dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.dt > limit {
            return Err(Error::Cfl {
                dt: self.dt,
                limit,
            });
        }
        let steps = (horizon / self.dt).ceil().max(1.0) as usize;
        Ok((steps, horizon / steps as f64))
    }
}

/// `sup E[phi(X)]` for `X` G-normal with variance band `T [lo, hi]`.
pub fn solve_gheat_1d<F>(band: VolBand, payoff: &PayoffSpec<F>, horizon: f64, grid: &PdeGrid) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if band.hi() == 0.0 {
        return finite_at_origin((payoff.evaluator)(0.0));
    }
    let (steps, dt) = grid.schedule(band, horizon, 1)?;
    let n = grid.nx;
    let dx = grid.dx();
    let mut u: Vec<f64> = (0..n).map(|i| (payoff.evaluator)(grid.node(i))).collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::PdeBlowUp { step: 0 });
    }
    let mut d2 = vec![0.0; n];
    let r = dt / (dx * dx);
    for step in 1..=steps {
        for i in 1..n - 1 {
            d2[i] = u[i + 1] - 2.0 * u[i] + u[i - 1];
        }
        d2[0] = d2[1];
        d2[n - 1] = d2[n - 2];
        for i in 0..n {
            u[i] += g_scalar(band, r * d2[i]);
        }
        if !u[n / 2].is_finite() || !u[0].is_finite() || !u[n - 1].is_finite() {
            return Err(Error::PdeBlowUp { step });
        }
    }
    Ok(u[n / 2])
}

fn finite_at_origin(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::PdeBlowUp { step: 0 })
    }
}

/// Symmetric square root via the eigendecomposition; eigenvalues below
/// `1e-10 max` are treated as zero so rank-deficient Gram matrices give
/// exactly degenerate factors.
pub fn psd_sqrt(gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = psd_jitter(gram.clone())?;
    let eig = sym.symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let roots = eig
        .eigenvalues
        .map(|l| if l > 1e-10 * top { l.sqrt() } else { 0.0 });
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// `sup E[phi(W_h, W_k)]` for the pair whose G-function is `gf`.
///
/// The pair is written as `C Y` with `C` the symmetric square root of the
/// Gram matrix and `Y` a G-normal vector with scalar control `theta I`. In
/// the `Y` coordinates the equation is `u_t = g(Laplacian u)`, which the
/// five-point stencil discretizes monotonically for any PSD Gram.
pub fn solve_gheat_2d<F>(gf: &GFunction, payoff: &PayoffSpec<F>, horizon: f64, grid: &PdeGrid) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if gf.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: gf.dim(),
        });
    }
    let band = gf.band();
    if band.hi() == 0.0 || gf.gram().amax() == 0.0 {
        return finite_at_origin((payoff.evaluator)(0.0, 0.0));
    }
    let c = psd_sqrt(gf.gram())?;
    let (steps, dt) = grid.schedule(band, horizon, 2)?;
    let n = grid.nx;
    let dx = grid.dx();
    let nodes: Vec<f64> = (0..n).map(|i| grid.node(i)).collect();
    // row-major, u[i * n + j] at (y1 = nodes[i], y2 = nodes[j])
    let mut u: Vec<f64> = (0..n * n)
        .map(|k| {
            let (y1, y2) = (nodes[k / n], nodes[k % n]);
            (payoff.evaluator)(c[(0, 0)] * y1 + c[(0, 1)] * y2, c[(1, 0)] * y1 + c[(1, 1)] * y2)
        })
        .collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::PdeBlowUp { step: 0 });
    }
    let r = dt / (dx * dx);
    let mut next = vec![0.0; n * n];
    let clamp = |i: usize| i.clamp(1, n - 2);
    for step in 1..=steps {
        next.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let ic = clamp(i);
            for (j, out) in row.iter_mut().enumerate() {
                let jc = clamp(j);
                let d11 = u[(ic + 1) * n + j] - 2.0 * u[ic * n + j] + u[(ic - 1) * n + j];
                let d22 = u[i * n + jc + 1] - 2.0 * u[i * n + jc] + u[i * n + jc - 1];
                *out = u[i * n + j] + g_scalar(band, r * (d11 + d22));
            }
        });
        std::mem::swap(&mut u, &mut next);
        let centre = u[(n / 2) * n + n / 2];
        if !centre.is_finite() || !u[0].is_finite() || !u[n * n - 1].is_finite() {
            return Err(Error::PdeBlowUp { step });
        }
    }
    Ok(u[(n / 2) * n + n / 2])
}

/// Which end of the band a moment is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// `(k - 1)!!` with `(-1)!! = 0!! = 1`.
pub fn double_factorial(k: i64) -> f64 {
    let mut acc = 1.0;
    let mut j = k;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}

/// Absolute moment `E|X|^k` at one end of the band for `X` G-normal with
/// variance band `norm_h^2 [lo, hi]`.
///
/// Upper: `2 (k-1)!! (norm sigma_hi)^k / sqrt(2 pi)` for odd `k` and
/// `(k-1)!! (norm sigma_hi)^k` for even `k`; lower uses `sigma_lo`.
pub fn gnormal_abs_moment(band: VolBand, norm_h: f64, k: u32, side: Side) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("moment order must be positive"));
    }
    if !(norm_h >= 0.0) {
        return Err(Error::invalid(format!("norm must be nonnegative, got {norm_h}")));
    }
    let sigma = match side {
        Side::Upper => band.sigma_hi(),
        Side::Lower => band.sigma_lo(),
    };
    let scale = (norm_h * sigma).powi(k as i32);
    let df = double_factorial(k as i64 - 1);
    Ok(if k % 2 == 1 {
        2.0 * df * scale / (2.0 * std::f64::consts::PI).sqrt()
    } else {
        df * scale
    })
}
