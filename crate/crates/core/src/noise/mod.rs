//! Time-sliced G-spacetime white noise in orthonormal-mode coordinates.
//!
//! Given a scenario, the increment `dW_{j,n}` of slice `j` against basis
//! element `e_n` is `N(0, theta_j dt_j)`, independent across slices and
//! modes. Test-function increments are derived through coefficients, so
//! every integrator and both SPDE solvers read the same numbers.

mod integral;
pub mod io;

pub(crate) use integral::integrate_idgbm_coeffs;
pub use integral::{
    idgbm_path, integrate_elementary, integrate_idgbm, isometry_report, AdaptedFn, AdaptedView,
    ElementaryField, IdGbmIntegral, IdGbmPath, Integrand, IsometryReport,
};

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Basis, L2Element, MeasureSpace, Repr};
use crate::scenario::{uniform_grid, ScenarioPath};
use crate::seeding::stream_rng;

/// `0 = t_0 < t_1 < ... < t_m = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePartition {
    times: Vec<f64>,
}

impl TimePartition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::invalid("partition must start at 0 and have a slice"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("partition must be finite and strictly increasing"));
        }
        Ok(Self { times })
    }

    pub fn uniform(horizon: f64, slices: usize) -> Result<Self> {
        Self::new(uniform_grid(horizon, slices)?)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_slices(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn dt(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        0.5 * (self.times[j] + self.times[j + 1])
    }

    /// Each slice split into `factor` equal pieces.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("refinement factor must be positive"));
        }
        let mut t = Vec::with_capacity(self.n_slices() * factor + 1);
        for j in 0..self.n_slices() {
            for i in 0..factor {
                t.push(self.times[j] + self.dt(j) * i as f64 / factor as f64);
            }
        }
        t.push(self.horizon());
        Self::new(t)
    }
}

/// Where the noise lives: time partition, space and mode truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLayout {
    pub partition: TimePartition,
    pub space: MeasureSpace,
    pub basis: Basis,
    pub n_modes: usize,
}

impl NoiseLayout {
    pub fn new(partition: TimePartition, space: MeasureSpace, basis: Basis, n_modes: usize) -> Result<Self> {
        let limit = basis.band_limit(&space);
        if n_modes == 0 || n_modes > limit {
            return Err(Error::BandLimit {
                requested: n_modes,
                limit,
            });
        }
        Ok(Self {
            partition,
            space,
            basis,
            n_modes,
        })
    }

    /// Per-slice `theta` of a scenario whose grid is a coarsening of the
    /// partition.
    pub fn slice_thetas(&self, scenario: &ScenarioPath) -> Result<Vec<f64>> {
        let p = self.partition.times();
        let tol = 1e-12 * self.partition.horizon();
        if (scenario.horizon() - self.partition.horizon()).abs() > tol {
            return Err(Error::Misaligned(format!(
                "scenario horizon {} differs from partition horizon {}",
                scenario.horizon(),
                self.partition.horizon()
            )));
        }
        for &s in &scenario.times()[1..scenario.times().len() - 1] {
            if !p.iter().any(|&t| (t - s).abs() <= tol) {
                return Err(Error::Misaligned(format!(
                    "scenario switch time {s} is not a partition point"
                )));
            }
        }
        Ok((0..self.partition.n_slices())
            .map(|j| scenario.theta_at(self.partition.midpoint(j)))
            .collect())
    }

    /// Coefficients of `f` against the first `n_modes` basis elements.
    ///
    /// Coefficient-form elements in the noise basis must vanish beyond the
    /// truncation; other forms are projected.
    pub fn functional_coeffs(&self, f: &L2Element) -> Result<Vec<f64>> {
        if f.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        if let Repr::Coeffs { basis, coeffs } = f.repr() {
            if *basis == self.basis {
                if let Some(pos) = coeffs.iter().rposition(|c| *c != 0.0) {
                    if pos >= self.n_modes {
                        return Err(Error::BandLimit {
                            requested: pos + 1,
                            limit: self.n_modes,
                        });
                    }
                }
            }
        }
        f.coeffs(self.basis, self.n_modes)
    }
}

/// One sampled noise path: `m x n_modes` increments, row-major by slice.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    layout: Arc<NoiseLayout>,
    scenario: ScenarioPath,
    thetas: Vec<f64>,
    seed: u64,
    increments: Vec<f64>,
}

/// Draws the increments for `scenario`. Mode `n` reads its own stream of
/// the seed, so truncation levels are nested and scenarios sharing a seed
/// share the underlying normals.
pub fn sample_noise(layout: Arc<NoiseLayout>, scenario: &ScenarioPath, seed: u64) -> Result<NoiseRealization> {
    let thetas = layout.slice_thetas(scenario)?;
    let m = layout.partition.n_slices();
    let n_modes = layout.n_modes;
    let mut increments = vec![0.0; m * n_modes];
    let scales: Vec<f64> = (0..m)
        .map(|j| (thetas[j] * layout.partition.dt(j)).sqrt())
        .collect();
    for n in 0..n_modes {
        let mut rng = stream_rng(seed, n as u64);
        for j in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            increments[j * n_modes + n] = scales[j] * z;
        }
    }
    Ok(NoiseRealization {
        layout,
        scenario: scenario.clone(),
        thetas,
        seed,
        increments,
    })
}

impl NoiseRealization {
    /// Assembles a realization from stored parts.
    pub fn from_parts(
        layout: Arc<NoiseLayout>,
        scenario: ScenarioPath,
        seed: u64,
        increments: Vec<f64>,
    ) -> Result<Self> {
        let thetas = layout.slice_thetas(&scenario)?;
        let want = layout.partition.n_slices() * layout.n_modes;
        if increments.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: increments.len(),
            });
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("increments must be finite"));
        }
        Ok(Self {
            layout,
            scenario,
            thetas,
            seed,
            increments,
        })
    }

    /// The same path with every increment zero.
    pub fn zeroed(&self) -> Self {
        let mut z = self.clone();
        z.increments.iter_mut().for_each(|v| *v = 0.0);
        z
    }

    pub fn layout(&self) -> &NoiseLayout {
        &self.layout
    }

    pub fn layout_arc(&self) -> Arc<NoiseLayout> {
        self.layout.clone()
    }

    pub fn partition(&self) -> &TimePartition {
        &self.layout.partition
    }

    pub fn scenario(&self) -> &ScenarioPath {
        &self.scenario
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_slices(&self) -> usize {
        self.layout.partition.n_slices()
    }

    pub fn n_modes(&self) -> usize {
        self.layout.n_modes
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, j: usize, n: usize) -> f64 {
        self.increments[j * self.layout.n_modes + n]
    }

    /// Increments of slice `j` for all modes.
    pub fn slice(&self, j: usize) -> &[f64] {
        let n = self.layout.n_modes;
        &self.increments[j * n..(j + 1) * n]
    }

    /// `sum_n <f, e_n> dW_{j,n}`.
    pub fn eval_functional(&self, f: &L2Element, j: usize) -> Result<f64> {
        let c = self.layout.functional_coeffs(f)?;
        Ok(self.eval_coeffs(&c, j))
    }

    /// Slice increment against precomputed coefficients.
    pub fn eval_coeffs(&self, c: &[f64], j: usize) -> f64 {
        self.slice(j).iter().zip(c).map(|(w, c)| w * c).sum()
    }

    /// `W(t_j, f)` for `j = 0..=m`.
    pub fn path_of(&self, c: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_slices() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for j in 0..self.n_slices() {
            acc += self.eval_coeffs(c, j);
            out.push(acc);
        }
        out
    }

    /// Splits every slice into `factor` sub-slices with Gaussian bridge
    /// increments that sum back to the original ones, so the coarse path is
    /// unchanged. The sub-increments read streams of `bridge_seed`.
    pub fn refine(&self, factor: usize, bridge_seed: u64) -> Result<Self> {
        let partition = self.layout.partition.refine(factor)?;
        let layout = Arc::new(NoiseLayout {
            partition,
            ..(*self.layout).clone()
        });
        let m = self.n_slices();
        let n_modes = self.n_modes();
        let k = factor as f64;
        let mut increments = vec![0.0; m * factor * n_modes];
        for n in 0..n_modes {
            let mut rng = stream_rng(bridge_seed, n as u64);
            let mut ys = vec![0.0; factor];
            for j in 0..m {
                let sd = (self.thetas[j] * self.layout.partition.dt(j) / k).sqrt();
                for y in ys.iter_mut() {
                    *y = sd * rng.sample::<f64, _>(StandardNormal);
                }
                let shift = (ys.iter().sum::<f64>() - self.increment(j, n)) / k;
                for (i, y) in ys.iter().enumerate() {
                    increments[(j * factor + i) * n_modes + n] = y - shift;
                }
            }
        }
        Self::from_parts(layout, self.scenario.clone(), self.seed, increments)
    }
}
