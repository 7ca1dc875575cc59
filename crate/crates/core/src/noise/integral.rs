//! Stochastic integrals against the noise: elementary integrands, the
//! isometry bands, the Hilbert-Schmidt embedded Brownian motion and its
//! integral.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{NoiseLayout, NoiseRealization, TimePartition};
use crate::error::{Error, Result};
use crate::hilbert::{HsOperator, L2Element};
use crate::scenario::ScenarioPath;
use crate::seeding::path_seed;
use crate::sets::IntervalSet;
use crate::stats::mean_se;

/// Read-only view of the increments strictly before slice `slice`.
pub struct AdaptedView<'a> {
    slice: usize,
    noise: &'a NoiseRealization,
}

impl<'a> AdaptedView<'a> {
    pub fn slice(&self) -> usize {
        self.slice
    }

    pub fn times(&self) -> &[f64] {
        &self.noise.partition().times()[..=self.slice]
    }

    /// `dW_{j,n}`; reading a slice at or after the current one is an error.
    pub fn increment(&self, j: usize, n: usize) -> Result<f64> {
        if j >= self.slice {
            return Err(Error::Adaptedness {
                slice: self.slice,
                requested: j,
            });
        }
        Ok(self.noise.increment(j, n))
    }

    /// `W(t_slice, f)` from the coefficients of `f`.
    pub fn functional(&self, c: &[f64]) -> f64 {
        (0..self.slice).map(|j| self.noise.eval_coeffs(c, j)).sum()
    }
}

pub type AdaptedFn = Arc<dyn Fn(&AdaptedView) -> Result<f64> + Send + Sync>;

/// Coefficient `X_{ij}` of an elementary integrand.
#[derive(Clone)]
pub enum Integrand {
    Constant(f64),
    /// A functional of the increments before the slice.
    Adapted(AdaptedFn),
}

impl std::fmt::Debug for Integrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Integrand::Constant(c) => write!(f, "Constant({c})"),
            Integrand::Adapted(_) => write!(f, "Adapted(..)"),
        }
    }
}

/// `f(t, x) = sum_{i,j} X_{ij} 1_{A_i}(x) 1_{[t_j, t_{j+1})}(t)`.
#[derive(Debug, Clone)]
pub struct ElementaryField {
    sets: Vec<IntervalSet>,
    partition: TimePartition,
    /// `coeffs[i][j]`.
    coeffs: Vec<Vec<Integrand>>,
}

impl ElementaryField {
    pub fn new(sets: Vec<IntervalSet>, partition: TimePartition, coeffs: Vec<Vec<Integrand>>) -> Result<Self> {
        if coeffs.len() != sets.len() {
            return Err(Error::DimensionMismatch {
                expected: sets.len(),
                got: coeffs.len(),
            });
        }
        for row in &coeffs {
            if row.len() != partition.n_slices() {
                return Err(Error::DimensionMismatch {
                    expected: partition.n_slices(),
                    got: row.len(),
                });
            }
        }
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                if !sets[a].is_disjoint(&sets[b]) {
                    return Err(Error::invalid(format!("sets {a} and {b} overlap")));
                }
            }
        }
        Ok(Self {
            sets,
            partition,
            coeffs,
        })
    }

    /// Deterministic integrand from a constant table `x[i][j]`.
    pub fn deterministic(sets: Vec<IntervalSet>, partition: TimePartition, x: &[Vec<f64>]) -> Result<Self> {
        let coeffs = x
            .iter()
            .map(|row| row.iter().map(|&v| Integrand::Constant(v)).collect())
            .collect();
        Self::new(sets, partition, coeffs)
    }

    pub fn sets(&self) -> &[IntervalSet] {
        &self.sets
    }

    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    pub fn is_deterministic(&self) -> bool {
        self.coeffs
            .iter()
            .flatten()
            .all(|c| matches!(c, Integrand::Constant(_)))
    }

    fn set_coeffs(&self, layout: &NoiseLayout) -> Result<Vec<Vec<f64>>> {
        self.sets
            .iter()
            .map(|s| layout.functional_coeffs(&L2Element::indicator(layout.space, s.clone())?))
            .collect()
    }
}

/// Per-path outcome: the integral, `sum_j dt_j ||f_j||^2` and
/// `sum_j theta_j dt_j ||f_j||^2`, with `f_j` the integrand as seen by the
/// truncated noise.
struct PathIntegral {
    value: f64,
    norm_sq: f64,
    weighted_norm_sq: f64,
}

fn integrate_prepared(field: &ElementaryField, cs: &[Vec<f64>], noise: &NoiseRealization) -> Result<PathIntegral> {
    if field.partition != *noise.partition() {
        return Err(Error::Misaligned(
            "integrand and noise use different partitions".into(),
        ));
    }
    let n_modes = noise.n_modes();
    let mut value = 0.0;
    let mut norm_sq = 0.0;
    let mut weighted = 0.0;
    let mut v = vec![0.0; n_modes];
    for j in 0..noise.n_slices() {
        let view = AdaptedView { slice: j, noise };
        v.iter_mut().for_each(|x| *x = 0.0);
        for (i, c) in cs.iter().enumerate() {
            let x = match &field.coeffs[i][j] {
                Integrand::Constant(x) => *x,
                Integrand::Adapted(f) => f(&view)?,
            };
            if !x.is_finite() {
                return Err(Error::invalid(format!("integrand X[{i}][{j}] is not finite")));
            }
            if x != 0.0 {
                for (vn, cn) in v.iter_mut().zip(c) {
                    *vn += x * cn;
                }
            }
        }
        value += noise.eval_coeffs(&v, j);
        let fj: f64 = v.iter().map(|x| x * x).sum();
        let dt = noise.partition().dt(j);
        norm_sq += dt * fj;
        weighted += noise.thetas()[j] * dt * fj;
    }
    Ok(PathIntegral {
        value,
        norm_sq,
        weighted_norm_sq: weighted,
    })
}

/// `sum_{i,j} X_{ij} (W(t_{j+1}, 1_{A_i}) - W(t_j, 1_{A_i}))` on one path.
pub fn integrate_elementary(field: &ElementaryField, noise: &NoiseRealization) -> Result<f64> {
    let cs = field.set_coeffs(noise.layout())?;
    Ok(integrate_prepared(field, &cs, noise)?.value)
}

/// Outcome of [`isometry_report`].
#[derive(Debug, Clone, Serialize)]
pub struct IsometryReport {
    /// `||f||^2_{M^2}`: exact for deterministic integrands, otherwise the
    /// scenario-sup Monte Carlo estimate of `E int int f^2`.
    pub m2_norm_sq: f64,
    pub m2_std_error: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub sup_second_moment: f64,
    pub sup_std_error: f64,
    pub inf_second_moment: f64,
    pub inf_std_error: f64,
    /// Per scenario, `E[I^2]`, its standard error and the classical isometry
    /// value `E sum_j theta_j dt_j ||f_j||^2`.
    pub per_scenario: Vec<(f64, f64, f64)>,
    /// Largest z-score of `I^2 - sum_j theta_j dt_j ||f_j||^2` over scenarios.
    pub max_isometry_z: f64,
    pub deterministic: bool,
    /// For deterministic integrands: z-scores of the constant-extremal
    /// scenarios against `lo ||f||^2` and `hi ||f||^2`, when present.
    pub attainment_z: (Option<f64>, Option<f64>),
    pub n_se: f64,
    pub pass: bool,
}

/// Scenario sweep of `E|I(f)|^2` against the band
/// `[lo ||f||^2_{M^2}, hi ||f||^2_{M^2}]`.
pub fn isometry_report(
    field: &ElementaryField,
    layout: Arc<NoiseLayout>,
    scenarios: &[ScenarioPath],
    n_paths: usize,
    seed: u64,
    n_se: f64,
) -> Result<IsometryReport> {
    if scenarios.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    if n_paths < 2 {
        return Err(Error::invalid("isometry needs at least two paths"));
    }
    let band = scenarios[0].band();
    let cs = field.set_coeffs(&layout)?;
    let mut per = Vec::with_capacity(scenarios.len());
    let mut norm_means = Vec::with_capacity(scenarios.len());
    let mut max_z: f64 = 0.0;
    let mut exact_norm = None;
    for sc in scenarios {
        let rows: Vec<PathIntegral> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let w = super::sample_noise(layout.clone(), sc, path_seed(seed, i as u64))?;
                integrate_prepared(field, &cs, &w)
            })
            .collect::<Result<_>>()?;
        if exact_norm.is_none() && field.is_deterministic() {
            exact_norm = Some(rows[0].norm_sq);
        }
        let sq: Vec<f64> = rows.iter().map(|r| r.value * r.value).collect();
        let diff: Vec<f64> = rows
            .iter()
            .map(|r| r.value * r.value - r.weighted_norm_sq)
            .collect();
        let (m, se) = mean_se(&sq);
        let (dm, dse) = mean_se(&diff);
        let (wm, _) = mean_se(&rows.iter().map(|r| r.weighted_norm_sq).collect::<Vec<_>>());
        norm_means.push(mean_se(&rows.iter().map(|r| r.norm_sq).collect::<Vec<_>>()));
        max_z = max_z.max(z_score(dm, dse));
        per.push((m, se, wm));
    }
    let (m2, m2_se) = match exact_norm {
        Some(v) => (v, 0.0),
        None => norm_means
            .iter()
            .copied()
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a }),
    };
    let (sup_i, sup) = per
        .iter()
        .enumerate()
        .fold((0, per[0]), |a, (i, b)| if b.0 > a.1 .0 { (i, *b) } else { a });
    let (_, inf) = per
        .iter()
        .enumerate()
        .fold((0, per[0]), |a, (i, b)| if b.0 < a.1 .0 { (i, *b) } else { a });
    let _ = sup_i;
    let lower = band.lo() * m2;
    let upper = band.hi() * m2;
    let slack_hi = n_se * (sup.1.powi(2) + (band.hi() * m2_se).powi(2)).sqrt();
    let slack_lo = n_se * (sup.1.powi(2) + (band.lo() * m2_se).powi(2)).sqrt();
    let mut pass = sup.0 <= upper + slack_hi && sup.0 >= lower - slack_lo && max_z <= n_se;
    let deterministic = field.is_deterministic();
    let mut attainment = (None, None);
    if deterministic {
        pass &= inf.0 >= lower - n_se * inf.1;
        let find = |theta: f64| scenarios.iter().position(|s| s.is_constant_at(theta));
        if let Some(i) = find(band.lo()) {
            let z = z_score(per[i].0 - lower, per[i].1);
            pass &= z <= n_se;
            attainment.0 = Some(z);
        }
        if let Some(i) = find(band.hi()) {
            let z = z_score(per[i].0 - upper, per[i].1);
            pass &= z <= n_se;
            attainment.1 = Some(z);
        }
    }
    Ok(IsometryReport {
        m2_norm_sq: m2,
        m2_std_error: m2_se,
        lower_bound: lower,
        upper_bound: upper,
        sup_second_moment: sup.0,
        sup_std_error: sup.1,
        inf_second_moment: inf.0,
        inf_std_error: inf.1,
        per_scenario: per,
        max_isometry_z: max_z,
        deterministic,
        attainment_z: attainment,
        n_se,
        pass,
    })
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff.abs() / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `W(t) = sum_n a_n W(t, e_n) e_n` on the partition.
#[derive(Debug, Clone)]
pub struct IdGbmPath {
    q: HsOperator,
    /// `modes[j][n] = W(t_j, e_n)`.
    modes: Vec<Vec<f64>>,
    noise: NoiseRealization,
}

/// Embeds `noise` through `q`.
pub fn idgbm_path(q: &HsOperator, noise: &NoiseRealization) -> Result<IdGbmPath> {
    if q.basis() != noise.layout().basis {
        return Err(Error::invalid("operator and noise use different bases"));
    }
    if q.n_max() > noise.n_modes() {
        return Err(Error::BandLimit {
            requested: q.n_max(),
            limit: noise.n_modes(),
        });
    }
    let n = q.n_max();
    let mut modes = vec![vec![0.0; n]];
    for j in 0..noise.n_slices() {
        let prev = &modes[j];
        let next: Vec<f64> = (0..n).map(|k| prev[k] + noise.increment(j, k)).collect();
        modes.push(next);
    }
    Ok(IdGbmPath {
        q: q.clone(),
        modes,
        noise: noise.clone(),
    })
}

impl IdGbmPath {
    pub fn times(&self) -> &[f64] {
        self.noise.partition().times()
    }

    /// `W(t_j, e_n)`.
    pub fn mode_value(&self, j: usize, n: usize) -> f64 {
        self.modes[j][n]
    }

    /// `W(t_j)` as an element of `L^2`.
    pub fn value_at(&self, j: usize) -> Result<L2Element> {
        let c = self.modes[j]
            .iter()
            .zip(self.q.eigenvalues())
            .map(|(w, a)| a * w)
            .collect();
        L2Element::from_coeffs(self.noise.layout().space, self.q.basis(), c)
    }

    /// `||W(t_j)||^2 = sum_n a_n^2 W(t_j, e_n)^2`.
    pub fn norm_process(&self, j: usize) -> f64 {
        self.modes[j]
            .iter()
            .zip(self.q.eigenvalues())
            .map(|(w, a)| a * a * w * w)
            .sum()
    }
}

/// Integral against the noise with the truncation tail bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdGbmIntegral {
    pub value: f64,
    /// `hi sum_j dt_j sum_{i >= N} <f_j, e_i>^2` up to the band limit.
    pub tail_bound: f64,
}

/// `sum_{i < N} sum_j <f_j, e_i> dW_{j,i}` for an integrand constant on
/// each slice (`f[j]` on slice `j`).
pub fn integrate_idgbm(f: &[L2Element], noise: &NoiseRealization, n_modes: usize) -> Result<IdGbmIntegral> {
    let layout = noise.layout();
    if f.len() != noise.n_slices() {
        return Err(Error::DimensionMismatch {
            expected: noise.n_slices(),
            got: f.len(),
        });
    }
    if n_modes > noise.n_modes() {
        return Err(Error::BandLimit {
            requested: n_modes,
            limit: noise.n_modes(),
        });
    }
    let full = layout.basis.band_limit(&layout.space);
    let coeffs: Vec<Vec<f64>> = f
        .iter()
        .map(|fj| {
            if fj.space() != layout.space {
                return Err(Error::SpaceMismatch);
            }
            fj.coeffs(layout.basis, full)
        })
        .collect::<Result<_>>()?;
    Ok(integrate_idgbm_coeffs(&coeffs, noise, n_modes))
}

/// [`integrate_idgbm`] on precomputed coefficient rows.
pub(crate) fn integrate_idgbm_coeffs(coeffs: &[Vec<f64>], noise: &NoiseRealization, n_modes: usize) -> IdGbmIntegral {
    let hi = noise.scenario().band().hi();
    let mut value = 0.0;
    let mut tail = 0.0;
    for (j, c) in coeffs.iter().enumerate() {
        let k = n_modes.min(c.len());
        value += noise.eval_coeffs(&c[..k], j);
        tail += noise.partition().dt(j) * c[k..].iter().map(|x| x * x).sum::<f64>();
    }
    IdGbmIntegral {
        value,
        tail_bound: hi * tail,
    }
}
