//! Scenario sets and the sublinear expectation.
//!
//! A sublinear expectation over the volatility band `[lo, hi]` is evaluated
//! as a supremum of classical expectations, one per piecewise-constant
//! variance-rate control ("scenario"). The G-functions of G-normal vectors
//! have closed forms and are evaluated exactly.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::path_rng;
use crate::stats::mean_se;

/// Relative tolerance on negative eigenvalues of Gram matrices.
pub const PSD_JITTER_TOL: f64 = 1e-10;

/// The variance-rate interval `[sigma_lo2, sigma_hi2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolBand {
    sigma_lo2: f64,
    sigma_hi2: f64,
}

impl VolBand {
    pub fn new(sigma_lo2: f64, sigma_hi2: f64) -> Result<Self> {
        if !sigma_lo2.is_finite() || !sigma_hi2.is_finite() {
            return Err(Error::InvalidBand("bounds must be finite".into()));
        }
        if sigma_lo2 < 0.0 {
            return Err(Error::InvalidBand(format!(
                "sigma_lo2 = {sigma_lo2} is negative"
            )));
        }
        if sigma_lo2 > sigma_hi2 {
            return Err(Error::InvalidBand(format!(
                "sigma_lo2 = {sigma_lo2} exceeds sigma_hi2 = {sigma_hi2}"
            )));
        }
        Ok(Self {
            sigma_lo2,
            sigma_hi2,
        })
    }

    /// Single-point band: classical probability with variance rate `s`.
    pub fn degenerate(s: f64) -> Result<Self> {
        Self::new(s, s)
    }

    pub fn lo(&self) -> f64 {
        self.sigma_lo2
    }

    pub fn hi(&self) -> f64 {
        self.sigma_hi2
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigma_lo2.sqrt()
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigma_hi2.sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma_lo2 == self.sigma_hi2
    }

    /// The band `[c lo, c hi]` of a variable scaled in variance by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.sigma_lo2, c * self.sigma_hi2)
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.sigma_lo2 && theta <= self.sigma_hi2
    }
}

impl Default for VolBand {
    fn default() -> Self {
        Self {
            sigma_lo2: 1.0,
            sigma_hi2: 4.0,
        }
    }
}

/// Piecewise-constant variance-rate control `theta(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPath {
    band: VolBand,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl ScenarioPath {
    /// `times` are the slice boundaries `0 = t_0 < ... < t_m`; `values[j]`
    /// holds on `[t_j, t_{j+1})`.
    pub fn new(band: VolBand, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidScenario("need at least one slice".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidScenario("time grid must start at 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidScenario(
                "time grid must be finite and strictly increasing".into(),
            ));
        }
        if values.len() + 1 != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len() - 1,
                got: values.len(),
            });
        }
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !band.contains(**v)) {
            return Err(Error::InvalidScenario(format!(
                "theta[{j}] = {v} lies outside [{}, {}]",
                band.lo(),
                band.hi()
            )));
        }
        Ok(Self {
            band,
            times,
            values,
        })
    }

    /// Constant control on a uniform grid.
    pub fn constant(band: VolBand, horizon: f64, slices: usize, theta: f64) -> Result<Self> {
        Self::new(band, uniform_grid(horizon, slices)?, vec![theta; slices])
    }

    pub fn band(&self) -> VolBand {
        self.band
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_slices(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn slice_duration(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    /// `int_0^T theta(t) dt`.
    pub fn integrated_variance(&self) -> f64 {
        (0..self.n_slices())
            .map(|j| self.values[j] * self.slice_duration(j))
            .sum()
    }

    /// Value of the control on the slice containing `t` (right-continuous).
    pub fn theta_at(&self, t: f64) -> f64 {
        let j = self.times[1..self.times.len() - 1].partition_point(|&s| s <= t);
        self.values[j]
    }

    pub fn is_constant_at(&self, theta: f64) -> bool {
        self.values.iter().all(|&v| v == theta)
    }
}

/// `0, T/m, ..., T`.
pub fn uniform_grid(horizon: f64, slices: usize) -> Result<Vec<f64>> {
    if slices == 0 || !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidScenario(format!(
            "uniform grid needs slices > 0 and horizon > 0, got {slices} and {horizon}"
        )));
    }
    let mut g: Vec<f64> = (0..=slices)
        .map(|j| horizon * j as f64 / slices as f64)
        .collect();
    g[slices] = horizon;
    Ok(g)
}

/// Upper bound on enumerated scenario counts.
pub const MAX_SCENARIOS: usize = 1 << 20;

/// Enumerate all piecewise-constant controls on `times` whose values are
/// drawn from `{lo, interior.., hi}`.
///
/// Scenario `i` puts level `(i / k^j) % k` on slice `j` where `k` is the
/// number of levels. With no interior levels this is the bang-bang family:
/// index 0 is constant-`lo` and index `2^m - 1` is constant-`hi`.
pub fn enumerate_scenarios(
    band: VolBand,
    times: &[f64],
    interior: &[f64],
) -> Result<Vec<ScenarioPath>> {
    let mut levels = vec![band.lo()];
    let mut inner: Vec<f64> = interior.to_vec();
    inner.sort_by(f64::total_cmp);
    for v in inner {
        if !(v > band.lo() && v < band.hi()) {
            return Err(Error::InvalidScenario(format!(
                "interior level {v} is not strictly inside the band"
            )));
        }
        if levels.last() != Some(&v) {
            levels.push(v);
        }
    }
    if band.hi() != band.lo() {
        levels.push(band.hi());
    }
    let m = times.len().saturating_sub(1);
    let k = levels.len();
    let count = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(k));
    let count = match count {
        Some(c) if c <= MAX_SCENARIOS => c,
        _ => {
            return Err(Error::InvalidScenario(format!(
                "{k}^{m} scenarios exceeds the enumeration cap {MAX_SCENARIOS}"
            )))
        }
    };
    (0..count)
        .map(|i| {
            let mut rest = i;
            let values = (0..m)
                .map(|_| {
                    let v = levels[rest % k];
                    rest /= k;
                    v
                })
                .collect();
            ScenarioPath::new(band, times.to_vec(), values)
        })
        .collect()
}

/// `G(a) = (1/2)(a^+ hi - a^- lo) = (1/2) sup_{theta in band} theta a`.
pub fn g_scalar(band: VolBand, a: f64) -> f64 {
    if a >= 0.0 {
        0.5 * a * band.hi()
    } else {
        0.5 * a * band.lo()
    }
}

/// Sublinear function `G(A) = (1/2) sup_theta tr(A theta Gram)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GFunction {
    gram: DMatrix<f64>,
    band: VolBand,
}

impl GFunction {
    /// Validates symmetry and positive semidefiniteness up to the jitter
    /// tolerance; marginally negative spectra are lifted onto the PSD cone.
    pub fn new(gram: DMatrix<f64>, band: VolBand) -> Result<Self> {
        Ok(Self {
            gram: psd_jitter(gram)?,
            band,
        })
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn band(&self) -> VolBand {
        self.band
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// Exact value of the supremum: `g_scalar(band, tr(A Gram))`.
    pub fn eval(&self, a: &DMatrix<f64>) -> Result<f64> {
        let n = self.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.nrows().max(a.ncols()),
            });
        }
        let mut tr = 0.0;
        for i in 0..n {
            for j in 0..n {
                tr += a[(i, j)] * self.gram[(j, i)];
            }
        }
        Ok(g_scalar(self.band, tr))
    }
}

/// Symmetrize and check the spectrum; eigenvalues in `[-tol, 0)` are lifted
/// by adding the deficit to the diagonal.
pub fn psd_jitter(gram: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !gram.is_square() {
        return Err(Error::NotPsd(format!(
            "{}x{} matrix is not square",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPsd("non-finite entry".into()));
    }
    let scale = gram.norm();
    let asym = (&gram - gram.transpose()).amax();
    if asym > 1e-12 * scale.max(1.0) {
        return Err(Error::NotPsd(format!("asymmetry {asym:e}")));
    }
    let mut sym = (&gram + gram.transpose()) * 0.5;
    if sym.nrows() == 0 {
        return Ok(sym);
    }
    let min_eig = sym.clone().symmetric_eigenvalues().min();
    let tol = PSD_JITTER_TOL * scale;
    if min_eig < -tol {
        return Err(Error::NotPsd(format!(
            "min eigenvalue {min_eig:e} below -{tol:e}"
        )));
    }
    if min_eig < 0.0 {
        for i in 0..sym.nrows() {
            sym[(i, i)] -= min_eig;
        }
    }
    Ok(sym)
}

/// Gram matrix of coordinate vectors under the Euclidean inner product.
pub fn euclidean_gram(vectors: &[Vec<f64>]) -> DMatrix<f64> {
    let n = vectors.len();
    DMatrix::from_fn(n, n, |i, j| {
        vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum()
    })
}

/// Outcome of [`check_compatibility`].
#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub trials: usize,
    pub max_marginal_deviation: f64,
    pub max_permutation_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Randomized check of marginal and permutation consistency of the
/// G-function family generated by `vectors` (`n + 1` coordinate vectors).
pub fn check_compatibility(
    vectors: &[Vec<f64>],
    band: VolBand,
    trials: usize,
    seed: u64,
) -> Result<CompatibilityReport> {
    let n_full = vectors.len();
    if n_full < 2 {
        return Err(Error::invalid("compatibility needs at least n + 1 = 2 vectors"));
    }
    let n = n_full - 1;
    let full = GFunction::new(euclidean_gram(vectors), band)?;
    let head = GFunction::new(euclidean_gram(&vectors[..n]), band)?;
    let mut rng = path_rng(seed, 0);
    let mut max_marg: f64 = 0.0;
    let mut max_perm: f64 = 0.0;
    for _ in 0..trials {
        let a = random_symmetric(&mut rng, n);
        let mut padded = DMatrix::zeros(n_full, n_full);
        padded.view_mut((0, 0), (n, n)).copy_from(&a);
        max_marg = max_marg.max((full.eval(&padded)? - head.eval(&a)?).abs());

        let mut sigma: Vec<usize> = (0..n).collect();
        sigma.shuffle(&mut rng);
        let permuted: Vec<Vec<f64>> = sigma.iter().map(|&s| vectors[s].clone()).collect();
        let g_perm = GFunction::new(euclidean_gram(&permuted), band)?;
        let mut inv = vec![0; n];
        for (i, &s) in sigma.iter().enumerate() {
            inv[s] = i;
        }
        let b = DMatrix::from_fn(n, n, |k, l| a[(inv[k], inv[l])]);
        max_perm = max_perm.max((g_perm.eval(&a)? - head.eval(&b)?).abs());
    }
    let tolerance = 1e-12;
    Ok(CompatibilityReport {
        trials,
        max_marginal_deviation: max_marg,
        max_permutation_deviation: max_perm,
        tolerance,
        pass: max_marg <= tolerance && max_perm <= tolerance,
    })
}

/// Symmetric matrix with entries uniform on `[-1, 1]`.
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.random_range(-1.0..=1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Monte Carlo estimate of a sublinear expectation.
#[derive(Debug, Clone)]
pub struct SublinearEstimate {
    pub value: f64,
    pub std_error: f64,
    pub argmax_index: usize,
    pub argmax_scenario: ScenarioPath,
    pub n_paths: usize,
    /// Classical mean under each scenario, in enumeration order.
    pub scenario_means: Vec<f64>,
    pub scenario_std_errors: Vec<f64>,
}

impl SublinearEstimate {
    /// The estimate restricted to the first `k` scenarios.
    pub fn prefix(&self, k: usize) -> (f64, f64, usize) {
        let k = k.clamp(1, self.scenario_means.len());
        let (idx, _) = argmax(&self.scenario_means[..k]);
        (
            self.scenario_means[idx],
            self.scenario_std_errors[idx],
            idx,
        )
    }
}

fn argmax(xs: &[f64]) -> (usize, f64) {
    let mut best = (0, xs[0]);
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

/// Per-scenario, per-path payoff samples with common random numbers.
///
/// Path `i` under every scenario starts from the generator
/// [`path_rng`]`(seed, i)`. The returned outer vector is indexed by
/// scenario, the inner by payoff then path (`payoffs.len() * n_paths`).
pub fn scenario_samples<O, S>(
    payoffs: &[&(dyn Fn(&O) -> f64 + Sync)],
    sampler: &S,
    scenarios: &[ScenarioPath],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>>
where
    S: Fn(&ScenarioPath, &mut ChaCha8Rng) -> O + Sync,
{
    if scenarios.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be positive"));
    }
    let mut out = Vec::with_capacity(scenarios.len());
    for (s, scenario) in scenarios.iter().enumerate() {
        let rows: Vec<Vec<f64>> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_rng(seed, i as u64);
                let outcome = sampler(scenario, &mut rng);
                payoffs.iter().map(|p| p(&outcome)).collect()
            })
            .collect();
        let mut per_payoff = vec![Vec::with_capacity(n_paths); payoffs.len()];
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinitePayoff {
                        scenario: s,
                        path: i,
                    });
                }
                per_payoff[k].push(v);
            }
        }
        out.push(per_payoff);
    }
    Ok(out)
}

/// `sup` over `scenarios` of the classical Monte Carlo mean of each payoff.
pub fn sup_expectation_many<O, S>(
    payoffs: &[&(dyn Fn(&O) -> f64 + Sync)],
    sampler: &S,
    scenarios: &[ScenarioPath],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<SublinearEstimate>>
where
    S: Fn(&ScenarioPath, &mut ChaCha8Rng) -> O + Sync,
{
    if scenarios.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    // One scenario at a time keeps memory at payoffs x paths.
    let mut stats = Vec::with_capacity(scenarios.len());
    for (s, sc) in scenarios.iter().enumerate() {
        let per = scenario_samples(payoffs, sampler, std::slice::from_ref(sc), n_paths, seed).map_err(|e| match e {
            Error::NonFinitePayoff { path, .. } => Error::NonFinitePayoff { scenario: s, path },
            e => e,
        })?;
        stats.push(per[0].iter().map(|xs| mean_se(xs)).collect::<Vec<_>>());
    }
    Ok((0..payoffs.len())
        .map(|k| {
            let (means, ses): (Vec<f64>, Vec<f64>) = stats.iter().map(|per| per[k]).unzip();
            let (idx, value) = argmax(&means);
            SublinearEstimate {
                value,
                std_error: ses[idx],
                argmax_index: idx,
                argmax_scenario: scenarios[idx].clone(),
                n_paths,
                scenario_means: means,
                scenario_std_errors: ses,
            }
        })
        .collect())
}

/// Sublinear expectation of one payoff: the maximum over scenarios of the
/// classical Monte Carlo mean, with common random numbers.
pub fn sup_expectation<O, S, P>(
    payoff: P,
    sampler: S,
    scenarios: &[ScenarioPath],
    n_paths: usize,
    seed: u64,
) -> Result<SublinearEstimate>
where
    S: Fn(&ScenarioPath, &mut ChaCha8Rng) -> O + Sync,
    P: Fn(&O) -> f64 + Sync,
{
    let mut v = sup_expectation_many(&[&payoff], &sampler, scenarios, n_paths, seed)?;
    Ok(v.remove(0))
}

/// `-sup_expectation(-payoff)`; the returned estimate carries the negated
/// value and the minimizing scenario.
pub fn lower_expectation<O, S, P>(
    payoff: P,
    sampler: S,
    scenarios: &[ScenarioPath],
    n_paths: usize,
    seed: u64,
) -> Result<SublinearEstimate>
where
    S: Fn(&ScenarioPath, &mut ChaCha8Rng) -> O + Sync,
    P: Fn(&O) -> f64 + Sync,
{
    let mut est = sup_expectation(|o: &O| -payoff(o), sampler, scenarios, n_paths, seed)?;
    est.value = -est.value;
    for m in &mut est.scenario_means {
        *m = -*m;
    }
    Ok(est)
}

/// Terminal value of a G-Brownian motion under one scenario:
/// `sum_j sqrt(theta_j dt_j) Z_j`.
pub fn gbm_terminal(scenario: &ScenarioPath, rng: &mut ChaCha8Rng) -> f64 {
    use rand_distr::StandardNormal;
    (0..scenario.n_slices())
        .map(|j| {
            let z: f64 = rng.sample(StandardNormal);
            (scenario.values()[j] * scenario.slice_duration(j)).sqrt() * z
        })
        .sum()
}

/// Outcome of [`chebyshev_capacity_check`].
#[derive(Debug, Clone, Serialize)]
pub struct ChebyshevReport {
    pub eps: f64,
    /// Upper probability `max_s P_s(xi >= eps)`.
    pub capacity: f64,
    pub sup_mean: f64,
    /// `sup_mean / eps`.
    pub bound: f64,
    /// Smallest slack `bound + 3 SE - P_s` over scenarios.
    pub margin: f64,
    /// Largest `(P_s - bound) / SE` over scenarios, `SE` the combined error.
    pub excess_z: f64,
    pub pass: bool,
}

/// Empirical check of `c(xi >= eps) <= E^[xi] / eps` on every scenario.
pub fn chebyshev_capacity_check(
    samples_per_scenario: &[Vec<f64>],
    eps: f64,
) -> Result<ChebyshevReport> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if samples_per_scenario.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    if let Some(bad) = samples_per_scenario
        .iter()
        .flatten()
        .find(|x| !(**x >= 0.0) || !x.is_finite())
    {
        return Err(Error::invalid(format!(
            "samples must be finite and nonnegative, found {bad}"
        )));
    }
    let stats: Vec<(f64, f64, f64, f64)> = samples_per_scenario
        .iter()
        .map(|xs| {
            let (m, se) = mean_se(xs);
            let n = xs.len() as f64;
            let freq = xs.iter().filter(|&&x| x >= eps).count() as f64 / n;
            let freq_se = (freq * (1.0 - freq) / n).sqrt();
            (m, se, freq, freq_se)
        })
        .collect();
    let (idx, sup_mean) = argmax(&stats.iter().map(|s| s.0).collect::<Vec<_>>());
    let sup_se = stats[idx].1;
    let bound = sup_mean / eps;
    let mut margin = f64::INFINITY;
    let mut excess_z = f64::NEG_INFINITY;
    let mut capacity: f64 = 0.0;
    for &(_, _, freq, freq_se) in &stats {
        capacity = capacity.max(freq);
        let combined = ((sup_se / eps).powi(2) + freq_se * freq_se).sqrt();
        margin = margin.min(bound + 3.0 * combined - freq);
        let z = if combined > 0.0 {
            (freq - bound) / combined
        } else if freq <= bound {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
        excess_z = excess_z.max(z);
    }
    Ok(ChebyshevReport {
        eps,
        capacity,
        sup_mean,
        bound,
        margin,
        excess_z,
        pass: margin >= 0.0,
    })
}
