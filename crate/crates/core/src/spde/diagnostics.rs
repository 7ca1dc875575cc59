use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{FieldPath, GOUMode, SpdeConfig};
use crate::error::{Error, Result};
use crate::hilbert::{Basis, L2Element, MeasureSpace, Mode};
use crate::noise::{integrate_idgbm_coeffs, sample_noise, NoiseLayout, NoiseRealization, TimePartition};
use crate::scenario::{ScenarioPath, VolBand};
use crate::seeding::path_seed;
use crate::stats::mean_se;

/// Smooth time factor of a test function, with its derivative in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    /// `sum_k c_k t^k`.
    Polynomial(Vec<f64>),
    /// `amplitude e^{rate t}`.
    Exponential { amplitude: f64, rate: f64 },
    /// `amplitude cos(freq t + phase)`.
    Oscillating { amplitude: f64, freq: f64, phase: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, c| acc * t + c),
            TimeProfile::Exponential { amplitude, rate } => amplitude * (rate * t).exp(),
            TimeProfile::Oscillating { amplitude, freq, phase } => amplitude * (freq * t + phase).cos(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c),
            TimeProfile::Exponential { amplitude, rate } => amplitude * rate * (rate * t).exp(),
            TimeProfile::Oscillating { amplitude, freq, phase } => -amplitude * freq * (freq * t + phase).sin(),
        }
    }
}

/// `sum_i g_i(t) e_{n_i}(x)` over cosine modes, which satisfy the periodic
/// and Neumann conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    terms: Vec<(usize, TimeProfile)>,
}

impl TestFunction {
    /// Sine and cell modes violate the boundary conditions.
    pub fn new(terms: Vec<(Mode, TimeProfile)>) -> Result<Self> {
        let terms = terms
            .into_iter()
            .map(|(mode, g)| match mode {
                Mode::Constant => Ok((0, g)),
                Mode::Cos(n) if n > 0 => Ok((n, g)),
                Mode::Cos(_) => Err(Error::invalid("use Mode::Constant for frequency 0")),
                Mode::Sin(n) => Err(Error::BoundaryCondition(format!(
                    "sin({n}x) has nonzero slope at 0 and 2 pi"
                ))),
                Mode::Cell(k) => Err(Error::BoundaryCondition(format!("cell {k} is not smooth"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { terms })
    }

    /// A single cosine mode `n` (the constant for `n = 0`).
    pub fn cosine(n: usize, g: TimeProfile) -> Self {
        Self {
            terms: vec![(n, g)],
        }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// `(n, g)` pairs.
    pub fn terms(&self) -> &[(usize, TimeProfile)] {
        &self.terms
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let space = MeasureSpace::default();
        self.terms
            .iter()
            .map(|(n, g)| g.value(t) * Basis::Cosine.eval(&space, *n, x))
            .sum()
    }
}

/// Absolute defect of the weak-form identity
/// `<phi(T), f(T)> - <psi, f(0)> = int_0^T <phi, f_t + f_xx - m^2 f> dt + int int f W(dt, dx)`.
///
/// Spatial pairings use the periodic trapezoid rule on the grid, the time
/// integral the trapezoid rule on the partition and the noise integral the
/// slice-midpoint values of the test function.
pub fn weak_solution_residual(
    path: &FieldPath,
    noise: &NoiseRealization,
    test: &TestFunction,
    cfg: &SpdeConfig,
) -> Result<f64> {
    cfg.check_noise(noise)?;
    let p = &cfg.partition;
    if path.times.as_slice() != p.times() {
        return Err(Error::Misaligned("field path times differ from the partition".into()));
    }
    if path.xs.len() != cfg.nx || path.values.iter().any(|r| r.len() != cfg.nx) {
        return Err(Error::DimensionMismatch {
            expected: cfg.nx,
            got: path.xs.len(),
        });
    }
    let m = p.n_slices();
    let mut rows = vec![vec![0.0; noise.n_modes()]; m];
    let mut lhs = 0.0;
    let mut drift = 0.0;
    for (n, g) in &test.terms {
        let n = *n;
        if 2 * n >= cfg.nx {
            return Err(Error::invalid(format!(
                "test mode {n} is not resolved by a grid of {} points",
                cfg.nx
            )));
        }
        let a = cfg.drift(n);
        let t = p.times();
        lhs += path.grid_coeff(m, n) * g.value(t[m]) - path.grid_coeff(0, n) * g.value(0.0);
        let h = |j: usize| path.grid_coeff(j, n) * (g.derivative(t[j]) + a * g.value(t[j]));
        for j in 0..m {
            drift += 0.5 * p.dt(j) * (h(j) + h(j + 1));
        }
        if n < noise.n_modes() {
            for (j, row) in rows.iter_mut().enumerate() {
                row[n] += g.value(p.midpoint(j));
            }
        }
    }
    let stochastic = integrate_idgbm_coeffs(&rows, noise, noise.n_modes()).value;
    Ok((lhs - drift - stochastic).abs())
}

/// Covariance check for one `(s, t)` pair of a G-OU mode.
#[derive(Debug, Clone, Serialize)]
pub struct OuCovReport {
    pub s: f64,
    pub t: f64,
    /// Scenario-sup of the mean of `S(s) S(t)`, `S` the stochastic part.
    pub estimate: f64,
    pub std_error: f64,
    pub argmax_index: usize,
    /// `(hi / 2a)(e^{a(s+t)} - e^{a|t-s|})`.
    pub bound: f64,
    /// Smallest `bound + 3 SE - mean` over scenarios.
    pub margin: f64,
    /// Largest `(mean - bound) / SE` over scenarios.
    pub excess_z: f64,
    /// Largest `|mean(phi) - psi e^{a u}| / SE` over scenarios and `u in {s, t}`.
    pub mean_max_z: f64,
    /// Classical OU covariance and the distance to it in SE, for a degenerate band.
    pub classical: Option<f64>,
    pub classical_z: Option<f64>,
    pub pass: bool,
}

fn time_index(partition: &TimePartition, t: f64) -> Result<usize> {
    let tol = 1e-12 * partition.horizon();
    partition
        .times()
        .iter()
        .position(|&u| (u - t).abs() <= tol)
        .ok_or_else(|| Error::Misaligned(format!("time {t} is not a partition point")))
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff.abs() / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// [`ou_cov_bound_check`] on many pairs with shared paths.
///
/// Path `i` of every scenario reads the noise of seed `path_seed(seed, i)`.
pub fn ou_cov_grid(
    mode: &GOUMode,
    partition: &TimePartition,
    pairs: &[(f64, f64)],
    scenarios: &[ScenarioPath],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<OuCovReport>> {
    if scenarios.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    if n_paths < 2 {
        return Err(Error::invalid("need at least two paths"));
    }
    let band = scenarios[0].band();
    if scenarios.iter().any(|s| s.band() != band) {
        return Err(Error::InvalidScenario("scenarios mix volatility bands".into()));
    }
    let mut times: Vec<usize> = Vec::new();
    let idx: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(s, t)| {
            let (i, j) = (time_index(partition, s)?, time_index(partition, t)?);
            for k in [i, j] {
                if !times.contains(&k) {
                    times.push(k);
                }
            }
            Ok((i, j))
        })
        .collect::<Result<_>>()?;
    let pos = |k: usize| times.iter().position(|&u| u == k).expect("collected");
    let layout = Arc::new(NoiseLayout::new(
        partition.clone(),
        MeasureSpace::default(),
        Basis::Cosine,
        mode.index + 1,
    )?);
    let tvals = partition.times();

    // stats[scenario][pair] = (mean, se); means[scenario][time] = (mean, se)
    let mut pair_stats = Vec::with_capacity(scenarios.len());
    let mut time_stats = Vec::with_capacity(scenarios.len());
    for sc in scenarios {
        layout.slice_thetas(sc)?;
        let paths: Vec<Vec<f64>> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let w = sample_noise(layout.clone(), sc, path_seed(seed, i as u64))?;
                let s = mode.stochastic_path(&w)?;
                Ok(times.iter().map(|&k| s[k]).collect())
            })
            .collect::<Result<_>>()?;
        let ps: Vec<(f64, f64)> = idx
            .iter()
            .map(|&(i, j)| {
                let prod: Vec<f64> = paths.iter().map(|v| v[pos(i)] * v[pos(j)]).collect();
                mean_se(&prod)
            })
            .collect();
        let ts: Vec<(f64, f64)> = (0..times.len())
            .map(|k| {
                let col: Vec<f64> = paths.iter().map(|v| v[k]).collect();
                mean_se(&col)
            })
            .collect();
        pair_stats.push(ps);
        time_stats.push(ts);
    }

    Ok(idx
        .iter()
        .enumerate()
        .map(|(q, &(i, j))| {
            let (s, t) = (tvals[i], tvals[j]);
            let bound = mode.cov_bound(s, t, band.hi());
            let mut best = 0;
            let mut margin = f64::INFINITY;
            let mut excess_z = f64::NEG_INFINITY;
            let mut mean_max_z: f64 = 0.0;
            for (k, ps) in pair_stats.iter().enumerate() {
                let (mean, se) = ps[q];
                if mean > pair_stats[best][q].0 {
                    best = k;
                }
                margin = margin.min(bound + 3.0 * se - mean);
                excess_z = excess_z.max(if se > 0.0 {
                    (mean - bound) / se
                } else if mean <= bound {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                });
                for u in [i, j] {
                    // phi = psi e^{a u} + S exactly, so the mean defect is mean(S).
                    let (ms, se) = time_stats[k][pos(u)];
                    mean_max_z = mean_max_z.max(z_score(ms, se));
                }
            }
            let (estimate, std_error) = pair_stats[best][q];
            let (classical, classical_z) = if band.is_degenerate() {
                let c = mode.classical_cov(s, t, band.lo());
                (Some(c), Some(z_score(estimate - c, std_error)))
            } else {
                (None, None)
            };
            let pass = margin >= 0.0 && mean_max_z <= 3.0 && classical_z.is_none_or(|z| z <= 5.0);
            OuCovReport {
                s,
                t,
                estimate,
                std_error,
                argmax_index: best,
                bound,
                margin,
                excess_z,
                mean_max_z,
                classical,
                classical_z,
                pass,
            }
        })
        .collect())
}

/// Scenario-sup Monte Carlo of `E[S(s) S(t)]` against the G-OU covariance
/// bound. `s` and `t` must be partition points.
pub fn ou_cov_bound_check(
    mode: &GOUMode,
    s: f64,
    t: f64,
    partition: &TimePartition,
    scenarios: &[ScenarioPath],
    n_paths: usize,
    seed: u64,
) -> Result<OuCovReport> {
    let mut v = ou_cov_grid(mode, partition, &[(s, t)], scenarios, n_paths, seed)?;
    Ok(v.remove(0))
}

/// Outcome of [`second_moment_sup`].
#[derive(Debug, Clone, Serialize)]
pub struct SecondMomentReport {
    /// `sup_{t, x}` of the scenario-sup mean of `phi^2`.
    pub empirical: f64,
    pub std_error: f64,
    pub time: f64,
    pub x: f64,
    pub scenario_index: usize,
    /// `sup_t [(sum_n |psi_n| e^{a_n t} sup|e_n|)^2 + sum_{n<N} hi (1 - e^{2 a_n t}) / (-2 a_n) sup e_n^2]`.
    pub bound: f64,
    /// The same with every mode and `t = infinity` in the noise term.
    pub bound_infinite: f64,
    /// `bound + 3 SE - empirical`.
    pub margin: f64,
    pub pass: bool,
}

/// `sum_{n >= 0} hi / (-2 a_n) sup e_n^2` in closed form, using
/// `sum_{n >= 1} 1/(n^2 + m^2) = (pi m coth(pi m) - 1) / (2 m^2)`.
pub fn noise_variance_sum(mass: f64, hi: f64) -> f64 {
    let m2 = mass * mass;
    let tail = (PI * mass / (PI * mass).tanh() - 1.0) / (2.0 * m2);
    hi / (4.0 * PI * m2) + hi / (2.0 * PI) * tail
}

/// Sup over the grid of the scenario-sup second moment of an ensemble,
/// `ensemble[scenario][path]`, against the mode-sum bound.
pub fn second_moment_sup(
    ensemble: &[Vec<FieldPath>],
    psi: &L2Element,
    band: VolBand,
    cfg: &SpdeConfig,
) -> Result<SecondMomentReport> {
    if ensemble.is_empty() || ensemble.iter().any(|e| e.is_empty()) {
        return Err(Error::EmptyScenarioSet);
    }
    let shape = (ensemble[0][0].times.len(), ensemble[0][0].xs.len());
    if ensemble
        .iter()
        .flatten()
        .any(|p| p.times.len() != shape.0 || p.xs.len() != shape.1)
    {
        return Err(Error::invalid("ensemble paths have different shapes"));
    }
    let mut best = (f64::NEG_INFINITY, 0.0, 0, 0, 0);
    for (s, paths) in ensemble.iter().enumerate() {
        for j in 0..shape.0 {
            for k in 0..shape.1 {
                let sq: Vec<f64> = paths.iter().map(|p| p.values[j][k].powi(2)).collect();
                let (mean, se) = mean_se(&sq);
                if mean > best.0 {
                    best = (mean, se, s, j, k);
                }
            }
        }
    }
    let (empirical, std_error, scenario_index, j, k) = best;
    let first = &ensemble[scenario_index][0];

    let band_limit = Basis::Cosine.band_limit(&cfg.space);
    let c = super::cosine_coeffs(psi, band_limit)?;
    let sup_e = |n: usize| Basis::Cosine.sup_sq(&cfg.space, n);
    let mean_part = |t: f64| -> f64 {
        let s: f64 = c
            .iter()
            .enumerate()
            .map(|(n, v)| v.abs() * (cfg.drift(n) * t).exp() * sup_e(n).sqrt())
            .sum();
        s * s
    };
    let noise_part = |t: f64| -> f64 {
        (0..cfg.n_modes)
            .map(|n| {
                let a = cfg.drift(n);
                band.hi() * (1.0 - (2.0 * a * t).exp()) / (-2.0 * a) * sup_e(n)
            })
            .sum()
    };
    let bound = first
        .times
        .iter()
        .map(|&t| mean_part(t) + noise_part(t))
        .fold(f64::NEG_INFINITY, f64::max);
    let bound_infinite = mean_part(0.0) + noise_variance_sum(cfg.mass, band.hi());
    let margin = bound + 3.0 * std_error - empirical;
    Ok(SecondMomentReport {
        empirical,
        std_error,
        time: first.times[j],
        x: first.xs[k],
        scenario_index,
        bound,
        bound_infinite,
        margin,
        pass: margin >= 0.0,
    })
}
