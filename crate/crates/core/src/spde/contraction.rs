use rayon::prelude::*;
use serde::Serialize;

use super::GOUMode;
use crate::error::{Error, Result};
use crate::noise::NoiseRealization;

/// Eight-point Gauss-Legendre rule on `[-1, 1]`.
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Outcome of [`contraction_check`].
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    /// Weighted distance to the closed form after each iteration.
    pub errors: Vec<f64>,
    /// First iteration whose error is within the tolerance.
    pub iterations: Option<usize>,
    pub tolerance: f64,
    /// Largest pointwise gap at the last iteration, unweighted.
    pub max_abs_error: f64,
    pub converged: bool,
}

/// Local polynomial on a slice, coefficients in `u = t - t_j`.
type Poly = Vec<f64>;

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn antiderivative(c: &[f64]) -> Poly {
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(0.0);
    out.extend(c.iter().enumerate().map(|(k, v)| v / (k + 1) as f64));
    out
}

struct Driver {
    times: Vec<f64>,
    /// `W` at the partition points.
    w: Vec<f64>,
    /// Slope of the linear interpolant on each slice.
    v: Vec<f64>,
}

impl Driver {
    fn new(mode: &GOUMode, noise: &NoiseRealization) -> Self {
        let p = noise.partition();
        let mut w = vec![0.0];
        let mut v = Vec::with_capacity(p.n_slices());
        for j in 0..p.n_slices() {
            let dw = noise.increment(j, mode.index);
            w.push(w[j] + dw);
            v.push(dw / p.dt(j));
        }
        Self {
            times: p.times().to_vec(),
            w,
            v,
        }
    }

    /// `Lambda(X)(t) = psi + a int_0^t X ds + W(t)`, slice by slice.
    fn apply(&self, mode: &GOUMode, x: &[Poly]) -> Vec<Poly> {
        let mut acc = 0.0;
        x.iter()
            .enumerate()
            .map(|(j, xj)| {
                let dt = self.times[j + 1] - self.times[j];
                let mut out: Poly = antiderivative(xj).into_iter().map(|c| mode.drift * c).collect();
                out[0] += mode.psi + mode.drift * acc + self.w[j];
                if out.len() < 2 {
                    out.push(0.0);
                }
                out[1] += self.v[j];
                acc += horner(&antiderivative(xj), dt);
                out
            })
            .collect()
    }

    /// The fixed point for the interpolated driver:
    /// `phi(t_j + u) = e^{a u} phi_j + v_j (e^{a u} - 1) / a`.
    fn closed_form(&self, mode: &GOUMode) -> Vec<(f64, f64)> {
        let a = mode.drift;
        let mut phi = mode.psi;
        let mut out = Vec::with_capacity(self.v.len());
        for (j, &v) in self.v.iter().enumerate() {
            out.push((phi, v));
            let dt = self.times[j + 1] - self.times[j];
            phi = (a * dt).exp() * phi + v * (a * dt).exp_m1() / a;
        }
        out
    }
}

/// Picard iteration of `Lambda` from `X = 0` on each path of
/// `noises[scenario][path]`, with the driver linearly interpolated between
/// partition points so that every iterate is piecewise polynomial and exact.
///
/// The distance to the closed-form solution is
/// `(int_0^T e^{-2 a^2 t} sup_scenario mean_path |X - phi|^2 dt)^{1/2}`,
/// integrated with eight Gauss-Legendre nodes per slice.
pub fn contraction_check(
    mode: &GOUMode,
    noises: &[Vec<NoiseRealization>],
    max_iter: usize,
    tol: f64,
) -> Result<ContractionReport> {
    if noises.is_empty() || noises.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyScenarioSet);
    }
    let partition = noises[0][0].partition().clone();
    for w in noises.iter().flatten() {
        if w.partition() != &partition {
            return Err(Error::Misaligned("noise paths use different partitions".into()));
        }
        if mode.index >= w.n_modes() {
            return Err(Error::BandLimit {
                requested: mode.index + 1,
                limit: w.n_modes(),
            });
        }
    }
    let a = mode.drift;
    let m = partition.n_slices();
    let drivers: Vec<Vec<Driver>> = noises
        .iter()
        .map(|s| s.iter().map(|w| Driver::new(mode, w)).collect())
        .collect();
    let exact: Vec<Vec<Vec<(f64, f64)>>> = drivers
        .iter()
        .map(|s| s.iter().map(|d| d.closed_form(mode)).collect())
        .collect();

    // Quadrature nodes (slice, local u, weight including e^{-2 a^2 t}).
    let mut nodes = Vec::with_capacity(8 * m);
    for j in 0..m {
        let dt = partition.dt(j);
        for (z, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let u = 0.5 * dt * (z + 1.0);
            let t = partition.times()[j] + u;
            nodes.push((j, u, 0.5 * dt * w * (-2.0 * a * a * t).exp()));
        }
    }

    let mut iterates: Vec<Vec<Vec<Poly>>> = drivers
        .iter()
        .map(|s| s.iter().map(|_| vec![vec![0.0]; m]).collect())
        .collect();
    let mut errors = Vec::new();
    let mut iterations = None;
    let mut max_abs_error = f64::NAN;
    for k in 1..=max_iter {
        iterates = iterates
            .par_iter()
            .zip(&drivers)
            .map(|(xs, ds)| xs.iter().zip(ds).map(|(x, d)| d.apply(mode, x)).collect())
            .collect();
        let mut sq = 0.0;
        let mut worst: f64 = 0.0;
        for &(j, u, wt) in &nodes {
            let mut sup = f64::NEG_INFINITY;
            for (xs, ex) in iterates.iter().zip(&exact) {
                let mut mean = 0.0;
                for (x, e) in xs.iter().zip(ex) {
                    let (phi_j, v) = e[j];
                    let phi = (a * u).exp() * phi_j + v * (a * u).exp_m1() / a;
                    let d = horner(&x[j], u) - phi;
                    worst = worst.max(d.abs());
                    mean += d * d;
                }
                sup = sup.max(mean / xs.len() as f64);
            }
            sq += wt * sup;
        }
        let err = sq.sqrt();
        errors.push(err);
        max_abs_error = worst;
        if err <= tol {
            iterations = Some(k);
            break;
        }
    }
    Ok(ContractionReport {
        errors,
        iterations,
        tolerance: tol,
        max_abs_error,
        converged: iterations.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::noise::sample_noise;
    use crate::scenario::{enumerate_scenarios, VolBand};
    use crate::seeding::path_seed;
    use crate::spde::SpdeConfig;

    fn ensemble(cfg: &SpdeConfig, paths: u64) -> Vec<Vec<NoiseRealization>> {
        let band = VolBand::new(1.0, 4.0).unwrap();
        let scs = enumerate_scenarios(band, &[0.0, 0.25, 0.5], &[]).unwrap();
        let layout = Arc::new(cfg.layout().unwrap());
        scs.iter()
            .map(|sc| {
                (0..paths)
                    .map(|i| sample_noise(layout.clone(), sc, path_seed(4, i)).unwrap())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn polynomial_helpers() {
        assert_eq!(horner(&[1.0, 2.0, 3.0], 2.0), 17.0);
        assert_eq!(antiderivative(&[1.0, 2.0, 3.0]), vec![0.0, 1.0, 1.0, 1.0]);
        let s: f64 = GL_WEIGHTS.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let x4: f64 = GL_NODES.iter().zip(GL_WEIGHTS).map(|(x, w)| w * x.powi(14)).sum();
        assert!((x4 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn picard_reaches_closed_form() {
        let cfg = SpdeConfig::new(1.0, 0.5, 32, 4, 16).unwrap();
        let noises = ensemble(&cfg, 8);
        for n in 0..4 {
            let mode = GOUMode::new(n, 1.0, 0.7).unwrap();
            let r = contraction_check(&mode, &noises, 30, 1e-8).unwrap();
            assert!(r.converged, "mode {n}: {:?}", r.errors);
            assert!(r.iterations.unwrap() <= 30);
            assert!(r.errors.windows(2).all(|e| e[1] < e[0]));
        }
    }

    #[test]
    fn zero_noise_first_iterate() {
        let cfg = SpdeConfig::new(1.0, 0.5, 4, 2, 16).unwrap();
        let noises: Vec<Vec<NoiseRealization>> =
            ensemble(&cfg, 1).into_iter().map(|s| s.into_iter().map(|w| w.zeroed()).collect()).collect();
        let mode = GOUMode::new(0, 1.0, 1.0).unwrap();
        let r = contraction_check(&mode, &noises, 1, 1e-8).unwrap();
        // X_1 = psi, phi = e^{-t}: the gap is 1 - e^{-t}.
        assert!((r.max_abs_error - (1.0 - (-0.5f64).exp())).abs() < 1e-2);
        assert!(!r.converged);
    }
}
