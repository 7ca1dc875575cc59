use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{FieldPath, GOUMode, GreenKernel, SpdeConfig};
use crate::error::{Error, Result};
use crate::hilbert::{Basis, L2Element, Repr};
use crate::noise::NoiseRealization;

/// Largest admissible sine content of initial data.
pub const SINE_TOLERANCE: f64 = 1e-8;

/// The first `n` cosine coefficients of `psi`, rejecting sine content.
pub fn cosine_coeffs(psi: &L2Element, n: usize) -> Result<Vec<f64>> {
    let space = psi.space();
    let cosine_form = matches!(psi.repr(), Repr::Coeffs { basis: Basis::Cosine, .. });
    if !cosine_form {
        let full = psi.coeffs(Basis::FullTrig, Basis::FullTrig.band_limit(&space))?;
        let sine: f64 = full.iter().skip(2).step_by(2).map(|c| c * c).sum::<f64>().sqrt();
        if sine > SINE_TOLERANCE {
            return Err(Error::NonCosineContent(sine));
        }
    }
    psi.coeffs(Basis::Cosine, n)
}

/// `G_psi(t)`: each cosine coefficient decays by `e^{a_n t}`.
pub fn heat_semigroup(psi: &L2Element, t: f64, cfg: &SpdeConfig) -> Result<L2Element> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("semigroup time must be non-negative, got {t}")));
    }
    if psi.space() != cfg.space {
        return Err(Error::SpaceMismatch);
    }
    let band = Basis::Cosine.band_limit(&cfg.space);
    let mut c = cosine_coeffs(psi, band)?;
    for (n, v) in c.iter_mut().enumerate() {
        *v *= (cfg.drift(n) * t).exp();
    }
    L2Element::from_coeffs(cfg.space, Basis::Cosine, c)
}

/// `e_n(x_k)` for `n < n_modes`, row `k`.
fn basis_table(cfg: &SpdeConfig, n_modes: usize) -> DMatrix<f64> {
    let xs = cfg.xs();
    DMatrix::from_fn(cfg.nx, n_modes, |k, n| Basis::Cosine.eval(&cfg.space, n, xs[k]))
}

/// The deterministic part on the grid at every partition time.
fn heat_field(psi: &L2Element, cfg: &SpdeConfig) -> Result<Vec<DVector<f64>>> {
    if psi.space() != cfg.space {
        return Err(Error::SpaceMismatch);
    }
    let psi = heat_semigroup(psi, 0.0, cfg)?;
    let e = basis_table(cfg, Basis::Cosine.band_limit(&cfg.space));
    cfg.partition
        .times()
        .iter()
        .map(|&t| {
            let g = heat_semigroup(&psi, t, cfg)?;
            let (_, decayed) = g.as_coeffs().expect("semigroup returns coefficients");
            Ok(&e * DVector::from_column_slice(decayed))
        })
        .collect()
}

/// Spectral solver with the deterministic part precomputed, for ensembles
/// sharing `psi` and the configuration.
#[derive(Debug, Clone)]
pub struct SpectralSolver {
    cfg: SpdeConfig,
    heat: Vec<DVector<f64>>,
    psi_n: Vec<f64>,
    table: DMatrix<f64>,
}

impl SpectralSolver {
    pub fn new(psi: &L2Element, cfg: &SpdeConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            heat: heat_field(psi, cfg)?,
            psi_n: cosine_coeffs(psi, cfg.n_modes)?,
            table: basis_table(cfg, cfg.n_modes),
        })
    }

    /// The G-OU recursion per mode, summed on the grid.
    pub fn solve(&self, noise: &NoiseRealization) -> Result<FieldPath> {
        let cfg = &self.cfg;
        cfg.check_noise(noise)?;
        let times = cfg.partition.times().to_vec();
        let m = times.len();
        let mut stoch = vec![vec![0.0; cfg.n_modes]; m];
        let mut modes = vec![vec![0.0; cfg.n_modes]; m];
        for (n, &c) in self.psi_n.iter().enumerate() {
            let mode = GOUMode::new(n, cfg.mass, c)?;
            let s = mode.stochastic_path(noise)?;
            for j in 0..m {
                stoch[j][n] = s[j];
                modes[j][n] = mode.mean(times[j]) + s[j];
            }
        }
        let values = (0..m)
            .map(|j| {
                let v = &self.heat[j] + &self.table * DVector::from_column_slice(&stoch[j]);
                v.iter().copied().collect()
            })
            .collect();
        Ok(FieldPath {
            times,
            xs: cfg.xs(),
            values,
            modes: Some(modes),
        })
    }
}

/// Spectral solution; see [`SpectralSolver`].
pub fn spectral_solve(psi: &L2Element, noise: &NoiseRealization, cfg: &SpdeConfig) -> Result<FieldPath> {
    SpectralSolver::new(psi, cfg)?.solve(noise)
}

/// Kernel quantization: lags closer than `1e-12` share a matrix.
fn lag_key(tau: f64) -> i64 {
    (tau * 1e12).round() as i64
}

/// Mild solver: the heat semigroup applied to `psi` plus the stochastic
/// convolution, evaluated by slice-and-cell quadrature.
///
/// Cell `c = [c h, (c+1) h)` receives the exact increment
/// `sum_n (int_cell e_n) dW_{j,n}`, and the kernel is sampled at the cell
/// midpoint and the slice midpoint `s*_j`. Kernel matrices are built once
/// per distinct lag `t_j - s*_j'`.
#[derive(Debug, Clone)]
pub struct MildSolver {
    cfg: SpdeConfig,
    heat: Vec<DVector<f64>>,
    cells: DMatrix<f64>,
    mats: Vec<DMatrix<f64>>,
    index: BTreeMap<i64, usize>,
}

impl MildSolver {
    pub fn new(psi: &L2Element, cfg: &SpdeConfig) -> Result<Self> {
        Self::with_kernel(psi, cfg, GreenKernel::new(cfg.mass)?)
    }

    pub fn with_kernel(psi: &L2Element, cfg: &SpdeConfig, kernel: GreenKernel) -> Result<Self> {
        cfg.validate()?;
        if kernel.mass != cfg.mass {
            return Err(Error::invalid("kernel mass differs from the configuration"));
        }
        let heat = heat_field(psi, cfg)?;
        let p = &cfg.partition;
        let times = p.times();
        let m = p.n_slices();
        let nx = cfg.nx;
        let h = cfg.dx();
        let xs = cfg.xs();
        let ys: Vec<f64> = (0..nx).map(|c| (c as f64 + 0.5) * h).collect();
        let cells = DMatrix::from_fn(nx, cfg.n_modes, |c, n| {
            Basis::Cosine.integral(&cfg.space, n, c as f64 * h, (c + 1) as f64 * h)
        });
        let mut lags: Vec<i64> = Vec::new();
        for j in 1..=m {
            for jp in 0..j {
                lags.push(lag_key(times[j] - p.midpoint(jp)));
            }
        }
        lags.sort_unstable();
        lags.dedup();
        let mats: Vec<DMatrix<f64>> = lags
            .par_iter()
            .map(|&key| {
                let tau = key as f64 * 1e-12;
                let mut k = DMatrix::zeros(nx, nx);
                for r in 0..nx {
                    for c in 0..nx {
                        k[(r, c)] = kernel.value(tau, xs[r], ys[c])?;
                    }
                }
                Ok(k)
            })
            .collect::<Result<_>>()?;
        let index = lags.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        Ok(Self {
            cfg: cfg.clone(),
            heat,
            cells,
            mats,
            index,
        })
    }

    pub fn solve(&self, noise: &NoiseRealization) -> Result<FieldPath> {
        let cfg = &self.cfg;
        cfg.check_noise(noise)?;
        let p = &cfg.partition;
        let times = p.times().to_vec();
        let m = p.n_slices();
        let cell_incr: Vec<DVector<f64>> = (0..m)
            .map(|j| &self.cells * DVector::from_column_slice(&noise.slice(j)[..cfg.n_modes]))
            .collect();
        let values: Vec<Vec<f64>> = (0..=m)
            .into_par_iter()
            .map(|j| {
                let mut v = self.heat[j].clone();
                for (jp, w) in cell_incr.iter().enumerate().take(j) {
                    let k = &self.mats[self.index[&lag_key(times[j] - p.midpoint(jp))]];
                    v.gemv(1.0, k, w, 1.0);
                }
                v.iter().copied().collect()
            })
            .collect();
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mild solution produced non-finite values"));
        }
        Ok(FieldPath {
            times,
            xs: cfg.xs(),
            values,
            modes: None,
        })
    }
}

/// Mild solution; see [`MildSolver`].
pub fn mild_solve(psi: &L2Element, noise: &NoiseRealization, cfg: &SpdeConfig) -> Result<FieldPath> {
    MildSolver::new(psi, cfg)?.solve(noise)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::hilbert::MeasureSpace;
    use crate::noise::{sample_noise, TimePartition};
    use crate::scenario::{ScenarioPath, VolBand};

    fn cosine(cfg: &SpdeConfig, c: &[f64]) -> L2Element {
        L2Element::from_coeffs(cfg.space, Basis::Cosine, c.to_vec()).unwrap()
    }

    fn noise(cfg: &SpdeConfig, seed: u64) -> NoiseRealization {
        let band = VolBand::new(1.0, 4.0).unwrap();
        let sc = ScenarioPath::new(band, vec![0.0, 0.25, cfg.horizon()], vec![4.0, 1.0]).unwrap();
        sample_noise(Arc::new(cfg.layout().unwrap()), &sc, seed).unwrap()
    }

    #[test]
    fn semigroup_is_mode_decay() {
        let cfg = SpdeConfig::default();
        let e1 = cosine(&cfg, &[0.0, 1.0]);
        let g = heat_semigroup(&e1, 0.3, &cfg).unwrap();
        let (_, c) = g.as_coeffs().unwrap();
        assert_eq!(c[1], (-2.0f64 * 0.3).exp());
        assert!(c.iter().enumerate().all(|(n, v)| n == 1 || *v == 0.0));
        let id = heat_semigroup(&cosine(&cfg, &[0.2, 0.0, -1.5]), 0.0, &cfg).unwrap();
        assert_eq!(&id.as_coeffs().unwrap().1[..3], &[0.2, 0.0, -1.5]);
        assert!(heat_semigroup(&e1, -0.1, &cfg).is_err());
    }

    #[test]
    fn semigroup_matches_kernel_quadrature() {
        let cfg = SpdeConfig::default();
        let psi = L2Element::from_fn(cfg.space, |x| x.cos().exp()).unwrap();
        let t = 0.2;
        let g = heat_semigroup(&psi, t, &cfg).unwrap();
        let k = GreenKernel::new(cfg.mass).unwrap();
        let n = 4096;
        let h = 2.0 * PI / n as f64;
        for &x in &[0.3, 2.0, 4.4] {
            let quad: f64 = (0..n)
                .map(|i| {
                    let y = i as f64 * h;
                    k.value(t, x, y).unwrap() * y.cos().exp()
                })
                .sum::<f64>()
                * h;
            assert!((quad - g.eval(x)).abs() < 1e-7, "{quad} {}", g.eval(x));
        }
    }

    #[test]
    fn sine_content_rejected() {
        let cfg = SpdeConfig::default();
        let s = L2Element::from_fn(cfg.space, |x| x.sin()).unwrap();
        assert!(matches!(cosine_coeffs(&s, 4), Err(Error::NonCosineContent(_))));
        let ft = L2Element::from_coeffs(cfg.space, Basis::FullTrig, vec![0.0, 1.0, 1e-9]).unwrap();
        assert!(cosine_coeffs(&ft, 4).is_ok());
        let ft = L2Element::from_coeffs(cfg.space, Basis::FullTrig, vec![0.0, 1.0, 1e-6]).unwrap();
        assert!(cosine_coeffs(&ft, 4).is_err());
    }

    #[test]
    fn zero_noise_is_heat_decay() {
        let cfg = SpdeConfig::new(1.0, 0.5, 8, 8, 32).unwrap();
        let psi = cosine(&cfg, &[0.5, 0.0, 1.0]);
        let w = noise(&cfg, 1).zeroed();
        let a = spectral_solve(&psi, &w, &cfg).unwrap();
        let b = mild_solve(&psi, &w, &cfg).unwrap();
        assert_eq!(a.values, b.values);
        for (j, &t) in cfg.partition.times().iter().enumerate() {
            for (k, &x) in cfg.xs().iter().enumerate() {
                let want = heat_semigroup(&psi, t, &cfg).unwrap().eval(x);
                assert!((a.values[j][k] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_mode_value() {
        let cfg = SpdeConfig::new(1.0, 0.5, 10, 4, 16).unwrap();
        let psi = cosine(&cfg, &[0.0, 1.0]);
        let path = spectral_solve(&psi, &noise(&cfg, 2).zeroed(), &cfg).unwrap();
        let last = path.modes.unwrap()[10][1];
        assert!((last - (-1.0f64).exp()).abs() < 1e-15);
        assert!((last - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn single_slice_closed_form() {
        let cfg = SpdeConfig::new(1.0, 0.5, 1, 8, 256).unwrap();
        let psi = cosine(&cfg, &[0.0]);
        let sc = ScenarioPath::constant(VolBand::default(), 0.5, 1, 4.0).unwrap();
        let w = sample_noise(Arc::new(cfg.layout().unwrap()), &sc, 5).unwrap();
        let path = mild_solve(&psi, &w, &cfg).unwrap();
        let scale = w.slice(0).iter().map(|v| v.abs()).sum::<f64>();
        for (k, &x) in cfg.xs().iter().enumerate() {
            let want: f64 = (0..8)
                .map(|n| Basis::Cosine.eval(&cfg.space, n, x) * (cfg.drift(n) * 0.25).exp() * w.increment(0, n))
                .sum();
            // Midpoint cells: relative error of order (n h)^2 / 24.
            assert!((path.values[1][k] - want).abs() < 1e-4 * scale, "{k}");
        }
    }

    #[test]
    fn coupling_at_default_resolution() {
        let cfg = SpdeConfig::default();
        let psi = cosine(&cfg, &[0.3, 1.0, 0.0, 0.5]);
        let w = noise(&cfg, 7);
        let a = spectral_solve(&psi, &w, &cfg).unwrap();
        let b = mild_solve(&psi, &w, &cfg).unwrap();
        let d = b.rel_sup_diff(&a).unwrap();
        assert!(d < 1e-2, "{d}");
    }

    #[test]
    fn misaligned_noise_rejected() {
        let cfg = SpdeConfig::new(1.0, 0.5, 8, 8, 32).unwrap();
        let psi = cosine(&cfg, &[1.0]);
        let other = SpdeConfig::new(1.0, 0.5, 4, 8, 32).unwrap();
        assert!(matches!(spectral_solve(&psi, &noise(&other, 1), &cfg), Err(Error::Misaligned(_))));
        let small = SpdeConfig::new(1.0, 0.5, 8, 4, 32).unwrap();
        assert!(mild_solve(&psi, &noise(&small, 1), &cfg).is_err());
        let lay = crate::noise::NoiseLayout::new(
            TimePartition::uniform(0.5, 8).unwrap(),
            MeasureSpace::default(),
            Basis::FullTrig,
            9,
        )
        .unwrap();
        let band = VolBand::default();
        let sc = ScenarioPath::constant(band, 0.5, 1, 4.0).unwrap();
        let ft = sample_noise(Arc::new(lay), &sc, 1).unwrap();
        assert!(spectral_solve(&psi, &ft, &cfg).is_err());
    }
}
