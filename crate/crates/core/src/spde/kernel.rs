use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Green function of `d_t - d_xx + m^2` on `[0, 2 pi]` with the cosine
/// eigenfunctions:
/// `G(t,x,y) = e^{-m^2 t}[1/(2 pi) + (1/pi) sum_{n>=1} e^{-n^2 t} cos nx cos ny]`.
///
/// The image form is half the two-family Gaussian sum
/// `e^{-m^2 t}/sqrt(4 pi t) sum_n (e^{-(x-y-2n pi)^2/4t} + e^{-(x+y-2n pi)^2/4t})`;
/// Poisson summation turns each family into a cosine series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenKernel {
    pub mass: f64,
    pub n_modes: usize,
    pub n_images: usize,
}

impl GreenKernel {
    pub const DEFAULT_MODES: usize = 256;
    pub const DEFAULT_IMAGES: usize = 8;

    pub fn new(mass: f64) -> Result<Self> {
        Self::with_truncation(mass, Self::DEFAULT_MODES, Self::DEFAULT_IMAGES)
    }

    pub fn with_truncation(mass: f64, n_modes: usize, n_images: usize) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::invalid(format!("mass must be positive, got {mass}")));
        }
        Ok(Self {
            mass,
            n_modes,
            n_images,
        })
    }

    fn check(t: f64) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("kernel time must be positive, got {t}")));
        }
        Ok(())
    }

    /// Eigen expansion truncated after `n_modes` cosines.
    pub fn eigen(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        Self::check(t)?;
        let mut sum = 0.0;
        for n in 1..=self.n_modes {
            let nf = n as f64;
            let w = (-nf * nf * t).exp();
            if w == 0.0 {
                break;
            }
            // The cosine product commutes exactly, keeping G(t,x,y) == G(t,y,x).
            sum += w * ((nf * x).cos() * (nf * y).cos());
        }
        Ok((-self.mass * self.mass * t).exp() * (0.5 / PI + sum / PI))
    }

    /// Bound on the omitted eigen terms: `(1/pi) sum_{n > N} e^{-n^2 t}`.
    pub fn eigen_tail(&self, t: f64) -> f64 {
        let n = (self.n_modes + 1) as f64;
        (-n * n * t).exp() / (1.0 - (-(2.0 * n + 1.0) * t).exp()) / PI
    }

    /// Image sum with `2 n_images + 1` shifts per family.
    pub fn images(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        Self::check(t)?;
        // |x - y| keeps the value bitwise symmetric in (x, y).
        let d = (x - y).abs();
        let s = x + y;
        let k = self.n_images as i64;
        let mut sum = 0.0;
        for n in -k..=k {
            let shift = 2.0 * PI * n as f64;
            sum += (-(d - shift).powi(2) / (4.0 * t)).exp() + (-(s - shift).powi(2) / (4.0 * t)).exp();
        }
        Ok(0.5 * (-self.mass * self.mass * t).exp() / (4.0 * PI * t).sqrt() * sum)
    }

    /// Images for `t <= 1`, eigen expansion beyond.
    pub fn value(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        if t <= 1.0 {
            self.images(t, x, y)
        } else {
            self.eigen(t, x, y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mass_of(k: &GreenKernel, t: f64, x: f64, eigen: bool) -> f64 {
        // Periodic trapezoid: exact for the trigonometric content present.
        let n = 4096;
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|i| {
                let y = i as f64 * h;
                if eigen {
                    k.eigen(t, x, y).unwrap()
                } else {
                    k.images(t, x, y).unwrap()
                }
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn duality_sweep() {
        let k = GreenKernel::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let t = 10f64.powf(rng.random_range(-3.0..0.0));
            let x = rng.random_range(0.0..2.0 * PI);
            let y = rng.random_range(0.0..2.0 * PI);
            worst = worst.max((k.eigen(t, x, y).unwrap() - k.images(t, x, y).unwrap()).abs());
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn mass_identity() {
        let k = GreenKernel::new(1.3).unwrap();
        for &t in &[1e-3, 0.01, 0.3, 1.0, 4.0] {
            for &x in &[0.0, 0.7, PI, 5.9] {
                let want = (-1.69f64 * t).exp();
                assert!((mass_of(&k, t, x, false) - want).abs() < 1e-8, "images t={t} x={x}");
                if t >= 0.01 {
                    assert!((mass_of(&k, t, x, true) - want).abs() < 1e-8, "eigen t={t} x={x}");
                }
            }
        }
    }

    #[test]
    fn symmetry_is_exact() {
        let k = GreenKernel::new(1.0).unwrap();
        for &(t, x, y) in &[(0.01, 0.3, 2.9), (0.5, 6.0, 1.1), (2.0, 0.0, PI)] {
            assert_eq!(k.eigen(t, x, y).unwrap(), k.eigen(t, y, x).unwrap());
            assert_eq!(k.images(t, x, y).unwrap(), k.images(t, y, x).unwrap());
            assert_eq!(k.value(t, x, y).unwrap(), k.value(t, y, x).unwrap());
        }
    }

    #[test]
    fn large_time_is_flat_to_first_mode() {
        // At t = 10 the gap to e^{-m^2 t}/(2 pi) is the n = 1 term,
        // e^{-(m^2 + 1) t} cos x cos y / pi, up to e^{-(m^2 + 4) t}.
        let k = GreenKernel::new(1.0).unwrap();
        let t = 10.0f64;
        let flat = (-t).exp() / (2.0 * PI);
        let first = (-2.0 * t).exp() / PI;
        for &(x, y) in &[(0.0, 0.0), (1.0, 4.0), (PI, 0.2), (PI / 2.0, 1.0)] {
            let gap = k.value(t, x, y).unwrap() - flat;
            assert!((gap - first * x.cos() * y.cos()).abs() < 2.0 * (-5.0 * t).exp());
        }
        assert!(first > 1e-10);
    }

    #[test]
    fn small_time_peak() {
        // One dominant Gaussian at y = x: e^{-m^2 t} / (4 sqrt(pi t)).
        let k = GreenKernel::new(1.0).unwrap();
        let t: f64 = 1e-3;
        let want = (-t).exp() / (4.0 * (PI * t).sqrt());
        let got = k.images(t, 2.0, 2.0).unwrap();
        assert!((got / want - 1.0).abs() < 1e-12, "{got} {want}");
    }

    #[test]
    fn eigen_tail_bound() {
        let k = GreenKernel::with_truncation(1.0, 60, 8).unwrap();
        assert!(k.eigen_tail(0.01) < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_time() {
        let k = GreenKernel::new(1.0).unwrap();
        assert!(k.eigen(0.0, 1.0, 1.0).is_err());
        assert!(k.images(-1.0, 1.0, 1.0).is_err());
        assert!(k.value(f64::NAN, 1.0, 1.0).is_err());
        assert!(GreenKernel::new(0.0).is_err());
    }
}
