//! Finite-dimensional distributions of the G-Gaussian random field
//! `h -> W_h`, per-scenario samplers, the truncated orthonormal expansion
//! and the inclusion-exclusion identity for set-indexed fields.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gheat::psd_sqrt;
use crate::hilbert::{gram, Basis, L2Element, MeasureSpace};
use crate::scenario::{g_scalar, GFunction, ScenarioPath, VolBand};
use crate::seeding::path_rng;
use crate::sets::IntervalSet;
use crate::stats::variance_se;

/// Law of `(W_{h_1}, ..., W_{h_n})`: G-normal with G-function
/// `A -> (1/2) sup_theta tr(A theta Gram)`.
#[derive(Debug, Clone)]
pub struct FieldDistribution {
    params: Vec<L2Element>,
    gfun: GFunction,
    factor: DMatrix<f64>,
}

/// Builds the distribution of the field at `params`.
pub fn fdd(params: &[L2Element], band: VolBand) -> Result<FieldDistribution> {
    let g = gram(params)?;
    FieldDistribution::from_gram(params.to_vec(), g, band)
}

impl FieldDistribution {
    fn from_gram(params: Vec<L2Element>, g: DMatrix<f64>, band: VolBand) -> Result<Self> {
        let factor = psd_sqrt(&g)?;
        Ok(Self {
            params,
            gfun: GFunction::new(g, band)?,
            factor,
        })
    }

    pub fn params(&self) -> &[L2Element] {
        &self.params
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        self.gfun.gram()
    }

    pub fn gfun(&self) -> &GFunction {
        &self.gfun
    }

    pub fn band(&self) -> VolBand {
        self.gfun.band()
    }

    pub fn dim(&self) -> usize {
        self.gfun.dim()
    }

    /// Variance band of a single coordinate, `||h_i||^2 [lo, hi]`.
    pub fn variance_band(&self, i: usize) -> (f64, f64) {
        let v = self.gram()[(i, i)];
        (v * self.band().lo(), v * self.band().hi())
    }

    /// One draw of `N(0, variance Gram)`.
    pub fn draw(&self, variance: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.factor * z * variance.sqrt()
    }

    /// `n_paths x n` matrix of independent `N(0, theta Gram)` rows; row `i`
    /// uses the path generator `(seed, i)`.
    pub fn sample_given_theta(&self, theta: f64, n_paths: usize, seed: u64) -> Result<DMatrix<f64>> {
        if !self.band().contains(theta) {
            return Err(Error::InvalidScenario(format!(
                "theta = {theta} lies outside [{}, {}]",
                self.band().lo(),
                self.band().hi()
            )));
        }
        let mut out = DMatrix::zeros(n_paths, self.dim());
        for i in 0..n_paths {
            let mut rng = path_rng(seed, i as u64);
            out.set_row(i, &self.draw(theta, &mut rng).transpose());
        }
        Ok(out)
    }

    /// The field at time `T` of a scenario: `C sum_j sqrt(theta_j dt_j) Z_j`,
    /// whose law is `N(0, (int theta) Gram)`.
    pub fn sample_scenario(&self, scenario: &ScenarioPath, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut acc = DVector::zeros(self.dim());
        for j in 0..scenario.n_slices() {
            acc += self.draw(scenario.values()[j] * scenario.slice_duration(j), rng);
        }
        acc.iter().copied().collect()
    }
}

/// Distribution of the partial sum `sum_{i < N} h_i W_{e_i}`.
#[derive(Debug, Clone)]
pub struct ExpansionSurrogate {
    pub distribution: FieldDistribution,
    pub norm_sq: f64,
    pub projected_norm_sq: f64,
    /// `||h||^2 - ||P_N h||^2`.
    pub defect: f64,
}

impl ExpansionSurrogate {
    /// Variance band of the surrogate.
    pub fn band(&self) -> Result<VolBand> {
        self.distribution.band().scaled(self.projected_norm_sq)
    }
}

/// The truncated expansion of `W_h` in `basis`: a one-dimensional G-normal
/// with variance band `||P_N h||^2 [lo, hi]`.
pub fn expansion_surrogate(h: &L2Element, basis: Basis, n: usize, band: VolBand) -> Result<ExpansionSurrogate> {
    let p = h.project(basis, n)?;
    let projected_norm_sq = p.norm_sq();
    let norm_sq = h.norm_sq();
    let g = DMatrix::from_element(1, 1, projected_norm_sq);
    Ok(ExpansionSurrogate {
        distribution: FieldDistribution::from_gram(vec![p], g, band)?,
        norm_sq,
        projected_norm_sq,
        defect: norm_sq - projected_norm_sq,
    })
}

/// Nonempty subsets of `0..n` ordered by size, then lexicographically.
pub fn ordered_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut subs: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    subs.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subs
}

/// Outcome of [`union_identity_check`].
#[derive(Debug, Clone, Serialize)]
pub struct UnionReport {
    pub union_measure: f64,
    /// `c^T Gram c` for the signed inclusion-exclusion vector `c`.
    pub quadratic_form: f64,
    pub max_g_deviation: f64,
    /// `(theta, sample variance, standard error, theta * measure)`.
    pub monte_carlo: Vec<(f64, f64, f64, f64)>,
    pub mc_z_max: f64,
    pub pass: bool,
}

/// Checks that `sum_S (-1)^{|S|+1} W_{cap_{i in S} A_i}` has the law of
/// `W_{cup A_i}`, both through the G-functions and per fixed `theta` by
/// Monte Carlo.
pub fn union_identity_check(
    sets: &[IntervalSet],
    space: MeasureSpace,
    band: VolBand,
    trials: usize,
    n_paths: usize,
    seed: u64,
) -> Result<UnionReport> {
    let n = sets.len();
    if n == 0 {
        return Err(Error::invalid("union identity needs at least one set"));
    }
    if n > 4 {
        return Err(Error::TooManySets(n));
    }
    let subsets = ordered_subsets(n);
    let mut elements = Vec::with_capacity(subsets.len());
    let mut signs = Vec::with_capacity(subsets.len());
    for s in &subsets {
        let mut cap = sets[s[0]].clone();
        for &i in &s[1..] {
            cap = cap.intersection(&sets[i]);
        }
        elements.push(L2Element::indicator(space, cap)?);
        signs.push(if s.len() % 2 == 1 { 1.0 } else { -1.0 });
    }
    let union = sets.iter().skip(1).fold(sets[0].clone(), |acc, s| acc.union(s));
    let union_measure = union.measure();
    let dist = fdd(&elements, band)?;
    let c = DVector::from_vec(signs.clone());
    let quadratic_form = (c.transpose() * dist.gram() * &c)[(0, 0)];

    let mut rng = path_rng(seed, u64::MAX);
    let mut max_dev: f64 = 0.0;
    let cc = &c * c.transpose();
    for _ in 0..trials {
        let a: f64 = rng.random_range(-1.0..1.0);
        let lhs = dist.gfun().eval(&(&cc * a))?;
        let rhs = g_scalar(band, a * union_measure);
        max_dev = max_dev.max((lhs - rhs).abs());
    }

    let mut monte_carlo = Vec::new();
    let mut z_max: f64 = 0.0;
    let mut thetas = vec![band.lo()];
    if band.hi() != band.lo() {
        thetas.push(band.hi());
    }
    for theta in thetas {
        let draws = dist.sample_given_theta(theta, n_paths, seed)?;
        let combo: Vec<f64> = (0..n_paths).map(|i| draws.row(i).dot(&c.transpose())).collect();
        let (var, se) = variance_se(&combo);
        let target = theta * union_measure;
        if se > 0.0 {
            z_max = z_max.max((var - target).abs() / se);
        } else if (var - target).abs() > 1e-12 {
            z_max = f64::INFINITY;
        }
        monte_carlo.push((theta, var, se, target));
    }
    Ok(UnionReport {
        union_measure,
        quadratic_form,
        max_g_deviation: max_dev,
        monte_carlo,
        mc_z_max: z_max,
        pass: max_dev <= 1e-12 && z_max <= 5.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gheat::{solve_gheat_1d, PayoffSpec, PdeGrid};
    use crate::scenario::{enumerate_scenarios, sup_expectation, uniform_grid};
    use crate::stats::mean_se;
    use std::f64::consts::PI;

    fn band() -> VolBand {
        VolBand::new(1.0, 4.0).unwrap()
    }

    fn sp() -> MeasureSpace {
        MeasureSpace::default()
    }

    fn iv(a: f64, b: f64) -> IntervalSet {
        IntervalSet::interval(a, b).unwrap()
    }

    #[test]
    fn fdd_examples() {
        let h = L2Element::from_coeffs(sp(), Basis::Cosine, vec![0.0, 2.0]).unwrap();
        let d = fdd(&[h.clone()], band()).unwrap();
        assert_eq!(d.variance_band(0), (4.0, 16.0));
        let e: Vec<L2Element> = (0..2)
            .map(|i| L2Element::basis_element(sp(), Basis::Cosine, i).unwrap())
            .collect();
        assert_eq!(fdd(&e, band()).unwrap().gram(), &DMatrix::identity(2, 2));
        let d = fdd(&[h.clone(), h], band()).unwrap();
        let x = d.sample_given_theta(2.0, 50, 1).unwrap();
        for i in 0..50 {
            assert!((x[(i, 0)] - x[(i, 1)]).abs() < 1e-12 * x[(i, 0)].abs().max(1.0));
        }
        let other = L2Element::basis_element(MeasureSpace::circle(64).unwrap(), Basis::Cosine, 1).unwrap();
        let e1 = L2Element::basis_element(sp(), Basis::Cosine, 1).unwrap();
        assert!(matches!(fdd(&[e1, other], band()), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn empirical_covariance_matches_theta_gram() {
        let h = L2Element::from_coeffs(sp(), Basis::Cosine, vec![0.3, 1.0, 0.2]).unwrap();
        let k = L2Element::indicator(sp(), iv(0.5, 2.5)).unwrap();
        let d = fdd(&[h, k], band()).unwrap();
        let theta = 2.5;
        let n = 100_000;
        let x = d.sample_given_theta(theta, n, 42).unwrap();
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            let prod: Vec<f64> = (0..n).map(|i| x[(i, a)] * x[(i, b)]).collect();
            let (m, se) = mean_se(&prod);
            let want = theta * d.gram()[(a, b)];
            assert!((m - want).abs() < 5.0 * se, "({a},{b}): {m} vs {want} se {se}");
        }
        assert!(d.sample_given_theta(5.0, 1, 1).is_err());
    }

    #[test]
    fn top_of_band_second_moment() {
        let h = L2Element::from_coeffs(sp(), Basis::Cosine, vec![0.0, 1.5]).unwrap();
        let d = fdd(&[h], band()).unwrap();
        let x = d.sample_given_theta(band().hi(), 100_000, 3).unwrap();
        let sq: Vec<f64> = x.column(0).iter().map(|v| v * v).collect();
        let (m, se) = mean_se(&sq);
        assert!((m - 4.0 * 2.25).abs() < 5.0 * se);
    }

    #[test]
    fn surrogate_of_basis_element_is_exact() {
        let e2 = L2Element::basis_element(sp(), Basis::Cosine, 2).unwrap();
        for n in [3, 5, 40] {
            let s = expansion_surrogate(&e2, Basis::Cosine, n, band()).unwrap();
            assert_eq!(s.projected_norm_sq, 1.0);
            assert_eq!(s.defect, 0.0);
            assert_eq!(s.band().unwrap(), band());
        }
    }

    #[test]
    fn surrogate_variance_monotone_and_gap_bounded() {
        let h = L2Element::from_fn(sp(), |x| x).unwrap();
        let mut prev = 0.0;
        for n in 1..=65 {
            let s = expansion_surrogate(&h, Basis::FullTrig, n, band()).unwrap();
            assert!(s.projected_norm_sq >= prev);
            prev = s.projected_norm_sq;
        }
        let s = expansion_surrogate(&h, Basis::FullTrig, 65, band()).unwrap();
        // Lipschitz payoff: |E phi(X) - E phi(Y)| <= sigma_hi |sd_X - sd_Y| on each scenario
        let phi = |x: f64| (x - 1.0).abs();
        let solve = |v: f64| {
            let b = band().scaled(v).unwrap();
            let grid = PdeGrid::auto(b, 1.0, 1, 1601, 1);
            solve_gheat_1d(b, &PayoffSpec::new(phi, 1), 1.0, &grid).unwrap()
        };
        let gap = (solve(s.projected_norm_sq) - solve(s.norm_sq)).abs();
        let bound = band().sigma_hi() * (s.norm_sq.sqrt() - s.projected_norm_sq.sqrt()) + 2e-2;
        assert!(gap <= bound, "{gap} > {bound}");
    }

    #[test]
    fn union_identity_examples() {
        let r = union_identity_check(&[iv(0.0, 1.0), iv(2.0, 3.5)], sp(), band(), 50, 20_000, 1).unwrap();
        assert!((r.quadratic_form - 2.5).abs() < 1e-12);
        let r = union_identity_check(&[iv(0.0, 2.0), iv(1.0, 3.0)], sp(), band(), 50, 20_000, 2).unwrap();
        assert!((r.union_measure - 3.0).abs() < 1e-15);
        assert!((r.quadratic_form - 3.0).abs() < 1e-12);
        assert!(r.pass, "{r:?}");
        let r = union_identity_check(
            &[iv(0.0, 2.0), iv(1.0, 3.0), iv(2.0, 4.0)],
            sp(),
            band(),
            50,
            20_000,
            3,
        )
        .unwrap();
        assert!((r.quadratic_form - 4.0).abs() < 1e-12);
        assert!(r.pass, "{r:?}");
        let five: Vec<IntervalSet> = (0..5).map(|i| iv(i as f64, i as f64 + 0.5)).collect();
        assert!(matches!(
            union_identity_check(&five, sp(), band(), 1, 10, 1),
            Err(Error::TooManySets(5))
        ));
    }

    #[test]
    fn subset_order() {
        let s = ordered_subsets(3);
        assert_eq!(
            s,
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]]
        );
    }

    #[test]
    fn orthogonal_but_dependent() {
        let h = L2Element::basis_element(sp(), Basis::Cosine, 1).unwrap();
        let k = L2Element::basis_element(sp(), Basis::Cosine, 2).unwrap();
        let d = fdd(&[h, k], band()).unwrap();
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(d.gfun().eval(&swap).unwrap(), 0.0);
        let sc = enumerate_scenarios(band(), &uniform_grid(1.0, 1).unwrap(), &[]).unwrap();
        let est = sup_expectation(
            |w: &Vec<f64>| (w[0] * w[1]).max(0.0),
            |s: &ScenarioPath, rng: &mut ChaCha8Rng| d.sample_scenario(s, rng),
            &sc,
            20_000,
            8,
        )
        .unwrap();
        // E (Z1 Z2)^+ = 1/pi for independent standard normals, scaled by theta = 4
        assert!((est.value - 4.0 / PI).abs() < 5.0 * est.std_error);
        assert!(est.value > 10.0 * est.std_error);
    }
}
