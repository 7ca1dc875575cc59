//! The parameter Hilbert space `L^2([0, L])`: quadrature, orthonormal bases,
//! elements in grid, coefficient or exact-indicator form, and diagonal
//! Hilbert-Schmidt operators.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::psd_jitter;
use crate::sets::IntervalSet;

pub const DEFAULT_N_QUAD: usize = 512;

/// `[0, length]` with Lebesgue measure and a uniform trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpace {
    length: f64,
    n_quad: usize,
}

impl Default for MeasureSpace {
    fn default() -> Self {
        Self {
            length: 2.0 * PI,
            n_quad: DEFAULT_N_QUAD,
        }
    }
}

impl MeasureSpace {
    pub fn new(length: f64, n_quad: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!("length must be positive, got {length}")));
        }
        if n_quad < 16 {
            return Err(Error::invalid(format!("n_quad must be at least 16, got {n_quad}")));
        }
        Ok(Self { length, n_quad })
    }

    /// `[0, 2 pi]` with `n_quad` panels.
    pub fn circle(n_quad: usize) -> Result<Self> {
        Self::new(2.0 * PI, n_quad)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    /// Highest trigonometric frequency resolved without aliasing.
    pub fn max_frequency(&self) -> usize {
        self.n_quad / 4
    }

    /// The `n_quad + 1` quadrature nodes, endpoints included.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.length / self.n_quad as f64;
        (0..=self.n_quad).map(|i| i as f64 * h).collect()
    }

    /// Trapezoid rule on values at [`MeasureSpace::nodes`].
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let n = self.n_quad;
        let inner: f64 = values[1..n].iter().sum();
        (inner + 0.5 * (values[0] + values[n])) * self.length / n as f64
    }
}

/// Orthonormal bases of `L^2([0, L])`.
///
/// Trigonometric bases use period `L`: `e_0 = 1/sqrt(L)` and
/// `sqrt(2/L) cos(2 pi n x / L)`, which on `[0, 2 pi]` is `cos(nx)/sqrt(pi)`.
/// The full trigonometric basis interleaves sines: index `2k - 1` is the
/// cosine and `2k` the sine of frequency `k`. The indicator partition splits
/// the interval into equal cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Basis {
    Cosine,
    FullTrig,
    IndicatorPartition { cells: usize },
}

/// A basis function with its frequency structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Constant,
    Cos(usize),
    Sin(usize),
    Cell(usize),
}

impl Basis {
    /// Number of basis elements usable on `space`.
    pub fn band_limit(&self, space: &MeasureSpace) -> usize {
        match *self {
            Basis::Cosine => space.max_frequency() + 1,
            Basis::FullTrig => 2 * space.max_frequency() + 1,
            Basis::IndicatorPartition { cells } => cells,
        }
    }

    pub fn mode(&self, i: usize) -> Mode {
        match *self {
            Basis::Cosine => {
                if i == 0 {
                    Mode::Constant
                } else {
                    Mode::Cos(i)
                }
            }
            Basis::FullTrig => {
                if i == 0 {
                    Mode::Constant
                } else if i % 2 == 1 {
                    Mode::Cos(i.div_ceil(2))
                } else {
                    Mode::Sin(i / 2)
                }
            }
            Basis::IndicatorPartition { .. } => Mode::Cell(i),
        }
    }

    /// Index of a trigonometric mode in this basis, if present.
    pub fn index_of(&self, mode: Mode) -> Option<usize> {
        match (*self, mode) {
            (Basis::Cosine | Basis::FullTrig, Mode::Constant) => Some(0),
            (Basis::Cosine, Mode::Cos(n)) => Some(n),
            (Basis::FullTrig, Mode::Cos(n)) => Some(2 * n - 1),
            (Basis::FullTrig, Mode::Sin(n)) => Some(2 * n),
            (Basis::IndicatorPartition { .. }, Mode::Cell(k)) => Some(k),
            _ => None,
        }
    }

    pub fn eval(&self, space: &MeasureSpace, i: usize, x: f64) -> f64 {
        let l = space.length;
        let s = (2.0 / l).sqrt();
        let w = 2.0 * PI / l;
        match self.mode(i) {
            Mode::Constant => 1.0 / l.sqrt(),
            Mode::Cos(n) => s * (w * n as f64 * x).cos(),
            Mode::Sin(n) => s * (w * n as f64 * x).sin(),
            Mode::Cell(k) => {
                let cells = self.cells();
                let width = l / cells as f64;
                let inside = if k + 1 == cells {
                    x >= k as f64 * width && x <= l
                } else {
                    x >= k as f64 * width && x < (k + 1) as f64 * width
                };
                if inside {
                    1.0 / width.sqrt()
                } else {
                    0.0
                }
            }
        }
    }

    /// `sup_x |e_i(x)|^2`.
    pub fn sup_sq(&self, space: &MeasureSpace, i: usize) -> f64 {
        let l = space.length;
        match self.mode(i) {
            Mode::Constant => 1.0 / l,
            Mode::Cos(_) | Mode::Sin(_) => 2.0 / l,
            Mode::Cell(_) => self.cells() as f64 / l,
        }
    }

    fn cells(&self) -> usize {
        match *self {
            Basis::IndicatorPartition { cells } => cells,
            _ => 0,
        }
    }

    /// Exact `int_a^b e_i(x) dx`.
    pub fn integral(&self, space: &MeasureSpace, i: usize, a: f64, b: f64) -> f64 {
        let l = space.length;
        let s = (2.0 / l).sqrt();
        match self.mode(i) {
            Mode::Constant => (b - a) / l.sqrt(),
            Mode::Cos(n) => {
                let w = 2.0 * PI * n as f64 / l;
                s * ((w * b).sin() - (w * a).sin()) / w
            }
            Mode::Sin(n) => {
                let w = 2.0 * PI * n as f64 / l;
                s * ((w * a).cos() - (w * b).cos()) / w
            }
            Mode::Cell(k) => {
                let width = l / self.cells() as f64;
                let lo = a.max(k as f64 * width);
                let hi = b.min((k + 1) as f64 * width);
                (hi - lo).max(0.0) / width.sqrt()
            }
        }
    }

    pub fn is_trig(&self) -> bool {
        matches!(self, Basis::Cosine | Basis::FullTrig)
    }
}

/// Representation of an [`L2Element`].
#[derive(Debug, Clone, PartialEq)]
pub enum Repr {
    /// Samples at the space's quadrature nodes.
    Grid(Vec<f64>),
    Coeffs { basis: Basis, coeffs: Vec<f64> },
    /// Indicator of a finite union of intervals, kept exact.
    Indicator(IntervalSet),
}

/// An element of `L^2([0, L])`.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Element {
    space: MeasureSpace,
    repr: Repr,
}

impl L2Element {
    /// Samples `f` at the quadrature nodes.
    pub fn from_fn(space: MeasureSpace, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = space.nodes().into_iter().map(f).collect();
        Self::from_grid(space, values)
    }

    pub fn from_grid(space: MeasureSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_quad + 1 {
            return Err(Error::DimensionMismatch {
                expected: space.n_quad + 1,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid values must be finite"));
        }
        Ok(Self {
            space,
            repr: Repr::Grid(values),
        })
    }

    pub fn from_coeffs(space: MeasureSpace, basis: Basis, coeffs: Vec<f64>) -> Result<Self> {
        let limit = basis.band_limit(&space);
        if coeffs.len() > limit {
            return Err(Error::BandLimit {
                requested: coeffs.len(),
                limit,
            });
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Self {
            space,
            repr: Repr::Coeffs { basis, coeffs },
        })
    }

    /// The basis function `e_i`.
    pub fn basis_element(space: MeasureSpace, basis: Basis, i: usize) -> Result<Self> {
        let mut c = vec![0.0; i + 1];
        c[i] = 1.0;
        Self::from_coeffs(space, basis, c)
    }

    pub fn indicator(space: MeasureSpace, set: IntervalSet) -> Result<Self> {
        if !set.within(space.length) {
            return Err(Error::invalid(format!(
                "set {:?} is not contained in [0, {}]",
                set.pieces(),
                space.length
            )));
        }
        Ok(Self {
            space,
            repr: Repr::Indicator(set),
        })
    }

    pub fn space(&self) -> MeasureSpace {
        self.space
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    /// Coefficients and basis when held in coefficient form.
    pub fn as_coeffs(&self) -> Option<(Basis, &[f64])> {
        match &self.repr {
            Repr::Coeffs { basis, coeffs } => Some((*basis, coeffs)),
            _ => None,
        }
    }

    /// Pointwise value; grid elements interpolate linearly.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Coeffs { basis, coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * basis.eval(&self.space, i, x))
                .sum(),
            Repr::Indicator(set) => {
                if set.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            Repr::Grid(v) => {
                let h = self.space.length / self.space.n_quad as f64;
                let pos = (x / h).clamp(0.0, self.space.n_quad as f64);
                let i = (pos.floor() as usize).min(self.space.n_quad - 1);
                let frac = pos - i as f64;
                v[i] * (1.0 - frac) + v[i + 1] * frac
            }
        }
    }

    /// Values at the quadrature nodes.
    pub fn grid_values(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Grid(v) => v.clone(),
            _ => self.space.nodes().into_iter().map(|x| self.eval(x)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let repr = match &self.repr {
            Repr::Grid(v) => Repr::Grid(v.iter().map(|x| c * x).collect()),
            Repr::Coeffs { basis, coeffs } => Repr::Coeffs {
                basis: *basis,
                coeffs: coeffs.iter().map(|x| c * x).collect(),
            },
            Repr::Indicator(_) => Repr::Grid(self.grid_values().iter().map(|x| c * x).collect()),
        };
        Self {
            space: self.space,
            repr,
        }
    }

    /// `self + other`; stays in coefficient form when both share a basis.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        if let (Repr::Coeffs { basis: b0, coeffs: c0 }, Repr::Coeffs { basis: b1, coeffs: c1 }) =
            (&self.repr, &other.repr)
        {
            if b0 == b1 {
                let n = c0.len().max(c1.len());
                let c = (0..n)
                    .map(|i| c0.get(i).unwrap_or(&0.0) + c1.get(i).unwrap_or(&0.0))
                    .collect();
                return Self::from_coeffs(self.space, *b0, c);
            }
        }
        let a = self.grid_values();
        let b = other.grid_values();
        Self::from_grid(self.space, a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            Err(Error::SpaceMismatch)
        } else {
            Ok(())
        }
    }

    /// `<self, e_i>`, exact except for grid elements.
    fn basis_coefficient(&self, basis: Basis, i: usize) -> f64 {
        match &self.repr {
            Repr::Coeffs { basis: b, coeffs } if *b == basis => *coeffs.get(i).unwrap_or(&0.0),
            Repr::Coeffs { basis: b, coeffs } if b.is_trig() && basis.is_trig() => b
                .index_of(basis.mode(i))
                .and_then(|j| coeffs.get(j).copied())
                .unwrap_or(0.0),
            Repr::Indicator(set) => set
                .pieces()
                .iter()
                .map(|&(a, b)| basis.integral(&self.space, i, a, b))
                .sum(),
            _ => {
                let vals = self.grid_values();
                let prod: Vec<f64> = self
                    .space
                    .nodes()
                    .iter()
                    .zip(&vals)
                    .map(|(&x, v)| v * basis.eval(&self.space, i, x))
                    .collect();
                self.space.integrate(&prod)
            }
        }
    }

    /// `||self||^2`: exact for coefficient and indicator forms.
    pub fn norm_sq(&self) -> f64 {
        match &self.repr {
            Repr::Coeffs { coeffs, .. } => coeffs.iter().map(|c| c * c).sum(),
            Repr::Indicator(set) => set.measure(),
            Repr::Grid(v) => {
                let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
                self.space.integrate(&sq)
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Coefficients `<self, e_i>` for `i < n`.
    pub fn coeffs(&self, basis: Basis, n: usize) -> Result<Vec<f64>> {
        let limit = basis.band_limit(&self.space);
        if n > limit {
            return Err(Error::BandLimit {
                requested: n,
                limit,
            });
        }
        if let Repr::Grid(v) = &self.repr {
            let nodes = self.space.nodes();
            return Ok((0..n)
                .map(|i| {
                    let prod: Vec<f64> = nodes
                        .iter()
                        .zip(v)
                        .map(|(&x, f)| f * basis.eval(&self.space, i, x))
                        .collect();
                    self.space.integrate(&prod)
                })
                .collect());
        }
        Ok((0..n).map(|i| self.basis_coefficient(basis, i)).collect())
    }

    /// Orthogonal projection onto the first `n` basis elements.
    pub fn project(&self, basis: Basis, n: usize) -> Result<Self> {
        Self::from_coeffs(self.space, basis, self.coeffs(basis, n)?)
    }

    /// `||h||^2 - sum_{i < n} h_i^2`.
    pub fn parseval_defect(&self, basis: Basis, n: usize) -> Result<f64> {
        let c = self.coeffs(basis, n)?;
        Ok(self.norm_sq() - c.iter().map(|x| x * x).sum::<f64>())
    }
}

/// `<h, k>`: exact for coefficient pairs in trigonometric bases, for
/// indicator pairs and for indicator-coefficient pairs; trapezoid otherwise.
pub fn inner(h: &L2Element, k: &L2Element) -> Result<f64> {
    h.check_space(k)?;
    Ok(match (&h.repr, &k.repr) {
        (Repr::Indicator(a), Repr::Indicator(b)) => a.intersection(b).measure(),
        (Repr::Coeffs { basis: b0, coeffs: c0 }, Repr::Coeffs { basis: b1, coeffs: c1 })
            if b0 == b1 =>
        {
            c0.iter().zip(c1).map(|(x, y)| x * y).sum()
        }
        (Repr::Coeffs { basis, coeffs }, other) | (other, Repr::Coeffs { basis, coeffs })
            if !matches!(other, Repr::Grid(_)) =>
        {
            let o = if std::ptr::eq(other, &h.repr) { h } else { k };
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * o.basis_coefficient(*basis, i))
                .sum()
        }
        _ => {
            let a = h.grid_values();
            let b = k.grid_values();
            let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
            h.space.integrate(&prod)
        }
    })
}

/// Gram matrix `<h_i, h_j>`, symmetrized and PSD-jittered.
pub fn gram(elements: &[L2Element]) -> Result<DMatrix<f64>> {
    if elements.is_empty() {
        return Err(Error::invalid("gram needs at least one element"));
    }
    let n = elements.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = inner(&elements[i], &elements[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    psd_jitter(g)
}

/// Closed-form rule for the eigenvalue tail `sum_{i >= N} a_i^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TailRule {
    /// Eigenvalues beyond the stored ones are zero.
    Finite,
    /// `a_i = 1 / (i + 1)`.
    Harmonic,
    /// `a_i = ratio^i`, `0 <= ratio < 1`.
    Geometric { ratio: f64 },
}

/// Diagonal Hilbert-Schmidt operator `Q e_i = a_i e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsOperator {
    basis: Basis,
    eigenvalues: Vec<f64>,
    tail: TailRule,
}

impl HsOperator {
    pub fn finite(basis: Basis, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("eigenvalues must be finite"));
        }
        Ok(Self {
            basis,
            eigenvalues,
            tail: TailRule::Finite,
        })
    }

    /// `a_i = 1/(i + 1)` truncated after `n_max` terms.
    pub fn harmonic(basis: Basis, n_max: usize) -> Self {
        Self {
            basis,
            eigenvalues: (0..n_max).map(|i| 1.0 / (i + 1) as f64).collect(),
            tail: TailRule::Harmonic,
        }
    }

    pub fn geometric(basis: Basis, n_max: usize, ratio: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&ratio) {
            return Err(Error::invalid(format!("ratio must lie in [0, 1), got {ratio}")));
        }
        Ok(Self {
            basis,
            eigenvalues: (0..n_max).map(|i| ratio.powi(i as i32)).collect(),
            tail: TailRule::Geometric { ratio },
        })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_max(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `sum_{i < n_max} a_i^2`.
    pub fn partial_hs_norm_sq(&self) -> f64 {
        self.eigenvalues.iter().map(|a| a * a).sum()
    }

    /// `sum_{i >= n_max} a_i^2` from the tail rule.
    pub fn tail_hs_norm_sq(&self) -> f64 {
        let n = self.n_max();
        match self.tail {
            TailRule::Finite => 0.0,
            TailRule::Harmonic => {
                // Euler-Maclaurin for sum_{k > n} 1/k^2
                if n == 0 {
                    return PI * PI / 6.0;
                }
                let x = n as f64;
                let sum = 1.0 / x - 1.0 / (2.0 * x * x) + 1.0 / (6.0 * x.powi(3))
                    - 1.0 / (30.0 * x.powi(5))
                    + 1.0 / (42.0 * x.powi(7));
                if n >= 20 {
                    sum
                } else {
                    PI * PI / 6.0 - self.partial_hs_norm_sq()
                }
            }
            TailRule::Geometric { ratio } => ratio.powi(2 * n as i32) / (1.0 - ratio * ratio),
        }
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.partial_hs_norm_sq() + self.tail_hs_norm_sq()
    }
}

/// `Q f = sum_i a_i <f, e_i> e_i`, returned in coefficient form.
pub fn hs_apply(q: &HsOperator, f: &L2Element) -> Result<L2Element> {
    let limit = q.basis.band_limit(&f.space);
    if q.n_max() > limit {
        return Err(Error::BandLimit {
            requested: q.n_max(),
            limit,
        });
    }
    if let Some((b, c)) = f.as_coeffs() {
        if b == q.basis {
            if let Some(pos) = c.iter().rposition(|v| *v != 0.0) {
                if pos >= q.n_max() {
                    return Err(Error::BandLimit {
                        requested: pos + 1,
                        limit: q.n_max(),
                    });
                }
            }
        }
    }
    let c = f.coeffs(q.basis, q.n_max())?;
    let image = c.iter().zip(&q.eigenvalues).map(|(x, a)| a * x).collect();
    L2Element::from_coeffs(f.space, q.basis, image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::path_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn sp() -> MeasureSpace {
        MeasureSpace::default()
    }

    fn grid_of(e: &L2Element) -> L2Element {
        L2Element::from_grid(e.space(), e.grid_values()).unwrap()
    }

    #[test]
    fn orthonormal_under_quadrature() {
        for basis in [Basis::Cosine, Basis::FullTrig] {
            let lim = basis.band_limit(&sp());
            for i in [0, 1, 2, 7, lim - 1] {
                for j in [0, 1, 2, 7, lim - 1] {
                    let a = grid_of(&L2Element::basis_element(sp(), basis, i).unwrap());
                    let b = grid_of(&L2Element::basis_element(sp(), basis, j).unwrap());
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((inner(&a, &b).unwrap() - want).abs() < 1e-8, "{basis:?} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn inner_examples() {
        let e1 = L2Element::basis_element(sp(), Basis::Cosine, 1).unwrap();
        let e2 = L2Element::basis_element(sp(), Basis::Cosine, 2).unwrap();
        assert!((inner(&e1, &e1).unwrap() - 1.0).abs() < 1e-8);
        assert!(inner(&e1, &e2).unwrap().abs() < 1e-8);
        let a = L2Element::indicator(sp(), IntervalSet::interval(0.0, PI).unwrap()).unwrap();
        let b = L2Element::indicator(sp(), IntervalSet::interval(PI / 2.0, 1.5 * PI).unwrap())
            .unwrap();
        // measure of [pi/2, pi)
        assert_eq!(inner(&a, &b).unwrap(), PI / 2.0);
        let other = MeasureSpace::circle(64).unwrap();
        let c = L2Element::basis_element(other, Basis::Cosine, 1).unwrap();
        assert!(matches!(inner(&e1, &c), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn indicator_against_trig_is_exact() {
        let a = L2Element::indicator(sp(), IntervalSet::interval(0.3, 2.0).unwrap()).unwrap();
        let e3 = L2Element::basis_element(sp(), Basis::Cosine, 3).unwrap();
        let want = ((3.0f64 * 2.0).sin() - (3.0f64 * 0.3).sin()) / 3.0 / PI.sqrt();
        assert!((inner(&a, &e3).unwrap() - want).abs() < 1e-15);
        assert!((inner(&e3, &a).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn gram_examples() {
        let es: Vec<L2Element> = (0..3)
            .map(|i| L2Element::basis_element(sp(), Basis::FullTrig, i).unwrap())
            .collect();
        assert!((gram(&es).unwrap() - DMatrix::identity(3, 3)).amax() < 1e-15);
        let h = L2Element::from_coeffs(sp(), Basis::Cosine, vec![0.5, 1.0, -0.3]).unwrap();
        let g = gram(&[h.clone(), h.scale(2.0)]).unwrap();
        let n = h.norm_sq();
        assert!((g[(0, 1)] - 2.0 * n).abs() < 1e-14 && (g[(1, 1)] - 4.0 * n).abs() < 1e-14);
        assert!(g.clone().symmetric_eigenvalues().min().abs() < 1e-12);
    }

    #[test]
    fn gram_matches_refined_quadrature() {
        let mut rng = path_rng(3, 0);
        let fine = MeasureSpace::circle(4 * DEFAULT_N_QUAD).unwrap();
        for _ in 0..5 {
            let hs: Vec<L2Element> = (0..2)
                .map(|_| {
                    let c = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
                    L2Element::from_coeffs(sp(), Basis::FullTrig, c).unwrap()
                })
                .collect();
            let g = gram(&hs).unwrap();
            let f0 = L2Element::from_fn(fine, |x| hs[0].eval(x)).unwrap();
            let f1 = L2Element::from_fn(fine, |x| hs[1].eval(x)).unwrap();
            assert!((g[(0, 1)] - inner(&f0, &f1).unwrap()).abs() < 1e-6);
            assert!((g[(0, 0)] - f0.norm_sq()).abs() < 1e-6);
        }
    }

    #[test]
    fn coeff_examples() {
        let e3 = L2Element::basis_element(sp(), Basis::Cosine, 3).unwrap();
        assert_eq!(e3.coeffs(Basis::Cosine, 5).unwrap(), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            e3.coeffs(Basis::Cosine, 1000),
            Err(Error::BandLimit { limit: 129, .. })
        ));
        let x = L2Element::from_fn(sp(), |x| x).unwrap();
        let fine = L2Element::from_fn(MeasureSpace::circle(4 * DEFAULT_N_QUAD).unwrap(), |x| x).unwrap();
        let c = x.coeffs(Basis::Cosine, 16).unwrap();
        let cf = fine.coeffs(Basis::Cosine, 16).unwrap();
        assert!((c[0] - PI * (2.0 * PI).sqrt()).abs() < 1e-8);
        for n in 0..16 {
            assert!((c[n] - cf[n]).abs() < 1e-6, "n={n}: {} vs {}", c[n], cf[n]);
        }
        let t = x.coeffs(Basis::FullTrig, 9).unwrap();
        for k in 1..=4 {
            // int_0^{2 pi} x sin(kx)/sqrt(pi) = -2 pi / (k sqrt(pi))
            assert!((t[2 * k] + 2.0 * PI / (k as f64 * PI.sqrt())).abs() < 1e-3);
        }
    }

    #[test]
    fn parseval_defect_behaviour() {
        let x = L2Element::from_fn(sp(), |x| x).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=40 {
            let d = x.parseval_defect(Basis::FullTrig, n).unwrap();
            assert!(d >= 0.0 && d <= prev);
            if n % 2 == 1 && n > 1 {
                assert!(d < prev);
            }
            prev = d;
        }
        let h = L2Element::from_coeffs(sp(), Basis::Cosine, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(h.parseval_defect(Basis::Cosine, 3).unwrap(), 0.0);
    }

    #[test]
    fn hs_examples() {
        let f = L2Element::from_coeffs(sp(), Basis::Cosine, vec![0.2, -1.0, 0.5, 0.0, 2.0]).unwrap();
        let id = HsOperator::finite(Basis::Cosine, vec![1.0; 8]).unwrap();
        let out = hs_apply(&id, &f).unwrap();
        assert_eq!(&out.as_coeffs().unwrap().1[..5], f.as_coeffs().unwrap().1);
        let q = HsOperator::harmonic(Basis::Cosine, 8);
        let e4 = L2Element::basis_element(sp(), Basis::Cosine, 4).unwrap();
        let qe = hs_apply(&q, &e4).unwrap();
        assert_eq!(qe.as_coeffs().unwrap().1[4], 0.2);
        let qf = hs_apply(&q, &f).unwrap();
        let want: f64 = f
            .as_coeffs()
            .unwrap()
            .1
            .iter()
            .enumerate()
            .map(|(i, c)| (c / (i + 1) as f64).powi(2))
            .sum();
        let quad = grid_of(&qf).norm_sq();
        assert!((quad - want).abs() < 1e-7);
        let short = HsOperator::harmonic(Basis::Cosine, 3);
        assert!(matches!(hs_apply(&short, &f), Err(Error::BandLimit { .. })));
    }

    #[test]
    fn hs_tails() {
        for n in [1, 5, 8, 20, 100] {
            let q = HsOperator::harmonic(Basis::Cosine, n);
            let brute: f64 = (n + 1..2_000_000).map(|k| 1.0 / (k as f64 * k as f64)).sum::<f64>()
                + 1.0 / 2_000_000.0;
            assert!((q.tail_hs_norm_sq() - brute).abs() < 1e-10, "n={n}");
            assert!((q.hs_norm_sq() - PI * PI / 6.0).abs() < 1e-10);
        }
        let g = HsOperator::geometric(Basis::Cosine, 10, 0.5).unwrap();
        assert!((g.hs_norm_sq() - 1.0 / 0.75).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn cauchy_schwarz_and_round_trip(seed in 0u64..500) {
            let mut rng = path_rng(seed, 7);
            let h = L2Element::from_coeffs(sp(), Basis::FullTrig,
                (0..30).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let a = rng.random_range(0.0..5.0);
            let k = L2Element::indicator(sp(), IntervalSet::interval(a, a + 1.0).unwrap()).unwrap();
            let ip = inner(&h, &k).unwrap();
            prop_assert!(ip.abs() <= h.norm() * k.norm() * (1.0 + 1e-10));
            let g = grid_of(&h);
            let back = L2Element::from_coeffs(sp(), Basis::FullTrig,
                g.coeffs(Basis::FullTrig, 30).unwrap()).unwrap();
            let diff = back.add(&h.scale(-1.0)).unwrap();
            prop_assert!(diff.norm() < 1e-7);
        }
    }
}
