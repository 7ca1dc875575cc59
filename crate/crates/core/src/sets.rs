//! Finite unions of half-open intervals with exact measure arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite union of disjoint half-open intervals `[a, b)`, kept sorted
/// with touching pieces merged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    pieces: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::from_intervals(&[(a, b)])
    }

    /// Union of the given intervals; empty pieces are dropped.
    pub fn from_intervals(intervals: &[(f64, f64)]) -> Result<Self> {
        for &(a, b) in intervals {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid(format!(
                    "interval [{a}, {b}) does not have finite measure"
                )));
            }
            if a > b {
                return Err(Error::invalid(format!("interval [{a}, {b}) is reversed")));
            }
        }
        let mut v: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match pieces.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => pieces.push((a, b)),
            }
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|&(a, b)| a <= x && x < b)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.pieces.clone();
        all.extend_from_slice(&other.pieces);
        Self::from_intervals(&all).expect("pieces of valid sets are valid")
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a0, b0) = self.pieces[i];
            let (a1, b1) = other.pieces[j];
            let lo = a0.max(a1);
            let hi = b0.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
            if b0 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { pieces: out }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    /// True if every piece lies inside `[0, length]`.
    pub fn within(&self, length: f64) -> bool {
        self.pieces.iter().all(|&(a, b)| a >= 0.0 && b <= length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arithmetic() {
        let a = IntervalSet::interval(0.0, 2.0).unwrap();
        let b = IntervalSet::interval(1.0, 3.0).unwrap();
        assert_eq!(a.intersection(&b).measure(), 1.0);
        assert_eq!(a.union(&b).measure(), 3.0);
        assert_eq!(a.union(&b).pieces(), &[(0.0, 3.0)]);
        let c = IntervalSet::interval(2.0, 4.0).unwrap();
        assert!(a.is_disjoint(&c));
        assert_eq!(a.union(&c).pieces().len(), 1);
        assert!(a.contains(0.0) && !a.contains(2.0));
        assert!(IntervalSet::interval(1.0, 0.0).is_err());
        assert!(IntervalSet::interval(0.0, f64::INFINITY).is_err());
        assert!(IntervalSet::interval(1.0, 1.0).unwrap().is_empty());
    }

    fn set() -> impl Strategy<Value = IntervalSet> {
        prop::collection::vec((0.0f64..10.0, 0.0f64..3.0), 0..5).prop_map(|v| {
            let iv: Vec<(f64, f64)> = v.into_iter().map(|(a, w)| (a, a + w)).collect();
            IntervalSet::from_intervals(&iv).unwrap()
        })
    }

    proptest! {
        #[test]
        fn measure_is_modular(a in set(), b in set()) {
            let lhs = a.union(&b).measure() + a.intersection(&b).measure();
            prop_assert!((lhs - a.measure() - b.measure()).abs() < 1e-12);
        }

        #[test]
        fn pieces_sorted_disjoint(a in set(), b in set()) {
            for s in [a.union(&b), a.intersection(&b)] {
                for w in s.pieces().windows(2) {
                    prop_assert!(w[0].1 < w[1].0);
                }
            }
        }
    }
}
