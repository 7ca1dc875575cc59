//! Cross-module invariants as property tests.

use std::f64::consts::PI;
use std::sync::Arc;

use gfield_core::config::RunConfig;
use gfield_core::gheat::{solve_gheat_1d, PayoffSpec, PdeGrid};
use gfield_core::hilbert::{Basis, MeasureSpace};
use gfield_core::noise::io::{format_csv, format_meta, parse_bundle};
use gfield_core::noise::{integrate_elementary, sample_noise, ElementaryField, NoiseLayout, TimePartition};
use gfield_core::scenario::{GFunction, ScenarioPath, VolBand};
use gfield_core::sets::IntervalSet;
use gfield_core::spde::GreenKernel;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn band() -> impl Strategy<Value = VolBand> {
    (0.1f64..2.0, 0.0f64..3.0).prop_map(|(lo, w)| VolBand::new(lo, lo + w).unwrap())
}

fn layout(slices: usize, modes: usize) -> Arc<NoiseLayout> {
    let p = TimePartition::uniform(1.0, slices).unwrap();
    Arc::new(NoiseLayout::new(p, MeasureSpace::circle(64).unwrap(), Basis::Cosine, modes).unwrap())
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        (&a + a.transpose()) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(seed in any::<u64>(), nx in 5usize..4000, paths in 2usize..10_000, lo in 0.0f64..3.0, w in 0.0f64..3.0) {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.gheat.nx = nx;
        cfg.scenario.n_paths = paths;
        cfg.scenario.sigma_lo2 = lo;
        cfg.scenario.sigma_hi2 = lo + w;
        prop_assert_eq!(&RunConfig::from_toml_str(&cfg.to_toml()).unwrap(), &cfg);
        prop_assert_eq!(&RunConfig::from_json_str(&cfg.to_json()).unwrap(), &cfg);
    }

    #[test]
    fn kernel_is_symmetric_and_positive(t in 1e-3f64..5.0, x in 0.0f64..2.0 * PI, y in 0.0f64..2.0 * PI, m in 0.1f64..3.0) {
        let k = GreenKernel::new(m).unwrap();
        let v = k.value(t, x, y).unwrap();
        prop_assert_eq!(v, k.value(t, y, x).unwrap());
        prop_assert!(v > 0.0);
        if t <= 1.0 {
            prop_assert!((k.eigen(t, x, y).unwrap() - k.images(t, x, y).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn g_function_is_sublinear(b in band(), a in symmetric(3), c in symmetric(3), lambda in 0.0f64..5.0) {
        let g = GFunction::new(DMatrix::identity(3, 3), b).unwrap();
        let ga = g.eval(&a).unwrap();
        let gc = g.eval(&c).unwrap();
        prop_assert!(g.eval(&(&a + &c)).unwrap() <= ga + gc + 1e-12 * (1.0 + ga.abs() + gc.abs()));
        prop_assert!((g.eval(&(&a * lambda)).unwrap() - lambda * ga).abs() <= 1e-12 * (1.0 + lambda * ga.abs()));
        // Monotone in the positive semidefinite order.
        let psd = &c * c.transpose();
        prop_assert!(g.eval(&(&a + psd)).unwrap() >= ga - 1e-12 * (1.0 + ga.abs()));
    }

    #[test]
    fn noise_bundle_round_trips(seed in any::<u64>(), slices in 1usize..6, modes in 1usize..8, b in band()) {
        let sc = ScenarioPath::constant(b, 1.0, slices, b.hi()).unwrap();
        let w = sample_noise(layout(slices, modes), &sc, seed).unwrap();
        let back = parse_bundle(&format_csv(&w), &format_meta(&w)).unwrap();
        prop_assert_eq!(back.increments(), w.increments());
        prop_assert_eq!(back.seed(), seed);
        let again = sample_noise(layout(slices, modes), &sc, seed).unwrap();
        prop_assert_eq!(again.increments(), w.increments());
    }

    #[test]
    fn refinement_sums_back(seed in any::<u64>(), bridge in any::<u64>(), factor in 1usize..6) {
        let b = VolBand::new(1.0, 4.0).unwrap();
        let sc = ScenarioPath::new(b, vec![0.0, 0.5, 1.0], vec![4.0, 1.0]).unwrap();
        let w = sample_noise(layout(4, 5), &sc, seed).unwrap();
        let f = w.refine(factor, bridge).unwrap();
        for j in 0..w.n_slices() {
            for n in 0..w.n_modes() {
                let s: f64 = (0..factor).map(|k| f.increment(j * factor + k, n)).sum();
                prop_assert!((s - w.increment(j, n)).abs() <= 1e-12 * (1.0 + w.increment(j, n).abs()));
            }
        }
    }

    #[test]
    fn elementary_integral_is_linear(seed in any::<u64>(), xs in proptest::collection::vec(-2.0f64..2.0, 6), ys in proptest::collection::vec(-2.0f64..2.0, 6), a in -3.0f64..3.0) {
        let b = VolBand::new(1.0, 4.0).unwrap();
        let sc = ScenarioPath::constant(b, 1.0, 3, 2.0).unwrap();
        let lay = layout(3, 16);
        let w = sample_noise(lay.clone(), &sc, seed).unwrap();
        let sets = vec![IntervalSet::interval(0.2, 1.7).unwrap(), IntervalSet::interval(2.5, 5.0).unwrap()];
        let part = lay.partition.clone();
        let table = |v: &[f64]| vec![v[..3].to_vec(), v[3..].to_vec()];
        let comb: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + y).collect();
        let i = |v: &[f64]| integrate_elementary(&ElementaryField::deterministic(sets.clone(), part.clone(), &table(v)).unwrap(), &w).unwrap();
        let (ix, iy, ic) = (i(&xs), i(&ys), i(&comb));
        prop_assert!((ic - (a * ix + iy)).abs() <= 1e-10 * (1.0 + ix.abs() + iy.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_is_translation_invariant_and_homogeneous(b in band(), c in -2.0f64..2.0, lambda in 0.1f64..4.0) {
        let grid = PdeGrid::auto(b, 1.0, 1, 201, 2);
        let base = solve_gheat_1d(b, &PayoffSpec::new(|x: f64| x.abs() - 0.3 * x * x, 2), 1.0, &grid).unwrap();
        let shifted = solve_gheat_1d(b, &PayoffSpec::new(move |x: f64| x.abs() - 0.3 * x * x + c, 2), 1.0, &grid).unwrap();
        let scaled = solve_gheat_1d(b, &PayoffSpec::new(move |x: f64| lambda * (x.abs() - 0.3 * x * x), 2), 1.0, &grid).unwrap();
        prop_assert!((shifted - base - c).abs() < 1e-9);
        prop_assert!((scaled - lambda * base).abs() < 1e-9 * (1.0 + lambda));
        let upper = solve_gheat_1d(b, &PayoffSpec::new(|x: f64| x.abs(), 1), 1.0, &grid).unwrap();
        let lower = solve_gheat_1d(b, &PayoffSpec::new(|x: f64| x.abs() - 0.3 * x * x, 2), 1.0, &grid).unwrap();
        prop_assert!(lower <= upper + 1e-12);
    }
}
