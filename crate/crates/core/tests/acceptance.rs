//! The fifteen acceptance criteria at the default configuration, one test
//! each, printing a PASS/FAIL line.

use std::time::Instant;

use gfield_core::config::RunConfig;
use gfield_core::verify::run_criterion;

fn check(id: usize) {
    let cfg = RunConfig::default();
    let start = Instant::now();
    let row = run_criterion(id, &cfg).unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    println!("{} [{:.1}s]", row.line(), start.elapsed().as_secs_f64());
    assert!(row.pass(), "{}", row.line());
}

#[test]
fn criterion_01_gnormal_moments() {
    check(1);
}

#[test]
fn criterion_02_engine_vs_oracle() {
    check(2);
}

#[test]
fn criterion_03_compatibility() {
    check(3);
}

#[test]
fn criterion_04_covariance() {
    check(4);
}

#[test]
fn criterion_05_orthonormal_expansion() {
    check(5);
}

#[test]
fn criterion_06_inclusion_exclusion() {
    check(6);
}

#[test]
fn criterion_07_isometry_bands() {
    check(7);
}

#[test]
fn criterion_08_capacity_chebyshev() {
    check(8);
}

#[test]
fn criterion_09_infinite_dim_gbm() {
    check(9);
}

#[test]
fn criterion_10_green_kernel() {
    check(10);
}

#[test]
fn criterion_11_spde_coupling() {
    check(11);
}

#[test]
fn criterion_12_g_ou_diagnostics() {
    check(12);
}

#[test]
fn criterion_13_weak_solution() {
    check(13);
}

#[test]
fn criterion_14_contraction() {
    check(14);
}

#[test]
fn criterion_15_determinism() {
    check(15);
}
