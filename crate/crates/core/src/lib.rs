//! Random fields under sublinear expectation: G-normal oracles, G-spacetime
//! white noise and solvers for the stochastic heat equation with mass.

pub mod config;
pub mod error;
pub mod experiment;
pub mod field;
pub mod gheat;
pub mod hilbert;
pub mod noise;
pub mod report;
pub mod scenario;
pub mod seeding;
pub mod sets;
pub mod spde;
pub mod stats;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};
