//! Run configuration: TOML with sections mirroring the modules, or the
//! equivalent JSON. Unknown keys are rejected and every invariant is checked
//! at load, with errors naming the offending field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gheat::{PdeGrid, CFL_SAFETY, MIN_PADDING};
use crate::hilbert::{Basis, MeasureSpace};
use crate::noise::TimePartition;
use crate::scenario::{uniform_grid, VolBand, MAX_SCENARIOS};
use crate::spde::SpdeConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; every Monte Carlo stream derives from it.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub scenario: ScenarioSection,
    pub gheat: GheatSection,
    pub gfield: GfieldSection,
    pub noise: NoiseSection,
    pub spde: SpdeSection,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_607,
            out: None,
            scenario: ScenarioSection::default(),
            gheat: GheatSection::default(),
            gfield: GfieldSection::default(),
            noise: NoiseSection::default(),
            spde: SpdeSection::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Volatility band and the bang-bang scenario grid of the engine check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub sigma_lo2: f64,
    pub sigma_hi2: f64,
    pub horizon: f64,
    pub slices: usize,
    /// Levels strictly inside the band, in addition to the two endpoints.
    pub interior: Vec<f64>,
    pub n_paths: usize,
    pub compatibility_trials: usize,
    pub chebyshev_pairs: usize,
    pub chebyshev_paths: usize,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            sigma_lo2: 1.0,
            sigma_hi2: 4.0,
            horizon: 1.0,
            slices: 8,
            interior: Vec::new(),
            n_paths: 100_000,
            compatibility_trials: 100,
            chebyshev_pairs: 20,
            chebyshev_paths: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GheatSection {
    /// Points per axis of the 1D oracle.
    pub nx: usize,
    /// Half width of the 1D grid; `(6 + 4) sigma_hi sqrt(T)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Time step of the 1D grid; 0.9 of the CFL limit when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub nx_2d: usize,
}

impl Default for GheatSection {
    fn default() -> Self {
        Self {
            nx: 1201,
            half_width: None,
            dt: None,
            nx_2d: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GfieldSection {
    /// Quadrature panels on `[0, 2 pi]`.
    pub n_quad: usize,
    pub expansion_modes: usize,
    pub union_families: usize,
    pub union_trials: usize,
    pub union_paths: usize,
}

impl Default for GfieldSection {
    fn default() -> Self {
        Self {
            n_quad: 512,
            expansion_modes: 32,
            union_families: 50,
            union_trials: 20,
            union_paths: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub horizon: f64,
    pub slices: usize,
    pub n_modes: usize,
    pub isometry_integrands: usize,
    pub isometry_paths: usize,
    pub idgbm_horizon: f64,
    pub idgbm_modes: usize,
    pub idgbm_paths: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            slices: 4,
            n_modes: 16,
            isometry_integrands: 100,
            isometry_paths: 1000,
            idgbm_horizon: 2.0,
            idgbm_modes: 32,
            idgbm_paths: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpdeSection {
    pub mass: f64,
    pub horizon: f64,
    pub slices: usize,
    pub n_modes: usize,
    pub nx: usize,
    /// Cosine coefficients of the initial datum.
    pub psi: Vec<f64>,
    /// Time refinement factors of the coupling sweep, first entry 1.
    pub refinements: Vec<usize>,
    /// Scenario switch time of the coupling and weak-solution runs.
    pub switch_time: f64,
    pub ou_modes: Vec<usize>,
    /// Scenario slices of the G-OU check; the noise partition refines each.
    pub ou_slices: usize,
    pub ou_refine: usize,
    pub ou_paths: usize,
    pub moment_paths: usize,
    pub contraction_modes: Vec<usize>,
    pub contraction_paths: usize,
}

impl Default for SpdeSection {
    fn default() -> Self {
        Self {
            mass: 1.0,
            horizon: 0.5,
            slices: 64,
            n_modes: 64,
            nx: 128,
            psi: vec![0.3, 1.0, 0.0, 0.5],
            refinements: vec![1, 2, 4, 8],
            switch_time: 0.25,
            ou_modes: vec![0, 1, 3],
            ou_slices: 5,
            ou_refine: 16,
            ou_paths: 4000,
            moment_paths: 64,
            contraction_modes: vec![0, 1, 3],
            contraction_paths: 8,
        }
    }
}

/// Every pass threshold of the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub moment_low_order: f64,
    pub moment_high_order: f64,
    pub engine_n_se: f64,
    pub engine_rel: f64,
    pub compatibility: f64,
    pub covariance: f64,
    pub expansion_oracle: f64,
    pub union_g: f64,
    pub union_n_se: f64,
    pub isometry_n_se: f64,
    pub chebyshev_n_se: f64,
    pub idgbm_n_se: f64,
    pub kernel_mass: f64,
    pub kernel_duality: f64,
    pub coupling: f64,
    pub coupling_order_min: f64,
    pub coupling_order_max: f64,
    pub ou_n_se: f64,
    pub ou_classical_n_se: f64,
    pub weak_residual: f64,
    pub second_moment_n_se: f64,
    pub contraction: f64,
    pub contraction_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            moment_low_order: 1e-2,
            moment_high_order: 5e-2,
            engine_n_se: 3.0,
            engine_rel: 0.02,
            compatibility: 1e-12,
            covariance: 2e-2,
            expansion_oracle: 1e-2,
            union_g: 1e-12,
            union_n_se: 5.0,
            isometry_n_se: 5.0,
            chebyshev_n_se: 3.0,
            idgbm_n_se: 5.0,
            kernel_mass: 1e-8,
            kernel_duality: 1e-10,
            coupling: 1e-2,
            coupling_order_min: 0.7,
            coupling_order_max: 1.3,
            ou_n_se: 3.0,
            ou_classical_n_se: 5.0,
            weak_residual: 1e-3,
            second_moment_n_se: 3.0,
            contraction: 1e-8,
            contraction_max_iter: 30,
        }
    }
}

/// Largest 1D grid or partition a configuration may request.
pub const MAX_GRID: usize = 1 << 20;
pub const MAX_GRID_2D: usize = 1 << 12;
/// The mild solver holds `nx x nx` kernel matrices.
pub const MAX_SPDE_NX: usize = 1 << 12;

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be at least {min}, got {v}")))
    }
}

fn at_most(field: &str, v: usize, max: usize) -> Result<()> {
    if v <= max {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be at most {max}, got {v}")))
    }
}

fn scenario_count(field: &str, levels: usize, slices: usize) -> Result<()> {
    match (0..slices).try_fold(1usize, |acc, _| acc.checked_mul(levels)) {
        Some(c) if c <= MAX_SCENARIOS => Ok(()),
        _ => Err(Error::config(
            field,
            format!("{levels}^{slices} scenarios exceeds the cap {MAX_SCENARIOS}"),
        )),
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::config(toml_field(&e), e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::config("json", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn band(&self) -> Result<VolBand> {
        let s = &self.scenario;
        for (f, v) in [("scenario.sigma_lo2", s.sigma_lo2), ("scenario.sigma_hi2", s.sigma_hi2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(f, format!("must be finite and nonnegative, got {v}")));
            }
        }
        if s.sigma_lo2 > s.sigma_hi2 {
            return Err(Error::config(
                "scenario.sigma_lo2",
                format!("exceeds scenario.sigma_hi2 ({} > {})", s.sigma_lo2, s.sigma_hi2),
            ));
        }
        VolBand::new(s.sigma_lo2, s.sigma_hi2).map_err(|e| Error::config("scenario", e.to_string()))
    }

    /// Bang-bang (plus interior levels) switch times of the engine check.
    pub fn scenario_times(&self) -> Result<Vec<f64>> {
        uniform_grid(self.scenario.horizon, self.scenario.slices)
            .map_err(|e| Error::config("scenario.slices", e.to_string()))
    }

    /// The 1D oracle grid for the G-normal checks at horizon `scenario.horizon`.
    pub fn pde_grid(&self) -> Result<PdeGrid> {
        let band = self.band()?;
        let t = self.scenario.horizon;
        let mut grid = PdeGrid::auto(band, t, 1, self.gheat.nx, 4);
        if let Some(w) = self.gheat.half_width {
            positive("gheat.half_width", w)?;
            let need = MIN_PADDING * band.sigma_hi() * t.sqrt();
            if w < need {
                return Err(Error::config(
                    "gheat.half_width",
                    format!("{w} is below the padding 6 sigma_hi sqrt(T) = {need}"),
                ));
            }
            grid.half_width = w;
            let dx = grid.dx();
            grid.dt = CFL_SAFETY * dx * dx / band.hi().max(f64::MIN_POSITIVE);
        }
        if let Some(dt) = self.gheat.dt {
            positive("gheat.dt", dt)?;
            let dx = grid.dx();
            let limit = dx * dx / band.hi();
            if dt > limit {
                return Err(Error::config(
                    "gheat.dt",
                    format!("dt = {dt:e} violates the CFL limit dx^2 / sigma_hi^2 = {limit:e}"),
                ));
            }
            grid.dt = dt;
        }
        Ok(grid)
    }

    pub fn space(&self) -> Result<MeasureSpace> {
        MeasureSpace::circle(self.gfield.n_quad).map_err(|e| Error::config("gfield.n_quad", e.to_string()))
    }

    pub fn noise_partition(&self) -> Result<TimePartition> {
        TimePartition::uniform(self.noise.horizon, self.noise.slices)
            .map_err(|e| Error::config("noise.slices", e.to_string()))
    }

    pub fn spde_config(&self) -> Result<SpdeConfig> {
        let s = &self.spde;
        let cfg = SpdeConfig::new(s.mass, s.horizon, s.slices, s.n_modes, s.nx)
            .map_err(|e| Error::config("spde", e.to_string()))?;
        cfg.with_space(self.space()?)
            .map_err(|e| Error::config("spde", e.to_string()))
    }

    /// Re-validates every module invariant reachable from the config.
    pub fn validate(&self) -> Result<()> {
        let band = self.band()?;
        let s = &self.scenario;
        positive("scenario.horizon", s.horizon)?;
        at_least("scenario.slices", s.slices, 1)?;
        for &v in &s.interior {
            if !(v > band.lo() && v < band.hi()) {
                return Err(Error::config(
                    "scenario.interior",
                    format!("level {v} is not strictly inside the band"),
                ));
            }
        }
        let levels = 2 + s.interior.len();
        scenario_count("scenario.slices", levels, s.slices)?;
        at_least("scenario.n_paths", s.n_paths, 2)?;
        at_least("scenario.compatibility_trials", s.compatibility_trials, 1)?;
        at_least("scenario.chebyshev_pairs", s.chebyshev_pairs, 1)?;
        at_least("scenario.chebyshev_paths", s.chebyshev_paths, 2)?;

        if self.gheat.nx < 5 {
            return Err(Error::config("gheat.nx", format!("must be at least 5, got {}", self.gheat.nx)));
        }
        at_most("gheat.nx", self.gheat.nx, MAX_GRID)?;
        at_least("gheat.nx_2d", self.gheat.nx_2d, 5)?;
        at_most("gheat.nx_2d", self.gheat.nx_2d, MAX_GRID_2D)?;
        self.pde_grid()?;

        at_most("gfield.n_quad", self.gfield.n_quad, MAX_GRID)?;
        let space = self.space()?;
        let g = &self.gfield;
        at_least("gfield.expansion_modes", g.expansion_modes, 1)?;
        let limit = Basis::FullTrig.band_limit(&space);
        if g.expansion_modes > limit {
            return Err(Error::config(
                "gfield.expansion_modes",
                format!("exceeds the band limit {limit} of gfield.n_quad"),
            ));
        }
        at_least("gfield.union_families", g.union_families, 1)?;
        at_least("gfield.union_trials", g.union_trials, 1)?;
        at_least("gfield.union_paths", g.union_paths, 2)?;

        let n = &self.noise;
        positive("noise.horizon", n.horizon)?;
        at_least("noise.slices", n.slices, 1)?;
        scenario_count("noise.slices", 2, n.slices)?;
        let cos_limit = Basis::Cosine.band_limit(&space);
        for (f, v) in [("noise.n_modes", n.n_modes), ("noise.idgbm_modes", n.idgbm_modes)] {
            at_least(f, v, 1)?;
            if v > cos_limit {
                return Err(Error::config(f, format!("exceeds the cosine band limit {cos_limit}")));
            }
        }
        at_least("noise.isometry_integrands", n.isometry_integrands, 1)?;
        at_least("noise.isometry_paths", n.isometry_paths, 2)?;
        positive("noise.idgbm_horizon", n.idgbm_horizon)?;
        at_least("noise.idgbm_paths", n.idgbm_paths, 2)?;

        let p = &self.spde;
        at_most("spde.nx", p.nx, MAX_SPDE_NX)?;
        at_most("spde.slices", p.slices, MAX_GRID)?;
        if let Some(&f) = p.refinements.iter().max() {
            if p.slices.checked_mul(f).is_none_or(|n| n > MAX_GRID) {
                return Err(Error::config("spde.refinements", format!("refined partitions exceed {MAX_GRID} slices")));
            }
        }
        if p.ou_slices.checked_mul(p.ou_refine).is_none_or(|n| n > MAX_GRID) {
            return Err(Error::config("spde.ou_refine", format!("the covariance partition exceeds {MAX_GRID} slices")));
        }
        self.spde_config()?;
        if p.psi.is_empty() || p.psi.len() > cos_limit || p.psi.iter().any(|c| !c.is_finite()) {
            return Err(Error::config(
                "spde.psi",
                format!("needs 1..={cos_limit} finite cosine coefficients"),
            ));
        }
        if p.refinements.first() != Some(&1)
            || p.refinements.len() < 2
            || p.refinements.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config(
                "spde.refinements",
                "must start at 1 and increase strictly, with at least two levels",
            ));
        }
        if !(p.switch_time > 0.0 && p.switch_time < p.horizon) {
            return Err(Error::config("spde.switch_time", "must lie strictly inside (0, spde.horizon)"));
        }
        let grid = uniform_grid(p.horizon, p.slices).map_err(|e| Error::config("spde.slices", e.to_string()))?;
        let tol = 1e-12 * p.horizon;
        if !grid.iter().any(|&t| (t - p.switch_time).abs() <= tol) {
            return Err(Error::config("spde.switch_time", "must be a point of the spde partition"));
        }
        for (f, modes) in [("spde.ou_modes", &p.ou_modes), ("spde.contraction_modes", &p.contraction_modes)] {
            if modes.is_empty() {
                return Err(Error::config(f, "must name at least one mode"));
            }
            if let Some(&m) = modes.iter().find(|&&m| m >= cos_limit) {
                return Err(Error::config(f, format!("mode {m} exceeds the cosine band limit {cos_limit}")));
            }
        }
        at_least("spde.ou_slices", p.ou_slices, 1)?;
        scenario_count("spde.ou_slices", 2, p.ou_slices)?;
        at_least("spde.ou_refine", p.ou_refine, 1)?;
        at_least("spde.ou_paths", p.ou_paths, 2)?;
        at_least("spde.moment_paths", p.moment_paths, 2)?;
        at_least("spde.contraction_paths", p.contraction_paths, 1)?;

        let t = &self.tolerances;
        for (f, v) in [
            ("tolerances.moment_low_order", t.moment_low_order),
            ("tolerances.moment_high_order", t.moment_high_order),
            ("tolerances.engine_n_se", t.engine_n_se),
            ("tolerances.engine_rel", t.engine_rel),
            ("tolerances.compatibility", t.compatibility),
            ("tolerances.covariance", t.covariance),
            ("tolerances.expansion_oracle", t.expansion_oracle),
            ("tolerances.union_g", t.union_g),
            ("tolerances.union_n_se", t.union_n_se),
            ("tolerances.isometry_n_se", t.isometry_n_se),
            ("tolerances.chebyshev_n_se", t.chebyshev_n_se),
            ("tolerances.idgbm_n_se", t.idgbm_n_se),
            ("tolerances.kernel_mass", t.kernel_mass),
            ("tolerances.kernel_duality", t.kernel_duality),
            ("tolerances.coupling", t.coupling),
            ("tolerances.coupling_order_min", t.coupling_order_min),
            ("tolerances.coupling_order_max", t.coupling_order_max),
            ("tolerances.ou_n_se", t.ou_n_se),
            ("tolerances.ou_classical_n_se", t.ou_classical_n_se),
            ("tolerances.weak_residual", t.weak_residual),
            ("tolerances.second_moment_n_se", t.second_moment_n_se),
            ("tolerances.contraction", t.contraction),
        ] {
            positive(f, v)?;
        }
        if t.coupling_order_min > t.coupling_order_max {
            return Err(Error::config(
                "tolerances.coupling_order_min",
                "exceeds tolerances.coupling_order_max",
            ));
        }
        at_least("tolerances.contraction_max_iter", t.contraction_max_iter, 1)?;
        Ok(())
    }
}

/// Dotted key path of a TOML error, when its span can be located.
fn toml_field(e: &toml::de::Error) -> String {
    let msg = e.message();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return rest[..end].to_string();
        }
    }
    "toml".into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(RunConfig::from_json_str(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(RunConfig::from_toml_str("").unwrap(), cfg);
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg = RunConfig::from_toml_str("seed = 5\n[spde]\nnx = 64\n").unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.spde.nx, 64);
        assert_eq!(cfg.spde.n_modes, 64);
        assert_eq!(cfg.tolerances.coupling, 1e-2);
    }

    #[test]
    fn oversized_grids_rejected() {
        for (text, field) in [
            ("[spde]\nslices = 100000000000\n", "spde.slices"),
            ("[spde]\nrefinements = [1, 1000000]\n", "spde.refinements"),
            ("[spde]\nnx = 1000000\n", "spde.nx"),
            ("[gheat]\nnx = 100000000\n", "gheat.nx"),
            ("[gfield]\nn_quad = 100000000\n", "gfield.n_quad"),
            ("[spde]\nou_refine = 18446744073709551615\n", "spde.ou_refine"),
        ] {
            let err = RunConfig::from_toml_str(text).and_then(|c| c.validate()).unwrap_err();
            assert!(err.to_string().contains(field), "{text}: {err}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_toml_str("[scenario]\nsigma_low = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("sigma_low"), "{err}");
        assert!(RunConfig::from_toml_str("[extra]\n").is_err());
        assert!(RunConfig::from_json_str(r#"{"sead": 1}"#).is_err());
    }

    #[test]
    fn inverted_band_names_the_field() {
        let err = RunConfig::from_toml_str("[scenario]\nsigma_lo2 = 5.0\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "scenario.sigma_lo2"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn cfl_violation_names_dt() {
        let err = RunConfig::from_toml_str("[gheat]\nnx = 101\ndt = 0.1\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "gheat.dt"),
            e => panic!("{e}"),
        }
        let ok = RunConfig::from_toml_str("[gheat]\nnx = 101\ndt = 0.001\n").unwrap();
        assert_eq!(ok.pde_grid().unwrap().dt, 0.001);
    }

    #[test]
    fn narrow_grid_rejected() {
        let err = RunConfig::from_toml_str("[gheat]\nhalf_width = 3.0\n").unwrap_err();
        assert!(err.to_string().contains("gheat.half_width"));
        let cfg = RunConfig::from_toml_str("[gheat]\nhalf_width = 15.0\n").unwrap();
        let g = cfg.pde_grid().unwrap();
        assert_eq!(g.half_width, 15.0);
        assert!(g.dt <= g.dx() * g.dx() / 4.0);
    }

    #[test]
    fn spde_fields_checked() {
        for (text, field) in [
            ("[spde]\nmass = 0.0\n", "spde"),
            ("[spde]\nrefinements = [2, 4]\n", "spde.refinements"),
            ("[spde]\nswitch_time = 0.2\n", "spde.switch_time"),
            ("[spde]\nou_modes = [500]\n", "spde.ou_modes"),
            ("[noise]\nslices = 40\n", "noise.slices"),
            ("[tolerances]\ncoupling = -1.0\n", "tolerances.coupling"),
        ] {
            match RunConfig::from_toml_str(text).unwrap_err() {
                Error::Config { field: f, .. } => assert_eq!(f, field, "{text}"),
                e => panic!("{text}: {e}"),
            }
        }
    }
}
