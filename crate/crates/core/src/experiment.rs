//! Named experiments producing CSV tables and SVG plots.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::expansion_surrogate;
use crate::gheat::{gnormal_abs_moment, solve_gheat_1d, PayoffSpec, Side};
use crate::hilbert::{Basis, L2Element};
use crate::noise::io::fmt_f64;
use crate::noise::{sample_noise, NoiseLayout};
use crate::scenario::{enumerate_scenarios, uniform_grid, ScenarioPath};
use crate::seeding::path_seed;
use crate::spde::{ou_cov_grid, GOUMode, SpectralSolver};
use crate::stats::mean_se;
use crate::svg::{heat_plot, line_plot};
use crate::verify::coupling_sweep;

pub const EXPERIMENTS: [&str; 6] = ["moments", "expansion", "isometry", "ou", "spde-couple", "field-snapshot"];

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

impl Artifact {
    fn new(file_name: impl Into<String>, contents: String) -> Self {
        Self {
            file_name: file_name.into(),
            contents,
        }
    }
}

/// Runs experiment `name`; the outputs depend only on the configuration.
pub fn run_experiment(name: &str, cfg: &RunConfig, svg: bool) -> Result<Vec<Artifact>> {
    cfg.validate()?;
    let mut out = match name {
        "moments" => moments(cfg)?,
        "expansion" => expansion(cfg)?,
        "isometry" => isometry(cfg)?,
        "ou" => ou(cfg)?,
        "spde-couple" => spde_couple(cfg)?,
        "field-snapshot" => field_snapshot(cfg)?,
        _ => {
            return Err(Error::invalid(format!(
                "unknown experiment `{name}`; expected one of {}",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    if !svg {
        out.retain(|a| !a.file_name.ends_with(".svg"));
    }
    Ok(out)
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.file_name), &a.contents)?;
    }
    Ok(())
}

fn experiment_seed(master: u64, name: &str) -> u64 {
    let index = EXPERIMENTS.iter().position(|&e| e == name).expect("known experiment");
    path_seed(master, (1u64 << 41) + index as u64)
}

const ABS_POWERS: [fn(f64) -> f64; 4] = [|x| x.abs(), |x| x * x, |x| x.abs().powi(3), |x| x.powi(4)];

fn moments(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let band = cfg.band()?;
    let t = cfg.scenario.horizon;
    let grid = cfg.pde_grid()?;
    let mut csv = String::from("k,pde_upper,exact_upper,error_upper,pde_lower,exact_lower,error_lower\n");
    let mut errs = (Vec::new(), Vec::new());
    for k in 1..=4u32 {
        let f = ABS_POWERS[k as usize - 1];
        let upper = solve_gheat_1d(band, &PayoffSpec::new(f, k), t, &grid)?;
        let lower = -solve_gheat_1d(band, &PayoffSpec::new(move |x: f64| -f(x), k), t, &grid)?;
        let eu = gnormal_abs_moment(band, t.sqrt(), k, Side::Upper)?;
        let el = gnormal_abs_moment(band, t.sqrt(), k, Side::Lower)?;
        let _ = writeln!(
            csv,
            "{k},{},{},{},{},{},{}",
            fmt_f64(upper),
            fmt_f64(eu),
            fmt_f64((upper - eu).abs()),
            fmt_f64(lower),
            fmt_f64(el),
            fmt_f64((lower - el).abs())
        );
        errs.0.push((k as f64, (upper - eu).abs()));
        errs.1.push((k as f64, (lower - el).abs()));
    }
    let svg = line_plot(
        "PDE oracle error of the absolute moments",
        "k",
        "abs error",
        &[("upper".into(), errs.0), ("lower".into(), errs.1)],
    );
    Ok(vec![Artifact::new("moments.csv", csv), Artifact::new("moments.svg", svg)])
}

fn expansion(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let band = cfg.band()?;
    let space = cfg.space()?;
    let basis = Basis::FullTrig;
    let h = L2Element::from_fn(space, |x| x)?;
    let limit = basis.band_limit(&space);
    let rows = (1..=limit)
        .into_par_iter()
        .map(|n| expansion_surrogate(&h, basis, n, band))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("n,projected_norm_sq,norm_sq,defect\n");
    for (i, s) in rows.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            i + 1,
            fmt_f64(s.projected_norm_sq),
            fmt_f64(s.norm_sq),
            fmt_f64(s.defect)
        );
    }
    let pts = rows.iter().enumerate().map(|(i, s)| ((i + 1) as f64, s.defect)).collect();
    let svg = line_plot("Parseval defect of the expansion of h(x) = x", "modes", "defect", &[("defect".into(), pts)]);
    Ok(vec![Artifact::new("expansion.csv", csv), Artifact::new("expansion.svg", svg)])
}

fn isometry(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let band = cfg.band()?;
    let nc = &cfg.noise;
    let partition = cfg.noise_partition()?;
    let layout = Arc::new(NoiseLayout::new(partition.clone(), cfg.space()?, Basis::Cosine, nc.n_modes)?);
    let scenarios = enumerate_scenarios(band, partition.times(), &[])?;
    let seed = experiment_seed(cfg.seed, "isometry");
    // f_j = e_0 + 0.5 e_1 - 0.3 e_2 on every slice.
    let mut c = vec![0.0; nc.n_modes];
    for (v, w) in c.iter_mut().zip([1.0, 0.5, -0.3]) {
        *v = w;
    }
    let m = partition.n_slices();
    let c_sq: f64 = c.iter().map(|x| x * x).sum();
    let norm: f64 = (0..m).map(|j| partition.dt(j) * c_sq).sum();
    let mut csv = String::from("scenario,estimate,std_error,classical,lower,upper\n");
    let mut est = Vec::new();
    for (s, sc) in scenarios.iter().enumerate() {
        let sq: Vec<f64> = (0..nc.isometry_paths)
            .into_par_iter()
            .map(|i| {
                let w = sample_noise(layout.clone(), sc, path_seed(seed, i as u64))?;
                let v: f64 = (0..m).map(|j| w.eval_coeffs(&c, j)).sum();
                Ok(v * v)
            })
            .collect::<Result<_>>()?;
        let (mean, se) = mean_se(&sq);
        let thetas = layout.slice_thetas(sc)?;
        let classical: f64 = (0..m).map(|j| thetas[j] * partition.dt(j) * c_sq).sum();
        let _ = writeln!(
            csv,
            "{s},{},{},{},{},{}",
            fmt_f64(mean),
            fmt_f64(se),
            fmt_f64(classical),
            fmt_f64(band.lo() * norm),
            fmt_f64(band.hi() * norm)
        );
        est.push((s as f64, mean, classical));
    }
    let svg = line_plot(
        "Second moment of the stochastic integral per scenario",
        "scenario",
        "E[I^2]",
        &[
            ("Monte Carlo".into(), est.iter().map(|e| (e.0, e.1)).collect()),
            ("classical".into(), est.iter().map(|e| (e.0, e.2)).collect()),
            ("lower".into(), est.iter().map(|e| (e.0, band.lo() * norm)).collect()),
            ("upper".into(), est.iter().map(|e| (e.0, band.hi() * norm)).collect()),
        ],
    );
    Ok(vec![Artifact::new("isometry.csv", csv), Artifact::new("isometry.svg", svg)])
}

fn ou(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let band = cfg.band()?;
    let p = &cfg.spde;
    let partition = crate::noise::TimePartition::uniform(p.horizon, p.ou_slices * p.ou_refine)?;
    let coarse = uniform_grid(p.horizon, p.ou_slices)?;
    let scenarios = enumerate_scenarios(band, &coarse, &[])?;
    let grid = &coarse[1..];
    let pairs: Vec<(f64, f64)> = grid.iter().flat_map(|&s| grid.iter().map(move |&t| (s, t))).collect();
    let seed = experiment_seed(cfg.seed, "ou");
    let mut csv = String::from("n,s,t,estimate,std_error,bound,argmax_scenario,mean_max_z\n");
    let mut series = Vec::new();
    for &n in &p.ou_modes {
        let mode = GOUMode::new(n, p.mass, p.psi.get(n).copied().unwrap_or(0.0))?;
        let reports = ou_cov_grid(&mode, &partition, &pairs, &scenarios, p.ou_paths, path_seed(seed, n as u64))?;
        let mut diag = Vec::new();
        for r in &reports {
            let _ = writeln!(
                csv,
                "{n},{},{},{},{},{},{},{}",
                fmt_f64(r.s),
                fmt_f64(r.t),
                fmt_f64(r.estimate),
                fmt_f64(r.std_error),
                fmt_f64(r.bound),
                r.argmax_index,
                fmt_f64(r.mean_max_z)
            );
            if r.s == r.t {
                diag.push((r.t, r.estimate, r.bound));
            }
        }
        series.push((format!("mode {n}"), diag.iter().map(|d| (d.0, d.1)).collect()));
        series.push((format!("bound {n}"), diag.iter().map(|d| (d.0, d.2)).collect()));
    }
    let svg = line_plot("Scenario-sup variance of the G-OU modes", "t", "variance", &series);
    Ok(vec![Artifact::new("ou.csv", csv), Artifact::new("ou.svg", svg)])
}

fn spde_couple(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let sweep = coupling_sweep(cfg)?;
    let mut csv = String::from("factor,dt,rel_sup_diff\n");
    for (&f, &(dt, d)) in cfg.spde.refinements.iter().zip(&sweep) {
        let _ = writeln!(csv, "{f},{},{}", fmt_f64(dt), fmt_f64(d));
    }
    let svg = line_plot(
        "Mild vs spectral relative sup difference",
        "dt",
        "difference",
        &[("one path".into(), sweep)],
    );
    Ok(vec![Artifact::new("spde-couple.csv", csv), Artifact::new("spde-couple.svg", svg)])
}

fn field_snapshot(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let band = cfg.band()?;
    let p = &cfg.spde;
    let spde = cfg.spde_config()?;
    let psi = L2Element::from_coeffs(cfg.space()?, Basis::Cosine, p.psi.clone())?;
    let sc = ScenarioPath::new(band, vec![0.0, p.switch_time, p.horizon], vec![band.hi(), band.lo()])?;
    let noise = sample_noise(Arc::new(spde.layout()?), &sc, experiment_seed(cfg.seed, "field-snapshot"))?;
    let path = SpectralSolver::new(&psi, &spde)?.solve(&noise)?;
    let svg = heat_plot("Spectral solution, one path", &path.times, &path.xs, &path.values)?;
    let mut out = vec![Artifact::new("field-snapshot.csv", path.snapshot_csv())];
    if let Some(modes) = path.mode_table_csv() {
        out.push(Artifact::new("field-modes.csv", modes));
    }
    out.push(Artifact::new("field-snapshot.svg", svg));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svg::parse_plot_csv;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.gheat.nx = 301;
        c.noise.isometry_paths = 50;
        c.spde.ou_paths = 50;
        c.spde.ou_refine = 2;
        c.spde.refinements = vec![1, 2];
        c.spde.slices = 16;
        c.spde.nx = 32;
        c.spde.n_modes = 16;
        c
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(run_experiment("nope", &RunConfig::default(), false).is_err());
    }

    #[test]
    fn every_experiment_emits_parseable_csv_deterministically() {
        let cfg = small();
        for name in EXPERIMENTS {
            let a = run_experiment(name, &cfg, true).unwrap();
            assert!(a.iter().any(|f| f.file_name.ends_with(".csv")), "{name}");
            for f in a.iter().filter(|f| f.file_name.ends_with(".csv")) {
                parse_plot_csv(&f.contents).unwrap_or_else(|e| panic!("{name}/{}: {e}", f.file_name));
                assert!(!f.contents.contains('\r'));
            }
            assert_eq!(a, run_experiment(name, &cfg, true).unwrap(), "{name}");
            assert!(run_experiment(name, &cfg, false).unwrap().iter().all(|f| !f.file_name.ends_with(".svg")));
        }
    }

    #[test]
    fn moments_table_matches_closed_forms() {
        let a = run_experiment("moments", &RunConfig::default(), false).unwrap();
        let lines: Vec<&str> = a[0].contents.lines().collect();
        assert_eq!(lines.len(), 5);
        for l in &lines[1..] {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            assert!(f[3] < 5e-2 && f[6] < 5e-2, "{l}");
        }
    }
}
