//! Portable text format for noise realizations.
//!
//! A realization is a CSV file with header `slice,mode,increment` and a
//! side-car `key=value` metadata file. Floats are written with 17
//! significant digits, which round-trips every `f64` exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{NoiseLayout, NoiseRealization, TimePartition};
use crate::error::{Error, Result};
use crate::hilbert::{Basis, MeasureSpace};
use crate::scenario::{ScenarioPath, VolBand};

pub const CSV_HEADER: &str = "slice,mode,increment";
pub const FORMAT_TAG: &str = "gfield-noise-1";
/// Largest increment table accepted by the parser.
pub const MAX_ENTRIES: usize = 1 << 24;

const META_KEYS: [&str; 11] = [
    "format",
    "seed",
    "space_length",
    "n_quad",
    "basis",
    "n_modes",
    "sigma_lo2",
    "sigma_hi2",
    "partition",
    "scenario_times",
    "scenario_values",
];

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

pub fn basis_name(b: Basis) -> String {
    match b {
        Basis::Cosine => "cosine".into(),
        Basis::FullTrig => "full-trig".into(),
        Basis::IndicatorPartition { cells } => format!("indicator-partition:{cells}"),
    }
}

pub fn parse_basis(s: &str) -> Result<Basis> {
    match s {
        "cosine" => Ok(Basis::Cosine),
        "full-trig" => Ok(Basis::FullTrig),
        _ => match s.strip_prefix("indicator-partition:") {
            Some(n) => {
                let cells: usize = n
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad cell count `{n}`")))?;
                if cells == 0 {
                    return Err(Error::invalid("cell count must be positive"));
                }
                Ok(Basis::IndicatorPartition { cells })
            }
            None => Err(Error::invalid(format!("unknown basis `{s}`"))),
        },
    }
}

/// The increment table.
pub fn format_csv(noise: &NoiseRealization) -> String {
    let mut out = String::with_capacity(32 * noise.increments().len() + 32);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for j in 0..noise.n_slices() {
        for n in 0..noise.n_modes() {
            let _ = writeln!(out, "{j},{n},{}", fmt_f64(noise.increment(j, n)));
        }
    }
    out
}

/// The side-car metadata.
pub fn format_meta(noise: &NoiseRealization) -> String {
    let l = noise.layout();
    let sc = noise.scenario();
    let mut out = String::new();
    let _ = writeln!(out, "format={FORMAT_TAG}");
    let _ = writeln!(out, "seed={}", noise.seed());
    let _ = writeln!(out, "space_length={}", fmt_f64(l.space.length()));
    let _ = writeln!(out, "n_quad={}", l.space.n_quad());
    let _ = writeln!(out, "basis={}", basis_name(l.basis));
    let _ = writeln!(out, "n_modes={}", l.n_modes);
    let _ = writeln!(out, "sigma_lo2={}", fmt_f64(sc.band().lo()));
    let _ = writeln!(out, "sigma_hi2={}", fmt_f64(sc.band().hi()));
    let _ = writeln!(out, "partition={}", fmt_list(l.partition.times()));
    let _ = writeln!(out, "scenario_times={}", fmt_list(sc.times()));
    let _ = writeln!(out, "scenario_values={}", fmt_list(sc.values()));
    out
}

fn parse_meta(meta: &str) -> Result<BTreeMap<&str, &str>> {
    let mut map = BTreeMap::new();
    for (i, raw) in meta.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, "expected key=value"))?;
        let k = k.trim();
        if !META_KEYS.contains(&k) {
            return Err(Error::parse(i + 1, format!("unknown key `{k}`")));
        }
        if map.insert(k, v.trim()).is_some() {
            return Err(Error::parse(i + 1, format!("duplicate key `{k}`")));
        }
    }
    for k in META_KEYS {
        if !map.contains_key(k) {
            return Err(Error::parse(0, format!("missing key `{k}`")));
        }
    }
    if map["format"] != FORMAT_TAG {
        return Err(Error::parse(0, format!("unsupported format `{}`", map["format"])));
    }
    Ok(map)
}

fn num<T: std::str::FromStr>(map: &BTreeMap<&str, &str>, k: &str) -> Result<T> {
    map[k]
        .parse()
        .map_err(|_| Error::parse(0, format!("`{k}` is not a valid number")))
}

fn list(map: &BTreeMap<&str, &str>, k: &str) -> Result<Vec<f64>> {
    map[k]
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(0, format!("`{k}` holds a bad number `{s}`")))
        })
        .collect()
}

/// Parses a realization from its CSV and metadata texts.
pub fn parse_bundle(csv: &str, meta: &str) -> Result<NoiseRealization> {
    let map = parse_meta(meta)?;
    let seed: u64 = num(&map, "seed")?;
    let space = MeasureSpace::new(num(&map, "space_length")?, num(&map, "n_quad")?)?;
    let basis = parse_basis(map["basis"])?;
    let n_modes: usize = num(&map, "n_modes")?;
    let band = VolBand::new(num(&map, "sigma_lo2")?, num(&map, "sigma_hi2")?)?;
    let partition = TimePartition::new(list(&map, "partition")?)?;
    let scenario = ScenarioPath::new(band, list(&map, "scenario_times")?, list(&map, "scenario_values")?)?;
    let layout = Arc::new(NoiseLayout::new(partition, space, basis, n_modes)?);

    let m = layout.partition.n_slices();
    let total = m
        .checked_mul(n_modes)
        .filter(|&t| t <= MAX_ENTRIES)
        .ok_or_else(|| Error::parse(0, "increment table too large"))?;
    let mut lines = csv.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == CSV_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{CSV_HEADER}`"))),
    }
    let rows = csv.lines().skip(1).filter(|l| !l.trim().is_empty()).count();
    if rows != total {
        return Err(Error::parse(0, format!("expected {total} rows, found {rows}")));
    }
    let mut increments = vec![f64::NAN; total];
    let mut seen = vec![false; total];
    for (i, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let (Some(js), Some(ns), Some(vs), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(Error::parse(i + 1, "expected three fields"));
        };
        let j: usize = js.trim().parse().map_err(|_| Error::parse(i + 1, "bad slice index"))?;
        let n: usize = ns.trim().parse().map_err(|_| Error::parse(i + 1, "bad mode index"))?;
        let v: f64 = vs.trim().parse().map_err(|_| Error::parse(i + 1, "bad increment"))?;
        if j >= m || n >= n_modes {
            return Err(Error::parse(i + 1, format!("index ({j}, {n}) out of range")));
        }
        let k = j * n_modes + n;
        if seen[k] {
            return Err(Error::parse(i + 1, format!("duplicate entry ({j}, {n})")));
        }
        seen[k] = true;
        increments[k] = v;
    }
    NoiseRealization::from_parts(layout, scenario, seed, increments)
}

/// Writes `<stem>.csv` and `<stem>.meta` into `dir`.
pub fn write_bundle(noise: &NoiseRealization, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{stem}.csv")), format_csv(noise))?;
    std::fs::write(dir.join(format!("{stem}.meta")), format_meta(noise))?;
    Ok(())
}

/// Reads a bundle written by [`write_bundle`].
pub fn read_bundle(dir: &Path, stem: &str) -> Result<NoiseRealization> {
    let csv = std::fs::read_to_string(dir.join(format!("{stem}.csv")))?;
    let meta = std::fs::read_to_string(dir.join(format!("{stem}.meta")))?;
    parse_bundle(&csv, &meta)
}

#[cfg(test)]
mod tests {
    use super::super::sample_noise;
    use super::*;

    fn noise() -> NoiseRealization {
        let lay = Arc::new(
            NoiseLayout::new(
                TimePartition::uniform(0.5, 4).unwrap(),
                MeasureSpace::default(),
                Basis::Cosine,
                5,
            )
            .unwrap(),
        );
        let band = VolBand::new(1.0, 4.0).unwrap();
        let sc = ScenarioPath::new(band, vec![0.0, 0.25, 0.5], vec![4.0, 1.0]).unwrap();
        sample_noise(lay, &sc, 99).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let w = noise();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&w, dir.path(), "w").unwrap();
        let back = read_bundle(dir.path(), "w").unwrap();
        assert_eq!(back, w);
        assert_eq!(format_csv(&back), format_csv(&w));
    }

    #[test]
    fn seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn malformed_inputs() {
        let w = noise();
        let csv = format_csv(&w);
        let meta = format_meta(&w);
        assert!(parse_bundle(&csv.replace("slice,mode", "a,b"), &meta).is_err());
        assert!(parse_bundle(&csv, &meta.replace("n_modes=5", "n_modes=6")).is_err());
        assert!(parse_bundle(&csv, &format!("{meta}extra=1\n")).is_err());
        assert!(parse_bundle(&csv, &format!("{meta}seed=1\n")).is_err());
        let dup = csv.replacen("0,1,", "0,0,", 1);
        assert!(matches!(parse_bundle(&dup, &meta), Err(Error::Parse { .. })));
        let huge = meta.replace("n_modes=5", "n_modes=100000000000");
        assert!(parse_bundle(&csv, &huge).is_err());
        assert!(parse_bundle("", "").is_err());
        assert!(parse_basis("indicator-partition:0").is_err());
        assert_eq!(parse_basis("indicator-partition:8").unwrap(), Basis::IndicatorPartition { cells: 8 });
    }
}
