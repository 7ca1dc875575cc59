//! Verification report rows and their CSV and JSON renderings.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::noise::io::fmt_f64;

/// Number of acceptance criteria; every report lists each id once.
pub const CRITERIA: usize = 15;

pub const CSV_HEADER: &str = "id,name,anchor,status,measured,target,tolerance,detail";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Not part of the selected suite.
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

/// One acceptance criterion.
///
/// `measured` is compared with `target`: either `|measured - target| <=
/// tolerance`, or an inequality with the slack stated in `detail`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub id: usize,
    pub name: String,
    /// The mathematical statement the check exercises.
    pub anchor: String,
    pub status: Status,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl ReportRow {
    pub fn pass(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn skipped(id: usize, name: &str, anchor: &str) -> Self {
        Self {
            id,
            name: name.into(),
            anchor: anchor.into(),
            status: Status::Skipped,
            measured: f64::NAN,
            target: f64::NAN,
            tolerance: f64::NAN,
            detail: "not in the selected suite".into(),
        }
    }

    /// One summary line, `PASS [id] name: detail`.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        format!(
            "{tag} [{:02}] {}: measured {} target {} tol {} ({})",
            self.id,
            self.name,
            fmt_f64(self.measured),
            fmt_f64(self.target),
            fmt_f64(self.tolerance),
            self.detail
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header plus one row per criterion, `\n` line endings.
pub fn format_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.id,
            csv_field(&r.name),
            csv_field(&r.anchor),
            r.status.as_str(),
            fmt_f64(r.measured),
            fmt_f64(r.target),
            fmt_f64(r.tolerance),
            csv_field(&r.detail)
        );
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    id: usize,
    name: &'a str,
    anchor: &'a str,
    status: Status,
    pass: bool,
    measured: String,
    target: String,
    tolerance: String,
    detail: &'a str,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    suite: &'a str,
    seed: u64,
    pass: bool,
    rows: Vec<JsonRow<'a>>,
}

/// JSON report; floats are strings at 17 significant digits so that
/// non-finite values survive and bytes are stable.
pub fn format_json(suite: &str, seed: u64, rows: &[ReportRow]) -> String {
    let rep = JsonReport {
        suite,
        seed,
        pass: rows.iter().all(ReportRow::pass),
        rows: rows
            .iter()
            .map(|r| JsonRow {
                id: r.id,
                name: &r.name,
                anchor: &r.anchor,
                status: r.status,
                pass: r.pass(),
                measured: fmt_f64(r.measured),
                target: fmt_f64(r.target),
                tolerance: fmt_f64(r.tolerance),
                detail: &r.detail,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&rep).expect("report serializes");
    s.push('\n');
    s
}

/// Writes `report.csv` and `report.json` into `dir`.
pub fn write_reports(dir: &Path, suite: &str, seed: u64, rows: &[ReportRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.csv"), format_csv(rows))?;
    std::fs::write(dir.join("report.json"), format_json(suite, seed, rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: usize, status: Status) -> ReportRow {
        ReportRow {
            id,
            name: "check".into(),
            anchor: "a, b".into(),
            status,
            measured: 0.5,
            target: 1.0,
            tolerance: 1e-2,
            detail: "say \"hi\"".into(),
        }
    }

    #[test]
    fn csv_quotes_and_layout() {
        let csv = format_csv(&[row(1, Status::Pass), row(2, Status::Fail)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("1,check,\"a, b\",pass,5.0000000000000000e-1,"));
        assert!(lines[1].ends_with(",\"say \"\"hi\"\"\""));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn json_reports_overall_status() {
        let j = format_json("all", 3, &[row(1, Status::Pass), row(2, Status::Skipped)]);
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["pass"], true);
        assert_eq!(v["rows"][1]["status"], "skipped");
        let j = format_json("all", 3, &[row(1, Status::Fail)]);
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["pass"], false);
        let s = ReportRow::skipped(4, "x", "y");
        assert!(s.pass());
        assert!(s.line().starts_with("SKIP [04]"));
    }
}
