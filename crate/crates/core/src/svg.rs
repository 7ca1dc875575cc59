//! Standalone SVG 1.1 line and heat plots, and the CSV tables they are
//! drawn from.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];
/// Longest accepted table, in data rows.
pub const MAX_ROWS: usize = 1 << 22;

/// A numeric CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `t,x,value` snapshots are drawn as heat maps.
    pub fn is_field(&self) -> bool {
        self.columns == ["t", "x", "value"]
    }
}

/// Parses a header plus numeric rows. Blank lines are skipped; every row
/// must have as many fields as the header. `nan`/`inf` are accepted.
pub fn parse_plot_csv(text: &str) -> Result<PlotTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty table"))?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    if columns.len() < 2 {
        return Err(Error::parse(1, "need at least two columns"));
    }
    if let Some(c) = columns.iter().find(|c| c.is_empty() || c.contains(['<', '>', '&', '"'])) {
        return Err(Error::parse(1, format!("bad column name `{c}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if rows.len() == MAX_ROWS {
            return Err(Error::parse(i + 1, format!("more than {MAX_ROWS} rows")));
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, format!("`{}` is not a number", f.trim())))
            })
            .collect::<Result<_>>()?;
        if row.len() != columns.len() {
            return Err(Error::parse(
                i + 1,
                format!("expected {} fields, found {}", columns.len(), row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "no data rows"));
    }
    Ok(PlotTable { columns, rows })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

fn tick(x: f64) -> String {
    if x == 0.0 || (1e-3..1e4).contains(&x.abs()) {
        let s = format!("{x:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.into() }
    } else {
        format!("{x:.2e}")
    }
}

/// Finite `[lo, hi]` with a nonzero span.
fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo > 1e-300 && (hi - lo).is_finite() {
        Some((lo, hi))
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs().min(1e300) };
        Some((lo - pad, hi + pad))
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        num((WIDTH - RIGHT + LEFT) / 2.0),
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(x0),
        num(y1),
        num(x1 - x0),
        num(y0 - y1)
    );
    for i in 0..=4 {
        let u = i as f64 / 4.0;
        let xv = f.x.0 + u * (f.x.1 - f.x.0);
        let yv = f.y.0 + u * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
            num(px),
            num(y0),
            num(y0 + 5.0),
            num(y0 + 18.0),
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"#,
            num(x0 - 5.0),
            num(py),
            num(x0),
            num(x0 - 8.0),
            num(py + 4.0),
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num((x0 + x1) / 2.0),
        num(HEIGHT - 12.0),
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        num((y0 + y1) / 2.0),
        escape(y_label)
    );
}

/// Named series of `(x, y)` points; non-finite points break the line.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts = || series.iter().flat_map(|(_, p)| p.iter());
    let fx = range(pts().filter(|p| p.1.is_finite()).map(|p| p.0)).unwrap_or((0.0, 1.0));
    let fy = range(pts().filter(|p| p.0.is_finite()).map(|p| p.1)).unwrap_or((0.0, 1.0));
    let f = Frame { x: fx, y: fy };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, x_label, y_label);
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for &(x, y) in points {
            if !(x.is_finite() && y.is_finite()) {
                pen_up = true;
                continue;
            }
            let _ = write!(d, "{}{} {} ", if pen_up { "M" } else { "L" }, num(f.px(x)), num(f.py(y)));
            pen_up = false;
        }
        if !d.is_empty() {
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                d.trim_end()
            );
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}">{5}</text>"#,
            num(lx),
            num(ly),
            num(lx + 18.0),
            num(lx + 24.0),
            num(ly + 4.0),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Blue-white-red map of `u` in `[0, 1]`.
fn color(u: f64) -> String {
    let u = if u.is_finite() { u.clamp(0.0, 1.0) } else { 0.5 };
    let (r, g, b) = if u < 0.5 {
        let s = u / 0.5;
        (s, s, 1.0)
    } else {
        let s = (1.0 - u) / 0.5;
        (1.0, s, s)
    };
    format!("#{:02x}{:02x}{:02x}", (255.0 * r) as u8, (255.0 * g) as u8, (255.0 * b) as u8)
}

/// Heat map of `values[j][k]` over time `times[j]` (horizontal) and space
/// `xs[k]` (vertical). Non-finite cells are grey.
pub fn heat_plot(title: &str, times: &[f64], xs: &[f64], values: &[Vec<f64>]) -> Result<String> {
    if times.is_empty() || xs.is_empty() || values.len() != times.len() || values.iter().any(|r| r.len() != xs.len()) {
        return Err(Error::invalid("heat plot needs a full times x space grid"));
    }
    let edges = |c: &[f64]| -> Vec<f64> {
        let n = c.len();
        if n == 1 {
            return vec![c[0] - 0.5, c[0] + 0.5];
        }
        let mut e = Vec::with_capacity(n + 1);
        e.push(c[0] - 0.5 * (c[1] - c[0]));
        e.extend(c.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        e.push(c[n - 1] + 0.5 * (c[n - 1] - c[n - 2]));
        e
    };
    let te = edges(times);
    let xe = edges(xs);
    let f = Frame {
        x: range(te.iter().copied()).unwrap_or((0.0, 1.0)),
        y: range(xe.iter().copied()).unwrap_or((0.0, 1.0)),
    };
    let (vlo, vhi) = range(values.iter().flatten().copied()).unwrap_or((-1.0, 1.0));
    let mut out = String::new();
    open(&mut out, title);
    for (j, row) in values.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let (x0, x1) = (f.px(te[j]), f.px(te[j + 1]));
            let (y0, y1) = (f.py(xe[k + 1]), f.py(xe[k]));
            let fill = if v.is_finite() { color((v - vlo) / (vhi - vlo)) } else { "#808080".into() };
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                num(x0.min(x1)),
                num(y0.min(y1)),
                num((x1 - x0).abs()),
                num((y1 - y0).abs())
            );
        }
    }
    axes(&mut out, &f, "t", "x");
    let bx = WIDTH - RIGHT + 20.0;
    for i in 0..20 {
        let u0 = i as f64 / 20.0;
        let h = (HEIGHT - TOP - BOTTOM) / 20.0;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="16" height="{}" fill="{}"/>"#,
            num(bx),
            num(HEIGHT - BOTTOM - (i + 1) as f64 * h),
            num(h),
            color(u0 + 0.025)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{0}" y="{1}">{2}</text><text x="{0}" y="{3}">{4}</text>"#,
        num(bx + 22.0),
        num(TOP + 8.0),
        tick(vhi),
        num(HEIGHT - BOTTOM),
        tick(vlo)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Heat map for `t,x,value` tables, otherwise one line per column against
/// the first.
pub fn plot_table(title: &str, table: &PlotTable) -> Result<String> {
    if table.is_field() {
        let mut times: Vec<f64> = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for r in &table.rows {
            if times.last() != Some(&r[0]) {
                if times.contains(&r[0]) {
                    return Err(Error::invalid("field rows must be grouped by time"));
                }
                times.push(r[0]);
                values.push(Vec::new());
            }
            let row = values.last_mut().expect("pushed above");
            if times.len() == 1 {
                xs.push(r[1]);
            } else if xs.get(row.len()) != Some(&r[1]) {
                return Err(Error::invalid("every time must list the same x grid"));
            }
            row.push(r[2]);
        }
        return heat_plot(title, &times, &xs, &values);
    }
    let series = (1..table.columns.len())
        .map(|c| (table.columns[c].clone(), table.rows.iter().map(|r| (r[0], r[c])).collect()))
        .collect::<Vec<_>>();
    Ok(line_plot(title, &table.columns[0], "value", &series))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tables() {
        let t = parse_plot_csv("dt,diff\n0.1,1e-2\n\n0.05,nan\n").unwrap();
        assert_eq!(t.columns, ["dt", "diff"]);
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows[1][1].is_nan());
        assert!(parse_plot_csv("").is_err());
        assert!(parse_plot_csv("a\n1\n").is_err());
        assert!(parse_plot_csv("a,b\n").is_err());
        let e = parse_plot_csv("a,b\n1,2\n3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(parse_plot_csv("a,b\n1,x\n").is_err());
        assert!(parse_plot_csv("a,<b>\n1,2\n").is_err());
    }

    #[test]
    fn line_plot_is_standalone() {
        let t = parse_plot_csv("x,y,z\n0,1,2\n1,inf,3\n2,0.5,1\n").unwrap();
        let svg = plot_table("a & b", &t).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains(r#"version="1.1""#));
        assert!(svg.contains("a &amp; b"));
        assert!(!svg.contains("href"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn heat_plot_from_snapshot() {
        let t = parse_plot_csv("t,x,value\n0,0,1\n0,1,2\n0.5,0,3\n0.5,1,4\n").unwrap();
        assert!(t.is_field());
        let svg = plot_table("field", &t).unwrap();
        assert!(svg.contains("#0000ff") || svg.contains("#ffffff"));
        assert!(svg.matches("<rect").count() >= 4 + 20);
        let bad = parse_plot_csv("t,x,value\n0,0,1\n0,1,2\n0.5,1,3\n").unwrap();
        assert!(plot_table("field", &bad).is_err());
        let single = parse_plot_csv("t,x,value\n0,0,5\n").unwrap();
        assert!(plot_table("one", &single).is_ok());
    }

    #[test]
    fn constant_and_empty_ranges() {
        let svg = line_plot("c", "x", "y", &[("flat".into(), vec![(1.0, 2.0), (1.0, 2.0)])]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        let svg = line_plot("e", "x", "y", &[("none".into(), vec![(f64::NAN, 1.0)])]);
        assert!(!svg.contains("<path"));
    }
}
