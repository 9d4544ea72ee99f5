//! Run reports and their on-disk artifacts.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::Error => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    /// SHA-256 of the serialized payload.
    pub payload_hash: String,
    pub wall_time_s: f64,
    pub timestamp: u64,
    pub threads: usize,
}

/// Named numeric table, written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Scatter plot with an optional fitted line `y = intercept + slope x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub line: Option<(f64, f64)>,
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (640.0, 420.0, 60.0);
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if let Some((b, a)) = self.line {
            for x in [x0, x1] {
                let y = b + a * x;
                if y.is_finite() {
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * pad,
            h - 2.0 * pad
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="30" text-anchor="middle" font-size="15">{}</text>"#,
            w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            w / 2.0,
            h - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        );
        for (v, anchor_x, anchor_y) in [(x0, sx(x0), h - pad + 16.0), (x1, sx(x1), h - pad + 16.0)] {
            let _ = writeln!(
                s,
                r#"<text x="{anchor_x:.1}" y="{anchor_y:.1}" text-anchor="middle" font-size="10">{v:.3e}</text>"#
            );
        }
        for v in [y0, y1] {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{v:.3e}</text>"#,
                pad - 4.0,
                sy(v) + 3.0
            );
        }
        for &(x, y) in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue" fill-opacity="0.6"/>"#,
                sx(x),
                sy(y)
            );
        }
        if let Some((b, a)) = self.line {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-width="1.5"/>"#,
                sx(x0),
                sy(b + a * x0),
                sx(x1),
                sy(b + a * x1)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Result of one experiment. `payload` depends only on (config, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub task: String,
    pub status: Status,
    pub config: RunConfig,
    pub payload: Value,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub plots: Vec<Plot>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Writes the JSON report plus any requested CSV tables and SVG plots into `dir`.
/// Names follow `<task>-<timestamp>-<hash8>[-<table>].<ext>`.
pub fn emit_report(report: &RunReport, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = format!(
        "{}-{}-{}",
        report.task,
        report.provenance.timestamp,
        &report.provenance.config_hash[..8.min(report.provenance.config_hash.len())]
    );
    let mut written = Vec::new();
    let json = serde_json::to_vec_pretty(report).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let path = dir.join(format!("{stem}.json"));
    write_atomic(&path, &json)?;
    written.push(path);
    if formats.contains(&Format::Csv) {
        for t in &report.tables {
            let path = dir.join(format!("{stem}-{}.csv", t.name));
            write_atomic(&path, t.to_csv().as_bytes())?;
            written.push(path);
        }
    }
    if formats.contains(&Format::Svg) {
        for p in &report.plots {
            let path = dir.join(format!("{stem}-{}.svg", p.name));
            write_atomic(&path, p.to_svg().as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}
