//! Experiment reports: CSV tables with a versioned header comment, a summary
//! line and optional raster plots.

use std::fmt::Write as _;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

pub const CSV_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Nothing met the hypotheses; reported, never counted as a pass.
    Vacuous,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Vacuous => "vacuous",
        }
    }
}

/// One CSV table. Every row carries an `ok` column so the report status
/// can be re-derived from the rows alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    fn ok_column(&self) -> Option<usize> {
        self.header.iter().position(|h| h == "ok")
    }

    /// Rows whose `ok` column reads `false`.
    pub fn failures(&self) -> usize {
        match self.ok_column() {
            Some(c) => self.rows.iter().filter(|r| r[c] == "false").count(),
            None => 0,
        }
    }

    pub fn to_csv(&self, experiment: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# cusp-lab {experiment}/{} csv v{CSV_VERSION}", self.name);
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    /// Looks up a cell by column name.
    pub fn cell(&self, row: usize, column: &str) -> Option<&str> {
        let c = self.header.iter().position(|h| h == column)?;
        self.rows.get(row).map(|r| r[c].as_str())
    }
}

/// A series for [`plot_series`]: `(x, y)` points drawn as one polyline.
pub type Series = Vec<(f64, f64)>;

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub name: String,
    pub status: Status,
    /// Measured and reference constants, in insertion order.
    pub constants: Vec<(String, f64)>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    /// Series for the optional plot (log-scaled y).
    pub plot: Vec<Series>,
}

impl ExperimentReport {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), status: Status::Pass, constants: Vec::new(), tables: Vec::new(), notes: Vec::new(), plot: Vec::new() }
    }

    pub fn pass(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn set(&mut self, key: &str, v: f64) {
        self.constants.push((key.to_string(), v));
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Status from the `ok` columns, or `Vacuous` when `vacuous` is set and
    /// nothing failed.
    pub fn derive_status(&self, vacuous: bool) -> Status {
        if self.tables.iter().any(|t| t.failures() > 0) {
            Status::Fail
        } else if vacuous {
            Status::Vacuous
        } else {
            Status::Pass
        }
    }

    pub fn summary_line(&self) -> String {
        let mut s = format!("{} {}", self.name, self.status.label());
        for (k, v) in &self.constants {
            let _ = write!(s, " {k}={}", super::num(*v));
        }
        s
    }

    /// Writes `<name>.csv` (first table) and `<name>_<table>.csv` for the rest,
    /// plus `<name>.png` when `plots` is set and there is something to draw.
    pub fn write(&self, dir: &Path, plots: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, t) in self.tables.iter().enumerate() {
            let file = if i == 0 { format!("{}.csv", self.name) } else { format!("{}_{}.csv", self.name, t.name) };
            std::fs::write(dir.join(file), t.to_csv(&self.name))?;
        }
        if !self.notes.is_empty() {
            std::fs::write(dir.join(format!("{}_notes.txt", self.name)), self.notes.join("\n") + "\n")?;
        }
        if plots && !self.plot.is_empty() {
            plot_series(&dir.join(format!("{}.png", self.name)), &self.plot)?;
        }
        Ok(())
    }
}

/// Writes `summary.txt`: one line per experiment.
pub fn write_summary(dir: &Path, reports: &[ExperimentReport]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let text: String = reports.iter().map(|r| r.summary_line() + "\n").collect();
    std::fs::write(dir.join("summary.txt"), text)?;
    Ok(())
}

const PALETTE: [[u8; 3]; 6] = [[31, 119, 180], [214, 39, 40], [44, 160, 44], [148, 103, 189], [255, 127, 14], [23, 190, 207]];

/// Polylines on a white 640x480 canvas with a log10 y axis; non-positive
/// values are dropped.
pub fn plot_series(path: &Path, series: &[Series]) -> Result<()> {
    let (w, h, pad) = (640u32, 480u32, 40.0);
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.iter().filter(|p| p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()).map(|&(x, y)| (x, y.log10())).collect())
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let mut img = RgbImage::from_pixel(w, h, Rgb([255, 255, 255]));
    let black = Rgb([0, 0, 0]);
    for x in pad as u32..w - pad as u32 {
        img.put_pixel(x, h - pad as u32, black);
    }
    for y in pad as u32..=h - pad as u32 {
        img.put_pixel(pad as u32, y, black);
    }
    if x0.is_finite() {
        let sx = if x1 > x0 { (w as f64 - 2.0 * pad) / (x1 - x0) } else { 0.0 };
        let sy = if y1 > y0 { (h as f64 - 2.0 * pad) / (y1 - y0) } else { 0.0 };
        let map = |(x, y): (f64, f64)| (pad + (x - x0) * sx, h as f64 - pad - (y - y0) * sy);
        for (i, s) in pts.iter().enumerate() {
            let c = Rgb(PALETTE[i % PALETTE.len()]);
            for win in s.windows(2) {
                let (a, b) = (map(win[0]), map(win[1]));
                let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
                for t in 0..=steps {
                    let f = t as f64 / steps as f64;
                    let (px, py) = (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1));
                    if px >= 0.0 && py >= 0.0 && (px as u32) < w && (py as u32) < h {
                        img.put_pixel(px as u32, py as u32, c);
                    }
                }
            }
        }
    }
    img.save(path).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_ok_column() {
        let mut r = ExperimentReport::new("x");
        let mut t = Table::new("main", &["name", "ok"]);
        t.push(vec!["a".into(), "true".into()]);
        r.tables.push(t.clone());
        assert_eq!(r.derive_status(false), Status::Pass);
        assert_eq!(r.derive_status(true), Status::Vacuous);
        t.push(vec!["b".into(), "false".into()]);
        r.tables[0] = t;
        assert_eq!(r.derive_status(true), Status::Fail);
        assert_eq!(r.tables[0].cell(1, "name"), Some("b"));
    }

    #[test]
    fn csv_has_versioned_header() {
        let mut t = Table::new("main", &["a", "ok"]);
        t.push(vec!["1".into(), "true".into()]);
        let csv = t.to_csv("exp");
        assert!(csv.starts_with("# cusp-lab exp/main csv v1\na,ok\n"));
    }

    #[test]
    fn plots_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.png");
        plot_series(&p, &[vec![(0.0, 1.0), (1.0, 0.1), (2.0, 0.01)], vec![(0.0, 0.0)]]).unwrap();
        let img = image::open(&p).unwrap();
        assert_eq!(img.width(), 640);
    }
}
