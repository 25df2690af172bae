//! Plain-text correlation tables.
//!
//! ```text
//! # g2ghost-csv 1
//! # kind=fermion
//! # seed=7
//! # ensemble=5000
//! # origin_x=-3.0000000000000001e-3
//! # origin_y=0.0000000000000000e0
//! # pitch=1.2500000000000000e-4
//! # nx=49
//! # ny=1
//! # columns=x_m,g2,stderr
//! -3.0000000000000001e-3,1.0046…e0,1.3…e-2
//! ```
//!
//! Every number is written with 17 significant digits, which round-trips
//! `f64` exactly. Rows follow the grid in row-major order (x fastest). Grid
//! files carry `x_m,y_m` columns unless the grid is 1D; profile files (no grid)
//! carry `x_m` only.

use std::fmt::Write as _;
use std::path::Path;

use g2ghost::{CorrelationMap, DetectorGrid, GhostImage, Statistics, Vec2};

use crate::error::{CliError, CliResult};

const MAGIC: &str = "# g2ghost-csv 1";

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvMeta {
    pub kind: Option<Statistics>,
    pub seed: Option<u64>,
    pub ensemble: Option<usize>,
    /// Reference level of a ghost image.
    pub baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Grid(DetectorGrid),
    Profile(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub meta: CsvMeta,
    pub layout: Layout,
    pub g2: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl CsvTable {
    pub fn from_map(map: &CorrelationMap, mut meta: CsvMeta) -> Self {
        meta.kind = Some(map.kind);
        Self {
            meta,
            layout: Layout::Grid(map.scan),
            g2: map.values.clone(),
            stderr: map.stderr.clone(),
        }
    }

    pub fn from_image(image: &GhostImage, mut meta: CsvMeta) -> Self {
        meta.kind = Some(image.kind);
        meta.baseline = Some(image.baseline);
        Self {
            meta,
            layout: Layout::Grid(image.scan),
            g2: image.values.clone(),
            stderr: image.stderr.clone(),
        }
    }

    pub fn profile(xs: Vec<f64>, g2: Vec<f64>, stderr: Vec<f64>, meta: CsvMeta) -> Self {
        Self {
            meta,
            layout: Layout::Profile(xs),
            g2,
            stderr,
        }
    }

    pub fn grid(&self) -> Option<&DetectorGrid> {
        match &self.layout {
            Layout::Grid(g) => Some(g),
            Layout::Profile(_) => None,
        }
    }

    /// Abscissae of a one-dimensional table (profile or 1D grid).
    pub fn xs(&self) -> Option<Vec<f64>> {
        match &self.layout {
            Layout::Profile(xs) => Some(xs.clone()),
            Layout::Grid(g) if g.is_1d() => Some(g.points().iter().map(|p| p.x).collect()),
            Layout::Grid(_) => None,
        }
    }

    pub fn to_map(&self) -> CliResult<CorrelationMap> {
        let grid = self
            .grid()
            .ok_or_else(|| CliError::Config("table has no grid".into()))?;
        let kind = self.meta.kind.unwrap_or(Statistics::Classical);
        Ok(CorrelationMap::new(*grid, self.g2.clone(), kind, self.stderr.clone())?)
    }

    pub fn to_image(&self) -> CliResult<GhostImage> {
        let grid = self
            .grid()
            .ok_or_else(|| CliError::Config("table has no grid".into()))?;
        let kind = self.meta.kind.unwrap_or(Statistics::Classical);
        Ok(GhostImage::new(
            *grid,
            self.g2.clone(),
            kind,
            self.meta.baseline.unwrap_or(1.0),
            self.stderr.clone(),
        )?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(MAGIC);
        s.push('\n');
        let m = &self.meta;
        if let Some(k) = m.kind {
            let _ = writeln!(s, "# kind={k}");
        }
        if let Some(v) = m.seed {
            let _ = writeln!(s, "# seed={v}");
        }
        if let Some(v) = m.ensemble {
            let _ = writeln!(s, "# ensemble={v}");
        }
        if let Some(v) = m.baseline {
            let _ = writeln!(s, "# baseline={}", fmt_f64(v));
        }
        match &self.layout {
            Layout::Grid(g) => {
                let _ = writeln!(s, "# origin_x={}", fmt_f64(g.origin().x));
                let _ = writeln!(s, "# origin_y={}", fmt_f64(g.origin().y));
                let _ = writeln!(s, "# pitch={}", fmt_f64(g.pitch()));
                let _ = writeln!(s, "# nx={}", g.nx());
                let _ = writeln!(s, "# ny={}", g.ny());
                if g.is_1d() {
                    s.push_str("# columns=x_m,g2,stderr\n");
                } else {
                    s.push_str("# columns=x_m,y_m,g2,stderr\n");
                }
                for k in 0..g.len() {
                    let p = g.point(k);
                    if g.is_1d() {
                        let _ = write!(s, "{},", fmt_f64(p.x));
                    } else {
                        let _ = write!(s, "{},{},", fmt_f64(p.x), fmt_f64(p.y));
                    }
                    let _ = writeln!(s, "{},{}", fmt_f64(self.g2[k]), fmt_f64(self.stderr[k]));
                }
            }
            Layout::Profile(xs) => {
                s.push_str("# columns=x_m,g2,stderr\n");
                for ((x, g), e) in xs.iter().zip(&self.g2).zip(&self.stderr) {
                    let _ = writeln!(
                        s,
                        "{},{},{}",
                        fmt_f64(*x),
                        fmt_f64(*g),
                        fmt_f64(*e)
                    );
                }
            }
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let bad = |message: String| CliError::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            _ => return Err(bad(format!("first line must be {MAGIC:?}"))),
        }
        let mut meta = CsvMeta::default();
        let (mut ox, mut oy, mut pitch, mut nx, mut ny) = (None, None, None, None, None);
        let mut columns = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (n, line) in lines {
            let lineno = n + 1;
            if let Some(h) = line.strip_prefix("# ") {
                if !rows.is_empty() {
                    return Err(bad(format!("line {lineno}: header after data")));
                }
                let (key, value) = h
                    .split_once('=')
                    .ok_or_else(|| bad(format!("line {lineno}: header is not key=value")))?;
                let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("line {lineno}: malformed number {v:?}")));
                let int = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("line {lineno}: malformed integer {v:?}")));
                match key {
                    "kind" => meta.kind = Some(value.parse().map_err(|e| bad(format!("line {lineno}: {e}")))?),
                    "seed" => meta.seed = Some(int(value)?),
                    "ensemble" => meta.ensemble = Some(int(value)? as usize),
                    "baseline" => meta.baseline = Some(num(value)?),
                    "origin_x" => ox = Some(num(value)?),
                    "origin_y" => oy = Some(num(value)?),
                    "pitch" => pitch = Some(num(value)?),
                    "nx" => nx = Some(int(value)? as usize),
                    "ny" => ny = Some(int(value)? as usize),
                    "columns" => columns = Some(value.to_string()),
                    other => return Err(bad(format!("line {lineno}: unknown header {other:?}"))),
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| bad(format!("line {lineno}: malformed row")))?;
            rows.push(row);
        }
        let columns = columns.ok_or_else(|| bad("missing columns header".into()))?;
        let width = columns.split(',').count();
        if let Some(k) = rows.iter().position(|r| r.len() != width) {
            return Err(bad(format!("data row {} has the wrong number of fields", k + 1)));
        }
        let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
        let layout = match (ox, oy, pitch, nx, ny) {
            (Some(ox), Some(oy), Some(pitch), Some(nx), Some(ny)) => {
                let grid = DetectorGrid::new(Vec2::new(ox, oy), pitch, nx, ny)
                    .map_err(|e| bad(format!("grid header: {e}")))?;
                let expected = if grid.is_1d() { "x_m,g2,stderr" } else { "x_m,y_m,g2,stderr" };
                if columns != expected {
                    return Err(bad(format!("columns must be {expected} for this grid")));
                }
                if rows.len() != grid.len() {
                    return Err(bad(format!("{} rows for a grid of {} samples", rows.len(), grid.len())));
                }
                for (k, r) in rows.iter().enumerate() {
                    let p = grid.point(k);
                    let ok = if grid.is_1d() { r[0] == p.x } else { r[0] == p.x && r[1] == p.y };
                    if !ok {
                        return Err(bad(format!("data row {} does not match the grid coordinates", k + 1)));
                    }
                }
                Layout::Grid(grid)
            }
            (None, None, None, None, None) => {
                if columns != "x_m,g2,stderr" {
                    return Err(bad("columns must be x_m,g2,stderr for a profile".into()));
                }
                Layout::Profile(col(0))
            }
            _ => return Err(bad("incomplete grid header".into())),
        };
        Ok(Self {
            meta,
            layout,
            g2: col(width - 2),
            stderr: col(width - 1),
        })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }
}

pub fn write_correlation_csv(map: &CorrelationMap, meta: CsvMeta, path: &Path) -> CliResult<()> {
    CsvTable::from_map(map, meta).write(path)
}

pub fn write_image_csv(image: &GhostImage, meta: CsvMeta, path: &Path) -> CliResult<()> {
    CsvTable::from_image(image, meta).write(path)
}
