//! Run configuration: a strict TOML schema with one section per pipeline stage.
//!
//! All lengths are in meters. Every key read is echoed into a canonical table
//! (defaults filled in), which is what the run manifest records.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use g2ghost::correlators::{MIN_AMPLITUDE_PAIRS, MIN_INTENSITY_REALIZATIONS};
use g2ghost::ghost::{MIN_GHOST_PAIRS, MIN_GHOST_REALIZATIONS};
use g2ghost::{
    make_double_pinhole_mask, make_mask_from_bitmap, DetectorGrid, Dimensionality, Estimator, FitOptions, Geometry,
    GhostConfig, HbtScanConfig, KernelParams, ModelKind, SourceShape, SourceSpec, TransmissionMask, Vec2,
};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

pub const DEFAULT_OUTPUT_DIR: &str = "g2ghost-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    HbtScan,
    GhostImage,
    Analytic,
    Fit,
    Section,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::HbtScan,
        Command::GhostImage,
        Command::Analytic,
        Command::Fit,
        Command::Section,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::HbtScan => "hbt_scan",
            Command::GhostImage => "ghost_image",
            Command::Analytic => "analytic",
            Command::Fit => "fit",
            Command::Section => "section",
        }
    }

    fn sections(self) -> &'static [&'static str] {
        match self {
            Command::HbtScan => &["run", "geometry", "source", "scan", "hbt"],
            Command::GhostImage => &["run", "geometry", "source", "scan", "ghost", "mask"],
            Command::Analytic => &["run", "geometry", "scan", "kernel", "mask"],
            Command::Fit => &["run", "fit"],
            Command::Section => &["run", "section"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        let norm = s.replace('-', "_");
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| CliError::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticJob {
    pub params: KernelParams,
    pub scan: DetectorGrid,
    /// With a mask the ghost images are computed; without one, g²(Δ) over the scan.
    pub mask: Option<TransmissionMask>,
    pub delta_limit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitJob {
    pub input: PathBuf,
    pub model: ModelKind,
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionJob {
    pub input: PathBuf,
    pub start: Vec2,
    pub end: Vec2,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    HbtScan(HbtScanConfig),
    GhostImage {
        config: GhostConfig,
        /// Fit two Gaussians to the central row (double-pinhole masks).
        fit_pinholes: bool,
    },
    Analytic(AnalyticJob),
    Fit(FitJob),
    Section(SectionJob),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    /// 0 selects the global pool.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub job: Job,
    canonical: Table,
}

impl RunConfig {
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        match &mut self.job {
            Job::HbtScan(c) => c.seed = seed,
            Job::GhostImage { config, .. } => config.seed = seed,
            _ => {}
        }
        self.run_table().insert("seed".into(), seed_value(seed));
    }

    pub fn set_workers(&mut self, workers: usize) {
        self.workers = workers;
        self.run_table().insert("workers".into(), Value::Integer(workers as i64));
    }

    pub fn set_output_dir(&mut self, dir: PathBuf) {
        self.run_table()
            .insert("output_dir".into(), Value::String(dir.display().to_string()));
        self.output_dir = dir;
    }

    fn run_table(&mut self) -> &mut Table {
        self.canonical
            .entry("run")
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("run section is a table")
    }

    /// Resolved configuration with all defaults spelled out.
    pub fn canonical(&self) -> &Table {
        &self.canonical
    }

    pub fn canonical_toml(&self) -> String {
        toml::to_string(&self.canonical).expect("canonical table serializes")
    }
}

fn seed_value(seed: u64) -> Value {
    match i64::try_from(seed) {
        Ok(v) => Value::Integer(v),
        Err(_) => Value::String(seed.to_string()),
    }
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

/// Typed, key-tracking view of one section.
struct Reader<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<String>,
    echo: Table,
}

impl<'a> Reader<'a> {
    fn new(name: &'static str, doc: &'a Table) -> CliResult<Self> {
        let table = match doc.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                return Err(CliError::Config(format!(
                    "[{name}] must be a section, got a {}",
                    type_name(other)
                )))
            }
        };
        Ok(Self {
            name,
            table,
            used: BTreeSet::new(),
            echo: Table::new(),
        })
    }

    fn present(&self) -> bool {
        self.table.is_some()
    }

    fn require(&self) -> CliResult<()> {
        if self.present() {
            Ok(())
        } else {
            Err(CliError::Config(format!("missing required section [{}]", self.name)))
        }
    }

    fn err(&self, key: &str, msg: impl fmt::Display) -> CliError {
        CliError::Config(format!("{}.{key}: {msg}", self.name))
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        self.used.insert(key.to_string());
        self.table.and_then(|t| t.get(key))
    }

    fn has(&self, key: &str) -> bool {
        self.table.is_some_and(|t| t.contains_key(key))
    }

    fn f64_opt(&mut self, key: &str) -> CliResult<Option<f64>> {
        let v = match self.raw(key) {
            None => return Ok(None),
            Some(Value::Float(f)) => *f,
            Some(Value::Integer(i)) => *i as f64,
            Some(other) => return Err(self.err(key, format!("expected a number, got a {}", type_name(other)))),
        };
        if !v.is_finite() {
            return Err(self.err(key, format!("must be finite, got {v}")));
        }
        self.echo.insert(key.into(), Value::Float(v));
        Ok(Some(v))
    }

    fn f64_req(&mut self, key: &str) -> CliResult<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> CliResult<f64> {
        let v = self.f64_opt(key)?.unwrap_or(default);
        self.echo.insert(key.into(), Value::Float(v));
        Ok(v)
    }

    fn positive(&mut self, key: &str) -> CliResult<f64> {
        let v = self.f64_req(key)?;
        if v <= 0.0 {
            return Err(self.err(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn non_negative(&mut self, key: &str) -> CliResult<f64> {
        let v = self.f64_req(key)?;
        if v < 0.0 {
            return Err(self.err(key, format!("must be non-negative, got {v}")));
        }
        Ok(v)
    }

    fn usize_opt(&mut self, key: &str, min: usize) -> CliResult<Option<usize>> {
        let v = match self.raw(key) {
            None => return Ok(None),
            Some(Value::Integer(i)) => *i,
            Some(other) => return Err(self.err(key, format!("expected an integer, got a {}", type_name(other)))),
        };
        if v < min as i64 {
            return Err(self.err(key, format!("must be at least {min}, got {v}")));
        }
        self.echo.insert(key.into(), Value::Integer(v));
        Ok(Some(v as usize))
    }

    fn usize_req(&mut self, key: &str, min: usize) -> CliResult<usize> {
        self.usize_opt(key, min)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    fn usize_or(&mut self, key: &str, min: usize, default: usize) -> CliResult<usize> {
        let v = self.usize_opt(key, min)?.unwrap_or(default);
        self.echo.insert(key.into(), Value::Integer(v as i64));
        Ok(v)
    }

    /// Non-negative integer, or a decimal / `0x` hexadecimal string for values
    /// beyond the TOML integer range.
    fn u64_or(&mut self, key: &str, default: u64) -> CliResult<u64> {
        let v = match self.raw(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(Value::Integer(i)) => return Err(self.err(key, format!("must be non-negative, got {i}"))),
            Some(Value::String(s)) => parse_u64(s).ok_or_else(|| self.err(key, format!("malformed integer {s:?}")))?,
            Some(other) => return Err(self.err(key, format!("expected an integer, got a {}", type_name(other)))),
        };
        self.echo.insert(key.into(), seed_value(v));
        Ok(v)
    }

    fn string_opt(&mut self, key: &str) -> CliResult<Option<String>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => {
                self.echo.insert(key.into(), Value::String(s.clone()));
                Ok(Some(s.clone()))
            }
            Some(other) => Err(self.err(key, format!("expected a string, got a {}", type_name(other)))),
        }
    }

    fn string_req(&mut self, key: &str) -> CliResult<String> {
        self.string_opt(key)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    fn choice<T: Copy>(&mut self, key: &str, default: Option<&str>, options: &[(&str, T)]) -> CliResult<T> {
        let s = match (self.string_opt(key)?, default) {
            (Some(s), _) => s,
            (None, Some(d)) => {
                self.echo.insert(key.into(), Value::String(d.into()));
                d.to_string()
            }
            (None, None) => return Err(self.err(key, "missing required key")),
        };
        options
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(key, format!("unknown value {s:?} (expected one of {})", names.join(", ")))
            })
    }

    fn bool_or(&mut self, key: &str, default: bool) -> CliResult<bool> {
        let v = match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => return Err(self.err(key, format!("expected a boolean, got a {}", type_name(other)))),
        };
        self.echo.insert(key.into(), Value::Boolean(v));
        Ok(v)
    }

    fn f64_array_opt(&mut self, key: &str) -> CliResult<Option<Vec<f64>>> {
        let arr = match self.raw(key) {
            None => return Ok(None),
            Some(Value::Array(a)) => a,
            Some(other) => return Err(self.err(key, format!("expected an array, got a {}", type_name(other)))),
        };
        let mut out = Vec::with_capacity(arr.len());
        for (k, v) in arr.iter().enumerate() {
            let x = match v {
                Value::Float(f) => *f,
                Value::Integer(i) => *i as f64,
                other => {
                    return Err(self.err(key, format!("element {k}: expected a number, got a {}", type_name(other))))
                }
            };
            if !x.is_finite() {
                return Err(self.err(key, format!("element {k} is not finite")));
            }
            out.push(x);
        }
        self.echo
            .insert(key.into(), Value::Array(out.iter().map(|x| Value::Float(*x)).collect()));
        Ok(Some(out))
    }

    /// Rejects keys that were never read.
    fn finish(self, canonical: &mut Table) -> CliResult<()> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.used.contains(*k)) {
                return Err(CliError::Config(format!("unknown key {}.{k}", self.name)));
            }
        }
        if self.present() || !self.echo.is_empty() {
            canonical.insert(self.name.into(), Value::Table(self.echo));
        }
        Ok(())
    }
}

fn parse_u64(s: &str) -> Option<u64> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

/// Any core error raised while building a stage from its section is a
/// configuration error attributed to that section.
fn in_section<T>(section: &str, r: g2ghost::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Config(format!("[{section}] {e}")))
}

const ESTIMATORS: [(&str, Estimator); 2] = [
    ("intensity", Estimator::Intensity),
    ("amplitude_pair", Estimator::AmplitudePair),
];

fn geometry(r: &mut Reader) -> CliResult<Geometry> {
    r.require()?;
    let wavelength = r.positive("wavelength")?;
    let l1 = r.positive("dist_reference")?;
    let l2 = r.positive("dist_object")?;
    in_section("geometry", Geometry::new(wavelength, l1, l2))
}

fn require_balanced(r: &Reader, g: &Geometry) -> CliResult<()> {
    if g.balanced() {
        Ok(())
    } else {
        Err(r.err(
            "dist_object",
            format!(
                "must equal geometry.dist_reference ({} m) for imaging, got {} m",
                g.dist_reference(),
                g.dist_object()
            ),
        ))
    }
}

#[derive(Clone, Copy)]
enum ShapeKind {
    Disk,
    Rectangle,
    Bitmap,
}

fn source(r: &mut Reader) -> CliResult<SourceSpec> {
    r.require()?;
    let kind = r.choice(
        "shape",
        None,
        &[
            ("disk", ShapeKind::Disk),
            ("rectangle", ShapeKind::Rectangle),
            ("bitmap", ShapeKind::Bitmap),
        ],
    )?;
    let shape = match kind {
        ShapeKind::Disk => SourceShape::Disk {
            diameter: r.positive("diameter")?,
        },
        ShapeKind::Rectangle => SourceShape::Rectangle {
            width: r.positive("width")?,
            height: r.positive("height")?,
        },
        ShapeKind::Bitmap => {
            let nx = r.usize_req("nx", 1)?;
            let ny = r.usize_req("ny", 1)?;
            let values = r
                .f64_array_opt("values")?
                .ok_or_else(|| r.err("values", "missing required key"))?;
            if values.len() != nx * ny {
                return Err(r.err("values", format!("has {} entries, expected nx·ny = {}", values.len(), nx * ny)));
            }
            if let Some(k) = values.iter().position(|v| *v < 0.0) {
                return Err(r.err("values", format!("element {k} is negative")));
            }
            SourceShape::Bitmap { nx, ny, values }
        }
    };
    let pitch = r.positive("emitter_pitch")?;
    in_section("source", SourceSpec::new(shape, pitch))
}

/// `[scan]`: either an explicit origin or `centered = true`.
fn scan(r: &mut Reader) -> CliResult<DetectorGrid> {
    r.require()?;
    let pitch = r.positive("pitch")?;
    let nx = r.usize_req("nx", 1)?;
    let ny = r.usize_or("ny", 1, 1)?;
    let centered = r.bool_or("centered", false)?;
    let grid = if centered {
        for key in ["origin_x", "origin_y"] {
            if r.has(key) {
                return Err(r.err(key, "conflicts with scan.centered = true"));
            }
        }
        if ny == 1 {
            DetectorGrid::line(-0.5 * (nx - 1) as f64 * pitch, pitch, nx, 0.0)
        } else {
            DetectorGrid::centered(pitch, nx, ny)
        }
    } else {
        let ox = r.f64_req("origin_x")?;
        let oy = r.f64_or("origin_y", 0.0)?;
        DetectorGrid::new(Vec2::new(ox, oy), pitch, nx, ny)
    };
    in_section("scan", grid)
}

#[derive(Clone, Copy)]
enum MaskKind {
    DoublePinhole,
    Bitmap,
}

fn mask(r: &mut Reader) -> CliResult<(TransmissionMask, bool)> {
    r.require()?;
    let kind = r.choice(
        "kind",
        None,
        &[("double_pinhole", MaskKind::DoublePinhole), ("bitmap", MaskKind::Bitmap)],
    )?;
    let pitch = r.positive("pitch")?;
    let nx = r.usize_req("nx", 1)?;
    let ny = r.usize_req("ny", 1)?;
    let grid = in_section("mask", DetectorGrid::centered(pitch, nx, ny))?;
    match kind {
        MaskKind::DoublePinhole => {
            let d = r.positive("diameter")?;
            let s = r.non_negative("separation")?;
            Ok((in_section("mask", make_double_pinhole_mask(grid, d, s))?, true))
        }
        MaskKind::Bitmap => {
            let values = r
                .f64_array_opt("values")?
                .ok_or_else(|| r.err("values", "missing required key"))?;
            let m = make_mask_from_bitmap(grid, values).map_err(|e| r.err("values", e))?;
            Ok((m, false))
        }
    }
}

fn ensemble(r: &mut Reader, estimator: Estimator, min_intensity: usize, min_pairs: usize) -> CliResult<usize> {
    let min = match estimator {
        Estimator::Intensity => min_intensity,
        Estimator::AmplitudePair => min_pairs,
    };
    let n = r.usize_req("ensemble_size", 1)?;
    if n < min {
        return Err(r.err(
            "ensemble_size",
            format!("must be at least {min} for the {} estimator, got {n}", estimator_name(estimator)),
        ));
    }
    Ok(n)
}

fn estimator_name(e: Estimator) -> &'static str {
    ESTIMATORS.iter().find(|(_, v)| *v == e).map_or("?", |(n, _)| n)
}

/// Parses a configuration document.
///
/// `command` comes from the CLI subcommand; when the document also sets
/// `run.command` the two must agree.
pub fn parse_config(text: &str, command: Option<Command>) -> CliResult<RunConfig> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("malformed configuration: {}", e.to_string().trim_end())))?;
    let mut canonical = Table::new();

    let mut run = Reader::new("run", &doc)?;
    let file_command = run
        .string_opt("command")?
        .map(|s| s.parse::<Command>().map_err(|_| run.err("command", format!("unknown command {s:?}"))))
        .transpose()?;
    let command = match (command, file_command) {
        (Some(a), Some(b)) if a != b => {
            return Err(run.err("command", format!("file says {b} but the {a} subcommand was given")))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(run.err("command", "missing (set it or pass a subcommand)")),
    };
    run.echo.insert("command".into(), Value::String(command.as_str().into()));
    let seed = run.u64_or("seed", 0)?;
    let workers = run.usize_or("workers", 0, 0)?;
    let output_dir = PathBuf::from(run.string_opt("output_dir")?.unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into()));
    run.echo
        .insert("output_dir".into(), Value::String(output_dir.display().to_string()));
    run.finish(&mut canonical)?;

    let allowed = command.sections();
    for (name, value) in &doc {
        if !value.is_table() {
            return Err(CliError::Config(format!("unknown top-level key {name}")));
        }
        if !allowed.contains(&name.as_str()) {
            return Err(CliError::Config(format!(
                "section [{name}] is not used by the {command} command (allowed: {})",
                allowed.join(", ")
            )));
        }
    }

    let job = match command {
        Command::HbtScan => {
            let mut g = Reader::new("geometry", &doc)?;
            let geometry = geometry(&mut g)?;
            require_balanced(&g, &geometry)?;
            let mut s = Reader::new("source", &doc)?;
            let source = source(&mut s)?;
            let mut sc = Reader::new("scan", &doc)?;
            let scan = scan(&mut sc)?;
            let mut h = Reader::new("hbt", &doc)?;
            h.require()?;
            let estimator = h.choice("estimator", Some("intensity"), &ESTIMATORS)?;
            let ensemble_size = ensemble(&mut h, estimator, MIN_INTENSITY_REALIZATIONS, MIN_AMPLITUDE_PAIRS)?;
            let fixed_point = Vec2::new(h.f64_or("fixed_x", 0.0)?, h.f64_or("fixed_y", 0.0)?);
            let config = HbtScanConfig {
                source,
                geometry,
                fixed_point,
                scan,
                ensemble_size,
                seed,
                estimator,
            };
            in_section("hbt", config.validate())?;
            for r in [g, s, sc, h] {
                r.finish(&mut canonical)?;
            }
            Job::HbtScan(config)
        }
        Command::GhostImage => {
            let mut g = Reader::new("geometry", &doc)?;
            let geometry = geometry(&mut g)?;
            require_balanced(&g, &geometry)?;
            let mut s = Reader::new("source", &doc)?;
            let source = source(&mut s)?;
            let mut sc = Reader::new("scan", &doc)?;
            let reference_scan = scan(&mut sc)?;
            let mut m = Reader::new("mask", &doc)?;
            let (mask, fit_pinholes) = mask(&mut m)?;
            if mask.support_len() == 0 {
                return Err(CliError::Config("[mask] is opaque everywhere; nothing to image".into()));
            }
            let mut h = Reader::new("ghost", &doc)?;
            h.require()?;
            let estimator = h.choice("estimator", Some("intensity"), &ESTIMATORS)?;
            let ensemble_size = ensemble(&mut h, estimator, MIN_GHOST_REALIZATIONS, MIN_GHOST_PAIRS)?;
            let config = GhostConfig {
                source,
                geometry,
                mask,
                reference_scan,
                ensemble_size,
                seed,
                estimator,
            };
            in_section("ghost", config.validate())?;
            for r in [g, s, sc, m, h] {
                r.finish(&mut canonical)?;
            }
            Job::GhostImage { config, fit_pinholes }
        }
        Command::Analytic => {
            let mut g = Reader::new("geometry", &doc)?;
            let geometry = geometry(&mut g)?;
            require_balanced(&g, &geometry)?;
            let mut sc = Reader::new("scan", &doc)?;
            let scan = scan(&mut sc)?;
            let mut k = Reader::new("kernel", &doc)?;
            k.require()?;
            let extent = k.positive("source_extent")?;
            let dim = k.choice(
                "dimensionality",
                None,
                &[("1d", Dimensionality::OneD), ("2d", Dimensionality::TwoD)],
            )?;
            let delta_limit = k.bool_or("delta_limit", false)?;
            let params = in_section(
                "kernel",
                KernelParams::new(extent, geometry.wavelength(), geometry.dist_reference(), dim),
            )?;
            let mut m = Reader::new("mask", &doc)?;
            let mask = if m.present() {
                let (mask, _) = mask(&mut m)?;
                if mask.support_len() == 0 {
                    return Err(CliError::Config("[mask] is opaque everywhere; nothing to image".into()));
                }
                Some(mask)
            } else {
                None
            };
            if delta_limit && mask.is_none() {
                return Err(k.err("delta_limit", "requires a [mask] section"));
            }
            for r in [g, sc, k, m] {
                r.finish(&mut canonical)?;
            }
            Job::Analytic(AnalyticJob {
                params,
                scan,
                mask,
                delta_limit,
            })
        }
        Command::Fit => {
            let mut f = Reader::new("fit", &doc)?;
            f.require()?;
            let input = PathBuf::from(f.string_req("input")?);
            #[derive(Clone, Copy)]
            enum Family {
                Sinc2Dip,
                Sinc2Peak,
                GaussianDips,
                GaussianPeaks,
            }
            let family = f.choice(
                "model",
                None,
                &[
                    ("sinc2_dip", Family::Sinc2Dip),
                    ("sinc2_peak", Family::Sinc2Peak),
                    ("gaussian_dips", Family::GaussianDips),
                    ("gaussian_peaks", Family::GaussianPeaks),
                ],
            )?;
            let model = match family {
                Family::Sinc2Dip | Family::Sinc2Peak => {
                    if f.has("components") {
                        return Err(f.err("components", "only applies to Gaussian models"));
                    }
                    f.used.insert("components".into());
                    if matches!(family, Family::Sinc2Dip) {
                        ModelKind::Sinc2Dip
                    } else {
                        ModelKind::Sinc2Peak
                    }
                }
                Family::GaussianDips => ModelKind::GaussianDips(f.usize_or("components", 1, 1)?),
                Family::GaussianPeaks => ModelKind::GaussianPeaks(f.usize_or("components", 1, 1)?),
            };
            let fixed_baseline = f.f64_opt("fixed_baseline")?;
            let init = f.f64_array_opt("init")?;
            if let Some(p) = &init {
                if p.len() != model.n_params() {
                    return Err(f.err("init", format!("expected {} parameters, got {}", model.n_params(), p.len())));
                }
            }
            let max_iter = f.usize_or("max_iter", 1, 10_000)?;
            f.finish(&mut canonical)?;
            Job::Fit(FitJob {
                input,
                model,
                options: FitOptions {
                    init,
                    fixed_baseline,
                    max_iter,
                },
            })
        }
        Command::Section => {
            let mut s = Reader::new("section", &doc)?;
            s.require()?;
            let input = PathBuf::from(s.string_req("input")?);
            let start = Vec2::new(s.f64_req("start_x")?, s.f64_req("start_y")?);
            let end = Vec2::new(s.f64_req("end_x")?, s.f64_req("end_y")?);
            let samples = s.usize_req("samples", 2)?;
            if start == end {
                return Err(s.err("end_x", "section has zero length"));
            }
            s.finish(&mut canonical)?;
            Job::Section(SectionJob {
                input,
                start,
                end,
                samples,
            })
        }
    };

    Ok(RunConfig {
        command,
        seed,
        workers,
        output_dir,
        job,
        canonical,
    })
}
