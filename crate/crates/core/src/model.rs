//! Shared domain types.
//!
//! All lengths are SI meters. Types validate their invariants on construction
//! and are immutable afterwards.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on |l₁ − l₂| / l₁ below which a geometry counts as balanced.
pub const BALANCE_TOLERANCE: f64 = 1e-12;

/// Minimum number of emitters across the smallest source dimension.
pub const MIN_EMITTERS_ACROSS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Wavelength and the two source-to-plane distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    wavelength: f64,
    dist_reference: f64,
    dist_object: f64,
}

impl Geometry {
    pub fn new(wavelength: f64, dist_reference: f64, dist_object: f64) -> Result<Self> {
        positive_finite("wavelength", wavelength)?;
        positive_finite("dist_reference", dist_reference)?;
        positive_finite("dist_object", dist_object)?;
        Ok(Self {
            wavelength,
            dist_reference,
            dist_object,
        })
    }

    /// l₁ = l₂ = `distance`.
    pub fn balanced_at(wavelength: f64, distance: f64) -> Result<Self> {
        Self::new(wavelength, distance, distance)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn dist_reference(&self) -> f64 {
        self.dist_reference
    }

    pub fn dist_object(&self) -> f64 {
        self.dist_object
    }

    /// True when the imaging condition l₁ = l₂ holds.
    pub fn balanced(&self) -> bool {
        (self.dist_reference - self.dist_object).abs() / self.dist_reference < BALANCE_TOLERANCE
    }

    pub(crate) fn require_balanced(&self) -> Result<()> {
        if self.balanced() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unbalanced geometry (l1 = {} m, l2 = {} m): the closed-form correlation \
                 kernels and the ghost-imaging condition both require l1 = l2",
                self.dist_reference, self.dist_object
            )))
        }
    }
}

/// Regular sampling grid. Sample `(i, j)` sits at `origin + (i·pitch, j·pitch)`.
///
/// One-dimensional scans are grids with `ny == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGrid {
    origin: Vec2,
    pitch: f64,
    nx: usize,
    ny: usize,
}

impl DetectorGrid {
    pub fn new(origin: Vec2, pitch: f64, nx: usize, ny: usize) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::validation("grid origin must be finite"));
        }
        positive_finite("grid pitch", pitch)?;
        if nx == 0 || ny == 0 {
            return Err(Error::validation(format!(
                "grid counts must be at least 1, got ({nx}, {ny})"
            )));
        }
        Ok(Self {
            origin,
            pitch,
            nx,
            ny,
        })
    }

    /// Grid of `nx × ny` samples whose center lands on `(0, 0)`.
    pub fn centered(pitch: f64, nx: usize, ny: usize) -> Result<Self> {
        let half = |n: usize| -((n - 1) as f64) * 0.5 * pitch;
        if nx == 0 || ny == 0 {
            return Err(Error::validation("grid counts must be at least 1"));
        }
        Self::new(Vec2::new(half(nx), half(ny)), pitch, nx, ny)
    }

    /// One-dimensional scan along x at height `y`.
    pub fn line(x_start: f64, pitch: f64, n: usize, y: f64) -> Result<Self> {
        Self::new(Vec2::new(x_start, y), pitch, n, 1)
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_1d(&self) -> bool {
        self.ny == 1
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + i as f64 * self.pitch,
            self.origin.y + j as f64 * self.pitch,
        )
    }

    /// Coordinate of the sample at row-major index `k`.
    #[inline]
    pub fn point(&self, k: usize) -> Vec2 {
        self.coord(k % self.nx, k / self.nx)
    }

    /// All sample coordinates in row-major order (x fastest).
    pub fn points(&self) -> Vec<Vec2> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(
            self.origin.x + (self.nx - 1) as f64 * 0.5 * self.pitch,
            self.origin.y + (self.ny - 1) as f64 * 0.5 * self.pitch,
        )
    }

    /// Far corner `origin + ((nx−1)·pitch, (ny−1)·pitch)`.
    pub fn end(&self) -> Vec2 {
        self.coord(self.nx - 1, self.ny - 1)
    }

    /// Quadrature weight of one sample: pitch for 1D grids, pitch² otherwise.
    pub fn cell_measure(&self) -> f64 {
        if self.is_1d() {
            self.pitch
        } else {
            self.pitch * self.pitch
        }
    }
}

/// Shape of the thermal source on the emitter lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceShape {
    Disk {
        diameter: f64,
    },
    Rectangle {
        width: f64,
        height: f64,
    },
    /// Emission intensity sampled at the emitter pitch, centered on the origin,
    /// row-major with x fastest.
    Bitmap {
        nx: usize,
        ny: usize,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub pos: Vec2,
    /// Local emission intensity (1 for uniform shapes).
    pub weight: f64,
}

/// A thermal source discretized on a square emitter lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    shape: SourceShape,
    emitter_pitch: f64,
}

impl SourceSpec {
    pub fn new(shape: SourceShape, emitter_pitch: f64) -> Result<Self> {
        positive_finite("emitter_pitch", emitter_pitch)?;
        let smallest = match &shape {
            SourceShape::Disk { diameter } => {
                positive_finite("disk diameter", *diameter)?;
                *diameter
            }
            SourceShape::Rectangle { width, height } => {
                positive_finite("rectangle width", *width)?;
                positive_finite("rectangle height", *height)?;
                width.min(*height)
            }
            SourceShape::Bitmap { nx, ny, values } => {
                if values.len() != nx * ny {
                    return Err(Error::validation(format!(
                        "bitmap has {} samples, expected {nx}×{ny}",
                        values.len()
                    )));
                }
                if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::validation_at(k, "bitmap intensity must be finite and >= 0"));
                }
                let (w, h) = bitmap_extent(*nx, values)
                    .ok_or_else(|| Error::validation("bitmap has no positive sample"))?;
                (w.min(h)) as f64 * emitter_pitch
            }
        };
        // Tolerate rounding in extent / pitch.
        if smallest / emitter_pitch < MIN_EMITTERS_ACROSS as f64 * (1.0 - 1e-9) {
            return Err(Error::Config(format!(
                "emitter pitch {emitter_pitch} m gives fewer than {MIN_EMITTERS_ACROSS} emitters \
                 across the smallest source dimension ({smallest} m); use a pitch of at most {} m",
                smallest / MIN_EMITTERS_ACROSS as f64
            )));
        }
        Ok(Self {
            shape,
            emitter_pitch,
        })
    }

    pub fn disk(diameter: f64, emitter_pitch: f64) -> Result<Self> {
        Self::new(SourceShape::Disk { diameter }, emitter_pitch)
    }

    pub fn rectangle(width: f64, height: f64, emitter_pitch: f64) -> Result<Self> {
        Self::new(SourceShape::Rectangle { width, height }, emitter_pitch)
    }

    pub fn shape(&self) -> &SourceShape {
        &self.shape
    }

    pub fn emitter_pitch(&self) -> f64 {
        self.emitter_pitch
    }

    /// Source size along x, the `d` of the closed-form kernels for disks and slits.
    pub fn extent_x(&self) -> f64 {
        match &self.shape {
            SourceShape::Disk { diameter } => *diameter,
            SourceShape::Rectangle { width, .. } => *width,
            SourceShape::Bitmap { nx, values, .. } => {
                bitmap_extent(*nx, values).map_or(0.0, |(w, _)| w as f64 * self.emitter_pitch)
            }
        }
    }

    /// Exact shape predicate (strict inequality at the boundary).
    pub fn contains(&self, p: Vec2) -> bool {
        match &self.shape {
            SourceShape::Disk { diameter } => {
                let r = 0.5 * diameter;
                p.norm_sqr() < r * r
            }
            SourceShape::Rectangle { width, height } => {
                p.x.abs() < 0.5 * width && p.y.abs() < 0.5 * height
            }
            SourceShape::Bitmap { nx, ny, values } => {
                let half_x = *nx as f64 * 0.5 * self.emitter_pitch;
                let half_y = *ny as f64 * 0.5 * self.emitter_pitch;
                let fi = ((p.x + half_x) / self.emitter_pitch).floor();
                let fj = ((p.y + half_y) / self.emitter_pitch).floor();
                if fi < 0.0 || fj < 0.0 || fi >= *nx as f64 || fj >= *ny as f64 {
                    return false;
                }
                values[fj as usize * nx + fi as usize] > 0.0
            }
        }
    }

    /// Emitter cell centers inside the support, row-major (x fastest).
    ///
    /// The lattice has cells of size `emitter_pitch` tiling the bounding box and
    /// is centered on the origin.
    pub fn emitters(&self) -> Vec<Emitter> {
        let p = self.emitter_pitch;
        let cells = |extent: f64| ((extent / p) - 1e-9).ceil().max(1.0) as usize;
        let (nx, ny) = match &self.shape {
            SourceShape::Disk { diameter } => (cells(*diameter), cells(*diameter)),
            SourceShape::Rectangle { width, height } => (cells(*width), cells(*height)),
            SourceShape::Bitmap { nx, ny, .. } => (*nx, *ny),
        };
        let center = |k: usize, n: usize| (k as f64 + 0.5 - n as f64 * 0.5) * p;
        let mut out = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let pos = Vec2::new(center(i, nx), center(j, ny));
                let weight = match &self.shape {
                    SourceShape::Bitmap { values, .. } => values[j * nx + i],
                    _ if self.contains(pos) => 1.0,
                    _ => 0.0,
                };
                if weight > 0.0 {
                    out.push(Emitter { pos, weight });
                }
            }
        }
        out
    }
}

/// Width and height (in samples) of the bounding box of positive bitmap values.
fn bitmap_extent(nx: usize, values: &[f64]) -> Option<(usize, usize)> {
    let mut bounds: Option<(usize, usize, usize, usize)> = None;
    for (k, _) in values.iter().enumerate().filter(|(_, v)| **v > 0.0) {
        let (i, j) = (k % nx, k / nx);
        bounds = Some(match bounds {
            None => (i, i, j, j),
            Some((x0, x1, y0, y1)) => (x0.min(i), x1.max(i), y0.min(j), y1.max(j)),
        });
    }
    bounds.map(|(x0, x1, y0, y1)| (x1 - x0 + 1, y1 - y0 + 1))
}

/// Particle statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistics {
    Boson,
    Fermion,
    Classical,
}

impl Statistics {
    pub const ALL: [Statistics; 3] = [Statistics::Boson, Statistics::Fermion, Statistics::Classical];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
            Statistics::Classical => "classical",
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boson" => Ok(Statistics::Boson),
            "fermion" => Ok(Statistics::Fermion),
            "classical" => Ok(Statistics::Classical),
            other => Err(Error::validation(format!("unknown statistics kind '{other}'"))),
        }
    }
}

/// Probability amplitudes A_{αj} for particle α ∈ {a, b} reaching detector j ∈ {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePair {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
}

impl AmplitudePair {
    pub fn new(a1: Complex64, a2: Complex64, b1: Complex64, b2: Complex64) -> Self {
        Self { a1, a2, b1, b2 }
    }

    pub fn is_finite(&self) -> bool {
        [self.a1, self.a2, self.b1, self.b2]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Exchanges the particle labels a ↔ b.
    pub fn swapped(&self) -> Self {
        Self::new(self.b1, self.b2, self.a1, self.a2)
    }
}

/// Complex amplitudes sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: DetectorGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: DetectorGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::validation_at(k, "field value is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &DetectorGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Anything with values laid out on a `DetectorGrid`.
pub trait GridValues {
    fn grid(&self) -> &DetectorGrid;
    fn values(&self) -> &[f64];
}

fn check_map(grid: &DetectorGrid, values: &[f64], stderr: &[f64]) -> Result<()> {
    if values.len() != grid.len() || stderr.len() != grid.len() {
        return Err(Error::Shape(format!(
            "map has {} values and {} stderr entries for a grid of {} samples",
            values.len(),
            stderr.len(),
            grid.len()
        )));
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::validation_at(k, "map value is not finite"));
    }
    Ok(())
}

/// Normalized g² values over a scan grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    pub scan: DetectorGrid,
    pub values: Vec<f64>,
    pub kind: Statistics,
    /// Per-point standard error; all zeros for closed-form maps.
    pub stderr: Vec<f64>,
}

impl CorrelationMap {
    pub fn new(
        scan: DetectorGrid,
        values: Vec<f64>,
        kind: Statistics,
        stderr: Vec<f64>,
    ) -> Result<Self> {
        check_map(&scan, &values, &stderr)?;
        Ok(Self {
            scan,
            values,
            kind,
            stderr,
        })
    }
}

impl GridValues for CorrelationMap {
    fn grid(&self) -> &DetectorGrid {
        &self.scan
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Reconstructed ghost image g²(ρ₁).
#[derive(Debug, Clone, PartialEq)]
pub struct GhostImage {
    pub scan: DetectorGrid,
    pub values: Vec<f64>,
    pub kind: Statistics,
    pub baseline: f64,
    /// Per-point standard error; all zeros for closed-form images.
    pub stderr: Vec<f64>,
}

impl GhostImage {
    pub fn new(
        scan: DetectorGrid,
        values: Vec<f64>,
        kind: Statistics,
        baseline: f64,
        stderr: Vec<f64>,
    ) -> Result<Self> {
        check_map(&scan, &values, &stderr)?;
        if !baseline.is_finite() {
            return Err(Error::validation("image baseline is not finite"));
        }
        Ok(Self {
            scan,
            values,
            kind,
            baseline,
            stderr,
        })
    }

    /// Rescales values, baseline and stderr by `1 / scale`.
    pub fn normalized_by(&self, scale: f64) -> GhostImage {
        GhostImage {
            scan: self.scan,
            values: self.values.iter().map(|v| v / scale).collect(),
            kind: self.kind,
            baseline: self.baseline / scale,
            stderr: self.stderr.iter().map(|v| v / scale).collect(),
        }
    }
}

impl GridValues for GhostImage {
    fn grid(&self) -> &DetectorGrid {
        &self.scan
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_rejects_non_positive() {
        assert!(Geometry::new(-1.0, 1.0, 1.0).is_err());
        assert!(Geometry::new(1.0, 0.0, 1.0).is_err());
        assert!(Geometry::new(1.0, 1.0, f64::INFINITY).is_err());
        let g = Geometry::new(780e-9, 0.91, 0.91).unwrap();
        assert!(g.balanced());
        assert!(!Geometry::new(780e-9, 0.91, 0.92).unwrap().balanced());
    }

    #[test]
    fn grid_coordinates_are_exact() {
        let g = DetectorGrid::new(Vec2::new(-3e-3, 1e-3), 0.125e-3, 49, 3).unwrap();
        for (k, p) in g.points().into_iter().enumerate() {
            let (i, j) = (k % 49, k / 49);
            let x = -3e-3 + i as f64 * 0.125e-3;
            let y = 1e-3 + j as f64 * 0.125e-3;
            assert_eq!(p.x.to_bits(), x.to_bits());
            assert_eq!(p.y.to_bits(), y.to_bits());
            assert_eq!(g.index(i, j), k);
        }
    }

    #[test]
    fn centered_grid_is_symmetric() {
        let g = DetectorGrid::centered(0.1e-3, 101, 31).unwrap();
        assert_eq!(g.center(), Vec2::ZERO);
        assert_eq!(g.origin().x, -g.end().x);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(DetectorGrid::new(Vec2::ZERO, 0.0, 3, 3).is_err());
        assert!(DetectorGrid::new(Vec2::ZERO, 1.0, 0, 3).is_err());
        assert!(DetectorGrid::new(Vec2::new(f64::NAN, 0.0), 1.0, 1, 1).is_err());
    }

    #[test]
    fn coarse_pitch_names_required_pitch() {
        let err = SourceSpec::disk(0.36e-3, 0.05e-3).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("0.000045"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SourceSpec::disk(0.36e-3, 0.045e-3).is_ok());
    }

    #[test]
    fn disk_emitter_count_matches_lattice_count() {
        let s = SourceSpec::disk(0.36e-3, 0.02e-3).unwrap();
        // 18×18 cell lattice, centers at half-integer multiples of the pitch,
        // counted independently in integer arithmetic: (2i+1-18)² + (2j+1-18)² < 18².
        let mut count = 0;
        for i in 0..18i64 {
            for j in 0..18i64 {
                let (a, b) = (2 * i + 1 - 18, 2 * j + 1 - 18);
                if a * a + b * b < 18 * 18 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 256);
        let emitters = s.emitters();
        assert_eq!(emitters.len(), count);
        assert!(emitters.iter().all(|e| s.contains(e.pos) && e.weight == 1.0));
    }

    #[test]
    fn rectangle_emitters_fill_the_box() {
        let s = SourceSpec::rectangle(0.36e-3, 0.16e-3, 0.02e-3).unwrap();
        let e = s.emitters();
        assert_eq!(e.len(), 18 * 8);
        let max_x = e.iter().map(|e| e.pos.x).fold(f64::MIN, f64::max);
        assert!((max_x - 8.5 * 0.02e-3).abs() < 1e-15);
    }

    #[test]
    fn bitmap_source_weights_follow_samples() {
        let mut values = vec![0.0; 10 * 10];
        for j in 1..9 {
            for i in 1..9 {
                values[j * 10 + i] = (i + j) as f64;
            }
        }
        let s = SourceSpec::new(
            SourceShape::Bitmap {
                nx: 10,
                ny: 10,
                values: values.clone(),
            },
            1e-5,
        )
        .unwrap();
        let e = s.emitters();
        assert_eq!(e.len(), 64);
        assert!(e.iter().all(|e| s.contains(e.pos)));
        let total: f64 = e.iter().map(|e| e.weight).sum();
        assert_eq!(total, values.iter().sum::<f64>());
        assert!(SourceSpec::new(
            SourceShape::Bitmap {
                nx: 2,
                ny: 1,
                values: vec![0.0, 0.0]
            },
            1e-5
        )
        .is_err());
    }

    #[test]
    fn statistics_round_trip_names() {
        for k in Statistics::ALL {
            assert_eq!(k.as_str().parse::<Statistics>().unwrap(), k);
        }
        assert!("anyon".parse::<Statistics>().is_err());
    }
}
