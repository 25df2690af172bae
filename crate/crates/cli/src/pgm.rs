//! 16-bit binary PGM images with a text sidecar holding the value mapping.
//!
//! Samples are written in grid order (x fastest, first image row = lowest y),
//! big-endian. A sample `q` maps back to `min + q·scale`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use g2ghost::GhostImage;

use crate::csv::fmt_f64;
use crate::error::{CliError, CliResult};

pub const MAX_LEVEL: u16 = 65_535;
/// Level used for every sample of a constant image.
pub const MID_LEVEL: u16 = 32_768;

/// Path of the sidecar for `pgm`: the same name with `.txt` appended.
pub fn sidecar_path(pgm: &Path) -> PathBuf {
    let mut s = pgm.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub levels: Vec<u16>,
    pub min: f64,
    pub max: f64,
    /// `(max − min) / 65535`, or 0 for a constant image.
    pub scale: f64,
    pub constant: bool,
}

pub fn quantize(values: &[f64]) -> Quantized {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range <= 0.0 {
        return Quantized {
            levels: vec![MID_LEVEL; values.len()],
            min,
            max,
            scale: 0.0,
            constant: true,
        };
    }
    let levels = values
        .iter()
        .map(|v| ((v - min) / range * MAX_LEVEL as f64).round().clamp(0.0, MAX_LEVEL as f64) as u16)
        .collect();
    Quantized {
        levels,
        min,
        max,
        scale: range / MAX_LEVEL as f64,
        constant: false,
    }
}

pub fn encode_pgm(nx: usize, ny: usize, levels: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{nx} {ny}\n{MAX_LEVEL}\n").into_bytes();
    out.reserve(levels.len() * 2);
    for q in levels {
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn sidecar_text(image: &GhostImage, q: &Quantized) -> String {
    let g = &image.scan;
    let mut s = String::new();
    let _ = writeln!(s, "format=P5 16-bit big-endian, row-major, first row at lowest y");
    let _ = writeln!(s, "kind={}", image.kind);
    let _ = writeln!(s, "baseline={}", fmt_f64(image.baseline));
    let _ = writeln!(s, "nx={}", g.nx());
    let _ = writeln!(s, "ny={}", g.ny());
    let _ = writeln!(s, "origin_x={}", fmt_f64(g.origin().x));
    let _ = writeln!(s, "origin_y={}", fmt_f64(g.origin().y));
    let _ = writeln!(s, "pitch={}", fmt_f64(g.pitch()));
    let _ = writeln!(s, "min={}", fmt_f64(q.min));
    let _ = writeln!(s, "max={}", fmt_f64(q.max));
    let _ = writeln!(s, "scale={}", fmt_f64(q.scale));
    let _ = writeln!(s, "value=min+level*scale");
    let _ = writeln!(s, "constant={}", q.constant);
    s
}

/// Writes `path` and its sidecar; returns both paths.
pub fn write_image_pgm(image: &GhostImage, path: &Path) -> CliResult<[PathBuf; 2]> {
    let q = quantize(&image.values);
    let bytes = encode_pgm(image.scan.nx(), image.scan.ny(), &q.levels);
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    let side = sidecar_path(path);
    std::fs::write(&side, sidecar_text(image, &q)).map_err(|e| CliError::io(&side, e))?;
    Ok([path.to_path_buf(), side])
}
