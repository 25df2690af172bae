//! Object transmission masks.

use crate::error::{Error, Result};
use crate::model::{DetectorGrid, GridValues, Vec2};

/// Amplitude transmission |T(ρ₂)| sampled on the object-plane grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMask {
    grid: DetectorGrid,
    values: Vec<f64>,
}

impl TransmissionMask {
    pub fn grid(&self) -> &DetectorGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples with nonzero transmission.
    pub fn support_len(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    /// Row-major indices of the support, in grid order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&k| self.values[k] > 0.0)
            .collect()
    }

    pub(crate) fn require_support(&self) -> Result<()> {
        if self.support_len() == 0 {
            Err(Error::Domain(
                "transmission mask is opaque everywhere (empty object support)".into(),
            ))
        } else {
            Ok(())
        }
    }

    /// |T|² at sample `k`.
    #[inline]
    pub fn intensity(&self, k: usize) -> f64 {
        self.values[k] * self.values[k]
    }
}

impl GridValues for TransmissionMask {
    fn grid(&self) -> &DetectorGrid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Wraps sampled amplitude transmission values verbatim.
pub fn make_mask_from_bitmap(grid: DetectorGrid, samples: Vec<f64>) -> Result<TransmissionMask> {
    if samples.len() != grid.len() {
        return Err(Error::validation(format!(
            "mask has {} samples, grid expects {}×{} = {}",
            samples.len(),
            grid.nx(),
            grid.ny(),
            grid.len()
        )));
    }
    if let Some(k) = samples.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::validation_at(
            k,
            format!("transmission {} outside [0, 1]", samples[k]),
        ));
    }
    Ok(TransmissionMask {
        grid,
        values: samples,
    })
}

/// Two transmissive disks centered at (±separation/2, 0) relative to the grid center.
///
/// A sample belongs to a disk when its center lies strictly inside it; samples
/// within rounding distance of a rim count as outside.
pub fn make_double_pinhole_mask(
    grid: DetectorGrid,
    diameter: f64,
    separation: f64,
) -> Result<TransmissionMask> {
    if !(diameter.is_finite() && diameter > 0.0) {
        return Err(Error::validation(format!(
            "pinhole diameter must be positive, got {diameter}"
        )));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::validation(format!(
            "pinhole separation must be non-negative, got {separation}"
        )));
    }
    let need_x = separation + diameter;
    let have_x = (grid.nx() - 1) as f64 * grid.pitch();
    let have_y = (grid.ny() - 1) as f64 * grid.pitch();
    if have_x < need_x || (!grid.is_1d() && have_y < diameter) {
        return Err(Error::Config(format!(
            "object grid spans {have_x} m × {have_y} m but the double pinhole needs at least \
             {need_x} m × {diameter} m"
        )));
    }
    let c = grid.center();
    let r2 = 0.25 * diameter * diameter * (1.0 - 1e-9);
    let centers = [
        Vec2::new(c.x - 0.5 * separation, c.y),
        Vec2::new(c.x + 0.5 * separation, c.y),
    ];
    let values = grid
        .points()
        .into_iter()
        .map(|p| {
            if centers.iter().any(|&q| (p - q).norm_sqr() < r2) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(TransmissionMask { grid, values })
}
