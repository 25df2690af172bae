//! Closed-form correlation kernels and the ghost images they predict.
//!
//! With `u = π·d·|Δ|/(λl)` and `K(u) = somb²(u)` (disk source) or `sinc²(u)`
//! (slit source), the normalized second-order coherence is `1 − K` for
//! thermal fermions, `1 + K` for thermal bosons and `1` for classical
//! particles. Ghost images integrate these kernels against |T(ρ₂)|² with
//! midpoint quadrature on the mask grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mask::TransmissionMask;
use crate::model::{DetectorGrid, GhostImage, Statistics, Vec2};
use crate::numeric::NeumaierSum;
use crate::parallel::Executor;
use crate::special::{sinc, somb_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimensionality {
    /// Slit source; kernel `sinc²`, evaluated on the x separation.
    OneD,
    /// Disk source; kernel `somb²`, evaluated on |ρ₁ − ρ₂|.
    TwoD,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    source_extent: f64,
    wavelength: f64,
    distance: f64,
    dimensionality: Dimensionality,
}

impl KernelParams {
    pub fn new(
        source_extent: f64,
        wavelength: f64,
        distance: f64,
        dimensionality: Dimensionality,
    ) -> Result<Self> {
        for (name, v) in [
            ("source_extent", source_extent),
            ("wavelength", wavelength),
            ("distance", distance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            source_extent,
            wavelength,
            distance,
            dimensionality,
        })
    }

    pub fn source_extent(&self) -> f64 {
        self.source_extent
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn dimensionality(&self) -> Dimensionality {
        self.dimensionality
    }

    /// Scale factor `πd/(λl)` mapping a separation to the kernel argument.
    pub fn argument_scale(&self) -> f64 {
        PI * self.source_extent / (self.wavelength * self.distance)
    }

    /// Separation of the first kernel zero in the 1D case, `λl/d`.
    pub fn first_zero(&self) -> f64 {
        self.wavelength * self.distance / self.source_extent
    }

    /// K(u) for separation magnitude `delta`.
    #[inline]
    pub fn kernel(&self, delta: f64) -> f64 {
        let u = self.argument_scale() * delta;
        match self.dimensionality {
            Dimensionality::OneD => sinc(u).powi(2),
            Dimensionality::TwoD => somb_unchecked(u).powi(2),
        }
    }

    /// Separation entering the kernel for two transverse points.
    #[inline]
    pub fn separation(&self, a: Vec2, b: Vec2) -> f64 {
        match self.dimensionality {
            Dimensionality::OneD => (a.x - b.x).abs(),
            Dimensionality::TwoD => (a - b).norm(),
        }
    }
}

#[inline]
fn g2_from_kernel(k: f64, kind: Statistics) -> f64 {
    match kind {
        Statistics::Fermion => 1.0 - k,
        Statistics::Boson => 1.0 + k,
        Statistics::Classical => 1.0,
    }
}

/// Normalized g² at separation `delta` (scalar |Δx| in 1D, |Δρ| in 2D).
pub fn g2_analytic(delta: f64, kind: Statistics, params: &KernelParams) -> f64 {
    g2_from_kernel(params.kernel(delta), kind)
}

/// Ghost image `Σ_{ρ₂} g²(ρ₁ − ρ₂)·|T(ρ₂)|²·Δρ₂` on the scan grid.
///
/// The classical image is flat at `Σ|T|²Δρ₂`, which is also reported as the
/// baseline for every kind.
pub fn ghost_image_analytic(
    mask: &TransmissionMask,
    kind: Statistics,
    params: &KernelParams,
    scan: &DetectorGrid,
    executor: &Executor,
) -> Result<GhostImage> {
    mask.require_support()?;
    let grid = mask.grid();
    let cell = grid.cell_measure();
    let support: Vec<(Vec2, f64)> = mask
        .support()
        .into_iter()
        .map(|k| (grid.point(k), mask.intensity(k) * cell))
        .collect();
    let classical: f64 = support
        .iter()
        .map(|(_, w)| *w)
        .collect::<NeumaierSum>()
        .value();
    let values = if kind == Statistics::Classical {
        vec![classical; scan.len()]
    } else {
        executor.ordered_map(scan.len(), |k| {
            let rho1 = scan.point(k);
            support
                .iter()
                .map(|&(rho2, w)| g2_analytic(params.separation(rho1, rho2), kind, params) * w)
                .collect::<NeumaierSum>()
                .value()
        })
    };
    GhostImage::new(*scan, values, kind, classical, vec![0.0; scan.len()])
}

/// Delta-kernel limit `c₁ − |T(ρ₁)|²` on the mask grid, `c₁ = Σ_{S_Obj} Δρ₂`.
///
/// `c₁` carries area units while |T|² is dimensionless; only the shape of this
/// map is meaningful.
pub fn ghost_image_delta_limit(mask: &TransmissionMask) -> Result<GhostImage> {
    mask.require_support()?;
    let grid = *mask.grid();
    let cell = grid.cell_measure();
    let c1 = mask.support_len() as f64 * cell;
    let values = (0..grid.len()).map(|k| c1 - mask.intensity(k)).collect();
    GhostImage::new(grid, values, Statistics::Fermion, c1, vec![0.0; grid.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{make_double_pinhole_mask, make_mask_from_bitmap};

    fn reference_1d() -> KernelParams {
        KernelParams::new(0.36e-3, 780e-9, 0.910, Dimensionality::OneD).unwrap()
    }

    #[test]
    fn zero_separation_values() {
        for p in [reference_1d(), KernelParams::new(0.36e-3, 780e-9, 0.910, Dimensionality::TwoD).unwrap()] {
            assert_eq!(g2_analytic(0.0, Statistics::Fermion, &p), 0.0);
            assert_eq!(g2_analytic(0.0, Statistics::Boson, &p), 2.0);
            assert_eq!(g2_analytic(0.0, Statistics::Classical, &p), 1.0);
        }
    }

    #[test]
    fn first_sinc_zero() {
        let p = reference_1d();
        // λl/d = 780e-9·0.910/0.36e-3
        assert!((p.first_zero() - 1.971_666_666_666_666_7e-3).abs() < 1e-15);
        assert!((g2_analytic(p.first_zero(), Statistics::Fermion, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KernelParams::new(0.0, 1.0, 1.0, Dimensionality::OneD).is_err());
        assert!(KernelParams::new(1.0, -1.0, 1.0, Dimensionality::TwoD).is_err());
    }

    #[test]
    fn classical_image_is_flat_mask_integral() {
        let grid = DetectorGrid::centered(0.1e-3, 91, 31).unwrap();
        let mask = make_double_pinhole_mask(grid, 2e-3, 5e-3).unwrap();
        let p = KernelParams::new(0.36e-3, 780e-9, 0.910, Dimensionality::TwoD).unwrap();
        let scan = DetectorGrid::line(-5e-3, 0.5e-3, 21, 0.0).unwrap();
        let img = ghost_image_analytic(&mask, Statistics::Classical, &p, &scan, &Executor::sequential()).unwrap();
        let area = mask.support_len() as f64 * 1e-8;
        assert!(img.values.iter().all(|v| (v - area).abs() < 1e-18));
        assert_eq!(img.baseline, img.values[0]);
    }

    #[test]
    fn empty_support_is_domain_error() {
        let grid = DetectorGrid::centered(1e-4, 5, 5).unwrap();
        let mask = make_mask_from_bitmap(grid, vec![0.0; 25]).unwrap();
        let p = reference_1d();
        assert!(matches!(
            ghost_image_analytic(&mask, Statistics::Fermion, &p, &grid, &Executor::sequential()),
            Err(Error::Domain(_))
        ));
        assert!(ghost_image_delta_limit(&mask).is_err());
    }

    #[test]
    fn delta_limit_uniform_mask() {
        let grid = DetectorGrid::centered(1e-3, 4, 4).unwrap();
        let mask = make_mask_from_bitmap(grid, vec![1.0; 16]).unwrap();
        let img = ghost_image_delta_limit(&mask).unwrap();
        let area = 16.0 * 1e-6;
        assert_eq!(img.baseline, area);
        assert!(img.values.iter().all(|v| *v == area - 1.0));
    }

    #[test]
    fn delta_limit_double_pinhole_is_background_minus_indicator() {
        let grid = DetectorGrid::centered(0.1e-3, 91, 31).unwrap();
        let mask = make_double_pinhole_mask(grid, 2e-3, 5e-3).unwrap();
        let img = ghost_image_delta_limit(&mask).unwrap();
        for (v, t) in img.values.iter().zip(mask.values()) {
            assert_eq!(*v, img.baseline - t * t);
        }
    }
}
