//! Paraxial Fresnel propagation by direct quadrature over emitters.
//!
//! The propagator is the bare quadratic phase `exp(iπ|ρ − s|²/(λl))`. The
//! constant prefactor `exp(ikl)/(iλl)` is omitted because every reported
//! quantity is a normalized correlation in which it cancels.
//!
//! Field sums run over emitters in index order with compensated accumulation,
//! so a given (realization, target) pair always produces the same bits.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ComplexField, DetectorGrid, Geometry, Vec2};
use crate::numeric::ComplexSum;
use crate::speckle::SourceRealization;

/// Transverse offsets beyond this fraction of the distance trigger a paraxial warning.
pub const PARAXIAL_WARN_RATIO: f64 = 0.1;

/// `exp(iπ|det_pt − source_pt|²/(λ·distance))`.
pub fn propagator_amplitude(
    source_pt: Vec2,
    det_pt: Vec2,
    distance: f64,
    wavelength: f64,
) -> Result<Complex64> {
    check_lengths(distance, wavelength)?;
    let r2 = (det_pt - source_pt).norm_sqr();
    if r2 > (PARAXIAL_WARN_RATIO * distance).powi(2) {
        log::warn!(
            "transverse offset {} m exceeds {PARAXIAL_WARN_RATIO} of the propagation distance {distance} m",
            r2.sqrt()
        );
    }
    Ok(phasor(r2, PI / (wavelength * distance)))
}

#[inline]
fn phasor(r2: f64, phase_scale: f64) -> Complex64 {
    let (s, c) = (phase_scale * r2).sin_cos();
    Complex64::new(c, s)
}

fn check_lengths(distance: f64, wavelength: f64) -> Result<()> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::Domain(format!(
            "propagation distance must be positive, got {distance}"
        )));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneTarget {
    /// Source → D₁ plane, distance l₁.
    Reference,
    /// Source → object plane, distance l₂.
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPlan {
    pub geometry: Geometry,
    pub which: PlaneTarget,
    pub target: DetectorGrid,
}

impl PropagationPlan {
    pub fn new(geometry: Geometry, which: PlaneTarget, target: DetectorGrid) -> Self {
        Self {
            geometry,
            which,
            target,
        }
    }

    pub fn distance(&self) -> f64 {
        match self.which {
            PlaneTarget::Reference => self.geometry.dist_reference(),
            PlaneTarget::Object => self.geometry.dist_object(),
        }
    }
}

/// Field of one realization on the plan's target grid.
pub fn propagate(realization: &SourceRealization, plan: &PropagationPlan) -> Result<ComplexField> {
    if realization.is_empty() {
        return Err(Error::Domain("cannot propagate an empty realization".into()));
    }
    if realization.amplitudes.len() != realization.positions.len() {
        return Err(Error::Shape(format!(
            "realization has {} positions but {} amplitudes",
            realization.positions.len(),
            realization.amplitudes.len()
        )));
    }
    let distance = plan.distance();
    let wavelength = plan.geometry.wavelength();
    let mut values = Vec::with_capacity(plan.target.len());
    for det in plan.target.points() {
        let mut acc = ComplexSum::new();
        for (&pos, &amp) in realization.positions.iter().zip(&realization.amplitudes) {
            acc.add(amp * propagator_amplitude(pos, det, distance, wavelength)?);
        }
        values.push(acc.value());
    }
    ComplexField::new(plan.target, values)
}

/// Precomputed propagator matrix between a fixed emitter set and fixed targets.
///
/// Monte Carlo ensembles reuse one emitter lattice, so the phases only need to
/// be evaluated once. `apply` performs the same ordered compensated sum as
/// [`propagate`] and yields identical bits.
#[derive(Debug, Clone)]
pub struct FieldKernel {
    n_sources: usize,
    n_targets: usize,
    // Row-major: one row of `n_sources` phasors per target.
    matrix: Vec<Complex64>,
}

impl FieldKernel {
    pub fn new(sources: &[Vec2], targets: &[Vec2], distance: f64, wavelength: f64) -> Result<Self> {
        check_lengths(distance, wavelength)?;
        if sources.is_empty() {
            return Err(Error::Domain("field kernel needs at least one emitter".into()));
        }
        let scale = PI / (wavelength * distance);
        let mut max_r2: f64 = 0.0;
        let mut matrix = Vec::with_capacity(sources.len() * targets.len());
        for &t in targets {
            for &s in sources {
                let r2 = (t - s).norm_sqr();
                max_r2 = max_r2.max(r2);
                matrix.push(phasor(r2, scale));
            }
        }
        if max_r2 > (PARAXIAL_WARN_RATIO * distance).powi(2) {
            log::warn!(
                "largest transverse offset {} m exceeds {PARAXIAL_WARN_RATIO} of the propagation distance {distance} m",
                max_r2.sqrt()
            );
        }
        Ok(Self {
            n_sources: sources.len(),
            n_targets: targets.len(),
            matrix,
        })
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    /// Propagator phasor from source `s` to target `t`.
    #[inline]
    pub fn entry(&self, t: usize, s: usize) -> Complex64 {
        self.matrix[t * self.n_sources + s]
    }

    /// Writes the field at every target into `out`.
    pub fn apply(&self, amplitudes: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(amplitudes.len(), self.n_sources, "amplitude count");
        assert_eq!(out.len(), self.n_targets, "output length");
        for (row, o) in self.matrix.chunks_exact(self.n_sources).zip(out.iter_mut()) {
            let mut acc = ComplexSum::new();
            for (&k, &a) in row.iter().zip(amplitudes) {
                acc.add(a * k);
            }
            *o = acc.value();
        }
    }

    /// Intensities |field|² at every target.
    pub fn intensities(&self, amplitudes: &[Complex64], scratch: &mut [Complex64], out: &mut [f64]) {
        self.apply(amplitudes, scratch);
        for (o, z) in out.iter_mut().zip(scratch.iter()) {
            *o = z.norm_sqr();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speckle::{sample_realization, AmplitudeMode, SeedSpec};
    use crate::model::SourceSpec;

    const LAMBDA: f64 = 780e-9;
    const L: f64 = 0.910;

    #[test]
    fn zero_offset_is_unity() {
        let p = Vec2::new(1e-3, -2e-3);
        assert_eq!(propagator_amplitude(p, p, L, LAMBDA).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn offset_sqrt_lambda_l_gives_minus_one() {
        let d = (LAMBDA * L).sqrt();
        let z = propagator_amplitude(Vec2::ZERO, Vec2::new(d, 0.0), L, LAMBDA).unwrap();
        assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn one_mm_offset_phase() {
        // π·(1e-3)²/(780e-9·0.910) evaluated with 50-digit arithmetic.
        let expected = 4.426_025_152_986_466;
        let z = propagator_amplitude(Vec2::ZERO, Vec2::new(1e-3, 0.0), L, LAMBDA).unwrap();
        assert!((z - Complex64::from_polar(1.0, expected)).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_lengths() {
        assert!(matches!(
            propagator_amplitude(Vec2::ZERO, Vec2::ZERO, 0.0, LAMBDA),
            Err(Error::Domain(_))
        ));
        assert!(propagator_amplitude(Vec2::ZERO, Vec2::ZERO, L, -1.0).is_err());
    }

    fn plan(target: DetectorGrid) -> PropagationPlan {
        PropagationPlan::new(Geometry::balanced_at(LAMBDA, L).unwrap(), PlaneTarget::Reference, target)
    }

    #[test]
    fn single_emitter_gives_unit_modulus_field() {
        let r = SourceRealization {
            positions: vec![Vec2::new(1e-5, 0.0)],
            amplitudes: vec![Complex64::new(1.0, 0.0)],
            mode: AmplitudeMode::UnitPhasor,
        };
        let f = propagate(&r, &plan(DetectorGrid::centered(0.1e-3, 21, 5).unwrap())).unwrap();
        assert!(f.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn two_emitters_make_young_fringes() {
        let d = 0.3e-3;
        let r = SourceRealization {
            positions: vec![Vec2::new(-d / 2.0, 0.0), Vec2::new(d / 2.0, 0.0)],
            amplitudes: vec![Complex64::new(1.0, 0.0); 2],
            mode: AmplitudeMode::UnitPhasor,
        };
        let grid = DetectorGrid::line(-5e-3, 0.05e-3, 201, 0.0).unwrap();
        let f = propagate(&r, &plan(grid)).unwrap();
        for (p, z) in grid.points().into_iter().zip(f.values()) {
            let expected = 2.0 + 2.0 * (2.0 * PI * d * p.x / (LAMBDA * L)).cos();
            assert!((z.norm_sqr() - expected).abs() < 1e-9, "{} vs {expected}", z.norm_sqr());
        }
    }

    #[test]
    fn empty_realization_is_rejected() {
        let r = SourceRealization {
            positions: vec![],
            amplitudes: vec![],
            mode: AmplitudeMode::UnitPhasor,
        };
        assert!(matches!(
            propagate(&r, &plan(DetectorGrid::centered(1e-4, 3, 1).unwrap())),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn kernel_matches_direct_quadrature_bitwise() {
        let s = SourceSpec::disk(0.36e-3, 0.02e-3).unwrap();
        let r = sample_realization(&s, SeedSpec::new(11, 4), AmplitudeMode::GaussianField).unwrap();
        let grid = DetectorGrid::centered(0.25e-3, 9, 7).unwrap();
        let p = plan(grid);
        let direct = propagate(&r, &p).unwrap();
        let k = FieldKernel::new(&r.positions, &grid.points(), L, LAMBDA).unwrap();
        let mut out = vec![Complex64::default(); grid.len()];
        k.apply(&r.amplitudes, &mut out);
        assert_eq!(direct.values(), out.as_slice());
    }

    #[test]
    fn mean_intensity_is_flat_across_detector_span() {
        let s = SourceSpec::disk(0.36e-3, 0.02e-3).unwrap();
        let emitters = s.emitters();
        let positions: Vec<Vec2> = emitters.iter().map(|e| e.pos).collect();
        let grid = DetectorGrid::line(-3e-3, 0.25e-3, 25, 0.0).unwrap();
        let k = FieldKernel::new(&positions, &grid.points(), L, LAMBDA).unwrap();
        let mut scratch = vec![Complex64::default(); grid.len()];
        let mut inten = vec![0.0; grid.len()];
        let mut mean = vec![0.0; grid.len()];
        let n = 5000;
        for i in 0..n {
            let a = crate::speckle::sample_amplitudes(&emitters, SeedSpec::new(77, i), AmplitudeMode::GaussianField);
            k.intensities(&a, &mut scratch, &mut inten);
            for (m, v) in mean.iter_mut().zip(&inten) {
                *m += v / n as f64;
            }
        }
        let avg = mean.iter().sum::<f64>() / mean.len() as f64;
        for m in &mean {
            assert!((m / avg - 1.0).abs() < 0.05, "{m} vs {avg}");
        }
    }
}
