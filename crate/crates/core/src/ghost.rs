//! Monte Carlo ghost imaging: reference arm, bucket detector, correlation.

use num_complex::Complex64;
use rand::Rng;

use crate::correlators::{pair_values, CrossMoments, Estimator, RatioMoments, SharedMoments};
use crate::error::{Error, Result};
use crate::mask::TransmissionMask;
use crate::model::{ComplexField, DetectorGrid, Geometry, GhostImage, SourceSpec, Statistics, Vec2};
use crate::numeric::NeumaierSum;
use crate::parallel::Executor;
use crate::propagation::FieldKernel;
use crate::speckle::{draw_amplitude, sample_amplitudes, AmplitudeMode, SeedSpec};
use crate::model::AmplitudePair;

pub const MIN_GHOST_REALIZATIONS: usize = 500;
pub const MIN_GHOST_PAIRS: usize = 10_000;

/// Reference-arm scanning step used by default (0.125 mm).
pub const DEFAULT_SCAN_PITCH: f64 = 0.125e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GhostConfig {
    pub source: SourceSpec,
    pub geometry: Geometry,
    pub mask: TransmissionMask,
    /// ρ₁ positions of the scanning detector D₁.
    pub reference_scan: DetectorGrid,
    pub ensemble_size: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl GhostConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.require_balanced()?;
        self.mask.require_support()?;
        let min = match self.estimator {
            Estimator::Intensity => MIN_GHOST_REALIZATIONS,
            Estimator::AmplitudePair => MIN_GHOST_PAIRS,
        };
        if self.ensemble_size < min {
            return Err(Error::Config(format!(
                "ensemble_size {} is below the minimum of {min} for the {:?} estimator",
                self.ensemble_size, self.estimator
            )));
        }
        Ok(())
    }
}

/// Total bucket-detector signal for one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketSample {
    pub value: f64,
}

/// `B = Σ |field(ρ₂)|²·|T(ρ₂)|²·Δρ₂` in grid order.
pub fn bucket_signal(object_field: &ComplexField, mask: &TransmissionMask) -> Result<BucketSample> {
    if object_field.grid() != mask.grid() {
        return Err(Error::Shape("object field and mask are sampled on different grids".into()));
    }
    let cell = mask.grid().cell_measure();
    let value = object_field
        .values()
        .iter()
        .enumerate()
        .map(|(k, z)| z.norm_sqr() * mask.intensity(k) * cell)
        .collect::<NeumaierSum>()
        .value();
    Ok(BucketSample { value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhostImages {
    pub boson: GhostImage,
    pub fermion: GhostImage,
    pub classical: GhostImage,
}

impl GhostImages {
    pub fn get(&self, kind: Statistics) -> &GhostImage {
        match kind {
            Statistics::Boson => &self.boson,
            Statistics::Fermion => &self.fermion,
            Statistics::Classical => &self.classical,
        }
    }
}

/// Normalized ghost images (baseline 1) for all three statistics.
///
/// *Intensity estimator*: realization `n` (seed stream `(seed, n)`) gives
/// reference intensities I₁(ρ₁) and a bucket value B; the bosonic image is
/// `⟨I₁B⟩/(⟨I₁⟩⟨B⟩)`, the classical image is identically 1 and the fermionic
/// image is `2 − boson`.
///
/// *Amplitude-pair estimator*: each sample draws two emitters and, for every
/// ρ₁, integrates the three coincidence probabilities over the mask support
/// weighted by `|T(ρ₂)|²Δρ₂`; images are the ratios of those means to the
/// classical mean.
pub fn run_ghost_imaging(config: &GhostConfig, executor: &Executor) -> Result<GhostImages> {
    config.validate()?;
    let emitters = config.source.emitters();
    let positions: Vec<Vec2> = emitters.iter().map(|e| e.pos).collect();
    let geom = &config.geometry;
    let scan = config.reference_scan;
    let scan_pts = scan.points();
    let mask_grid = config.mask.grid();
    let support = config.mask.support();
    let support_pts: Vec<Vec2> = support.iter().map(|&k| mask_grid.point(k)).collect();
    let cell = mask_grid.cell_measure();
    let weights: Vec<f64> = support.iter().map(|&k| config.mask.intensity(k) * cell).collect();
    let to_ref = FieldKernel::new(&positions, &scan_pts, geom.dist_reference(), geom.wavelength())?;
    let to_obj = FieldKernel::new(&positions, &support_pts, geom.dist_object(), geom.wavelength())?;
    let n_scan = scan.len();

    match config.estimator {
        Estimator::Intensity => {
            let blocks = executor.map_blocks(config.ensemble_size, |range| {
                let mut acc = vec![CrossMoments::default(); n_scan];
                let mut shared = SharedMoments::default();
                let mut ref_field = vec![Complex64::default(); n_scan];
                let mut i1 = vec![0.0; n_scan];
                let mut obj_field = vec![Complex64::default(); support_pts.len()];
                for n in range {
                    let amps = sample_amplitudes(&emitters, SeedSpec::new(config.seed, n as u64), AmplitudeMode::GaussianField);
                    to_ref.intensities(&amps, &mut ref_field, &mut i1);
                    to_obj.apply(&amps, &mut obj_field);
                    let bucket = obj_field
                        .iter()
                        .zip(&weights)
                        .map(|(z, w)| z.norm_sqr() * w)
                        .collect::<NeumaierSum>()
                        .value();
                    shared.add(bucket);
                    for (m, &x) in acc.iter_mut().zip(&i1) {
                        m.add(x, bucket);
                    }
                }
                (acc, shared)
            });
            let mut total = vec![CrossMoments::default(); n_scan];
            let mut shared = SharedMoments::default();
            for (acc, sh) in &blocks {
                shared.merge(sh);
                for (t, m) in total.iter_mut().zip(acc) {
                    t.merge(m);
                }
            }
            let mut boson = Vec::with_capacity(n_scan);
            let mut boson_err = Vec::with_capacity(n_scan);
            let mut classical_err = Vec::with_capacity(n_scan);
            for m in &total {
                let (v, e, ce) = m.normalized(&shared, config.ensemble_size)?;
                boson.push(v);
                boson_err.push(e);
                classical_err.push(ce);
            }
            let fermion: Vec<f64> = boson.iter().map(|b| 2.0 * 1.0 - b).collect();
            let fermion_err: Vec<f64> = boson_err
                .iter()
                .zip(&classical_err)
                .map(|(eb, ec)| (eb * eb + 4.0 * ec * ec).sqrt())
                .collect();
            Ok(GhostImages {
                boson: GhostImage::new(scan, boson, Statistics::Boson, 1.0, boson_err)?,
                fermion: GhostImage::new(scan, fermion, Statistics::Fermion, 1.0, fermion_err)?,
                classical: GhostImage::new(scan, vec![1.0; n_scan], Statistics::Classical, 1.0, classical_err)?,
            })
        }
        Estimator::AmplitudePair => {
            let blocks = executor.map_blocks(config.ensemble_size, |range| {
                let mut acc = vec![[RatioMoments::default(); 2]; n_scan];
                let mut obj_a = vec![Complex64::default(); support_pts.len()];
                let mut obj_b = vec![Complex64::default(); support_pts.len()];
                for n in range {
                    let mut rng = SeedSpec::new(config.seed, n as u64).rng();
                    let a = rng.random_range(0..emitters.len());
                    let b = rng.random_range(0..emitters.len());
                    let amp_a = draw_amplitude(&mut rng, emitters[a].weight, AmplitudeMode::UnitPhasor);
                    let amp_b = draw_amplitude(&mut rng, emitters[b].weight, AmplitudeMode::UnitPhasor);
                    for s in 0..support_pts.len() {
                        obj_a[s] = amp_a * to_obj.entry(s, a);
                        obj_b[s] = amp_b * to_obj.entry(s, b);
                    }
                    for (t, slot) in acc.iter_mut().enumerate() {
                        let a1 = amp_a * to_ref.entry(t, a);
                        let b1 = amp_b * to_ref.entry(t, b);
                        let mut sums = [NeumaierSum::new(); 3];
                        for s in 0..support_pts.len() {
                            let v = pair_values(&AmplitudePair::new(a1, obj_a[s], b1, obj_b[s]));
                            for (acc_k, v_k) in sums.iter_mut().zip(v) {
                                acc_k.add(v_k * weights[s]);
                            }
                        }
                        let [boson, fermion, classical] = sums.map(|s| s.value());
                        slot[0].add(boson, classical);
                        slot[1].add(fermion, classical);
                    }
                }
                acc
            });
            let mut total = vec![[RatioMoments::default(); 2]; n_scan];
            for block in &blocks {
                for (t, m) in total.iter_mut().zip(block) {
                    t[0].merge(&m[0]);
                    t[1].merge(&m[1]);
                }
            }
            let mut boson = (Vec::with_capacity(n_scan), Vec::with_capacity(n_scan));
            let mut fermion = (Vec::with_capacity(n_scan), Vec::with_capacity(n_scan));
            for m in &total {
                let (v, e) = m[0].ratio(config.ensemble_size)?;
                boson.0.push(v);
                boson.1.push(e);
                let (v, e) = m[1].ratio(config.ensemble_size)?;
                fermion.0.push(v);
                fermion.1.push(e);
            }
            Ok(GhostImages {
                boson: GhostImage::new(scan, boson.0, Statistics::Boson, 1.0, boson.1)?,
                fermion: GhostImage::new(scan, fermion.0, Statistics::Fermion, 1.0, fermion.1)?,
                classical: GhostImage::new(scan, vec![1.0; n_scan], Statistics::Classical, 1.0, vec![0.0; n_scan])?,
            })
        }
    }
}

/// Image contrast relative to background fluctuations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    /// `excursion / background_std`; 0 when the image has no content, infinite
    /// when the background is exactly flat but the image is not.
    pub snr: f64,
    /// Largest |value − background mean| outside the background region.
    pub excursion: f64,
    pub background_mean: f64,
    pub background_std: f64,
    /// Mean per-point standard error over the background region.
    pub background_stderr: f64,
    /// Set when the background variance is zero.
    pub degenerate: bool,
}

/// Outer 20% of each grid dimension (10% on each side).
pub fn outer_ring(grid: &DetectorGrid) -> Vec<bool> {
    let edge = |k: usize, n: usize| {
        if n == 1 {
            return false;
        }
        let f = k as f64 / (n - 1) as f64;
        !(0.1..=0.9).contains(&f)
    };
    (0..grid.len())
        .map(|k| edge(k % grid.nx(), grid.nx()) || edge(k / grid.nx(), grid.ny()))
        .collect()
}

/// Signal-to-noise ratio of an image.
///
/// `background` marks the background samples; when absent, the outer ring from
/// [`outer_ring`] is used.
pub fn snr_estimate(image: &GhostImage, background: Option<&[bool]>) -> Result<SnrReport> {
    let n = image.values.len();
    if n < 10 {
        return Err(Error::Domain(format!("SNR needs at least 10 scan points, got {n}")));
    }
    let auto;
    let bg = match background {
        Some(b) if b.len() != n => {
            return Err(Error::Shape(format!("background mask has {} entries for {n} points", b.len())))
        }
        Some(b) => b,
        None => {
            auto = outer_ring(&image.scan);
            &auto
        }
    };
    let bg_vals: Vec<f64> = (0..n).filter(|&k| bg[k]).map(|k| image.values[k]).collect();
    if bg_vals.len() < 2 || bg_vals.len() == n {
        return Err(Error::Domain(
            "background region must hold at least two points and leave some signal points".into(),
        ));
    }
    let m = bg_vals.len() as f64;
    let mean = bg_vals.iter().copied().collect::<NeumaierSum>().value() / m;
    let var = bg_vals
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<NeumaierSum>()
        .value()
        / (m - 1.0);
    let std = var.sqrt();
    let excursion = (0..n)
        .filter(|&k| !bg[k])
        .map(|k| (image.values[k] - mean).abs())
        .fold(0.0, f64::max);
    let background_stderr = (0..n)
        .filter(|&k| bg[k])
        .map(|k| image.stderr[k])
        .sum::<f64>()
        / m;
    let degenerate = std == 0.0;
    let snr = if !degenerate {
        excursion / std
    } else if excursion == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SnrReport {
        snr,
        excursion,
        background_mean: mean,
        background_std: std,
        background_stderr,
        degenerate,
    })
}
