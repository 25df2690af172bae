//! Second-order coherence for bosons, fermions and classical particles.
//!
//! Two independent estimators are provided:
//!
//! * **amplitude pair** draws two emitters per sample and evaluates the
//!   two-particle amplitudes `A_{αj}` directly, so the exchange sign of each
//!   statistics enters explicitly;
//! * **intensity** propagates full Gaussian speckle realizations and forms
//!   `⟨I₁I₂⟩ / (⟨I₁⟩⟨I₂⟩)`, which is the bosonic (thermal light) result. The
//!   fermionic map then follows from `g²_F = 2·g²_C − g²_B`.
//!
//! Both normalize by the classical coincidence rate, so `g²_C ≡ 1`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{AmplitudePair, CorrelationMap, DetectorGrid, Geometry, SourceSpec, Statistics, Vec2};
use crate::numeric::NeumaierSum;
use crate::parallel::Executor;
use crate::propagation::FieldKernel;
use crate::speckle::{draw_amplitude, sample_amplitudes, AmplitudeMode, SeedSpec};

pub const MIN_INTENSITY_REALIZATIONS: usize = 100;
pub const MIN_AMPLITUDE_PAIRS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Intensity,
    AmplitudePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HbtScanConfig {
    pub source: SourceSpec,
    pub geometry: Geometry,
    /// Position of D₂.
    pub fixed_point: Vec2,
    /// Positions of D₁.
    pub scan: DetectorGrid,
    pub ensemble_size: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl HbtScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.require_balanced()?;
        let min = match self.estimator {
            Estimator::Intensity => MIN_INTENSITY_REALIZATIONS,
            Estimator::AmplitudePair => MIN_AMPLITUDE_PAIRS,
        };
        if self.ensemble_size < min {
            return Err(Error::Config(format!(
                "ensemble_size {} is below the minimum of {min} for the {:?} estimator",
                self.ensemble_size, self.estimator
            )));
        }
        if !self.fixed_point.is_finite() {
            return Err(Error::validation("fixed point must be finite"));
        }
        Ok(())
    }
}

/// Coincidence probability for one pair of particles.
///
/// fermion `|a1·b2 − a2·b1|²`, boson `|a1·b2 + a2·b1|²`,
/// classical `|a1·b2|² + |a2·b1|²`.
pub fn g2_from_amplitude_pair(pair: &AmplitudePair, kind: Statistics) -> Result<f64> {
    if !pair.is_finite() {
        return Err(Error::Domain("amplitude pair has non-finite components".into()));
    }
    Ok(pair_value(pair, kind))
}

#[inline]
pub(crate) fn pair_value(pair: &AmplitudePair, kind: Statistics) -> f64 {
    let direct = pair.a1 * pair.b2;
    let exchanged = pair.a2 * pair.b1;
    match kind {
        Statistics::Fermion => (direct - exchanged).norm_sqr(),
        Statistics::Boson => (direct + exchanged).norm_sqr(),
        Statistics::Classical => direct.norm_sqr() + exchanged.norm_sqr(),
    }
}

/// All three values for one pair, in `[boson, fermion, classical]` order.
#[inline]
pub(crate) fn pair_values(pair: &AmplitudePair) -> [f64; 3] {
    [
        pair_value(pair, Statistics::Boson),
        pair_value(pair, Statistics::Fermion),
        pair_value(pair, Statistics::Classical),
    ]
}

/// Bosonic, fermionic and classical maps from the amplitude-pair estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScan {
    pub boson: CorrelationMap,
    pub fermion: CorrelationMap,
    pub classical: CorrelationMap,
}

/// Bosonic and classical maps from the intensity estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityScan {
    pub boson: CorrelationMap,
    pub classical: CorrelationMap,
}

/// Running sums for a ratio `mean(K) / mean(C)` and its delta-method error.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RatioMoments {
    k: NeumaierSum,
    c: NeumaierSum,
    kk: NeumaierSum,
    kc: NeumaierSum,
    cc: NeumaierSum,
}

impl RatioMoments {
    #[inline]
    pub(crate) fn add(&mut self, k: f64, c: f64) {
        self.k.add(k);
        self.c.add(c);
        self.kk.add(k * k);
        self.kc.add(k * c);
        self.cc.add(c * c);
    }

    pub(crate) fn merge(&mut self, o: &RatioMoments) {
        self.k.merge(&o.k);
        self.c.merge(&o.c);
        self.kk.merge(&o.kk);
        self.kc.merge(&o.kc);
        self.cc.merge(&o.cc);
    }

    /// Ratio and its standard error. The influence of sample n is
    /// `(Kₙ − R·Cₙ)/mean(C)`.
    pub(crate) fn ratio(&self, n: usize) -> Result<(f64, f64)> {
        let nf = n as f64;
        let mc = self.c.value() / nf;
        if mc <= 0.0 {
            return Err(Error::DegenerateEnsemble(
                "classical coincidence rate vanished".into(),
            ));
        }
        let r = self.k.value() / self.c.value();
        let var = (self.kk.value() / nf - 2.0 * r * self.kc.value() / nf
            + r * r * self.cc.value() / nf)
            / (mc * mc);
        Ok((r, (var.max(0.0) / (nf - 1.0)).sqrt()))
    }
}

/// Direct two-particle estimator.
///
/// Sample `n` uses the stream `SeedSpec(seed, n)` to pick emitters `a`, `b`
/// uniformly (with replacement) from the source lattice and to draw their
/// unit-phasor amplitudes. With `A_{αj} = amp_α · propagator(pos_α → ρ_j)`
/// it accumulates all three coincidence probabilities at every scan point;
/// each map is the ratio of its mean to the classical mean.
pub fn hbt_scan_amplitude_pair(config: &HbtScanConfig, executor: &Executor) -> Result<PairScan> {
    config.validate()?;
    if config.estimator != Estimator::AmplitudePair {
        return Err(Error::Config("configuration selects the intensity estimator".into()));
    }
    let emitters = config.source.emitters();
    let positions: Vec<Vec2> = emitters.iter().map(|e| e.pos).collect();
    let geom = &config.geometry;
    let scan_pts = config.scan.points();
    let to_scan = FieldKernel::new(&positions, &scan_pts, geom.dist_reference(), geom.wavelength())?;
    let to_fixed = FieldKernel::new(&positions, &[config.fixed_point], geom.dist_object(), geom.wavelength())?;
    let n_scan = scan_pts.len();

    let blocks = executor.map_blocks(config.ensemble_size, |range| {
        let mut acc = vec![[RatioMoments::default(); 2]; n_scan];
        for n in range {
            let mut rng = SeedSpec::new(config.seed, n as u64).rng();
            let a = rng.random_range(0..emitters.len());
            let b = rng.random_range(0..emitters.len());
            let amp_a = draw_amplitude(&mut rng, emitters[a].weight, AmplitudeMode::UnitPhasor);
            let amp_b = draw_amplitude(&mut rng, emitters[b].weight, AmplitudeMode::UnitPhasor);
            let a2 = amp_a * to_fixed.entry(0, a);
            let b2 = amp_b * to_fixed.entry(0, b);
            for (t, slot) in acc.iter_mut().enumerate() {
                let pair = AmplitudePair::new(amp_a * to_scan.entry(t, a), a2, amp_b * to_scan.entry(t, b), b2);
                let [boson, fermion, classical] = pair_values(&pair);
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
    Ok(PairScan {
        boson: CorrelationMap::new(config.scan, boson.0, Statistics::Boson, boson.1)?,
        fermion: CorrelationMap::new(config.scan, fermion.0, Statistics::Fermion, fermion.1)?,
        classical: CorrelationMap::new(
            config.scan,
            vec![1.0; n_scan],
            Statistics::Classical,
            vec![0.0; n_scan],
        )?,
    })
}

/// Sums for `⟨XY⟩/(⟨X⟩⟨Y⟩)` at one scan point, where X is the scanned
/// intensity and Y a shared second signal (fixed-detector intensity or bucket).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CrossMoments {
    x: NeumaierSum,
    xy: NeumaierSum,
    xx: NeumaierSum,
    xyxy: NeumaierSum,
    x_xy: NeumaierSum,
    xy_y: NeumaierSum,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SharedMoments {
    y: NeumaierSum,
    yy: NeumaierSum,
}

impl SharedMoments {
    #[inline]
    pub(crate) fn add(&mut self, y: f64) {
        self.y.add(y);
        self.yy.add(y * y);
    }

    pub(crate) fn merge(&mut self, o: &SharedMoments) {
        self.y.merge(&o.y);
        self.yy.merge(&o.yy);
    }
}

impl CrossMoments {
    #[inline]
    pub(crate) fn add(&mut self, x: f64, y: f64) {
        let xy = x * y;
        self.x.add(x);
        self.xy.add(xy);
        self.xx.add(x * x);
        self.xyxy.add(xy * xy);
        self.x_xy.add(x * xy);
        self.xy_y.add(xy * y);
    }

    pub(crate) fn merge(&mut self, o: &CrossMoments) {
        self.x.merge(&o.x);
        self.xy.merge(&o.xy);
        self.xx.merge(&o.xx);
        self.xyxy.merge(&o.xyxy);
        self.x_xy.merge(&o.x_xy);
        self.xy_y.merge(&o.xy_y);
    }

    /// `(g², stderr(g²), stderr of the classical normalization)`.
    ///
    /// The g² error is the delta-method error of `R = m_xy/(m_x m_y)`, whose
    /// per-sample influence is `XY/(m_x m_y) − R·X/m_x − R·Y/m_y`. The
    /// classical error is the relative standard error of `⟨X⟩⟨Y⟩`.
    pub(crate) fn normalized(&self, shared: &SharedMoments, n: usize) -> Result<(f64, f64, f64)> {
        let nf = n as f64;
        let mx = self.x.value() / nf;
        let my = shared.y.value() / nf;
        if mx <= 0.0 || my <= 0.0 {
            return Err(Error::DegenerateEnsemble(format!(
                "mean intensities vanished (<I1> = {mx}, <I2> = {my})"
            )));
        }
        let mxy = self.xy.value() / nf;
        let r = mxy / (mx * my);
        let exx = self.xx.value() / nf;
        let eyy = shared.yy.value() / nf;
        let ez2 = self.xyxy.value() / nf / (mx * my).powi(2)
            + r * r * exx / (mx * mx)
            + r * r * eyy / (my * my)
            - 2.0 * r * self.x_xy.value() / nf / (mx * mx * my)
            - 2.0 * r * self.xy_y.value() / nf / (mx * my * my)
            + 2.0 * r * r * mxy / (mx * my);
        let var = (ez2 - r * r).max(0.0);
        let se = (var / (nf - 1.0)).sqrt();
        let rel_x = (exx - mx * mx).max(0.0) / (mx * mx);
        let rel_y = (eyy - my * my).max(0.0) / (my * my);
        let se_classical = ((rel_x + rel_y) / (nf - 1.0)).sqrt();
        Ok((r, se, se_classical))
    }
}

/// Intensity-correlation estimator over Gaussian speckle realizations.
///
/// Realization `n` uses `SeedSpec(seed, n)`. Sums run in realization order
/// within fixed blocks that are merged in block order, so the result does not
/// depend on the executor's worker count.
pub fn hbt_scan_intensity(config: &HbtScanConfig, executor: &Executor) -> Result<IntensityScan> {
    config.validate()?;
    if config.estimator != Estimator::Intensity {
        return Err(Error::Config("configuration selects the amplitude-pair estimator".into()));
    }
    let emitters = config.source.emitters();
    let positions: Vec<Vec2> = emitters.iter().map(|e| e.pos).collect();
    let geom = &config.geometry;
    let scan_pts = config.scan.points();
    let to_scan = FieldKernel::new(&positions, &scan_pts, geom.dist_reference(), geom.wavelength())?;
    let to_fixed = FieldKernel::new(&positions, &[config.fixed_point], geom.dist_object(), geom.wavelength())?;
    let n_scan = scan_pts.len();

    let blocks = executor.map_blocks(config.ensemble_size, |range| {
        let mut acc = vec![CrossMoments::default(); n_scan];
        let mut shared = SharedMoments::default();
        let mut field = vec![Complex64::default(); n_scan];
        let mut i1 = vec![0.0; n_scan];
        let mut fixed = [Complex64::default()];
        for n in range {
            let amps = sample_amplitudes(&emitters, SeedSpec::new(config.seed, n as u64), AmplitudeMode::GaussianField);
            to_scan.intensities(&amps, &mut field, &mut i1);
            to_fixed.apply(&amps, &mut fixed);
            let i2 = fixed[0].norm_sqr();
            shared.add(i2);
            for (m, &x) in acc.iter_mut().zip(&i1) {
                m.add(x, i2);
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
    let mut values = Vec::with_capacity(n_scan);
    let mut stderr = Vec::with_capacity(n_scan);
    let mut classical_err = Vec::with_capacity(n_scan);
    for m in &total {
        let (v, e, ce) = m.normalized(&shared, config.ensemble_size)?;
        values.push(v);
        stderr.push(e);
        classical_err.push(ce);
    }
    Ok(IntensityScan {
        boson: CorrelationMap::new(config.scan, values, Statistics::Boson, stderr)?,
        classical: CorrelationMap::new(config.scan, vec![1.0; n_scan], Statistics::Classical, classical_err)?,
    })
}

/// `g²_F = 2·g²_C − g²_B` pointwise, errors combined in quadrature.
pub fn synthesize_fermion(boson: &CorrelationMap, classical: &CorrelationMap) -> Result<CorrelationMap> {
    if boson.kind != Statistics::Boson || classical.kind != Statistics::Classical {
        return Err(Error::Shape(format!(
            "expected boson and classical maps, got {} and {}",
            boson.kind, classical.kind
        )));
    }
    if boson.scan != classical.scan {
        return Err(Error::Shape("boson and classical maps use different scan grids".into()));
    }
    let values = boson
        .values
        .iter()
        .zip(&classical.values)
        .map(|(b, c)| 2.0 * c - b)
        .collect();
    let stderr = boson
        .stderr
        .iter()
        .zip(&classical.stderr)
        .map(|(eb, ec)| (eb * eb + 4.0 * ec * ec).sqrt())
        .collect();
    CorrelationMap::new(boson.scan, values, Statistics::Fermion, stderr)
}

/// Maps for all three statistics in `[boson, fermion, classical]` order,
/// using whichever estimator the configuration selects.
pub fn hbt_scan(config: &HbtScanConfig, executor: &Executor) -> Result<[CorrelationMap; 3]> {
    match config.estimator {
        Estimator::AmplitudePair => {
            let s = hbt_scan_amplitude_pair(config, executor)?;
            Ok([s.boson, s.fermion, s.classical])
        }
        Estimator::Intensity => {
            let s = hbt_scan_intensity(config, executor)?;
            let fermion = synthesize_fermion(&s.boson, &s.classical)?;
            Ok([s.boson, fermion, s.classical])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn all(pair: &AmplitudePair) -> (f64, f64, f64) {
        (
            g2_from_amplitude_pair(pair, Statistics::Fermion).unwrap(),
            g2_from_amplitude_pair(pair, Statistics::Boson).unwrap(),
            g2_from_amplitude_pair(pair, Statistics::Classical).unwrap(),
        )
    }

    #[test]
    fn single_alternative_limit() {
        let p = AmplitudePair::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert_eq!(all(&p), (1.0, 1.0, 1.0));
    }

    #[test]
    fn symmetric_amplitudes() {
        let one = c(1.0, 0.0);
        let p = AmplitudePair::new(one, one, one, one);
        assert_eq!(all(&p), (0.0, 4.0, 2.0));
    }

    #[test]
    fn non_finite_pair_is_rejected() {
        let p = AmplitudePair::new(c(f64::NAN, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(matches!(
            g2_from_amplitude_pair(&p, Statistics::Boson),
            Err(Error::Domain(_))
        ));
    }

    fn line_map(values: Vec<f64>, kind: Statistics, err: f64) -> CorrelationMap {
        let n = values.len();
        CorrelationMap::new(DetectorGrid::line(0.0, 1e-4, n, 0.0).unwrap(), values, kind, vec![err; n]).unwrap()
    }

    #[test]
    fn synthesis_at_dip_and_wings() {
        let b = line_map(vec![2.0, 1.0], Statistics::Boson, 0.03);
        let cl = line_map(vec![1.0, 1.0], Statistics::Classical, 0.02);
        let f = synthesize_fermion(&b, &cl).unwrap();
        assert_eq!(f.values, vec![0.0, 1.0]);
        assert_eq!(f.kind, Statistics::Fermion);
        assert!((f.stderr[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn synthesis_rejects_mismatch() {
        let b = line_map(vec![2.0, 1.0], Statistics::Boson, 0.0);
        let cl = line_map(vec![1.0, 1.0, 1.0], Statistics::Classical, 0.0);
        assert!(matches!(synthesize_fermion(&b, &cl), Err(Error::Shape(_))));
        let wrong = line_map(vec![1.0, 1.0], Statistics::Fermion, 0.0);
        assert!(synthesize_fermion(&b, &wrong).is_err());
    }

    fn slit_config(estimator: Estimator, n: usize) -> HbtScanConfig {
        HbtScanConfig {
            source: SourceSpec::rectangle(0.36e-3, 0.16e-3, 0.02e-3).unwrap(),
            geometry: Geometry::balanced_at(780e-9, 0.910).unwrap(),
            fixed_point: Vec2::ZERO,
            scan: DetectorGrid::line(-3e-3, 0.5e-3, 13, 0.0).unwrap(),
            ensemble_size: n,
            seed: 17,
            estimator,
        }
    }

    #[test]
    fn unbalanced_geometry_is_refused() {
        let mut cfg = slit_config(Estimator::AmplitudePair, 2000);
        cfg.geometry = Geometry::new(780e-9, 0.91, 0.95).unwrap();
        assert!(matches!(
            hbt_scan_amplitude_pair(&cfg, &Executor::sequential()),
            Err(Error::Config(m)) if m.contains("l1 = l2")
        ));
    }

    #[test]
    fn small_ensembles_are_refused() {
        let cfg = slit_config(Estimator::Intensity, 50);
        assert!(hbt_scan_intensity(&cfg, &Executor::sequential()).is_err());
        let cfg = slit_config(Estimator::AmplitudePair, 500);
        assert!(hbt_scan_amplitude_pair(&cfg, &Executor::sequential()).is_err());
    }

    #[test]
    fn pair_scan_zero_separation_is_exact() {
        let cfg = slit_config(Estimator::AmplitudePair, 2000);
        let s = hbt_scan_amplitude_pair(&cfg, &Executor::sequential()).unwrap();
        let centre = 6;
        assert_eq!(cfg.scan.point(centre), Vec2::ZERO);
        assert!(s.fermion.values[centre].abs() <= 3.0 * s.fermion.stderr[centre] + 1e-12);
        assert!((s.boson.values[centre] - 2.0).abs() <= 3.0 * s.boson.stderr[centre] + 1e-12);
        assert!(s.classical.values.iter().all(|v| *v == 1.0));
        for k in 0..13 {
            assert!((s.boson.values[k] + s.fermion.values[k] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_scan_first_sinc_zero() {
        let mut cfg = slit_config(Estimator::AmplitudePair, 20_000);
        let zero = 780e-9 * 0.910 / 0.36e-3;
        cfg.scan = DetectorGrid::line(zero, 1e-4, 1, 0.0).unwrap();
        let s = hbt_scan_amplitude_pair(&cfg, &Executor::sequential()).unwrap();
        assert!((s.fermion.values[0] - 1.0).abs() <= 3.0 * s.fermion.stderr[0], "{:?}", s.fermion);
    }

    #[test]
    fn intensity_scan_peak_and_wings() {
        let mut cfg = slit_config(Estimator::Intensity, 5000);
        cfg.scan = DetectorGrid::line(0.0, 20e-3, 2, 0.0).unwrap();
        let s = hbt_scan_intensity(&cfg, &Executor::sequential()).unwrap();
        assert!((s.boson.values[0] - 2.0).abs() <= 3.0 * s.boson.stderr[0], "{:?}", s.boson);
        assert!((s.boson.values[1] - 1.0).abs() <= 3.0 * s.boson.stderr[1], "{:?}", s.boson);
        assert!(s.classical.values.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let cfg = slit_config(Estimator::Intensity, 300);
        let a = hbt_scan(&cfg, &Executor::new(1)).unwrap();
        let b = hbt_scan(&cfg, &Executor::new(4)).unwrap();
        assert_eq!(a, b);
        let cfg = slit_config(Estimator::AmplitudePair, 1500);
        let a = hbt_scan(&cfg, &Executor::new(1)).unwrap();
        let b = hbt_scan(&cfg, &Executor::new(3)).unwrap();
        assert_eq!(a, b);
    }
}
