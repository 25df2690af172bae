//! Least-squares fitting of 1D correlation profiles and section extraction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{GridValues, Vec2};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::special::{sinc, sinc2_half_max_root};

/// `2·sqrt(2·ln 2)`.
pub const GAUSSIAN_FWHM_FACTOR: f64 = 2.354_820_045_030_949;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `baseline − amplitude·sinc²((x − center)/w)`
    Sinc2Dip,
    /// `baseline + amplitude·sinc²((x − center)/w)`
    Sinc2Peak,
    /// `baseline − Σ amplitudeₖ·exp(−(x − centerₖ)²/(2σₖ²))`
    GaussianDips(usize),
    /// `baseline + Σ amplitudeₖ·exp(−(x − centerₖ)²/(2σₖ²))`
    GaussianPeaks(usize),
}

impl ModelKind {
    pub fn n_params(self) -> usize {
        match self {
            ModelKind::Sinc2Dip | ModelKind::Sinc2Peak => 4,
            ModelKind::GaussianDips(n) | ModelKind::GaussianPeaks(n) => 1 + 3 * n,
        }
    }

    fn sign(self) -> f64 {
        match self {
            ModelKind::Sinc2Dip | ModelKind::GaussianDips(_) => -1.0,
            ModelKind::Sinc2Peak | ModelKind::GaussianPeaks(_) => 1.0,
        }
    }

    fn components(self) -> usize {
        match self {
            ModelKind::Sinc2Dip | ModelKind::Sinc2Peak => 1,
            ModelKind::GaussianDips(n) | ModelKind::GaussianPeaks(n) => n,
        }
    }

    fn is_sinc(self) -> bool {
        matches!(self, ModelKind::Sinc2Dip | ModelKind::Sinc2Peak)
    }
}

/// Model family plus its parameter vector.
///
/// Layout: `[baseline, (amplitude, center, width)…]`, where width is `w` for the
/// sinc² models and σ for Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileModel {
    pub kind: ModelKind,
    pub params: Vec<f64>,
}

impl ProfileModel {
    pub fn new(kind: ModelKind, params: Vec<f64>) -> Result<Self> {
        if kind.components() == 0 {
            return Err(Error::Config("a Gaussian model needs at least one component".into()));
        }
        if params.len() != kind.n_params() {
            return Err(Error::Config(format!(
                "{kind:?} takes {} parameters, got {}",
                kind.n_params(),
                params.len()
            )));
        }
        if let Some(k) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::validation_at(k, "model parameter is not finite"));
        }
        for c in 0..kind.components() {
            if params[1 + 3 * c] < 0.0 {
                return Err(Error::validation_at(1 + 3 * c, "amplitude must be non-negative"));
            }
            if params[3 + 3 * c] <= 0.0 {
                return Err(Error::validation_at(3 + 3 * c, "width must be positive"));
            }
        }
        Ok(Self { kind, params })
    }

    pub fn sinc2_dip(baseline: f64, amplitude: f64, center: f64, w: f64) -> Result<Self> {
        Self::new(ModelKind::Sinc2Dip, vec![baseline, amplitude, center, w])
    }

    pub fn sinc2_peak(baseline: f64, amplitude: f64, center: f64, w: f64) -> Result<Self> {
        Self::new(ModelKind::Sinc2Peak, vec![baseline, amplitude, center, w])
    }

    /// Gaussian dips from `(amplitude, center, sigma)` triples.
    pub fn gaussian_dips(baseline: f64, dips: &[(f64, f64, f64)]) -> Result<Self> {
        let mut p = vec![baseline];
        for &(a, c, s) in dips {
            p.extend([a, c, s]);
        }
        Self::new(ModelKind::GaussianDips(dips.len()), p)
    }

    pub fn baseline(&self) -> f64 {
        self.params[0]
    }

    pub fn amplitude(&self, k: usize) -> f64 {
        self.params[1 + 3 * k]
    }

    pub fn center(&self, k: usize) -> f64 {
        self.params[2 + 3 * k]
    }

    /// `w` for sinc² models, σ for Gaussians.
    pub fn width(&self, k: usize) -> f64 {
        self.params[3 + 3 * k]
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_raw(self.kind, &self.params, x)
    }
}

/// Amplitudes and widths enter through their absolute values so the simplex
/// can roam freely.
fn eval_raw(kind: ModelKind, p: &[f64], x: f64) -> f64 {
    let mut shape = 0.0;
    for c in 0..kind.components() {
        let (a, x0, w) = (p[1 + 3 * c].abs(), p[2 + 3 * c], p[3 + 3 * c].abs());
        let u = (x - x0) / w;
        shape += a * if kind.is_sinc() {
            let s = sinc(u);
            s * s
        } else {
            (-0.5 * u * u).exp()
        };
    }
    p[0] + kind.sign() * shape
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub init: Option<Vec<f64>>,
    /// Pins the baseline instead of fitting it.
    pub fixed_baseline: Option<f64>,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            init: None,
            fixed_baseline: None,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ProfileModel,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the data carry no signal (constant ys).
    pub degenerate: bool,
    /// Approximate 1σ errors, same layout as the parameters; 0 for a pinned
    /// baseline, NaN when the curvature matrix is singular.
    pub param_stderr: Vec<f64>,
}

/// Fits `kind` to `(xs, ys)` by minimizing the sum of squared residuals.
///
/// Without `init` the start point is: baseline = median(y); center at the
/// arg-extremum; amplitude = |extremum − baseline|; width from the
/// half-excursion crossings around the extremum. Gaussian families place their
/// components one at a time on the residual after subtracting earlier ones.
pub fn fit_profile(xs: &[f64], ys: &[f64], kind: ModelKind, opts: &FitOptions) -> Result<FitResult> {
    let np = kind.n_params();
    if kind.components() == 0 {
        return Err(Error::Config("a Gaussian model needs at least one component".into()));
    }
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} xs for {} ys", xs.len(), ys.len())));
    }
    if xs.len() < np + 2 {
        return Err(Error::validation(format!(
            "{kind:?} needs at least {} samples, got {}",
            np + 2,
            xs.len()
        )));
    }
    if let Some(k) = xs.iter().chain(ys).position(|v| !v.is_finite()) {
        return Err(Error::validation_at(k % xs.len(), "sample is not finite"));
    }
    if let Some(k) = xs.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::validation_at(k + 1, "xs must be strictly increasing"));
    }
    if let Some(b) = opts.fixed_baseline {
        if !b.is_finite() {
            return Err(Error::Config("fixed baseline is not finite".into()));
        }
    }

    let y_max = ys.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let y_min = ys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if y_max - y_min <= 1e-14 * y_max.abs().max(y_min.abs()) {
        let mut params = vec![0.0; np];
        params[0] = opts.fixed_baseline.unwrap_or(ys[0]);
        for c in 0..kind.components() {
            params[3 + 3 * c] = xs[xs.len() - 1] - xs[0];
        }
        let model = ProfileModel::new(kind, params)?;
        let residual_rms = rms(xs, ys, &model);
        return Ok(FitResult {
            model,
            residual_rms,
            iterations: 0,
            converged: false,
            degenerate: true,
            param_stderr: vec![f64::NAN; np],
        });
    }

    let mut init = match &opts.init {
        Some(p) => ProfileModel::new(kind, p.clone())?.params,
        None => auto_init(xs, ys, kind, opts.fixed_baseline),
    };
    if let Some(b) = opts.fixed_baseline {
        init[0] = b;
    }

    let free: Vec<usize> = (0..np).filter(|&i| i > 0 || opts.fixed_baseline.is_none()).collect();
    let y_scale = (y_max - y_min).max(y_max.abs().max(y_min.abs()) * 1e-3);
    let width_of = |p: &[f64], i: usize| p[3 + 3 * ((i - 1) / 3)].abs();
    let scale_of = |p: &[f64], i: usize| -> f64 {
        match i {
            0 => y_scale,
            _ if (i - 1).is_multiple_of(3) => y_scale,
            _ => width_of(p, i),
        }
    };
    let steps: Vec<f64> = free.iter().map(|&i| 0.1 * scale_of(&init, i)).collect();

    let expand = |z: &[f64]| {
        let mut p = init.clone();
        for (&i, &v) in free.iter().zip(z) {
            p[i] = v;
        }
        p
    };
    let sse = |p: &[f64]| -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let r = y - eval_raw(kind, p, x);
                r * r
            })
            .sum()
    };
    let sum_y2: f64 = ys.iter().map(|y| y * y).sum();
    let nm = NelderMeadOptions {
        max_iter: opts.max_iter,
        abs_tol: 1e-26 * sum_y2,
        ..Default::default()
    };
    let z0: Vec<f64> = free.iter().map(|&i| init[i]).collect();
    let min = nelder_mead(|z| sse(&expand(z)), &z0, &steps, &nm);

    let mut params = expand(&min.x);
    for c in 0..kind.components() {
        params[1 + 3 * c] = params[1 + 3 * c].abs();
        params[3 + 3 * c] = params[3 + 3 * c].abs();
    }
    polish(xs, ys, kind, &free, &mut params);
    if !kind.is_sinc() {
        sort_components(&mut params);
    }
    let model = ProfileModel::new(kind, params)?;
    let residual_rms = rms(xs, ys, &model);

    let dof = xs.len() - free.len();
    let s2 = min.value / dof as f64;
    let mut param_stderr = vec![0.0; np];
    let hscale: Vec<f64> = free.iter().map(|&i| 1e-5 * scale_of(&model.params, i)).collect();
    let obj = |z: &[f64]| sse(&{
        let mut p = model.params.clone();
        for (&i, &v) in free.iter().zip(z) {
            p[i] = v;
        }
        p
    });
    let zf: Vec<f64> = free.iter().map(|&i| model.params[i]).collect();
    let h = hessian(obj, &zf, &hscale);
    match h.try_inverse() {
        Some(inv) => {
            for (a, &i) in free.iter().enumerate() {
                let var = 2.0 * s2 * inv[(a, a)];
                param_stderr[i] = if var >= 0.0 { var.sqrt() } else { f64::NAN };
            }
        }
        None => {
            for &i in &free {
                param_stderr[i] = f64::NAN;
            }
        }
    }

    Ok(FitResult {
        model,
        residual_rms,
        iterations: min.iterations,
        converged: min.converged && residual_rms.is_finite(),
        degenerate: false,
        param_stderr,
    })
}

/// `dφ/du` for the component shape.
fn shape_and_slope(kind: ModelKind, u: f64) -> (f64, f64) {
    if kind.is_sinc() {
        let s = sinc(u);
        let ds = if u.abs() < 1e-4 {
            -u / 3.0 + u * u * u / 30.0
        } else {
            (u.cos() - s) / u
        };
        (s * s, 2.0 * s * ds)
    } else {
        let g = (-0.5 * u * u).exp();
        (g, -u * g)
    }
}

/// `JᵀJ` and `Jᵀr` over the free parameters, with an analytic Jacobian.
fn normal_equations(xs: &[f64], ys: &[f64], kind: ModelKind, free: &[usize], p: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = free.len();
    let sign = kind.sign();
    let mut jtj = DMatrix::<f64>::zeros(n, n);
    let mut jtr = DVector::<f64>::zeros(n);
    let mut row = vec![0.0; p.len()];
    for (&x, &y) in xs.iter().zip(ys) {
        row[0] = 1.0;
        for c in 0..kind.components() {
            let (a, x0, w) = (p[1 + 3 * c], p[2 + 3 * c], p[3 + 3 * c]);
            let u = (x - x0) / w;
            let (phi, dphi) = shape_and_slope(kind, u);
            row[1 + 3 * c] = sign * phi;
            row[2 + 3 * c] = -sign * a * dphi / w;
            row[3 + 3 * c] = -sign * a * dphi * u / w;
        }
        let r = y - eval_raw(kind, p, x);
        for (a, &i) in free.iter().enumerate() {
            jtr[a] += row[i] * r;
            for (b, &j) in free.iter().enumerate().take(a + 1) {
                jtj[(a, b)] += row[i] * row[j];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            jtj[(b, a)] = jtj[(a, b)];
        }
    }
    (jtj, jtr)
}

fn step(jtj: &DMatrix<f64>, jtr: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let mut m = jtj.clone();
    for a in 0..m.nrows() {
        m[(a, a)] *= 1.0 + mu;
    }
    m.cholesky().map(|c| c.solve(jtr))
}

fn physical(kind: ModelKind, p: &[f64]) -> bool {
    (0..kind.components()).all(|c| p[1 + 3 * c] >= 0.0 && p[3 + 3 * c] > 0.0)
}

/// Refines the simplex optimum: Levenberg–Marquardt while the residual sum
/// drops, then undamped Gauss–Newton until the step size stalls, which pins
/// the stationary point far below the resolution of residual comparisons.
fn polish(xs: &[f64], ys: &[f64], kind: ModelKind, free: &[usize], p: &mut [f64]) {
    let sse = |p: &[f64]| -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| (y - eval_raw(kind, p, x)).powi(2))
            .sum()
    };
    let apply = |p: &[f64], delta: &DVector<f64>| {
        let mut t = p.to_vec();
        for (a, &i) in free.iter().enumerate() {
            t[i] += delta[a];
        }
        t
    };

    let mut current = sse(p);
    let mut mu = 1e-3;
    for _ in 0..200 {
        let (jtj, jtr) = normal_equations(xs, ys, kind, free, p);
        let mut accepted = false;
        while mu < 1e16 {
            if let Some(delta) = step(&jtj, &jtr, mu) {
                let trial = apply(p, &delta);
                let value = if physical(kind, &trial) { sse(&trial) } else { f64::INFINITY };
                if value < current {
                    p.copy_from_slice(&trial);
                    current = value;
                    mu = (mu * 0.1).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }

    let size = |p: &[f64], delta: &DVector<f64>| {
        free.iter()
            .enumerate()
            .map(|(a, &i)| delta[a].abs() / (p[i].abs() + p[3 + 3 * ((i.max(1) - 1) / 3)].abs()))
            .fold(0.0, f64::max)
    };
    let mut last = f64::INFINITY;
    for _ in 0..30 {
        let (jtj, jtr) = normal_equations(xs, ys, kind, free, p);
        let Some(delta) = step(&jtj, &jtr, 0.0) else { break };
        let trial = apply(p, &delta);
        let len = size(p, &delta);
        if !physical(kind, &trial) || len >= last || sse(&trial) > current * (1.0 + 1e-12) {
            break;
        }
        p.copy_from_slice(&trial);
        last = len;
        if len < 1e-15 {
            break;
        }
    }
}

fn rms(xs: &[f64], ys: &[f64], m: &ProfileModel) -> f64 {
    let s: f64 = xs.iter().zip(ys).map(|(&x, &y)| (y - m.eval(x)).powi(2)).sum();
    (s / xs.len() as f64).sqrt()
}

fn sort_components(p: &mut [f64]) {
    let mut comps: Vec<[f64; 3]> = p[1..].chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    comps.sort_by(|a, b| a[1].total_cmp(&b[1]));
    for (k, c) in comps.iter().enumerate() {
        p[1 + 3 * k..4 + 3 * k].copy_from_slice(c);
    }
}

fn hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let f0 = f(x);
    let at = |d: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, s) in d {
            p[i] += s;
        }
        f(&p)
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = (at(&[(i, h[i])]) - 2.0 * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])])
                - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn median(ys: &[f64]) -> f64 {
    let mut v = ys.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Full width at half excursion of the extremum at `k` in `r` (excursion
/// oriented positive), from linearly interpolated crossings.
fn half_width_at(xs: &[f64], r: &[f64], k: usize) -> Option<f64> {
    let half = 0.5 * r[k];
    let cross = |i: usize, j: usize| xs[i] + (xs[j] - xs[i]) * (r[i] - half) / (r[i] - r[j]);
    let left = (0..k).rev().find(|&i| r[i] <= half).map(|i| cross(i + 1, i));
    let right = (k + 1..xs.len()).find(|&i| r[i] <= half).map(|i| cross(i - 1, i));
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        (Some(l), None) => Some(2.0 * (xs[k] - l)),
        (None, Some(r)) => Some(2.0 * (r - xs[k])),
        (None, None) => None,
    }
}

fn auto_init(xs: &[f64], ys: &[f64], kind: ModelKind, fixed_baseline: Option<f64>) -> Vec<f64> {
    let baseline = fixed_baseline.unwrap_or_else(|| median(ys));
    let sign = kind.sign();
    let span = xs[xs.len() - 1] - xs[0];
    let fwhm_per_width = if kind.is_sinc() {
        2.0 * sinc2_half_max_root()
    } else {
        GAUSSIAN_FWHM_FACTOR
    };
    // Residual oriented so that features are positive.
    let mut r: Vec<f64> = ys.iter().map(|y| sign * (y - baseline)).collect();
    let mut p = vec![baseline];
    for _ in 0..kind.components() {
        let k = (0..r.len()).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap_or(0);
        let amp = r[k].abs();
        let fwhm = half_width_at(xs, &r, k).filter(|w| *w > 0.0).unwrap_or(0.1 * span);
        let w = fwhm / fwhm_per_width;
        p.extend([amp, xs[k], w]);
        if !kind.is_sinc() {
            for (ri, &x) in r.iter_mut().zip(xs) {
                let u = (x - xs[k]) / w;
                *ri -= amp * (-0.5 * u * u).exp();
            }
        }
    }
    p
}

fn require_converged(fit: &FitResult) -> Result<()> {
    if !fit.converged {
        return Err(Error::Domain("fit did not converge".into()));
    }
    Ok(())
}

/// Full width at half the fitted excursion of a single-feature model.
pub fn fwhm(fit: &FitResult) -> Result<f64> {
    require_converged(fit)?;
    let m = &fit.model;
    match m.kind {
        ModelKind::Sinc2Dip | ModelKind::Sinc2Peak => Ok(2.0 * sinc2_half_max_root() * m.width(0)),
        ModelKind::GaussianDips(1) | ModelKind::GaussianPeaks(1) => Ok(GAUSSIAN_FWHM_FACTOR * m.width(0)),
        k => Err(Error::Domain(format!("FWHM is defined for single-feature models, not {k:?}"))),
    }
}

/// A derived quantity with its propagated standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub stderr: f64,
}

/// Distance between the two fitted Gaussian centers.
pub fn dip_separation(fit: &FitResult) -> Result<Measurement> {
    require_converged(fit)?;
    let m = &fit.model;
    if !matches!(m.kind, ModelKind::GaussianDips(2) | ModelKind::GaussianPeaks(2)) {
        return Err(Error::Domain(format!("dip separation needs a two-Gaussian fit, not {:?}", m.kind)));
    }
    let (e1, e2) = (fit.param_stderr[2], fit.param_stderr[5]);
    Ok(Measurement {
        value: (m.center(1) - m.center(0)).abs(),
        stderr: (e1 * e1 + e2 * e2).sqrt(),
    })
}

/// Samples `map` along the segment `start → end` by bilinear interpolation.
///
/// Returns `(xs, ys)` with `xs` the signed arclength from the segment midpoint.
/// On a 1D grid the segment must run along the grid line.
pub fn extract_section<M: GridValues + ?Sized>(
    map: &M,
    start: Vec2,
    end: Vec2,
    samples: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples < 2 {
        return Err(Error::Config(format!("a section needs at least 2 samples, got {samples}")));
    }
    if !start.is_finite() || !end.is_finite() {
        return Err(Error::Range("section endpoints are not finite".into()));
    }
    let length = (end - start).norm();
    if length == 0.0 {
        return Err(Error::Range("section has zero length".into()));
    }
    let grid = map.grid();
    let values = map.values();
    let (nx, ny) = (grid.nx(), grid.ny());
    let tol = 1e-9;
    let to_index = |p: Vec2| {
        (
            (p.x - grid.origin().x) / grid.pitch(),
            (p.y - grid.origin().y) / grid.pitch(),
        )
    };
    let inside = |f: f64, n: usize| f >= -tol && f <= (n - 1) as f64 + tol;
    for p in [start, end] {
        let (fx, fy) = to_index(p);
        if !inside(fx, nx) || !inside(fy, ny) {
            return Err(Error::Range(format!(
                "section endpoint ({:.6e}, {:.6e}) lies outside the map",
                p.x, p.y
            )));
        }
    }
    let cell = |f: f64, n: usize| -> (usize, f64) {
        if n == 1 {
            return (0, 0.0);
        }
        let f = f.clamp(0.0, (n - 1) as f64);
        let i = (f.floor() as usize).min(n - 2);
        (i, f - i as f64)
    };
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for s in 0..samples {
        let t = s as f64 / (samples - 1) as f64;
        let p = start + (end - start) * t;
        let (fx, fy) = to_index(p);
        let (i, tx) = cell(fx, nx);
        let (j, ty) = cell(fy, ny);
        let v = |di: usize, dj: usize| {
            let ii = (i + di).min(nx - 1);
            let jj = (j + dj).min(ny - 1);
            values[grid.index(ii, jj)]
        };
        let y = (1.0 - ty) * ((1.0 - tx) * v(0, 0) + tx * v(1, 0)) + ty * ((1.0 - tx) * v(0, 1) + tx * v(1, 1));
        xs.push((t - 0.5) * length);
        ys.push(y);
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CorrelationMap, DetectorGrid, Statistics};

    fn grid_xs(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn sinc2_round_trip() {
        let truth = ProfileModel::sinc2_dip(1.0, 1.0, 0.3, 0.55).unwrap();
        let xs = grid_xs(81, -4.0, 4.0);
        let ys: Vec<f64> = xs.iter().map(|&x| truth.eval(x)).collect();
        let fit = fit_profile(&xs, &ys, ModelKind::Sinc2Dip, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.model.center(0) - 0.3).abs() < 1e-3 * 0.3);
        assert!((fit.model.width(0) - 0.55).abs() < 1e-3 * 0.55);
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn two_gaussian_dips_separation() {
        let truth = ProfileModel::gaussian_dips(1.0, &[(0.4, -2.5e-3, 0.6e-3), (0.35, 2.5e-3, 0.7e-3)]).unwrap();
        let xs = grid_xs(81, -5e-3, 5e-3);
        let ys: Vec<f64> = xs.iter().map(|&x| truth.eval(x)).collect();
        let fit = fit_profile(&xs, &ys, ModelKind::GaussianDips(2), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        let sep = dip_separation(&fit).unwrap();
        assert!((sep.value - 5e-3).abs() < 0.01 * 5e-3);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let xs = grid_xs(20, 0.0, 1.0);
        let fit = fit_profile(&xs, &[2.0; 20], ModelKind::Sinc2Peak, &FitOptions::default()).unwrap();
        assert!(!fit.converged && fit.degenerate);
        assert!(matches!(fwhm(&fit), Err(Error::Domain(_))));
    }

    #[test]
    fn unsorted_xs_rejected() {
        let mut xs = grid_xs(20, 0.0, 1.0);
        xs.swap(3, 4);
        let ys = vec![1.0; 20];
        assert!(matches!(
            fit_profile(&xs, &ys, ModelKind::Sinc2Dip, &FitOptions::default()),
            Err(Error::Validation { index: Some(4), .. })
        ));
    }

    #[test]
    fn too_few_points_rejected() {
        let xs = grid_xs(5, 0.0, 1.0);
        assert!(fit_profile(&xs, &[1.0, 0.5, 0.0, 0.5, 1.0], ModelKind::Sinc2Dip, &FitOptions::default()).is_err());
    }

    fn converged(model: ProfileModel) -> FitResult {
        FitResult {
            param_stderr: vec![0.0; model.params.len()],
            model,
            residual_rms: 0.0,
            iterations: 1,
            converged: true,
            degenerate: false,
        }
    }

    #[test]
    fn fwhm_values() {
        let g = converged(ProfileModel::gaussian_dips(1.0, &[(0.5, 0.0, 1e-3)]).unwrap());
        assert!((fwhm(&g).unwrap() - 2.35482e-3).abs() < 1e-8);
        let (lambda, l, d) = (780e-9, 0.91, 0.36e-3);
        let w = lambda * l / (std::f64::consts::PI * d);
        let s = converged(ProfileModel::sinc2_dip(1.0, 1.0, 0.0, w).unwrap());
        let f = fwhm(&s).unwrap();
        assert!((f - 0.8859 * lambda * l / d).abs() < 1e-4 * f);
        assert!((f - 1.747e-3).abs() < 1e-6);
        let half = converged(ProfileModel::sinc2_dip(3.0, 0.2, 1.0, w / 2.0).unwrap());
        assert_eq!(fwhm(&half).unwrap(), f / 2.0);
    }

    #[test]
    fn separation_of_coincident_centers() {
        let fit = converged(ProfileModel::gaussian_dips(1.0, &[(0.5, 1e-3, 1e-3), (0.5, 1e-3, 2e-3)]).unwrap());
        assert_eq!(dip_separation(&fit).unwrap().value, 0.0);
        let single = converged(ProfileModel::sinc2_dip(1.0, 1.0, 0.0, 1.0).unwrap());
        assert!(dip_separation(&single).is_err());
    }

    fn radial_map(f: impl Fn(f64) -> f64) -> CorrelationMap {
        let grid = DetectorGrid::centered(0.05, 81, 81).unwrap();
        let values = grid.points().iter().map(|p| f(p.norm())).collect();
        CorrelationMap::new(grid, values, Statistics::Classical, vec![0.0; grid.len()]).unwrap()
    }

    #[test]
    fn horizontal_section_hits_nodes() {
        let grid = DetectorGrid::centered(0.1, 11, 5).unwrap();
        let values = grid.points().iter().map(|p| p.x * p.x).collect();
        let map = CorrelationMap::new(grid, values, Statistics::Boson, vec![0.0; grid.len()]).unwrap();
        let y = grid.coord(0, 2).y;
        let (xs, ys) = extract_section(&map, Vec2::new(-0.5, y), Vec2::new(0.5, y), 11).unwrap();
        for (k, (x, v)) in xs.iter().zip(&ys).enumerate() {
            assert!((x - (k as f64 * 0.1 - 0.5)).abs() < 1e-12);
            assert!((v - map.values[grid.index(k, 2)]).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_section_matches_radial_profile() {
        let f = |r: f64| 1.0 - (-r * r).exp();
        let map = radial_map(f);
        let (xs, ys) = extract_section(&map, Vec2::new(-1.4, -1.4), Vec2::new(1.4, 1.4), 57).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y - f(x.abs())).abs() < 1e-3);
        }
    }

    #[test]
    fn section_errors() {
        let map = radial_map(|r| r);
        let p = Vec2::new(0.3, 0.3);
        assert!(matches!(extract_section(&map, p, p, 5), Err(Error::Range(_))));
        assert!(matches!(
            extract_section(&map, Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0), 5),
            Err(Error::Range(_))
        ));
        assert!(extract_section(&map, Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 1).is_err());
    }
}
