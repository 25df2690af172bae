//! Pipeline dispatch, output writing and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use g2ghost::fitting::Measurement;
use g2ghost::{
    dip_separation, extract_section, fit_profile, fwhm, g2_analytic, ghost_image_analytic, ghost_image_delta_limit,
    hbt_scan, run_ghost_imaging, snr_estimate, CorrelationMap, DetectorGrid, Executor, FitResult, GhostImage,
    GridValues, ModelKind, Statistics,
};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{AnalyticJob, FitJob, Job, RunConfig, SectionJob};
use crate::csv::{CsvMeta, CsvTable};
use crate::error::{CliError, CliResult};
use crate::pgm::{encode_pgm, quantize, sidecar_path, sidecar_text};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_s: f64,
    /// Canonical TOML form of the configuration; re-running it reproduces the
    /// outputs byte for byte.
    pub config: String,
    pub outputs: Vec<OutputRecord>,
    /// Parsed `summary.json`, when the command writes one.
    pub summary: Option<Value>,
}

/// An output file held in memory until the whole run has succeeded.
struct Artifact {
    name: String,
    bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: impl Into<String>, text: String) -> Self {
        Self {
            name: name.into(),
            bytes: text.into_bytes(),
        }
    }
}

fn image_artifacts(stem: &str, image: &GhostImage, meta: CsvMeta, out: &mut Vec<Artifact>) {
    out.push(Artifact::text(
        format!("{stem}.csv"),
        CsvTable::from_image(image, meta).to_text(),
    ));
    let q = quantize(&image.values);
    let pgm = format!("{stem}.pgm");
    out.push(Artifact::text(
        sidecar_path(Path::new(&pgm)).display().to_string(),
        sidecar_text(image, &q),
    ));
    out.push(Artifact {
        name: pgm,
        bytes: encode_pgm(image.scan.nx(), image.scan.ny(), &q.levels),
    });
}

fn summary(value: Value) -> Artifact {
    Artifact::text(SUMMARY_FILE, serde_json::to_string_pretty(&value).expect("json") + "\n")
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn run_hbt(cfg: &RunConfig, job: &g2ghost::HbtScanConfig, exec: &Executor) -> CliResult<Vec<Artifact>> {
    let maps = hbt_scan(job, exec)?;
    let meta = CsvMeta {
        seed: Some(cfg.seed),
        ensemble: Some(job.ensemble_size),
        ..Default::default()
    };
    let mut out = Vec::new();
    for m in &maps {
        out.push(Artifact::text(
            format!("hbt_{}.csv", m.kind),
            CsvTable::from_map(m, meta.clone()).to_text(),
        ));
    }
    let fermion = &maps[1];
    let (k_min, _) = fermion
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let boson = &maps[0];
    let (k_max, _) = boson
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let point = |g: &DetectorGrid, k: usize| {
        let p = g.point(k);
        json!([p.x, p.y])
    };
    out.push(summary(json!({
        "fermion_min": {
            "g2": fermion.values[k_min],
            "stderr": fermion.stderr[k_min],
            "position_m": point(&fermion.scan, k_min),
        },
        "boson_max": {
            "g2": boson.values[k_max],
            "stderr": boson.stderr[k_max],
            "position_m": point(&boson.scan, k_max),
        },
    })));
    Ok(out)
}

/// Central row of an image (the row nearest `y`), as a 1D profile.
fn row_profile(image: &GhostImage, y: f64) -> (Vec<f64>, Vec<f64>) {
    let g = &image.scan;
    let j = if g.is_1d() {
        0
    } else {
        (((y - g.origin().y) / g.pitch()).round().max(0.0) as usize).min(g.ny() - 1)
    };
    let xs = (0..g.nx()).map(|i| g.coord(i, j).x).collect();
    let ys = (0..g.nx()).map(|i| image.values[g.index(i, j)]).collect();
    (xs, ys)
}

fn fit_json(fit: &FitResult) -> Value {
    let fw = fwhm(fit).ok();
    let sep = dip_separation(fit).ok();
    json!({
        "model": model_name(fit.model.kind),
        "params": fit.model.params.iter().map(|v| finite(*v)).collect::<Vec<_>>(),
        "param_stderr": fit.param_stderr.iter().map(|v| finite(*v)).collect::<Vec<_>>(),
        "residual_rms": finite(fit.residual_rms),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "degenerate": fit.degenerate,
        "fwhm_m": fw.map(finite),
        "separation_m": sep.map(|m: Measurement| finite(m.value)),
        "separation_stderr_m": sep.map(|m| finite(m.stderr)),
    })
}

fn model_name(k: ModelKind) -> String {
    match k {
        ModelKind::Sinc2Dip => "sinc2_dip".into(),
        ModelKind::Sinc2Peak => "sinc2_peak".into(),
        ModelKind::GaussianDips(n) => format!("gaussian_dips({n})"),
        ModelKind::GaussianPeaks(n) => format!("gaussian_peaks({n})"),
    }
}

fn run_ghost(
    cfg: &RunConfig,
    job: &g2ghost::GhostConfig,
    fit_pinholes: bool,
    exec: &Executor,
) -> CliResult<Vec<Artifact>> {
    let images = run_ghost_imaging(job, exec)?;
    let meta = CsvMeta {
        seed: Some(cfg.seed),
        ensemble: Some(job.ensemble_size),
        ..Default::default()
    };
    let mut out = Vec::new();
    let mut snr = serde_json::Map::new();
    for kind in Statistics::ALL {
        let image = images.get(kind);
        image_artifacts(&format!("ghost_{kind}"), image, meta.clone(), &mut out);
        if image.values.len() >= 10 {
            let r = snr_estimate(image, None)?;
            snr.insert(
                kind.to_string(),
                json!({
                    "snr": finite(r.snr),
                    "excursion": r.excursion,
                    "background_std": r.background_std,
                    "degenerate": r.degenerate,
                }),
            );
        }
    }
    let mut fits = serde_json::Map::new();
    if fit_pinholes {
        let y = job.mask.grid().center().y;
        for (kind, model) in [
            (Statistics::Fermion, ModelKind::GaussianDips(2)),
            (Statistics::Boson, ModelKind::GaussianPeaks(2)),
        ] {
            let (xs, ys) = row_profile(images.get(kind), y);
            let v = match fit_profile(&xs, &ys, model, &Default::default()) {
                Ok(fit) => fit_json(&fit),
                Err(e) => json!({ "error": e.to_string() }),
            };
            fits.insert(kind.to_string(), v);
        }
    }
    out.push(summary(json!({ "snr": snr, "fits": fits })));
    Ok(out)
}

fn run_analytic(job: &AnalyticJob, exec: &Executor) -> CliResult<Vec<Artifact>> {
    let mut out = Vec::new();
    match &job.mask {
        Some(mask) => {
            for kind in Statistics::ALL {
                let image = ghost_image_analytic(mask, kind, &job.params, &job.scan, exec)?;
                image_artifacts(&format!("analytic_{kind}"), &image, CsvMeta::default(), &mut out);
            }
            if job.delta_limit {
                let image = ghost_image_delta_limit(mask)?;
                image_artifacts("analytic_delta_limit", &image, CsvMeta::default(), &mut out);
            }
        }
        None => {
            let origin = g2ghost::Vec2::ZERO;
            for kind in Statistics::ALL {
                let values = exec.ordered_map(job.scan.len(), |k| {
                    g2_analytic(job.params.separation(job.scan.point(k), origin), kind, &job.params)
                });
                let map = CorrelationMap::new(job.scan, values, kind, vec![0.0; job.scan.len()])?;
                out.push(Artifact::text(
                    format!("analytic_{kind}.csv"),
                    CsvTable::from_map(&map, CsvMeta::default()).to_text(),
                ));
            }
        }
    }
    Ok(out)
}

fn run_fit(job: &FitJob) -> CliResult<Vec<Artifact>> {
    let table = CsvTable::read(&job.input)?;
    let xs = table.xs().ok_or_else(|| {
        CliError::Config(format!(
            "fit input {} is two-dimensional; extract a section first",
            job.input.display()
        ))
    })?;
    let fit = fit_profile(&xs, &table.g2, job.model, &job.options)?;
    let curve: Vec<f64> = xs.iter().map(|&x| fit.model.eval(x)).collect();
    let n = xs.len();
    let meta = CsvMeta {
        kind: table.meta.kind,
        ..Default::default()
    };
    Ok(vec![
        Artifact::text(
            "fit.json",
            serde_json::to_string_pretty(&fit_json(&fit)).expect("json") + "\n",
        ),
        Artifact::text("fit_curve.csv", CsvTable::profile(xs, curve, vec![0.0; n], meta).to_text()),
    ])
}

/// Stderr of a table, viewed as a map for interpolation.
struct StderrView<'a>(&'a DetectorGrid, &'a [f64]);

impl GridValues for StderrView<'_> {
    fn grid(&self) -> &DetectorGrid {
        self.0
    }
    fn values(&self) -> &[f64] {
        self.1
    }
}

fn run_section(job: &SectionJob) -> CliResult<Vec<Artifact>> {
    let table = CsvTable::read(&job.input)?;
    let map = table.to_map()?;
    let (xs, ys) = extract_section(&map, job.start, job.end, job.samples)?;
    let (_, es) = extract_section(&StderrView(&map.scan, &map.stderr), job.start, job.end, job.samples)?;
    Ok(vec![Artifact::text(
        "section.csv",
        CsvTable::profile(xs, ys, es, table.meta.clone()).to_text(),
    )])
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files written so far; removed again if the run fails before completing.
struct Written {
    paths: Vec<PathBuf>,
}

impl Written {
    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> CliResult<()> {
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.paths.push(path);
        Ok(())
    }

    fn rollback(self) {
        for p in self.paths {
            if let Err(e) = std::fs::remove_file(&p) {
                log::warn!("could not remove partial output {}: {e}", p.display());
            }
        }
    }
}

/// Executes the configured command and writes its outputs plus `manifest.json`
/// into the output directory.
///
/// All computation happens before the first write; if any write fails, files
/// already written by this run are removed.
pub fn run(cfg: &RunConfig) -> CliResult<RunManifest> {
    let start = Instant::now();
    let exec = Executor::new(cfg.workers);
    log::info!(
        "running {} with seed {} on {} worker(s)",
        cfg.command,
        cfg.seed,
        exec.workers()
    );
    let artifacts = match &cfg.job {
        Job::HbtScan(job) => run_hbt(cfg, job, &exec)?,
        Job::GhostImage { config, fit_pinholes } => run_ghost(cfg, config, *fit_pinholes, &exec)?,
        Job::Analytic(job) => run_analytic(job, &exec)?,
        Job::Fit(job) => run_fit(job)?,
        Job::Section(job) => run_section(job)?,
    };

    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Written { paths: Vec::new() };
    let mut outputs = Vec::with_capacity(artifacts.len());
    let mut summary = None;
    for a in &artifacts {
        if let Err(e) = written.write(dir.join(&a.name), &a.bytes) {
            written.rollback();
            return Err(e);
        }
        outputs.push(OutputRecord {
            file: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len() as u64,
        });
        if a.name == SUMMARY_FILE {
            summary = serde_json::from_slice(&a.bytes).ok();
        }
    }
    let manifest = RunManifest {
        artifact: "g2ghost".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cfg.command.as_str().into(),
        seed: cfg.seed,
        workers: exec.workers(),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: cfg.canonical_toml(),
        outputs,
        summary,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("json") + "\n";
    if let Err(e) = written.write(dir.join(MANIFEST_FILE), text.as_bytes()) {
        written.rollback();
        return Err(e);
    }
    Ok(manifest)
}
