//! Commands behind the `objmotion` binary. Each `cmd_*` function does the
//! work of one subcommand and returns what it wrote, so tests can drive the
//! pipeline without spawning processes.

pub mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use objmotion::eval::{aggregate_reports_with, evaluate, AeeReport};
use objmotion::flowfield::{
    inject_translation_field, rasterize_translation_field, read_flo_file, render_flow_png,
    render_side_by_side, write_flo, write_flo_file, write_png,
};
use objmotion::matching::{match_instances_traced, MatchSet, MatchTrace};
use objmotion::synthgen::{generate_indexed_sample, read_manifest, write_sample, Manifest};
use objmotion::{CandidateDocument, FlowField};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{GeneratorConfig, RunConfig};

pub const DATASET_INDEX: &str = "dataset.json";
pub const MATCHES_FILE: &str = "matches.json";
pub const DT_FILE: &str = "dt.flo";

/// Runs `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        ensure!(n >= 1, "--jobs must be at least 1");
        builder = builder.num_threads(n);
    }
    Ok(builder.build().context("building thread pool")?.install(f))
}

pub fn sample_dir_name(index: usize) -> String {
    format!("sample_{index:05}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub samples: Vec<String>,
}

/// Sample directories of a data set, in index order.
pub fn dataset_samples(root: &Path) -> Result<Vec<PathBuf>> {
    let path = root.join(DATASET_INDEX);
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let index: DatasetIndex =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(index.samples.iter().map(|s| root.join(s)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Spread {
    min: f64,
    mean: f64,
    max: f64,
}

fn spread(values: &[f64]) -> Option<Spread> {
    if values.is_empty() {
        return None;
    }
    Some(Spread {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

fn fmt_spread(name: &str, unit: &str, s: Option<Spread>) -> String {
    match s {
        Some(s) => format!(
            "{name}: min {:.2}{unit}, mean {:.2}{unit}, max {:.2}{unit}\n",
            s.min, s.mean, s.max
        ),
        None => format!("{name}: n/a\n"),
    }
}

/// Object counts and motion statistics of a generated data set.
pub fn dataset_summary(manifests: &[Manifest]) -> String {
    let counts: Vec<f64> = manifests.iter().map(|m| m.objects.len() as f64).collect();
    let objects = manifests.iter().flat_map(|m| &m.objects);
    let lengths: Vec<f64> = objects
        .clone()
        .map(|o| o.sprite.translation[0].hypot(o.sprite.translation[1]))
        .collect();
    let angles: Vec<f64> = objects
        .map(|o| o.sprite.rotation.abs().to_degrees())
        .collect();
    let mut out = format!("samples: {}\nobjects: {}\n", manifests.len(), lengths.len());
    out += &fmt_spread("objects per sample", "", spread(&counts));
    out += &fmt_spread("translation", " px", spread(&lengths));
    out += &fmt_spread("rotation", " deg", spread(&angles));
    out
}

/// Writes `count` samples under `out` plus a `dataset.json` index.
pub fn cmd_generate(
    cfg: &RunConfig,
    count: usize,
    out: &Path,
    jobs: Option<usize>,
) -> Result<Vec<Manifest>> {
    cfg.validate()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let g = &cfg.generator;
    let manifests = with_jobs(jobs, || {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let dir = out.join(sample_dir_name(i));
                let sample = generate_indexed_sample(&g.scene, &g.noise, i as u64)
                    .with_context(|| format!("generating sample {i}"))?;
                write_sample(&dir, &sample).with_context(|| format!("writing {}", dir.display()))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let index = DatasetIndex {
        samples: (0..count).map(sample_dir_name).collect(),
    };
    let path = out.join(DATASET_INDEX);
    std::fs::write(&path, serde_json::to_string_pretty(&index)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(manifests)
}

pub fn read_candidates(path: &Path) -> Result<CandidateDocument> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    CandidateDocument::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_matches(path: &Path) -> Result<MatchSet> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MatchSet::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Accepts either a candidate document or an empty file.
fn read_candidates_or_empty(path: &Path) -> Result<Option<CandidateDocument>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim().is_empty() {
        return Ok(None);
    }
    CandidateDocument::from_json(&text)
        .map(Some)
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn cmd_match(candidates: &Path, cfg: &RunConfig) -> Result<(MatchSet, MatchTrace)> {
    cfg.matching.validate()?;
    let Some(doc) = read_candidates_or_empty(candidates)? else {
        return Ok((MatchSet::default(), MatchTrace::default()));
    };
    Ok(match_instances_traced(
        &doc.reference(),
        &doc.target(),
        &cfg.matching,
    ))
}

pub fn match_summary(m: &MatchSet, t: &MatchTrace) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "candidates: {} ref, {} tgt",
        t.candidates_ref, t.candidates_tgt
    );
    let _ = writeln!(
        s,
        "clusters: {} (noise {}, pruned {})",
        t.clusters, t.noise, t.pruned
    );
    let _ = writeln!(
        s,
        "sub-clusters: {} ref, {} tgt",
        t.subclusters_ref, t.subclusters_tgt
    );
    let _ = writeln!(
        s,
        "matches: {}; unmatched: {} ref, {} tgt",
        m.pairs.len(),
        m.unmatched_ref.len(),
        m.unmatched_tgt.len()
    );
    s
}

/// Matches every sample of a data set and writes `matches.json` next to
/// its candidates.
pub fn cmd_match_dataset(
    root: &Path,
    cfg: &RunConfig,
    jobs: Option<usize>,
) -> Result<Vec<(MatchSet, MatchTrace)>> {
    let dirs = dataset_samples(root)?;
    with_jobs(jobs, || {
        dirs.par_iter()
            .map(|dir| {
                let manifest = read_manifest(dir)?;
                let result = cmd_match(&dir.join(&manifest.files.candidates), cfg)?;
                let path = dir.join(MATCHES_FILE);
                std::fs::write(&path, result.0.to_json()?)
                    .with_context(|| format!("writing {}", path.display()))?;
                Ok(result)
            })
            .collect()
    })?
}

/// Rasterizes the translation field of `matches`, writes it to `out` and
/// checks the written file reads back to the same field.
pub fn cmd_rasterize(
    matches: &Path,
    candidates: &Path,
    dims: Option<(usize, usize)>,
    out: &Path,
) -> Result<FlowField> {
    let m = read_matches(matches)?;
    let doc = read_candidates(candidates)?;
    let (w, h) = dims.unwrap_or((doc.width, doc.height));
    let field = rasterize_translation_field(&m, &doc.reference(), &doc.target(), w, h)?;
    write_flo_file(out, &field)?;
    let back = read_flo_file(out)?;
    ensure!(
        write_flo(&back)? == write_flo(&field)?,
        "{} did not read back identically",
        out.display()
    );
    Ok(field)
}

pub fn cmd_rasterize_dataset(root: &Path, jobs: Option<usize>) -> Result<Vec<FlowField>> {
    let dirs = dataset_samples(root)?;
    with_jobs(jobs, || {
        dirs.par_iter()
            .map(|dir| {
                let manifest = read_manifest(dir)?;
                cmd_rasterize(
                    &dir.join(MATCHES_FILE),
                    &dir.join(&manifest.files.candidates),
                    None,
                    &dir.join(DT_FILE),
                )
            })
            .collect()
    })?
}

pub fn level_file_name(level: u32) -> String {
    format!("level_{level}.flo")
}

/// Parses `LEVEL=PATH`.
pub fn parse_level_path(s: &str) -> Result<(u32, PathBuf)> {
    let (level, path) = s
        .split_once('=')
        .with_context(|| format!("expected LEVEL=PATH, got {s:?}"))?;
    let level: u32 = level
        .trim()
        .parse()
        .with_context(|| format!("bad level in {s:?}"))?;
    Ok((level, PathBuf::from(path)))
}

/// Injects `dt` into the base pyramid and writes `level_<s>.flo` files to
/// `out`. Without base levels, a zero pyramid sized from `dt` is used.
pub fn cmd_inject(
    dt: &Path,
    base: &[(u32, PathBuf)],
    cfg: &RunConfig,
    out: &Path,
) -> Result<BTreeMap<u32, FlowField>> {
    cfg.injection.validate()?;
    let dt = read_flo_file(dt)?;
    let mut pyramid = BTreeMap::new();
    if base.is_empty() {
        for &level in cfg.injection.alphas.keys() {
            let f = 1usize << (level - 1);
            ensure!(
                dt.width() % f == 0 && dt.height() % f == 0,
                "dt of {}x{} cannot be pooled to level {level}",
                dt.width(),
                dt.height()
            );
            pyramid.insert(level, FlowField::zeros(dt.width() / f, dt.height() / f)?);
        }
    } else {
        for (level, path) in base {
            if pyramid.insert(*level, read_flo_file(path)?).is_some() {
                bail!("level {level} given twice");
            }
        }
    }
    let injected = inject_translation_field(&pyramid, &dt, &cfg.injection)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (level, field) in &injected {
        write_flo_file(out.join(level_file_name(*level)), field)?;
    }
    Ok(injected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub name: String,
    #[serde(flatten)]
    pub report: AeeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub samples: Vec<SampleReport>,
    pub aggregate: AeeReport,
}

impl EvalOutput {
    pub fn csv(&self) -> String {
        format!(
            "{}\n{}\n",
            self.aggregate.csv_header(),
            self.aggregate.csv_row()
        )
    }
}

/// Scores one estimate against one truth file, or, given two data-set
/// roots, every sample's `estimate_file` against its `truth_file`.
pub fn cmd_eval(
    estimate: &Path,
    truth: &Path,
    estimate_file: &str,
    truth_file: &str,
    cfg: &RunConfig,
    jobs: Option<usize>,
) -> Result<EvalOutput> {
    cfg.eval.validate()?;
    let pairs: Vec<(String, PathBuf, PathBuf)> = if truth.is_dir() {
        ensure!(
            estimate.is_dir(),
            "truth is a directory but estimate {} is not",
            estimate.display()
        );
        dataset_samples(truth)?
            .into_iter()
            .map(|dir| {
                let name = dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (
                    name.clone(),
                    estimate.join(&name).join(estimate_file),
                    dir.join(truth_file),
                )
            })
            .collect()
    } else {
        vec![(
            estimate.display().to_string(),
            estimate.to_path_buf(),
            truth.to_path_buf(),
        )]
    };
    let samples = with_jobs(jobs, || {
        pairs
            .par_iter()
            .map(|(name, e, t)| {
                let est = read_flo_file(e)?;
                let gt = read_flo_file(t)?;
                let report =
                    evaluate(&est, &gt, &cfg.eval).with_context(|| format!("evaluating {name}"))?;
                Ok(SampleReport {
                    name: name.clone(),
                    report,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let reports: Vec<AeeReport> = samples.iter().map(|s| s.report.clone()).collect();
    let aggregate = aggregate_reports_with(&reports, cfg.eval.aggregate)?;
    Ok(EvalOutput { samples, aggregate })
}

/// Renders `flow`, or `flow` next to `compare` with a shared norm.
pub fn cmd_viz(
    flow: &Path,
    compare: Option<&Path>,
    max_norm: Option<f64>,
    out: &Path,
) -> Result<()> {
    if let Some(n) = max_norm {
        ensure!(n.is_finite() && n > 0.0, "--max-norm must be positive");
    }
    let field = read_flo_file(flow)?;
    let img = match compare {
        Some(other) => render_side_by_side(&field, &read_flo_file(other)?, max_norm)?,
        None => render_flow_png(&field, max_norm),
    };
    write_png(&img, out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub sample: String,
    pub candidates: usize,
    pub match_ms: f64,
    pub rasterize_ms: f64,
}

fn bench_one(sample: String, doc: &CandidateDocument, cfg: &RunConfig) -> Result<BenchRow> {
    let (r, t) = (doc.reference(), doc.target());
    let start = Instant::now();
    let (m, _) = match_instances_traced(&r, &t, &cfg.matching);
    let match_ms = start.elapsed().as_secs_f64() * 1e3;
    let start = Instant::now();
    rasterize_translation_field(&m, &r, &t, doc.width, doc.height)?;
    let rasterize_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(BenchRow {
        sample,
        candidates: doc.candidates.len(),
        match_ms,
        rasterize_ms,
    })
}

/// Times matching and rasterization per scene, sequentially. Scenes come
/// from a data set on disk or are generated in memory.
pub fn cmd_bench(data: Option<&Path>, count: usize, cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    match data {
        Some(root) => {
            for dir in dataset_samples(root)? {
                let manifest = read_manifest(&dir)?;
                let doc = read_candidates(&dir.join(&manifest.files.candidates))?;
                let name = dir
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                rows.push(bench_one(name, &doc, cfg)?);
            }
        }
        None => {
            let g = &cfg.generator;
            for i in 0..count {
                let sample = generate_indexed_sample(&g.scene, &g.noise, i as u64)?;
                rows.push(bench_one(
                    sample_dir_name(i),
                    &sample.candidates.document(),
                    cfg,
                )?);
            }
        }
    }
    Ok(rows)
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut s = String::from("sample,candidates,match_ms,rasterize_ms\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.3},{:.3}",
            r.sample, r.candidates, r.match_ms, r.rasterize_ms
        );
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let _ = writeln!(
            s,
            "mean,,{:.3},{:.3}",
            rows.iter().map(|r| r.match_ms).sum::<f64>() / n,
            rows.iter().map(|r| r.rasterize_ms).sum::<f64>() / n
        );
    }
    s
}
