//! Multi-seed experiment driver, ablation grid and result files.
//!
//! Output layout of [`run_experiment`] under `output_dir`:
//!
//! ```text
//! seed_<s>_windows.csv    one WindowRecord per line (header: WindowRecord::CSV_HEADER)
//! seed_<s>_summary.json   SeedSummary
//! aggregate.json          Aggregate (best / mean / std across seeds)
//! baseline/sam_windows.csv, baseline/sam_summary.json   when `baseline` is set
//! archives/seed_<s>_window_<t>.csv                      when `dump_archives` is set
//! ```
//!
//! [`compare_ablations`] writes `ablation.csv` with the columns of
//! [`AblationRow::CSV_HEADER`].

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_sam_baseline, run_with, Engine, EngineConfig, RunResult, Selection, StreamClassifier};
use crate::error::{Error, Result};
use crate::metrics::WindowRecord;
use crate::smpso::Archive;
use crate::stream::{self, generate_bias_stream, BiasStreamConfig, Chunk, IngestReport, StreamManifest};
use crate::trend::TriggerPolicy;

/// Where the stream comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Path to a [`StreamManifest`] JSON file.
    Manifest(PathBuf),
    /// Path to a [`BiasStreamConfig`] JSON file.
    Generator(PathBuf),
    /// Inline generator configuration.
    Synthetic(BiasStreamConfig),
}

fn default_seeds() -> Vec<u64> {
    (0..30).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: DataSource,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub dump_archives: bool,
}

impl ExperimentSpec {
    /// Load a spec; relative paths resolve against the spec's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut spec.source {
            DataSource::Manifest(p) | DataSource::Generator(p) => resolve(p),
            DataSource::Synthetic(_) => {}
        }
        resolve(&mut spec.output_dir);
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        self.engine.validate()
    }
}

/// Materialize the stream named by a data source.
pub fn load_stream(source: &DataSource) -> Result<Vec<Chunk>> {
    match source {
        DataSource::Manifest(path) => Ok(stream::ingest(&StreamManifest::from_path(path)?)?.chunks),
        DataSource::Generator(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let config: BiasStreamConfig = serde_json::from_str(&text)?;
            generate_bias_stream(&config)
        }
        DataSource::Synthetic(config) => generate_bias_stream(config),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub instances: usize,
    pub windows: usize,
    pub accuracy: f64,
    pub discrimination: f64,
    pub abs_discrimination: f64,
    pub triggers: usize,
    pub runtime_ms: f64,
}

impl SeedSummary {
    fn from_run(seed: u64, run: &RunResult) -> Self {
        let s = &run.summary;
        Self {
            seed,
            instances: s.instances,
            windows: s.windows,
            accuracy: s.accuracy,
            discrimination: s.discrimination,
            abs_discrimination: s.abs_discrimination,
            triggers: s.triggers,
            runtime_ms: s.wall_time_ms,
        }
    }
}

/// Best, mean and sample standard deviation of one metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub best: f64,
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// `higher_is_better` picks max or min as `best`. The standard
    /// deviation uses the n-1 denominator and is 0 for a single value.
    pub fn of(values: &[f64], higher_is_better: bool) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let best = if higher_is_better {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            values.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { best, mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: usize,
    pub accuracy: Stat,
    pub abs_discrimination: Stat,
    pub triggers: Stat,
    pub runtime_ms: Stat,
}

impl Aggregate {
    pub fn from_summaries(summaries: &[SeedSummary]) -> Result<Self> {
        if summaries.is_empty() {
            return Err(Error::Empty("seed summaries"));
        }
        let col = |f: fn(&SeedSummary) -> f64| summaries.iter().map(f).collect::<Vec<_>>();
        Ok(Self {
            seeds: summaries.len(),
            accuracy: Stat::of(&col(|s| s.accuracy), true),
            abs_discrimination: Stat::of(&col(|s| s.abs_discrimination), false),
            triggers: Stat::of(&col(|s| s.triggers as f64), false),
            runtime_ms: Stat::of(&col(|s| s.runtime_ms), false),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub summaries: Vec<SeedSummary>,
    pub aggregate: Aggregate,
    pub baseline: Option<SeedSummary>,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(create_file(path)?, value)?;
    Ok(())
}

pub fn write_window_csv(path: &Path, records: &[WindowRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(create_file(path)?);
    writer.write_record(WindowRecord::CSV_HEADER)?;
    for r in records {
        writer.write_record(r.csv_row())?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Archive members as `alpha_0..alpha_{d-1},err,disc` rows.
pub fn write_archive_csv(path: &Path, archive: &Archive) -> Result<()> {
    let mut writer = csv::Writer::from_writer(create_file(path)?);
    let dim = archive.members().first().map_or(0, |s| s.position.len());
    let mut header: Vec<String> = (0..dim).map(|i| format!("alpha_{i}")).collect();
    header.extend(["err".to_string(), "disc".to_string()]);
    writer.write_record(&header)?;
    for s in archive.members() {
        let mut row: Vec<String> = s.position.iter().map(|v| v.to_string()).collect();
        row.extend(s.objectives.iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// One engine run for `seed`; dumps archives into `archive_dir` after
/// every trigger when given.
pub fn run_seed(chunks: &[Chunk], config: &EngineConfig, seed: u64, archive_dir: Option<&Path>) -> Result<RunResult> {
    let first = chunks.first().ok_or(Error::Empty("stream"))?;
    let config = EngineConfig {
        seed,
        ..config.clone()
    };
    let mut engine = Engine::new(first.dim(), config)?;
    match archive_dir {
        None => run_with(&mut engine, chunks),
        Some(dir) => {
            let mut dumping = ArchiveDumper {
                engine,
                dir,
                seed,
            };
            run_with(&mut dumping, chunks)
        }
    }
}

struct ArchiveDumper<'a> {
    engine: Engine,
    dir: &'a Path,
    seed: u64,
}

impl StreamClassifier for ArchiveDumper<'_> {
    fn step(&mut self, chunk: &Chunk) -> Result<crate::engine::StepOutcome> {
        let outcome = self.engine.step(chunk)?;
        if outcome.record.triggered {
            if let Some(archive) = self.engine.last_archive() {
                let path = self
                    .dir
                    .join(format!("seed_{}_window_{}.csv", self.seed, outcome.record.window));
                write_archive_csv(&path, archive)?;
            }
        }
        Ok(outcome)
    }
}

/// Run every seed of an experiment and write per-seed and aggregate files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let chunks = load_stream(&spec.source)?;
    let out = &spec.output_dir;
    create_dir(out)?;
    let archive_dir = out.join("archives");
    if spec.dump_archives {
        create_dir(&archive_dir)?;
    }

    let summaries: Vec<SeedSummary> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let dir = spec.dump_archives.then_some(archive_dir.as_path());
            let run = run_seed(&chunks, &spec.engine, seed, dir)?;
            write_window_csv(&out.join(format!("seed_{seed}_windows.csv")), &run.records)?;
            let summary = SeedSummary::from_run(seed, &run);
            write_json(&out.join(format!("seed_{seed}_summary.json")), &summary)?;
            Ok(summary)
        })
        .collect::<Result<_>>()?;

    let aggregate = Aggregate::from_summaries(&summaries)?;
    write_json(&out.join("aggregate.json"), &aggregate)?;

    let baseline = if spec.baseline {
        let dir = out.join("baseline");
        create_dir(&dir)?;
        let run = run_sam_baseline(&chunks, &spec.engine.sam)?;
        write_window_csv(&dir.join("sam_windows.csv"), &run.records)?;
        let summary = SeedSummary::from_run(spec.engine.sam.seed, &run);
        write_json(&dir.join("sam_summary.json"), &summary)?;
        Some(summary)
    } else {
        None
    };

    Ok(ExperimentReport {
        summaries,
        aggregate,
        baseline,
    })
}

/// Mean results of one selection x trigger cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub selection: Selection,
    pub trigger: TriggerPolicy,
    pub mean_error: f64,
    pub mean_abs_discrimination: f64,
    pub mean_runtime_ms: f64,
    pub mean_triggers: f64,
}

impl AblationRow {
    pub const CSV_HEADER: [&'static str; 6] = [
        "selection",
        "trigger",
        "mean_error",
        "mean_abs_discrimination",
        "mean_runtime_ms",
        "mean_triggers",
    ];
}

pub const SELECTIONS: [Selection; 3] = [Selection::Majority, Selection::Random, Selection::Knee];
pub const TRIGGERS: [TriggerPolicy; 3] = [TriggerPolicy::Hp, TriggerPolicy::Every, TriggerPolicy::Previous];

/// Run the 3x3 selection x trigger grid over shared seeds and write
/// `ablation.csv`. Cells run one after another; seeds within a cell run
/// in parallel.
pub fn compare_ablations(spec: &ExperimentSpec) -> Result<Vec<AblationRow>> {
    spec.validate()?;
    let chunks = load_stream(&spec.source)?;
    create_dir(&spec.output_dir)?;
    let mut rows = Vec::with_capacity(9);
    for selection in SELECTIONS {
        for trigger in TRIGGERS {
            let config = EngineConfig {
                selection,
                trigger,
                ..spec.engine.clone()
            };
            let summaries: Vec<SeedSummary> = spec
                .seeds
                .par_iter()
                .map(|&seed| Ok(SeedSummary::from_run(seed, &run_seed(&chunks, &config, seed, None)?)))
                .collect::<Result<_>>()?;
            let mean = |f: fn(&SeedSummary) -> f64| summaries.iter().map(f).sum::<f64>() / summaries.len() as f64;
            rows.push(AblationRow {
                selection,
                trigger,
                mean_error: mean(|s| 1.0 - s.accuracy),
                mean_abs_discrimination: mean(|s| s.abs_discrimination),
                mean_runtime_ms: mean(|s| s.runtime_ms),
                mean_triggers: mean(|s| s.triggers as f64),
            });
        }
    }
    let path = spec.output_dir.join("ablation.csv");
    let mut writer = csv::Writer::from_writer(create_file(&path)?);
    writer.write_record(AblationRow::CSV_HEADER)?;
    for r in &rows {
        writer.write_record([
            r.selection.to_string(),
            r.trigger.to_string(),
            r.mean_error.to_string(),
            r.mean_abs_discrimination.to_string(),
            format!("{:.3}", r.mean_runtime_ms),
            r.mean_triggers.to_string(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Dataset-level facts about a manifest's stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inspection {
    pub instances: usize,
    pub dim: usize,
    pub windows: usize,
    pub discrimination: f64,
    pub report: IngestReport,
}

pub fn inspect(manifest: &StreamManifest) -> Result<Inspection> {
    let stream = stream::ingest(manifest)?;
    Ok(Inspection {
        instances: stream.len(),
        dim: stream.dim(),
        windows: stream.chunks.len(),
        discrimination: stream::dataset_discrimination(&stream.chunks)?,
        report: stream.report,
    })
}
