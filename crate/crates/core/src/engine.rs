//! The prequential fairness-aware stream classifier.
//!
//! Each window is predicted by an ensemble of weighted SAM-kNN members
//! (one per feature-weight vector on the current front), scored, pushed
//! into the discrimination history and, when the trigger fires, used to
//! re-optimize the front before the bank learns it.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, WindowRecord};
use crate::samknn::{MemoryBank, SamConfig, WeightVector};
use crate::smpso::{self, knee_point, Archive, ObjectivePair, SmpsoParams};
use crate::stream::{Chunk, Group};
use crate::trend::{DiscriminationHistory, Trigger, TriggerPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Every front member votes.
    Majority,
    /// One uniformly drawn member per trigger.
    Random,
    /// The knee of the front.
    Knee,
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(Selection::Majority),
            "random" => Ok(Selection::Random),
            "knee" => Ok(Selection::Knee),
            other => Err(Error::InvalidConfig(format!("unknown selection `{other}`"))),
        }
    }
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Selection::Majority => "majority",
            Selection::Random => "random",
            Selection::Knee => "knee",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// A single all-ones vector: plain SAM-kNN until the first trigger.
    Ones,
    /// `init_count` uniform random vectors.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub trigger: TriggerPolicy,
    pub selection: Selection,
    pub phi: f64,
    pub theta: f64,
    pub lambda: f64,
    pub init: InitMode,
    pub init_count: usize,
    /// Seed the swarm with the current front.
    pub warm_start: bool,
    /// Label assigned when ensemble votes split evenly.
    pub tie_label: u8,
    pub smpso: SmpsoParams,
    pub sam: SamConfig,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            trigger: TriggerPolicy::Hp,
            selection: Selection::Majority,
            phi: 0.10,
            theta: 0.07,
            lambda: 100.0,
            init: InitMode::Ones,
            init_count: 10,
            warm_start: true,
            tie_label: 1,
            smpso: SmpsoParams::default(),
            sam: SamConfig::default(),
            seed: 0,
        }
    }
}

impl EngineConfig {
    /// Reduced budgets for desk-scale runs: STM and LTM caps of 500 and a
    /// 20-particle swarm running 5 iterations.
    pub fn desk_scale() -> Self {
        let mut config = Self::default();
        config.sam.stm_cap = 500;
        config.sam.ltm_cap = 500;
        config.smpso.swarm_size = 20;
        config.smpso.iterations = 5;
        config
    }

    pub fn validate(&self) -> Result<()> {
        // phi above 1 is allowed and means the trend trigger never fires.
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return Err(Error::InvalidConfig("phi must be a non-negative number".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig("theta must lie in [0, 1]".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("lambda must be positive".into()));
        }
        if self.tie_label > 1 {
            return Err(Error::InvalidConfig("tie_label must be 0 or 1".into()));
        }
        if self.init == InitMode::Random && self.init_count == 0 {
            return Err(Error::InvalidConfig("init_count must be positive".into()));
        }
        self.sam.validate()?;
        self.smpso.validate()
    }

    pub fn trigger(&self) -> Trigger {
        Trigger {
            policy: self.trigger,
            phi: self.phi,
            theta: self.theta,
            lambda: self.lambda,
        }
    }
}

/// How a window is predicted from the front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    /// Per-instance majority over all members; even splits get `tie_label`.
    Majority { tie_label: u8 },
    /// Only the member at this index predicts.
    Single(usize),
}

/// Predict a window with the ensemble described by `front` and `vote`.
pub fn predict_window(chunk: &Chunk, front: &[WeightVector], bank: &MemoryBank, vote: Vote) -> Result<Vec<u8>> {
    if front.is_empty() {
        return Err(Error::Empty("pareto front"));
    }
    match vote {
        Vote::Single(i) => {
            let member = front.get(i).ok_or(Error::Empty("designated front member"))?;
            bank.predict_chunk(chunk, Some(member))
        }
        Vote::Majority { tie_label } => {
            let per_member: Vec<Vec<u8>> = front
                .par_iter()
                .map(|alpha| bank.predict_chunk(chunk, Some(alpha)))
                .collect::<Result<_>>()?;
            Ok(majority_vote(&per_member, tie_label))
        }
    }
}

/// Column-wise majority over member prediction rows.
pub fn majority_vote(per_member: &[Vec<u8>], tie_label: u8) -> Vec<u8> {
    let m = per_member.len();
    let n = per_member.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            let ones = per_member.iter().filter(|row| row[i] == 1).count();
            match (2 * ones).cmp(&m) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => tie_label,
            }
        })
        .collect()
}

/// Predictions and metrics for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub predictions: Vec<u8>,
    pub record: WindowRecord,
}

/// A test-then-train stream learner.
pub trait StreamClassifier {
    fn step(&mut self, chunk: &Chunk) -> Result<StepOutcome>;
}

fn score_window(chunk: &Chunk, predictions: &[u8]) -> Result<(f64, metrics::Discrimination)> {
    Ok((
        metrics::accuracy(predictions, &chunk.labels())?,
        metrics::discrimination(predictions, &chunk.groups())?,
    ))
}

fn check_chunk(bank: &MemoryBank, chunk: &Chunk) -> Result<()> {
    if chunk.dim() != bank.dim() {
        return Err(Error::DimensionMismatch {
            expected: bank.dim(),
            got: chunk.dim(),
        });
    }
    Ok(())
}

/// Unweighted SAM-kNN reference learner.
#[derive(Debug, Clone)]
pub struct SamBaseline {
    bank: MemoryBank,
    window: usize,
}

impl SamBaseline {
    pub fn new(dim: usize, config: SamConfig) -> Result<Self> {
        Ok(Self {
            bank: MemoryBank::new(dim, config)?,
            window: 0,
        })
    }

    pub fn bank(&self) -> &MemoryBank {
        &self.bank
    }
}

impl StreamClassifier for SamBaseline {
    fn step(&mut self, chunk: &Chunk) -> Result<StepOutcome> {
        let started = Instant::now();
        check_chunk(&self.bank, chunk)?;
        self.window += 1;
        let predictions = if self.bank.stm().is_empty() {
            vec![0; chunk.len()]
        } else {
            self.bank.predict_chunk(chunk, None)?
        };
        let (accuracy, disc) = score_window(chunk, &predictions)?;
        self.bank.fit_chunk(chunk)?;
        Ok(StepOutcome {
            predictions,
            record: WindowRecord {
                window: self.window,
                accuracy,
                discrimination: disc.value,
                abs_discrimination: disc.abs(),
                triggered: false,
                pareto_size: 0,
                wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            },
        })
    }
}

/// The fairness-aware ensemble learner.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    bank: MemoryBank,
    front: Vec<WeightVector>,
    front_objectives: Option<Vec<ObjectivePair>>,
    designated: Option<usize>,
    history: DiscriminationHistory,
    rng: ChaCha8Rng,
    window: usize,
    last_archive: Option<Archive>,
}

impl Engine {
    pub fn new(dim: usize, config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let front = match config.init {
            InitMode::Ones => vec![WeightVector::ones(dim)],
            InitMode::Random => (0..config.init_count)
                .map(|_| {
                    WeightVector::new((0..dim).map(|_| rng.random::<f64>()).collect())
                        .expect("uniform draws lie in [0, 1)")
                })
                .collect(),
        };
        // Before the first trigger there are no objectives: the random
        // strategy draws a member, the knee strategy uses the first one.
        let designated = match config.selection {
            Selection::Majority => None,
            Selection::Random => Some(rng.random_range(0..front.len())),
            Selection::Knee => Some(0),
        };
        Ok(Self {
            bank: MemoryBank::new(dim, config.sam.clone())?,
            front,
            front_objectives: None,
            designated,
            history: DiscriminationHistory::new(),
            rng,
            window: 0,
            last_archive: None,
            config,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn bank(&self) -> &MemoryBank {
        &self.bank
    }

    pub fn front(&self) -> &[WeightVector] {
        &self.front
    }

    pub fn front_objectives(&self) -> Option<&[ObjectivePair]> {
        self.front_objectives.as_deref()
    }

    pub fn designated(&self) -> Option<usize> {
        self.designated
    }

    pub fn history(&self) -> &DiscriminationHistory {
        &self.history
    }

    /// Archive produced by the most recent trigger.
    pub fn last_archive(&self) -> Option<&Archive> {
        self.last_archive.as_ref()
    }

    fn vote(&self) -> Vote {
        match self.designated {
            Some(i) => Vote::Single(i),
            None => Vote::Majority {
                tie_label: self.config.tie_label,
            },
        }
    }

    /// Predict a window without learning from it. Before any data has been
    /// learned every instance is predicted negative.
    pub fn predict(&self, chunk: &Chunk) -> Result<Vec<u8>> {
        check_chunk(&self.bank, chunk)?;
        if self.bank.stm().is_empty() {
            return Ok(vec![0; chunk.len()]);
        }
        predict_window(chunk, &self.front, &self.bank, self.vote())
    }

    fn reoptimize(&mut self, chunk: &Chunk) -> Result<()> {
        let warm: &[WeightVector] = if self.config.warm_start { &self.front } else { &[] };
        let archive = smpso::optimize(chunk, &self.bank, warm, &self.config.smpso, &mut self.rng)?;
        let pareto = archive.to_pareto();
        self.designated = match self.config.selection {
            Selection::Majority => None,
            Selection::Random => Some(self.rng.random_range(0..pareto.len())),
            Selection::Knee => Some(knee_point(&archive.objectives())?.0),
        };
        self.front = pareto.iter().map(|p| p.alpha.clone()).collect();
        self.front_objectives = Some(pareto.iter().map(|p| p.objectives).collect());
        self.last_archive = Some(archive);
        Ok(())
    }

    fn restore_parts(
        config: EngineConfig,
        bank: MemoryBank,
        checkpoint: &EngineCheckpoint,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::from_seed(checkpoint.rng_seed);
        rng.set_stream(checkpoint.rng_stream);
        let word_pos: u128 = checkpoint
            .rng_word_pos
            .parse()
            .map_err(|_| Error::Snapshot("bad rng position".into()))?;
        rng.set_word_pos(word_pos);
        Ok(Self {
            config,
            bank,
            front: checkpoint.front.clone(),
            front_objectives: checkpoint.front_objectives.clone(),
            designated: checkpoint.designated,
            history: DiscriminationHistory::from_values(&checkpoint.history),
            rng,
            window: checkpoint.window,
            last_archive: None,
        })
    }

    /// Write `engine.json` and `memory.bin` into `dir`.
    pub fn save_checkpoint(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let checkpoint = EngineCheckpoint {
            config: self.config.clone(),
            window: self.window,
            front: self.front.clone(),
            front_objectives: self.front_objectives.clone(),
            designated: self.designated,
            history: self.history.values(),
            rng_seed: self.rng.get_seed(),
            rng_stream: self.rng.get_stream(),
            rng_word_pos: self.rng.get_word_pos().to_string(),
        };
        let json = dir.join("engine.json");
        std::fs::write(&json, serde_json::to_vec_pretty(&checkpoint)?).map_err(|e| Error::io(&json, e))?;
        let bin = dir.join("memory.bin");
        std::fs::write(&bin, self.bank.to_bytes()).map_err(|e| Error::io(&bin, e))
    }

    pub fn load_checkpoint(dir: &Path) -> Result<Self> {
        let json = dir.join("engine.json");
        let text = std::fs::read(&json).map_err(|e| Error::io(&json, e))?;
        let checkpoint: EngineCheckpoint = serde_json::from_slice(&text)?;
        checkpoint.config.validate()?;
        let bin = dir.join("memory.bin");
        let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        let bank = MemoryBank::from_bytes(&bytes)?;
        if checkpoint.front.is_empty() || checkpoint.front.iter().any(|w| w.dim() != bank.dim()) {
            return Err(Error::Snapshot("front does not match memory dimension".into()));
        }
        Self::restore_parts(checkpoint.config.clone(), bank, &checkpoint)
    }
}

impl StreamClassifier for Engine {
    fn step(&mut self, chunk: &Chunk) -> Result<StepOutcome> {
        let started = Instant::now();
        let predictions = self.predict(chunk)?;
        self.window += 1;
        let (accuracy, disc) = score_window(chunk, &predictions)?;
        self.history.push(disc.abs());

        let mut triggered = false;
        if self.config.trigger().fires(&self.history)? && !self.bank.stm().is_empty() {
            self.reoptimize(chunk)?;
            self.history.clear();
            triggered = true;
        }
        self.bank.fit_chunk(chunk)?;
        Ok(StepOutcome {
            predictions,
            record: WindowRecord {
                window: self.window,
                accuracy,
                discrimination: disc.value,
                abs_discrimination: disc.abs(),
                triggered,
                pareto_size: self.front.len(),
                wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EngineCheckpoint {
    config: EngineConfig,
    window: usize,
    front: Vec<WeightVector>,
    front_objectives: Option<Vec<ObjectivePair>>,
    designated: Option<usize>,
    history: Vec<f64>,
    rng_seed: [u8; 32],
    rng_stream: u64,
    rng_word_pos: String,
}

/// Whole-stream totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub instances: usize,
    pub windows: usize,
    pub accuracy: f64,
    pub discrimination: f64,
    pub abs_discrimination: f64,
    pub triggers: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<WindowRecord>,
    pub predictions: Vec<u8>,
    pub summary: RunSummary,
}

/// Fold a learner over a stream. Overall metrics are computed over all
/// predictions at once, not averaged per window.
pub fn run_with<C: StreamClassifier>(classifier: &mut C, chunks: &[Chunk]) -> Result<RunResult> {
    if chunks.is_empty() {
        return Err(Error::Empty("stream"));
    }
    let started = Instant::now();
    let mut records = Vec::with_capacity(chunks.len());
    let mut predictions = Vec::new();
    let mut labels = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    for chunk in chunks {
        let outcome = classifier.step(chunk)?;
        predictions.extend_from_slice(&outcome.predictions);
        labels.extend(chunk.labels());
        groups.extend(chunk.groups());
        records.push(outcome.record);
    }
    let disc = metrics::discrimination(&predictions, &groups)?;
    let summary = RunSummary {
        instances: predictions.len(),
        windows: records.len(),
        accuracy: metrics::accuracy(&predictions, &labels)?,
        discrimination: disc.value,
        abs_discrimination: disc.abs(),
        triggers: records.iter().filter(|r| r.triggered).count(),
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(RunResult {
        records,
        predictions,
        summary,
    })
}

/// Run the ensemble learner over a stream.
pub fn run_stream(chunks: &[Chunk], config: &EngineConfig) -> Result<RunResult> {
    let first = chunks.first().ok_or(Error::Empty("stream"))?;
    let mut engine = Engine::new(first.dim(), config.clone())?;
    run_with(&mut engine, chunks)
}

/// Run the unweighted SAM-kNN reference over a stream.
pub fn run_sam_baseline(chunks: &[Chunk], config: &SamConfig) -> Result<RunResult> {
    let first = chunks.first().ok_or(Error::Empty("stream"))?;
    let mut sam = SamBaseline::new(first.dim(), config.clone())?;
    run_with(&mut sam, chunks)
}
