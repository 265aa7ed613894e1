//! Fairness-aware data-stream classification.
//!
//! A self-adjusting-memory k-NN classifier whose distance uses per-feature
//! weights. When the discrimination of recent windows trends upward, a
//! speed-constrained multi-objective particle swarm searches for weight
//! vectors trading accuracy against statistical parity, and the resulting
//! front predicts subsequent windows by majority vote.
//!
//! Module map:
//!
//! - [`stream`]: instances, chunks, CSV ingestion, synthetic biased streams
//! - [`metrics`]: accuracy and statistical parity
//! - [`samknn`]: the weighted self-adjusting-memory k-NN
//! - [`trend`]: HP-filter trend detection and trigger policies
//! - [`smpso`]: the multi-objective swarm, archive, crowding and knee point
//! - [`engine`]: the prequential ensemble learner and the SAM baseline
//! - [`harness`]: multi-seed experiments, ablation grid and result files

pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod samknn;
pub mod smpso;
pub mod stream;
pub mod trend;

pub use engine::{Engine, EngineConfig, InitMode, RunResult, RunSummary, SamBaseline, Selection, StreamClassifier};
pub use error::{Error, Result};
pub use samknn::{MemoryBank, SamConfig, WeightVector};
pub use smpso::{Archive, ObjectivePair, ParetoSolution, SmpsoParams};
pub use stream::{BiasStreamConfig, Chunk, Group, Instance, StreamManifest};
pub use trend::{DiscriminationHistory, TriggerPolicy};
