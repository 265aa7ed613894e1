//! Stop a run halfway, checkpoint the engine to disk, resume from the
//! checkpoint and confirm the predictions match an uninterrupted run.
//!
//! cargo run --release --example checkpoint_resume

use emosam::engine::run_with;
use emosam::{BiasStreamConfig, Engine, EngineConfig};

fn main() -> emosam::Result<()> {
    let stream = BiasStreamConfig {
        n_instances: 5_000,
        drift_points: vec![2_500],
        ..BiasStreamConfig::desk_biased(3)
    };
    let chunks = emosam::stream::generate_bias_stream(&stream)?;
    let config = EngineConfig::desk_scale();
    let (head, tail) = chunks.split_at(chunks.len() / 2);

    let full = run_with(&mut Engine::new(stream.dim(), config.clone())?, &chunks)?;

    let mut engine = Engine::new(stream.dim(), config)?;
    let first = run_with(&mut engine, head)?;
    let dir = std::env::temp_dir().join("emosam_checkpoint");
    engine.save_checkpoint(&dir)?;
    println!("checkpoint after {} windows in {}", head.len(), dir.display());

    let mut resumed = Engine::load_checkpoint(&dir)?;
    let second = run_with(&mut resumed, tail)?;
    let stitched: Vec<u8> = first.predictions.into_iter().chain(second.predictions).collect();
    println!(
        "front size {}, resumed predictions identical: {}",
        resumed.front().len(),
        stitched == full.predictions
    );
    Ok(())
}
