//! Run the fairness-aware learner and the plain SAM baseline on a biased
//! synthetic stream and compare accuracy and discrimination.
//!
//! cargo run --release --example emosam_stream -- [seed]

use emosam::engine::{run_sam_baseline, run_stream};
use emosam::{BiasStreamConfig, EngineConfig};

fn main() -> emosam::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let chunks = emosam::stream::generate_bias_stream(&BiasStreamConfig::desk_biased(seed))?;
    let config = EngineConfig {
        seed,
        ..EngineConfig::desk_scale()
    };

    let sam = run_sam_baseline(&chunks, &config.sam)?;
    let emo = run_stream(&chunks, &config)?;
    for (name, s) in [("sam", &sam.summary), ("emosam", &emo.summary)] {
        println!(
            "{name:>7}  acc {:.4}  disc {:+.4}  |disc| {:.4}  triggers {:>3}  {:.0} ms",
            s.accuracy, s.discrimination, s.abs_discrimination, s.triggers, s.wall_time_ms
        );
    }
    Ok(())
}
