//! Compare selection strategies and trigger policies on a shortened biased
//! stream and write the grid to a temporary directory.
//!
//! cargo run --release --example ablation_grid

use emosam::harness::{compare_ablations, DataSource, ExperimentSpec};
use emosam::{BiasStreamConfig, EngineConfig};

fn main() -> emosam::Result<()> {
    let stream = BiasStreamConfig {
        n_instances: 6_000,
        drift_points: vec![3_000],
        ..BiasStreamConfig::desk_biased(0)
    };
    let spec = ExperimentSpec {
        source: DataSource::Synthetic(stream),
        engine: EngineConfig::desk_scale(),
        seeds: vec![0, 1, 2],
        output_dir: std::env::temp_dir().join("emosam_ablation"),
        baseline: false,
        dump_archives: false,
    };
    println!("{:>9} {:>9} {:>7} {:>7} {:>9} {:>8}", "selection", "trigger", "error", "|disc|", "ms", "triggers");
    for row in compare_ablations(&spec)? {
        println!(
            "{:>9} {:>9} {:>7.4} {:>7.4} {:>9.0} {:>8.1}",
            row.selection.to_string(),
            row.trigger.to_string(),
            row.mean_error,
            row.mean_abs_discrimination,
            row.mean_runtime_ms,
            row.mean_triggers
        );
    }
    println!("wrote {}", spec.output_dir.join("ablation.csv").display());
    Ok(())
}
