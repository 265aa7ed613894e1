//! Generate the biased synthetic stream, report its label-level
//! discrimination per concept segment and write it to CSV.
//!
//! cargo run --example synthetic_stream -- [out.csv]

use emosam::stream::{dataset_discrimination, generate_bias_stream, write_stream_csv};
use emosam::BiasStreamConfig;

fn main() -> emosam::Result<()> {
    let config = BiasStreamConfig::desk_biased(42);
    let chunks = generate_bias_stream(&config)?;
    println!(
        "{} windows of {}, features {:?}",
        chunks.len(),
        config.window_size,
        config.feature_names()
    );
    println!("label discrimination over the stream: {:+.4}", dataset_discrimination(&chunks)?);

    let per_segment = config.drift_points.first().map_or(chunks.len(), |p| p / config.window_size);
    for (i, seg) in chunks.chunks(per_segment).enumerate() {
        println!("  segment {i}: {:+.4}", dataset_discrimination(seg)?);
    }

    if let Some(path) = std::env::args().nth(1) {
        let file = std::fs::File::create(&path).map_err(|e| emosam::Error::io(&path, e))?;
        write_stream_csv(&chunks, &config.feature_names(), std::io::BufWriter::new(file))?;
        println!("wrote {path}");
    }
    Ok(())
}
