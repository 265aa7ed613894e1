//! Train the self-adjusting-memory k-NN on a drifting stream and show how
//! feature weights change its predictions and discrimination.
//!
//! cargo run --release --example weighted_samknn

use emosam::metrics::{accuracy, discrimination};
use emosam::samknn::Predictor;
use emosam::{BiasStreamConfig, MemoryBank, SamConfig, WeightVector};

fn main() -> emosam::Result<()> {
    let config = BiasStreamConfig::desk_biased(1);
    let chunks = emosam::stream::generate_bias_stream(&config)?;
    let (train, test) = chunks.split_at(chunks.len() - 1);
    let mut bank = MemoryBank::new(config.dim(), SamConfig {
        stm_cap: 500,
        ltm_cap: 500,
        ..SamConfig::default()
    })?;
    for chunk in train {
        bank.fit_chunk(chunk)?;
    }
    println!("stm {} ltm {} selected {:?}", bank.stm().len(), bank.ltm().len(), bank.selected());
    for p in [Predictor::Stm, Predictor::Ltm, Predictor::Combined] {
        println!("  tracker {p:?}: {:.3}", bank.tracker(p).accuracy());
    }

    let chunk = &test[0];
    let dim = config.dim();
    // Mute the proxy and the group indicator (the last two features).
    let mut muted = vec![1.0; dim];
    muted[dim - 2] = 0.0;
    muted[dim - 1] = 0.0;
    for (name, alpha) in [("ones", WeightVector::ones(dim)), ("muted", WeightVector::new(muted)?)] {
        let preds = bank.predict_chunk(chunk, Some(&alpha))?;
        let acc = accuracy(&preds, &chunk.labels())?;
        let disc = discrimination(&preds, &chunk.groups())?;
        println!("{name:>6}: acc {acc:.3} disc {:+.3}", disc.value);
    }
    Ok(())
}
