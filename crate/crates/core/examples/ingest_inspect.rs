//! Ingest a small CSV through a manifest: categorical one-hot encoding,
//! running min-max scaling, row rejection counts and dataset-level
//! discrimination.
//!
//! cargo run --example ingest_inspect -- [manifest.json]

use std::io::Write;

use emosam::harness::inspect;
use emosam::stream::ingest;
use emosam::StreamManifest;

const SAMPLE: &str = "\
age,workclass,sex,income
39,State-gov,Male,<=50K
50,Self-emp,Male,<=50K
38,Private,Female,>50K
53,Private,Male,>50K
28,?,Female,<=50K
37,Private,Female,>50K
49,Private,Unknown,<=50K
52,Self-emp,Male,>50K
31,Private,Female,<=50K
42,State-gov,Female,>50K
23,Private,Male,<=50K
45,Self-emp,Female,<=50K
";

fn main() -> emosam::Result<()> {
    let manifest = match std::env::args().nth(1) {
        Some(path) => StreamManifest::from_path(path)?,
        None => {
            let path = std::env::temp_dir().join("emosam_ingest_example.csv");
            let mut f = std::fs::File::create(&path).map_err(|e| emosam::Error::io(&path, e))?;
            f.write_all(SAMPLE.as_bytes()).map_err(|e| emosam::Error::io(&path, e))?;
            serde_json::from_value(serde_json::json!({
                "source": path,
                "target": "income",
                "positive_label": ">50K",
                "sensitive": "sex",
                "protected_values": ["Female"],
                "unprotected_values": ["Male"],
                "categorical": ["workclass"],
                "window_size": 10
            }))?
        }
    };

    let stream = ingest(&manifest)?;
    println!("features: {:?}", stream.feature_names);
    for chunk in &stream.chunks {
        for inst in &chunk.instances {
            let row: Vec<String> = inst.features.iter().map(|v| format!("{v:.2}")).collect();
            println!("  window {} [{}] {:?} -> {}", chunk.index, row.join(" "), inst.group, inst.label);
        }
    }
    println!("{}", serde_json::to_string_pretty(&inspect(&manifest)?)?);
    Ok(())
}
