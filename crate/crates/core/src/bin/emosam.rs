use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emosam::harness::{self, ExperimentSpec};
use emosam::stream::{generate_bias_stream, write_stream_csv};
use emosam::{BiasStreamConfig, Error, Result, Selection, StreamManifest, TriggerPolicy};

#[derive(Parser)]
#[command(name = "emosam", version, about = "Fairness-aware stream classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment over its seeds.
    Run(RunArgs),
    /// Run the selection x trigger ablation grid.
    Ablate(RunArgs),
    /// Write a synthetic biased stream to CSV.
    Gen(GenArgs),
    /// Report dataset-level discrimination of a manifest's stream.
    Inspect {
        manifest: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON).
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Seeds as `a..b` (exclusive) or a comma list.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long)]
    selection: Option<Selection>,
    #[arg(long)]
    trigger: Option<TriggerPolicy>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Also run the SAM baseline.
    #[arg(long)]
    baseline: bool,
    /// Dump the Pareto archive after every trigger.
    #[arg(long)]
    dump_archives: bool,
    /// Use the desk-scale memory and swarm sizes.
    #[arg(long)]
    desk_scale: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Generator config (JSON); the desk-scale biased preset when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
    /// Also write a manifest that ingests the CSV.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|e| format!("{e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Seeds)
}

fn load_spec(args: &RunArgs) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::from_path(&args.config)?;
    if args.desk_scale {
        let seed = spec.engine.seed;
        spec.engine = emosam::EngineConfig {
            seed,
            selection: spec.engine.selection,
            trigger: spec.engine.trigger,
            phi: spec.engine.phi,
            theta: spec.engine.theta,
            ..emosam::EngineConfig::desk_scale()
        };
    }
    if let Some(dir) = &args.output_dir {
        spec.output_dir = dir.clone();
    }
    if let Some(seeds) = &args.seeds {
        spec.seeds = seeds.0.clone();
    }
    if let Some(s) = args.selection {
        spec.engine.selection = s;
    }
    if let Some(t) = args.trigger {
        spec.engine.trigger = t;
    }
    if let Some(p) = args.phi {
        spec.engine.phi = p;
    }
    if let Some(t) = args.theta {
        spec.engine.theta = t;
    }
    spec.baseline |= args.baseline;
    spec.dump_archives |= args.dump_archives;
    Ok(spec)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)?
        }
        None => BiasStreamConfig::desk_biased(0),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let chunks = generate_bias_stream(&config)?;
    let file = std::fs::File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_stream_csv(&chunks, &config.feature_names(), std::io::BufWriter::new(file))?;
    if let Some(path) = &args.manifest {
        let source = std::path::absolute(&args.out).map_err(|e| Error::io(&args.out, e))?;
        let manifest = StreamManifest {
            source,
            target: "label".into(),
            positive_label: "1".into(),
            negative_label: Some("0".into()),
            sensitive: "group".into(),
            protected_values: vec!["protected".into()],
            unprotected_values: vec!["unprotected".into()],
            categorical: vec![],
            window_size: config.window_size,
            drop_sensitive: true,
            drop_columns: vec![],
            missing_values: vec![String::new()],
        };
        harness::write_json(path, &manifest)?;
    }
    eprintln!("wrote {} instances to {}", config.n_instances, args.out.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let report = harness::run_experiment(&load_spec(&args)?)?;
            print_json(&report.aggregate)?;
            if let Some(b) = report.baseline {
                print_json(&b)?;
            }
            Ok(())
        }
        Command::Ablate(args) => print_json(&harness::compare_ablations(&load_spec(&args)?)?),
        Command::Gen(args) => gen(&args),
        Command::Inspect { manifest } => print_json(&harness::inspect(&StreamManifest::from_path(manifest)?)?),
    }
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render().to_string().trim().to_string()),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string()),
    }
}

