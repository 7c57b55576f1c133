use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use uqbench::classifiers::Algorithm;
use uqbench::harness::records::{
    write_csv, ProfileRecord, ProfileRegion, SpatialRecord, PROFILE_HEADER, RECORD_HEADER, SPATIAL_HEADER,
};
use uqbench::harness::study::{checkpoint_record, fit_seed, fit_size};
use uqbench::harness::{
    build_report, evaluate, load_checkpoint, run_grid, run_study, save_checkpoint, write_study, CheckpointHeader,
    ExperimentConfig, TrainedModel,
};
use uqbench::harness::grid::GRID_HEADER;
use uqbench::synthdata::{DatasetSplits, SplitSizes};
use uqbench::{DatasetId, Error, Result};

#[derive(Parser)]
#[command(name = "uqbench", version, about = "Uncertainty benchmark on synthetic radial datasets")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Desk-scale budget (smaller N, ensembles and MCMC).
    #[arg(long)]
    fast: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        Ok(if self.fast { cfg.fast() } else { cfg })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/validation/test splits and the OOD grid for one dataset.
    Datagen {
        #[arg(long, value_parser = parse_dataset)]
        dataset: DatasetId,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        train: usize,
        #[arg(long, default_value_t = 5_000)]
        validation: usize,
        #[arg(long, default_value_t = 10_000)]
        test: usize,
    },
    /// Fit one classifier on the first N training points and save a checkpoint.
    Train {
        /// Dataset directory written by `datagen`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_algorithm)]
        algorithm: Algorithm,
        #[arg(long)]
        n_train: usize,
        /// Fit seed; derived from the configuration seed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a checkpoint on a dataset's test split and OOD grid.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the hyperparameter grid of one neural classifier.
    Grid {
        #[arg(long, value_parser = parse_algorithm)]
        algorithm: Algorithm,
        #[arg(long, value_parser = parse_dataset, default_value = "A")]
        dataset: DatasetId,
        /// Dataset directory; generated from the configuration seed when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the full dataset × algorithm × training-size matrix.
    Study {
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Merge study and grid directories into a figure-ready bundle.
    Report {
        #[arg(long = "input", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_dataset(s: &str) -> std::result::Result<DatasetId, String> {
    match s.trim().to_ascii_uppercase().as_str() {
        "A" => Ok(DatasetId::A),
        "B" => Ok(DatasetId::B),
        "C" => Ok(DatasetId::C),
        _ => Err(format!("unknown dataset '{s}' (expected A, B or C)")),
    }
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.unwrap_or_else(|| cfg.resolved_output_dir())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Datagen {
            dataset,
            seed,
            out,
            train,
            validation,
            test,
        } => {
            let sizes = SplitSizes { train, validation, test };
            let splits = DatasetSplits::generate(dataset, seed, sizes)?;
            let manifest = splits.write_dir(&out)?;
            println!("{} {} -> {}", dataset.name(), manifest.fingerprint, out.display());
        }
        Command::Train {
            data,
            algorithm,
            n_train,
            seed,
            out,
            config,
        } => {
            let cfg = config.load()?;
            let splits = DatasetSplits::read_dir(&data)?;
            if n_train == 0 || n_train > splits.train.len() {
                return Err(Error::InsufficientData {
                    requested: n_train,
                    available: splits.train.len(),
                });
            }
            let n_fit = fit_size(&cfg, splits.id, algorithm, n_train);
            let seed = seed.unwrap_or_else(|| fit_seed(cfg.seed, splits.id, algorithm, n_train));
            let mut model = TrainedModel::build(algorithm, &cfg);
            let started = Instant::now();
            let report = model
                .classifier_mut()
                .fit(&splits.train[..n_fit], &splits.validation, seed)?;
            let header = CheckpointHeader::new(
                algorithm,
                &cfg,
                splits.id,
                splits.manifest().fingerprint,
                n_train,
                n_fit,
                seed,
                report,
                started.elapsed().as_secs_f64(),
            );
            save_checkpoint(&out, &header, &model)?;
            println!(
                "{algorithm} on {} N={n_train}: {} units trained, {} diverged -> {}",
                splits.id.name(),
                header.fit_report.units_trained,
                header.fit_report.units_diverged,
                out.display()
            );
        }
        Command::Evaluate {
            checkpoint,
            data,
            out,
            config,
        } => {
            let cfg = config.load()?;
            let (header, model) = load_checkpoint(&checkpoint)?;
            let splits = DatasetSplits::read_dir(&data)?;
            let found = splits.manifest().fingerprint;
            if found != header.dataset_fingerprint {
                return Err(Error::FingerprintMismatch {
                    expected: header.dataset_fingerprint,
                    found,
                });
            }
            let tables = evaluate(model.classifier(), &splits, &cfg)?;
            let record = checkpoint_record(&header, &splits, &tables.summary)?;
            write_outputs(&out, &header, &tables, &record)?;
            println!(
                "{} on {} N={}: accuracy {:.4}, W1 {:.4}, ECE {:.4} -> {}",
                header.algorithm,
                splits.id.name(),
                header.n_train,
                record.accuracy,
                record.wasserstein1,
                record.ece,
                out.display()
            );
        }
        Command::Grid {
            algorithm,
            dataset,
            data,
            out,
            config,
        } => {
            let cfg = config.load()?;
            let splits = match data {
                Some(d) => DatasetSplits::read_dir(&d)?,
                None => uqbench::harness::generate_splits(&cfg, dataset)?,
            };
            let out = output_dir(out, &cfg);
            let rows = run_grid(&cfg, &splits, algorithm)?;
            std::fs::create_dir_all(&out)?;
            write_csv(&out.join("grid.csv"), &rows, GRID_HEADER)?;
            std::fs::write(out.join("config.toml"), cfg.to_toml_string()?)?;
            splits.write_dir(&out.join("data").join(splits.id.name()))?;
            let poor = rows.iter().filter(|r| r.poorly_fitted).count();
            println!("{} cells ({poor} poorly fitted) -> {}", rows.len(), out.display());
        }
        Command::Study { out, config } => {
            let cfg = config.load()?;
            let out = output_dir(out, &cfg);
            let result = run_study(&cfg)?;
            write_study(&out, &cfg, &result)?;
            println!("{} records -> {}", result.records.len(), out.display());
        }
        Command::Report { inputs, out } => {
            let bundle = build_report(&inputs, &out)?;
            println!(
                "{} records, {} grid rows -> {}",
                bundle.records,
                bundle.grid_rows,
                out.display()
            );
        }
    }
    Ok(())
}

fn write_outputs(
    out: &Path,
    header: &CheckpointHeader,
    tables: &uqbench::harness::study::EvaluationTables,
    record: &uqbench::harness::ExperimentRecord,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let (id, alg, n) = (header.dataset, header.algorithm, header.n_train);
    let profiles: Vec<ProfileRecord> = tables
        .test_profile
        .iter()
        .map(|r| ProfileRecord::new(id, alg, n, ProfileRegion::Test, r))
        .chain(
            tables
                .ood_profile
                .iter()
                .map(|r| ProfileRecord::new(id, alg, n, ProfileRegion::Ood, r)),
        )
        .collect();
    let spatial: Vec<SpatialRecord> = tables.spatial.iter().map(|r| SpatialRecord::new(id, alg, n, r)).collect();
    write_csv(&out.join("records.csv"), std::slice::from_ref(record), RECORD_HEADER)?;
    write_csv(&out.join("profiles.csv"), &profiles, PROFILE_HEADER)?;
    write_csv(&out.join("spatial.csv"), &spatial, SPATIAL_HEADER)?;
    std::fs::write(
        out.join("evaluation.json"),
        serde_json::to_string_pretty(&tables.summary)?,
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
