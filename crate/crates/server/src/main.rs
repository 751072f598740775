use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use alqa::active::{ActiveLearningConfig, Aggregation};
use alqa::corpus::{load_database, CorpusConfig, SplitRatios};
use alqa::pipeline::{ClassifierKind, DatasetFeatures, QualityModel};
use alqa::{AlqaError, Result};
use alqa_server::commands::{self, TrainOptions};
use alqa_server::{serve, ServeOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "alqa", version, about = "Reference-free image quality assessment with active learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Chan-Vese body masks of one volume.
    Segment {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        volume: String,
        #[arg(long)]
        slice: Option<usize>,
        /// Write run-length encoded masks as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feature table for every slice of the database.
    Extract {
        #[arg(long)]
        db: PathBuf,
        /// Defaults to DB/features.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit standardizer and PCA on the train split.
    Reduce {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, default_value_t = 45)]
        r: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on the reference labels of the train split.
    Train {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, default_value = "svm")]
        classifier: ClassifierKind,
        #[arg(long)]
        r: Option<usize>,
        /// Cross-validated grid search before the final fit.
        #[arg(long)]
        tune: bool,
        /// Use the full search grids (slow).
        #[arg(long, requires = "tune")]
        full_grid: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Active-learning runs.
    #[command(subcommand)]
    Al(AlCommand),
    /// Evaluate a trained model on the test split.
    Eval {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the live loop behind the label server.
    Serve {
        #[arg(long)]
        db: PathBuf,
        /// Active-learning configuration (JSON); missing fields take defaults.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        /// Loop state and session; defaults to DB/serve.
        #[arg(long)]
        work: Option<PathBuf>,
        #[command(flatten)]
        server: ServerArgs,
    },
    /// Predict the quality class of a stored volume.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// DB/volumes/<id>.json or .f32
        #[arg(long)]
        volume: PathBuf,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 600)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        depth: Option<usize>,
        /// Slice height and width.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        split_seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum AlCommand {
    Run {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, default_value = "svm")]
        classifier: ClassifierKind,
        #[arg(long, value_enum, default_value_t = LabelerKind::Oracle)]
        labeler: LabelerKind,
        #[arg(long, default_value_t = 200)]
        ni: usize,
        #[arg(long, default_value_t = 40)]
        q: usize,
        #[arg(long, default_value_t = 0.90)]
        target: f64,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        max_queries: Option<usize>,
        #[arg(long)]
        min_margin: bool,
        /// Skip the grid search at the first fit.
        #[arg(long)]
        no_tune: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        server: ServerArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelerKind {
    Oracle,
    Server,
}

#[derive(Args)]
struct ServerArgs {
    #[arg(long, env = "ALQA_BIND", default_value = "127.0.0.1:8080")]
    bind: String,
    /// A random token is generated and printed when unset.
    #[arg(long, env = "ALQA_TOKEN", hide_env_values = true)]
    token: Option<String>,
    #[arg(long, default_value = "rater")]
    rater: String,
}

impl ServerArgs {
    fn options(&self, work_dir: PathBuf) -> ServeOptions {
        let token = self.token.clone().unwrap_or_else(|| {
            let t = format!("{:032x}", rand::random::<u128>());
            eprintln!("token: {t}");
            t
        });
        ServeOptions {
            work_dir,
            bind: self.bind.clone(),
            token,
            rater_id: self.rater.clone(),
        }
    }
}

fn load_db_features(db: &PathBuf, features: Option<&PathBuf>) -> Result<(alqa::TestCaseDatabase, DatasetFeatures)> {
    let database = load_database(db)?;
    let path = commands::features_path(db, features.map(PathBuf::as_path));
    let table = commands::load_features(&path)?;
    Ok((database, DatasetFeatures::from_table(&table)))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Corpus(CorpusCommand::Generate { out, count, seed, depth, size, split_seed }) => {
            let mut cfg = CorpusConfig { count, seed, ..CorpusConfig::default() };
            if let Some(d) = depth {
                cfg.shape.0 = d;
            }
            if let Some(s) = size {
                cfg.shape.1 = s;
                cfg.shape.2 = s;
            }
            let db = commands::corpus_generate(&out, &cfg, SplitRatios::default(), split_seed.unwrap_or(seed))?;
            println!(
                "{} volumes ({} train, {} validation, {} test) in {}",
                db.len(),
                db.splits.train.len(),
                db.splits.validation.len(),
                db.splits.test.len(),
                out.display()
            );
        }
        Command::Segment { db, volume, slice, out } => commands::segment(&db, &volume, slice, out.as_deref())?,
        Command::Extract { db, out } => {
            let path = commands::features_path(&db, out.as_deref());
            let table = commands::extract(&db, &path)?;
            println!("{} slices x {} features -> {}", table.len(), table.manifest.len(), path.display());
        }
        Command::Reduce { db, features, r, out } => {
            commands::reduce(&db, &commands::features_path(&db, features.as_deref()), r, &out)?;
        }
        Command::Train { db, features, classifier, r, tune, full_grid, seed, out } => {
            let path = commands::features_path(&db, features.as_deref());
            let table = commands::load_features(&path)?;
            let database = load_database(&db)?;
            let feats = DatasetFeatures::from_table(&table);
            let opts = TrainOptions { kind: classifier, r, tune, full_grid, params: None, seed };
            let model = commands::train(&database, &feats, &opts)?;
            commands::save_model(&model, &table.manifest, &out)?;
            println!("{} parameters {}", classifier, serde_json::to_string(&model.params)?);
        }
        Command::Eval { db, features, model, out } => {
            let (database, feats) = load_db_features(&db, features.as_ref())?;
            let report = commands::evaluate_model(&database, &feats, &QualityModel::load(&model)?)?;
            commands::print_report(&report);
            if let Some(out) = out {
                fs::write(out, serde_json::to_vec_pretty(&report)?)?;
            }
        }
        Command::Al(AlCommand::Run {
            db,
            features,
            classifier,
            labeler,
            ni,
            q,
            target,
            seeds,
            max_queries,
            min_margin,
            no_tune,
            out,
            server,
        }) => {
            let (mut database, feats) = load_db_features(&db, features.as_ref())?;
            let cfg = ActiveLearningConfig {
                n_initial: ni,
                query_size: q,
                target_accuracy: target,
                classifier,
                max_queries: max_queries.unwrap_or(usize::MAX),
                aggregation: if min_margin { Aggregation::MinMargin } else { Aggregation::MeanMargin },
                tune: !no_tune,
                ..ActiveLearningConfig::default()
            };
            match labeler {
                LabelerKind::Oracle => {
                    let summary = commands::al_oracle(&mut database, &feats, &cfg, seeds, &out)?;
                    println!("label reduction {:.4}", summary["label_reduction"].as_f64().unwrap_or(f64::NAN));
                }
                LabelerKind::Server => serve(database, feats, cfg, &server.options(out))?,
            }
        }
        Command::Serve { db, config, features, work, server } => {
            let cfg: ActiveLearningConfig = serde_json::from_slice(&fs::read(&config)?).map_err(|e| AlqaError::Corrupt {
                path: config.clone(),
                reason: e.to_string(),
            })?;
            let (database, feats) = load_db_features(&db, features.as_ref())?;
            let work = work.unwrap_or_else(|| db.join("serve"));
            serve(database, feats, cfg, &server.options(work))?;
        }
        Command::Predict { model, volume } => {
            println!("{}", serde_json::to_string_pretty(&commands::predict(&model, &volume)?)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
