//! The `accu` command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use accu_core::data::{read_dataset_csv, write_dataset_csv};
use accu_core::evaluation::{cross_validate, MeanMetrics};
use accu_core::honn::{write_search_log_csv, HyperGrid, SearchOptions};
use accu_core::model::{ClassifierSpec, ModelKind, Selection};
use accu_core::neural::{parse_topology, ActivationKind};
use accu_core::synthgen::{generate, Preset};
use accu_core::{BiomarkerVector, Dataset};
use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};

use crate::config::FileConfig;
use crate::error::{ServiceError, ServiceResult};
use crate::http::{router, RetrainMode};
use crate::record::{to_json_string, ModelRecord};
use crate::report::{method_table, topology_table};
use crate::service::{predict_with_record, AccuService, ServiceConfig, SystemClock};
use crate::training::{build_record, BuildSettings, DEFAULT_TEST_FRACTION};

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_STORE_DIR: &str = "accu-store";

/// The nine fixed-topology networks compared by `evaluate --topology-sweep`.
pub const SWEEP_TOPOLOGIES: [&[usize]; 9] = [
    &[5, 6, 3],
    &[5, 10, 3],
    &[5, 15, 3],
    &[5, 5, 5, 3],
    &[5, 10, 8, 3],
    &[5, 15, 10, 3],
    &[5, 5, 5, 4, 3],
    &[5, 10, 8, 5, 3],
    &[5, 15, 10, 8, 3],
];

#[derive(Debug, Parser)]
#[command(name = "accu", version, about = "OCD biomarker classifiers: data generation, training, evaluation and serving")]
pub struct Cli {
    /// TOML configuration file; flags and ACCU_* variables override it.
    #[arg(long, global = true, env = "ACCU_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labeled dataset as CSV.
    Gen(GenArgs),
    /// Train one classifier on a CSV and save a model record.
    Train(TrainArgs),
    /// Run the hyperparameter grid search on a CSV.
    GridSearch(GridSearchArgs),
    /// Repeated k-fold cross-validation of one or more methods.
    Evaluate(EvaluateArgs),
    /// Classify one biomarker vector with a saved model record.
    Predict(PredictArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// separable or overlapping
    #[arg(long, default_value = "separable")]
    pub preset: String,
    #[arg(long, default_value_t = 60)]
    pub per_class: usize,
    #[arg(long, env = "ACCU_SEED")]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Hidden layer sizes for ANN, e.g. `6` or `10,8`.
    #[arg(long, value_delimiter = ',', default_value = "6")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value = "Logistic")]
    pub activation: ActivationKind,
    #[arg(long, default_value_t = 0.005)]
    pub rho: f64,
    #[arg(long, default_value_t = 10_000)]
    pub epochs: usize,
    /// Neighbour count for KNN.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// LR, LDA, KNN, ANN or HONN
    #[arg(long)]
    pub kind: ModelKind,
    #[arg(long, env = "ACCU_SEED")]
    pub seed: Option<u64>,
    /// Held-out share used for scoring (and for HONN selection).
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridSearchArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, env = "ACCU_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Where to write the per-candidate log.
    #[arg(long, default_value = "search-log.csv")]
    pub log: PathBuf,
    /// Also save the winner as a model record.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave candidate timings at zero so logs are reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Methods to compare.
    #[arg(long, value_delimiter = ',', default_value = "ANN,KNN,LR,LDA,HONN")]
    pub methods: Vec<ModelKind>,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, env = "ACCU_SEED")]
    pub seed: Option<u64>,
    /// Also compare fixed-topology networks, e.g. `5-6-3,5-10-8-3`.
    #[arg(long, value_delimiter = ',')]
    pub topologies: Vec<String>,
    /// Compare the nine standard topologies from 5-6-3 up to 5-15-10-8-3.
    #[arg(long)]
    pub topology_sweep: bool,
    #[command(flatten)]
    pub network: NetworkArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// SD, GP, CAT, MAL and SC in assay units.
    #[arg(num_args = 5, value_names = ["SD", "GP", "CAT", "MAL", "SC"], allow_negative_numbers = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "ACCU_BIND")]
    pub bind: Option<String>,
    #[arg(long, env = "ACCU_STORE_DIR")]
    pub store_dir: Option<PathBuf>,
    /// New samples that trigger retraining.
    #[arg(long, env = "ACCU_THRESHOLD")]
    pub threshold: Option<usize>,
    #[arg(long, env = "ACCU_SEED")]
    pub seed: Option<u64>,
    /// Train the kind given here instead of running the grid search.
    #[arg(long, env = "ACCU_KIND")]
    pub kind: Option<ModelKind>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> ServiceResult<()> {
    let file = FileConfig::load_optional(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(a) => gen(a, &file, out),
        Command::Train(a) => train(a, &file, out),
        Command::GridSearch(a) => grid_search(a, &file, out),
        Command::Evaluate(a) => evaluate(a, &file, out),
        Command::Predict(a) => predict(a, out),
        Command::Serve(a) => serve(a, &file),
    }
}

fn load_csv(path: &Path) -> ServiceResult<Dataset> {
    let f = File::open(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
    Ok(read_dataset_csv(io::BufReader::new(f))?)
}

fn seed(flag: Option<u64>, file: &FileConfig) -> u64 {
    flag.or(file.seed).unwrap_or(0)
}

fn search_options(file: &FileConfig) -> SearchOptions {
    SearchOptions { parallel: true, record_timing: file.record_timing.unwrap_or(true) }
}

fn spec_for(kind: ModelKind, net: &NetworkArgs, grid: &HyperGrid, options: SearchOptions) -> ClassifierSpec {
    match kind {
        ModelKind::Knn => ClassifierSpec::Knn { k: net.k },
        ModelKind::Ann => ClassifierSpec::Ann {
            hidden: net.hidden.clone(),
            activation: net.activation,
            rho: net.rho,
            epochs: net.epochs,
            init_std: grid.init_std,
        },
        ModelKind::Honn => ClassifierSpec::Honn { grid: grid.clone(), selection: Selection::HeldOut, options },
        other => ClassifierSpec::default_for(other),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn gen(a: GenArgs, file: &FileConfig, out: &mut dyn Write) -> ServiceResult<()> {
    let preset: Preset = a.preset.parse()?;
    let data = generate(&preset.spec(a.per_class, seed(a.seed, file)))?;
    match a.out {
        Some(path) => write_dataset_csv(&data, BufWriter::new(File::create(path)?))?,
        None => write_dataset_csv(&data, out)?,
    }
    Ok(())
}

fn write_summary(record: &ModelRecord, out: &mut dyn Write) -> ServiceResult<()> {
    let m = &record.metadata.holdout_metrics;
    writeln!(out, "kind: {}", record.kind)?;
    if let Some(net) = record.model.network() {
        writeln!(out, "topology: {} ({})", net.topology_string(), net.activation)?;
    }
    if let Some(h) = &record.metadata.hyperparameters {
        writeln!(out, "rho: {}  epochs: {}", h.rho, h.epochs)?;
    }
    writeln!(out, "train/test: {}/{}", record.metadata.train_size, record.metadata.test_size)?;
    writeln!(
        out,
        "held-out overall accuracy {:.6}  precision {:.6}  recall {:.6}  f1 {:.6}",
        m.overall_accuracy, m.precision, m.recall, m.f1
    )?;
    Ok(())
}

fn train(a: TrainArgs, file: &FileConfig, out: &mut dyn Write) -> ServiceResult<()> {
    let data = load_csv(&a.data)?;
    let grid = file.grid.to_grid()?;
    let settings = BuildSettings {
        spec: spec_for(a.kind, &a.network, &grid, search_options(file)),
        seed: seed(a.seed, file),
        test_fraction: a.test_fraction.or(file.test_fraction).unwrap_or(DEFAULT_TEST_FRACTION),
        version: 1,
        created_at: now(),
    };
    let built = build_record(&data, &settings)?;
    built.record.save(&a.out)?;
    write_summary(&built.record, out)?;
    writeln!(out, "saved {}", a.out.display())?;
    Ok(())
}

fn grid_search(a: GridSearchArgs, file: &FileConfig, out: &mut dyn Write) -> ServiceResult<()> {
    let data = load_csv(&a.data)?;
    let grid = file.grid.to_grid()?;
    let mut options = search_options(file);
    if a.no_timing {
        options.record_timing = false;
    }
    let settings = BuildSettings {
        spec: ClassifierSpec::Honn { grid: grid.clone(), selection: Selection::HeldOut, options },
        seed: seed(a.seed, file),
        test_fraction: a.test_fraction.or(file.test_fraction).unwrap_or(DEFAULT_TEST_FRACTION),
        version: 1,
        created_at: now(),
    };
    writeln!(out, "searching {} candidates", grid.candidate_count())?;
    let built = build_record(&data, &settings)?;
    let search = built.search.as_ref().expect("grid search result");
    write_search_log_csv(&search.log, BufWriter::new(File::create(&a.log)?))?;
    write_summary(&built.record, out)?;
    writeln!(out, "log: {}", a.log.display())?;
    if let Some(path) = a.out {
        let mut record = built.record;
        record.metadata.search_log = a.log.file_name().map(|n| n.to_string_lossy().into_owned());
        record.save(&path)?;
        writeln!(out, "saved {}", path.display())?;
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs, file: &FileConfig, out: &mut dyn Write) -> ServiceResult<()> {
    let data = load_csv(&a.data)?;
    let grid = file.grid.to_grid()?;
    let seed = seed(a.seed, file);
    let options = search_options(file);
    let cv = |spec: &ClassifierSpec| -> ServiceResult<MeanMetrics> {
        Ok(cross_validate(spec, &data, a.folds, a.repeats, seed)?.mean)
    };

    let mut methods = Vec::new();
    for &kind in &a.methods {
        log::info!("cross-validating {kind}");
        methods.push((kind, cv(&spec_for(kind, &a.network, &grid, options.clone()))?));
    }
    if !methods.is_empty() {
        writeln!(out, "Mean metrics over {} x {}-fold cross-validation", a.repeats, a.folds)?;
        write!(out, "{}", method_table(&methods))?;
    }

    let mut topologies: Vec<Vec<usize>> = a
        .topologies
        .iter()
        .map(|t| parse_topology(t))
        .collect::<accu_core::Result<_>>()?;
    if a.topology_sweep {
        topologies.extend(SWEEP_TOPOLOGIES.iter().map(|t| t.to_vec()));
    }
    let mut rows = Vec::new();
    for sizes in topologies {
        if sizes.first() != Some(&5) || sizes.last() != Some(&3) {
            return Err(ServiceError::Config(format!("topology {sizes:?} must start with 5 and end with 3")));
        }
        let spec = ClassifierSpec::Ann {
            hidden: sizes[1..sizes.len() - 1].to_vec(),
            activation: a.network.activation,
            rho: a.network.rho,
            epochs: a.network.epochs,
            init_std: grid.init_std,
        };
        log::info!("cross-validating topology {sizes:?}");
        rows.push((sizes, cv(&spec)?));
    }
    if !rows.is_empty() {
        writeln!(out)?;
        writeln!(out, "Network topologies ({}, rho {}, {} epochs)", a.network.activation, a.network.rho, a.network.epochs)?;
        write!(out, "{}", topology_table(&rows))?;
    }
    Ok(())
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> ServiceResult<()> {
    let record = ModelRecord::load(&a.model)?;
    let x = BiomarkerVector::from_slice(&a.values)?;
    let p = predict_with_record(&record, &x)?;
    write!(out, "{}", to_json_string(&serde_json::json!({
        "class": p.class,
        "scores": { "HI": p.scores[0], "GAI": p.scores[1], "OAI": p.scores[2] },
        "model_version": p.model_version,
    })))?;
    Ok(())
}

/// Resolves serve settings: flags and environment, then the config file,
/// then defaults.
pub fn service_config(a: &ServeArgs, file: &FileConfig) -> ServiceResult<(SocketAddr, PathBuf, ServiceConfig)> {
    let bind = a.bind.clone().or_else(|| file.bind.clone()).unwrap_or_else(|| DEFAULT_BIND.to_string());
    let addr: SocketAddr = bind.parse().map_err(|e| ServiceError::Config(format!("bind address {bind:?}: {e}")))?;
    let store_dir = a.store_dir.clone().or_else(|| file.store_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_STORE_DIR));
    let grid = file.grid.to_grid()?;
    let kind = match a.kind {
        Some(k) => Some(k),
        None => file.kind.as_deref().map(str::parse).transpose()?,
    };
    let mut config = ServiceConfig::with_grid(grid.clone());
    if let Some(kind) = kind {
        let defaults = NetworkArgs { hidden: vec![6], activation: ActivationKind::Logistic, rho: 0.005, epochs: 10_000, k: 5 };
        config.spec = spec_for(kind, &defaults, &grid, search_options(file));
    } else if let ClassifierSpec::Honn { options, .. } = &mut config.spec {
        *options = search_options(file);
    }
    config.threshold = a.threshold.or(file.threshold).unwrap_or(config.threshold);
    config.seed = seed(a.seed, file);
    config.test_fraction = file.test_fraction.unwrap_or(config.test_fraction);
    config.validate()?;
    Ok((addr, store_dir, config))
}

fn serve(a: ServeArgs, file: &FileConfig) -> ServiceResult<()> {
    let (addr, store_dir, config) = service_config(&a, file)?;
    let service = Arc::new(AccuService::open(&store_dir, config, Arc::new(SystemClock))?);
    log::info!(
        "store {} with {} samples, active model version {}",
        store_dir.display(),
        service.store().len(),
        service.registry().latest_version()
    );
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, router(service, RetrainMode::Background))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
