//! `ocdm` command line: generate synthetic logs, mine DRDs, re-export them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ocdm::discovery::{mine_dmn_models, DiscoveredDrd, MiningConfig, MiningError};
use ocdm::docel::{log_fingerprint, read_docel, write_docel, DocelError, DocelLog};
use ocdm::export::{drd_from_json, drd_to_dot, drd_to_json_with, model_tree_to_dot, to_canonical_json, ExportError, Metadata};
use ocdm::generate::{generate_publication_log, generate_shipping_log, GenerateError, PublicationParams, ShippingParams};
use ocdm::ml::{LearnerConfig, MaxFeatures};
use ocdm::shift::Ataots;
use serde::Serialize;
use thiserror::Error;

pub const RUN_MANIFEST: &str = "manifest.json";
/// Generated log directories already hold the DOCEL manifest.
pub const GENERATE_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Parser)]
#[command(name = "ocdm", version, about = "Decision model discovery from object-centric event logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic DOCEL log.
    Generate {
        #[command(subcommand)]
        process: GenerateCommand,
    },
    /// Discover DRDs and decision logic from a DOCEL log.
    Mine(MineArgs),
    /// Render the DOT files and rules of a DRD JSON file.
    Export(ExportArgs),
}

#[derive(Debug, Subcommand)]
enum GenerateCommand {
    Publication(PublicationArgs),
    Shipping(ShippingArgs),
}

#[derive(Debug, Args)]
struct PublicationArgs {
    #[arg(long, default_value_t = 100)]
    books: usize,
    #[arg(long, default_value_t = 100)]
    authors: usize,
    #[arg(long, default_value_t = 100)]
    publishers: usize,
    #[arg(long, default_value_t = 9)]
    max_published_books: u32,
    #[arg(long, default_value_t = 0.7)]
    prob_compliance: f64,
    #[arg(long, default_value_t = 5)]
    publication_threshold: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ShippingArgs {
    #[arg(long, default_value_t = 150)]
    orders: usize,
    #[arg(long, default_value_t = 50)]
    customers: usize,
    #[arg(long, default_value_t = 40.0)]
    product_value: f64,
    #[arg(long, default_value_t = 100.0)]
    order_value_threshold: f64,
    #[arg(long, default_value_t = 0.33)]
    prob_refund: f64,
    #[arg(long, default_value_t = 5)]
    max_order_quantity: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MineArgs {
    /// DOCEL log directory.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    min_shift: f64,
    #[arg(long, default_value_t = 3)]
    max_shift: usize,
    #[arg(long, default_value_t = 0.3)]
    min_traceprop: f64,
    #[arg(long, default_value_t = 0.3)]
    min_corr: f64,
    #[arg(long, default_value_t = 0.3)]
    min_dev: f64,
    #[arg(long, default_value_t = 0.3)]
    min_support: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Trees per forest.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// A drd_*.json file written by `mine`.
    #[arg(long)]
    drd: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{code}: {message}")]
    Input { code: String, message: String },
    #[error("{code}: {message}")]
    Internal { code: String, message: String },
}

impl CliError {
    fn input(code: &str, message: impl ToString) -> Self {
        CliError::Input { code: code.to_string(), message: message.to_string() }
    }

    fn internal(code: &str, message: impl ToString) -> Self {
        CliError::Internal { code: code.to_string(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => 1,
            CliError::Internal { .. } => 2,
        }
    }
}

impl From<DocelError> for CliError {
    fn from(e: DocelError) -> Self {
        CliError::input(e.code(), e)
    }
}

impl From<MiningError> for CliError {
    fn from(e: MiningError) -> Self {
        match e {
            MiningError::InvalidConfig(_) | MiningError::InvalidLog(_) => CliError::input(e.code(), e),
            _ => CliError::internal(e.code(), e),
        }
    }
}

impl From<GenerateError> for CliError {
    fn from(e: GenerateError) -> Self {
        match e {
            GenerateError::InvalidParams(_) => CliError::input(e.code(), e),
            GenerateError::Log(_) => CliError::internal(e.code(), e),
        }
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        CliError::input(e.code(), e)
    }
}

/// Written next to every output set.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: serde_json::Value,
    pub log_fingerprint: Option<String>,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

/// Runs one command line (program name first) and returns the exit code.
/// Errors go to stderr as `code: message`.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("UsageError: {first}");
            return 1;
        }
    };
    let command: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, argv: Vec<String>) -> Result<(), CliError> {
    let start = Instant::now();
    match command {
        Command::Generate { process } => {
            let (log, out, config) = match process {
                GenerateCommand::Publication(a) => {
                    let p = PublicationParams {
                        max_authors: a.authors,
                        max_published_books: a.max_published_books,
                        max_publishers: a.publishers,
                        num_books: a.books,
                        prob_compliance: a.prob_compliance,
                        publication_threshold: a.publication_threshold,
                        rng_seed: a.seed,
                        ..PublicationParams::default()
                    };
                    (generate_publication_log(&p)?, a.out, to_value(&p))
                }
                GenerateCommand::Shipping(a) => {
                    let p = ShippingParams {
                        num_orders: a.orders,
                        num_customers: a.customers,
                        product_value: a.product_value,
                        order_value_threshold: a.order_value_threshold,
                        prob_refund: a.prob_refund,
                        max_order_quantity: a.max_order_quantity,
                        rng_seed: a.seed,
                        ..ShippingParams::default()
                    };
                    (generate_shipping_log(&p)?, a.out, to_value(&p))
                }
            };
            write_docel(&log, &out).map_err(|e| CliError::internal(e.code(), e))?;
            let mut outputs: Vec<String> = fs::read_dir(&out)
                .map_err(|e| io_error(&out, e))?
                .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
                .filter(|n| n != GENERATE_MANIFEST)
                .collect();
            outputs.sort();
            let manifest = RunManifest {
                command: argv,
                config,
                log_fingerprint: Some(log_fingerprint(&log)),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                outputs,
                duration_seconds: start.elapsed().as_secs_f64(),
            };
            write(&out.join(GENERATE_MANIFEST), &to_canonical_json(&manifest))
        }
        Command::Mine(a) => mine(a, argv, start),
        Command::Export(a) => {
            let text = fs::read_to_string(&a.drd).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => CliError::input("MissingFile", format!("{} not found", a.drd.display())),
                _ => CliError::input("IoFailure", format!("{}: {e}", a.drd.display())),
            })?;
            let (drd, meta) = drd_from_json(&text)?;
            fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
            let mut files = Files::new(&a.out);
            write_drd(&mut files, &drd, meta)?;
            let manifest = RunManifest {
                command: argv,
                config: serde_json::Value::Null,
                log_fingerprint: None,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                outputs: files.names(),
                duration_seconds: start.elapsed().as_secs_f64(),
            };
            write(&a.out.join(RUN_MANIFEST), &to_canonical_json(&manifest))
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("parameters serialize")
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::internal("IoFailure", format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

impl MineArgs {
    fn config(&self) -> MiningConfig {
        MiningConfig {
            min_shift: self.min_shift,
            max_shift: self.max_shift,
            min_traceprop: self.min_traceprop,
            min_corr: self.min_corr,
            min_dev: self.min_dev,
            min_support: self.min_support,
            learner: LearnerConfig {
                n_trees: self.trees,
                cv_folds: self.folds,
                max_features: MaxFeatures::Sqrt,
                seed: self.seed,
                ..LearnerConfig::default()
            },
            rng_seed: self.seed,
        }
    }
}

fn mine(a: MineArgs, argv: Vec<String>, start: Instant) -> Result<(), CliError> {
    let config = a.config();
    config.validate()?;
    let loaded = read_docel(&a.log)?;
    for w in &loaded.warnings {
        eprintln!("warning: {}: {}: {}", w.code, w.location, w.message);
    }
    let log: DocelLog = loaded.log;
    let drds = mine_dmn_models(&log, &config)?;
    fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
    let fingerprint = log_fingerprint(&log);
    let meta = Metadata { config: to_value(&config), log_fingerprint: fingerprint.clone() };
    let mut files = Files::new(&a.out);
    for drd in &drds {
        write_drd(&mut files, drd, Some(meta.clone()))?;
    }
    let manifest = RunManifest {
        command: argv,
        config: to_value(&config),
        log_fingerprint: Some(fingerprint),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: files.names(),
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    write(&a.out.join(RUN_MANIFEST), &to_canonical_json(&manifest))
}

/// Keeps file names unique within one run: identical content under the same
/// name is written once, different content gets a numeric suffix.
struct Files {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl Files {
    fn new(dir: &Path) -> Self {
        Files { dir: dir.to_path_buf(), written: BTreeMap::new() }
    }

    fn put(&mut self, stem: &str, ext: &str, text: String) -> Result<(), CliError> {
        let mut k = 1;
        loop {
            let name = if k == 1 { format!("{stem}.{ext}") } else { format!("{stem}_{k}.{ext}") };
            match self.written.get(&name) {
                Some(existing) if *existing == text => return Ok(()),
                Some(_) => k += 1,
                None => {
                    write(&self.dir.join(&name), &text)?;
                    self.written.insert(name, text);
                    return Ok(());
                }
            }
        }
    }

    fn names(&self) -> Vec<String> {
        self.written.keys().cloned().collect()
    }
}

/// File-name form of a node: label, activity and type with every character
/// outside `[A-Za-z0-9_-]` replaced by `_`.
pub fn file_stem(node: &Ataots) -> String {
    format!("{}_{}_{}", node.label(), node.activity, node.object_type)
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_drd(files: &mut Files, drd: &DiscoveredDrd, meta: Option<Metadata>) -> Result<(), CliError> {
    let stem = file_stem(&drd.top);
    // the JSON and DOT of one DRD share a suffix
    let json = drd_to_json_with(drd, meta);
    let dot = drd_to_dot(drd);
    let mut k = 1;
    loop {
        let s = if k == 1 { format!("drd_{stem}") } else { format!("drd_{stem}_{k}") };
        let jn = format!("{s}.json");
        match files.written.get(&jn) {
            Some(existing) if *existing == json => break,
            Some(_) => k += 1,
            None => {
                files.put(&s, "json", json)?;
                files.put(&s, "dot", dot)?;
                break;
            }
        }
    }
    for (node, model) in &drd.models {
        let stem = file_stem(node);
        files.put(&format!("tree_{stem}"), "dot", model_tree_to_dot(model))?;
        files.put(&format!("rules_{stem}"), "json", to_canonical_json(&model.rules()))?;
    }
    Ok(())
}
