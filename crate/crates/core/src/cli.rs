//! `sdnn` command-line front end.
//!
//! Exit codes: 0 success or match, 1 verification mismatch, 2 usage,
//! 3 I/O or format, 4 dimension or consistency.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::challenge::{self, emit_report, verify, BenchReport, DenseMatrix, ReportFormat};
use crate::engine::{self, InferenceConfig, Mode, DEFAULT_YMAX};
use crate::error::{Error, Result};
use crate::ingest::{self, MatrixFormat};
use crate::model::{CategorySet, FeatureBatch, NetworkModel, SparseMatrix};
use crate::radixnet::{self, GeneratorConfig, KroneckerSpec, RadixSpec, DEFAULT_WEIGHT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIMENSION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sdnn", version, about = "Sparse DNN inference benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a RadiX-Net model as one file per layer.
    Generate(GenerateArgs),
    /// Convert MNIST IDX images into a sparse binary feature file.
    Preprocess(PreprocessArgs),
    /// Convert a matrix file between TSV and binary (chosen by extension).
    Convert(ConvertArgs),
    /// Run timed inference and write the categories.
    Infer(InferArgs),
    /// Compute truth categories with the dense reference evaluator.
    Truth(TruthArgs),
    /// Compare a category file against truth.
    Verify(VerifyArgs),
    /// Measure a grid of sizes, depths, modes and worker counts.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, env = "SDNN_NEURONS")]
    pub neurons: usize,
    #[arg(long, env = "SDNN_LAYERS")]
    pub layers: usize,
    #[arg(long, env = "SDNN_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "SDNN_WEIGHT", default_value_t = DEFAULT_WEIGHT)]
    pub weight: f64,
    /// Base radix set, e.g. 2,2,2,2,2,2 (requires --kron).
    #[arg(long, value_delimiter = ',')]
    pub radix: Option<Vec<usize>>,
    /// Uniform Kronecker factor applied to the base.
    #[arg(long)]
    pub kron: Option<usize>,
    /// Layer bias; required when the width has no tabulated value.
    #[arg(long, env = "SDNN_BIAS", allow_hyphen_values = true)]
    pub bias: Option<f64>,
    /// Output root; layers go to <out>/neuron<N>/.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Tsv)]
    pub format: MatrixFormat,
    /// Also write a binary copy of every layer.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// IDX3 image file, optionally gzip-compressed.
    #[arg(long)]
    pub mnist: PathBuf,
    #[arg(long)]
    pub side: usize,
    /// Output file; `.bin` selects the binary container.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep only the first N images.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Row count for TSV input (default: largest row index).
    #[arg(long)]
    pub rows: Option<usize>,
    /// Column count for TSV input (default: largest column index).
    #[arg(long)]
    pub cols: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EngineFlags {
    #[arg(long, value_enum, env = "SDNN_MODE", default_value_t = Mode::Serial)]
    pub mode: Mode,
    #[arg(long, env = "SDNN_WORKERS", default_value_t = 1)]
    pub workers: usize,
    #[arg(long, env = "SDNN_YMAX", default_value_t = DEFAULT_YMAX)]
    pub ymax: f64,
    #[arg(long, env = "SDNN_PIPELINE_STAGES")]
    pub pipeline_stages: Option<usize>,
    #[arg(long, env = "SDNN_BATCH_TILE")]
    pub batch_tile: Option<usize>,
}

impl EngineFlags {
    fn config(&self) -> InferenceConfig {
        InferenceConfig {
            ymax: self.ymax,
            mode: self.mode,
            workers: self.workers,
            pipeline_stages: self.pipeline_stages,
            batch_tile: self.batch_tile,
        }
    }
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Directory of n<N>-l<layer> files, or its parent.
    #[arg(long)]
    pub model: PathBuf,
    /// Sparse input features (TSV or .bin).
    #[arg(long)]
    pub input: PathBuf,
    /// Use only the first L layers.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Number of images in a TSV input (default: largest row index).
    #[arg(long)]
    pub images: Option<usize>,
    /// Replaces the tabulated layer bias.
    #[arg(long = "bias-override", env = "SDNN_BIAS", allow_hyphen_values = true)]
    pub bias: Option<f64>,
    #[command(flatten)]
    pub engine: EngineFlags,
    /// Where to write the computed categories.
    #[arg(long)]
    pub categories: PathBuf,
    /// Also write a one-row report (TSV or JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
    pub report_format: ReportFormat,
    /// Truth file to check against; a mismatch exits with 1.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, env = "SDNN_MACHINE", default_value = "")]
    pub machine: String,
    /// Manifest path (default: <categories>.manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TruthArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub images: Option<usize>,
    #[arg(long = "bias-override", env = "SDNN_BIAS", allow_hyphen_values = true)]
    pub bias: Option<f64>,
    #[arg(long, env = "SDNN_YMAX", default_value_t = DEFAULT_YMAX)]
    pub ymax: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub computed: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1024")]
    pub neurons: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "120")]
    pub layers: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "serial")]
    pub modes: Vec<Mode>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub workers: Vec<usize>,
    /// MNIST IDX file for inputs; synthetic inputs are used otherwise.
    #[arg(long)]
    pub mnist: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub images: usize,
    #[arg(long, env = "SDNN_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "SDNN_YMAX", default_value_t = DEFAULT_YMAX)]
    pub ymax: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
    pub format: ReportFormat,
    #[arg(long, env = "SDNN_MACHINE", default_value = "")]
    pub machine: String,
}

/// Maps an error to the process exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Parameter(_) | Error::Capacity(_) => EXIT_USAGE,
        Error::Shape(_) => EXIT_DIMENSION,
        _ => EXIT_IO,
    }
}

/// Parses `args` and runs the command, returning the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Preprocess(a) => cmd_preprocess(&a),
        Command::Convert(a) => cmd_convert(&a),
        Command::Infer(a) => cmd_infer(&a),
        Command::Truth(a) => cmd_truth(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[derive(Debug, Serialize)]
struct GenerateManifest<'a> {
    command: &'static str,
    version: &'static str,
    neurons: usize,
    layers: usize,
    seed: u64,
    weight_value: f64,
    bias: f64,
    radix: &'a [usize],
    kronecker: &'a [usize],
    formats: Vec<MatrixFormat>,
    connections: u64,
    model_dir: String,
}

/// Everything needed to repeat an inference run. Wall-clock data lives in
/// the report, not here, so repeated runs write identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub model_dir: String,
    pub input: String,
    pub truth: Option<String>,
    pub neurons: usize,
    pub layers: usize,
    pub images: usize,
    pub bias: f64,
    /// Generator seed, when the model directory holds a generate manifest.
    pub seed: Option<u64>,
    pub config: InferenceConfig,
    pub categories: String,
    pub category_count: usize,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = BufWriter::new(
        File::create(path).map_err(|e| Error::from(e).context(path.display().to_string()))?,
    );
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn generator_config(a: &GenerateArgs) -> Result<GeneratorConfig> {
    let mut cfg = match (&a.radix, a.kron) {
        (None, None) => GeneratorConfig::challenge(a.neurons, a.layers, a.seed)?,
        (Some(radix), kron) => {
            let radix = RadixSpec::new(radix.clone())?;
            let kron = KroneckerSpec::uniform(kron.unwrap_or(1), radix.stages() + 1)?;
            GeneratorConfig {
                radix,
                kron,
                target_layers: a.layers,
                weight_value: a.weight,
                rng_seed: a.seed,
                bias: a.bias,
            }
        }
        (None, Some(_)) => return Err(Error::Parameter("--kron needs --radix".into())),
    };
    cfg.weight_value = a.weight;
    cfg.bias = a.bias;
    cfg.check()?;
    if cfg.neurons() != a.neurons {
        return Err(Error::Parameter(format!(
            "radix and Kronecker settings give {} neurons, not {}",
            cfg.neurons(),
            a.neurons
        )));
    }
    Ok(cfg)
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<i32> {
    let cfg = generator_config(a)?;
    let stream = radixnet::LayerStream::new(&cfg)?;
    let n = cfg.neurons();
    let dir = ingest::model_dir(&a.out, n);
    fs::create_dir_all(&dir)?;
    let mut formats = vec![a.format];
    if a.binary && a.format != MatrixFormat::Binary {
        formats.push(MatrixFormat::Binary);
    }
    let connections = (1..=cfg.target_layers)
        .into_par_iter()
        .map(|t| {
            let layer = stream.layer(t);
            for &f in &formats {
                let path = dir.join(ingest::layer_file_name(n, t, f));
                ingest::write_matrix_file(&layer.weights, &path, f)?;
            }
            Ok(layer.weights.nnz() as u64)
        })
        .sum::<Result<u64>>()?;
    write_json(
        &dir.join("manifest.json"),
        &GenerateManifest {
            command: "generate",
            version: env!("CARGO_PKG_VERSION"),
            neurons: n,
            layers: cfg.target_layers,
            seed: cfg.rng_seed,
            weight_value: cfg.weight_value,
            bias: cfg.layer_bias()?,
            radix: cfg.radix.radices(),
            kronecker: cfg.kron.factors(),
            formats,
            connections,
            model_dir: dir.display().to_string(),
        },
    )?;
    println!(
        "neurons\t{n}\nlayers\t{}\nconnections\t{connections}\ndir\t{}",
        cfg.target_layers,
        dir.display()
    );
    Ok(EXIT_OK)
}

pub fn cmd_preprocess(a: &PreprocessArgs) -> Result<i32> {
    if !ingest::SUPPORTED_SIDES.contains(&a.side) {
        return Err(Error::Parameter(format!(
            "--side {} is not one of {:?}",
            a.side,
            ingest::SUPPORTED_SIDES
        )));
    }
    let ctx = |e: Error| e.context(a.mnist.display().to_string());
    let mut images = ingest::open_input(&a.mnist)
        .and_then(ingest::read_idx)
        .map_err(ctx)?;
    if let Some(limit) = a.limit {
        images = images.take(limit);
    }
    let batch = ingest::resize_threshold_flatten(&images, a.side)?;
    ingest::write_matrix_file(batch.matrix(), &a.out, MatrixFormat::from_path(&a.out))?;
    println!(
        "images\t{}\nfeatures\t{}\nnonzeros\t{}\nout\t{}",
        batch.n_images(),
        batch.n_features(),
        batch.matrix().nnz(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

pub fn cmd_convert(a: &ConvertArgs) -> Result<i32> {
    let dims = match (a.rows, a.cols) {
        (Some(r), Some(c)) => Some((r, c)),
        (None, None) => None,
        _ => return Err(Error::Parameter("--rows and --cols go together".into())),
    };
    let m = ingest::read_matrix_file(&a.input, dims)?;
    ingest::write_matrix_file(&m, &a.output, MatrixFormat::from_path(&a.output))?;
    println!(
        "{}x{}\t{} nonzeros\t{}",
        m.n_rows(),
        m.n_cols(),
        m.nnz(),
        a.output.display()
    );
    Ok(EXIT_OK)
}

fn require_exists(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(Error::Io(io::Error::new(
                io::ErrorKind::NotFound,
                format!("{} does not exist", p.display()),
            )));
        }
    }
    Ok(())
}

/// Reads an input batch for a model of `neurons` columns.
pub fn load_input(path: &Path, neurons: usize, images: Option<usize>) -> Result<FeatureBatch> {
    let m = match (MatrixFormat::from_path(path), images) {
        (MatrixFormat::Tsv, Some(rows)) => {
            let triples = ingest::read_tsv_triples(
                File::open(path).map_err(|e| Error::from(e).context(path.display().to_string()))?,
            )
            .map_err(|e| e.context(path.display().to_string()))?;
            if let Some(t) = triples.iter().find(|t| t.col > neurons) {
                return Err(Error::Shape(format!(
                    "{} has feature column {} but the model has {} neurons",
                    path.display(),
                    t.col,
                    neurons
                )));
            }
            SparseMatrix::from_triples(&triples, rows, neurons)
                .map_err(|e| e.context(path.display().to_string()))?
        }
        _ => ingest::read_matrix_file(path, None)?,
    };
    if m.n_cols() > neurons
        || (MatrixFormat::from_path(path) == MatrixFormat::Binary && m.n_cols() != neurons)
    {
        return Err(Error::Shape(format!(
            "{} has {} feature columns but the model has {} neurons",
            path.display(),
            m.n_cols(),
            neurons
        )));
    }
    if m.n_cols() == neurons {
        return Ok(FeatureBatch::new(m));
    }
    // TSV files carry no width; widen to the model.
    let mut parts = m.into_parts();
    parts.n_cols = neurons;
    Ok(FeatureBatch::new(SparseMatrix::from_parts(parts)?))
}

fn model_seed(dir: &Path, neurons: usize) -> Option<u64> {
    [
        dir.join("manifest.json"),
        ingest::model_dir(dir, neurons).join("manifest.json"),
    ]
    .iter()
    .find_map(|p| fs::read(p).ok())
    .and_then(|b| serde_json::from_slice::<serde_json::Value>(&b).ok())
    .and_then(|v| v["seed"].as_u64())
}

pub fn cmd_infer(a: &InferArgs) -> Result<i32> {
    let mut inputs = vec![a.model.as_path(), a.input.as_path()];
    if let Some(t) = &a.truth {
        inputs.push(t);
    }
    require_exists(&inputs)?;
    let cfg = a.engine.config();
    cfg.check()?;

    // untimed: loading and bias setup
    let model = ingest::load_model(&a.model, a.layers, a.bias)?;
    let y0 = load_input(&a.input, model.neurons(), a.images)?;
    let bias = model.layers()[0].bias;

    let run = engine::infer_timed(&model, &y0, &cfg)?;

    let cats_file = File::create(&a.categories)
        .map_err(|e| Error::from(e).context(a.categories.display().to_string()))?;
    ingest::write_truth(&run.categories, cats_file)?;

    let mut report = BenchReport::new(
        model.neurons(),
        model.depth(),
        model.connections(),
        y0.n_images() as u64,
        run.seconds.max(f64::MIN_POSITIVE),
        cfg.mode,
        cfg.workers,
    )?;
    report.machine = a.machine.clone();
    if let Some(path) = &a.report {
        let mut out =
            File::create(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        emit_report(std::slice::from_ref(&report), a.report_format, &mut out)?;
    }

    let manifest = RunManifest {
        command: "infer",
        version: env!("CARGO_PKG_VERSION"),
        model_dir: a.model.display().to_string(),
        input: a.input.display().to_string(),
        truth: a.truth.as_ref().map(|t| t.display().to_string()),
        neurons: model.neurons(),
        layers: model.depth(),
        images: y0.n_images(),
        bias,
        seed: model_seed(&a.model, model.neurons()),
        config: cfg.clone(),
        categories: a.categories.display().to_string(),
        category_count: run.categories.len(),
    };
    let manifest_path = a.manifest.clone().unwrap_or_else(|| {
        let mut p = a.categories.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    write_json(&manifest_path, &manifest)?;

    println!(
        "neurons\t{}\nlayers\t{}\nconnections\t{}\ninputs\t{}\ncategories\t{}\nseconds\t{:.6}\nrate\t{:.6e}",
        report.neurons, report.layers, report.connections, report.inputs, run.categories.len(), report.seconds, report.rate
    );
    if let Some(truth_path) = &a.truth {
        let truth = read_categories(truth_path)?;
        let v = verify(&run.categories, &truth);
        println!("verify\t{}", v.summary());
        if !v.matches {
            return Ok(EXIT_MISMATCH);
        }
    }
    Ok(EXIT_OK)
}

fn read_categories(path: &Path) -> Result<CategorySet> {
    let f = File::open(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    ingest::read_truth(f).map_err(|e| e.context(path.display().to_string()))
}

pub fn cmd_truth(a: &TruthArgs) -> Result<i32> {
    require_exists(&[&a.model, &a.input])?;
    let model = ingest::load_model(&a.model, a.layers, a.bias)?;
    let y0 = load_input(&a.input, model.neurons(), a.images)?;
    let out = challenge::oracle_infer(&model, &DenseMatrix::from_batch(&y0), a.ymax)?;
    let cats = out.categories();
    let f =
        File::create(&a.out).map_err(|e| Error::from(e).context(a.out.display().to_string()))?;
    ingest::write_truth(&cats, f)?;
    println!("categories\t{}\nout\t{}", cats.len(), a.out.display());
    Ok(EXIT_OK)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let computed = read_categories(&a.computed)?;
    let truth = read_categories(&a.truth)?;
    let v = verify(&computed, &truth);
    println!("{}", v.summary());
    Ok(if v.matches { EXIT_OK } else { EXIT_MISMATCH })
}

/// Random binary inputs, roughly a fifth of the features set per image.
pub fn synthetic_inputs(images: usize, neurons: usize, seed: u64) -> FeatureBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = crate::model::CsrParts {
        n_rows: images,
        n_cols: neurons,
        row_offsets: vec![0],
        ..Default::default()
    };
    for _ in 0..images {
        for c in 0..neurons {
            if rng.gen_bool(0.2) {
                parts.col_indices.push(c as u32);
            }
        }
        parts.row_offsets.push(parts.col_indices.len());
    }
    parts.values = vec![1.0; parts.col_indices.len()];
    FeatureBatch::new(SparseMatrix::from_parts(parts).expect("canonical by construction"))
}

fn bench_inputs(a: &BenchArgs, neurons: usize) -> Result<FeatureBatch> {
    match &a.mnist {
        Some(path) => {
            let side = (neurons as f64).sqrt().round() as usize;
            if side * side != neurons {
                return Err(Error::Parameter(format!(
                    "{neurons} neurons is not a square image"
                )));
            }
            let images = ingest::open_input(path)
                .and_then(ingest::read_idx)
                .map_err(|e| e.context(path.display().to_string()))?
                .take(a.images);
            ingest::resize_threshold_flatten(&images, side)
        }
        None => Ok(synthetic_inputs(a.images, neurons, a.seed)),
    }
}

pub fn bench_grid(a: &BenchArgs) -> Vec<BenchReport> {
    let mut reports = Vec::new();
    for &neurons in &a.neurons {
        for &layers in &a.layers {
            let setup = GeneratorConfig::challenge(neurons, layers, a.seed)
                .and_then(|cfg| radixnet::generate(&cfg))
                .and_then(|model| bench_inputs(a, neurons).map(|y0| (model, y0)));
            let (model, y0) = match setup {
                Ok(v) => v,
                Err(e) => {
                    for &mode in &a.modes {
                        let mut report =
                            BenchReport::failed(neurons, layers, mode, 0, &e.to_string());
                        report.machine = a.machine.clone();
                        reports.push(report);
                    }
                    continue;
                }
            };
            let mut reference: Option<CategorySet> = None;
            for &mode in &a.modes {
                let worker_counts: &[usize] = if mode == Mode::Serial {
                    &[1]
                } else {
                    &a.workers
                };
                for &workers in worker_counts {
                    let cfg = InferenceConfig {
                        ymax: a.ymax,
                        mode,
                        workers,
                        pipeline_stages: None,
                        batch_tile: None,
                    };
                    let cell = bench_cell(&model, &y0, &cfg, &mut reference);
                    let mut report = cell.unwrap_or_else(|e| {
                        BenchReport::failed(neurons, layers, mode, workers, &e.to_string())
                    });
                    report.machine = a.machine.clone();
                    reports.push(report);
                }
            }
        }
    }
    reports
}

fn bench_cell(
    model: &NetworkModel,
    y0: &FeatureBatch,
    cfg: &InferenceConfig,
    reference: &mut Option<CategorySet>,
) -> Result<BenchReport> {
    let run = engine::infer_timed(model, y0, cfg)?;
    let mut report = BenchReport::new(
        model.neurons(),
        model.depth(),
        model.connections(),
        y0.n_images() as u64,
        run.seconds.max(f64::MIN_POSITIVE),
        cfg.mode,
        cfg.workers,
    )?;
    match reference {
        Some(r) if *r != run.categories => report.status = "category mismatch".into(),
        Some(_) => {}
        None => *reference = Some(run.categories),
    }
    Ok(report)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let reports = bench_grid(a);
    let mut out =
        File::create(&a.out).map_err(|e| Error::from(e).context(a.out.display().to_string()))?;
    emit_report(&reports, a.format, &mut out)?;
    emit_report(&reports, ReportFormat::Tsv, &mut io::stdout().lock())?;
    eprintln!(
        "bench started at unix time {started}, {} cells",
        reports.len()
    );
    Ok(EXIT_OK)
}
