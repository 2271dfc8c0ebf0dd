use std::path::{Path, PathBuf};
use std::process::Command;

use dtour::dataio::{load_csv, save_columnar, CsvOptions, Dataset, Preprocess, StandardizeMode, TourFile};
use dtour::strategies::{
    fit_pca, fit_spectral, grand_tour_extend, le_tour, little_tour, sequential_tour, GrandStart, SpectralOptions,
    StrategyOutput,
};
use dtour::tourpath::TourPath;
use log::{info, warn};

use crate::config::BuildConfig;
use crate::run::{column_roles, load_input, write_tour_report};
use crate::{required, BuildArgs, CliError, CliResult, Strategy};

type Embedding = Vec<[f64; 2]>;

const DEFAULT_LITTLE_COMPONENTS: usize = 8;
const DEFAULT_GRAND_FRAMES: usize = 8;

fn parse_strategy(s: &str) -> CliResult<Strategy> {
    <Strategy as clap::ValueEnum>::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown strategy '{s}'")))
}

/// `<output stem>.data.dtc1` beside the tour file.
fn derived_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("tour");
    output.with_file_name(format!("{stem}.data.dtc1"))
}

fn report_warnings(out: &StrategyOutput) {
    for w in &out.warnings {
        warn!("{w}");
    }
}

pub fn run(args: BuildArgs, cfg: BuildConfig) -> CliResult {
    let strategy = match (args.strategy, cfg.strategy.as_deref()) {
        (Some(s), _) => s,
        (None, Some(s)) => parse_strategy(s)?,
        (None, None) => return Err(CliError::Usage("missing required --strategy".into())),
    };
    let output = required(args.output.or(cfg.output), "output")?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let standardize: StandardizeMode = args
        .standardize
        .or(cfg.standardize)
        .map(|s| s.parse().map_err(CliError::Usage))
        .transpose()?
        .unwrap_or_default();
    let roles = column_roles(args.columns, cfg.labels, cfg.continuous);
    let input = args.input.or(cfg.input);
    let components = args.components.or(cfg.components);
    let frames = args.frames.or(cfg.frames);

    let load = |input: Option<PathBuf>| -> CliResult<Dataset> {
        let path = required(input, "input")?;
        load_input(&path, roles.0.clone(), roles.1.clone())
    };

    let (tf, path) = match strategy {
        Strategy::Little => {
            let raw = load(input)?;
            let preprocess = Preprocess {
                standardize,
                center: true,
            };
            let ds = preprocess.apply(&raw)?;
            let k = components.unwrap_or(DEFAULT_LITTLE_COMPONENTS.min(ds.n_dims()));
            let pca = fit_pca(&ds, k)?;
            let out = little_tour(&pca, k)?;
            report_warnings(&out);
            let mut tf = TourFile::from_sequence(&out.sequence, ds.dim_names().to_vec(), "little");
            tf.preprocess = preprocess;
            (tf, TourPath::compile(out.sequence)?)
        }
        Strategy::Grand => {
            let raw = load(input)?;
            let n = frames.unwrap_or(DEFAULT_GRAND_FRAMES);
            let seq = grand_tour_extend(GrandStart::Dims(raw.n_dims()), n, seed)?;
            let mut tf = TourFile::from_sequence(&seq, raw.dim_names().to_vec(), "grand");
            tf.preprocess.standardize = standardize;
            (tf, TourPath::compile(seq)?)
        }
        Strategy::Le => {
            let raw = load(input)?;
            let (ds, _) = dtour::dataio::standardize(&raw, standardize)?;
            let defaults = SpectralOptions::default();
            let m = match (components, frames) {
                (Some(m), _) => m,
                (None, Some(f)) => f + 1,
                (None, None) => defaults.components,
            };
            let opts = SpectralOptions {
                knn_k: args.knn.or(cfg.knn).unwrap_or(defaults.knn_k),
                components: m,
                max_points: args.max_points.or(cfg.max_points).unwrap_or(defaults.max_points),
                ..defaults
            };
            let model = fit_spectral(&ds, &opts)?;
            for w in &model.warnings {
                warn!("{w}");
            }
            let out = le_tour(&model, frames.unwrap_or(m - 1))?;
            report_warnings(&out);
            let embedded = model.embedding_dataset(ds.labels().to_vec())?;
            let data_path = derived_path(&output);
            save_columnar(&embedded, &data_path)?;
            info!("wrote spectral coordinates to {}", data_path.display());
            let mut tf = TourFile::from_sequence(&out.sequence, embedded.dim_names().to_vec(), "le");
            tf.dataset = data_path.file_name().map(|n| n.to_string_lossy().into_owned());
            (tf, TourPath::compile(out.sequence)?)
        }
        Strategy::Sequential => {
            let dir = required(args.embeddings.or(cfg.embeddings), "embeddings")?;
            if let Some(cmd) = args.producer.or(cfg.producer) {
                let steps = required(args.steps.or(cfg.steps), "steps")?;
                run_producer(&cmd, steps, &dir, input.as_deref())?;
            }
            let (embeddings, labels) = read_embeddings(&dir)?;
            let seq = sequential_tour(&embeddings, &labels)?;
            for (i, (before, after)) in seq.residuals.iter().enumerate() {
                info!("embedding {}: Procrustes residual {before:.4e} -> {after:.4e}", i + 1);
            }
            let mut stacked = seq.stacked;
            if let Some(path) = input {
                let raw = load_input(&path, roles.0.clone(), roles.1.clone())?;
                if raw.n_rows() != stacked.n_rows() {
                    return Err(dtour::TourError::LengthMismatch(format!(
                        "input has {} rows, embeddings {}",
                        raw.n_rows(),
                        stacked.n_rows()
                    ))
                    .into());
                }
                stacked = stacked.with_labels(raw.labels().to_vec())?;
            }
            let data_path = derived_path(&output);
            save_columnar(&stacked, &data_path)?;
            let mut tf = TourFile::from_sequence(&seq.sequence, stacked.dim_names().to_vec(), "sequential");
            tf.dataset = data_path.file_name().map(|n| n.to_string_lossy().into_owned());
            (tf, TourPath::compile(seq.sequence)?)
        }
    };
    write_tour_report(&tf, &path, &output)
}

/// Runs `cmd` through the shell once per step. Each run sees
/// `DTOUR_STEP`, `DTOUR_STEPS`, `DTOUR_OUTPUT` (the CSV to write),
/// `DTOUR_PREVIOUS` (the prior step's CSV, for warm starts) and
/// `DTOUR_INPUT` when `--input` was given.
fn run_producer(cmd: &str, steps: usize, dir: &Path, input: Option<&Path>) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| dtour::TourError::FileIo {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let file = |k: usize| dir.join(format!("step_{k:04}.csv"));
    for k in 0..steps {
        let mut command = Command::new("sh");
        command
            .arg("-c")
            .arg(cmd)
            .env("DTOUR_STEP", k.to_string())
            .env("DTOUR_STEPS", steps.to_string())
            .env("DTOUR_OUTPUT", file(k));
        if k > 0 {
            command.env("DTOUR_PREVIOUS", file(k - 1));
        }
        if let Some(input) = input {
            command.env("DTOUR_INPUT", input);
        }
        let status = command
            .status()
            .map_err(|e| CliError::Environment(format!("producer failed to start: {e}")))?;
        if !status.success() {
            return Err(CliError::Environment(format!("producer step {k} exited with {status}")));
        }
    }
    Ok(())
}

/// Every `*.csv` in `dir`, sorted by name; the first two columns of each are
/// the embedding.
fn read_embeddings(dir: &Path) -> CliResult<(Vec<Embedding>, Vec<String>)> {
    let entries = std::fs::read_dir(dir).map_err(|e| dtour::TourError::FileIo {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.len() < 2 {
        return Err(CliError::Validation(format!(
            "{} holds {} embedding CSVs; need at least 2",
            dir.display(),
            files.len()
        )));
    }
    let mut embeddings = Vec::with_capacity(files.len());
    let mut labels = Vec::with_capacity(files.len());
    for file in &files {
        let (ds, report) = load_csv(file, &CsvOptions::default())?;
        if report.dropped_rows > 0 {
            return Err(CliError::Validation(format!(
                "{}: {} rows have missing values",
                file.display(),
                report.dropped_rows
            )));
        }
        if ds.n_dims() < 2 {
            return Err(CliError::Validation(format!("{}: need two numeric columns", file.display())));
        }
        if ds.n_dims() > 2 {
            warn!("{}: using the first two of {} columns", file.display(), ds.n_dims());
        }
        let (x, y) = (ds.column(0), ds.column(1));
        embeddings.push(x.iter().zip(y).map(|(&a, &b)| [a as f64, b as f64]).collect());
        labels.push(file.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()));
    }
    Ok((embeddings, labels))
}
