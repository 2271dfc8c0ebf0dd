use std::path::{Path, PathBuf};
use std::sync::Arc;

use dtour::dataio::{load_columnar, load_csv, save_tour, CsvOptions, Dataset, TourFile, LOAD_DRIFT_LIMIT};
use dtour::engine::{save_snapshot, EngineOptions, Selection, SnapshotFormat};
use dtour::geometry::orthonormality_drift;
use dtour::service::{ServeOptions, Server, SessionOptions};
use dtour::tourpath::TourPath;
use log::{info, warn};

use crate::config::{ProjectConfig, ServeConfig};
use crate::{required, CliError, CliResult, ColumnArgs, ProjectArgs, ServeArgs, ValidateArgs};

pub const DEFAULT_PORT: u16 = 7700;

fn is_columnar(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("dtc" | "dtc1"))
}

/// Reads CSV or DTC1 by extension.
pub fn load_input(path: &Path, labels: Vec<String>, continuous: Vec<String>) -> CliResult<Dataset> {
    if is_columnar(path) {
        return Ok(load_columnar(path)?);
    }
    let opts = CsvOptions {
        label_columns: labels,
        continuous_columns: continuous,
        ..CsvOptions::default()
    };
    let (ds, report) = load_csv(path, &opts)?;
    if report.dropped_rows > 0 {
        warn!("{}: dropped {} rows with missing values", path.display(), report.dropped_rows);
    }
    Ok(ds)
}

pub fn column_roles(args: ColumnArgs, labels: Option<Vec<String>>, continuous: Option<Vec<String>>) -> (Vec<String>, Vec<String>) {
    (
        args.labels.or(labels).unwrap_or_default(),
        args.continuous.or(continuous).unwrap_or_default(),
    )
}

/// Loads a tour and the data its bases apply to, preprocessed as recorded.
fn load_tour_and_data(
    tour: &Path,
    input: Option<&Path>,
    roles: (Vec<String>, Vec<String>),
) -> CliResult<(TourFile, TourPath, Dataset)> {
    let (tf, report) = dtour::dataio::load_tour(tour)?;
    if !report.repaired.is_empty() {
        info!("repaired small drift in keyframes {:?}", report.repaired);
    }
    let raw = match (&tf.dataset, input) {
        (Some(rel), given) => {
            if given.is_some() {
                warn!("tour carries its own dataset; ignoring --input");
            }
            let base = tour.parent().unwrap_or(Path::new("."));
            load_columnar(base.join(rel))?
        }
        (None, Some(path)) => load_input(path, roles.0, roles.1)?,
        (None, None) => return Err(CliError::Usage("missing required --input".into())),
    };
    let ds = tf.preprocess.apply(&raw)?;
    let path = TourPath::compile(tf.to_sequence()?)?;
    if ds.n_dims() != path.dims() {
        return Err(dtour::TourError::DimensionMismatch {
            expected: path.dims(),
            actual: ds.n_dims(),
        }
        .into());
    }
    Ok((tf, path, ds))
}

pub fn validate(args: ValidateArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.tour).map_err(|e| dtour::TourError::FileIo {
        path: args.tour.clone(),
        source: e,
    })?;
    let mut tf: TourFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: not a tour file: {e}", args.tour.display())))?;
    println!("{}: {} keyframes, {} dims", args.tour.display(), tf.keyframes.len(), tf.dims);
    for (i, kf) in tf.keyframes.iter().enumerate() {
        let drift = if kf.basis.len() == tf.dims {
            orthonormality_drift(&kf.basis)
        } else {
            f64::NAN
        };
        let status = if !(drift <= LOAD_DRIFT_LIMIT) { "VIOLATION" } else { "ok" };
        println!("keyframe {i:>3} {:<16} drift {drift:.3e} {status}", kf.label);
    }
    match tf.validate() {
        Ok(report) => {
            if !report.repaired.is_empty() {
                println!("note: keyframes {:?} have small drift and are repaired on load", report.repaired);
            }
            println!("valid");
            Ok(())
        }
        Err(e) => Err(CliError::Validation(e.to_string())),
    }
}

pub fn project(args: ProjectArgs, cfg: ProjectConfig) -> CliResult {
    let tour = required(args.tour.or(cfg.tour), "tour")?;
    let output = required(args.output.or(cfg.output), "output")?;
    let t = required(args.t.or(cfg.t), "t")?;
    if !t.is_finite() {
        return Err(CliError::Usage(format!("--t must be finite, got {t}")));
    }
    let format = match args.format.or(cfg.format) {
        Some(f) => f.parse::<SnapshotFormat>()?,
        None => SnapshotFormat::from_path(&output),
    };
    let roles = column_roles(args.columns, cfg.labels, cfg.continuous);
    let input = args.input.or(cfg.input);
    let (_, path, ds) = load_tour_and_data(&tour, input.as_deref(), roles)?;
    let basis = path.basis_at(t)?;
    let proj = dtour::engine::project(&ds, &basis)?;
    save_snapshot(&output, &ds, &proj, &Selection::empty(ds.n_rows()), format)?;
    println!(
        "wrote {} rows at t={:.6} to {}",
        ds.n_rows(),
        path.normalize_t(t),
        output.display()
    );
    Ok(())
}

fn has_display() -> bool {
    if cfg!(any(target_os = "macos", target_os = "windows")) {
        return true;
    }
    ["DISPLAY", "WAYLAND_DISPLAY"]
        .iter()
        .any(|v| std::env::var_os(v).is_some_and(|s| !s.is_empty()))
}

fn open_browser(url: &str) {
    if !has_display() {
        warn!("no display available; continuing headless at {url}");
        return;
    }
    let (program, args): (&str, Vec<&str>) = if cfg!(target_os = "macos") {
        ("open", vec![url])
    } else if cfg!(target_os = "windows") {
        ("cmd", vec!["/C", "start", url])
    } else {
        ("xdg-open", vec![url])
    };
    if let Err(e) = std::process::Command::new(program).args(args).spawn() {
        warn!("could not open a browser ({e}); continuing headless at {url}");
    }
}

pub fn serve(args: ServeArgs, cfg: ServeConfig) -> CliResult {
    let tour = required(args.tour.or(cfg.tour), "tour")?;
    let roles = column_roles(args.columns, cfg.labels, cfg.continuous);
    let input = args.input.or(cfg.input);
    let (_, path, ds) = load_tour_and_data(&tour, input.as_deref(), roles)?;
    let host = args.host.or(cfg.host).unwrap_or_else(|| "127.0.0.1".into());
    let port = args.port.or(cfg.port).unwrap_or(DEFAULT_PORT);
    let snapshot_dir = args.snapshot_dir.or(cfg.snapshot_dir).unwrap_or_else(|| PathBuf::from("."));
    let options = ServeOptions {
        addr: format!("{host}:{port}"),
        ui_dir: args.ui.or(cfg.ui),
        engine: EngineOptions {
            seed: args.seed.or(cfg.seed).unwrap_or(0),
            ..EngineOptions::default()
        },
        session: SessionOptions {
            snapshot_dir: Some(snapshot_dir),
            ..SessionOptions::default()
        },
    };
    let server = Server::bind(Arc::new(ds), path, options)?;
    let url = format!("http://{}/", server.local_addr()?);
    println!("serving {url}");
    if args.open || cfg.open.unwrap_or(false) {
        open_browser(&url);
    }
    server.run()?;
    Ok(())
}

/// Writes `tf` and reports the path it describes.
pub fn write_tour_report(tf: &TourFile, path: &TourPath, output: &Path) -> CliResult {
    save_tour(tf, output)?;
    println!(
        "wrote {}: strategy {}, K={} keyframes, {} dims",
        output.display(),
        tf.strategy,
        tf.keyframes.len(),
        tf.dims
    );
    println!("total geodesic length {:.6}", path.total_length());
    let lengths: Vec<String> = path.segment_lengths().iter().map(|l| format!("{l:.6}")).collect();
    println!("segment lengths {}", lengths.join(" "));
    Ok(())
}
