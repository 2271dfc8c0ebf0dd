//! Optional `dtour.toml`: one table per subcommand, keys named like the flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

pub const DEFAULT_CONFIG: &str = "dtour.toml";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub build: BuildConfig,
    pub project: ProjectConfig,
    pub bench: BenchConfig,
    pub serve: ServeConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BuildConfig {
    pub input: Option<PathBuf>,
    pub strategy: Option<String>,
    pub components: Option<usize>,
    pub knn: Option<usize>,
    pub frames: Option<usize>,
    pub seed: Option<u64>,
    pub standardize: Option<String>,
    pub output: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub producer: Option<String>,
    pub steps: Option<usize>,
    pub max_points: Option<usize>,
    pub labels: Option<Vec<String>>,
    pub continuous: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ProjectConfig {
    pub input: Option<PathBuf>,
    pub tour: Option<PathBuf>,
    pub t: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    pub labels: Option<Vec<String>>,
    pub continuous: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BenchConfig {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub points_file: Option<PathBuf>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub keyframes: Option<usize>,
    pub basis_dims: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ServeConfig {
    pub input: Option<PathBuf>,
    pub tour: Option<PathBuf>,
    pub host: Option<String>,
    pub port: Option<u16>,
    pub open: Option<bool>,
    pub ui: Option<PathBuf>,
    pub snapshot_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub labels: Option<Vec<String>>,
    pub continuous: Option<Vec<String>>,
}

/// Reads `explicit`, or `dtour.toml` in the working directory when present.
pub fn load(explicit: Option<&Path>) -> Result<Config, String> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None if Path::new(DEFAULT_CONFIG).is_file() => PathBuf::from(DEFAULT_CONFIG),
        None => return Ok(Config::default()),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
