use std::time::Instant;

use dtour::dataio::Dataset;
use dtour::engine::project;
use dtour::strategies::{grand_tour_extend, GrandStart};
use dtour::tourpath::TourPath;
use dtour::TourError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::BenchConfig;
use crate::run::load_input;
use crate::{BenchArgs, CliError, CliResult};

#[derive(Serialize)]
struct Latency {
    samples: usize,
    min: f64,
    p50: f64,
    p90: f64,
    p99: f64,
    max: f64,
}

impl Latency {
    fn from_samples(mut xs: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        let q = |f: f64| xs[((xs.len() - 1) as f64 * f).round() as usize];
        Latency {
            samples: xs.len(),
            min: xs[0],
            p50: q(0.5),
            p90: q(0.9),
            p99: q(0.99),
            max: xs[xs.len() - 1],
        }
    }
}

#[derive(Serialize)]
struct BasisAtReport {
    dims: usize,
    keyframes: usize,
    arc_table_compile_ms: f64,
    latency_us: Latency,
}

#[derive(Serialize)]
struct Report {
    n: usize,
    p: usize,
    threads: usize,
    seed: u64,
    iterations: usize,
    projections_per_second: f64,
    projection_ms: Latency,
    basis_at: BasisAtReport,
}

/// N×p standard-normal columns, one seeded stream per column.
fn synthetic(n: usize, p: usize, seed: u64) -> Result<Dataset, TourError> {
    let columns: Vec<Vec<f32>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(j as u64));
            (0..n).map(|_| rng.sample::<f32, _>(StandardNormal)).collect()
        })
        .collect();
    Dataset::new(columns, dtour::dataio::default_names(p), Vec::new())
}

pub fn run(args: BenchArgs, cfg: BenchConfig) -> CliResult {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let iterations = args.iterations.or(cfg.iterations).unwrap_or(20).max(1);
    let ds = match args.points_file.or(cfg.points_file) {
        Some(path) => load_input(&path, Vec::new(), Vec::new())?,
        None => {
            let n = args.n.or(cfg.n).unwrap_or(1_000_000);
            let p = args.p.or(cfg.p).unwrap_or(16);
            if n == 0 {
                return Err(CliError::Usage("--n must be positive".into()));
            }
            if p < 2 {
                return Err(CliError::Usage("--p must be at least 2".into()));
            }
            synthetic(n, p, seed)?
        }
    };
    if ds.n_rows() == 0 {
        return Err(TourError::EmptyDataset.into());
    }
    let (n, p) = (ds.n_rows(), ds.n_dims());

    let path = TourPath::compile(grand_tour_extend(GrandStart::Dims(p), 8, seed)?)?;
    project(&ds, &path.basis_at(0.0)?)?;
    let mut proj_ms = Vec::with_capacity(iterations);
    let start = Instant::now();
    for i in 0..iterations {
        let basis = path.basis_at(i as f64 / iterations as f64)?;
        let t0 = Instant::now();
        std::hint::black_box(project(&ds, &basis)?);
        proj_ms.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    let projections_per_second = iterations as f64 / start.elapsed().as_secs_f64();

    let dims = args.basis_dims.or(cfg.basis_dims).unwrap_or(64).max(2);
    let keyframes = args.keyframes.or(cfg.keyframes).unwrap_or(100).max(2);
    let seq = grand_tour_extend(GrandStart::Dims(dims), keyframes, seed)?;
    let t0 = Instant::now();
    let big = TourPath::compile(seq)?;
    let arc_table_compile_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latencies: Vec<f64> = (0..2000)
        .map(|_| {
            let t: f64 = rng.random();
            let t0 = Instant::now();
            std::hint::black_box(big.basis_at(t)).map(|_| t0.elapsed().as_secs_f64() * 1e6)
        })
        .collect::<Result<_, _>>()?;

    let report = Report {
        n,
        p,
        threads: rayon::current_num_threads(),
        seed,
        iterations,
        projections_per_second,
        projection_ms: Latency::from_samples(proj_ms),
        basis_at: BasisAtReport {
            dims,
            keyframes,
            arc_table_compile_ms,
            latency_us: Latency::from_samples(latencies),
        },
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}
