use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{StrategyOutput, TourWarning};
use crate::dataio::{Dataset, LabelColumn};
use crate::error::{Result, TourError};
use crate::geometry::{gram_schmidt, PlaneMatrix};
use crate::linalg::{canonical_sign, normalize, symmetric_eigen_desc};
use crate::tourpath::{top_loadings, Keyframe, KeyframeSequence};

pub const DEFAULT_MAX_POINTS: usize = 50_000;

#[derive(Clone, Debug)]
pub struct SpectralOptions {
    pub knn_k: usize,
    /// Number of nontrivial eigenvectors to return.
    pub components: usize,
    pub max_points: usize,
    /// Largest N solved with a dense eigensolver; above it, Lanczos is used.
    pub dense_limit: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            knn_k: 10,
            components: 6,
            max_points: DEFAULT_MAX_POINTS,
            dense_limit: 1024,
        }
    }
}

/// Laplacian-eigenmap coordinates of every point.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    /// `eigenvectors[k]` has length N and unit norm; ascending eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub knn_k: usize,
    pub warnings: Vec<TourWarning>,
}

impl SpectralModel {
    pub fn n_points(&self) -> usize {
        self.eigenvectors.first().map_or(0, Vec::len)
    }

    /// The N×m embedding scaled by `sqrt(N)`, with columns `LE1..LEm`.
    pub fn embedding_dataset(&self, labels: Vec<LabelColumn>) -> Result<Dataset> {
        let scale = (self.n_points() as f64).sqrt();
        let columns = self
            .eigenvectors
            .iter()
            .map(|v| v.iter().map(|x| (x * scale) as f32).collect())
            .collect();
        let names = (1..=self.eigenvectors.len()).map(|i| format!("LE{i}")).collect();
        Dataset::new(columns, names, labels)
    }
}

/// Builds the symmetrized kNN graph and returns its smallest nontrivial
/// normalized-Laplacian eigenvectors.
pub fn fit_spectral(ds: &Dataset, opts: &SpectralOptions) -> Result<SpectralModel> {
    let n = ds.n_rows();
    let m = opts.components;
    if n > opts.max_points {
        return Err(TourError::TooManyPoints {
            n,
            max: opts.max_points,
        });
    }
    if opts.knn_k < 2 || m < 2 {
        return Err(TourError::InvalidArgument(format!(
            "need knn_k ≥ 2 and components ≥ 2, got {} and {m}",
            opts.knn_k
        )));
    }
    if n < m + 2 || n <= opts.knn_k {
        return Err(TourError::InvalidArgument(format!(
            "{n} points is too few for {m} components with k = {}",
            opts.knn_k
        )));
    }
    let points = row_major(ds);
    let p = ds.n_dims();
    let mut graph = knn_graph(&points, p, opts.knn_k);
    let mut warnings = Vec::new();
    let components = connect_components(&points, p, &mut graph);
    if components > 1 {
        log::warn!("kNN graph has {components} components; linking nearest pairs");
        warnings.push(TourWarning::DisconnectedGraph { components });
    }
    let inv_sqrt_deg: Vec<f64> = graph.iter().map(|nb| 1.0 / (nb.len() as f64).sqrt()).collect();
    let (eigenvalues, mut eigenvectors) = if n <= opts.dense_limit {
        dense_eigen(&graph, &inv_sqrt_deg, m)
    } else {
        lanczos_eigen(&graph, &inv_sqrt_deg, m)
    };
    for v in &mut eigenvectors {
        normalize(v);
        canonical_sign(v);
    }
    Ok(SpectralModel {
        eigenvectors,
        eigenvalues,
        knn_k: opts.knn_k,
        warnings,
    })
}

fn row_major(ds: &Dataset) -> Vec<f64> {
    let (n, p) = (ds.n_rows(), ds.n_dims());
    let mut out = vec![0.0; n * p];
    for (j, col) in ds.columns().iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            out[i * p + j] = v as f64;
        }
    }
    out
}

fn dist2(points: &[f64], p: usize, i: usize, j: usize) -> f64 {
    let a = &points[i * p..(i + 1) * p];
    let b = &points[j * p..(j + 1) * p];
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact kNN, symmetrized by union. Neighbor lists come back sorted.
fn knn_graph(points: &[f64], p: usize, k: usize) -> Vec<Vec<usize>> {
    let n = points.len() / p;
    let directed: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dist2(points, p, i, j), j))
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cand.select_nth_unstable_by(k - 1, cmp);
            cand[..k].iter().map(|c| c.1).collect()
        })
        .collect();
    let mut graph = vec![Vec::with_capacity(k); n];
    for (i, nb) in directed.iter().enumerate() {
        for &j in nb {
            graph[i].push(j);
            graph[j].push(i);
        }
    }
    for nb in &mut graph {
        nb.sort_unstable();
        nb.dedup();
    }
    graph
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn component_labels(graph: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = graph.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for (i, nb) in graph.iter().enumerate() {
        for &j in nb {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut labels = vec![0; n];
    let mut ids = std::collections::HashMap::new();
    for (i, label) in labels.iter_mut().enumerate() {
        let root = find(&mut parent, i);
        let next = ids.len();
        *label = *ids.entry(root).or_insert(next);
    }
    let count = ids.len();
    (labels, count)
}

/// Links every component to its nearest foreign point until the graph is
/// connected. Returns the initial component count.
fn connect_components(points: &[f64], p: usize, graph: &mut [Vec<usize>]) -> usize {
    let (mut labels, initial) = component_labels(graph);
    let mut count = initial;
    while count > 1 {
        let n = graph.len();
        let nearest: Vec<(f64, usize)> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .filter(|&j| labels[j] != labels[i])
                    .map(|j| (dist2(points, p, i, j), j))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .unwrap_or((f64::INFINITY, i))
            })
            .collect();
        let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; count];
        for (i, &(d, j)) in nearest.iter().enumerate() {
            let slot = &mut best[labels[i]];
            if slot.is_none_or(|(bd, _, _)| d < bd) {
                *slot = Some((d, i, j));
            }
        }
        for (_, i, j) in best.into_iter().flatten() {
            if let Err(pos) = graph[i].binary_search(&j) {
                graph[i].insert(pos, j);
            }
            if let Err(pos) = graph[j].binary_search(&i) {
                graph[j].insert(pos, i);
            }
        }
        (labels, count) = component_labels(graph);
    }
    initial
}

/// `y = D^{-1/2} A D^{-1/2} x`
fn normalized_adjacency(graph: &[Vec<usize>], inv_sqrt_deg: &[f64], x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let s: f64 = graph[i].iter().map(|&j| inv_sqrt_deg[j] * x[j]).sum();
        *yi = inv_sqrt_deg[i] * s;
    });
}

fn dense_eigen(graph: &[Vec<usize>], inv_sqrt_deg: &[f64], m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = graph.len();
    let mut l = vec![vec![0.0; n]; n];
    for (i, nb) in graph.iter().enumerate() {
        l[i][i] = 1.0;
        for &j in nb {
            l[i][j] -= inv_sqrt_deg[i] * inv_sqrt_deg[j];
        }
    }
    // descending order of −L is ascending order of L
    for row in &mut l {
        row.iter_mut().for_each(|v| *v = -*v);
    }
    let (values, vectors) = symmetric_eigen_desc(&l);
    let values = values[1..=m].iter().map(|v| -v).collect();
    (values, vectors.into_iter().skip(1).take(m).collect())
}

const LANCZOS_TOL: f64 = 1e-8;
const LANCZOS_MAX_RESTARTS: usize = 300;

/// Thick-restart block Lanczos for the top `m` eigenpairs of `S + I` with the
/// trivial eigenvector `sqrt(d)` deflated; returns Laplacian eigenvalues.
///
/// A block start resolves repeated eigenvalues, which ring-like graphs have.
fn lanczos_eigen(graph: &[Vec<usize>], inv_sqrt_deg: &[f64], m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = graph.len();
    let mut trivial: Vec<f64> = inv_sqrt_deg.iter().map(|d| 1.0 / d).collect();
    normalize(&mut trivial);
    let max_dim = (3 * m + 30).min(n - 1);
    let keep = (m + (max_dim - m) / 2).min(max_dim - 1);
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        normalized_adjacency(graph, inv_sqrt_deg, x, &mut y);
        y.iter_mut().zip(x).for_each(|(a, b)| *a += b);
        y
    };
    let orthogonalize = |w: &mut [f64], basis: &[Vec<f64>]| {
        for _ in 0..2 {
            let c = dot(w, &trivial);
            w.iter_mut().zip(&trivial).for_each(|(a, b)| *a -= c * b);
            for v in basis {
                let c = dot(w, v);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e7);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(max_dim);
    let mut h = DMatrix::<f64>::zeros(max_dim, max_dim);
    // appends `w` (already orthogonal, unit norm) and records its column of VᵀAV
    let push = |w: Vec<f64>, basis: &mut Vec<Vec<f64>>, images: &mut Vec<Vec<f64>>, h: &mut DMatrix<f64>| {
        let aw = apply(&w);
        let j = basis.len();
        basis.push(w);
        for (i, v) in basis.iter().enumerate() {
            let c = dot(&aw, v);
            h[(i, j)] = c;
            h[(j, i)] = c;
        }
        images.push(aw);
    };
    let random_unit = |rng: &mut ChaCha8Rng, basis: &[Vec<f64>]| -> Vec<f64> {
        loop {
            let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            orthogonalize(&mut w, basis);
            if normalize(&mut w) > 1e-8 {
                return w;
            }
        }
    };
    for _ in 0..m.min(max_dim) {
        let w = random_unit(&mut rng, &basis);
        push(w, &mut basis, &mut images, &mut h);
    }

    let mut cursor = 0;
    let mut result = (Vec::new(), Vec::new());
    for restart in 0..LANCZOS_MAX_RESTARTS {
        while basis.len() < max_dim {
            let mut w = images[cursor].clone();
            cursor += 1;
            orthogonalize(&mut w, &basis);
            if normalize(&mut w) <= 1e-10 {
                w = random_unit(&mut rng, &basis);
            }
            push(w, &mut basis, &mut images, &mut h);
        }
        let dense: Vec<Vec<f64>> = (0..max_dim).map(|i| h.row(i).iter().copied().collect()).collect();
        let (theta, y) = symmetric_eigen_desc(&dense);
        let combine = |vs: &[Vec<f64>], k: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (coef, v) in y[k].iter().zip(vs) {
                out.iter_mut().zip(v).for_each(|(a, b)| *a += coef * b);
            }
            out
        };
        let ritz: Vec<Vec<f64>> = (0..keep).map(|k| combine(&basis, k)).collect();
        let ritz_images: Vec<Vec<f64>> = (0..keep).map(|k| combine(&images, k)).collect();
        let converged = (0..m).all(|k| {
            let r: f64 = ritz_images[k]
                .iter()
                .zip(&ritz[k])
                .map(|(a, v)| (a - theta[k] * v).powi(2))
                .sum();
            r.sqrt() <= LANCZOS_TOL
        });
        if converged || restart + 1 == LANCZOS_MAX_RESTARTS {
            if !converged {
                log::warn!("Lanczos stopped before reaching tolerance {LANCZOS_TOL}");
            }
            result = (
                theta[..m].iter().map(|t| 2.0 - t).collect(),
                ritz.into_iter().take(m).collect(),
            );
            break;
        }
        basis = ritz;
        images = ritz_images;
        h.fill(0.0);
        for (k, t) in theta.iter().take(keep).enumerate() {
            h[(k, k)] = *t;
        }
        cursor = 0;
    }
    result
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cumulative circular bases over the spectral coordinates: keyframe `k`
/// mixes the first `k + 2` eigenvectors at uniform angular offsets.
pub fn le_tour(model: &SpectralModel, n_frames: usize) -> Result<StrategyOutput> {
    let m = model.eigenvectors.len();
    if n_frames < 2 || n_frames + 1 > m {
        return Err(TourError::InvalidArgument(format!(
            "LE tour with {n_frames} frames needs at least {} eigenvectors, have {m}",
            n_frames + 1
        )));
    }
    let keyframes = (0..n_frames)
        .map(|k| {
            let q = k + 2;
            let angles: Vec<f64> = if q == 2 {
                vec![0.0, std::f64::consts::FRAC_PI_2]
            } else {
                (0..q).map(|i| std::f64::consts::TAU * i as f64 / q as f64).collect()
            };
            let mut rows = vec![[0.0; 2]; m];
            for (row, theta) in rows.iter_mut().zip(&angles) {
                *row = [theta.cos(), theta.sin()];
            }
            let basis = gram_schmidt(&PlaneMatrix::from_rows(rows))?;
            let loadings = top_loadings(&basis, 5);
            Ok(Keyframe::new(basis, format!("LE1-{q}")).with_loadings(loadings))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StrategyOutput {
        sequence: KeyframeSequence::new(keyframes, true)?,
        warnings: model.warnings.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic_distance;

    fn ring(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                vec![a.cos(), a.sin(), 0.0]
            })
            .collect();
        Dataset::from_rows(&rows).unwrap()
    }

    fn radius_cv(model: &SpectralModel) -> f64 {
        let r: Vec<f64> = (0..model.n_points())
            .map(|i| model.eigenvectors[0][i].hypot(model.eigenvectors[1][i]))
            .collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.len() as f64;
        var.sqrt() / mean
    }

    #[test]
    fn ring_embeds_as_loop() {
        let opts = SpectralOptions {
            knn_k: 8,
            components: 4,
            ..Default::default()
        };
        let model = fit_spectral(&ring(256), &opts).unwrap();
        assert!(radius_cv(&model) < 0.2);
        for w in model.eigenvalues.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
        assert!(model.eigenvalues.iter().all(|&v| (-1e-9..=2.0 + 1e-9).contains(&v)));
    }

    #[test]
    fn lanczos_matches_dense() {
        let dense = fit_spectral(
            &ring(300),
            &SpectralOptions {
                knn_k: 6,
                components: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let sparse = fit_spectral(
            &ring(300),
            &SpectralOptions {
                knn_k: 6,
                components: 3,
                dense_limit: 10,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&sparse.eigenvalues) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        // ring eigenvalues come in pairs; compare the leading 2D eigenspace
        for v in &sparse.eigenvectors[..2] {
            let c0 = dot(v, &dense.eigenvectors[0]);
            let c1 = dot(v, &dense.eigenvectors[1]);
            assert!((c0.hypot(c1) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn blobs_are_linked() {
        let mut rows = Vec::new();
        for i in 0..40 {
            let a = i as f64 * 0.3;
            rows.push(vec![a.cos() * 0.1, a.sin() * 0.1]);
            rows.push(vec![100.0 + a.cos() * 0.1, a.sin() * 0.1]);
        }
        let ds = Dataset::from_rows(&rows).unwrap();
        let model = fit_spectral(
            &ds,
            &SpectralOptions {
                knn_k: 3,
                components: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(
            model.warnings[0],
            TourWarning::DisconnectedGraph { components } if components >= 2
        ));
        assert!(model.eigenvalues[0] > -1e-9);
    }

    #[test]
    fn too_many_points() {
        let opts = SpectralOptions {
            max_points: 100,
            ..Default::default()
        };
        assert!(matches!(
            fit_spectral(&ring(101), &opts),
            Err(TourError::TooManyPoints { n: 101, max: 100 })
        ));
    }

    #[test]
    fn le_tour_frames() {
        let opts = SpectralOptions {
            knn_k: 8,
            components: 6,
            ..Default::default()
        };
        let model = fit_spectral(&ring(128), &opts).unwrap();
        let out = le_tour(&model, 5).unwrap();
        let kf = out.sequence.keyframes();
        assert_eq!(kf.len(), 5);
        let far = geodesic_distance(&kf[0].basis, &kf[4].basis).unwrap();
        for w in kf.windows(2) {
            assert!(geodesic_distance(&w[0].basis, &w[1].basis).unwrap() < far);
        }
        crate::tourpath::TourPath::compile(out.sequence).unwrap();
    }
}
