use std::collections::HashSet;

use crate::dataio::Dataset;
use crate::error::{Result, TourError};
use crate::geometry::{centroid, procrustes_align, Basis, DEGENERACY_EPS};
use crate::tourpath::{Keyframe, KeyframeSequence};

/// Maximum coordinate difference at which two aligned embeddings share columns.
const SAME_EMBEDDING_TOL: f64 = 1e-12;

/// A stack of aligned 2D embeddings viewed as one tour.
#[derive(Clone, Debug)]
pub struct SequentialTour {
    pub sequence: KeyframeSequence,
    /// Centered, unit-RMS, Procrustes-aligned embeddings in input order.
    pub aligned: Vec<Vec<[f64; 2]>>,
    /// N × 2G data the keyframes project, where G counts distinct embeddings.
    pub stacked: Dataset,
    /// `(before, after)` Procrustes residual against the predecessor, for i ≥ 1.
    pub residuals: Vec<(f64, f64)>,
}

fn unit_rms(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let c = centroid(points);
    let centered: Vec<[f64; 2]> = points.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect();
    let ms = centered.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() / points.len() as f64;
    if !(ms > DEGENERACY_EPS) {
        return Err(TourError::DegeneratePointSet(
            "embedding has zero spread".into(),
        ));
    }
    let s = ms.sqrt();
    Ok(centered.iter().map(|p| [p[0] / s, p[1] / s]).collect())
}

fn frobenius(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Aligns each embedding to its predecessor and stacks the sequence so that
/// keyframe `i` is a canonical coordinate pair of the stacked space.
///
/// Embeddings that coincide after alignment share one coordinate pair.
pub fn sequential_tour(embeddings: &[Vec<[f64; 2]>], labels: &[String]) -> Result<SequentialTour> {
    let k = embeddings.len();
    if k < 2 {
        return Err(TourError::TooFewKeyframes(k));
    }
    if labels.len() != k {
        return Err(TourError::LengthMismatch(format!(
            "{k} embeddings but {} labels",
            labels.len()
        )));
    }
    let n = embeddings[0].len();
    if let Some(e) = embeddings.iter().find(|e| e.len() != n) {
        return Err(TourError::LengthMismatch(format!(
            "embeddings have {n} and {} points",
            e.len()
        )));
    }

    let mut aligned = vec![unit_rms(&embeddings[0])?];
    let mut residuals = Vec::with_capacity(k - 1);
    for emb in &embeddings[1..] {
        let prev = aligned.last().expect("first embedding");
        let scaled = unit_rms(emb)?;
        let fit = procrustes_align(&scaled, prev)?;
        residuals.push((frobenius(&scaled, prev), fit.residual));
        aligned.push(fit.aligned);
    }

    let mut groups: Vec<usize> = Vec::with_capacity(k);
    let mut representatives: Vec<usize> = Vec::new();
    for (i, emb) in aligned.iter().enumerate() {
        let same = representatives.iter().position(|&r| {
            aligned[r]
                .iter()
                .zip(emb)
                .all(|(a, b)| (a[0] - b[0]).abs() <= SAME_EMBEDDING_TOL && (a[1] - b[1]).abs() <= SAME_EMBEDDING_TOL)
        });
        groups.push(same.unwrap_or_else(|| {
            representatives.push(i);
            representatives.len() - 1
        }));
    }

    let g = representatives.len();
    let unique: HashSet<&String> = labels.iter().collect();
    let mut columns = Vec::with_capacity(2 * g);
    let mut names = Vec::with_capacity(2 * g);
    for (gi, &r) in representatives.iter().enumerate() {
        let stem = if unique.len() == k {
            labels[r].clone()
        } else {
            format!("E{}", gi + 1)
        };
        for axis in 0..2 {
            columns.push(aligned[r].iter().map(|p| p[axis] as f32).collect());
            names.push(format!("{stem}.{}", ["x", "y"][axis]));
        }
    }
    let stacked = Dataset::new(columns, names, Vec::new())?;

    let keyframes = groups
        .iter()
        .zip(labels)
        .map(|(&gi, label)| {
            let basis = Basis::canonical(2 * g, 2 * gi, 2 * gi + 1)?;
            Ok(Keyframe::new(basis, label.clone()).with_loadings(vec![(2 * gi, 1.0), (2 * gi + 1, 1.0)]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SequentialTour {
        sequence: KeyframeSequence::new(keyframes, true)?,
        aligned,
        stacked,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tourpath::TourPath;

    fn spiral(n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 0.2;
                [t.cos() * (1.0 + t), t.sin() * (1.0 + t) + 0.3]
            })
            .collect()
    }

    #[test]
    fn rotated_copy_collapses() {
        let a = spiral(50);
        let b: Vec<[f64; 2]> = a.iter().map(|p| [-p[1], p[0]]).collect();
        let tour = sequential_tour(&[a, b], &["a".into(), "b".into()]).unwrap();
        assert_eq!(tour.stacked.n_dims(), 2);
        let (before, after) = tour.residuals[0];
        assert!(after <= before && after < 1e-9);
        let path = TourPath::compile(tour.sequence).unwrap();
        assert_eq!(path.total_length(), 0.0);
    }

    #[test]
    fn distinct_embeddings_get_pairs() {
        let a = spiral(30);
        let b: Vec<[f64; 2]> = a.iter().map(|p| [p[0] * 2.0, p[1] * 0.5]).collect();
        let tour = sequential_tour(&[a.clone(), b, a], &["x".into(), "y".into(), "z".into()]).unwrap();
        assert_eq!(tour.stacked.n_dims(), 4);
        assert_eq!(tour.sequence.keyframes()[1].basis, Basis::canonical(4, 2, 3).unwrap());
    }

    #[test]
    fn mismatched_lengths() {
        let r = sequential_tour(&[spiral(10), spiral(11)], &["a".into(), "b".into()]);
        assert!(matches!(r, Err(TourError::LengthMismatch(_))));
        let flat = vec![[1.0, 1.0]; 10];
        let r = sequential_tour(&[spiral(10), flat], &["a".into(), "b".into()]);
        assert!(matches!(r, Err(TourError::DegeneratePointSet(_))));
    }
}
