use super::{StrategyOutput, TourWarning};
use crate::dataio::Dataset;
use crate::error::{Result, TourError};
use crate::geometry::Basis;
use crate::linalg::{canonical_sign, symmetric_eigen_desc};
use crate::tourpath::{top_loadings, Keyframe, KeyframeSequence};

/// Top principal directions of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `components[k]` is the k-th principal direction (length p).
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Scores of row `i` on components `a` and `b`.
    pub fn scores(&self, ds: &Dataset, i: usize, a: usize, b: usize) -> [f64; 2] {
        let mut s = [0.0; 2];
        for (j, mean) in self.mean.iter().enumerate() {
            let v = ds.column(j)[i] as f64 - mean;
            s[0] += v * self.components[a][j];
            s[1] += v * self.components[b][j];
        }
        s
    }

    pub fn component_pair(&self, a: usize, b: usize) -> Result<Basis> {
        Basis::from_columns(&self.components[a], &self.components[b])
    }
}

/// Principal components via the eigen-decomposition of the sample covariance.
pub fn fit_pca(ds: &Dataset, m: usize) -> Result<PcaModel> {
    let p = ds.n_dims();
    if m < 2 || m > p {
        return Err(TourError::InvalidArgument(format!(
            "need 2 ≤ components ≤ {p}, got {m}"
        )));
    }
    if ds.n_rows() <= m {
        return Err(TourError::InvalidArgument(format!(
            "need more rows than components ({} ≤ {m})",
            ds.n_rows()
        )));
    }
    let cov = ds.covariance();
    let (values, vectors) = symmetric_eigen_desc(&cov);
    let top = values[0].max(0.0);
    let available = values
        .iter()
        .filter(|&&v| v > 1e-12 * top.max(f64::MIN_POSITIVE))
        .count();
    if available < m {
        return Err(TourError::RankDeficient {
            requested: m,
            available,
        });
    }
    let components = vectors
        .into_iter()
        .take(m)
        .map(|mut v| {
            canonical_sign(&mut v);
            v
        })
        .collect();
    Ok(PcaModel {
        mean: ds.means(),
        components,
        explained_variance: values[..m].to_vec(),
    })
}

/// Cycles through successive component pairs, closing with `(PC_k, PC_1)`.
pub fn little_tour(pca: &PcaModel, n_components: usize) -> Result<StrategyOutput> {
    if n_components < 2 || n_components > pca.n_components() {
        return Err(TourError::InvalidArgument(format!(
            "little tour needs 2 ≤ components ≤ {}, got {n_components}",
            pca.n_components()
        )));
    }
    let frame = |a: usize, b: usize| -> Result<Keyframe> {
        let basis = pca.component_pair(a, b)?;
        let loadings = top_loadings(&basis, 5);
        Ok(Keyframe::new(basis, format!("PC{}-PC{}", a + 1, b + 1)).with_loadings(loadings))
    };
    if n_components == 2 {
        let kf = frame(0, 1)?;
        return Ok(StrategyOutput {
            sequence: KeyframeSequence::new(vec![kf.clone(), kf], true)?,
            warnings: vec![TourWarning::SingleKeyframe],
        });
    }
    let keyframes = (0..n_components)
        .map(|i| frame(i, (i + 1) % n_components))
        .collect::<Result<Vec<_>>>()?;
    Ok(StrategyOutput {
        sequence: KeyframeSequence::new(keyframes, true)?,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::principal_angles;

    fn line_data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let x = i as f64 / 10.0 - 10.0;
                vec![x, 1e-3 * ((i * 7919) % 13) as f64, 1e-3 * ((i * 104729) % 7) as f64]
            })
            .collect();
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn dominant_axis_recovered() {
        let pca = fit_pca(&line_data(), 2).unwrap();
        let pc1 = &pca.components[0];
        let angle = pc1[0].abs().min(1.0).acos();
        assert!(angle < 1e-3, "angle {angle}");
        assert!(pc1[0] > 0.0);
    }

    #[test]
    fn little_tour_shares_components() {
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.1).sin() * 4.0, (t * 0.37).cos() * 2.0, (t * 0.73).sin(), (t * 1.3).cos() * 0.5]
            })
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let pca = fit_pca(&ds, 4).unwrap();
        let out = little_tour(&pca, 3).unwrap();
        let kfs = out.sequence.keyframes();
        assert_eq!(kfs.len(), 3);
        assert_eq!(kfs[2].label, "PC3-PC1");
        for i in 0..3 {
            let pa = principal_angles(&kfs[i].basis, &kfs[(i + 1) % 3].basis).unwrap();
            assert_eq!(pa.tau0, 0.0);
        }
    }

    #[test]
    fn two_components_collapse() {
        let pca = fit_pca(&line_data(), 2).unwrap();
        let out = little_tour(&pca, 2).unwrap();
        assert_eq!(out.warnings, vec![TourWarning::SingleKeyframe]);
        let path = crate::tourpath::TourPath::compile(out.sequence).unwrap();
        assert_eq!(path.total_length(), 0.0);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 2.0 * i as f64, 1.0]).collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        assert!(matches!(
            fit_pca(&ds, 2),
            Err(TourError::RankDeficient { requested: 2, available: 1 })
        ));
    }
}
