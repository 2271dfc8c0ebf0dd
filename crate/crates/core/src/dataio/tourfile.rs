//! JSON tour files: any sequence of p×2 orthonormal bases.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{standardize, Dataset, StandardizeMode};
use crate::error::{Result, TourError};
use crate::geometry::{gram_schmidt, orthonormality_drift, Basis, PlaneMatrix};
use crate::tourpath::{Keyframe, KeyframeSequence};

pub const TOURFILE_VERSION: u32 = 1;

/// Bases drifting further than this from orthonormality are rejected on load;
/// smaller drift is repaired silently.
pub const LOAD_DRIFT_LIMIT: f64 = 1e-6;

const REPAIR_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyframeRecord {
    /// Row-major p×2 entries.
    pub basis: Vec<[f64; 2]>,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub loadings: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TourFile {
    pub version: u32,
    pub dims: usize,
    pub dim_names: Vec<String>,
    pub strategy: String,
    pub cyclic: bool,
    pub keyframes: Vec<KeyframeRecord>,
    /// Derived dataset (DTC1) the bases apply to, relative to the tour file,
    /// for strategies whose coordinates are not the input columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Preprocess::is_identity")]
    pub preprocess: Preprocess,
}

/// Column transforms applied to the input before the bases are meaningful.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocess {
    #[serde(default)]
    pub standardize: StandardizeMode,
    /// Subtract column means after standardizing.
    #[serde(default)]
    pub center: bool,
}

impl Preprocess {
    pub fn is_identity(&self) -> bool {
        *self == Preprocess::default()
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let (mut out, _) = standardize(ds, self.standardize)?;
        if self.center {
            let means = out.means();
            let columns = out
                .columns()
                .iter()
                .zip(&means)
                .map(|(c, &m)| c.iter().map(|&v| (v as f64 - m) as f32).collect())
                .collect();
            out = Dataset::new(columns, out.dim_names().to_vec(), out.labels().to_vec())?;
        }
        Ok(out)
    }
}

/// Per-keyframe drift measured while loading.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TourLoadReport {
    pub drifts: Vec<f64>,
    pub repaired: Vec<usize>,
}

impl TourFile {
    pub fn from_sequence(seq: &KeyframeSequence, dim_names: Vec<String>, strategy: impl Into<String>) -> Self {
        Self {
            version: TOURFILE_VERSION,
            dims: seq.dims(),
            dim_names,
            strategy: strategy.into(),
            cyclic: seq.cyclic(),
            keyframes: seq
                .keyframes()
                .iter()
                .map(|k| KeyframeRecord {
                    basis: k.basis.rows().to_vec(),
                    label: k.label.clone(),
                    loadings: k.loadings.clone(),
                })
                .collect(),
            dataset: None,
            preprocess: Preprocess::default(),
        }
    }

    /// Validates every basis, repairing small drift. Fails on the first
    /// keyframe whose drift exceeds [`LOAD_DRIFT_LIMIT`].
    pub fn validate(&mut self) -> Result<TourLoadReport> {
        if self.version != TOURFILE_VERSION {
            return Err(TourError::Schema(format!(
                "unsupported tour file version {}",
                self.version
            )));
        }
        if self.dims < 2 {
            return Err(TourError::Schema(format!("dims must be ≥ 2, got {}", self.dims)));
        }
        if !self.dim_names.is_empty() && self.dim_names.len() != self.dims {
            return Err(TourError::Schema(format!(
                "{} dim_names for {} dims",
                self.dim_names.len(),
                self.dims
            )));
        }
        let mut report = TourLoadReport::default();
        for (index, kf) in self.keyframes.iter_mut().enumerate() {
            if kf.basis.len() != self.dims {
                return Err(TourError::Schema(format!(
                    "keyframe {index} has {} rows, expected {}",
                    kf.basis.len(),
                    self.dims
                )));
            }
            if kf.basis.iter().flatten().any(|v| !v.is_finite()) {
                return Err(TourError::OrthonormalityViolation {
                    index,
                    drift: f64::INFINITY,
                });
            }
            if let Some(&(i, w)) = kf.loadings.iter().find(|(i, w)| *i >= self.dims || !(0.0..=1.0).contains(w)) {
                return Err(TourError::Schema(format!(
                    "keyframe {index} has loading ({i}, {w}) out of range"
                )));
            }
            let drift = orthonormality_drift(&kf.basis);
            report.drifts.push(drift);
            if drift > LOAD_DRIFT_LIMIT {
                return Err(TourError::OrthonormalityViolation { index, drift });
            }
            if drift > REPAIR_THRESHOLD {
                let fixed = gram_schmidt(&PlaneMatrix::from_rows(kf.basis.clone()))?;
                kf.basis = fixed.into_rows();
                report.repaired.push(index);
            }
        }
        if self.keyframes.len() < 2 {
            return Err(TourError::TooFewKeyframes(self.keyframes.len()));
        }
        Ok(report)
    }

    /// Converts to a keyframe sequence; call [`TourFile::validate`] first.
    pub fn to_sequence(&self) -> Result<KeyframeSequence> {
        let keyframes = self
            .keyframes
            .iter()
            .map(|k| {
                Ok(Keyframe {
                    basis: Basis::from_rows(k.basis.clone())?,
                    label: k.label.clone(),
                    loadings: k.loadings.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        KeyframeSequence::new(keyframes, self.cyclic)
    }
}

pub fn write_tour<W: Write>(tf: &TourFile, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, tf).map_err(|e| TourError::Schema(e.to_string()))
}

pub fn save_tour(tf: &TourFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| TourError::file(path, e))?;
    let mut w = BufWriter::new(file);
    write_tour(tf, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_tour<R: Read>(r: R) -> Result<(TourFile, TourLoadReport)> {
    let mut tf: TourFile = serde_json::from_reader(r).map_err(|e| {
        if e.is_io() {
            TourError::Io(e.into())
        } else {
            TourError::Schema(e.to_string())
        }
    })?;
    let report = tf.validate()?;
    Ok((tf, report))
}

pub fn load_tour(path: impl AsRef<Path>) -> Result<(TourFile, TourLoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| TourError::file(path, e))?;
    read_tour(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_frames() -> TourFile {
        let seq = KeyframeSequence::new(
            vec![
                Keyframe::new(Basis::canonical(3, 0, 1).unwrap(), "a").with_loadings(vec![(0, 1.0)]),
                Keyframe::new(Basis::canonical(3, 1, 2).unwrap(), "b"),
            ],
            true,
        )
        .unwrap();
        TourFile::from_sequence(&seq, vec!["x".into(), "y".into(), "z".into()], "little")
    }

    #[test]
    fn corrupted_norm_is_rejected_with_index() {
        let mut tf = two_frames();
        tf.keyframes[1].basis[1][0] = 1.5;
        let mut bytes = Vec::new();
        write_tour(&tf, &mut bytes).unwrap();
        match read_tour(bytes.as_slice()) {
            Err(TourError::OrthonormalityViolation { index, drift }) => {
                assert_eq!(index, 1);
                assert!(drift > 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_drift_is_repaired() {
        let mut tf = two_frames();
        tf.keyframes[0].basis[0][0] = 1.0 + 1e-8;
        let mut bytes = Vec::new();
        write_tour(&tf, &mut bytes).unwrap();
        let (back, report) = read_tour(bytes.as_slice()).unwrap();
        assert_eq!(report.repaired, vec![0]);
        assert!(orthonormality_drift(&back.keyframes[0].basis) < 1e-15);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(
            read_tour(&b"{\"version\": 1}"[..]),
            Err(TourError::Schema(_))
        ));
        let mut tf = two_frames();
        tf.keyframes[0].basis.pop();
        let mut bytes = Vec::new();
        write_tour(&tf, &mut bytes).unwrap();
        assert!(matches!(read_tour(bytes.as_slice()), Err(TourError::Schema(_))));
    }
}
