use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::Result;

const SCALE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeMode {
    #[default]
    None,
    Zscore,
    UnitRange,
}

impl std::str::FromStr for StandardizeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "zscore" => Ok(Self::Zscore),
            "unit_range" | "unit-range" => Ok(Self::UnitRange),
            other => Err(format!("unknown standardization mode '{other}'")),
        }
    }
}

/// `standardized = (raw − offset) · scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnTransform {
    pub offset: f64,
    pub scale: f64,
}

impl ColumnTransform {
    pub const IDENTITY: ColumnTransform = ColumnTransform {
        offset: 0.0,
        scale: 1.0,
    };

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.offset) * self.scale
    }

    /// Maps a standardized value back to raw units; `None` for zeroed columns.
    pub fn invert(&self, standardized: f64) -> Option<f64> {
        (self.scale != 0.0).then(|| standardized / self.scale + self.offset)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StandardizeReport {
    pub mode: StandardizeMode,
    pub transforms: Vec<ColumnTransform>,
    /// Columns whose spread fell below the floor and were set to zero.
    pub zeroed: Vec<usize>,
}

pub fn standardize(ds: &Dataset, mode: StandardizeMode) -> Result<(Dataset, StandardizeReport)> {
    let mut zeroed = Vec::new();
    let transforms: Vec<ColumnTransform> = ds
        .columns()
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let t = match mode {
                StandardizeMode::None => ColumnTransform::IDENTITY,
                StandardizeMode::Zscore => {
                    let n = col.len().max(1) as f64;
                    let mean = col.iter().map(|&v| v as f64).sum::<f64>() / n;
                    let var = col.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    ColumnTransform {
                        offset: mean,
                        scale: if sd < SCALE_FLOOR { 0.0 } else { 1.0 / sd },
                    }
                }
                StandardizeMode::UnitRange => {
                    let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v as f64), hi.max(v as f64))
                    });
                    let range = hi - lo;
                    ColumnTransform {
                        offset: lo,
                        scale: if range < SCALE_FLOOR { 0.0 } else { 1.0 / range },
                    }
                }
            };
            if t.scale == 0.0 {
                zeroed.push(j);
            }
            t
        })
        .collect();
    for &j in &zeroed {
        log::warn!(
            "column '{}' has no spread; standardized to zero",
            ds.dim_names()[j]
        );
    }
    let columns = ds
        .columns()
        .iter()
        .zip(&transforms)
        .map(|(col, t)| {
            if mode == StandardizeMode::None {
                col.clone()
            } else {
                col.iter().map(|&v| t.apply(v as f64) as f32).collect()
            }
        })
        .collect();
    let out = Dataset::new(columns, ds.dim_names().to_vec(), ds.labels().to_vec())?;
    Ok((
        out,
        StandardizeReport {
            mode,
            transforms,
            zeroed,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_is_zeroed() {
        let ds = Dataset::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let (out, report) = standardize(&ds, StandardizeMode::Zscore).unwrap();
        assert_eq!(report.zeroed, vec![1]);
        assert!(out.column(1).iter().all(|&v| v == 0.0));
        let m = out.means();
        assert!(m[0].abs() < 1e-7);
    }

    #[test]
    fn standardized_data_is_a_fixed_point() {
        let raw: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let x = i as f64;
                vec![(x * 0.37).sin() * 3.0 + 1.0, x.sqrt()]
            })
            .collect();
        let ds = Dataset::from_rows(&raw).unwrap();
        let (once, _) = standardize(&ds, StandardizeMode::Zscore).unwrap();
        let (twice, _) = standardize(&once, StandardizeMode::Zscore).unwrap();
        for (a, b) in once.columns().iter().zip(twice.columns()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn unit_range_maps_to_unit_interval() {
        let ds = Dataset::from_rows(&[vec![-2.0], vec![0.0], vec![6.0]]).unwrap();
        let (out, report) = standardize(&ds, StandardizeMode::UnitRange).unwrap();
        assert_eq!(out.column(0), &[0.0, 0.25, 1.0]);
        assert_eq!(report.transforms[0].invert(1.0), Some(6.0));
    }
}
