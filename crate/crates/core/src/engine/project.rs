use rayon::prelude::*;

use crate::dataio::Dataset;
use crate::error::{Result, TourError};
use crate::geometry::Basis;

/// Rows per parallel work unit.
pub const DEFAULT_CHUNK: usize = 4096;

/// N×2 positions of every point under one basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub xy: Vec<[f32; 2]>,
    pub basis_used: Basis,
    /// `[min_x, min_y, max_x, max_y]`; zeros when empty.
    pub bounds: [f32; 4],
}

impl Projection {
    pub fn len(&self) -> usize {
        self.xy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xy.is_empty()
    }

    /// Positions flattened as `x0, y0, x1, y1, …`.
    pub fn interleaved(&self) -> Vec<f32> {
        self.xy.iter().flat_map(|p| [p[0], p[1]]).collect()
    }
}

pub(crate) fn bounds_of(xy: &[[f32; 2]]) -> [f32; 4] {
    if xy.is_empty() {
        return [0.0; 4];
    }
    xy.iter().fold(
        [f32::INFINITY, f32::INFINITY, f32::NEG_INFINITY, f32::NEG_INFINITY],
        |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
    )
}

/// Projects every row of `ds` onto `basis`.
pub fn project(ds: &Dataset, basis: &Basis) -> Result<Projection> {
    project_with_chunk(ds, basis, DEFAULT_CHUNK)
}

/// [`project`] with an explicit chunk size. Each row is accumulated in `f64`
/// over dimensions in ascending order, so the output does not depend on
/// `chunk`.
pub fn project_with_chunk(ds: &Dataset, basis: &Basis, chunk: usize) -> Result<Projection> {
    project_rows(ds, basis, None, chunk)
}

/// Projects only the listed rows, in order.
pub fn project_subset(ds: &Dataset, basis: &Basis, rows: &[usize]) -> Result<Projection> {
    project_rows(ds, basis, Some(rows), DEFAULT_CHUNK)
}

fn project_rows(ds: &Dataset, basis: &Basis, subset: Option<&[usize]>, chunk: usize) -> Result<Projection> {
    if ds.n_dims() != basis.dims() {
        return Err(TourError::DimensionMismatch {
            expected: basis.dims(),
            actual: ds.n_dims(),
        });
    }
    let chunk = chunk.max(1);
    let n = subset.map_or(ds.n_rows(), <[usize]>::len);
    let columns = ds.columns();
    let weights = basis.rows();
    let mut xy = vec![[0.0f32; 2]; n];
    xy.par_chunks_mut(chunk).enumerate().for_each(|(c, out)| {
        let start = c * chunk;
        let len = out.len();
        let mut ax = vec![0.0f64; len];
        let mut ay = vec![0.0f64; len];
        for (col, w) in columns.iter().zip(weights) {
            match subset {
                None => {
                    let vals = &col[start..start + len];
                    for ((x, y), &v) in ax.iter_mut().zip(ay.iter_mut()).zip(vals) {
                        let v = v as f64;
                        *x += v * w[0];
                        *y += v * w[1];
                    }
                }
                Some(rows) => {
                    for ((x, y), &r) in ax.iter_mut().zip(ay.iter_mut()).zip(&rows[start..start + len]) {
                        let v = col[r] as f64;
                        *x += v * w[0];
                        *y += v * w[1];
                    }
                }
            }
        }
        for ((o, x), y) in out.iter_mut().zip(ax).zip(ay) {
            *o = [x as f32, y as f32];
        }
    });
    let bounds = bounds_of(&xy);
    Ok(Projection {
        xy,
        basis_used: basis.clone(),
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pair_picks_columns() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, -(i as f64), 2.0 * i as f64, 0.5]).collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let proj = project(&ds, &Basis::canonical(4, 0, 2).unwrap()).unwrap();
        for (i, p) in proj.xy.iter().enumerate() {
            assert_eq!(*p, [i as f32, 2.0 * i as f32]);
        }
        assert_eq!(proj.bounds, [0.0, 0.0, 9.0, 18.0]);
    }

    #[test]
    fn mismatch() {
        let ds = Dataset::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            project(&ds, &Basis::canonical(2, 0, 1).unwrap()),
            Err(TourError::DimensionMismatch { .. })
        ));
    }
}
