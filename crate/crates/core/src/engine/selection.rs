use serde::{Deserialize, Serialize};

use super::Projection;
use crate::dataio::{Dataset, LabelColumn};
use crate::error::{Result, TourError};

/// How a new selection merges with the existing one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    #[default]
    Replace,
    Add,
    Subtract,
}

/// Fixed-length bitmask over dataset rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    words: Vec<u64>,
    len: usize,
}

impl Selection {
    pub fn empty(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut s = Self::empty(len);
        for i in 0..len {
            if f(i) {
                s.set(i, true);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, on: bool) {
        let bit = 1u64 << (i % 64);
        if on {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    /// Merges `incoming` into `self` according to `combine`.
    pub fn combine(&mut self, incoming: &Selection, combine: Combine) {
        for (w, x) in self.words.iter_mut().zip(&incoming.words) {
            *w = match combine {
                Combine::Replace => *x,
                Combine::Add => *w | x,
                Combine::Subtract => *w & !x,
            };
        }
    }

    /// Packed little-endian bytes, `ceil(N / 8)` long; bit `i % 8` of byte `i / 8` is row `i`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(TourError::LengthMismatch(format!(
                "{} mask bytes for {len} rows",
                bytes.len()
            )));
        }
        let mut s = Self::empty(len);
        for (w, chunk) in s.words.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *w = u64::from_le_bytes(buf);
        }
        Ok(s)
    }

    /// Bytes of `self XOR other`, the delta that turns `other` into `self`.
    pub fn xor_bytes(&self, other: &Selection) -> Vec<u8> {
        self.to_bytes()
            .into_iter()
            .zip(other.to_bytes())
            .map(|(a, b)| a ^ b)
            .collect()
    }

    /// Applies a delta produced by [`Selection::xor_bytes`].
    pub fn apply_xor(&mut self, delta: &[u8]) -> Result<()> {
        let d = Selection::from_bytes(self.len, delta)?;
        for (w, x) in self.words.iter_mut().zip(d.words) {
            *w ^= x;
        }
        Ok(())
    }
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(pt: [f64; 2], polygon: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let mut j = polygon.len() - 1;
    for i in 0..polygon.len() {
        let (a, b) = (polygon[i], polygon[j]);
        if (a[1] > pt[1]) != (b[1] > pt[1]) {
            let x = (b[0] - a[0]) * (pt[1] - a[1]) / (b[1] - a[1]) + a[0];
            if pt[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Rows whose projected position falls inside `polygon`.
pub fn lasso_mask(projection: &Projection, polygon: &[[f64; 2]]) -> Result<Selection> {
    if polygon.len() < 3 {
        return Err(TourError::BadPolygon(polygon.len()));
    }
    if polygon.iter().flatten().any(|v| !v.is_finite()) {
        return Err(TourError::InvalidArgument("polygon vertices must be finite".into()));
    }
    Ok(Selection::from_fn(projection.len(), |i| {
        let p = projection.xy[i];
        point_in_polygon([p[0] as f64, p[1] as f64], polygon)
    }))
}

/// Rows whose categorical label is one of `values`.
pub fn label_mask(ds: &Dataset, column: &str, values: &[String]) -> Result<Selection> {
    match ds.label(column) {
        None => Err(TourError::MissingColumn(column.to_string())),
        Some(LabelColumn::Continuous { .. }) => Err(TourError::NotCategorical(column.to_string())),
        Some(LabelColumn::Categorical {
            codes, categories, ..
        }) => {
            let wanted: Vec<bool> = categories.iter().map(|c| values.contains(c)).collect();
            Ok(Selection::from_fn(codes.len(), |i| wanted[codes[i] as usize]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_round_trip() {
        let s = Selection::from_fn(77, |i| i % 3 == 0);
        assert_eq!(s.to_bytes().len(), 10);
        assert_eq!(Selection::from_bytes(77, &s.to_bytes()).unwrap(), s);
        let other = Selection::from_fn(77, |i| i % 5 == 0);
        let mut rebuilt = other.clone();
        rebuilt.apply_xor(&s.xor_bytes(&other)).unwrap();
        assert_eq!(rebuilt, s);
    }

    #[test]
    fn combine_modes() {
        let a = Selection::from_fn(10, |i| i < 5);
        let b = Selection::from_fn(10, |i| i % 2 == 0);
        let mut s = a.clone();
        s.combine(&b, Combine::Add);
        assert_eq!(s.count(), 7);
        let mut s = a.clone();
        s.combine(&b, Combine::Subtract);
        assert_eq!(s.selected().collect::<Vec<_>>(), vec![1, 3]);
        let mut s = a;
        s.combine(&b, Combine::Replace);
        assert_eq!(s, b);
    }

    #[test]
    fn even_odd_self_intersection() {
        // bow-tie: the crossing point splits it into two lobes
        let bow = [[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]];
        assert!(point_in_polygon([0.2, 1.0], &bow));
        assert!(point_in_polygon([1.8, 1.0], &bow));
        assert!(!point_in_polygon([1.0, 0.2], &bow));
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon([0.5, 0.5], &square));
        assert!(!point_in_polygon([1.5, 0.5], &square));
    }
}
