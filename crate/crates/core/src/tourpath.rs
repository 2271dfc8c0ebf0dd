//! Keyframe sequences compiled into arc-length parameterized paths.
//!
//! Between consecutive keyframes the path follows a uniform cubic Catmull-Rom
//! blend of the four surrounding bases, applied entry by entry and then
//! orthonormalized. A cumulative geodesic length table, sampled at a fixed
//! number of interior points per segment, maps the public parameter
//! `t ∈ [0, 1]` (a fraction of total length) to a raw spline parameter.

use crate::error::{Result, TourError};
use crate::geometry::{geodesic_distance, gram_schmidt, Basis, PlaneMatrix};

/// Interior samples per segment used by [`TourPath::compile`].
pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Keyframe {
    pub basis: Basis,
    pub label: String,
    /// `(dimension index, weight)` pairs, weights in `[0, 1]`.
    pub loadings: Vec<(usize, f64)>,
}

impl Keyframe {
    pub fn new(basis: Basis, label: impl Into<String>) -> Self {
        Self {
            basis,
            label: label.into(),
            loadings: Vec::new(),
        }
    }

    pub fn with_loadings(mut self, loadings: Vec<(usize, f64)>) -> Self {
        self.loadings = loadings;
        self
    }
}

/// Dimensions ranked by their squared row norm in `basis`, i.e. how much of
/// each unit axis survives the projection.
pub fn top_loadings(basis: &Basis, count: usize) -> Vec<(usize, f64)> {
    let mut weights: Vec<(usize, f64)> = basis
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (r[0] * r[0] + r[1] * r[1]).min(1.0)))
        .collect();
    weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    weights.truncate(count);
    weights
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyframeSequence {
    keyframes: Vec<Keyframe>,
    cyclic: bool,
    dims: usize,
}

impl KeyframeSequence {
    pub fn new(keyframes: Vec<Keyframe>, cyclic: bool) -> Result<Self> {
        if keyframes.len() < 2 {
            return Err(TourError::TooFewKeyframes(keyframes.len()));
        }
        let dims = keyframes[0].basis.dims();
        for kf in &keyframes {
            if kf.basis.dims() != dims {
                return Err(TourError::DimensionMismatch {
                    expected: dims,
                    actual: kf.basis.dims(),
                });
            }
            if let Some(&(i, w)) = kf.loadings.iter().find(|(i, w)| *i >= dims || !(0.0..=1.0).contains(w)) {
                return Err(TourError::InvalidArgument(format!(
                    "loading ({i}, {w}) out of range for {dims} dimensions"
                )));
            }
        }
        Ok(Self {
            keyframes,
            cyclic,
            dims,
        })
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    pub fn len(&self) -> usize {
        self.keyframes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keyframes.is_empty()
    }

    pub fn cyclic(&self) -> bool {
        self.cyclic
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn with_cyclic(mut self, cyclic: bool) -> Self {
        self.cyclic = cyclic;
        self
    }

    pub fn into_keyframes(self) -> Vec<Keyframe> {
        self.keyframes
    }

    /// Number of spline segments: `K` when cyclic, `K − 1` otherwise.
    pub fn segment_count(&self) -> usize {
        if self.cyclic {
            self.keyframes.len()
        } else {
            self.keyframes.len() - 1
        }
    }

    /// Indices of the four control keyframes for `segment`: wrapped when
    /// cyclic, clamped at the ends otherwise.
    pub fn control_indices(&self, segment: usize) -> [usize; 4] {
        let k = self.keyframes.len() as isize;
        let s = segment as isize;
        let pick = |i: isize| -> usize {
            if self.cyclic {
                i.rem_euclid(k) as usize
            } else {
                i.clamp(0, k - 1) as usize
            }
        };
        [pick(s - 1), pick(s), pick(s + 1), pick(s + 2)]
    }
}

/// Uniform Catmull-Rom weights (tension 0.5) for the four control points.
pub fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Blends four bases entry-wise with Catmull-Rom weights and orthonormalizes.
/// The curve runs from `p1` at `t = 0` to `p2` at `t = 1`.
pub fn catmull_rom_basis(p0: &Basis, p1: &Basis, p2: &Basis, p3: &Basis, t: f64) -> Result<Basis> {
    let dims = p1.dims();
    for b in [p0, p2, p3] {
        if b.dims() != dims {
            return Err(TourError::DimensionMismatch {
                expected: dims,
                actual: b.dims(),
            });
        }
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(TourError::InvalidArgument(format!(
            "spline parameter {t} outside [0, 1]"
        )));
    }
    if t == 0.0 {
        return Ok(p1.clone());
    }
    if t == 1.0 {
        return Ok(p2.clone());
    }
    let w = catmull_rom_weights(t);
    let mut m = PlaneMatrix::zeros(dims);
    for (wi, b) in w.iter().zip([p0, p1, p2, p3]) {
        m.add_scaled(*wi, b.rows());
    }
    gram_schmidt(&m)
}

/// One row of the cumulative arc-length table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcSample {
    /// Raw spline parameter: segment index plus local parameter.
    pub param: f64,
    /// Cumulative geodesic length from the start of the path.
    pub length: f64,
}

/// A compiled, immutable tour path.
#[derive(Clone, Debug)]
pub struct TourPath {
    sequence: KeyframeSequence,
    arc_table: Vec<ArcSample>,
    segment_lengths: Vec<f64>,
    /// Cumulative length at the start of each keyframe.
    keyframe_lengths: Vec<f64>,
    /// Segments whose two end keyframes are identical; the path holds still.
    holds: Vec<bool>,
    total_length: f64,
    samples_per_segment: usize,
}

impl TourPath {
    pub fn compile(sequence: KeyframeSequence) -> Result<Self> {
        Self::compile_with(sequence, DEFAULT_SAMPLES_PER_SEGMENT)
    }

    pub fn compile_with(sequence: KeyframeSequence, samples_per_segment: usize) -> Result<Self> {
        if sequence.len() < 2 {
            return Err(TourError::TooFewKeyframes(sequence.len()));
        }
        let segments = sequence.segment_count();
        let steps = samples_per_segment + 1;
        let mut arc_table = Vec::with_capacity(segments * steps + 1);
        let mut segment_lengths = Vec::with_capacity(segments);
        let mut keyframe_lengths = Vec::with_capacity(sequence.len());
        arc_table.push(ArcSample {
            param: 0.0,
            length: 0.0,
        });
        let mut cumulative = 0.0;
        let kfs = sequence.keyframes();
        let holds: Vec<bool> = (0..segments)
            .map(|seg| {
                let [_, i1, i2, _] = sequence.control_indices(seg);
                kfs[i1].basis == kfs[i2].basis
            })
            .collect();
        for (seg, &hold) in holds.iter().enumerate() {
            keyframe_lengths.push(cumulative);
            let [i0, i1, i2, i3] = sequence.control_indices(seg);
            let (p0, p1, p2, p3) = (&kfs[i0].basis, &kfs[i1].basis, &kfs[i2].basis, &kfs[i3].basis);
            let mut prev = p1.clone();
            let mut seg_len = 0.0;
            for j in 1..=steps {
                let local = j as f64 / steps as f64;
                let b = if hold {
                    p1.clone()
                } else {
                    catmull_rom_basis(p0, p1, p2, p3, local)?
                };
                seg_len += geodesic_distance(&prev, &b)?;
                arc_table.push(ArcSample {
                    param: seg as f64 + local,
                    length: cumulative + seg_len,
                });
                prev = b;
            }
            cumulative += seg_len;
            segment_lengths.push(seg_len);
        }
        if !sequence.cyclic() {
            keyframe_lengths.push(cumulative);
        }
        Ok(Self {
            sequence,
            arc_table,
            segment_lengths,
            keyframe_lengths,
            holds,
            total_length: cumulative,
            samples_per_segment,
        })
    }

    pub fn sequence(&self) -> &KeyframeSequence {
        &self.sequence
    }

    pub fn arc_table(&self) -> &[ArcSample] {
        &self.arc_table
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.segment_lengths
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn samples_per_segment(&self) -> usize {
        self.samples_per_segment
    }

    pub fn dims(&self) -> usize {
        self.sequence.dims()
    }

    pub fn cyclic(&self) -> bool {
        self.sequence.cyclic()
    }

    /// Maps any real `t` into `[0, 1]`: wrapped on cyclic paths, clamped otherwise.
    pub fn normalize_t(&self, t: f64) -> f64 {
        if !t.is_finite() {
            return 0.0;
        }
        if self.cyclic() {
            let w = t.rem_euclid(1.0);
            if w >= 1.0 {
                0.0
            } else {
                w
            }
        } else {
            t.clamp(0.0, 1.0)
        }
    }

    /// Raw spline parameter at arc-length fraction `t`.
    pub fn raw_param_at(&self, t: f64) -> f64 {
        let t = self.normalize_t(t);
        if self.total_length <= 0.0 {
            return 0.0;
        }
        let target = t * self.total_length;
        let idx = self.arc_table.partition_point(|e| e.length < target);
        if idx == 0 {
            return self.arc_table[0].param;
        }
        if idx >= self.arc_table.len() {
            return self.arc_table[self.arc_table.len() - 1].param;
        }
        let lo = self.arc_table[idx - 1];
        let hi = self.arc_table[idx];
        let frac = ((target - lo.length) / (hi.length - lo.length)).clamp(0.0, 1.0);
        lo.param + frac * (hi.param - lo.param)
    }

    /// Evaluates the spline at a raw parameter in `[0, segment_count]`.
    pub fn basis_at_raw(&self, param: f64) -> Result<Basis> {
        let segments = self.sequence.segment_count();
        let param = param.clamp(0.0, segments as f64);
        let seg = (param.floor() as usize).min(segments - 1);
        let local = (param - seg as f64).clamp(0.0, 1.0);
        let [i0, i1, i2, i3] = self.sequence.control_indices(seg);
        let kfs = self.sequence.keyframes();
        if self.holds[seg] {
            return Ok(kfs[i1].basis.clone());
        }
        catmull_rom_basis(
            &kfs[i0].basis,
            &kfs[i1].basis,
            &kfs[i2].basis,
            &kfs[i3].basis,
            local,
        )
    }

    /// The basis at arc-length fraction `t`.
    pub fn basis_at(&self, t: f64) -> Result<Basis> {
        if self.total_length <= 0.0 {
            return Ok(self.sequence.keyframes()[0].basis.clone());
        }
        self.basis_at_raw(self.raw_param_at(t))
    }

    /// Arc-length fractions at which each keyframe is reached; the first is 0.
    pub fn keyframe_positions(&self) -> Vec<f64> {
        let n = self.sequence.len();
        if self.total_length <= 0.0 {
            return vec![0.0; n];
        }
        self.keyframe_lengths
            .iter()
            .take(n)
            .map(|l| l / self.total_length)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation2;

    fn plane_at(angle: f64) -> Basis {
        let (s, c) = angle.sin_cos();
        Basis::from_columns(&[1.0, 0.0, 0.0, 0.0], &[0.0, c, s, 0.0]).unwrap()
    }

    fn seq(angles: &[f64], cyclic: bool) -> KeyframeSequence {
        KeyframeSequence::new(
            angles.iter().map(|&a| Keyframe::new(plane_at(a), format!("{a}"))).collect(),
            cyclic,
        )
        .unwrap()
    }

    #[test]
    fn endpoints_are_exact() {
        let b: Vec<Basis> = [0.0, 0.3, 0.5, 0.9].iter().map(|&a| plane_at(a)).collect();
        assert_eq!(catmull_rom_basis(&b[0], &b[1], &b[2], &b[3], 0.0).unwrap(), b[1]);
        assert_eq!(catmull_rom_basis(&b[0], &b[1], &b[2], &b[3], 1.0).unwrap(), b[2]);
    }

    #[test]
    fn constant_spline_is_constant() {
        let b = plane_at(0.4).rotate_in_plane(&Rotation2::from_angle(0.2));
        for t in [0.1, 0.5, 0.77] {
            let out = catmull_rom_basis(&b, &b, &b, &b, t).unwrap();
            for (x, y) in out.rows().iter().zip(b.rows()) {
                assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn control_indices_wrap_or_clamp() {
        let s = seq(&[0.0, 0.2, 0.4, 0.6], true);
        assert_eq!(s.control_indices(0), [3, 0, 1, 2]);
        assert_eq!(s.control_indices(3), [2, 3, 0, 1]);
        let s = s.with_cyclic(false);
        assert_eq!(s.control_indices(0), [0, 0, 1, 2]);
        assert_eq!(s.control_indices(2), [1, 2, 3, 3]);
        assert_eq!(s.segment_count(), 3);
    }

    #[test]
    fn too_few_keyframes() {
        assert!(matches!(
            KeyframeSequence::new(vec![Keyframe::new(plane_at(0.0), "a")], true),
            Err(TourError::TooFewKeyframes(1))
        ));
    }

    #[test]
    fn zero_length_path() {
        let path = TourPath::compile(seq(&[0.3, 0.3, 0.3], true)).unwrap();
        assert_eq!(path.total_length(), 0.0);
        assert_eq!(path.keyframe_positions(), vec![0.0; 3]);
        assert_eq!(path.basis_at(0.6).unwrap(), plane_at(0.3));
    }

    #[test]
    fn table_invariants_hold() {
        let path = TourPath::compile(seq(&[0.0, 0.5, 0.6, 1.1], false)).unwrap();
        let table = path.arc_table();
        assert_eq!(table.len(), 3 * 9 + 1);
        assert!(table.windows(2).all(|w| w[0].param < w[1].param && w[0].length <= w[1].length));
        assert_eq!(table.last().unwrap().length, path.total_length());
        let sum: f64 = path.segment_lengths().iter().sum();
        assert!((sum - path.total_length()).abs() < 1e-9);
        let pos = path.keyframe_positions();
        assert_eq!(pos.len(), 4);
        assert_eq!(pos[0], 0.0);
        assert!((pos[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn t_wraps_on_cyclic_and_clamps_otherwise() {
        let path = TourPath::compile(seq(&[0.0, 0.5, 1.0, 1.5], true)).unwrap();
        assert_eq!(path.normalize_t(1.0), 0.0);
        assert!((path.normalize_t(-0.25) - 0.75).abs() < 1e-15);
        assert_eq!(path.basis_at(1.0).unwrap(), path.basis_at(0.0).unwrap());
        let open = TourPath::compile(seq(&[0.0, 0.5, 1.0], false)).unwrap();
        assert_eq!(open.normalize_t(1.7), 1.0);
        assert_eq!(open.normalize_t(-2.0), 0.0);
    }

    #[test]
    fn zero_length_segment_is_skipped() {
        let path = TourPath::compile(seq(&[0.0, 0.4, 0.4, 0.8], false)).unwrap();
        assert_eq!(path.segment_lengths()[1], 0.0);
        let pos = path.keyframe_positions();
        assert!((pos[1] - pos[2]).abs() < 1e-15);
        let b = path.basis_at(pos[1]).unwrap();
        assert!(geodesic_distance(&b, &plane_at(0.4)).unwrap() < 1e-6);
    }
}
