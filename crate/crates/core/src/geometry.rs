//! Linear algebra on projection bases.
//!
//! A [`Basis`] is a p×2 column-orthonormal matrix that maps p-dimensional data
//! onto a 2D view plane. Distances between bases are measured on the
//! Grassmannian of 2-planes: two bases spanning the same plane are at distance
//! zero regardless of their in-plane orientation.
//!
//! Matrices are stored row-major as `Vec<[f64; 2]>`, so row `i` of a basis is
//! the 2D direction that data dimension `i` is drawn along.

use crate::error::{Result, TourError};

/// Threshold below which norms and singular values count as zero.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Tolerance used when validating the orthonormality of a [`Basis`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Row-major 2×2 matrix.
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn mat2_transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn mat2_det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// A general p×2 matrix, not necessarily orthonormal.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneMatrix {
    rows: Vec<[f64; 2]>,
}

impl PlaneMatrix {
    pub fn from_rows(rows: Vec<[f64; 2]>) -> Self {
        Self { rows }
    }

    pub fn from_columns(c0: &[f64], c1: &[f64]) -> Result<Self> {
        if c0.len() != c1.len() {
            return Err(TourError::DimensionMismatch {
                expected: c0.len(),
                actual: c1.len(),
            });
        }
        Ok(Self {
            rows: c0.iter().zip(c1).map(|(&x, &y)| [x, y]).collect(),
        })
    }

    pub fn zeros(dims: usize) -> Self {
        Self {
            rows: vec![[0.0; 2]; dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.rows
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// `self += weight * other`, element-wise.
    pub fn add_scaled(&mut self, weight: f64, other: &[[f64; 2]]) {
        for (r, o) in self.rows.iter_mut().zip(other) {
            r[0] += weight * o[0];
            r[1] += weight * o[1];
        }
    }

    /// Right-multiplies by a 2×2 matrix.
    pub fn mul_mat2(&self, m: &Mat2) -> PlaneMatrix {
        PlaneMatrix {
            rows: mul_rows_mat2(&self.rows, m),
        }
    }

    /// Gram matrix `selfᵀ·other`.
    pub fn cross(&self, other: &[[f64; 2]]) -> Mat2 {
        cross_rows(&self.rows, other)
    }
}

fn mul_rows_mat2(rows: &[[f64; 2]], m: &Mat2) -> Vec<[f64; 2]> {
    rows.iter()
        .map(|r| {
            [
                r[0] * m[0][0] + r[1] * m[1][0],
                r[0] * m[0][1] + r[1] * m[1][1],
            ]
        })
        .collect()
}

fn cross_rows(a: &[[f64; 2]], b: &[[f64; 2]]) -> Mat2 {
    let mut m = [[0.0; 2]; 2];
    for (ra, rb) in a.iter().zip(b) {
        m[0][0] += ra[0] * rb[0];
        m[0][1] += ra[0] * rb[1];
        m[1][0] += ra[1] * rb[0];
        m[1][1] += ra[1] * rb[1];
    }
    m
}

/// A p×2 matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    rows: Vec<[f64; 2]>,
}

impl Basis {
    /// Validates the rows against the orthonormality tolerance.
    pub fn from_rows(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(TourError::InvalidArgument(format!(
                "a basis needs at least 2 dimensions, got {}",
                rows.len()
            )));
        }
        let drift = orthonormality_drift(&rows);
        if !(drift <= ORTHONORMAL_TOL) {
            return Err(TourError::DegenerateBasis(format!(
                "columns are not orthonormal (drift {drift:.3e})"
            )));
        }
        Ok(Self { rows })
    }

    pub fn from_columns(c0: &[f64], c1: &[f64]) -> Result<Self> {
        Self::from_rows(PlaneMatrix::from_columns(c0, c1)?.rows)
    }

    /// Skips validation; callers guarantee orthonormality.
    pub(crate) fn from_rows_unchecked(rows: Vec<[f64; 2]>) -> Self {
        debug_assert!(orthonormality_drift(&rows) <= 1e-8);
        Self { rows }
    }

    /// The basis `(e_i, e_j)` in `dims` dimensions.
    pub fn canonical(dims: usize, i: usize, j: usize) -> Result<Self> {
        if i == j || i >= dims || j >= dims {
            return Err(TourError::InvalidArgument(format!(
                "canonical pair ({i}, {j}) invalid for {dims} dimensions"
            )));
        }
        let mut rows = vec![[0.0; 2]; dims];
        rows[i][0] = 1.0;
        rows[j][1] = 1.0;
        Self::from_rows(rows)
    }

    pub fn dims(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        self.rows[i]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn to_matrix(&self) -> PlaneMatrix {
        PlaneMatrix {
            rows: self.rows.clone(),
        }
    }

    pub fn into_rows(self) -> Vec<[f64; 2]> {
        self.rows
    }

    /// Right-multiplies by an orthogonal 2×2 matrix; the span is unchanged.
    pub fn rotate_in_plane(&self, r: &Rotation2) -> Basis {
        Basis {
            rows: mul_rows_mat2(&self.rows, &r.matrix),
        }
    }

    /// `selfᵀ·other`.
    pub fn cross(&self, other: &Basis) -> Mat2 {
        cross_rows(&self.rows, &other.rows)
    }

    /// Row-major `f32` payload of length `2p`.
    pub fn to_f32_rows(&self) -> Vec<f32> {
        self.rows
            .iter()
            .flat_map(|r| [r[0] as f32, r[1] as f32])
            .collect()
    }

    /// Projects a p-vector orthogonally onto the complement of the view plane.
    pub fn residual_of(&self, v: &[f64]) -> Vec<f64> {
        let c = self.cross_vec(v);
        v.iter()
            .zip(&self.rows)
            .map(|(x, r)| x - r[0] * c[0] - r[1] * c[1])
            .collect()
    }

    /// `selfᵀ·v`.
    pub fn cross_vec(&self, v: &[f64]) -> [f64; 2] {
        let mut c = [0.0; 2];
        for (x, r) in v.iter().zip(&self.rows) {
            c[0] += r[0] * x;
            c[1] += r[1] * x;
        }
        c
    }
}

/// Largest absolute entry of `FᵀF − I`.
pub fn orthonormality_drift(rows: &[[f64; 2]]) -> f64 {
    let g = cross_rows(rows, rows);
    (g[0][0] - 1.0)
        .abs()
        .max((g[1][1] - 1.0).abs())
        .max(g[0][1].abs())
        .max(g[1][0].abs())
}

/// An orthogonal 2×2 matrix with its orientation recorded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation2 {
    pub matrix: Mat2,
    /// `true` when the determinant is −1.
    pub reflection: bool,
}

impl Rotation2 {
    pub fn identity() -> Self {
        Self {
            matrix: IDENTITY2,
            reflection: false,
        }
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            matrix: [[c, -s], [s, c]],
            reflection: false,
        }
    }

    pub fn from_matrix(matrix: Mat2) -> Self {
        Self {
            matrix,
            reflection: mat2_det(&matrix) < 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: mat2_transpose(&self.matrix),
            reflection: self.reflection,
        }
    }

    pub fn compose(&self, other: &Rotation2) -> Self {
        Self::from_matrix(mat2_mul(&self.matrix, &other.matrix))
    }

    pub fn determinant(&self) -> f64 {
        mat2_det(&self.matrix)
    }
}

/// Result of [`svd_2x2`]: `m = u · diag(singular_values) · vᵀ`.
#[derive(Clone, Copy, Debug)]
pub struct Svd2 {
    pub singular_values: [f64; 2],
    pub u: Rotation2,
    pub v: Rotation2,
}

impl Svd2 {
    pub fn reconstruct(&self) -> Mat2 {
        let s = [
            [self.singular_values[0], 0.0],
            [0.0, self.singular_values[1]],
        ];
        mat2_mul(&mat2_mul(&self.u.matrix, &s), &mat2_transpose(&self.v.matrix))
    }
}

/// Closed-form SVD of a real 2×2 matrix.
///
/// Splits `m` into a similarity part and an anti-similarity part; their
/// magnitudes give the singular values and their phases the two rotations.
pub fn svd_2x2(m: &Mat2) -> Svd2 {
    let [[a, b], [c, d]] = *m;
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let theta = 0.5 * (a2 - a1);
    let phi = 0.5 * (a2 + a1);

    // m = rot(phi) · diag(q + r, q - r) · rot(theta)
    let mut u = Rotation2::from_angle(phi);
    let v = Rotation2::from_angle(-theta);
    let s0 = q + r;
    let mut s1 = q - r;
    if s1 < 0.0 {
        s1 = -s1;
        u.matrix[0][1] = -u.matrix[0][1];
        u.matrix[1][1] = -u.matrix[1][1];
        u.reflection = true;
    }
    Svd2 {
        singular_values: [s0, s1],
        u,
        v,
    }
}

/// Orthonormalizes the two columns of `m`, keeping the direction of the first.
pub fn gram_schmidt(m: &PlaneMatrix) -> Result<Basis> {
    let (q, _) = thin_qr(&m.rows)?;
    Ok(Basis::from_rows_unchecked(q))
}

/// Returns `(Q, R)` with `m = Q·R`, `R` upper triangular with positive diagonal.
fn thin_qr(rows: &[[f64; 2]]) -> Result<(Vec<[f64; 2]>, Mat2)> {
    if rows.len() < 2 {
        return Err(TourError::InvalidArgument(format!(
            "need at least 2 dimensions, got {}",
            rows.len()
        )));
    }
    let n0 = rows.iter().map(|r| r[0] * r[0]).sum::<f64>().sqrt();
    if !(n0 > DEGENERACY_EPS) {
        return Err(TourError::DegenerateBasis(format!(
            "first column norm {n0:.3e} below threshold"
        )));
    }
    let n1_in = rows.iter().map(|r| r[1] * r[1]).sum::<f64>().sqrt();
    if !(n1_in > DEGENERACY_EPS) {
        return Err(TourError::DegenerateBasis(format!(
            "second column norm {n1_in:.3e} below threshold"
        )));
    }
    let q0: Vec<f64> = rows.iter().map(|r| r[0] / n0).collect();
    let mut c1: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let mut r01 = 0.0;
    // two passes keep the result orthogonal to working precision
    for _ in 0..2 {
        let proj = dot(&q0, &c1);
        r01 += proj;
        for (x, q) in c1.iter_mut().zip(&q0) {
            *x -= proj * q;
        }
    }
    let n1 = norm(&c1);
    if !(n1 > DEGENERACY_EPS && n1 / n1_in > DEGENERACY_EPS) {
        return Err(TourError::DegenerateBasis(format!(
            "columns are parallel (residual norm {n1:.3e})"
        )));
    }
    let q = q0
        .iter()
        .zip(&c1)
        .map(|(&a, &b)| [a, b / n1])
        .collect();
    Ok((q, [[n0, r01], [0.0, n1]]))
}

/// Principal angles between two 2-planes, ascending, in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipalAngles {
    pub tau0: f64,
    pub tau1: f64,
}

impl PrincipalAngles {
    pub fn geodesic(&self) -> f64 {
        self.tau0.hypot(self.tau1)
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(TourError::DimensionMismatch {
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

fn angle_from_cosine(sigma: f64) -> f64 {
    if (sigma - 1.0).abs() < DEGENERACY_EPS {
        0.0
    } else {
        sigma.clamp(-1.0, 1.0).acos()
    }
}

pub fn principal_angles(a: &Basis, b: &Basis) -> Result<PrincipalAngles> {
    check_dims(a.dims(), b.dims())?;
    let svd = svd_2x2(&a.cross(b));
    Ok(PrincipalAngles {
        tau0: angle_from_cosine(svd.singular_values[0]),
        tau1: angle_from_cosine(svd.singular_values[1]),
    })
}

/// Grassmannian distance `sqrt(τ0² + τ1²)` between the spans of `a` and `b`.
pub fn geodesic_distance(a: &Basis, b: &Basis) -> Result<f64> {
    Ok(principal_angles(a, b)?.geodesic())
}

/// Closest orthonormal matrix to `m` in the Frobenius norm (its polar factor).
pub fn nearest_orthonormal(m: &PlaneMatrix) -> Result<Basis> {
    let (q, r) = thin_qr(&m.rows)?;
    let svd = svd_2x2(&r);
    let [s0, s1] = svd.singular_values;
    if !(s1 > DEGENERACY_EPS * s0.max(1.0)) {
        return Err(TourError::DegenerateBasis(format!(
            "matrix has numerical rank < 2 (singular values {s0:.3e}, {s1:.3e})"
        )));
    }
    // polar(Q·R) = Q·polar(R) = Q·U·Vᵀ
    let w = mat2_mul(&svd.u.matrix, &mat2_transpose(&svd.v.matrix));
    Ok(Basis::from_rows_unchecked(mul_rows_mat2(&q, &w)))
}

/// Transform class permitted when aligning point sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AlignmentClass {
    /// Rotations and reflections.
    #[default]
    Orthogonal,
    /// Proper rotations only.
    RotationOnly,
}

#[derive(Clone, Debug)]
pub struct ProcrustesAlignment {
    pub rotation: Rotation2,
    pub aligned: Vec<[f64; 2]>,
    /// Frobenius residual `‖target − aligned‖` after alignment.
    pub residual: f64,
}

pub fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len().max(1) as f64;
    let mut c = [0.0; 2];
    for p in points {
        c[0] += p[0];
        c[1] += p[1];
    }
    [c[0] / n, c[1] / n]
}

/// Orthogonal Procrustes: rotates (and possibly reflects) `source` onto `target`.
pub fn procrustes_align(source: &[[f64; 2]], target: &[[f64; 2]]) -> Result<ProcrustesAlignment> {
    procrustes_align_with(source, target, AlignmentClass::Orthogonal)
}

pub fn procrustes_align_with(
    source: &[[f64; 2]],
    target: &[[f64; 2]],
    class: AlignmentClass,
) -> Result<ProcrustesAlignment> {
    if source.len() != target.len() {
        return Err(TourError::LengthMismatch(format!(
            "source has {} points, target has {}",
            source.len(),
            target.len()
        )));
    }
    if source.len() < 2 {
        return Err(TourError::DegeneratePointSet(format!(
            "need at least 2 points, got {}",
            source.len()
        )));
    }
    let cs = centroid(source);
    let ct = centroid(target);
    let xs: Vec<[f64; 2]> = source.iter().map(|p| [p[0] - cs[0], p[1] - cs[1]]).collect();
    let variance: f64 = xs.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum();
    if !(variance > DEGENERACY_EPS) {
        return Err(TourError::DegeneratePointSet(
            "source has zero total variance".into(),
        ));
    }
    let mut m = [[0.0; 2]; 2];
    for (x, t) in xs.iter().zip(target) {
        let y = [t[0] - ct[0], t[1] - ct[1]];
        m[0][0] += x[0] * y[0];
        m[0][1] += x[0] * y[1];
        m[1][0] += x[1] * y[0];
        m[1][1] += x[1] * y[1];
    }
    let svd = svd_2x2(&m);
    let mut u = svd.u.matrix;
    let vt = mat2_transpose(&svd.v.matrix);
    if class == AlignmentClass::RotationOnly && mat2_det(&mat2_mul(&u, &vt)) < 0.0 {
        u[0][1] = -u[0][1];
        u[1][1] = -u[1][1];
    }
    let rotation = Rotation2::from_matrix(mat2_mul(&u, &vt));
    let r = rotation.matrix;
    let mut residual = 0.0;
    let aligned = xs
        .iter()
        .zip(target)
        .map(|(x, t)| {
            let p = [
                x[0] * r[0][0] + x[1] * r[1][0] + ct[0],
                x[0] * r[0][1] + x[1] * r[1][1] + ct[1],
            ];
            residual += (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2);
            p
        })
        .collect();
    Ok(ProcrustesAlignment {
        rotation,
        aligned,
        residual: residual.sqrt(),
    })
}

/// Point on the Grassmann geodesic from `span(a)` to `span(b)` at fraction `s`.
///
/// The frame is carried along the principal vectors and, when `a` and `b`
/// share orientation, blended in-plane so that `s = 0` yields `a` and
/// `s = 1` yields `b` exactly. Returns `None` when the two frames have
/// opposite orientation and no in-plane rotation connects them.
pub fn geodesic_interpolate(a: &Basis, b: &Basis, s: f64) -> Result<Option<Basis>> {
    check_dims(a.dims(), b.dims())?;
    if s <= 0.0 {
        return Ok(Some(a.clone()));
    }
    if s >= 1.0 {
        return Ok(Some(b.clone()));
    }
    let svd = svd_2x2(&a.cross(b));
    let residual = mat2_mul(&svd.u.matrix, &mat2_transpose(&svd.v.matrix));
    if mat2_det(&residual) < 0.0 {
        return Ok(None);
    }
    let pa = mul_rows_mat2(&a.rows, &svd.u.matrix);
    let pb = mul_rows_mat2(&b.rows, &svd.v.matrix);
    let mut out = vec![[0.0; 2]; a.dims()];
    for k in 0..2 {
        let sigma = svd.singular_values[k];
        let tau = angle_from_cosine(sigma);
        let mut w: Vec<f64> = pb.iter().zip(&pa).map(|(y, x)| y[k] - sigma * x[k]).collect();
        let wn = norm(&w);
        if tau == 0.0 || wn <= DEGENERACY_EPS {
            w.iter_mut().for_each(|x| *x = 0.0);
        } else {
            w.iter_mut().for_each(|x| *x /= wn);
        }
        let (st, ct) = (s * tau).sin_cos();
        for (o, (x, wi)) in out.iter_mut().zip(pa.iter().zip(&w)) {
            o[k] = ct * x[k] + st * wi;
        }
    }
    // residual = U·Vᵀ is a rotation; apply Uᵀ·rot(s·angle) so the frame
    // starts at a and ends at b
    let angle = residual[1][0].atan2(residual[0][0]);
    let w = mat2_mul(
        &mat2_transpose(&svd.u.matrix),
        &Rotation2::from_angle(s * angle).matrix,
    );
    let frame = PlaneMatrix::from_rows(mul_rows_mat2(&out, &w));
    Ok(Some(gram_schmidt(&frame)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn basis(c0: &[f64], c1: &[f64]) -> Basis {
        Basis::from_columns(c0, c1).unwrap()
    }

    #[test]
    fn gram_schmidt_textbook_case() {
        let m = PlaneMatrix::from_columns(&[1.0, 0.0, 0.0], &[1.0, 1.0, 0.0]).unwrap();
        let b = gram_schmidt(&m).unwrap();
        assert_eq!(b.column(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(b.column(1), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn gram_schmidt_rejects_parallel_and_zero_columns() {
        let m = PlaneMatrix::from_columns(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!(matches!(gram_schmidt(&m), Err(TourError::DegenerateBasis(_))));
        let m = PlaneMatrix::from_columns(&[0.0, 0.0, 0.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!(matches!(gram_schmidt(&m), Err(TourError::DegenerateBasis(_))));
    }

    #[test]
    fn svd_of_simple_matrices() {
        let s = svd_2x2(&IDENTITY2);
        assert_eq!(s.singular_values, [1.0, 1.0]);
        let s = svd_2x2(&[[2.0, 0.0], [0.0, 0.5]]);
        assert!((s.singular_values[0] - 2.0).abs() < 1e-15);
        assert!((s.singular_values[1] - 0.5).abs() < 1e-15);
        let s = svd_2x2(&[[0.5, 0.0], [0.0, -2.0]]);
        assert!((s.singular_values[0] - 2.0).abs() < 1e-15);
        assert!((s.singular_values[1] - 0.5).abs() < 1e-15);
        let r = s.reconstruct();
        assert!((r[1][1] + 2.0).abs() < 1e-15 && (r[0][0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn principal_angles_of_orthogonal_planes() {
        let a = Basis::canonical(4, 0, 1).unwrap();
        let b = Basis::canonical(4, 2, 3).unwrap();
        let pa = principal_angles(&a, &b).unwrap();
        assert!((pa.tau0 - FRAC_PI_2).abs() < 1e-15);
        assert!((pa.tau1 - FRAC_PI_2).abs() < 1e-15);
        let d = geodesic_distance(&a, &b).unwrap();
        assert!((d - PI / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn same_span_is_distance_zero() {
        let a = basis(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        let b = a.rotate_in_plane(&Rotation2::from_angle(0.7));
        assert_eq!(geodesic_distance(&a, &b).unwrap(), 0.0);
        assert_eq!(geodesic_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Basis::canonical(3, 0, 1).unwrap();
        let b = Basis::canonical(4, 0, 1).unwrap();
        assert!(matches!(
            geodesic_distance(&a, &b),
            Err(TourError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nearest_orthonormal_fixed_point_and_scaling() {
        let f = basis(&[0.6, 0.8, 0.0], &[0.0, 0.0, 1.0]);
        let same = nearest_orthonormal(&f.to_matrix()).unwrap();
        for (x, y) in same.rows().iter().zip(f.rows()) {
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
        let mut scaled = f.to_matrix();
        scaled.rows_mut().iter_mut().for_each(|r| {
            r[0] *= 2.0;
            r[1] *= 2.0;
        });
        let back = nearest_orthonormal(&scaled).unwrap();
        for (x, y) in back.rows().iter().zip(f.rows()) {
            assert!((x[0] - y[0]).abs() < 1e-10 && (x[1] - y[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn nearest_orthonormal_rejects_rank_one() {
        let m = PlaneMatrix::from_columns(&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0]).unwrap();
        assert!(nearest_orthonormal(&m).is_err());
    }

    #[test]
    fn procrustes_identity_and_reflection() {
        let pts = vec![[0.0, 0.0], [1.0, 0.2], [0.3, 2.0], [-1.0, 0.5]];
        let al = procrustes_align(&pts, &pts).unwrap();
        assert!(!al.rotation.reflection);
        for (a, b) in al.aligned.iter().zip(&pts) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        let mirrored: Vec<[f64; 2]> = pts.iter().map(|p| [-p[0], p[1]]).collect();
        let al = procrustes_align(&pts, &mirrored).unwrap();
        assert!(al.rotation.reflection);
        assert!(al.rotation.determinant() < 0.0);
        assert!(al.residual < 1e-12);
        let rot = procrustes_align_with(&pts, &mirrored, AlignmentClass::RotationOnly).unwrap();
        assert!(!rot.rotation.reflection);
        assert!(rot.residual > al.residual);
    }

    #[test]
    fn procrustes_rejects_collapsed_source() {
        let pts = vec![[1.0, 1.0]; 5];
        let tgt = vec![[0.0, 1.0], [1.0, 0.0], [2.0, 0.0], [0.0, 3.0], [1.0, 1.0]];
        assert!(matches!(
            procrustes_align(&pts, &tgt),
            Err(TourError::DegeneratePointSet(_))
        ));
    }

    #[test]
    fn geodesic_interpolation_hits_endpoints() {
        let a = Basis::canonical(4, 0, 1).unwrap();
        let b = basis(
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, (0.4f64).cos(), 0.0, (0.4f64).sin()],
        );
        let mid = geodesic_interpolate(&a, &b, 0.5).unwrap().unwrap();
        let da = geodesic_distance(&a, &mid).unwrap();
        let db = geodesic_distance(&mid, &b).unwrap();
        let total = geodesic_distance(&a, &b).unwrap();
        assert!((da - db).abs() < 1e-9, "{da} {db}");
        assert!((da + db - total).abs() < 1e-9);
        let near_end = geodesic_interpolate(&a, &b, 1.0 - 1e-9).unwrap().unwrap();
        for (x, y) in near_end.rows().iter().zip(b.rows()) {
            assert!((x[0] - y[0]).abs() < 1e-6 && (x[1] - y[1]).abs() < 1e-6);
        }
    }
}
