use crate::error::{Result, TourError};
use crate::geometry::{dot, gram_schmidt, nearest_orthonormal, norm, Basis, PlaneMatrix, DEGENERACY_EPS};
use crate::linalg::{canonical_sign, normalize, symmetric_eigen_desc};

/// Requested on-screen position for the axis of one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DragTarget {
    pub dim_index: usize,
    pub direction: [f64; 2],
}

impl DragTarget {
    pub fn new(dim_index: usize, direction: [f64; 2]) -> Result<Self> {
        let n = direction[0].hypot(direction[1]);
        if !n.is_finite() || n > 1.0 + 1e-12 {
            return Err(TourError::InvalidArgument(format!(
                "drag direction norm {n} exceeds 1"
            )));
        }
        Ok(Self {
            dim_index,
            direction,
        })
    }

    /// Like [`DragTarget::new`] but scales overlong directions onto the unit circle.
    pub fn clamped(dim_index: usize, direction: [f64; 2]) -> Self {
        let n = direction[0].hypot(direction[1]);
        let direction = if n > 1.0 {
            [direction[0] / n, direction[1] / n]
        } else {
            direction
        };
        Self {
            dim_index,
            direction,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DragOutcome {
    Updated(Basis),
    /// The drag could not be honored; keep the previous basis.
    NoOp,
}

impl DragOutcome {
    pub fn into_basis(self, previous: &Basis) -> Basis {
        match self {
            DragOutcome::Updated(b) => b,
            DragOutcome::NoOp => previous.clone(),
        }
    }
}

fn check_index(basis: &Basis, dim: usize) -> Result<()> {
    if dim >= basis.dims() {
        return Err(TourError::InvalidArgument(format!(
            "dimension {dim} out of range for p = {}",
            basis.dims()
        )));
    }
    Ok(())
}

type RowMap = Box<dyn Fn(&[f64]) -> Vec<f64>>;

fn unit(p: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; p];
    e[i] = 1.0;
    e
}

/// Unit vector orthogonal to `span(basis)` and to `avoid`, built from the
/// coordinate axis with the largest residual.
fn complement_direction(basis: &Basis, avoid: Option<&[f64]>) -> Option<Vec<f64>> {
    let p = basis.dims();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for j in 0..p {
        let mut v = basis.residual_of(&unit(p, j));
        if let Some(a) = avoid {
            let c = dot(&v, a);
            v.iter_mut().zip(a).for_each(|(x, y)| *x -= c * y);
        }
        let n = norm(&v);
        if n > 1e-6 && best.as_ref().is_none_or(|(bn, _)| n > *bn) {
            best = Some((n, v));
        }
    }
    best.map(|(n, v)| v.into_iter().map(|x| x / n).collect())
}

/// Moves the axis of `drag.dim_index` to `drag.direction` by the smallest
/// rotation of ℝᵖ that achieves it.
///
/// The dragged row of the result equals the target exactly (up to rounding)
/// and dragging back to the old row restores the old basis.
pub fn manual_drag(basis: &Basis, drag: DragTarget) -> Result<DragOutcome> {
    check_index(basis, drag.dim_index)?;
    let p = basis.dims();
    let r = drag.dim_index;
    let d = drag.direction;
    let row = basis.row(r);
    let c0 = basis.column(0);
    let c1 = basis.column(1);
    let in_plane = |a: [f64; 2]| -> Vec<f64> { (0..p).map(|i| c0[i] * a[0] + c1[i] * a[1]).collect() };

    let e_r = unit(p, r);
    let mut w: Vec<f64> = e_r.iter().zip(in_plane(row)).map(|(e, b)| e - b).collect();
    let mut w_norm = norm(&w);
    let mut target = d;
    if w_norm <= 1e-12 {
        match complement_direction(basis, None) {
            Some(v) => {
                w = v;
                w_norm = 1.0;
            }
            None => {
                // p = 2: the row must stay on the unit circle
                let n = d[0].hypot(d[1]);
                if n <= DEGENERACY_EPS {
                    return Ok(DragOutcome::NoOp);
                }
                target = [d[0] / n, d[1] / n];
            }
        }
    }
    let s = (1.0 - target[0] * target[0] - target[1] * target[1]).max(0.0).sqrt();
    let mut u = in_plane(target);
    if w_norm > 1e-12 {
        u.iter_mut().zip(&w).for_each(|(a, b)| *a += b * s / w_norm);
    }
    normalize(&mut u);

    let c = dot(&u, &e_r);
    let rotate: RowMap = if 1.0 + c < 1e-12 {
        // half turn: any plane through e_r works
        let mut q = complement_direction(basis, Some(&e_r))
            .or_else(|| {
                let mut v = c0.clone();
                let k = dot(&v, &e_r);
                v.iter_mut().zip(&e_r).for_each(|(x, y)| *x -= k * y);
                (normalize(&mut v) > 1e-6).then_some(v)
            })
            .or_else(|| {
                let mut v = c1.clone();
                let k = dot(&v, &e_r);
                v.iter_mut().zip(&e_r).for_each(|(x, y)| *x -= k * y);
                (normalize(&mut v) > 1e-6).then_some(v)
            })
            .ok_or_else(|| TourError::DegenerateBasis("no rotation plane for drag".into()))?;
        normalize(&mut q);
        let e = e_r.clone();
        Box::new(move |x: &[f64]| {
            let (a, b) = (dot(x, &e), dot(x, &q));
            x.iter()
                .zip(e.iter().zip(&q))
                .map(|(xi, (ei, qi))| xi - 2.0 * a * ei - 2.0 * b * qi)
                .collect()
        })
    } else {
        let sum: Vec<f64> = u.iter().zip(&e_r).map(|(a, b)| a + b).collect();
        let (u, e) = (u.clone(), e_r.clone());
        Box::new(move |x: &[f64]| {
            let k = dot(&sum, x) / (1.0 + c);
            let a = dot(&u, x);
            x.iter()
                .zip(sum.iter().zip(&e))
                .map(|(xi, (si, ei))| xi - k * si + 2.0 * a * ei)
                .collect()
        })
    };
    let f0 = rotate(&c0);
    let f1 = rotate(&c1);
    match gram_schmidt(&PlaneMatrix::from_columns(&f0, &f1)?) {
        Ok(b) => Ok(DragOutcome::Updated(b)),
        Err(TourError::DegenerateBasis(_)) => Ok(DragOutcome::NoOp),
        Err(e) => Err(e),
    }
}

/// Overwrites the dragged row and returns the nearest orthonormal matrix.
///
/// The dragged row only approximates the target; see [`manual_drag`] for an
/// exact alternative.
pub fn manual_drag_polar(basis: &Basis, drag: DragTarget) -> Result<DragOutcome> {
    check_index(basis, drag.dim_index)?;
    let mut m = basis.to_matrix();
    m.rows_mut()[drag.dim_index] = drag.direction;
    match nearest_orthonormal(&m) {
        Ok(b) => Ok(DragOutcome::Updated(b)),
        Err(TourError::DegenerateBasis(_)) => Ok(DragOutcome::NoOp),
        Err(e) => Err(e),
    }
}

/// Top principal direction of the covariance after projecting out the view plane.
pub fn residual_axis(basis: &Basis, cov: &[Vec<f64>]) -> Result<Vec<f64>> {
    let p = basis.dims();
    if cov.len() != p || cov.iter().any(|r| r.len() != p) {
        return Err(TourError::DimensionMismatch {
            expected: p,
            actual: cov.len(),
        });
    }
    if p == 2 {
        return Err(TourError::NoAxis);
    }
    // P C P with P = I − F Fᵀ
    let proj: Vec<Vec<f64>> = (0..p).map(|j| basis.residual_of(&unit(p, j))).collect();
    let pc: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| (0..p).map(|k| proj[i][k] * cov[k][j]).sum()).collect())
        .collect();
    let pcp: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| (0..p).map(|k| pc[i][k] * proj[k][j]).sum()).collect())
        .collect();
    let (values, mut vectors) = symmetric_eigen_desc(&pcp);
    let scale: f64 = (0..p).map(|i| cov[i][i].abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    if !(values[0] > 1e-12 * scale) {
        return Err(TourError::NoAxis);
    }
    let mut v = vectors.swap_remove(0);
    for _ in 0..2 {
        v = basis.residual_of(&v);
    }
    if normalize(&mut v) <= DEGENERACY_EPS {
        return Err(TourError::NoAxis);
    }
    canonical_sign(&mut v);
    Ok(v)
}

/// Screen direction a residual rotation turns about.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    /// Horizontal screen axis: column 1 tilts toward the residual axis.
    #[default]
    X,
    /// Vertical screen axis: column 0 tilts toward the residual axis.
    Y,
}

/// A view plane together with the residual axis it rotates against.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualFrame {
    pub basis: Basis,
    pub axis: Vec<f64>,
}

impl ResidualFrame {
    pub fn new(basis: Basis, axis: Vec<f64>) -> Result<Self> {
        check_axis(&basis, &axis)?;
        Ok(Self { basis, axis })
    }

    /// Rotates the 3D frame `[col0, col1, axis]` by `angle` and carries the
    /// axis along so that rotations compose and invert.
    pub fn rotate(&self, about: RotationAxis, angle: f64) -> Result<ResidualFrame> {
        let (c0, c1) = (self.basis.column(0), self.basis.column(1));
        let moving = match about {
            RotationAxis::X => &c1,
            RotationAxis::Y => &c0,
        };
        let (s, c) = angle.sin_cos();
        let tilted: Vec<f64> = moving.iter().zip(&self.axis).map(|(m, a)| c * m + s * a).collect();
        let axis: Vec<f64> = moving.iter().zip(&self.axis).map(|(m, a)| -s * m + c * a).collect();
        let m = match about {
            RotationAxis::X => PlaneMatrix::from_columns(&c0, &tilted)?,
            RotationAxis::Y => PlaneMatrix::from_columns(&tilted, &c1)?,
        };
        let basis = gram_schmidt(&m)?;
        let mut axis = basis.residual_of(&axis);
        normalize(&mut axis);
        Ok(ResidualFrame { basis, axis })
    }
}

fn check_axis(basis: &Basis, axis: &[f64]) -> Result<()> {
    if axis.len() != basis.dims() {
        return Err(TourError::DimensionMismatch {
            expected: basis.dims(),
            actual: axis.len(),
        });
    }
    let off = basis.cross_vec(axis);
    let worst = off[0].abs().max(off[1].abs());
    if worst > 1e-6 || (norm(axis) - 1.0).abs() > 1e-6 {
        return Err(TourError::AxisNotOrthogonal(worst));
    }
    Ok(())
}

/// Rotates the view about its horizontal axis, tilting column 1 toward `axis`.
pub fn rotate_about_residual(basis: &Basis, axis: &[f64], angle: f64) -> Result<Basis> {
    let frame = ResidualFrame::new(basis.clone(), axis.to_vec())?;
    if angle == 0.0 {
        return Ok(frame.basis);
    }
    Ok(frame.rotate(RotationAxis::X, angle)?.basis)
}
