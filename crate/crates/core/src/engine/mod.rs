//! Interactive core: projection, session state, selection, and exports.

mod output;
mod project;
mod selection;

pub use output::{keyframe_previews, save_snapshot, write_snapshot, Previews, SnapshotFormat, DEFAULT_THUMB_POINTS};
pub use project::{project, project_subset, project_with_chunk, Projection, DEFAULT_CHUNK};
pub use selection::{label_mask, lasso_mask, point_in_polygon, Combine, Selection};

use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, LabelColumn};
use crate::error::{Result, TourError};
use crate::geometry::{geodesic_interpolate, nearest_orthonormal, Basis, PlaneMatrix};
use crate::strategies::{
    grand_tour_extend, manual_drag, residual_axis, DragOutcome, DragTarget, GrandStart, ResidualFrame, RotationAxis,
};
use crate::tourpath::TourPath;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Overview,
    #[default]
    Guided,
    Manual,
    Grand,
}

impl Mode {
    fn follows_path(self) -> bool {
        matches!(self, Mode::Overview | Mode::Guided)
    }
}

/// How points are colored in the front end.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColorEncoding {
    #[default]
    None,
    Categorical { label: String },
    /// A dimension or continuous label mapped through `[min, max]`; missing
    /// bounds are filled from the data.
    Continuous {
        column: String,
        #[serde(default)]
        min: Option<f64>,
        #[serde(default)]
        max: Option<f64>,
    },
    /// Positions under keyframe `reference` feed a 2D colormap.
    Twod { reference: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Playback {
    pub playing: bool,
    /// Arc-length fraction per second.
    pub speed: f64,
}

impl Default for Playback {
    fn default() -> Self {
        Self {
            playing: false,
            speed: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionState {
    pub t: f64,
    pub mode: Mode,
    pub current_basis: Basis,
    pub selection: Selection,
    pub color_encoding: ColorEncoding,
    pub playback: Playback,
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    /// Seconds to blend back onto the path after leaving manual or grand mode.
    pub transition_seconds: f64,
    pub grand_targets: usize,
    pub seed: u64,
    pub thumb_points: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            transition_seconds: 0.5,
            grand_targets: 8,
            seed: 0,
            thumb_points: DEFAULT_THUMB_POINTS,
        }
    }
}

#[derive(Clone, Debug)]
struct Transition {
    from: Basis,
    elapsed: f64,
}

#[derive(Clone, Debug)]
struct GrandWalk {
    path: TourPath,
    t: f64,
}

/// A dataset, its compiled tour, and the state of one interactive session.
#[derive(Debug)]
pub struct Engine {
    ds: Arc<Dataset>,
    path: TourPath,
    state: SessionState,
    options: EngineOptions,
    covariance: OnceLock<Vec<Vec<f64>>>,
    residual: Option<ResidualFrame>,
    transition: Option<Transition>,
    grand: Option<GrandWalk>,
    grand_round: u64,
}

/// Point at fraction `s` between two bases at constant geodesic speed; falls
/// back to a re-orthonormalized linear blend when the frames have opposite
/// orientation.
pub fn blend_bases(from: &Basis, to: &Basis, s: f64) -> Result<Basis> {
    if let Some(b) = geodesic_interpolate(from, to, s)? {
        return Ok(b);
    }
    let mut m = PlaneMatrix::zeros(from.dims());
    m.add_scaled(1.0 - s, from.rows());
    m.add_scaled(s, to.rows());
    match nearest_orthonormal(&m) {
        Ok(b) => Ok(b),
        Err(TourError::DegenerateBasis(_)) => Ok(if s < 0.5 { from.clone() } else { to.clone() }),
        Err(e) => Err(e),
    }
}

impl Engine {
    pub fn new(ds: impl Into<Arc<Dataset>>, path: TourPath, options: EngineOptions) -> Result<Self> {
        let ds = ds.into();
        if ds.n_dims() != path.dims() {
            return Err(TourError::DimensionMismatch {
                expected: path.dims(),
                actual: ds.n_dims(),
            });
        }
        let current_basis = path.basis_at(0.0)?;
        let state = SessionState {
            t: 0.0,
            mode: Mode::Guided,
            current_basis,
            selection: Selection::empty(ds.n_rows()),
            color_encoding: ColorEncoding::None,
            playback: Playback::default(),
        };
        Ok(Self {
            ds,
            path,
            state,
            options,
            covariance: OnceLock::new(),
            residual: None,
            transition: None,
            grand: None,
            grand_round: 0,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.ds
    }

    pub fn shared_dataset(&self) -> Arc<Dataset> {
        Arc::clone(&self.ds)
    }

    pub fn path(&self) -> &TourPath {
        &self.path
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn in_transition(&self) -> bool {
        self.transition.is_some()
    }

    /// Sample covariance of the dataset, computed on first use.
    pub fn covariance(&self) -> &[Vec<f64>] {
        self.covariance.get_or_init(|| self.ds.covariance())
    }

    pub fn project_current(&self) -> Result<Projection> {
        project(&self.ds, &self.state.current_basis)
    }

    /// Moves to path position `t` (wrapped). Leaving manual or grand mode
    /// this way blends back onto the path.
    pub fn scrub(&mut self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(TourError::InvalidArgument(format!("t = {t}")));
        }
        self.state.t = self.path.normalize_t(t);
        if !self.state.mode.follows_path() {
            self.set_mode(Mode::Guided)?;
        }
        if self.transition.is_none() {
            self.state.current_basis = self.path.basis_at(self.state.t)?;
        }
        Ok(())
    }

    /// Advances playback and transitions by `dt` seconds. Returns whether
    /// the current basis changed.
    pub fn tick(&mut self, dt: f64) -> Result<bool> {
        if !(dt >= 0.0) {
            return Err(TourError::InvalidArgument(format!("dt = {dt}")));
        }
        let before = self.state.current_basis.clone();
        let Playback { playing, speed } = self.state.playback;
        match self.state.mode {
            Mode::Guided | Mode::Overview => {
                if playing {
                    self.state.t = self.path.normalize_t(self.state.t + speed * dt);
                }
                let target = self.path.basis_at(self.state.t)?;
                self.state.current_basis = match &mut self.transition {
                    Some(tr) => {
                        tr.elapsed += dt;
                        let s = (tr.elapsed / self.options.transition_seconds.max(1e-9)).min(1.0);
                        let b = blend_bases(&tr.from, &target, s)?;
                        if s >= 1.0 {
                            self.transition = None;
                        }
                        b
                    }
                    None => target,
                };
            }
            Mode::Grand => {
                if playing {
                    self.advance_grand(speed * dt)?;
                }
            }
            Mode::Manual => {}
        }
        Ok(self.state.current_basis != before)
    }

    fn start_grand_walk(&mut self) -> Result<()> {
        let seed = self.options.seed.wrapping_add(self.grand_round);
        self.grand_round += 1;
        let seq = grand_tour_extend(
            GrandStart::Basis(&self.state.current_basis),
            self.options.grand_targets.max(1),
            seed,
        )?
        .with_cyclic(false);
        self.grand = Some(GrandWalk {
            path: TourPath::compile(seq)?,
            t: 0.0,
        });
        Ok(())
    }

    fn advance_grand(&mut self, step: f64) -> Result<()> {
        let walk = match &mut self.grand {
            Some(w) => w,
            None => {
                self.start_grand_walk()?;
                self.grand.as_mut().expect("walk started")
            }
        };
        walk.t += step;
        let done = walk.t >= 1.0;
        self.state.current_basis = walk.path.basis_at(walk.t.min(1.0))?;
        if done {
            // continue the random walk from where this leg ended
            self.start_grand_walk()?;
        }
        Ok(())
    }

    pub fn set_mode(&mut self, mode: Mode) -> Result<()> {
        let previous = self.state.mode;
        self.state.mode = mode;
        match mode {
            Mode::Manual => {
                self.transition = None;
                self.grand = None;
            }
            Mode::Guided | Mode::Overview => {
                self.grand = None;
                if !previous.follows_path() {
                    self.transition = Some(Transition {
                        from: self.state.current_basis.clone(),
                        elapsed: 0.0,
                    });
                }
            }
            Mode::Grand => {
                self.transition = None;
                self.start_grand_walk()?;
                self.state.playback.playing = true;
            }
        }
        Ok(())
    }

    pub fn play(&mut self, speed: f64) -> Result<()> {
        if !speed.is_finite() {
            return Err(TourError::InvalidArgument(format!("speed = {speed}")));
        }
        self.state.playback = Playback { playing: true, speed };
        Ok(())
    }

    pub fn pause(&mut self) {
        self.state.playback.playing = false;
    }

    /// Applies a manual axis drag, entering manual mode.
    pub fn drag(&mut self, target: DragTarget) -> Result<DragOutcome> {
        if self.state.mode != Mode::Manual {
            self.set_mode(Mode::Manual)?;
        }
        let outcome = manual_drag(&self.state.current_basis, target)?;
        if let DragOutcome::Updated(b) = &outcome {
            self.state.current_basis = b.clone();
            self.residual = None;
        }
        Ok(outcome)
    }

    /// Rotates the view against the residual principal axis, entering manual mode.
    pub fn rotate_residual(&mut self, angle: f64, about: RotationAxis) -> Result<()> {
        if self.state.mode != Mode::Manual {
            self.set_mode(Mode::Manual)?;
        }
        let frame = match self.residual.take() {
            Some(f) if f.basis == self.state.current_basis => f,
            _ => {
                let axis = residual_axis(&self.state.current_basis, self.covariance())?;
                ResidualFrame::new(self.state.current_basis.clone(), axis)?
            }
        };
        let next = frame.rotate(about, angle)?;
        self.state.current_basis = next.basis.clone();
        self.residual = Some(next);
        Ok(())
    }

    pub fn lasso(&mut self, polygon: &[[f64; 2]], combine: Combine) -> Result<()> {
        if polygon.len() < 3 {
            return Err(TourError::BadPolygon(polygon.len()));
        }
        let mask = lasso_mask(&self.project_current()?, polygon)?;
        self.state.selection.combine(&mask, combine);
        Ok(())
    }

    pub fn label_select(&mut self, column: &str, values: &[String], combine: Combine) -> Result<()> {
        let mask = label_mask(&self.ds, column, values)?;
        self.state.selection.combine(&mask, combine);
        Ok(())
    }

    pub fn clear_selection(&mut self) {
        self.state.selection = Selection::empty(self.ds.n_rows());
    }

    /// Validates and stores an encoding, filling continuous bounds from the data.
    pub fn set_encoding(&mut self, encoding: ColorEncoding) -> Result<&ColorEncoding> {
        let resolved = match encoding {
            ColorEncoding::Categorical { label } => match self.ds.label(&label) {
                None => return Err(TourError::MissingColumn(label)),
                Some(LabelColumn::Continuous { .. }) => return Err(TourError::NotCategorical(label)),
                Some(_) => ColorEncoding::Categorical { label },
            },
            ColorEncoding::Continuous { column, min, max } => {
                let values: Vec<f32> = if let Some(j) = self.ds.dim_names().iter().position(|n| *n == column) {
                    self.ds.column(j).to_vec()
                } else {
                    match self.ds.label(&column) {
                        Some(LabelColumn::Continuous { values, .. }) => values.clone(),
                        Some(LabelColumn::Categorical { codes, .. }) => codes.iter().map(|&c| c as f32).collect(),
                        None => return Err(TourError::MissingColumn(column)),
                    }
                };
                let lo = values.iter().fold(f64::INFINITY, |a, &v| a.min(v as f64));
                let hi = values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v as f64));
                ColorEncoding::Continuous {
                    column,
                    min: Some(min.unwrap_or(if lo.is_finite() { lo } else { 0.0 })),
                    max: Some(max.unwrap_or(if hi.is_finite() { hi } else { 1.0 })),
                }
            }
            ColorEncoding::Twod { reference } => {
                if reference >= self.path.sequence().len() {
                    return Err(TourError::InvalidArgument(format!(
                        "reference keyframe {reference} out of range"
                    )));
                }
                ColorEncoding::Twod { reference }
            }
            ColorEncoding::None => ColorEncoding::None,
        };
        self.state.color_encoding = resolved;
        Ok(&self.state.color_encoding)
    }

    /// Positions under keyframe `k`, the anchor of a 2D colormap.
    pub fn reference_positions(&self, k: usize) -> Result<Projection> {
        let kf = self
            .path
            .sequence()
            .keyframes()
            .get(k)
            .ok_or_else(|| TourError::InvalidArgument(format!("keyframe {k} out of range")))?;
        project(&self.ds, &kf.basis)
    }

    pub fn previews(&self) -> Result<Previews> {
        keyframe_previews(&self.ds, self.path.sequence(), self.options.thumb_points, self.options.seed)
    }

    pub fn snapshot(&self, path: &Path, format: SnapshotFormat) -> Result<()> {
        let projection = self.project_current()?;
        save_snapshot(path, &self.ds, &projection, &self.state.selection, format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_distance, orthonormality_drift};
    use crate::tourpath::{Keyframe, KeyframeSequence};

    fn engine() -> Engine {
        let rows: Vec<Vec<f64>> = (0..64)
            .map(|i| {
                let t = i as f64 * 0.1;
                vec![t.sin(), t.cos(), (2.0 * t).sin(), (3.0 * t).cos()]
            })
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let kfs = [(0, 1), (1, 2), (2, 3), (3, 0)]
            .iter()
            .map(|&(a, b)| Keyframe::new(Basis::canonical(4, a, b).unwrap(), format!("{a}{b}")))
            .collect();
        let path = TourPath::compile(KeyframeSequence::new(kfs, true).unwrap()).unwrap();
        Engine::new(ds, path, EngineOptions::default()).unwrap()
    }

    #[test]
    fn tick_wraps_exactly() {
        let mut e = engine();
        e.play(0.1).unwrap();
        e.tick(10.0).unwrap();
        assert_eq!(e.state().t, 0.0);
        e.play(0.0).unwrap();
        e.scrub(0.3).unwrap();
        e.tick(1.0).unwrap();
        assert_eq!(e.state().t, 0.3);
    }

    #[test]
    fn manual_round_trip_is_continuous() {
        let mut e = engine();
        e.scrub(0.2).unwrap();
        let guided = e.state().current_basis.clone();
        e.set_mode(Mode::Manual).unwrap();
        assert_eq!(e.state().current_basis, guided);
        e.drag(DragTarget::new(3, [0.3, 0.3]).unwrap()).unwrap();
        e.rotate_residual(0.4, RotationAxis::Y).unwrap();
        let manual = e.state().current_basis.clone();
        e.set_mode(Mode::Guided).unwrap();
        let mut last = manual;
        for _ in 0..40 {
            e.tick(1.0 / 60.0).unwrap();
            let b = e.state().current_basis.clone();
            assert!(orthonormality_drift(b.rows()) < 1e-9);
            assert!(geodesic_distance(&last, &b).unwrap() < 0.5);
            last = b;
        }
        assert!(!e.in_transition());
        assert!(geodesic_distance(&last, &e.path().basis_at(0.2).unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn grand_mode_moves() {
        let mut e = engine();
        e.set_mode(Mode::Grand).unwrap();
        let start = e.state().current_basis.clone();
        for _ in 0..100 {
            e.tick(0.5).unwrap();
        }
        assert!(geodesic_distance(&start, &e.state().current_basis).unwrap() > 0.0);
    }

    #[test]
    fn selection_survives_scrub() {
        let mut e = engine();
        e.lasso(&[[-9.0, -9.0], [9.0, -9.0], [9.0, 9.0], [-9.0, 9.0]], Combine::Replace)
            .unwrap();
        assert_eq!(e.state().selection.count(), 64);
        e.scrub(0.7).unwrap();
        e.tick(0.1).unwrap();
        assert_eq!(e.state().selection.count(), 64);
        assert!(matches!(e.lasso(&[[0.0, 0.0]], Combine::Add), Err(TourError::BadPolygon(1))));
    }

    #[test]
    fn encodings_validate() {
        let mut e = engine();
        let enc = e
            .set_encoding(ColorEncoding::Continuous {
                column: "d0".into(),
                min: None,
                max: None,
            })
            .unwrap()
            .clone();
        assert!(matches!(enc, ColorEncoding::Continuous { min: Some(_), max: Some(_), .. }));
        assert!(matches!(
            e.set_encoding(ColorEncoding::Categorical { label: "nope".into() }),
            Err(TourError::MissingColumn(_))
        ));
        assert!(e.set_encoding(ColorEncoding::Twod { reference: 9 }).is_err());
    }
}
