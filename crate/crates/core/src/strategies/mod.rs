//! Keyframe generators and manual-tour basis edits.

mod grand;
mod manual;
mod pca;
mod sequential;
mod spectral;

pub use grand::{grand_tour_extend, random_basis, GrandStart};
pub use manual::{
    manual_drag, manual_drag_polar, residual_axis, rotate_about_residual, DragOutcome, DragTarget,
    ResidualFrame, RotationAxis,
};
pub use pca::{fit_pca, little_tour, PcaModel};
pub use sequential::{sequential_tour, SequentialTour};
pub use spectral::{fit_spectral, le_tour, SpectralModel, SpectralOptions, DEFAULT_MAX_POINTS};

use crate::tourpath::KeyframeSequence;

/// Non-fatal conditions raised while building a tour.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TourWarning {
    /// Every keyframe spans the same plane; the path has zero length.
    SingleKeyframe,
    /// The neighbor graph had this many components before they were linked.
    DisconnectedGraph { components: usize },
}

impl std::fmt::Display for TourWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TourWarning::SingleKeyframe => write!(f, "all keyframes span the same plane"),
            TourWarning::DisconnectedGraph { components } => write!(
                f,
                "neighbor graph had {components} components; linked nearest pairs"
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StrategyOutput {
    pub sequence: KeyframeSequence,
    pub warnings: Vec<TourWarning>,
}
