use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TourError};
use crate::geometry::{gram_schmidt, Basis, PlaneMatrix};
use crate::tourpath::{top_loadings, Keyframe, KeyframeSequence};

/// Where a grand tour starts.
#[derive(Clone, Copy, Debug)]
pub enum GrandStart<'a> {
    Sequence(&'a KeyframeSequence),
    Basis(&'a Basis),
    /// No starting frame; every keyframe is random.
    Dims(usize),
}

/// Uniform random plane: Gram-Schmidt of a p×2 standard-normal matrix.
pub fn random_basis<R: Rng + ?Sized>(rng: &mut R, p: usize) -> Result<Basis> {
    if p < 2 {
        return Err(TourError::InvalidArgument(format!("need p ≥ 2, got {p}")));
    }
    loop {
        let rows = (0..p)
            .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        match gram_schmidt(&PlaneMatrix::from_rows(rows)) {
            Ok(b) => return Ok(b),
            Err(TourError::DegenerateBasis(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Appends `n_targets` random keyframes to `start` and returns a cyclic sequence.
///
/// The same seed always yields the same targets.
pub fn grand_tour_extend(start: GrandStart<'_>, n_targets: usize, seed: u64) -> Result<KeyframeSequence> {
    let (mut keyframes, p) = match start {
        GrandStart::Sequence(seq) => (seq.keyframes().to_vec(), seq.dims()),
        GrandStart::Basis(b) => (vec![Keyframe::new(b.clone(), "start")], b.dims()),
        GrandStart::Dims(p) => (Vec::new(), p),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_targets {
        let basis = random_basis(&mut rng, p)?;
        let loadings = top_loadings(&basis, 5);
        keyframes.push(Keyframe::new(basis, format!("G{}", i + 1)).with_loadings(loadings));
    }
    KeyframeSequence::new(keyframes, true)
}
