use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{project_subset, Projection, Selection};
use crate::dataio::{write_columnar, Dataset, LabelColumn};
use crate::error::{Result, TourError};
use crate::tourpath::KeyframeSequence;

pub const DEFAULT_THUMB_POINTS: usize = 5000;

/// Keyframe thumbnails computed on one shared row subsample.
#[derive(Clone, Debug, PartialEq)]
pub struct Previews {
    /// Dataset rows used, ascending.
    pub rows: Vec<usize>,
    pub projections: Vec<Projection>,
}

/// Projects a seeded subsample of `min(N, thumb_points)` rows under every keyframe.
pub fn keyframe_previews(ds: &Dataset, seq: &KeyframeSequence, thumb_points: usize, seed: u64) -> Result<Previews> {
    let n = ds.n_rows();
    let rows: Vec<usize> = if n <= thumb_points {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, n, thumb_points).into_vec();
        idx.sort_unstable();
        idx
    };
    let projections = seq
        .keyframes()
        .iter()
        .map(|kf| project_subset(ds, &kf.basis, &rows))
        .collect::<Result<Vec<_>>>()?;
    Ok(Previews { rows, projections })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotFormat {
    Csv,
    Dtc1,
}

impl SnapshotFormat {
    /// `.dtc`/`.dtc1` paths are columnar, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("dtc" | "dtc1") => SnapshotFormat::Dtc1,
            _ => SnapshotFormat::Csv,
        }
    }
}

impl FromStr for SnapshotFormat {
    type Err = TourError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(SnapshotFormat::Csv),
            "dtc1" | "dtc" => Ok(SnapshotFormat::Dtc1),
            other => Err(TourError::InvalidArgument(format!("unknown snapshot format '{other}'"))),
        }
    }
}

/// Writes projected positions, the selection flag, and the dataset's label columns.
///
/// CSV header is `x,y,selected[,<labels>]`. The columnar form stores `x`, `y`
/// as dimensions and `selected` as a categorical label ahead of the others.
pub fn write_snapshot<W: Write>(
    mut out: W,
    ds: &Dataset,
    projection: &Projection,
    selection: &Selection,
    format: SnapshotFormat,
) -> Result<()> {
    if ds.n_rows() == 0 {
        return Err(TourError::EmptyDataset);
    }
    if projection.len() != ds.n_rows() || selection.len() != ds.n_rows() {
        return Err(TourError::LengthMismatch(format!(
            "projection has {} rows, selection {}, dataset {}",
            projection.len(),
            selection.len(),
            ds.n_rows()
        )));
    }
    match format {
        SnapshotFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec!["x".to_string(), "y".to_string(), "selected".to_string()];
            header.extend(ds.labels().iter().map(|l| l.name().to_string()));
            w.write_record(&header).map_err(csv_error)?;
            for (i, p) in projection.xy.iter().enumerate() {
                let mut rec = vec![p[0].to_string(), p[1].to_string(), u8::from(selection.get(i)).to_string()];
                rec.extend(ds.labels().iter().map(|l| l.display(i)));
                w.write_record(&rec).map_err(csv_error)?;
            }
            w.flush()?;
            Ok(())
        }
        SnapshotFormat::Dtc1 => {
            let columns = vec![
                projection.xy.iter().map(|p| p[0]).collect(),
                projection.xy.iter().map(|p| p[1]).collect(),
            ];
            let mut labels = vec![LabelColumn::Categorical {
                name: "selected".into(),
                codes: (0..ds.n_rows()).map(|i| u16::from(selection.get(i))).collect(),
                categories: vec!["0".into(), "1".into()],
            }];
            labels.extend(ds.labels().iter().filter(|l| l.name() != "selected").cloned());
            let snap = Dataset::new(columns, vec!["x".into(), "y".into()], labels)?;
            write_columnar(&snap, &mut out)
        }
    }
}

pub fn save_snapshot(
    path: &Path,
    ds: &Dataset,
    projection: &Projection,
    selection: &Selection,
    format: SnapshotFormat,
) -> Result<()> {
    let f = File::create(path).map_err(|e| TourError::file(path, e))?;
    let mut w = BufWriter::new(f);
    write_snapshot(&mut w, ds, projection, selection, format)?;
    w.flush().map_err(|e| TourError::file(path, e))
}

fn csv_error(e: csv::Error) -> TourError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TourError::Io(io),
        other => TourError::InvalidArgument(format!("csv write failed: {other:?}")),
    }
}
