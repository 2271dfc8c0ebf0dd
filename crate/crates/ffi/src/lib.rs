//! C interface to the tour engine.
//!
//! Objects cross the boundary as opaque handles created by `*_load`/`*_new`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`DtourStatus`]; on failure, [`dtour_last_error`] describes the
//! most recent error on the calling thread.
//!
//! Bases are row-major `p × 2` arrays of `double`. Datasets are column-major:
//! `p` consecutive runs of `n` `float` values.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dtour::dataio::{load_columnar, load_csv, load_tour, CsvOptions, Dataset};
use dtour::engine::project;
use dtour::geometry::{geodesic_distance, Basis};
use dtour::tourpath::{Keyframe, KeyframeSequence, TourPath};
use dtour::TourError;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DtourStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DegenerateBasis = 3,
    DimensionMismatch = 4,
    Io = 5,
    Format = 6,
    OrthonormalityViolation = 7,
    Panic = 8,
    Other = 9,
}

/// A compiled tour path.
pub struct DtourTour {
    path: TourPath,
}

/// An in-memory dataset.
pub struct DtourDataset {
    data: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &TourError) -> DtourStatus {
    match err {
        TourError::InvalidArgument(_) | TourError::TooFewKeyframes(_) => DtourStatus::InvalidArgument,
        TourError::DegenerateBasis(_) => DtourStatus::DegenerateBasis,
        TourError::DimensionMismatch { .. } | TourError::LengthMismatch(_) => DtourStatus::DimensionMismatch,
        TourError::Io(_) | TourError::FileIo { .. } => DtourStatus::Io,
        TourError::Parse { .. }
        | TourError::Schema(_)
        | TourError::BadMagic
        | TourError::TruncatedFile
        | TourError::VersionUnsupported(_)
        | TourError::EmptyDataset => DtourStatus::Format,
        TourError::OrthonormalityViolation { .. } => DtourStatus::OrthonormalityViolation,
        _ => DtourStatus::Other,
    }
}

#[derive(Debug)]
enum Failure {
    Null(&'static str),
    Arg(String),
    Tour(TourError),
}

impl From<TourError> for Failure {
    fn from(e: TourError) -> Self {
        Failure::Tour(e)
    }
}

/// Runs `f`, recording any error or panic for [`dtour_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DtourStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DtourStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("{name} is null"));
            DtourStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            DtourStatus::InvalidArgument
        }
        Ok(Err(Failure::Tour(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DtourStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &'static str) -> Result<*const T, Failure> {
    if p.is_null() {
        Err(Failure::Null(name))
    } else {
        Ok(p)
    }
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    let p = non_null(p, "path")?;
    // SAFETY: non-null and NUL-terminated per the caller's contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::Arg("path is not valid UTF-8".into()))
}

/// # Safety
/// `data` must point to `2p` readable values.
unsafe fn basis_arg(data: *const f64, p: usize) -> Result<Basis, Failure> {
    let data = non_null(data, "basis")?;
    // SAFETY: the caller provides 2p doubles.
    let flat = unsafe { std::slice::from_raw_parts(data, 2 * p) };
    Ok(Basis::from_rows(flat.chunks_exact(2).map(|r| [r[0], r[1]]).collect())?)
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn dtour_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn dtour_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Loads and compiles a JSON tour file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dtour_tour_load(path: *const c_char, out: *mut *mut DtourTour) -> DtourStatus {
    guard(|| {
        non_null(out, "out")?;
        // SAFETY: forwarded caller contract.
        let path = unsafe { path_arg(path)? };
        let (tf, _) = load_tour(path)?;
        let tour = Box::new(DtourTour {
            path: TourPath::compile(tf.to_sequence()?)?,
        });
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = Box::into_raw(tour) };
        Ok(())
    })
}

/// Compiles a tour from `k` keyframes of `p × 2` bases stored back to back.
///
/// # Safety
/// `bases` must hold `k * p * 2` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dtour_tour_compile(
    bases: *const f64,
    p: usize,
    k: usize,
    cyclic: bool,
    out: *mut *mut DtourTour,
) -> DtourStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(bases, "bases")?;
        let keyframes = (0..k)
            .map(|i| {
                // SAFETY: keyframe i lies inside the caller's k·p·2 buffer.
                let b = unsafe { basis_arg(bases.add(i * 2 * p), p)? };
                Ok(Keyframe::new(b, format!("K{}", i + 1)))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let path = TourPath::compile(KeyframeSequence::new(keyframes, cyclic)?)?;
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(DtourTour { path })) };
        Ok(())
    })
}

/// Releases a tour; null is ignored.
///
/// # Safety
/// `tour` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dtour_tour_free(tour: *mut DtourTour) {
    if !tour.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(tour) });
    }
}

/// Dimension `p` of the tour's bases, or 0 for a null handle.
///
/// # Safety
/// `tour` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dtour_tour_dims(tour: *const DtourTour) -> usize {
    // SAFETY: live or null per contract.
    unsafe { tour.as_ref() }.map_or(0, |t| t.path.dims())
}

/// Keyframe count, or 0 for a null handle.
///
/// # Safety
/// `tour` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dtour_tour_keyframe_count(tour: *const DtourTour) -> usize {
    // SAFETY: live or null per contract.
    unsafe { tour.as_ref() }.map_or(0, |t| t.path.sequence().len())
}

/// Total path length, or NaN for a null handle.
///
/// # Safety
/// `tour` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dtour_tour_total_length(tour: *const DtourTour) -> f64 {
    // SAFETY: live or null per contract.
    unsafe { tour.as_ref() }.map_or(f64::NAN, |t| t.path.total_length())
}

/// Writes each keyframe's normalized position into `out[0..len]`.
///
/// # Safety
/// `tour` must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dtour_tour_keyframe_positions(tour: *const DtourTour, out: *mut f64, len: usize) -> DtourStatus {
    guard(|| {
        // SAFETY: live or null per contract.
        let tour = unsafe { tour.as_ref() }.ok_or(Failure::Null("tour"))?;
        non_null(out, "out")?;
        let pos = tour.path.keyframe_positions();
        if len < pos.len() {
            return Err(Failure::Arg(format!("buffer holds {len}, need {}", pos.len())));
        }
        // SAFETY: `out` holds at least pos.len() doubles.
        unsafe { ptr::copy_nonoverlapping(pos.as_ptr(), out, pos.len()) };
        Ok(())
    })
}

/// Evaluates the path at `t` into `out` (row-major `p × 2`).
///
/// # Safety
/// `tour` must be live and `out` must hold `2p` doubles.
#[no_mangle]
pub unsafe extern "C" fn dtour_tour_basis_at(tour: *const DtourTour, t: f64, out: *mut f64) -> DtourStatus {
    guard(|| {
        // SAFETY: live or null per contract.
        let tour = unsafe { tour.as_ref() }.ok_or(Failure::Null("tour"))?;
        non_null(out, "out")?;
        if !t.is_finite() {
            return Err(Failure::Arg(format!("t must be finite, got {t}")));
        }
        let basis = tour.path.basis_at(t)?;
        let flat: Vec<f64> = basis.rows().iter().flatten().copied().collect();
        // SAFETY: `out` holds 2p doubles.
        unsafe { ptr::copy_nonoverlapping(flat.as_ptr(), out, flat.len()) };
        Ok(())
    })
}

/// Copies `p` column-major columns of `n` floats into a dataset.
///
/// # Safety
/// `columns` must hold `n * p` floats and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dtour_dataset_new(
    columns: *const f32,
    n: usize,
    p: usize,
    out: *mut *mut DtourDataset,
) -> DtourStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(columns, "columns")?;
        let len = n
            .checked_mul(p)
            .ok_or_else(|| Failure::Arg(format!("{n} × {p} overflows")))?;
        // SAFETY: caller provides n·p floats.
        let flat = unsafe { std::slice::from_raw_parts(columns, len) };
        let cols = if n == 0 {
            vec![Vec::new(); p]
        } else {
            flat.chunks_exact(n).map(<[f32]>::to_vec).collect()
        };
        let data = Dataset::new(cols, dtour::dataio::default_names(p), Vec::new())?;
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(DtourDataset { data })) };
        Ok(())
    })
}

/// Loads a `.dtc1` columnar file, or CSV for any other extension.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dtour_dataset_load(path: *const c_char, out: *mut *mut DtourDataset) -> DtourStatus {
    guard(|| {
        non_null(out, "out")?;
        // SAFETY: forwarded caller contract.
        let path = unsafe { path_arg(path)? };
        let data = if path.ends_with(".dtc1") || path.ends_with(".dtc") {
            load_columnar(path)?
        } else {
            load_csv(path, &CsvOptions::default())?.0
        };
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(DtourDataset { data })) };
        Ok(())
    })
}

/// Releases a dataset; null is ignored.
///
/// # Safety
/// `ds` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dtour_dataset_free(ds: *mut DtourDataset) {
    if !ds.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Row count, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dtour_dataset_rows(ds: *const DtourDataset) -> usize {
    // SAFETY: live or null per contract.
    unsafe { ds.as_ref() }.map_or(0, |d| d.data.n_rows())
}

/// Projects every row through `basis` into `out_xy` (`n` interleaved x, y pairs).
///
/// # Safety
/// `ds` must be live, `basis` must hold `2p` doubles and `out_xy` `2n` floats.
#[no_mangle]
pub unsafe extern "C" fn dtour_project(ds: *const DtourDataset, basis: *const f64, out_xy: *mut f32) -> DtourStatus {
    guard(|| {
        // SAFETY: live or null per contract.
        let ds = unsafe { ds.as_ref() }.ok_or(Failure::Null("dataset"))?;
        non_null(out_xy, "out_xy")?;
        // SAFETY: caller provides 2p doubles.
        let basis = unsafe { basis_arg(basis, ds.data.n_dims())? };
        let proj = project(&ds.data, &basis)?;
        let flat = proj.interleaved();
        // SAFETY: `out_xy` holds 2n floats.
        unsafe { ptr::copy_nonoverlapping(flat.as_ptr(), out_xy, flat.len()) };
        Ok(())
    })
}

/// Grassmann geodesic distance between the planes of two `p × 2` bases.
///
/// # Safety
/// `a` and `b` must each hold `2p` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dtour_geodesic(a: *const f64, b: *const f64, p: usize, out: *mut f64) -> DtourStatus {
    guard(|| {
        non_null(out, "out")?;
        // SAFETY: caller provides 2p doubles in each.
        let (a, b) = unsafe { (basis_arg(a, p)?, basis_arg(b, p)?) };
        let d = geodesic_distance(&a, &b)?;
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = d };
        Ok(())
    })
}
