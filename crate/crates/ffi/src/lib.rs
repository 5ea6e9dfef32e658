//! C ABI over the phonoprobe toolkit.
//!
//! Every function returns a [`PpStatus`]. On failure the message is kept in a
//! thread-local slot readable with [`pp_last_error_message`]. Objects are
//! opaque handles created by `*_open`/`*_load` and released by `*_free`.
//! Matrices cross the boundary as row-major `double` buffers owned by the
//! caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ndarray::ArrayView2;
use phonoprobe::dsp::{mfcc, MfccConfig, Waveform};
use phonoprobe::encoder::{encode_features, load_checkpoint, EncoderConfig, Parameters};
use phonoprobe::pipeline::{read_archive, Archive};
use phonoprobe::probe::{adjusted_rand_index, pearson_r};
use phonoprobe::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Format = 5,
    Checksum = 6,
    Numeric = 7,
    BufferTooSmall = 8,
    NotFound = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> PpStatus {
    match e {
        Error::Config(_) => PpStatus::Config,
        Error::Io { .. } => PpStatus::Io,
        Error::Format { .. } | Error::Json(_) | Error::Wav(_) | Error::UnsupportedAudio(_) => {
            PpStatus::Format
        }
        Error::Checksum(_) => PpStatus::Checksum,
        Error::NonFinite(_) | Error::Degenerate(_) | Error::Diverged { .. } => PpStatus::Numeric,
        _ => PpStatus::InvalidArgument,
    }
}

struct Failure(PpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: PpStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PpStatus::Ok
        }
        Ok(Err(Failure(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            PpStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        fail(PpStatus::NullPointer, format!("{what} is null"))
    } else {
        Ok(())
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    non_null(p, "path")?;
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(PpStatus::InvalidArgument, "path is not valid UTF-8"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(PpStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    non_null(p, what)?;
    *p = v;
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, capacity: usize) -> Result<(), Failure> {
    if capacity < src.len() {
        return fail(
            PpStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", src.len()),
        );
    }
    if !src.is_empty() {
        non_null(out, "output buffer")?;
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `capacity`. Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pp_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Number of MFCC frames the default front end yields for `n_samples`.
///
/// # Safety
/// `out_frames` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pp_mfcc_frame_count(
    n_samples: usize,
    sample_rate: u32,
    out_frames: *mut usize,
) -> PpStatus {
    guard(|| {
        let cfg = MfccConfig::default();
        cfg.validate(sample_rate)?;
        let n = phonoprobe::dsp::frame_count(
            n_samples,
            cfg.window_samples(sample_rate),
            cfg.hop_samples(sample_rate),
        )?;
        write_out(out_frames, n, "out_frames")
    })
}

/// Default MFCC features (13 coefficients per frame) of a mono signal,
/// written row-major into `out`.
///
/// # Safety
/// `samples` must hold `n_samples` values and `out` `out_capacity` values.
#[no_mangle]
pub unsafe extern "C" fn pp_mfcc(
    samples: *const f64,
    n_samples: usize,
    sample_rate: u32,
    out: *mut f64,
    out_capacity: usize,
    out_frames: *mut usize,
    out_dim: *mut usize,
) -> PpStatus {
    guard(|| {
        let x = slice_arg(samples, n_samples, "samples")?;
        let wave = Waveform::new(x.to_vec(), sample_rate)?;
        let f = mfcc(&wave, &MfccConfig::default())?;
        let data = f.data.as_standard_layout();
        copy_out(data.as_slice().expect("standard layout"), out, out_capacity)?;
        write_out(out_frames, f.frames(), "out_frames")?;
        write_out(out_dim, f.dim(), "out_dim")
    })
}

/// Adjusted Rand index of two labelings of `n` items.
///
/// # Safety
/// `a` and `b` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn pp_adjusted_rand_index(
    a: *const usize,
    b: *const usize,
    n: usize,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        let a = slice_arg(a, n, "a")?;
        let b = slice_arg(b, n, "b")?;
        write_out(out, adjusted_rand_index(a, b)?, "out")
    })
}

/// Sample Pearson correlation of two length-`n` vectors.
///
/// # Safety
/// `x` and `y` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn pp_pearson_r(
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        let x = slice_arg(x, n, "x")?;
        let y = slice_arg(y, n, "y")?;
        write_out(out, pearson_r(x, y)?, "out")
    })
}

/// A trained utterance encoder.
pub struct PpEncoder {
    config: EncoderConfig,
    params: Parameters,
}

/// Loads an encoder checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pp_encoder_load(path: *const c_char, out: *mut *mut PpEncoder) -> PpStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let (header, params) = load_checkpoint(&path)?;
        let enc = Box::new(PpEncoder {
            config: header.config,
            params,
        });
        *out = Box::into_raw(enc);
        Ok(())
    })
}

/// Releases an encoder. Null is ignored.
///
/// # Safety
/// `enc` must come from [`pp_encoder_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pp_encoder_free(enc: *mut PpEncoder) {
    if !enc.is_null() {
        drop(Box::from_raw(enc));
    }
}

/// Input width, embedding width and number of recurrent layers.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pp_encoder_dims(
    enc: *const PpEncoder,
    input_dim: *mut usize,
    joint_dim: *mut usize,
    rhn_layers: *mut usize,
) -> PpStatus {
    guard(|| {
        non_null(enc, "encoder")?;
        let c = &(*enc).config;
        write_out(input_dim, c.input_dim, "input_dim")?;
        write_out(joint_dim, c.joint_dim, "joint_dim")?;
        write_out(rhn_layers, c.rhn_layers, "rhn_layers")
    })
}

/// Encodes a `frames x dim` row-major feature matrix into a unit-norm
/// embedding of `joint_dim` values.
///
/// # Safety
/// `features` must hold `frames * dim` values and `out` `out_capacity`.
#[no_mangle]
pub unsafe extern "C" fn pp_encoder_embed(
    enc: *const PpEncoder,
    features: *const f64,
    frames: usize,
    dim: usize,
    out: *mut f64,
    out_capacity: usize,
) -> PpStatus {
    guard(|| {
        non_null(enc, "encoder")?;
        let enc = &*enc;
        let len = frames
            .checked_mul(dim)
            .ok_or_else(|| Failure(PpStatus::InvalidArgument, "shape overflows".into()))?;
        let x = slice_arg(features, len, "features")?;
        let view = ArrayView2::from_shape((frames, dim), x).expect("length checked");
        let (emb, _) = encode_features(view, &enc.params, &enc.config)?;
        copy_out(emb.as_slice().expect("contiguous"), out, out_capacity)
    })
}

/// A representation archive loaded into memory.
pub struct PpArchive {
    inner: Archive,
}

/// Opens an archive directory, verifying every checksum.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pp_archive_open(path: *const c_char, out: *mut *mut PpArchive) -> PpStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let inner = read_archive(&path)?;
        *out = Box::into_raw(Box::new(PpArchive { inner }));
        Ok(())
    })
}

/// Releases an archive. Null is ignored.
///
/// # Safety
/// `archive` must come from [`pp_archive_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pp_archive_free(archive: *mut PpArchive) {
    if !archive.is_null() {
        drop(Box::from_raw(archive));
    }
}

/// Number of stimuli in a group (`val`, `abx` or `synonym`).
///
/// # Safety
/// Pointers must be valid; `group` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pp_archive_item_count(
    archive: *const PpArchive,
    group: *const c_char,
    out: *mut usize,
) -> PpStatus {
    guard(|| {
        non_null(archive, "archive")?;
        let group = str_arg(group, "group")?;
        let n = (*archive).inner.activations.group(group).len();
        write_out(out, n, "out")
    })
}

unsafe fn matrix<'a>(
    archive: *const PpArchive,
    group: *const c_char,
    index: usize,
    representation: *const c_char,
) -> Result<&'a ndarray::Array2<f64>, Failure> {
    non_null(archive, "archive")?;
    let group = str_arg(group, "group")?;
    let rep = str_arg(representation, "representation")?;
    let items = (*archive).inner.activations.group(group);
    let Some(item) = items.get(index) else {
        return fail(
            PpStatus::NotFound,
            format!("group `{group}` has {} items, index {index} requested", items.len()),
        );
    };
    item.get(rep)
        .ok_or_else(|| Failure(PpStatus::NotFound, format!("{} has no `{rep}`", item.id)))
}

/// Shape of one stored matrix.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pp_archive_matrix_shape(
    archive: *const PpArchive,
    group: *const c_char,
    index: usize,
    representation: *const c_char,
    rows: *mut usize,
    cols: *mut usize,
) -> PpStatus {
    guard(|| {
        let m = matrix(archive, group, index, representation)?;
        write_out(rows, m.nrows(), "rows")?;
        write_out(cols, m.ncols(), "cols")
    })
}

/// Copies one stored matrix, row-major, into `out`.
///
/// # Safety
/// Pointers must be valid; `out` must hold `out_capacity` values.
#[no_mangle]
pub unsafe extern "C" fn pp_archive_matrix_copy(
    archive: *const PpArchive,
    group: *const c_char,
    index: usize,
    representation: *const c_char,
    out: *mut f64,
    out_capacity: usize,
) -> PpStatus {
    guard(|| {
        let m = matrix(archive, group, index, representation)?;
        let data = m.as_standard_layout();
        copy_out(data.as_slice().expect("standard layout"), out, out_capacity)
    })
}
