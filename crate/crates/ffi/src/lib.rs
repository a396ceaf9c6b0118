//! C ABI over `sgmask`.
//!
//! Images and masks cross the boundary as opaque handles owned by the
//! library; release them with [`sgm_image_free`] / [`sgm_mask_free`]. Every
//! fallible function returns an `SGM_*` status code and, on failure, leaves a
//! message retrievable with [`sgm_last_error`] on the calling thread. Panics
//! never unwind into C; they surface as `SGM_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use num_complex::Complex64;
use sgmask::decoders::{Decoder, Ist, IstParams, ZeroFill};
use sgmask::io::{read_mask, read_volume, write_mask, write_volume, VolumeMeta};
use sgmask::maskdesign::{design_mask, evaluate_mask, speedup_estimate};
use sgmask::metrics::MetricId;
use sgmask::phantom::{generate_phantom, PhantomSpec};
use sgmask::{DesignConfig, DynamicImage, Error, Mask, TrainingMode, Variant};

pub const SGM_OK: i32 = 0;
/// A required pointer argument was NULL.
pub const SGM_ERR_NULL: i32 = 1;
/// An argument or configuration value is out of range.
pub const SGM_ERR_INVALID: i32 = 2;
/// File could not be read, written or parsed.
pub const SGM_ERR_IO: i32 = 3;
/// Image or mask dimensions disagree.
pub const SGM_ERR_DIMENSION: i32 = 4;
/// Internal panic caught at the boundary.
pub const SGM_ERR_PANIC: i32 = 5;

pub const SGM_VARIANT_G: i32 = 0;
pub const SGM_VARIANT_SG: i32 = 1;
pub const SGM_MODE_FULL: i32 = 0;
pub const SGM_MODE_BATCH: i32 = 1;
pub const SGM_DECODER_ZERO_FILL: i32 = 0;
pub const SGM_DECODER_IST: i32 = 1;
pub const SGM_METRIC_PSNR: i32 = 0;
pub const SGM_METRIC_SSIM: i32 = 1;
pub const SGM_METRIC_NEGMSE: i32 = 2;

/// Opaque dynamic image (N x N x T complex).
pub struct SgmImage(DynamicImage);

/// Opaque ordered line mask.
pub struct SgmMask(Mask);

/// Design-loop settings. IST uses its default parameters.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SgmDesignOptions {
    /// `SGM_VARIANT_G` or `SGM_VARIANT_SG`.
    pub variant: i32,
    /// `SGM_MODE_FULL` (all training images) or `SGM_MODE_BATCH`.
    pub mode: i32,
    /// Lines in the final mask.
    pub budget: u32,
    /// Candidate rows per step (SG only).
    pub sample_batch: u32,
    /// Training images per step (batch mode only).
    pub train_batch: u32,
    pub seed: u64,
    pub decoder: i32,
    pub metric: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Format(_) => SGM_ERR_IO,
        Error::Dimension(_) => SGM_ERR_DIMENSION,
        _ => SGM_ERR_INVALID,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SGM_OK,
        Ok(Err(code)) => code,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            SGM_ERR_PANIC
        }
    }
}

fn fail(e: Error) -> i32 {
    set_error(e.to_string());
    status_of(&e)
}

fn invalid(msg: &str) -> i32 {
    set_error(msg);
    SGM_ERR_INVALID
}

fn null(what: &str) -> i32 {
    set_error(format!("{what} is NULL"));
    SGM_ERR_NULL
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, i32> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

fn metric_of(code: i32) -> Result<MetricId, i32> {
    match code {
        SGM_METRIC_PSNR => Ok(MetricId::Psnr),
        SGM_METRIC_SSIM => Ok(MetricId::Ssim),
        SGM_METRIC_NEGMSE => Ok(MetricId::NegMse),
        _ => Err(invalid("unknown metric code")),
    }
}

fn decoder_of(code: i32) -> Result<Box<dyn Decoder>, i32> {
    match code {
        SGM_DECODER_ZERO_FILL => Ok(Box::new(ZeroFill::new())),
        SGM_DECODER_IST => Ist::new(IstParams::default()).map(|d| Box::new(d) as Box<dyn Decoder>).map_err(fail),
        _ => Err(invalid("unknown decoder code")),
    }
}

unsafe fn images<'a>(ptrs: *const *const SgmImage, count: usize) -> Result<Vec<&'a DynamicImage>, i32> {
    if ptrs.is_null() {
        return Err(null("image array"));
    }
    std::slice::from_raw_parts(ptrs, count)
        .iter()
        .map(|&p| p.as_ref().map(|i| &i.0).ok_or_else(|| null("image")))
        .collect()
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn sgm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Renders the default moving-disk phantom, normalized to peak magnitude 1.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sgm_phantom_new(n: u32, frames: u32, seed: u64, out: *mut *mut SgmImage) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let img = generate_phantom(&PhantomSpec::default_for(n as usize, frames as usize, seed)).map_err(fail)?;
        put(out, SgmImage(img));
        Ok(())
    })
}

/// Builds an image from `2 * n * n * frames` interleaved (re, im) doubles in
/// frame-major, row-major order.
///
/// # Safety
/// `data` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_image_from_data(
    n: u32,
    frames: u32,
    data: *const f64,
    len: usize,
    out: *mut *mut SgmImage,
) -> i32 {
    guard(|| {
        if data.is_null() || out.is_null() {
            return Err(null("data or out"));
        }
        let count = n as usize * n as usize * frames as usize;
        if len != 2 * count {
            return Err(fail(Error::Dimension(format!("expected {} doubles, got {len}", 2 * count))));
        }
        let raw = std::slice::from_raw_parts(data, len);
        let values = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let img = DynamicImage::new(n as usize, frames as usize, values).map_err(fail)?;
        put(out, SgmImage(img));
        Ok(())
    })
}

/// Reads a volume file (and its `.meta` sidecar, if present).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_volume_load(path: *const c_char, out: *mut *mut SgmImage) -> i32 {
    guard(|| {
        let path = path_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (img, _) = read_volume(path).map_err(fail)?;
        put(out, SgmImage(img));
        Ok(())
    })
}

/// Writes a volume file and its sidecar.
///
/// # Safety
/// `image` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sgm_volume_save(image: *const SgmImage, path: *const c_char) -> i32 {
    guard(|| {
        let img = &image.as_ref().ok_or_else(|| null("image"))?.0;
        let path = path_arg(path, "path")?;
        write_volume(path, img, &VolumeMeta::for_image(img)).map_err(fail)
    })
}

/// # Safety
/// `image` must be NULL or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sgm_image_free(image: *mut SgmImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be a live handle; `n` and `frames` writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_image_dims(image: *const SgmImage, n: *mut u32, frames: *mut u32) -> i32 {
    guard(|| {
        let img = &image.as_ref().ok_or_else(|| null("image"))?.0;
        if n.is_null() || frames.is_null() {
            return Err(null("n or frames"));
        }
        *n = img.n() as u32;
        *frames = img.frames() as u32;
        Ok(())
    })
}

/// Copies the samples as interleaved (re, im) doubles; `len` must equal
/// `2 * n * n * frames`.
///
/// # Safety
/// `image` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sgm_image_copy_data(image: *const SgmImage, out: *mut f64, len: usize) -> i32 {
    guard(|| {
        let img = &image.as_ref().ok_or_else(|| null("image"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != 2 * img.data().len() {
            return Err(fail(Error::Dimension(format!(
                "buffer holds {len} doubles, image needs {}",
                2 * img.data().len()
            ))));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, z) in dst.chunks_exact_mut(2).zip(img.data()) {
            d[0] = z.re;
            d[1] = z.im;
        }
        Ok(())
    })
}

/// Runs the greedy design loop on `count` training images.
///
/// # Safety
/// `training` must point to `count` live image handles; `options` must be
/// valid; `out` writable; `decoder_calls` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_design(
    training: *const *const SgmImage,
    count: usize,
    options: *const SgmDesignOptions,
    out: *mut *mut SgmMask,
    decoder_calls: *mut u64,
) -> i32 {
    guard(|| {
        let opts = *options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let imgs: Vec<DynamicImage> = images(training, count)?.into_iter().cloned().collect();
        let variant = match opts.variant {
            SGM_VARIANT_G => Variant::Greedy,
            SGM_VARIANT_SG => Variant::Stochastic,
            _ => return Err(invalid("unknown variant code")),
        };
        let mode = match opts.mode {
            SGM_MODE_FULL => TrainingMode::Full,
            SGM_MODE_BATCH => TrainingMode::Batch,
            _ => return Err(invalid("unknown mode code")),
        };
        let metric = metric_of(opts.metric)?;
        let decoder = decoder_of(opts.decoder)?;
        let mut cfg = DesignConfig::new(variant, mode, opts.budget as usize);
        cfg.sample_batch = opts.sample_batch as usize;
        cfg.train_batch = opts.train_batch as usize;
        cfg.seed = opts.seed;
        cfg.metric = metric;
        cfg.decoder = decoder.id().to_string();
        let (mask, trace) = design_mask(&cfg, &imgs, decoder.as_ref(), metric).map_err(fail)?;
        if !decoder_calls.is_null() {
            *decoder_calls = trace.decoder_calls();
        }
        put(out, SgmMask(mask));
        Ok(())
    })
}

/// # Safety
/// `mask` must be NULL or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sgm_mask_free(mask: *mut SgmMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// # Safety
/// `mask` must be a live handle; `len` writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_mask_len(mask: *const SgmMask, len: *mut usize) -> i32 {
    guard(|| {
        let m = &mask.as_ref().ok_or_else(|| null("mask"))?.0;
        if len.is_null() {
            return Err(null("len"));
        }
        *len = m.len();
        Ok(())
    })
}

/// Line `index` in acquisition order.
///
/// # Safety
/// `mask` must be a live handle; `frame` and `row` writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_mask_line(mask: *const SgmMask, index: usize, frame: *mut u32, row: *mut u32) -> i32 {
    guard(|| {
        let m = &mask.as_ref().ok_or_else(|| null("mask"))?.0;
        if frame.is_null() || row.is_null() {
            return Err(null("frame or row"));
        }
        let line = m.lines().get(index).ok_or_else(|| invalid("line index out of range"))?;
        *frame = line.frame as u32;
        *row = line.row as u32;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_mask_load(path: *const c_char, out: *mut *mut SgmMask) -> i32 {
    guard(|| {
        let path = path_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SgmMask(read_mask(path).map_err(fail)?));
        Ok(())
    })
}

/// # Safety
/// `mask` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sgm_mask_save(mask: *const SgmMask, path: *const c_char) -> i32 {
    guard(|| {
        let m = &mask.as_ref().ok_or_else(|| null("mask"))?.0;
        let path = path_arg(path, "path")?;
        write_mask(path, m).map_err(fail)
    })
}

/// Mean metric over `count` volumes reconstructed from `mask`.
///
/// # Safety
/// `mask` must be a live handle; `volumes` must point to `count` live image
/// handles; `mean` writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_evaluate(
    mask: *const SgmMask,
    volumes: *const *const SgmImage,
    count: usize,
    decoder: i32,
    metric: i32,
    mean: *mut f64,
) -> i32 {
    guard(|| {
        let m = &mask.as_ref().ok_or_else(|| null("mask"))?.0;
        if mean.is_null() {
            return Err(null("mean"));
        }
        let vols: Vec<DynamicImage> = images(volumes, count)?.into_iter().cloned().collect();
        let metric = metric_of(metric)?;
        let decoder = decoder_of(decoder)?;
        let report = evaluate_mask("ffi", m, &vols, decoder.as_ref(), metric).map_err(fail)?;
        *mean = report.mean;
        Ok(())
    })
}

/// Theoretical decoder-call reduction of SG-v2 over G-v1,
/// `(m / l) * (N T / k)`, as a reduced fraction.
///
/// # Safety
/// `numer` and `denom` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgm_speedup(
    n: u32,
    frames: u32,
    m: u32,
    k: u32,
    l: u32,
    numer: *mut u64,
    denom: *mut u64,
) -> i32 {
    guard(|| {
        if numer.is_null() || denom.is_null() {
            return Err(null("numer or denom"));
        }
        if n == 0 || frames == 0 || m == 0 || k == 0 || l == 0 {
            return Err(invalid("all arguments must be positive"));
        }
        let mut cfg = DesignConfig::new(Variant::Stochastic, TrainingMode::Batch, 0);
        cfg.sample_batch = k as usize;
        cfg.train_batch = l as usize;
        let est = speedup_estimate(&cfg, m as usize, (n as usize, frames as usize));
        *numer = *est.ratio.numer();
        *denom = *est.ratio.denom();
        Ok(())
    })
}
