//! C ABI over the motionclip library.
//!
//! Every function returns an [`McStatus`]; on failure the message is
//! available from [`mc_last_error`] on the same thread. Handles are opaque
//! and must be released with their matching `_free` function. Pointer
//! arguments must be valid for the stated length; null is rejected with
//! `MC_STATUS_NULL_POINTER`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use motionclip::keypoints::{clean_sequence, parse_keypoints, CleaningParams, KeypointSequence};
use motionclip::metrics::{self, FrameImage};
use motionclip::peaks::filter_peaks;
use motionclip::rope::{
    apply_rope, compose_latents, effective_frequencies, AxisPairs, FrequencyLayout, GridPosition,
    LatentBlock, LatentRole, LatentShape, COMPOSED_CHANNELS, LATENT_CHANNELS,
};
use motionclip::velocity::compute_velocity;
use motionclip::wavelet::{energy_series, CwtConfig, EnergySeries};
use motionclip::window::select_window;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ComputeError = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

pub struct McKeypoints {
    inner: KeypointSequence,
}

/// Filtered energy plus the frame timing needed for window selection.
pub struct McEnergy {
    series: EnergySeries,
    fps: f64,
    frames: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCleaningSummary {
    pub interpolated_count: usize,
    pub outlier_count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCwtConfig {
    pub scale_min: u32,
    pub scale_max: u32,
    pub scale_step: u32,
    pub morlet_omega0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McWindowSelection {
    pub start_frame: usize,
    /// Exclusive.
    pub end_frame: usize,
    pub start_seconds: f64,
    pub duration_seconds: f64,
    pub window_energy: f64,
    pub boundary_adjusted: bool,
    pub whole_video: bool,
}

/// Rotary layout. Pair counts of all zero select the default split.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRopeParams {
    pub head_dim: usize,
    pub pairs_t: usize,
    pub pairs_h: usize,
    pub pairs_w: usize,
    pub base: f64,
    pub alpha: f64,
    pub motion_scale: f64,
    pub space_scale_factor: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Fail {
    status: McStatus,
    message: String,
}

impl Fail {
    fn new(status: McStatus, message: impl std::fmt::Display) -> Self {
        Self {
            status,
            message: message.to_string(),
        }
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> McStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            McStatus::Ok
        }
        Ok(Err(fail)) => {
            set_error(&fail.message);
            fail.status
        }
        Err(_) => {
            set_error("internal panic");
            McStatus::Panic
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> Fail {
    Fail::new(McStatus::InvalidArgument, e)
}

fn compute(e: impl std::fmt::Display) -> Fail {
    Fail::new(McStatus::ComputeError, e)
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail::new(McStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Fail::new(McStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn reference<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Fail> {
    ptr.as_ref()
        .ok_or_else(|| Fail::new(McStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut()
        .ok_or_else(|| Fail::new(McStatus::NullPointer, format!("{name} is null")))
}

fn copy_into(dst: &mut [f64], src: &[f64]) -> Result<(), Fail> {
    if dst.len() < src.len() {
        return Err(Fail::new(
            McStatus::BufferTooSmall,
            format!("buffer holds {} values, {} needed", dst.len(), src.len()),
        ));
    }
    dst[..src.len()].copy_from_slice(src);
    Ok(())
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn mc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn mc_keypoints_parse(
    data: *const u8,
    len: usize,
    out_handle: *mut *mut McKeypoints,
) -> McStatus {
    guard(|| {
        let bytes = slice(data, len, "data")?;
        let out_handle = out(out_handle, "out_handle")?;
        let inner = parse_keypoints(bytes).map_err(|e| Fail::new(McStatus::ParseError, e))?;
        *out_handle = Box::into_raw(Box::new(McKeypoints { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_keypoints_free(handle: *mut McKeypoints) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[no_mangle]
pub unsafe extern "C" fn mc_keypoints_frame_count(
    handle: *const McKeypoints,
    out_count: *mut usize,
) -> McStatus {
    guard(|| {
        *out(out_count, "out_count")? = reference(handle, "handle")?.inner.frame_count();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_keypoints_joint_count(
    handle: *const McKeypoints,
    out_count: *mut usize,
) -> McStatus {
    guard(|| {
        *out(out_count, "out_count")? = reference(handle, "handle")?.inner.joint_count();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_keypoints_fps(
    handle: *const McKeypoints,
    out_fps: *mut f64,
) -> McStatus {
    guard(|| {
        *out(out_fps, "out_fps")? = reference(handle, "handle")?.inner.fps();
        Ok(())
    })
}

/// Writes a cleaned copy to `out_handle`. `summary` may be null.
#[no_mangle]
pub unsafe extern "C" fn mc_keypoints_clean(
    handle: *const McKeypoints,
    conf_min: f64,
    outlier_factor: f64,
    out_handle: *mut *mut McKeypoints,
    summary: *mut McCleaningSummary,
) -> McStatus {
    guard(|| {
        let seq = &reference(handle, "handle")?.inner;
        let out_handle = out(out_handle, "out_handle")?;
        let (cleaned, report) =
            clean_sequence(seq, CleaningParams::new(conf_min, outlier_factor)).map_err(compute)?;
        if let Some(s) = summary.as_mut() {
            *s = McCleaningSummary {
                interpolated_count: report.interpolated_count,
                outlier_count: report.outlier_count,
            };
        }
        *out_handle = Box::into_raw(Box::new(McKeypoints { inner: cleaned }));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn mc_cwt_config_default() -> McCwtConfig {
    let c = CwtConfig::default();
    McCwtConfig {
        scale_min: c.scale_min,
        scale_max: c.scale_max,
        scale_step: c.scale_step,
        morlet_omega0: c.morlet_omega0,
    }
}

/// Velocity of `joint_index`, wavelet energy and peak filtering, on an
/// already cleaned sequence.
#[no_mangle]
pub unsafe extern "C" fn mc_energy_compute(
    handle: *const McKeypoints,
    joint_index: usize,
    config: *const McCwtConfig,
    peak_threshold_frames: usize,
    out_handle: *mut *mut McEnergy,
) -> McStatus {
    guard(|| {
        let seq = &reference(handle, "handle")?.inner;
        let c = reference(config, "config")?;
        let out_handle = out(out_handle, "out_handle")?;
        if peak_threshold_frames == 0 {
            return Err(invalid("peak_threshold_frames must be at least 1"));
        }
        let cfg = CwtConfig {
            scale_min: c.scale_min,
            scale_max: c.scale_max,
            scale_step: c.scale_step,
            morlet_omega0: c.morlet_omega0,
        };
        let velocity = compute_velocity(seq, joint_index).map_err(invalid)?;
        let raw = energy_series(&velocity, &cfg).map_err(invalid)?;
        *out_handle = Box::into_raw(Box::new(McEnergy {
            series: filter_peaks(&raw, peak_threshold_frames),
            fps: seq.fps(),
            frames: seq.frame_count(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_energy_free(handle: *mut McEnergy) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[no_mangle]
pub unsafe extern "C" fn mc_energy_len(handle: *const McEnergy, out_len: *mut usize) -> McStatus {
    guard(|| {
        *out(out_len, "out_len")? = reference(handle, "handle")?.series.len();
        Ok(())
    })
}

/// Copies raw and filtered energy into caller buffers of `len` values each.
/// Either buffer may be null.
#[no_mangle]
pub unsafe extern "C" fn mc_energy_copy(
    handle: *const McEnergy,
    raw: *mut f64,
    filtered: *mut f64,
    len: usize,
) -> McStatus {
    guard(|| {
        let e = &reference(handle, "handle")?.series;
        if !raw.is_null() {
            copy_into(slice_mut(raw, len, "raw")?, &e.raw)?;
        }
        if !filtered.is_null() {
            copy_into(slice_mut(filtered, len, "filtered")?, &e.filtered)?;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_window_select(
    handle: *const McEnergy,
    window_seconds: f64,
    boundary_margin_frames: usize,
    out_selection: *mut McWindowSelection,
) -> McStatus {
    guard(|| {
        let e = reference(handle, "handle")?;
        let dst = out(out_selection, "out_selection")?;
        let s = select_window(
            &e.series,
            e.fps,
            e.frames,
            window_seconds,
            boundary_margin_frames,
        )
        .map_err(invalid)?;
        *dst = McWindowSelection {
            start_frame: s.start_frame,
            end_frame: s.end_frame,
            start_seconds: s.start_seconds,
            duration_seconds: s.duration_seconds,
            window_energy: s.window_energy,
            boundary_adjusted: s.boundary_adjusted,
            whole_video: s.whole_video,
        };
        Ok(())
    })
}

/// Default layout for `head_dim`. Odd or zero dimensions yield zero pair
/// counts, which later calls reject.
#[no_mangle]
pub extern "C" fn mc_rope_params_default(head_dim: usize) -> McRopeParams {
    let (pairs, l) = match FrequencyLayout::new(head_dim) {
        Ok(l) => (l.pair_counts, l),
        Err(_) => (
            AxisPairs { t: 0, h: 0, w: 0 },
            FrequencyLayout::new(2).expect("two is a valid head dim"),
        ),
    };
    McRopeParams {
        head_dim,
        pairs_t: pairs.t,
        pairs_h: pairs.h,
        pairs_w: pairs.w,
        base: l.base,
        alpha: l.alpha,
        motion_scale: l.motion_scale,
        space_scale_factor: l.space_scale_factor,
    }
}

fn layout(p: &McRopeParams) -> Result<FrequencyLayout, Fail> {
    let mut l = if p.pairs_t == 0 && p.pairs_h == 0 && p.pairs_w == 0 {
        FrequencyLayout::new(p.head_dim)
    } else {
        FrequencyLayout::with_pairs(
            p.head_dim,
            AxisPairs {
                t: p.pairs_t,
                h: p.pairs_h,
                w: p.pairs_w,
            },
        )
    }
    .map_err(invalid)?;
    l.base = p.base;
    l.alpha = p.alpha;
    l.motion_scale = p.motion_scale;
    l.space_scale_factor = p.space_scale_factor;
    l.validate().map_err(invalid)?;
    Ok(l)
}

/// Concatenated t, h, w frequencies (`head_dim / 2` values).
#[no_mangle]
pub unsafe extern "C" fn mc_rope_frequencies(
    params: *const McRopeParams,
    use_slf: bool,
    out_freqs: *mut f64,
    len: usize,
) -> McStatus {
    guard(|| {
        let l = layout(reference(params, "params")?)?;
        let freqs = effective_frequencies(&l, use_slf)
            .map_err(invalid)?
            .concat();
        copy_into(slice_mut(out_freqs, len, "out_freqs")?, &freqs)
    })
}

/// Rotates a `head_dim` vector for grid position (t, h, w).
#[no_mangle]
pub unsafe extern "C" fn mc_rope_apply(
    params: *const McRopeParams,
    use_slf: bool,
    vector: *const f64,
    t: u32,
    h: u32,
    w: u32,
    out_vector: *mut f64,
) -> McStatus {
    guard(|| {
        let l = layout(reference(params, "params")?)?;
        let v = slice(vector, l.head_dim, "vector")?;
        let dst = slice_mut(out_vector, l.head_dim, "out_vector")?;
        let freqs = effective_frequencies(&l, use_slf).map_err(invalid)?;
        let rotated = apply_rope(v, GridPosition::new(t, h, w), &freqs, &l).map_err(invalid)?;
        copy_into(dst, &rotated)
    })
}

/// Composes unbatched `[C][T][H][W]` latents: `noisy` and `pose` hold
/// 16 x frames x height x width values, `reference` 16 x 1 x height x width.
/// `out_latent` receives 52 x frames x height x width values.
#[no_mangle]
pub unsafe extern "C" fn mc_compose_latents(
    noisy: *const f64,
    pose: *const f64,
    reference_frame: *const f64,
    frames: usize,
    height: usize,
    width: usize,
    out_latent: *mut f64,
    out_len: usize,
) -> McStatus {
    guard(|| {
        let full = LatentShape::new(LATENT_CHANNELS, frames, height, width);
        let single = LatentShape { frames: 1, ..full };
        let block = |role, shape: LatentShape, ptr, name| -> Result<LatentBlock, Fail> {
            LatentBlock::new(role, shape, slice(ptr, shape.len(), name)?.to_vec()).map_err(invalid)
        };
        let n = block(LatentRole::Noisy, full, noisy, "noisy")?;
        let p = block(LatentRole::Pose, full, pose, "pose")?;
        let r = block(
            LatentRole::Reference,
            single,
            reference_frame,
            "reference_frame",
        )?;
        let composed = compose_latents(&n, &p, &r).map_err(invalid)?;
        debug_assert_eq!(composed.shape().channels, COMPOSED_CHANNELS);
        copy_into(
            slice_mut(out_latent, out_len, "out_latent")?,
            composed.values(),
        )
    })
}

unsafe fn images(
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    channels: usize,
) -> Result<(FrameImage, FrameImage), Fail> {
    let n = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| invalid("image size overflows"))?;
    let load = |p, name| -> Result<FrameImage, Fail> {
        FrameImage::new(width, height, channels, slice(p, n, name)?.to_vec()).map_err(invalid)
    };
    Ok((load(a, "a")?, load(b, "b")?))
}

type ImageMetric = fn(&FrameImage, &FrameImage) -> Result<f64, metrics::MetricError>;

unsafe fn image_metric(
    f: ImageMetric,
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    channels: usize,
    out_value: *mut f64,
) -> McStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let (x, y) = images(a, b, width, height, channels)?;
        *dst = f(&x, &y).map_err(invalid)?;
        Ok(())
    })
}

/// PSNR in dB over interleaved `[0, 1]` pixels; infinity for identical images.
#[no_mangle]
pub unsafe extern "C" fn mc_psnr(
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    channels: usize,
    out_value: *mut f64,
) -> McStatus {
    image_metric(metrics::psnr, a, b, width, height, channels, out_value)
}

/// Mean SSIM with an 11x11 Gaussian window; both sides need at least 11 pixels.
#[no_mangle]
pub unsafe extern "C" fn mc_ssim(
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    channels: usize,
    out_value: *mut f64,
) -> McStatus {
    image_metric(metrics::ssim, a, b, width, height, channels, out_value)
}

/// Mean absolute pixel difference.
#[no_mangle]
pub unsafe extern "C" fn mc_l1(
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    channels: usize,
    out_value: *mut f64,
) -> McStatus {
    image_metric(metrics::l1, a, b, width, height, channels, out_value)
}

#[no_mangle]
pub unsafe extern "C" fn mc_pck(
    pred: *const McKeypoints,
    gt: *const McKeypoints,
    alpha: f64,
    out_value: *mut f64,
) -> McStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let p = &reference(pred, "pred")?.inner;
        let g = &reference(gt, "gt")?.inner;
        *dst = metrics::pck(p, g, alpha).map_err(invalid)?;
        Ok(())
    })
}
