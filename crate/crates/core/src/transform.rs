//! Unitary Fourier transforms and the line-subsampled measurement operator.
//!
//! Spatial transform: per-frame 2-D DFT scaled by `1/N`. Temporal transform:
//! per-pixel 1-D DFT along frames scaled by `1/sqrt(T)`. Both are isometries,
//! so the sampling operator has unit norm. k-space rows are kept in plain DFT
//! order (row 0 is DC, no fftshift).

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::types::{DynamicImage, Mask};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Spatial-frequency coefficients, same shape and layout as a [`DynamicImage`].
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceVolume {
    n: usize,
    frames: usize,
    data: Vec<Complex64>,
}

impl KSpaceVolume {
    pub fn new(n: usize, frames: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n * frames {
            return Err(Error::Dimension(format!(
                "expected {} coefficients, got {}",
                n * n * frames,
                data.len()
            )));
        }
        Ok(Self { n, frames, data })
    }

    pub fn zeros(n: usize, frames: usize) -> Self {
        Self {
            n,
            frames,
            data: vec![Complex64::new(0.0, 0.0); n * n * frames],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The `N` samples of phase-encode row `row` in frame `frame`.
    pub fn line(&self, frame: usize, row: usize) -> &[Complex64] {
        let start = (frame * self.n + row) * self.n;
        &self.data[start..start + self.n]
    }
}

/// Measurements `b = P_Ω Ψ x`: `N` values per mask line, in mask order.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurements {
    mask: Mask,
    values: Vec<Complex64>,
}

impl Measurements {
    pub fn new(mask: Mask, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != mask.sample_count() {
            return Err(Error::Dimension(format!(
                "mask holds {} samples but {} values were given",
                mask.sample_count(),
                values.len()
            )));
        }
        Ok(Self { mask, values })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// In-place unitary 2-D DFT of every `n x n` frame of `data`.
pub(crate) fn fft2_inplace(data: &mut [Complex64], n: usize, direction: FftDirection) {
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // rows of every frame in one call
    fft.process_with_scratch(data, &mut scratch);
    for frame in data.chunks_exact_mut(n * n) {
        transpose_square(frame, n);
    }
    fft.process_with_scratch(data, &mut scratch);
    let scale = 1.0 / n as f64;
    for frame in data.chunks_exact_mut(n * n) {
        transpose_square(frame, n);
    }
    for z in data.iter_mut() {
        *z *= scale;
    }
}

fn transpose_square(a: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            a.swap(i * n + j, j * n + i);
        }
    }
}

// pixels per gather/scatter block of the temporal transform
const TEMPORAL_BLOCK: usize = 64;

/// In-place unitary DFT along the frame axis for every pixel.
pub(crate) fn temporal_inplace(data: &mut [Complex64], pixels: usize, frames: usize, direction: FftDirection) {
    if frames == 1 {
        return;
    }
    let fft = plan(frames, direction);
    SCRATCH.with(|cell| {
        let mut buf = cell.borrow_mut();
        buf.resize(TEMPORAL_BLOCK * frames, Complex64::new(0.0, 0.0));
        temporal_with(data, &mut buf, &*fft, pixels, frames);
    });
}

fn temporal_with(data: &mut [Complex64], buf: &mut [Complex64], fft: &dyn Fft<f64>, pixels: usize, frames: usize) {
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let scale = 1.0 / (frames as f64).sqrt();
    let mut start = 0;
    while start < pixels {
        let width = TEMPORAL_BLOCK.min(pixels - start);
        let block = &mut buf[..width * frames];
        // [t][p] -> [p][t] for this block of pixels
        for t in 0..frames {
            let src = &data[t * pixels + start..t * pixels + start + width];
            for (p, &v) in src.iter().enumerate() {
                block[p * frames + t] = v;
            }
        }
        fft.process_with_scratch(block, &mut scratch);
        for t in 0..frames {
            let dst = &mut data[t * pixels + start..t * pixels + start + width];
            for (p, v) in dst.iter_mut().enumerate() {
                *v = block[p * frames + t] * scale;
            }
        }
        start += width;
    }
}

/// Per-frame unitary 2-D DFT, `Ψ`.
pub fn forward_fft(image: &DynamicImage) -> KSpaceVolume {
    let (n, frames) = image.dims();
    let mut data = image.data().to_vec();
    fft2_inplace(&mut data, n, FftDirection::Forward);
    KSpaceVolume { n, frames, data }
}

/// Inverse (and adjoint) of [`forward_fft`], `Ψ*`.
pub fn inverse_fft(k: &KSpaceVolume) -> DynamicImage {
    let mut data = k.data.clone();
    fft2_inplace(&mut data, k.n, FftDirection::Inverse);
    DynamicImage::from_raw(k.n, k.frames, data)
}

/// Unitary DFT along time, `Φ`. The output is in the x-f domain.
pub fn temporal_fft(image: &DynamicImage) -> DynamicImage {
    let (n, frames) = image.dims();
    let mut data = image.data().to_vec();
    temporal_inplace(&mut data, n * n, frames, FftDirection::Forward);
    DynamicImage::from_raw(n, frames, data)
}

/// Inverse of [`temporal_fft`], `Φ*`.
pub fn temporal_ifft(image: &DynamicImage) -> DynamicImage {
    let (n, frames) = image.dims();
    let mut data = image.data().to_vec();
    temporal_inplace(&mut data, n * n, frames, FftDirection::Inverse);
    DynamicImage::from_raw(n, frames, data)
}

fn check_dims(mask: &Mask, n: usize, frames: usize) -> Result<()> {
    if mask.dims() != (n, frames) {
        return Err(Error::Dimension(format!(
            "mask is for N={} T={}, data is N={n} T={frames}",
            mask.n(),
            mask.frames()
        )));
    }
    Ok(())
}

/// `b = P_Ω Ψ x` with no additive noise.
pub fn sample(image: &DynamicImage, mask: &Mask) -> Result<Measurements> {
    check_dims(mask, image.n(), image.frames())?;
    sample_kspace(&forward_fft(image), mask)
}

/// Extracts the mask lines from an already transformed volume.
pub fn sample_kspace(k: &KSpaceVolume, mask: &Mask) -> Result<Measurements> {
    check_dims(mask, k.n, k.frames)?;
    let mut values = Vec::with_capacity(mask.sample_count());
    for l in mask.lines() {
        values.extend_from_slice(k.line(l.frame, l.row));
    }
    Ok(Measurements {
        mask: mask.clone(),
        values,
    })
}

/// `P_Ω* b`: measurements scattered into an otherwise zero k-space volume.
pub fn zero_filled_kspace(meas: &Measurements) -> KSpaceVolume {
    let (n, frames) = meas.mask.dims();
    let mut k = KSpaceVolume::zeros(n, frames);
    for (l, chunk) in meas.mask.lines().iter().zip(meas.values.chunks_exact(n)) {
        let start = (l.frame * n + l.row) * n;
        k.data[start..start + n].copy_from_slice(chunk);
    }
    k
}

/// `Ψ* P_Ω* b`.
pub fn adjoint_sample(meas: &Measurements) -> DynamicImage {
    inverse_fft(&zero_filled_kspace(meas))
}

/// `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
