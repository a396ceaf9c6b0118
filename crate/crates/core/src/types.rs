//! Domain types shared by every module: volumes, phase-encode lines, masks,
//! sampling distributions, design configuration and metric reports.
//!
//! Indexing conventions:
//! - a volume is `N x N x T`, stored frame-major then row-major, as
//!   interleaved `(re, im)` pairs (`Complex64` is `repr(C)`);
//! - a [`Line`] is `(frame, row)`; in k-space it is the row `ky = row` of
//!   frame `frame`, i.e. `N` contiguous samples;
//! - the flat line index is `frame * N + row`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricId;

/// Complex `N x N x T` volume.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicImage {
    n: usize,
    frames: usize,
    data: Vec<Complex64>,
    /// Peak magnitude divided out by [`normalize`]; 1.0 if never normalized.
    norm_factor: f64,
}

impl DynamicImage {
    pub fn new(n: usize, frames: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || frames == 0 {
            return Err(Error::Dimension(format!(
                "dimensions must be positive, got {n}x{n}x{frames}"
            )));
        }
        if data.len() != n * n * frames {
            return Err(Error::Dimension(format!(
                "expected {} entries for {n}x{n}x{frames}, got {}",
                n * n * frames,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            n,
            frames,
            data,
            norm_factor: 1.0,
        })
    }

    pub fn zeros(n: usize, frames: usize) -> Self {
        Self {
            n,
            frames,
            data: vec![Complex64::new(0.0, 0.0); n * n * frames],
            norm_factor: 1.0,
        }
    }

    /// Internal constructor for buffers known to be finite and sized.
    pub(crate) fn from_raw(n: usize, frames: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), n * n * frames);
        Self {
            n,
            frames,
            data,
            norm_factor: 1.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.frames)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    pub(crate) fn with_norm_factor(mut self, f: f64) -> Self {
        self.norm_factor = f;
        self
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let sz = self.n * self.n;
        &self.data[t * sz..(t + 1) * sz]
    }

    pub fn get(&self, t: usize, y: usize, x: usize) -> Complex64 {
        self.data[(t * self.n + y) * self.n + x]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            n: self.n,
            frames: self.frames,
            data: self.data.iter().map(|&z| f(z)).collect(),
            norm_factor: self.norm_factor,
        }
    }
}

/// Scales `image` so its peak magnitude is 1.0 and records the divisor.
///
/// Images already at unit peak (to within a few ulps) are returned
/// unchanged, which makes the operation exactly idempotent.
pub fn normalize(image: &DynamicImage) -> Result<DynamicImage> {
    let peak = image.max_magnitude();
    if peak == 0.0 {
        return Err(Error::DegenerateImage);
    }
    if (peak - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(image.clone());
    }
    let inv = 1.0 / peak;
    Ok(image
        .map(|z| z * inv)
        .with_norm_factor(image.norm_factor * peak))
}

/// One phase-encode line: row `row` of frame `frame`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Line {
    pub frame: usize,
    pub row: usize,
}

impl Line {
    pub fn new(frame: usize, row: usize) -> Self {
        Self { frame, row }
    }

    pub fn index(&self, n: usize) -> usize {
        self.frame * n + self.row
    }

    pub fn from_index(idx: usize, n: usize) -> Self {
        Self {
            frame: idx / n,
            row: idx % n,
        }
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.frame, self.row)
    }
}

/// Ordered, duplicate-free set of acquired lines. Order is acquisition
/// order, so every prefix is itself a valid mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    n: usize,
    frames: usize,
    lines: Vec<Line>,
    present: Vec<bool>,
}

impl Mask {
    pub fn empty(n: usize, frames: usize) -> Self {
        Self {
            n,
            frames,
            lines: Vec::new(),
            present: vec![false; n * frames],
        }
    }

    pub fn new(n: usize, frames: usize, lines: Vec<Line>) -> Result<Self> {
        let mut mask = Self::empty(n, frames);
        for line in lines {
            mask.push(line)?;
        }
        Ok(mask)
    }

    /// Every line of every frame, frame-major.
    pub fn full(n: usize, frames: usize) -> Self {
        let lines = (0..n * frames).map(|i| Line::from_index(i, n)).collect();
        Self {
            n,
            frames,
            lines,
            present: vec![true; n * frames],
        }
    }

    pub fn push(&mut self, line: Line) -> Result<()> {
        if line.frame >= self.frames || line.row >= self.n {
            return Err(Error::InvalidMask(format!(
                "line ({}, {}) out of range for N={} T={}",
                line.frame, line.row, self.n, self.frames
            )));
        }
        let idx = line.index(self.n);
        if self.present[idx] {
            return Err(Error::InvalidMask(format!(
                "duplicate line ({}, {})",
                line.frame, line.row
            )));
        }
        self.present[idx] = true;
        self.lines.push(line);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.frames)
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Number of k-space samples covered by the mask.
    pub fn sample_count(&self) -> usize {
        self.lines.len() * self.n
    }

    pub fn contains(&self, line: Line) -> bool {
        line.frame < self.frames && line.row < self.n && self.present[line.index(self.n)]
    }

    pub fn prefix(&self, len: usize) -> Mask {
        let mut m = Mask::empty(self.n, self.frames);
        for &l in &self.lines[..len.min(self.lines.len())] {
            m.present[l.index(self.n)] = true;
            m.lines.push(l);
        }
        m
    }

    /// Copy of `self` with `line` appended; `line` must not be present.
    pub(crate) fn with_line(&self, line: Line) -> Mask {
        let mut m = self.clone();
        m.present[line.index(self.n)] = true;
        m.lines.push(line);
        m
    }

    pub fn lines_per_frame(&self) -> Vec<usize> {
        let mut counts = vec![0; self.frames];
        for l in &self.lines {
            counts[l.frame] += 1;
        }
        counts
    }

    /// Unacquired rows of frame `t`, ascending.
    pub fn free_rows(&self, t: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&y| !self.present[t * self.n + y])
            .collect()
    }

    /// Unacquired lines of all frames, in `(frame, row)` order.
    pub fn free_lines(&self) -> Vec<Line> {
        (0..self.n * self.frames)
            .filter(|&i| !self.present[i])
            .map(|i| Line::from_index(i, self.n))
            .collect()
    }

    /// Lines as a sorted set, for order-independent comparisons.
    pub fn sorted_lines(&self) -> Vec<Line> {
        let mut v = self.lines.clone();
        v.sort_unstable();
        v
    }
}

/// Fraction of the k-t grid acquired: `lines / (N * T)`.
pub fn sampling_rate(mask: &Mask) -> f64 {
    mask.len() as f64 / (mask.n() * mask.frames()) as f64
}

/// Number of lines for a target rate, rounded to nearest.
pub fn lines_for_rate(rate: f64, n: usize, frames: usize) -> usize {
    let total = n * frames;
    ((rate * total as f64).round() as usize).min(total)
}

/// Probability mass function over the `N * T` candidate lines.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingDistribution {
    n: usize,
    frames: usize,
    weights: Vec<f64>,
}

impl SamplingDistribution {
    /// Normalizes nonnegative `weights` (indexed by flat line index) onto the
    /// simplex.
    pub fn new(n: usize, frames: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n * frames {
            return Err(Error::Dimension(format!(
                "expected {} weights, got {}",
                n * frames,
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config(
                "weights",
                format!("weight {i} is negative or non-finite"),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::config("weights", "weights sum to zero"));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self { n, frames, weights })
    }

    pub fn uniform(n: usize, frames: usize) -> Self {
        let p = n * frames;
        Self {
            n,
            frames,
            weights: vec![1.0 / p as f64; p],
        }
    }

    /// Uniform on `support`, zero elsewhere.
    pub fn degenerate(n: usize, frames: usize, support: &[Line]) -> Result<Self> {
        let mut w = vec![0.0; n * frames];
        for l in support {
            if l.frame >= frames || l.row >= n {
                return Err(Error::InvalidMask(format!("line {l} out of range")));
            }
            w[l.index(n)] = 1.0;
        }
        Self::new(n, frames, w)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.frames)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, line: Line) -> f64 {
        self.weights[line.index(self.n)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Every unacquired line is a candidate at each step.
    #[serde(rename = "g", alias = "G")]
    Greedy,
    /// `k` random candidates from the current frame, frames visited cyclically.
    #[serde(rename = "sg", alias = "SG")]
    Stochastic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainingMode {
    /// Score on the whole training set.
    #[serde(rename = "v1")]
    Full,
    /// Score on a fresh random batch of `l` training images per step.
    #[serde(rename = "v2")]
    Batch,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Greedy => "G",
            Variant::Stochastic => "SG",
        })
    }
}

impl fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainingMode::Full => "v1",
            TrainingMode::Batch => "v2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub variant: Variant,
    pub mode: TrainingMode,
    /// Total lines in the output mask, warm start included.
    pub budget: usize,
    /// Candidate batch size `k` (stochastic variant only).
    pub sample_batch: usize,
    /// Training batch size `l` (batch mode only).
    pub train_batch: usize,
    pub seed: u64,
    pub decoder: String,
    pub metric: MetricId,
    /// Lines acquired before the first greedy step.
    #[serde(default)]
    pub warm_start: Vec<Line>,
}

impl DesignConfig {
    pub fn new(variant: Variant, mode: TrainingMode, budget: usize) -> Self {
        Self {
            variant,
            mode,
            budget,
            sample_batch: 1,
            train_batch: 1,
            seed: 0,
            decoder: "zf".to_string(),
            metric: MetricId::Psnr,
            warm_start: Vec::new(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.variant, self.mode)
    }

    /// Checks the configuration against volume dims and training-set size.
    pub fn validate(&self, n: usize, frames: usize, m: usize) -> Result<()> {
        if self.budget > n * frames {
            return Err(Error::config(
                "budget",
                format!("{} lines exceeds N*T = {}", self.budget, n * frames),
            ));
        }
        if self.variant == Variant::Stochastic && (self.sample_batch == 0 || self.sample_batch > n) {
            return Err(Error::config(
                "sample_batch",
                format!("k = {} must lie in [1, N = {n}]", self.sample_batch),
            ));
        }
        if m == 0 {
            return Err(Error::config("training", "at least one training image required"));
        }
        if self.mode == TrainingMode::Batch && (self.train_batch == 0 || self.train_batch > m) {
            return Err(Error::config(
                "train_batch",
                format!("l = {} must lie in [1, m = {m}]", self.train_batch),
            ));
        }
        if self.warm_start.len() > self.budget {
            return Err(Error::config(
                "warm_start",
                "more warm-start lines than the budget",
            ));
        }
        Mask::new(n, frames, self.warm_start.clone())
            .map_err(|e| Error::config("warm_start", e.to_string()))?;
        Ok(())
    }
}

/// Evaluation of one mask over a set of volumes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub mask_id: String,
    pub sampling_rate: f64,
    pub values: Vec<f64>,
    pub mean: f64,
    pub decoder: String,
    pub metric: MetricId,
    pub decoder_calls: u64,
    /// PSNR/MSE are computed over the whole volume, not averaged per frame.
    pub averaging: &'static str,
}

impl MetricReport {
    pub fn new(
        mask_id: impl Into<String>,
        sampling_rate: f64,
        values: Vec<f64>,
        decoder: impl Into<String>,
        metric: MetricId,
        decoder_calls: u64,
    ) -> Self {
        let mean = mean(&values);
        Self {
            mask_id: mask_id.into(),
            sampling_rate,
            values,
            mean,
            decoder: decoder.into(),
            metric,
            decoder_calls,
            averaging: "per-volume",
        }
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}
