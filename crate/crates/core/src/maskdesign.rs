//! Greedy (G) and stochastic greedy (SG) mask design.
//!
//! Each iteration scores a set of candidate lines by the mean metric of the
//! reconstructions obtained with the current mask plus that line, over a
//! batch of training volumes, and appends the best candidate:
//!
//! - `G`: candidates are all unacquired lines;
//! - `SG`: candidates are `k` unacquired rows of frame `t`, drawn uniformly
//!   without replacement; `t` starts at 0 and advances cyclically;
//! - `v1`: the batch is the whole training set;
//! - `v2`: the batch is `l` training volumes drawn afresh every iteration.
//!
//! Ties go to the lowest `(frame, row)`. Candidate evaluations run in
//! parallel but are gathered in candidate order before the argmax, so the
//! output does not depend on the number of threads.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use num_rational::Ratio;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::accounting::{predict_calls_from, CallPlan};
use crate::decoders::Decoder;
use crate::error::{Error, Result};
use crate::metrics::MetricId;
use crate::rng::{sample_without_replacement, stream_rng, streams};
use crate::transform::{forward_fft, sample_kspace, KSpaceVolume};
use crate::types::{
    sampling_rate, DesignConfig, DynamicImage, Line, Mask, MetricReport, TrainingMode, Variant,
};

/// Scores masks on a fixed training set and counts decoder invocations.
pub struct Evaluator<'a> {
    images: &'a [DynamicImage],
    spectra: Vec<KSpaceVolume>,
    decoder: &'a dyn Decoder,
    metric: MetricId,
    calls: AtomicU64,
}

impl<'a> Evaluator<'a> {
    pub fn new(images: &'a [DynamicImage], decoder: &'a dyn Decoder, metric: MetricId) -> Result<Self> {
        let dims = images
            .first()
            .map(|x| x.dims())
            .ok_or_else(|| Error::config("training", "at least one volume required"))?;
        if let Some(bad) = images.iter().find(|x| x.dims() != dims) {
            return Err(Error::Dimension(format!(
                "training volumes differ in shape: {:?} vs {:?}",
                dims,
                bad.dims()
            )));
        }
        Ok(Self {
            images,
            spectra: images.par_iter().map(forward_fft).collect(),
            decoder,
            metric,
            calls: AtomicU64::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.images[0].dims()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Metric of one training volume reconstructed from `mask`.
    pub fn score_one(&self, mask: &Mask, index: usize) -> Result<f64> {
        let b = sample_kspace(&self.spectra[index], mask)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        let xhat = self.decoder.decode(&b)?;
        self.metric.score(&self.images[index], &xhat)
    }

    /// Mean metric over `batch` (indices in ascending order).
    pub fn score(&self, mask: &Mask, batch: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &i in batch {
            total += self.score_one(mask, i)?;
        }
        Ok(total / batch.len() as f64)
    }

    /// Per-volume metric for every training volume.
    pub fn score_all(&self, mask: &Mask) -> Result<Vec<f64>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.score_one(mask, i))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Frame the candidates were drawn from (`None` for the G variant).
    pub frame: Option<usize>,
    pub candidates: Vec<Line>,
    pub scores: Vec<f64>,
    pub batch: Vec<usize>,
    pub selected: Line,
    /// The frame held fewer than `k` free rows, so all were evaluated.
    pub shrunk: bool,
    /// Decoder invocations since the start of the run, inclusive.
    pub calls: u64,
}

impl IterationRecord {
    pub fn best_score(&self) -> f64 {
        let i = self.candidates.iter().position(|&c| c == self.selected).unwrap();
        self.scores[i]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignTrace {
    pub label: String,
    pub dims: (usize, usize),
    pub initial: Vec<Line>,
    pub records: Vec<IterationRecord>,
}

impl DesignTrace {
    pub fn decoder_calls(&self) -> u64 {
        self.records.last().map_or(0, |r| r.calls)
    }

    /// Mask held after `iterations` greedy steps.
    pub fn held_mask(&self, iterations: usize) -> Mask {
        let lines = self
            .initial
            .iter()
            .copied()
            .chain(self.records.iter().take(iterations).map(|r| r.selected))
            .collect();
        Mask::new(self.dims.0, self.dims.1, lines).expect("trace lines are distinct")
    }

    /// Checks the recorded argmax, monotone availability, and the
    /// cumulative call counts.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let mut held = Mask::new(self.dims.0, self.dims.1, self.initial.clone()).map_err(|e| e.to_string())?;
        let mut calls = 0u64;
        for r in &self.records {
            if r.candidates.iter().any(|&c| held.contains(c)) {
                return Err(format!("iteration {}: acquired line offered again", r.iteration));
            }
            let best = select_best(&r.candidates, &r.scores)
                .ok_or_else(|| format!("iteration {}: no candidates", r.iteration))?;
            if best != r.selected {
                return Err(format!("iteration {}: selected {} but argmax is {}", r.iteration, r.selected, best));
            }
            calls += (r.candidates.len() * r.batch.len()) as u64;
            if calls != r.calls {
                return Err(format!("iteration {}: calls {} != {}", r.iteration, r.calls, calls));
            }
            held.push(r.selected).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// One JSON object per iteration, newline-terminated.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            let rec = json!({
                "iteration": r.iteration,
                "frame": r.frame,
                "candidates": r.candidates.iter().map(|l| [l.frame, l.row]).collect::<Vec<_>>(),
                "scores": r.scores.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
                "batch": r.batch,
                "selected": [r.selected.frame, r.selected.row],
                "shrunk": r.shrunk,
                "calls": r.calls,
            });
            writeln!(out, "{rec}")?;
        }
        Ok(())
    }
}

/// JSON has no infinities; non-finite scores are written as strings.
pub(crate) fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// First candidate with the maximal score; candidates are in ascending
/// `(frame, row)` order so this implements the lexicographic tie rule.
/// NaN scores never win.
fn select_best(candidates: &[Line], scores: &[f64]) -> Option<Line> {
    let mut best: Option<(Line, f64)> = None;
    for (&c, &s) in candidates.iter().zip(scores) {
        let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((c, s)),
        }
    }
    best.map(|(c, _)| c)
}

/// Runs the design loop until the mask holds `cfg.budget` lines.
pub fn design_mask(
    cfg: &DesignConfig,
    training: &[DynamicImage],
    decoder: &dyn Decoder,
    metric: MetricId,
) -> Result<(Mask, DesignTrace)> {
    let evaluator = Evaluator::new(training, decoder, metric)?;
    design_with(cfg, &evaluator)
}

/// [`design_mask`] on a prepared evaluator. The trace's call counts are
/// measured from the evaluator's counter.
pub fn design_with(cfg: &DesignConfig, evaluator: &Evaluator<'_>) -> Result<(Mask, DesignTrace)> {
    let (n, frames) = evaluator.dims();
    let m = evaluator.len();
    cfg.validate(n, frames, m)?;

    let mut mask = Mask::new(n, frames, cfg.warm_start.clone())?;
    let mut rng = stream_rng(cfg.seed, streams::DESIGN);
    let all_images: Vec<usize> = (0..m).collect();
    let start_calls = evaluator.calls();
    let mut frame = 0usize;
    let mut records = Vec::with_capacity(cfg.budget.saturating_sub(mask.len()));

    while mask.len() < cfg.budget {
        let iteration = records.len();
        let (candidates, cand_frame, shrunk) = match cfg.variant {
            Variant::Greedy => (mask.free_lines(), None, false),
            Variant::Stochastic => {
                // skip frames with nothing left to acquire
                while mask.free_rows(frame).is_empty() {
                    frame = (frame + 1) % frames;
                }
                let free = mask.free_rows(frame);
                let shrunk = free.len() < cfg.sample_batch;
                let rows = sample_without_replacement(&free, cfg.sample_batch, &mut rng);
                let lines = rows.into_iter().map(|y| Line::new(frame, y)).collect();
                (lines, Some(frame), shrunk)
            }
        };
        let batch = match cfg.mode {
            TrainingMode::Full => all_images.clone(),
            TrainingMode::Batch => sample_without_replacement(&all_images, cfg.train_batch, &mut rng),
        };

        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&c| evaluator.score(&mask.with_line(c), &batch))
            .collect::<Result<_>>()?;
        let selected = select_best(&candidates, &scores).expect("candidate set is never empty");
        mask.push(selected)?;
        records.push(IterationRecord {
            iteration,
            frame: cand_frame,
            candidates,
            scores,
            batch,
            selected,
            shrunk,
            calls: evaluator.calls() - start_calls,
        });
        if cfg.variant == Variant::Stochastic {
            frame = (frame + 1) % frames;
        }
    }

    let trace = DesignTrace {
        label: cfg.label(),
        dims: (n, frames),
        initial: cfg.warm_start.clone(),
        records,
    };
    Ok((mask, trace))
}

/// Exhaustive search over all single-line additions to `base`; returns the
/// best line under the same tie rule as the greedy loop.
pub fn best_single_line(base: &Mask, evaluator: &Evaluator<'_>) -> Result<(Line, f64)> {
    let batch: Vec<usize> = (0..evaluator.len()).collect();
    let cands = base.free_lines();
    let scores: Vec<f64> = cands
        .iter()
        .map(|&c| evaluator.score(&base.with_line(c), &batch))
        .collect::<Result<_>>()?;
    let best = select_best(&cands, &scores).ok_or_else(|| Error::InvalidMask("mask is full".into()))?;
    let s = scores[cands.iter().position(|&c| c == best).unwrap()];
    Ok((best, s))
}

/// `true` iff every prefix of `mask` equals the mask the trace held at that
/// iteration, and the lengths agree.
pub fn verify_nestedness(mask: &Mask, trace: &DesignTrace) -> bool {
    if mask.dims() != trace.dims || mask.len() != trace.initial.len() + trace.records.len() {
        return false;
    }
    if mask.lines()[..trace.initial.len()] != trace.initial[..] {
        return false;
    }
    trace
        .records
        .iter()
        .enumerate()
        .all(|(i, r)| mask.lines()[trace.initial.len() + i] == r.selected)
}

/// `a` is an ordered prefix of `b`.
pub fn is_prefix(a: &Mask, b: &Mask) -> bool {
    a.dims() == b.dims() && a.len() <= b.len() && b.lines()[..a.len()] == *a.lines()
}

/// Spread of per-frame line counts: `max_t count(t) - min_t count(t)`.
pub fn frame_balance(mask: &Mask) -> usize {
    let counts = mask.lines_per_frame();
    counts.iter().max().unwrap() - counts.iter().min().unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeedupEstimate {
    /// `(m / l) * (N T / k)` with `l = m` for v1 and `k = N T` for G.
    pub ratio: Ratio<u64>,
    /// Exact decoder calls of G-v1 at the configured budget.
    pub greedy_full_calls: u64,
    /// Exact decoder calls of the configured variant.
    pub variant_calls: u64,
}

pub fn speedup_estimate(cfg: &DesignConfig, m: usize, dims: (usize, usize)) -> SpeedupEstimate {
    let (n, frames) = dims;
    let lines = (n * frames) as u64;
    let l = match cfg.mode {
        TrainingMode::Full => m as u64,
        TrainingMode::Batch => cfg.train_batch as u64,
    };
    let k = match cfg.variant {
        Variant::Greedy => lines,
        Variant::Stochastic => cfg.sample_batch as u64,
    };
    let ratio = Ratio::new(m as u64 * lines, l * k);
    let warm = warm_counts(&cfg.warm_start, n, frames);
    let plan = |variant, mode| CallPlan {
        variant,
        mode,
        n,
        frames,
        m,
        k: cfg.sample_batch,
        l: cfg.train_batch,
        budget: cfg.budget,
    };
    SpeedupEstimate {
        ratio,
        greedy_full_calls: predict_calls_from(&plan(Variant::Greedy, TrainingMode::Full), &warm),
        variant_calls: predict_calls_from(&plan(cfg.variant, cfg.mode), &warm),
    }
}

pub(crate) fn warm_counts(lines: &[Line], n: usize, frames: usize) -> Vec<usize> {
    let mut c = vec![0; frames];
    for l in lines {
        if l.frame < frames && l.row < n {
            c[l.frame] += 1;
        }
    }
    c
}

/// Reconstructs every volume from `mask` and reports the per-volume metric.
pub fn evaluate_mask(
    mask_id: &str,
    mask: &Mask,
    volumes: &[DynamicImage],
    decoder: &dyn Decoder,
    metric: MetricId,
) -> Result<MetricReport> {
    let ev = Evaluator::new(volumes, decoder, metric)?;
    if ev.dims() != mask.dims() {
        return Err(Error::Dimension(format!(
            "mask is {:?}, volumes are {:?}",
            mask.dims(),
            ev.dims()
        )));
    }
    let values = ev.score_all(mask)?;
    Ok(MetricReport::new(
        mask_id,
        sampling_rate(mask),
        values,
        decoder.id(),
        metric,
        ev.calls(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::ZeroFill;
    use crate::phantom::{generate_phantom, phantom_suite};

    fn training(n: usize, t: usize, m: usize, seed: u64) -> Vec<DynamicImage> {
        phantom_suite(n, t, m, seed)
            .iter()
            .map(|s| generate_phantom(s).unwrap())
            .collect()
    }

    fn sg(budget: usize, k: usize, l: usize, mode: TrainingMode, seed: u64) -> DesignConfig {
        let mut c = DesignConfig::new(Variant::Stochastic, mode, budget);
        c.sample_batch = k;
        c.train_batch = l;
        c.seed = seed;
        c
    }

    #[test]
    fn tie_rule_prefers_lowest_line() {
        let c = [Line::new(0, 1), Line::new(0, 3), Line::new(1, 0)];
        assert_eq!(select_best(&c, &[1.0, 2.0, 2.0]), Some(Line::new(0, 3)));
        assert_eq!(select_best(&c, &[f64::INFINITY, 2.0, f64::INFINITY]), Some(Line::new(0, 1)));
        assert_eq!(select_best(&c, &[f64::NAN, 0.0, -1.0]), Some(Line::new(0, 3)));
    }

    #[test]
    fn sg_masks_are_nested_and_balanced() {
        let imgs = training(8, 2, 3, 1);
        let zf = ZeroFill::new();
        for budget in [4, 5] {
            let cfg = sg(budget, 3, 2, TrainingMode::Batch, 9);
            let (mask, trace) = design_mask(&cfg, &imgs, &zf, MetricId::Psnr).unwrap();
            assert_eq!(mask.len(), budget);
            assert!(verify_nestedness(&mask, &trace));
            assert_eq!(frame_balance(&mask), budget % 2);
            trace.check_consistency().unwrap();
        }
    }

    #[test]
    fn swapped_lines_fail_nestedness() {
        let imgs = training(8, 2, 2, 1);
        let (mask, trace) = design_mask(&sg(4, 4, 1, TrainingMode::Batch, 1), &imgs, &ZeroFill::new(), MetricId::Psnr).unwrap();
        let mut lines = mask.lines().to_vec();
        lines.swap(1, 2);
        let swapped = Mask::new(8, 2, lines).unwrap();
        assert!(!verify_nestedness(&swapped, &trace));
    }

    #[test]
    fn maximal_batches_remove_randomness() {
        let imgs = training(8, 2, 3, 4);
        let zf = ZeroFill::new();
        let a = design_mask(&sg(6, 8, 3, TrainingMode::Batch, 1), &imgs, &zf, MetricId::Psnr).unwrap();
        let b = design_mask(&sg(6, 8, 3, TrainingMode::Batch, 987), &imgs, &zf, MetricId::Psnr).unwrap();
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn shrinks_when_frame_runs_out() {
        let imgs = training(8, 1, 1, 4);
        let cfg = sg(8, 5, 1, TrainingMode::Full, 3);
        let (mask, trace) = design_mask(&cfg, &imgs, &ZeroFill::new(), MetricId::Psnr).unwrap();
        assert_eq!(mask.len(), 8);
        let sizes: Vec<usize> = trace.records.iter().map(|r| r.candidates.len()).collect();
        assert_eq!(sizes, vec![5, 5, 5, 5, 4, 3, 2, 1]);
        assert!(trace.records[4..].iter().all(|r| r.shrunk));
        assert!(!trace.records[3].shrunk);
    }

    #[test]
    fn budget_above_grid_is_an_error() {
        let imgs = training(8, 2, 1, 4);
        let cfg = DesignConfig::new(Variant::Greedy, TrainingMode::Full, 17);
        assert!(design_mask(&cfg, &imgs, &ZeroFill::new(), MetricId::Psnr).is_err());
    }

    #[test]
    fn warm_start_is_kept_as_prefix() {
        let imgs = training(8, 2, 2, 4);
        let mut cfg = sg(6, 3, 1, TrainingMode::Batch, 2);
        cfg.warm_start = vec![Line::new(0, 0), Line::new(1, 0)];
        let (mask, trace) = design_mask(&cfg, &imgs, &ZeroFill::new(), MetricId::Psnr).unwrap();
        assert_eq!(&mask.lines()[..2], &cfg.warm_start[..]);
        assert!(verify_nestedness(&mask, &trace));
        assert_eq!(trace.records.len(), 4);
    }

    #[test]
    fn speedup_examples() {
        let mut cfg = sg(1, 38, 1, TrainingMode::Batch, 0);
        assert_eq!(speedup_estimate(&cfg, 3, (152, 17)).ratio, Ratio::from_integer(204));
        cfg.train_batch = 3;
        assert_eq!(speedup_estimate(&cfg, 3, (152, 17)).ratio, Ratio::from_integer(68));
        let g = DesignConfig::new(Variant::Greedy, TrainingMode::Full, 1);
        assert_eq!(speedup_estimate(&g, 3, (152, 17)).ratio, Ratio::from_integer(1));
    }

    #[test]
    fn trace_jsonl_has_one_line_per_iteration() {
        let imgs = training(8, 2, 2, 4);
        let (_, trace) = design_mask(&sg(3, 2, 1, TrainingMode::Batch, 5), &imgs, &ZeroFill::new(), MetricId::Psnr).unwrap();
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        for line in text.lines() {
            let v: Value = serde_json::from_str(line).unwrap();
            assert!(v["calls"].as_u64().is_some());
        }
    }
}
