//! Variable-density baselines and the PMF machinery behind them.
//!
//! A Gaussian density over phase-encode rows (same in every frame) is
//! combined with `c` fully sampled central rows per frame. Coherence-VD picks
//! the grid cell whose masks have the lowest average PSF sidelobe ratio;
//! LB-VD picks the cell whose masks give the best average training metric.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::Decoder;
use crate::error::{Error, Result};
use crate::maskdesign::Evaluator;
use crate::metrics::MetricId;
use crate::rng::{derive_seed, stream_rng, streams};
use crate::transform::{inverse_fft, KSpaceVolume};
use crate::types::{lines_for_rate, DynamicImage, Line, Mask, SamplingDistribution};

/// Gaussian width (fraction of `N`), central rows per frame, target rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdParams {
    pub width: f64,
    pub central: usize,
    pub rate: f64,
}

impl VdParams {
    pub fn budget(&self, dims: (usize, usize)) -> usize {
        lines_for_rate(self.rate, dims.0, dims.1)
    }

    pub fn validate(&self, dims: (usize, usize)) -> Result<()> {
        let (n, frames) = dims;
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::config("width", "must be positive"));
        }
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::config("rate", "must lie in (0, 1]"));
        }
        if self.central > n {
            return Err(Error::config("central", format!("{} exceeds N = {n}", self.central)));
        }
        if self.central * frames > self.budget(dims) {
            return Err(Error::config(
                "central",
                format!(
                    "{} central rows x {frames} frames exceed the {}-line budget",
                    self.central,
                    self.budget(dims)
                ),
            ));
        }
        Ok(())
    }
}

/// Wrap-aware distance of row `y` from DC.
fn freq_distance(y: usize, n: usize) -> usize {
    y.min(n - y)
}

/// The `c` rows closest to DC, ties broken by row index.
pub fn central_rows(c: usize, n: usize) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.sort_by_key(|&y| (freq_distance(y, n), y));
    rows.truncate(c);
    rows
}

/// Central rows of every frame, frame-major.
pub fn forced_lines(params: &VdParams, dims: (usize, usize)) -> Vec<Line> {
    let rows = central_rows(params.central, dims.0);
    (0..dims.1)
        .flat_map(|t| rows.iter().map(move |&y| Line::new(t, y)))
        .collect()
}

/// Line weights `∝ exp(-d(y)^2 / (2 (width N)^2))`, identical across frames.
/// The central band is not encoded here; it enters through the forced lines
/// passed to [`draw_mask`].
pub fn gaussian_vd_pmf(params: &VdParams, dims: (usize, usize)) -> Result<SamplingDistribution> {
    let (n, frames) = dims;
    if !(params.width > 0.0) {
        return Err(Error::config("width", "must be positive"));
    }
    let s = params.width * n as f64;
    let row_w: Vec<f64> = (0..n)
        .map(|y| {
            let d = freq_distance(y, n) as f64;
            (-d * d / (2.0 * s * s)).exp()
        })
        .collect();
    let weights = (0..frames).flat_map(|_| row_w.iter().copied()).collect();
    SamplingDistribution::new(n, frames, weights)
}

/// Draws an `n`-line mask: `forced` first, then lines without replacement
/// with probability proportional to their remaining weight.
///
/// Sequential weighted draws are realized with exponential keys
/// `ln(u) / w`: sorting by key gives the same ordered-sample distribution
/// (Efraimidis–Spirakis). Once positive weight is exhausted, remaining lines
/// are taken uniformly.
pub fn draw_mask(f: &SamplingDistribution, n: usize, forced: &[Line], seed: u64) -> Result<Mask> {
    let (rows, frames) = f.dims();
    let total = rows * frames;
    if n > total {
        return Err(Error::config("n", format!("{n} lines exceeds N*T = {total}")));
    }
    if forced.len() > n {
        return Err(Error::config(
            "forced",
            format!("{} forced lines exceed the {n}-line budget", forced.len()),
        ));
    }
    let mut mask = Mask::new(rows, frames, forced.to_vec())?;
    let mut rng = stream_rng(seed, streams::VD_DRAW);
    let mut keyed: Vec<(bool, f64, usize)> = (0..total)
        .filter(|&i| !mask.contains(Line::from_index(i, rows)))
        .map(|i| {
            let u: f64 = 1.0 - rng.random::<f64>();
            let w = f.weights()[i];
            if w > 0.0 {
                (true, u.ln() / w, i)
            } else {
                (false, u, i)
            }
        })
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    for &(_, _, i) in keyed.iter().take(n - forced.len()) {
        mask.push(Line::from_index(i, rows))?;
    }
    Ok(mask)
}

/// Largest off-center PSF magnitude relative to the center, maximized over
/// frames. The PSF of a frame is the inverse 2-D DFT of its row indicator
/// replicated across columns. A frame with no lines counts as 1.
pub fn coherence(mask: &Mask) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::InvalidMask("coherence of an empty mask".into()));
    }
    let (n, frames) = mask.dims();
    let mut k = KSpaceVolume::zeros(n, frames);
    for l in mask.lines() {
        let start = (l.frame * n + l.row) * n;
        for z in &mut k.data_mut()[start..start + n] {
            z.re = 1.0;
        }
    }
    let psf = inverse_fft(&k);
    let mut worst: f64 = 0.0;
    for t in 0..frames {
        let frame = psf.frame(t);
        let center = frame[0].norm();
        let c = if center == 0.0 {
            1.0
        } else {
            frame[1..].iter().map(|z| z.norm()).fold(0.0, f64::max) / center
        };
        worst = worst.max(c);
    }
    Ok(worst)
}

/// Widths and central-row counts; cells are visited width-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdGrid {
    pub widths: Vec<f64>,
    pub central: Vec<usize>,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

impl VdGrid {
    /// Five widths in `[0.05, 0.3]`, central rows `{2, 7, 13, 18}`.
    pub fn desk() -> Self {
        Self::spanning(5, 4)
    }

    /// Ten widths and ten central-row counts over the same ranges.
    pub fn full() -> Self {
        Self::spanning(10, 10)
    }

    pub fn spanning(widths: usize, central: usize) -> Self {
        Self {
            widths: linspace(0.05, 0.3, widths),
            central: linspace(2.0, 18.0, central)
                .into_iter()
                .map(|c| c.round() as usize)
                .collect(),
        }
    }

    pub fn cells(&self, rate: f64) -> Vec<VdParams> {
        self.widths
            .iter()
            .flat_map(|&width| {
                self.central
                    .iter()
                    .map(move |&central| VdParams { width, central, rate })
            })
            .collect()
    }
}

/// Outcome of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub params: VdParams,
    /// `None` when the cell is infeasible at this rate (too many central rows).
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineResult {
    pub params: VdParams,
    pub mask: Mask,
    /// Mean criterion of the winning cell (coherence or metric).
    pub score: f64,
    pub cells: Vec<CellResult>,
}

/// Running mean and variance. Equal values leave the mean untouched, so a
/// constant stream (including a constant `+inf`) has exactly that mean.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        if self.count == 1 {
            self.mean = x;
            return;
        }
        if x == self.mean {
            return;
        }
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

fn cell_masks(params: &VdParams, dims: (usize, usize), draws: usize, seed: u64, cell: usize) -> Result<Vec<Mask>> {
    let f = gaussian_vd_pmf(params, dims)?;
    let forced = forced_lines(params, dims);
    let n = params.budget(dims);
    (0..draws)
        .map(|j| draw_mask(&f, n, &forced, derive_seed(seed, &[cell as u64, j as u64])))
        .collect()
}

fn representative(params: &VdParams, dims: (usize, usize), seed: u64) -> Result<Mask> {
    let f = gaussian_vd_pmf(params, dims)?;
    draw_mask(
        &f,
        params.budget(dims),
        &forced_lines(params, dims),
        derive_seed(seed, &[u64::MAX]),
    )
}

/// Index of the best feasible cell; the first in grid order wins ties.
fn pick(cells: &[CellResult], better: impl Fn(f64, f64) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cells.iter().enumerate() {
        if let Some(v) = c.mean {
            match best {
                Some((_, b)) if !better(v, b) => {}
                _ => best = Some((i, v)),
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Grid search minimizing the mean coherence of `draws` masks per cell.
pub fn coherence_vd_design(rate: f64, dims: (usize, usize), grid: &VdGrid, draws: usize, seed: u64) -> Result<BaselineResult> {
    let cells = grid.cells(rate);
    if cells.is_empty() || draws == 0 {
        return Err(Error::config("grid", "needs at least one cell and one draw"));
    }
    let results: Vec<CellResult> = cells
        .par_iter()
        .enumerate()
        .map(|(i, p)| -> Result<CellResult> {
            if p.validate(dims).is_err() {
                return Ok(CellResult { params: *p, mean: None, std: None });
            }
            let mut acc = Welford::default();
            for mask in cell_masks(p, dims, draws, seed, i)? {
                acc.push(coherence(&mask)?);
            }
            Ok(CellResult {
                params: *p,
                mean: Some(acc.mean()),
                std: Some(acc.variance().sqrt()),
            })
        })
        .collect::<Result<_>>()?;
    let win = pick(&results, |v, b| v < b)
        .ok_or_else(|| Error::config("grid", "no cell is feasible at this rate"))?;
    let params = results[win].params;
    Ok(BaselineResult {
        params,
        mask: representative(&params, dims, seed)?,
        score: results[win].mean.unwrap(),
        cells: results,
    })
}

/// Grid search maximizing the mean training metric over `draws` masks per
/// cell.
#[allow(clippy::too_many_arguments)]
pub fn lbvd_design(
    rate: f64,
    dims: (usize, usize),
    grid: &VdGrid,
    draws: usize,
    training: &[DynamicImage],
    decoder: &dyn Decoder,
    metric: MetricId,
    seed: u64,
) -> Result<BaselineResult> {
    let cells = grid.cells(rate);
    if cells.is_empty() || draws == 0 {
        return Err(Error::config("grid", "needs at least one cell and one draw"));
    }
    let evaluator = Evaluator::new(training, decoder, metric)?;
    if evaluator.dims() != dims {
        return Err(Error::Dimension(format!(
            "training volumes are {:?}, grid dims {:?}",
            evaluator.dims(),
            dims
        )));
    }
    let all: Vec<usize> = (0..evaluator.len()).collect();
    let results: Vec<CellResult> = cells
        .iter()
        .enumerate()
        .map(|(i, p)| -> Result<CellResult> {
            if p.validate(dims).is_err() {
                return Ok(CellResult { params: *p, mean: None, std: None });
            }
            let masks = cell_masks(p, dims, draws, seed, i)?;
            let scores: Vec<f64> = masks
                .par_iter()
                .map(|m| evaluator.score(m, &all))
                .collect::<Result<_>>()?;
            let mut acc = Welford::default();
            scores.iter().for_each(|&s| acc.push(s));
            Ok(CellResult {
                params: *p,
                mean: Some(acc.mean()),
                std: Some(acc.variance().sqrt()),
            })
        })
        .collect::<Result<_>>()?;
    let win = pick(&results, |v, b| v > b)
        .ok_or_else(|| Error::config("grid", "no cell is feasible at this rate"))?;
    let params = results[win].params;
    Ok(BaselineResult {
        params,
        mask: representative(&params, dims, seed)?,
        score: results[win].mean.unwrap(),
        cells: results,
    })
}

/// Uniformly random mask with `n` lines (no forced rows).
pub fn uniform_random_mask(dims: (usize, usize), n: usize, seed: u64) -> Result<Mask> {
    draw_mask(&SamplingDistribution::uniform(dims.0, dims.1), n, &[], seed)
}

/// Largest problem `prop_check` will enumerate, in candidate lines.
pub const PROP_CHECK_MAX_LINES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct PropReport {
    /// Monte-Carlo estimate of `E_{Ω~f}[η_m(Ω)]`.
    pub mc_mean: f64,
    pub mc_std_error: f64,
    pub samples: usize,
    /// `max_{|Ω| = n} η_m(Ω)` by enumeration.
    pub brute_max: f64,
    pub argmax: Vec<Line>,
    pub masks_enumerated: usize,
    /// `mc_mean <= brute_max + 3 * mc_std_error`.
    pub bound_holds: bool,
    /// Monte-Carlo mean under the PMF degenerate on `argmax`.
    pub degenerate_mean: f64,
    pub degenerate_exact: bool,
}

fn combinations(p: usize, n: usize, mut visit: impl FnMut(&[usize])) {
    if n > p {
        return;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        visit(&idx);
        let mut i = n;
        while i > 0 && idx[i - 1] == p - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Compares the expected empirical performance under `f` with the best
/// fixed `n`-line mask, on a problem small enough to enumerate.
#[allow(clippy::too_many_arguments)]
pub fn prop_check(
    f: &SamplingDistribution,
    n: usize,
    samples: usize,
    training: &[DynamicImage],
    decoder: &dyn Decoder,
    metric: MetricId,
    seed: u64,
) -> Result<PropReport> {
    let dims = f.dims();
    let p = dims.0 * dims.1;
    if p > PROP_CHECK_MAX_LINES {
        return Err(Error::TooLarge(p));
    }
    if n == 0 || n > p || samples == 0 {
        return Err(Error::config("n", format!("need 1 <= n <= {p} and samples >= 1")));
    }
    let evaluator = Evaluator::new(training, decoder, metric)?;
    if evaluator.dims() != dims {
        return Err(Error::Dimension(format!("{:?} vs {:?}", evaluator.dims(), dims)));
    }
    let all: Vec<usize> = (0..evaluator.len()).collect();

    let mut sets = Vec::new();
    combinations(p, n, |c| sets.push(c.to_vec()));
    let values: Vec<f64> = sets
        .par_iter()
        .map(|s| {
            let lines = s.iter().map(|&i| Line::from_index(i, dims.0)).collect();
            evaluator.score(&Mask::new(dims.0, dims.1, lines)?, &all)
        })
        .collect::<Result<_>>()?;
    let table: HashMap<Vec<usize>, f64> = sets.iter().cloned().zip(values.iter().copied()).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let brute_max = values[best];
    let argmax: Vec<Line> = sets[best].iter().map(|&i| Line::from_index(i, dims.0)).collect();

    let estimate = |dist: &SamplingDistribution, stream: u64| -> Result<Welford> {
        let mut acc = Welford::default();
        for s in 0..samples {
            let mask = draw_mask(dist, n, &[], derive_seed(seed, &[stream, s as u64]))?;
            let mut key: Vec<usize> = mask.lines().iter().map(|l| l.index(dims.0)).collect();
            key.sort_unstable();
            acc.push(table[&key]);
        }
        Ok(acc)
    };
    let mc = estimate(f, streams::PROP_CHECK)?;
    let degenerate = SamplingDistribution::degenerate(dims.0, dims.1, &argmax)?;
    let dg = estimate(&degenerate, streams::PROP_CHECK + 1)?;

    Ok(PropReport {
        mc_mean: mc.mean(),
        mc_std_error: mc.std_error(),
        samples,
        brute_max,
        argmax,
        masks_enumerated: sets.len(),
        bound_holds: mc.mean() <= brute_max + 3.0 * mc.std_error(),
        degenerate_mean: dg.mean(),
        degenerate_exact: dg.mean() == brute_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::forward_fft;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn central_rows_follow_frequency_distance() {
        assert_eq!(central_rows(0, 8), Vec::<usize>::new());
        assert_eq!(central_rows(1, 8), vec![0]);
        assert_eq!(central_rows(3, 8), vec![0, 1, 7]);
        assert_eq!(central_rows(5, 8), vec![0, 1, 7, 2, 6]);
    }

    #[test]
    fn wide_gaussian_is_nearly_uniform() {
        let p = VdParams { width: 1e3, central: 0, rate: 0.5 };
        let f = gaussian_vd_pmf(&p, (16, 3)).unwrap();
        let max = f.weights().iter().cloned().fold(0.0, f64::max);
        let min = f.weights().iter().cloned().fold(1.0, f64::min);
        assert!(max / min - 1.0 < 1e-6);
        assert!((f.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dc_to_nyquist_ratio_matches_closed_form() {
        let p = VdParams { width: 0.15, central: 0, rate: 0.5 };
        let f = gaussian_vd_pmf(&p, (16, 2)).unwrap();
        let ratio = f.weight(Line::new(0, 0)) / f.weight(Line::new(0, 8));
        // d = 8, s = 0.15 * 16 = 2.4
        let expect = (64.0f64 / (2.0 * 2.4 * 2.4)).exp();
        assert!((ratio - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn degenerate_pmf_gives_its_support() {
        let support = vec![Line::new(0, 2), Line::new(1, 5), Line::new(2, 7)];
        let f = SamplingDistribution::degenerate(8, 3, &support).unwrap();
        for seed in 0..20 {
            let m = draw_mask(&f, 3, &[], seed).unwrap();
            assert_eq!(m.sorted_lines(), support);
        }
    }

    #[test]
    fn full_budget_gives_full_mask() {
        let f = gaussian_vd_pmf(&VdParams { width: 0.1, central: 0, rate: 1.0 }, (8, 2)).unwrap();
        let m = draw_mask(&f, 16, &[Line::new(1, 1)], 3).unwrap();
        assert_eq!(m.sorted_lines(), Mask::full(8, 2).sorted_lines());
        assert_eq!(m.lines()[0], Line::new(1, 1));
    }

    #[test]
    fn forced_lines_come_first() {
        let p = VdParams { width: 0.2, central: 2, rate: 0.5 };
        let forced = forced_lines(&p, (8, 2));
        let f = gaussian_vd_pmf(&p, (8, 2)).unwrap();
        let m = draw_mask(&f, 8, &forced, 1).unwrap();
        assert_eq!(&m.lines()[..4], &forced[..]);
        assert!(draw_mask(&f, 3, &forced, 1).is_err());
    }

    #[test]
    fn coherence_extremes() {
        assert!(coherence(&Mask::full(16, 2)).unwrap() < 1e-12);
        let single = Mask::new(16, 2, vec![Line::new(0, 3), Line::new(1, 0)]).unwrap();
        assert!((coherence(&single).unwrap() - 1.0).abs() < 1e-12);
        assert!(coherence(&Mask::empty(16, 2)).is_err());
    }

    #[test]
    fn coherence_matches_naive_psf() {
        let n = 16;
        let lines: Vec<Line> = (0..n).step_by(2).map(|y| Line::new(0, y)).collect();
        let mask = Mask::new(n, 1, lines.clone()).unwrap();
        // naive inverse DFT of the replicated row indicator
        let mut psf = vec![Complex64::new(0.0, 0.0); n * n];
        for y in 0..n {
            for x in 0..n {
                for l in &lines {
                    for kx in 0..n {
                        let ph = 2.0 * PI * ((l.row * y) as f64 + (kx * x) as f64) / n as f64;
                        psf[y * n + x] += Complex64::from_polar(1.0, ph);
                    }
                }
            }
        }
        let center = psf[0].norm();
        let oracle = psf[1..].iter().map(|z| z.norm()).fold(0.0, f64::max) / center;
        assert!((coherence(&mask).unwrap() - oracle).abs() < 1e-9);
        // alternate rows alias at half field of view
        assert!((oracle - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coherence_is_bounded_when_dc_present() {
        let f = gaussian_vd_pmf(&VdParams { width: 0.2, central: 1, rate: 0.3 }, (16, 4)).unwrap();
        for seed in 0..10 {
            let forced: Vec<Line> = (0..4).map(|t| Line::new(t, 0)).collect();
            let m = draw_mask(&f, 19, &forced, seed).unwrap();
            let c = coherence(&m).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&c));
        }
    }

    #[test]
    fn grid_spans_documented_ranges() {
        let g = VdGrid::desk();
        assert_eq!(g.widths.len(), 5);
        assert!((g.widths[0] - 0.05).abs() < 1e-15 && (g.widths[4] - 0.3).abs() < 1e-15);
        assert_eq!(g.central, vec![2, 7, 13, 18]);
        let full = VdGrid::full();
        assert_eq!(full.cells(0.1).len(), 100);
        assert_eq!(full.central.first(), Some(&2));
        assert_eq!(full.central.last(), Some(&18));
    }

    #[test]
    fn single_cell_coherence_design() {
        let grid = VdGrid { widths: vec![0.2], central: vec![2] };
        let r = coherence_vd_design(0.25, (16, 4), &grid, 5, 7).unwrap();
        assert_eq!(r.params.width, 0.2);
        assert_eq!(r.mask.len(), 16);
        let again = coherence_vd_design(0.25, (16, 4), &grid, 5, 7).unwrap();
        assert_eq!(r.mask, again.mask);
    }

    #[test]
    fn full_rate_coherence_design_is_full_mask() {
        let r = coherence_vd_design(1.0, (8, 2), &VdGrid::desk(), 3, 1).unwrap();
        assert_eq!(r.mask.len(), 16);
        assert!(r.score < 1e-12);
    }

    #[test]
    fn infeasible_cells_are_skipped() {
        let grid = VdGrid { widths: vec![0.1], central: vec![18, 2] };
        let r = coherence_vd_design(0.1, (32, 8), &grid, 2, 0).unwrap();
        assert!(r.cells[0].mean.is_none());
        assert_eq!(r.params.central, 2);
        let bad = VdGrid { widths: vec![0.1], central: vec![18] };
        assert!(coherence_vd_design(0.1, (32, 8), &bad, 2, 0).is_err());
    }

    #[test]
    fn combinations_enumerate_binomial() {
        let mut count = 0;
        combinations(8, 2, |c| {
            assert!(c[0] < c[1]);
            count += 1;
        });
        assert_eq!(count, 28);
        let mut all = 0;
        combinations(5, 5, |_| all += 1);
        assert_eq!(all, 1);
    }

    #[test]
    fn welford_constant_stream_is_exact() {
        let mut w = Welford::default();
        let v = 23.456789012345678;
        for _ in 0..10_000 {
            w.push(v);
        }
        assert_eq!(w.mean(), v);
        assert_eq!(w.std_error(), 0.0);
    }

    #[test]
    fn prop_check_rejects_large_problems() {
        let f = SamplingDistribution::uniform(8, 3);
        let imgs = vec![DynamicImage::zeros(8, 3)];
        let zf = crate::decoders::ZeroFill::new();
        assert!(matches!(
            prop_check(&f, 2, 10, &imgs, &zf, MetricId::Psnr, 0),
            Err(Error::TooLarge(24))
        ));
        let _ = forward_fft(&imgs[0]);
    }
}
