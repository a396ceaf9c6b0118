//! Exact decoder-call bookkeeping and the batch-size sweep.

use rayon::prelude::*;

use crate::decoders::Decoder;
use crate::error::Result;
use crate::maskdesign::{design_mask, evaluate_mask};
use crate::metrics::MetricId;
use crate::types::{lines_for_rate, DesignConfig, DynamicImage, TrainingMode, Variant};

/// Inputs of the call-count model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CallPlan {
    pub variant: Variant,
    pub mode: TrainingMode,
    pub n: usize,
    pub frames: usize,
    /// Training set size.
    pub m: usize,
    pub k: usize,
    pub l: usize,
    /// Final mask size in lines.
    pub budget: usize,
}

/// Decoder calls made by a run with an empty initial mask:
///
/// - `G-v1`: `m * Σ_{i<n} (N T - i)`
/// - `SG-v1`: `m * Σ_{i<n} min(k, free rows in frame t_i)`
/// - `SG-v2`: same with `l` in place of `m`
pub fn predict_calls(plan: &CallPlan) -> u64 {
    predict_calls_from(plan, &vec![0; plan.frames])
}

/// [`predict_calls`] when `initial[t]` lines of frame `t` are already held.
/// Per-frame counts evolve deterministically under frame cycling, so the
/// count is exact even when frames run short of free rows.
pub fn predict_calls_from(plan: &CallPlan, initial: &[usize]) -> u64 {
    let batch = match plan.mode {
        TrainingMode::Full => plan.m,
        TrainingMode::Batch => plan.l,
    } as u64;
    let total_lines = plan.n * plan.frames;
    let mut counts = initial.to_vec();
    let mut held: usize = counts.iter().sum();
    let mut frame = 0;
    let mut calls = 0u64;
    while held < plan.budget.min(total_lines) {
        let candidates = match plan.variant {
            Variant::Greedy => total_lines - held,
            Variant::Stochastic => {
                while counts[frame] == plan.n {
                    frame = (frame + 1) % plan.frames;
                }
                let c = plan.k.min(plan.n - counts[frame]);
                counts[frame] += 1;
                frame = (frame + 1) % plan.frames;
                c
            }
        };
        calls += candidates as u64 * batch;
        held += 1;
    }
    calls
}

/// One row of the batch-size table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub seed: u64,
    pub rate: f64,
    pub metric: MetricId,
    pub value: f64,
    /// Decoder calls spent designing the mask up to this rate.
    pub calls: u64,
}

pub const SWEEP_HEADER: &str = "k,seed,rate,metric,value,calls";

/// Runs the SG design for every `(k, seed)` pair up to the largest rate and
/// evaluates each nested prefix on `test`. Rows are sorted by
/// `(k, seed, rate)`.
#[allow(clippy::too_many_arguments)]
pub fn batch_sweep(
    template: &DesignConfig,
    ks: &[usize],
    seeds: &[u64],
    rates: &[f64],
    train: &[DynamicImage],
    test: &[DynamicImage],
    decoder: &dyn Decoder,
    metric: MetricId,
) -> Result<Vec<SweepRow>> {
    let (n, frames) = train
        .first()
        .map(|x| x.dims())
        .ok_or_else(|| crate::error::Error::config("training", "empty"))?;
    let mut rates = rates.to_vec();
    rates.sort_by(f64::total_cmp);
    let budgets: Vec<usize> = rates.iter().map(|&r| lines_for_rate(r, n, frames)).collect();
    let max_budget = budgets.iter().copied().max().unwrap_or(0);

    let cells: Vec<(usize, u64)> = ks
        .iter()
        .flat_map(|&k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let per_cell: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(k, seed)| -> Result<Vec<SweepRow>> {
            let mut cfg = template.clone();
            cfg.variant = Variant::Stochastic;
            cfg.sample_batch = k;
            cfg.seed = seed;
            cfg.budget = max_budget;
            let (mask, trace) = design_mask(&cfg, train, decoder, metric)?;
            let warm = cfg.warm_start.len();
            rates
                .iter()
                .zip(&budgets)
                .map(|(&rate, &b)| {
                    let prefix = mask.prefix(b);
                    let calls = if b > warm { trace.records[b - warm - 1].calls } else { 0 };
                    let report = evaluate_mask("sweep", &prefix, test, decoder, metric)?;
                    Ok(SweepRow {
                        k,
                        seed,
                        rate,
                        metric,
                        value: report.mean,
                        calls,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<SweepRow> = per_cell.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.k, a.seed).cmp(&(b.k, b.seed)).then(a.rate.total_cmp(&b.rate)));
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            r.seed,
            fmt_g6(r.rate),
            r.metric,
            fmt_g6(r.value),
            r.calls
        ));
    }
    s
}

/// Six significant digits, `%g` style: fixed notation for exponents in
/// `[-4, 6)`, scientific otherwise, trailing zeros trimmed.
pub fn fmt_g6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(variant: Variant, mode: TrainingMode, n: usize, frames: usize, m: usize, k: usize, l: usize, budget: usize) -> CallPlan {
        CallPlan { variant, mode, n, frames, m, k, l, budget }
    }

    #[test]
    fn greedy_full_count_by_hand() {
        // N*T = 16, m = 2, n = 2: 2 * (16 + 15)
        assert_eq!(predict_calls(&plan(Variant::Greedy, TrainingMode::Full, 4, 4, 2, 1, 1, 2)), 62);
    }

    #[test]
    fn sg_batch_count_is_product() {
        assert_eq!(predict_calls(&plan(Variant::Stochastic, TrainingMode::Batch, 8, 2, 3, 4, 1, 3)), 12);
        assert_eq!(predict_calls(&plan(Variant::Stochastic, TrainingMode::Full, 8, 2, 3, 4, 1, 3)), 36);
    }

    #[test]
    fn sg_count_caps_at_free_rows() {
        // N = 4, T = 1, k = 3: candidates 3, 3, 2, 1
        assert_eq!(predict_calls(&plan(Variant::Stochastic, TrainingMode::Batch, 4, 1, 1, 3, 1, 4)), 9);
    }

    #[test]
    fn cardiac_scale_ratio_is_near_204() {
        let g = predict_calls(&plan(Variant::Greedy, TrainingMode::Full, 152, 17, 3, 38, 1, 2)) as f64;
        let s = predict_calls(&plan(Variant::Stochastic, TrainingMode::Batch, 152, 17, 3, 38, 1, 2)) as f64;
        assert!((g / s - 204.0).abs() < 0.1, "{}", g / s);
    }

    #[test]
    fn g6_formatting() {
        assert_eq!(fmt_g6(0.25), "0.25");
        assert_eq!(fmt_g6(31.234567), "31.2346");
        assert_eq!(fmt_g6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g6(0.0000123456), "1.23456e-05");
        assert_eq!(fmt_g6(100.0), "100");
        assert_eq!(fmt_g6(999999.7), "1e+06");
        assert_eq!(fmt_g6(-2.5), "-2.5");
        assert_eq!(fmt_g6(f64::INFINITY), "inf");
    }
}
