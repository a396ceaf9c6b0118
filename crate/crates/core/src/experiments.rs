//! Metric-versus-rate comparison across mask design methods.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::accounting::fmt_g6;
use crate::baselines::{coherence_vd_design, lbvd_design, uniform_random_mask, VdGrid};
use crate::decoders::Decoder;
use crate::error::{Error, Result};
use crate::maskdesign::{design_mask, evaluate_mask};
use crate::metrics::MetricId;
use crate::rng::derive_seed;
use crate::types::{lines_for_rate, DesignConfig, DynamicImage, Mask, TrainingMode, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sg,
    G,
    CoherenceVd,
    LbVd,
    UniformRandom,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Sg, Method::G, Method::CoherenceVd, Method::LbVd, Method::UniformRandom];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sg => "sg",
            Method::G => "g",
            Method::CoherenceVd => "coherence-vd",
            Method::LbVd => "lb-vd",
            Method::UniformRandom => "uniform-random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "method",
                id: s.to_string(),
            })
    }
}

/// What to compare and how.
#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub methods: Vec<Method>,
    pub rates: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Template for the `sg` method; `g` uses the same training mode.
    pub design: DesignConfig,
    pub grid: VdGrid,
    pub draws: usize,
}

/// One method at one rate for one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedResult {
    pub method: Method,
    pub rate: f64,
    pub seed: u64,
    pub value: f64,
    pub mask: Mask,
}

/// Mean over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub method: Method,
    pub rate: f64,
    pub metric: MetricId,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

pub const METHOD_SWEEP_HEADER: &str = "method,rate,metric,mean,std,seeds";

/// Masks for one method at every rate of the (ascending) ladder.
#[allow(clippy::too_many_arguments)]
pub fn method_masks(
    method: Method,
    plan: &SweepPlan,
    rates: &[f64],
    seed: u64,
    dims: (usize, usize),
    train: &[DynamicImage],
    decoder: &dyn Decoder,
    metric: MetricId,
) -> Result<Vec<Mask>> {
    let (n, frames) = dims;
    let budgets: Vec<usize> = rates.iter().map(|&r| lines_for_rate(r, n, frames)).collect();
    match method {
        Method::Sg | Method::G => {
            let mut cfg = plan.design.clone();
            cfg.variant = if method == Method::Sg { Variant::Stochastic } else { Variant::Greedy };
            cfg.seed = seed;
            cfg.budget = budgets.iter().copied().max().unwrap_or(0).max(cfg.warm_start.len());
            let (mask, _) = design_mask(&cfg, train, decoder, metric)?;
            Ok(budgets.iter().map(|&b| mask.prefix(b.max(cfg.warm_start.len()))).collect())
        }
        Method::CoherenceVd => rates
            .iter()
            .map(|&r| coherence_vd_design(r, dims, &plan.grid, plan.draws, seed).map(|b| b.mask))
            .collect(),
        Method::LbVd => rates
            .iter()
            .map(|&r| lbvd_design(r, dims, &plan.grid, plan.draws, train, decoder, metric, seed).map(|b| b.mask))
            .collect(),
        Method::UniformRandom => budgets
            .iter()
            .enumerate()
            .map(|(i, &b)| uniform_random_mask(dims, b, derive_seed(seed, &[i as u64])))
            .collect(),
    }
}

fn sorted_rates(rates: &[f64]) -> Vec<f64> {
    let mut r = rates.to_vec();
    r.sort_by(f64::total_cmp);
    r.dedup();
    r
}

/// Runs every method for every seed; results ordered by method (as listed),
/// seed, then ascending rate.
pub fn method_sweep_detail(
    plan: &SweepPlan,
    train: &[DynamicImage],
    test: &[DynamicImage],
    decoder: &dyn Decoder,
    metric: MetricId,
) -> Result<Vec<SeedResult>> {
    let dims = train
        .first()
        .map(|x| x.dims())
        .ok_or_else(|| Error::config("train", "no training volumes"))?;
    if plan.seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    let rates = sorted_rates(&plan.rates);
    // G-v1 has no randomness; design it once.
    let deterministic_g = plan.design.mode == TrainingMode::Full;
    let mut out = Vec::new();
    for &method in &plan.methods {
        let mut cached: Option<Vec<Mask>> = None;
        for &seed in &plan.seeds {
            let masks = match (&cached, method == Method::G && deterministic_g) {
                (Some(m), true) => m.clone(),
                _ => {
                    let m = method_masks(method, plan, &rates, seed, dims, train, decoder, metric)?;
                    if method == Method::G {
                        cached = Some(m.clone());
                    }
                    m
                }
            };
            for (&rate, mask) in rates.iter().zip(masks) {
                let report = evaluate_mask(method.as_str(), &mask, test, decoder, metric)?;
                out.push(SeedResult {
                    method,
                    rate,
                    seed,
                    value: report.mean,
                    mask,
                });
            }
        }
    }
    Ok(out)
}

pub fn summarize(results: &[SeedResult], methods: &[Method], metric: MetricId) -> Vec<SweepSummary> {
    let rates = sorted_rates(&results.iter().map(|r| r.rate).collect::<Vec<_>>());
    let mut out = Vec::new();
    for &method in methods {
        for &rate in &rates {
            let vals: Vec<f64> = results
                .iter()
                .filter(|r| r.method == method && r.rate == rate)
                .map(|r| r.value)
                .collect();
            if vals.is_empty() {
                continue;
            }
            let mean = crate::types::mean(&vals);
            let std = if vals.len() < 2 || mean.is_infinite() {
                0.0
            } else {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
            };
            out.push(SweepSummary {
                method,
                rate,
                metric,
                mean,
                std,
                seeds: vals.len(),
            });
        }
    }
    out
}

pub fn method_sweep(
    plan: &SweepPlan,
    train: &[DynamicImage],
    test: &[DynamicImage],
    decoder: &dyn Decoder,
    metric: MetricId,
) -> Result<Vec<SweepSummary>> {
    let detail = method_sweep_detail(plan, train, test, decoder, metric)?;
    Ok(summarize(&detail, &plan.methods, metric))
}

pub fn method_sweep_csv(rows: &[SweepSummary]) -> String {
    let mut s = String::from(METHOD_SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method,
            fmt_g6(r.rate),
            r.metric,
            fmt_g6(r.mean),
            fmt_g6(r.std),
            r.seeds
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::ZeroFill;
    use crate::phantom::{generate_phantom, PhantomSpec};

    fn plan(methods: Vec<Method>, rates: Vec<f64>) -> SweepPlan {
        let mut design = DesignConfig::new(Variant::Stochastic, TrainingMode::Batch, 0);
        design.sample_batch = 4;
        SweepPlan {
            methods,
            rates,
            seeds: vec![0, 1],
            design,
            grid: VdGrid { widths: vec![0.2], central: vec![1] },
            draws: 2,
        }
    }

    fn data() -> (Vec<DynamicImage>, Vec<DynamicImage>) {
        let v: Vec<DynamicImage> = (0..3)
            .map(|s| generate_phantom(&PhantomSpec::default_for(8, 2, s)).unwrap())
            .collect();
        (v[..2].to_vec(), v[2..].to_vec())
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("vista".parse::<Method>().is_err());
    }

    #[test]
    fn single_rate_single_method_is_one_row() {
        let (train, test) = data();
        let rows = method_sweep(&plan(vec![Method::UniformRandom], vec![0.1]), &train, &test, &ZeroFill::new(), MetricId::Psnr).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].seeds, 2);
    }

    #[test]
    fn rates_are_sorted_in_output() {
        let (train, test) = data();
        let p = plan(vec![Method::Sg, Method::CoherenceVd], vec![0.5, 0.25, 0.375]);
        let rows = method_sweep(&p, &train, &test, &ZeroFill::new(), MetricId::Psnr).unwrap();
        let rates: Vec<f64> = rows.iter().map(|r| r.rate).collect();
        assert_eq!(rates, vec![0.25, 0.375, 0.5, 0.25, 0.375, 0.5]);
        let csv = method_sweep_csv(&rows);
        assert!(csv.starts_with("method,rate,metric,mean,std,seeds\nsg,0.25,psnr,"));
    }

    #[test]
    fn designed_masks_are_nested_across_rates() {
        let (train, test) = data();
        let p = plan(vec![Method::Sg], vec![0.25, 0.5]);
        let detail = method_sweep_detail(&p, &train, &test, &ZeroFill::new(), MetricId::Psnr).unwrap();
        assert!(crate::maskdesign::is_prefix(&detail[0].mask, &detail[1].mask));
    }
}
