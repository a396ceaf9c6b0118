//! Built-in verification suite run by `sgmask check`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::accounting::{predict_calls, CallPlan};
use crate::baselines::prop_check;
use crate::decoders::{decode_zero_fill, ZeroFill};
use crate::error::Result;
use crate::maskdesign::{design_mask, frame_balance, verify_nestedness};
use crate::metrics::{psnr, MetricId};
use crate::phantom::{generate_phantom, PhantomSpec};
use crate::rng::{derive_seed, sample_without_replacement, stream_rng, streams};
use crate::transform::{adjoint_sample, forward_fft, inner, sample_kspace, temporal_fft, KSpaceVolume, Measurements};
use crate::types::{DesignConfig, DynamicImage, Line, Mask, SamplingDistribution, TrainingMode, Variant};

/// Deliberate defects for exercising the suite itself.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Faults {
    /// Multiplies the spatial forward transform by this factor.
    pub fft_scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub results: Vec<CheckResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.name).collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            let _ = writeln!(s, "{} {:<16} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        }
        if self.passed() {
            s.push_str("all checks passed\n");
        } else {
            let _ = writeln!(s, "failed: {}", self.failed().join(", "));
        }
        s
    }
}

const OPERATOR_TOL: f64 = 1e-10;

fn random_volume(n: usize, frames: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = stream_rng(seed, streams::PROP_CHECK);
    (0..n * n * frames)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tol,
        detail: format!("max relative error {worst:.3e} (tol {tol:.0e})"),
    }
}

fn spatial(x: &DynamicImage, faults: &Faults) -> KSpaceVolume {
    let k = forward_fft(x);
    match faults.fft_scale {
        Some(s) => KSpaceVolume::new(x.n(), x.frames(), k.data().iter().map(|z| z * s).collect()).unwrap(),
        None => k,
    }
}

fn check_operators(faults: &Faults) -> Vec<CheckResult> {
    let (n, frames) = (8, 3);
    let mut parseval: f64 = 0.0;
    let mut temporal: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    for i in 0..20u64 {
        let x = DynamicImage::new(n, frames, random_volume(n, frames, derive_seed(1, &[i]))).unwrap();
        let e = norm(x.data());
        parseval = parseval.max((norm(spatial(&x, faults).data()) - e).abs() / e);
        temporal = temporal.max((norm(temporal_fft(&x).data()) - e).abs() / e);

        let mut rng = stream_rng(derive_seed(2, &[i]), streams::PROP_CHECK);
        let count = rng.random_range(1..=n * frames);
        let all: Vec<usize> = (0..n * frames).collect();
        let lines = sample_without_replacement(&all, count, &mut rng)
            .into_iter()
            .map(|j| Line::from_index(j, n))
            .collect();
        let mask = Mask::new(n, frames, lines).unwrap();
        let y_vals = random_volume(1, count * n, derive_seed(3, &[i]));
        let y = Measurements::new(mask.clone(), y_vals).unwrap();
        let px = sample_kspace(&spatial(&x, faults), &mask).unwrap();
        let lhs = inner(px.values(), y.values());
        let rhs = inner(x.data(), adjoint_sample(&y).data());
        adjoint = adjoint.max((lhs - rhs).norm() / (e * norm(y.values())));
    }
    vec![
        outcome("adjoint", adjoint, OPERATOR_TOL),
        outcome("parseval", parseval, OPERATOR_TOL),
        outcome("parseval-time", temporal, OPERATOR_TOL),
    ]
}

fn tiny_training(n: usize, frames: usize) -> Vec<DynamicImage> {
    (0..2)
        .map(|s| generate_phantom(&PhantomSpec::default_for(n, frames, s)).unwrap())
        .collect()
}

fn check_prop() -> Result<CheckResult> {
    let (n, frames) = (4, 2);
    let training = tiny_training(n, frames);
    let zf = ZeroFill::new();
    let mut rng = stream_rng(7, streams::PROP_CHECK);
    let mut pmfs = vec![SamplingDistribution::uniform(n, frames)];
    for _ in 0..3 {
        pmfs.push(SamplingDistribution::new(n, frames, (0..n * frames).map(|_| rng.random::<f64>()).collect())?);
    }
    let mut ok = true;
    let mut slack = f64::INFINITY;
    for (i, f) in pmfs.iter().enumerate() {
        let r = prop_check(f, 2, 10_000, &training, &zf, MetricId::Psnr, i as u64)?;
        ok &= r.bound_holds && r.degenerate_exact && r.masks_enumerated == 28;
        slack = slack.min(r.brute_max - r.mc_mean);
    }
    Ok(CheckResult {
        name: "prop-check",
        passed: ok,
        detail: format!("4 PMFs, 28 masks, min slack {slack:.4} dB"),
    })
}

/// Mean PSNR over `training` of the zero-filled reconstruction from `mask`,
/// computed directly rather than through the design machinery.
fn direct_score(mask: &Mask, training: &[DynamicImage]) -> Result<f64> {
    let mut total = 0.0;
    for x in training {
        let b = sample_kspace(&forward_fft(x), mask)?;
        total += psnr(x, &decode_zero_fill(&b))?;
    }
    Ok(total / training.len() as f64)
}

fn check_greedy_oracle() -> Result<CheckResult> {
    let (n, frames) = (8, 2);
    let zf = ZeroFill::new();
    let mut ok = true;
    for s in 0..3 {
        let training = vec![generate_phantom(&PhantomSpec::default_for(n, frames, 100 + s))?];
        let cfg = DesignConfig::new(Variant::Greedy, TrainingMode::Full, 1);
        let (mask, _) = design_mask(&cfg, &training, &zf, MetricId::Psnr)?;
        let mut best: Option<(Line, f64)> = None;
        for t in 0..frames {
            for y in 0..n {
                let line = Line::new(t, y);
                let v = direct_score(&Mask::new(n, frames, vec![line])?, &training)?;
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((line, v));
                }
            }
        }
        ok &= mask.lines() == [best.unwrap().0];
    }
    Ok(CheckResult {
        name: "greedy-oracle",
        passed: ok,
        detail: "n = 1 greedy vs exhaustive search on 3 phantoms".into(),
    })
}

fn check_nested_and_calls() -> Result<Vec<CheckResult>> {
    let (n, frames) = (8, 2);
    let training = tiny_training(n, frames);
    let zf = ZeroFill::new();
    let mut nested = true;
    let mut counted = true;
    for (variant, mode) in [
        (Variant::Greedy, TrainingMode::Full),
        (Variant::Stochastic, TrainingMode::Full),
        (Variant::Stochastic, TrainingMode::Batch),
    ] {
        for (seed, budget) in [(0u64, 4usize), (1, 5), (2, 9)] {
            let mut cfg = DesignConfig::new(variant, mode, budget);
            cfg.sample_batch = 3;
            cfg.train_batch = 1;
            cfg.seed = seed;
            let (mask, trace) = design_mask(&cfg, &training, &zf, MetricId::Psnr)?;
            if variant == Variant::Stochastic {
                let balance = frame_balance(&mask);
                nested &= verify_nestedness(&mask, &trace) && balance <= 1 && (budget % frames != 0 || balance == 0);
            }
            let plan = CallPlan {
                variant,
                mode,
                n,
                frames,
                m: training.len(),
                k: cfg.sample_batch,
                l: cfg.train_batch,
                budget,
            };
            counted &= trace.decoder_calls() == predict_calls(&plan);
        }
    }
    Ok(vec![
        CheckResult {
            name: "nestedness",
            passed: nested,
            detail: "SG prefixes and frame balance on 6 designs".into(),
        },
        CheckResult {
            name: "call-count",
            passed: counted,
            detail: "measured decoder calls equal predictions for G-v1, SG-v1, SG-v2".into(),
        },
    ])
}

pub fn run_checks() -> CheckReport {
    run_checks_with(&Faults::default())
}

pub fn run_checks_with(faults: &Faults) -> CheckReport {
    let mut results = check_operators(faults);
    let guarded = |name: &'static str, r: Result<Vec<CheckResult>>| match r {
        Ok(v) => v,
        Err(e) => vec![CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        }],
    };
    results.extend(guarded("prop-check", check_prop().map(|r| vec![r])));
    results.extend(guarded("greedy-oracle", check_greedy_oracle().map(|r| vec![r])));
    results.extend(guarded("nestedness", check_nested_and_calls()));
    CheckReport { results }
}
