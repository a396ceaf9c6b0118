//! `sgmask` command line.
//!
//! Every command reads one run-config file (see [`crate::config`]) and
//! writes its outputs under `--out`. Exit codes: 0 success, 1 check failure,
//! 2 usage or configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::accounting::{batch_sweep, fmt_g6, predict_calls_from, sweep_csv, CallPlan};
use crate::baselines::{coherence, coherence_vd_design, lbvd_design, BaselineResult};
use crate::check::{run_checks_with, Faults};
use crate::config::{BaselineMethod, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{method_sweep, method_sweep_csv, SweepPlan};
use crate::io::{read_mask, write_mask, write_volume, VolumeMeta};
use crate::maskdesign::{design_mask, warm_counts, Evaluator};
use crate::metrics::MetricId;
use crate::types::{lines_for_rate, mean, sampling_rate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "sgmask", version, about = "Learned Cartesian k-t sampling masks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run-config file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    metric: Option<MetricId>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render the phantom suite to volume files.
    Phantom,
    /// Design nested masks with the greedy loop.
    Design,
    /// Run a variable-density baseline.
    Baseline,
    /// Evaluate a mask file on the test volumes.
    Eval,
    /// Metric versus rate for each method.
    Sweep,
    /// Run the built-in verification suite.
    Check {
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fault {
    FftScale,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let go = || match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    };
    if cli.threads == 0 {
        return go();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool.install(go),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    if let Some(m) = cli.metric {
        cfg.metric = m;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32> {
    if let Command::Check { inject_fault } = &cli.command {
        let faults = Faults {
            fft_scale: inject_fault.map(|Fault::FftScale| 1.01),
        };
        let report = run_checks_with(&faults);
        let text = report.render();
        print!("{text}");
        if let Some(dir) = &cli.out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("check.txt"), &text)?;
        }
        return Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED });
    }
    let cfg = load_config(cli)?;
    let out = out_dir(cli)?;
    match cli.command {
        Command::Phantom => cmd_phantom(&cfg, &out),
        Command::Design => cmd_design(&cfg, &out),
        Command::Baseline => cmd_baseline(&cfg, &out),
        Command::Eval => cmd_eval(&cfg, &out),
        Command::Sweep => cmd_sweep(&cfg, &out),
        Command::Check { .. } => unreachable!(),
    }?;
    Ok(EXIT_OK)
}

fn cmd_phantom(cfg: &RunConfig, out: &Path) -> Result<()> {
    let specs = cfg.phantom_specs();
    let (train, test) = cfg.synthetic_datasets()?;
    let named = train
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("train_{i:03}.vol"), v, &specs[i]))
        .chain(
            test.iter()
                .enumerate()
                .map(|(i, v)| (format!("test_{i:03}.vol"), v, &specs[train.len() + i])),
        );
    for (name, volume, spec) in named {
        let mut meta = VolumeMeta::for_image(volume);
        meta.set("phantom_seed", spec.seed.to_string());
        meta.set("noise", fmt_g6(cfg.data.noise));
        meta.set("spec", serde_json::to_string(spec).expect("spec serializes"));
        let path = out.join(name);
        write_volume(&path, volume, &meta)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_design(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (train, _) = cfg.datasets()?;
    let dims = train
        .first()
        .map(|v| v.dims())
        .ok_or_else(|| Error::config("data.train", "no training volumes"))?;
    let decoder = cfg.decoder_spec()?.build()?;
    let design = cfg.design_config(dims);
    let (mask, trace) = design_mask(&design, &train, decoder.as_ref(), cfg.metric)?;

    let warm = warm_counts(&design.warm_start, dims.0, dims.1);
    let mut report = String::from("file,rate,lines,decoder_calls,predicted_calls\n");
    let labelled: Vec<(String, usize)> = match cfg.design.budget {
        Some(b) => vec![("mask.txt".into(), b)],
        None => {
            let mut rates = cfg.design.rates.clone();
            rates.sort_by(f64::total_cmp);
            rates.dedup();
            rates
                .iter()
                .map(|&r| (format!("mask_{}.txt", fmt_g6(r)), lines_for_rate(r, dims.0, dims.1)))
                .collect()
        }
    };
    for (name, b) in &labelled {
        let b = (*b).max(design.warm_start.len());
        let prefix = mask.prefix(b);
        write_mask(&out.join(name), &prefix)?;
        println!("wrote {}", out.join(name).display());
        let done = b - design.warm_start.len();
        let calls = if done == 0 { 0 } else { trace.records[done - 1].calls };
        let plan = CallPlan {
            variant: design.variant,
            mode: design.mode,
            n: dims.0,
            frames: dims.1,
            m: train.len(),
            k: design.sample_batch,
            l: design.train_batch,
            budget: b,
        };
        let _ = writeln!(
            report,
            "{name},{},{},{calls},{}",
            fmt_g6(sampling_rate(&prefix)),
            prefix.len(),
            predict_calls_from(&plan, &warm)
        );
    }
    if cfg.design.budget.is_none() {
        write_mask(&out.join("mask.txt"), &mask)?;
    }
    let mut jsonl = Vec::new();
    trace.write_jsonl(&mut jsonl)?;
    fs::write(out.join("trace.jsonl"), jsonl)?;
    write(&out.join("design.csv"), &report)
}

fn cmd_baseline(cfg: &RunConfig, out: &Path) -> Result<()> {
    let method = cfg.baseline_method()?;
    let dims = cfg.dims()?;
    let b = &cfg.baseline;
    let (result, criterion): (BaselineResult, String) = match method {
        BaselineMethod::CoherenceVd => (
            coherence_vd_design(b.rate, dims, &cfg.grid(), b.draws, cfg.baseline_seed())?,
            "coherence".into(),
        ),
        BaselineMethod::LbVd => {
            let (train, _) = cfg.datasets()?;
            let decoder = cfg.decoder_spec()?.build()?;
            (
                lbvd_design(b.rate, dims, &cfg.grid(), b.draws, &train, decoder.as_ref(), cfg.metric, cfg.baseline_seed())?,
                cfg.metric.to_string(),
            )
        }
    };
    let mut csv = String::from("width,central,rate,criterion,mean,std,selected\n");
    for c in &result.cells {
        let cell = |v: Option<f64>| v.map(fmt_g6).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{criterion},{},{},{}",
            fmt_g6(c.params.width),
            c.params.central,
            fmt_g6(c.params.rate),
            cell(c.mean),
            cell(c.std),
            u8::from(c.params == result.params)
        );
    }
    write_mask(&out.join("baseline_mask.txt"), &result.mask)?;
    println!("wrote {}", out.join("baseline_mask.txt").display());
    println!(
        "selected width {} central {} ({criterion} {}, mask coherence {})",
        fmt_g6(result.params.width),
        result.params.central,
        fmt_g6(result.score),
        fmt_g6(coherence(&result.mask)?)
    );
    write(&out.join("baseline.csv"), &csv)
}

fn cmd_eval(cfg: &RunConfig, out: &Path) -> Result<()> {
    let path = cfg
        .eval
        .mask
        .as_ref()
        .ok_or_else(|| Error::config("eval.mask", "no mask file given"))?;
    let mask = read_mask(&cfg.resolve(path))?;
    let (_, test) = cfg.datasets()?;
    let decoder = cfg.decoder_spec()?.build()?;
    let ev = Evaluator::new(&test, decoder.as_ref(), cfg.metric)?;
    if ev.dims() != mask.dims() {
        return Err(Error::Dimension(format!(
            "mask is {:?}, volumes are {:?}",
            mask.dims(),
            ev.dims()
        )));
    }
    let rate = fmt_g6(sampling_rate(&mask));
    let id = decoder.id();
    let metric = cfg.metric;
    let mut csv = String::from("volume,rate,decoder,metric,value,calls,status\n");
    match ev.score_all(&mask) {
        Ok(values) => {
            for (i, v) in values.iter().enumerate() {
                let _ = writeln!(csv, "{i},{rate},{id},{metric},{},1,ok", fmt_g6(*v));
            }
            let _ = writeln!(csv, "mean,{rate},{id},{metric},{},{},ok", fmt_g6(mean(&values)), ev.calls());
        }
        Err(e) => {
            let _ = writeln!(csv, "error,{rate},{id},{metric},,{},{e}", ev.calls());
        }
    }
    write(&out.join("eval.csv"), &csv)
}

fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (train, test) = cfg.datasets()?;
    let dims = train
        .first()
        .map(|v| v.dims())
        .ok_or_else(|| Error::config("data.train", "no training volumes"))?;
    let decoder = cfg.decoder_spec()?.build()?;
    let mut design = cfg.design_config(dims);
    design.budget = 0;
    let plan = SweepPlan {
        methods: cfg.sweep_methods()?,
        rates: cfg.sweep.rates.clone(),
        seeds: cfg.sweep.seeds.clone(),
        design: design.clone(),
        grid: cfg.grid(),
        draws: cfg.baseline.draws,
    };
    let rows = method_sweep(&plan, &train, &test, decoder.as_ref(), cfg.metric)?;
    write(&out.join("sweep.csv"), &method_sweep_csv(&rows))?;
    if !cfg.sweep.batch_sizes.is_empty() {
        let rows = batch_sweep(
            &design,
            &cfg.sweep.batch_sizes,
            &cfg.sweep.seeds,
            &cfg.sweep.rates,
            &train,
            &test,
            decoder.as_ref(),
            cfg.metric,
        )?;
        write(&out.join("batch_sweep.csv"), &sweep_csv(&rows))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_and_bad_usage() {
        assert_eq!(run(["sgmask", "--help"]), EXIT_OK);
        assert_eq!(run(["sgmask", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["sgmask", "design", "--metric", "l2"]), EXIT_USAGE);
    }

    #[test]
    fn missing_config_is_usage_error() {
        assert_eq!(run(["sgmask", "design", "--config", "/nonexistent/run.toml"]), EXIT_USAGE);
    }
}
