//! Run-config file: TOML with one section per concern.
//!
//! ```toml
//! seed = 0                 # master seed for design/baseline (`--seed` overrides)
//! metric = "psnr"          # psnr | ssim | negmse
//!
//! [data]                   # synthetic phantom suite, or explicit volume files
//! n = 32
//! frames = 8
//! train = 4
//! test = 2
//! seed = 0
//! noise = 0.0
//! # train_volumes = ["train_000.vol"]
//! # test_volumes = ["test_000.vol"]
//!
//! [decoder]
//! id = "ist"
//! kind = "ist"             # ist | zero-fill
//! lambda = 1e-3
//! iters = 200
//! step = 1.0
//! tol = 1e-6
//!
//! [design]
//! variant = "sg"           # g | sg
//! mode = "v2"              # v1 | v2
//! rates = [0.1, 0.2, 0.3]  # or: budget = 26
//! k = 16
//! l = 1
//!
//! [baseline]
//! method = "coherence-vd"  # coherence-vd | lb-vd
//! rate = 0.25
//! draws = 20
//! widths = [0.05, 0.1125, 0.175, 0.2375, 0.3]
//! central = [2, 7, 13, 18]
//!
//! [sweep]
//! methods = ["sg", "coherence-vd"]
//! rates = [0.1, 0.2, 0.3]
//! seeds = [0, 1, 2, 3, 4]
//! # batch_sizes = [1, 16]  # also run the batch-size sweep
//!
//! [eval]
//! mask = "mask.txt"
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::VdGrid;
use crate::decoders::{DecoderKind, DecoderSpec, IstParams};
use crate::error::{Error, Result};
use crate::experiments::Method;
use crate::io::read_volume;
use crate::metrics::MetricId;
use crate::phantom::{add_image_noise, generate_phantom, phantom_suite, split_dataset, PhantomSpec};
use crate::rng::derive_seed;
use crate::types::{lines_for_rate, DesignConfig, DynamicImage, Line, TrainingMode, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_metric")]
    pub metric: MetricId,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub decoder: DecoderSection,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_metric() -> MetricId {
    MetricId::Psnr
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub n: usize,
    pub frames: usize,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
    pub noise: f64,
    /// Motionless disk instead of the orbiting one.
    #[serde(rename = "static")]
    pub still: bool,
    pub jitter: Option<f64>,
    pub train_volumes: Vec<PathBuf>,
    pub test_volumes: Vec<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            n: 32,
            frames: 8,
            train: 4,
            test: 2,
            seed: 0,
            noise: 0.0,
            still: false,
            jitter: None,
            train_volumes: Vec::new(),
            test_volumes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderSection {
    pub id: String,
    pub kind: DecoderKind,
    pub lambda: Option<f64>,
    pub iters: Option<usize>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
}

impl Default for DecoderSection {
    fn default() -> Self {
        Self {
            id: "ist".into(),
            kind: DecoderKind::Ist,
            lambda: None,
            iters: None,
            step: None,
            tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    pub variant: Variant,
    pub mode: TrainingMode,
    pub rates: Vec<f64>,
    pub budget: Option<usize>,
    pub k: usize,
    pub l: usize,
    pub seed: Option<u64>,
    pub warm_start: Vec<(usize, usize)>,
}

impl Default for DesignSection {
    fn default() -> Self {
        Self {
            variant: Variant::Stochastic,
            mode: TrainingMode::Batch,
            rates: vec![0.1, 0.2, 0.3],
            budget: None,
            k: 16,
            l: 1,
            seed: None,
            warm_start: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineMethod {
    CoherenceVd,
    LbVd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub method: String,
    pub rate: f64,
    pub draws: usize,
    pub seed: Option<u64>,
    pub widths: Vec<f64>,
    pub central: Vec<usize>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let grid = VdGrid::desk();
        Self {
            method: "coherence-vd".into(),
            rate: 0.25,
            draws: 20,
            seed: None,
            widths: grid.widths,
            central: grid.central,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub methods: Vec<String>,
    pub rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub batch_sizes: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            methods: vec!["sg".into(), "coherence-vd".into(), "uniform-random".into()],
            rates: vec![0.1, 0.2, 0.3],
            seeds: (0..5).collect(),
            batch_sizes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub mask: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            metric: MetricId::Psnr,
            data: DataSection::default(),
            decoder: DecoderSection::default(),
            design: DesignSection::default(),
            baseline: BaselineSection::default(),
            sweep: SweepSection::default(),
            eval: EvalSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn field_of(message: &str) -> String {
    // toml reports e.g. "unknown field `foo`" or "invalid type ... for key `design.k`"
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            Error::Config {
                field: field_of(&msg),
                reason: msg,
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if d.train_volumes.is_empty() && (d.n == 0 || d.frames == 0) {
            return Err(Error::config("data.n", "N and T must be positive"));
        }
        if !(d.noise >= 0.0 && d.noise.is_finite()) {
            return Err(Error::config("data.noise", "must be finite and >= 0"));
        }
        self.decoder_spec()?.build()?;
        for &r in self.design.rates.iter().chain(&self.sweep.rates) {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config("rates", format!("{r} is outside [0, 1]")));
            }
        }
        if !(self.baseline.rate > 0.0 && self.baseline.rate <= 1.0) {
            return Err(Error::config("baseline.rate", "must lie in (0, 1]"));
        }
        for m in &self.sweep.methods {
            m.parse::<Method>().map_err(|_| Error::config("sweep.methods", format!("unknown method `{m}`")))?;
        }
        Ok(())
    }

    /// Overrides the master seed and any section seeds derived from it.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.design.seed = None;
        self.baseline.seed = None;
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn decoder_spec(&self) -> Result<DecoderSpec> {
        let s = &self.decoder;
        match s.kind {
            DecoderKind::ZeroFill => {
                if s.lambda.is_some() || s.iters.is_some() || s.step.is_some() || s.tol.is_some() {
                    return Err(Error::config("decoder", "zero-fill takes no parameters"));
                }
                Ok(DecoderSpec::zero_fill(s.id.clone()))
            }
            DecoderKind::Ist => {
                let d = IstParams::default();
                let p = IstParams {
                    lambda: s.lambda.unwrap_or(d.lambda),
                    iters: s.iters.unwrap_or(d.iters),
                    step: s.step.unwrap_or(d.step),
                    tol: s.tol.unwrap_or(d.tol),
                };
                p.validate().map_err(|e| match e {
                    Error::Config { field, reason } => Error::Config {
                        field: format!("decoder.{field}"),
                        reason,
                    },
                    other => other,
                })?;
                Ok(DecoderSpec::ist(s.id.clone(), p))
            }
        }
    }

    pub fn design_seed(&self) -> u64 {
        self.design.seed.unwrap_or(self.seed)
    }

    pub fn baseline_seed(&self) -> u64 {
        self.baseline.seed.unwrap_or(self.seed)
    }

    /// Budgets of the design ladder, ascending; a fixed `budget` wins over
    /// `rates`.
    pub fn design_budgets(&self, dims: (usize, usize)) -> Vec<usize> {
        let mut b: Vec<usize> = match self.design.budget {
            Some(b) => vec![b],
            None => self.design.rates.iter().map(|&r| lines_for_rate(r, dims.0, dims.1)).collect(),
        };
        b.sort_unstable();
        b.dedup();
        b
    }

    pub fn design_config(&self, dims: (usize, usize)) -> DesignConfig {
        let d = &self.design;
        let mut cfg = DesignConfig::new(d.variant, d.mode, self.design_budgets(dims).last().copied().unwrap_or(0));
        cfg.sample_batch = d.k;
        cfg.train_batch = d.l;
        cfg.seed = self.design_seed();
        cfg.decoder = self.decoder.id.clone();
        cfg.metric = self.metric;
        cfg.warm_start = d.warm_start.iter().map(|&(t, y)| Line::new(t, y)).collect();
        cfg
    }

    pub fn baseline_method(&self) -> Result<BaselineMethod> {
        match self.baseline.method.as_str() {
            "coherence-vd" => Ok(BaselineMethod::CoherenceVd),
            "lb-vd" => Ok(BaselineMethod::LbVd),
            other => Err(Error::Unknown {
                kind: "baseline",
                id: other.to_string(),
            }),
        }
    }

    pub fn grid(&self) -> VdGrid {
        VdGrid {
            widths: self.baseline.widths.clone(),
            central: self.baseline.central.clone(),
        }
    }

    pub fn sweep_methods(&self) -> Result<Vec<Method>> {
        self.sweep.methods.iter().map(|m| m.parse()).collect()
    }

    /// Phantom specs of the synthetic suite: training members first.
    pub fn phantom_specs(&self) -> Vec<PhantomSpec> {
        let d = &self.data;
        phantom_suite(d.n, d.frames, d.train + d.test, d.seed)
            .into_iter()
            .map(|mut s| {
                if d.still {
                    if let Some(disk) = s.disk.as_mut() {
                        disk.angular_step = 0.0;
                    }
                }
                if let Some(j) = d.jitter {
                    s.jitter = j;
                }
                s
            })
            .collect()
    }

    /// Renders the synthetic suite with noise applied, split into training
    /// and test volumes.
    pub fn synthetic_datasets(&self) -> Result<(Vec<DynamicImage>, Vec<DynamicImage>)> {
        let volumes: Vec<DynamicImage> = self
            .phantom_specs()
            .iter()
            .map(generate_phantom)
            .collect::<Result<_>>()?;
        let (train, test) = split_dataset(&volumes, self.data.train, self.data.test)?;
        Ok((self.with_noise(train, 0)?, self.with_noise(test, 1)?))
    }

    fn with_noise(&self, vols: Vec<DynamicImage>, tag: u64) -> Result<Vec<DynamicImage>> {
        vols.iter()
            .enumerate()
            .map(|(i, v)| add_image_noise(v, self.data.noise, derive_seed(self.data.seed, &[tag, i as u64])))
            .collect()
    }

    /// Training and test volumes: read from disk when listed (as stored),
    /// otherwise rendered from the synthetic suite.
    pub fn datasets(&self) -> Result<(Vec<DynamicImage>, Vec<DynamicImage>)> {
        let d = &self.data;
        if d.train_volumes.is_empty() && d.test_volumes.is_empty() {
            return self.synthetic_datasets();
        }
        let read = |paths: &[PathBuf]| -> Result<Vec<DynamicImage>> {
            paths.iter().map(|p| read_volume(&self.resolve(p)).map(|(v, _)| v)).collect()
        };
        Ok((read(&d.train_volumes)?, read(&d.test_volumes)?))
    }

    /// `(N, T)` of the configured data.
    pub fn dims(&self) -> Result<(usize, usize)> {
        let d = &self.data;
        match d.train_volumes.first().or(d.test_volumes.first()) {
            Some(p) => Ok(read_volume(&self.resolve(p))?.0.dims()),
            None => Ok((d.n, d.frames)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.data.n, 32);
        assert_eq!(cfg.metric, MetricId::Psnr);
        assert_eq!(cfg.design.variant, Variant::Stochastic);
        assert_eq!(cfg.grid(), VdGrid::desk());
    }

    #[test]
    fn sections_parse() {
        let text = r#"
seed = 9
metric = "ssim"
[data]
n = 16
frames = 4
[decoder]
id = "zf"
kind = "zero-fill"
[design]
variant = "G"
mode = "v1"
budget = 5
warm_start = [[0, 0], [1, 0]]
"#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.metric, MetricId::Ssim);
        let d = cfg.design_config((16, 4));
        assert_eq!(d.variant, Variant::Greedy);
        assert_eq!(d.budget, 5);
        assert_eq!(d.seed, 9);
        assert_eq!(d.warm_start, vec![Line::new(0, 0), Line::new(1, 0)]);
        assert_eq!(cfg.decoder_spec().unwrap(), DecoderSpec::zero_fill("zf"));
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::parse("[design]\nkk = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "kk"), "{e}");
        let e = RunConfig::parse("[decoder]\nstep = 2.0\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "decoder.step"), "{e}");
        let e = RunConfig::parse("[sweep]\nmethods = [\"vista\"]\n").unwrap_err();
        assert!(e.to_string().contains("sweep.methods"));
    }

    #[test]
    fn rates_become_sorted_budgets() {
        let cfg = RunConfig::parse("[design]\nrates = [0.3, 0.1, 0.2]\n").unwrap();
        assert_eq!(cfg.design_budgets((32, 8)), vec![26, 51, 77]);
    }

    #[test]
    fn ist_params_round_trip_through_file() {
        let cfg = RunConfig::parse("[decoder]\nid = \"ist\"\nlambda = 1e-3\niters = 50\n").unwrap();
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again.decoder_spec().unwrap(), cfg.decoder_spec().unwrap());
        let p = IstParams {
            iters: 50,
            ..IstParams::default()
        };
        assert_eq!(cfg.decoder_spec().unwrap(), DecoderSpec::ist("ist", p));
    }

    #[test]
    fn seed_override_clears_section_seeds() {
        let mut cfg = RunConfig::parse("[design]\nseed = 3\n").unwrap();
        assert_eq!(cfg.design_seed(), 3);
        cfg.set_seed(11);
        assert_eq!(cfg.design_seed(), 11);
        assert_eq!(cfg.baseline_seed(), 11);
    }

    #[test]
    fn synthetic_datasets_split() {
        let cfg = RunConfig::parse("[data]\nn = 8\nframes = 2\ntrain = 3\ntest = 1\nnoise = 0.01\n").unwrap();
        let (train, test) = cfg.datasets().unwrap();
        assert_eq!((train.len(), test.len()), (3, 1));
        let (again, _) = cfg.datasets().unwrap();
        assert_eq!(train, again);
    }
}
