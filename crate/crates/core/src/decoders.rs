//! Reconstruction rules `x̂ = g(b, Ω)`.
//!
//! Two decoders are provided: the zero-filled adjoint and iterative
//! soft-thresholding (IST) with an ℓ1 penalty in the x-f domain. Both are
//! pure functions of their input. Decoders are looked up by id through a
//! [`DecoderRegistry`].

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{adjoint_sample, fft2_inplace, temporal_inplace, zero_filled_kspace, Measurements};
use crate::types::DynamicImage;

pub trait Decoder: Send + Sync {
    fn id(&self) -> &str;
    fn decode(&self, b: &Measurements) -> Result<DynamicImage>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    ZeroFill,
    Ist,
}

/// Decoder id, kind and numeric parameters (`lambda`, `iters`, `step`, `tol`
/// for IST; none for zero-fill).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderSpec {
    pub id: String,
    pub kind: DecoderKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl DecoderSpec {
    pub fn zero_fill(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: DecoderKind::ZeroFill,
            params: BTreeMap::new(),
        }
    }

    pub fn ist(id: impl Into<String>, params: IstParams) -> Self {
        Self {
            id: id.into(),
            kind: DecoderKind::Ist,
            params: params.to_map(),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Decoder>> {
        Ok(match self.kind {
            DecoderKind::ZeroFill => Arc::new(ZeroFill { id: self.id.clone() }),
            DecoderKind::Ist => Arc::new(Ist {
                id: self.id.clone(),
                params: IstParams::from_map(&self.params)?,
            }),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IstParams {
    pub lambda: f64,
    pub iters: usize,
    pub step: f64,
    pub tol: f64,
}

impl Default for IstParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            iters: 200,
            step: 1.0,
            tol: 1e-6,
        }
    }
}

impl IstParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be finite and >= 0"));
        }
        if self.iters == 0 {
            return Err(Error::config("iters", "must be >= 1"));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::config("step", "must lie in (0, 1]"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::config("tol", "must be >= 0"));
        }
        Ok(())
    }

    fn to_map(self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("lambda".to_string(), self.lambda),
            ("iters".to_string(), self.iters as f64),
            ("step".to_string(), self.step),
            ("tol".to_string(), self.tol),
        ])
    }

    fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = IstParams::default();
        for (k, &v) in map {
            match k.as_str() {
                "lambda" => p.lambda = v,
                "iters" => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(Error::config("iters", "must be a positive integer"));
                    }
                    p.iters = v as usize;
                }
                "step" => p.step = v,
                "tol" => p.tol = v,
                other => return Err(Error::config(other, "unknown IST parameter")),
            }
        }
        p.validate()?;
        Ok(p)
    }
}

pub struct ZeroFill {
    id: String,
}

impl ZeroFill {
    pub fn new() -> Self {
        Self { id: "zf".into() }
    }
}

impl Default for ZeroFill {
    fn default() -> Self {
        Self::new()
    }
}

impl Decoder for ZeroFill {
    fn id(&self) -> &str {
        &self.id
    }

    fn decode(&self, b: &Measurements) -> Result<DynamicImage> {
        Ok(decode_zero_fill(b))
    }
}

pub fn decode_zero_fill(b: &Measurements) -> DynamicImage {
    adjoint_sample(b)
}

pub struct Ist {
    id: String,
    params: IstParams,
}

impl Ist {
    pub fn new(params: IstParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            id: "ist".into(),
            params,
        })
    }

    pub fn params(&self) -> &IstParams {
        &self.params
    }
}

impl Decoder for Ist {
    fn id(&self) -> &str {
        &self.id
    }

    fn decode(&self, b: &Measurements) -> Result<DynamicImage> {
        decode_ist(b, &self.params)
    }
}

pub fn decode_ist(b: &Measurements, params: &IstParams) -> Result<DynamicImage> {
    decode_ist_traced(b, params).map(|(x, _)| x)
}

/// Proximal gradient on `F(x) = ½‖P_Ω Ψ x − b‖² + λ‖Φ x‖₁` starting from
/// zero. Stops after `iters` steps, or earlier once the relative decrease
/// drops below `tol`; `tol = 0` always runs `iters` steps. Returns the estimate and the objective value at every iterate,
/// starting with `F(0)`.
pub fn decode_ist_traced(b: &Measurements, params: &IstParams) -> Result<(DynamicImage, Vec<f64>)> {
    params.validate()?;
    if b.is_empty() {
        return Err(Error::NoMeasurements);
    }
    let (n, frames) = b.mask().dims();
    let pixels = n * n;
    let len = pixels * frames;
    let measured = zero_filled_kspace(b);
    let mut on_line = vec![false; n * frames];
    for l in b.mask().lines() {
        on_line[l.index(n)] = true;
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; len];
    let mut k = vec![zero; len];
    // ‖Φx‖₁ of the current iterate, accumulated while thresholding
    let mut l1 = 0.0;
    let threshold = params.lambda * params.step;
    let mut objectives = Vec::with_capacity(params.iters + 1);

    for iter in 0..=params.iters {
        k.copy_from_slice(&x);
        fft2_inplace(&mut k, n, FftDirection::Forward);

        // residual on sampled lines, stored in place of k where sampled
        let mut data_term = 0.0;
        for (line_idx, &sampled) in on_line.iter().enumerate() {
            let row = &mut k[line_idx * n..(line_idx + 1) * n];
            if sampled {
                let meas = &measured.data()[line_idx * n..(line_idx + 1) * n];
                for (kv, mv) in row.iter_mut().zip(meas) {
                    let r = *kv - mv;
                    data_term += r.norm_sqr();
                    // gradient step in k-space: k - step * r
                    *kv -= r * params.step;
                }
            }
        }
        let f = 0.5 * data_term + params.lambda * l1;
        if let Some(&prev) = objectives.last() {
            let stalled = params.tol > 0.0 && (prev <= 0.0 || (prev - f) < params.tol * prev);
            objectives.push(f);
            if stalled {
                break;
            }
        } else {
            objectives.push(f);
        }
        if iter == params.iters {
            break;
        }

        fft2_inplace(&mut k, n, FftDirection::Inverse);
        if params.lambda > 0.0 {
            temporal_inplace(&mut k, pixels, frames, FftDirection::Forward);
            l1 = 0.0;
            for z in k.iter_mut() {
                let mag = z.norm_sqr().sqrt();
                if mag <= threshold {
                    *z = zero;
                } else {
                    *z *= (mag - threshold) / mag;
                    l1 += mag - threshold;
                }
            }
            temporal_inplace(&mut k, pixels, frames, FftDirection::Inverse);
        }
        std::mem::swap(&mut x, &mut k);
    }
    Ok((DynamicImage::from_raw(n, frames, x), objectives))
}

/// Complex soft-thresholding: shrinks the magnitude by `tau`, keeps the phase.
pub fn soft_threshold(z: Complex64, tau: f64) -> Complex64 {
    let mag = z.norm_sqr().sqrt();
    if mag <= tau {
        Complex64::new(0.0, 0.0)
    } else {
        z * ((mag - tau) / mag)
    }
}

/// Maps decoder ids to shared decoder instances.
#[derive(Default, Clone)]
pub struct DecoderRegistry {
    decoders: BTreeMap<String, (DecoderSpec, Arc<dyn Decoder>)>,
}

impl DecoderRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with `zf` (zero-fill) and `ist` (default IST parameters).
    pub fn with_defaults() -> Self {
        let mut r = Self::new();
        r.register(DecoderSpec::zero_fill("zf")).expect("fresh registry");
        r.register(DecoderSpec::ist("ist", IstParams::default()))
            .expect("fresh registry");
        r
    }

    pub fn register(&mut self, spec: DecoderSpec) -> Result<Arc<dyn Decoder>> {
        if self.decoders.contains_key(&spec.id) {
            return Err(Error::DuplicateDecoder(spec.id));
        }
        let decoder = spec.build()?;
        self.decoders
            .insert(spec.id.clone(), (spec, Arc::clone(&decoder)));
        Ok(decoder)
    }

    /// Registers `spec`, replacing any existing decoder with the same id.
    pub fn upsert(&mut self, spec: DecoderSpec) -> Result<Arc<dyn Decoder>> {
        self.decoders.remove(&spec.id);
        self.register(spec)
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Decoder>> {
        self.decoders
            .get(id)
            .map(|(_, d)| Arc::clone(d))
            .ok_or_else(|| Error::Unknown {
                kind: "decoder",
                id: id.to_string(),
            })
    }

    pub fn spec(&self, id: &str) -> Option<&DecoderSpec> {
        self.decoders.get(id).map(|(s, _)| s)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.decoders.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_phantom, PhantomSpec};
    use crate::transform::sample;
    use crate::types::{Line, Mask};

    fn phantom(n: usize, t: usize) -> DynamicImage {
        generate_phantom(&PhantomSpec::default_for(n, t, 1)).unwrap()
    }

    fn rel_err(a: &DynamicImage, b: &DynamicImage) -> f64 {
        let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
        (num / b.energy()).sqrt()
    }

    #[test]
    fn zero_fill_full_mask_recovers() {
        let x = phantom(16, 4);
        let b = sample(&x, &Mask::full(16, 4)).unwrap();
        assert!(rel_err(&decode_zero_fill(&b), &x) < 1e-10);
    }

    #[test]
    fn zero_fill_empty_is_zero() {
        let x = phantom(16, 4);
        let b = sample(&x, &Mask::empty(16, 4)).unwrap();
        assert_eq!(decode_zero_fill(&b).energy(), 0.0);
    }

    #[test]
    fn ist_lambda_zero_full_mask_recovers() {
        let x = phantom(16, 4);
        let b = sample(&x, &Mask::full(16, 4)).unwrap();
        let p = IstParams {
            lambda: 0.0,
            ..IstParams::default()
        };
        assert!(rel_err(&decode_ist(&b, &p).unwrap(), &x) < 1e-8);
    }

    #[test]
    fn ist_zero_measurements_give_zero() {
        let mask = Mask::new(8, 2, vec![Line::new(0, 0), Line::new(1, 3)]).unwrap();
        let b = Measurements::new(mask, vec![Complex64::new(0.0, 0.0); 16]).unwrap();
        let x = decode_ist(&b, &IstParams::default()).unwrap();
        assert_eq!(x.energy(), 0.0);
    }

    #[test]
    fn ist_rejects_empty_mask() {
        let b = sample(&phantom(8, 2), &Mask::empty(8, 2)).unwrap();
        assert!(matches!(decode_ist(&b, &IstParams::default()), Err(Error::NoMeasurements)));
    }

    #[test]
    fn ist_objective_never_increases() {
        let x = phantom(16, 4);
        let lines: Vec<Line> = (0..20).map(|i| Line::new(i % 4, (i * 5 + i / 4) % 16)).collect();
        let mask = Mask::new(16, 4, lines).unwrap();
        let b = sample(&x, &mask).unwrap();
        let p = IstParams {
            tol: 0.0,
            ..IstParams::default()
        };
        let (_, obj) = decode_ist_traced(&b, &p).unwrap();
        assert_eq!(obj.len(), p.iters + 1);
        for w in obj.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn ist_is_pure() {
        let x = phantom(16, 4);
        let mask = Mask::new(16, 4, (0..16).map(|r| Line::new(r % 4, r)).collect()).unwrap();
        let b = sample(&x, &mask).unwrap();
        let a = decode_ist(&b, &IstParams::default()).unwrap();
        let c = decode_ist(&b, &IstParams::default()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn soft_threshold_keeps_phase() {
        let z = Complex64::from_polar(2.0, 0.3);
        let s = soft_threshold(z, 0.5);
        assert!((s.norm() - 1.5).abs() < 1e-15);
        assert!((s.arg() - 0.3).abs() < 1e-15);
        assert_eq!(soft_threshold(z, 2.5), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn registry_lookup_and_duplicates() {
        let mut r = DecoderRegistry::new();
        let d = r.register(DecoderSpec::zero_fill("zf")).unwrap();
        assert_eq!(r.get("zf").unwrap().id(), d.id());
        assert!(Arc::ptr_eq(&r.get("zf").unwrap(), &d));
        assert!(matches!(
            r.register(DecoderSpec::zero_fill("zf")),
            Err(Error::DuplicateDecoder(_))
        ));
        assert!(r.get("ktf").is_err());
    }

    #[test]
    fn ist_spec_round_trips_through_toml() {
        let spec = DecoderSpec::ist(
            "ist",
            IstParams {
                lambda: 1e-3,
                ..IstParams::default()
            },
        );
        let text = toml::to_string(&spec).unwrap();
        let back: DecoderSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let mut r = DecoderRegistry::new();
        r.register(back).unwrap();
        assert_eq!(r.spec("ist").unwrap().params["lambda"], 1e-3);
    }

    #[test]
    fn invalid_ist_params_rejected() {
        for p in [
            IstParams { lambda: -1.0, ..IstParams::default() },
            IstParams { iters: 0, ..IstParams::default() },
            IstParams { step: 0.0, ..IstParams::default() },
            IstParams { step: 1.5, ..IstParams::default() },
            IstParams { tol: -1.0, ..IstParams::default() },
        ] {
            assert!(Ist::new(p).is_err());
        }
    }
}
