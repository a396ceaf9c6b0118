//! Synthetic dynamic phantoms: a static elliptical background plus one disk
//! orbiting on a circle, rasterized with coverage-weighted edges.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, streams};
use crate::types::{normalize, DynamicImage};

/// Sub-pixel grid used to estimate edge coverage.
const SUPERSAMPLE: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    /// Center in pixel units; pixel `(x, y)` covers `[x, x+1) x [y, y+1)`.
    pub center: (f64, f64),
    /// Semi-axes in pixels.
    pub axes: (f64, f64),
    /// Rotation in radians.
    #[serde(default)]
    pub angle: f64,
    /// Complex amplitude `(re, im)`.
    pub amplitude: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovingDisk {
    pub orbit_center: (f64, f64),
    pub orbit_radius: f64,
    /// Angle advanced per frame, radians. Zero gives a static disk.
    pub angular_step: f64,
    #[serde(default)]
    pub phase: f64,
    pub radius: f64,
    pub amplitude: (f64, f64),
}

impl MovingDisk {
    pub fn center_at(&self, t: usize) -> (f64, f64) {
        let a = self.phase + self.angular_step * t as f64;
        (
            self.orbit_center.0 + self.orbit_radius * a.cos(),
            self.orbit_center.1 + self.orbit_radius * a.sin(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub n: usize,
    pub frames: usize,
    #[serde(default)]
    pub ellipses: Vec<Ellipse>,
    #[serde(default)]
    pub disk: Option<MovingDisk>,
    pub seed: u64,
    /// Relative amplitude jitter: each shape's amplitude is scaled by
    /// `1 + jitter * u`, `u` uniform in `[-1, 1]`.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

fn default_jitter() -> f64 {
    0.1
}

impl PhantomSpec {
    /// Torso-like ellipse, two static inclusions and an orbiting disk that
    /// completes one revolution over the sequence. Geometry scales with `n`.
    pub fn default_for(n: usize, frames: usize, seed: u64) -> Self {
        let s = n as f64;
        Self {
            n,
            frames,
            ellipses: vec![
                Ellipse {
                    center: (0.5 * s, 0.5 * s),
                    axes: (0.42 * s, 0.36 * s),
                    angle: 0.0,
                    amplitude: (0.45, 0.1),
                },
                Ellipse {
                    center: (0.3 * s, 0.58 * s),
                    axes: (0.08 * s, 0.14 * s),
                    angle: 0.3,
                    amplitude: (0.25, -0.15),
                },
                Ellipse {
                    center: (0.7 * s, 0.38 * s),
                    axes: (0.07 * s, 0.1 * s),
                    angle: -0.5,
                    amplitude: (-0.2, 0.2),
                },
            ],
            disk: Some(MovingDisk {
                orbit_center: (0.52 * s, 0.5 * s),
                orbit_radius: 0.12 * s,
                angular_step: 2.0 * PI / frames as f64,
                phase: 0.0,
                radius: 0.12 * s,
                amplitude: (0.6, 0.0),
            }),
            seed,
            jitter: default_jitter(),
        }
    }

    /// Same geometry with a motionless disk.
    pub fn static_for(n: usize, frames: usize, seed: u64) -> Self {
        let mut s = Self::default_for(n, frames, seed);
        if let Some(d) = s.disk.as_mut() {
            d.angular_step = 0.0;
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.frames == 0 {
            return Err(Error::config("dims", "N and T must be positive"));
        }
        if !(self.jitter >= 0.0 && self.jitter < 1.0) {
            return Err(Error::config("jitter", "must lie in [0, 1)"));
        }
        let size = self.n as f64;
        let inside = |lo: f64, hi: f64| lo >= 0.0 && hi <= size;
        for (i, e) in self.ellipses.iter().enumerate() {
            if !(e.axes.0 > 0.0 && e.axes.1 > 0.0) {
                return Err(Error::config(format!("ellipses[{i}].axes"), "must be positive"));
            }
            let (c, s) = (e.angle.cos(), e.angle.sin());
            let hx = ((e.axes.0 * c).powi(2) + (e.axes.1 * s).powi(2)).sqrt();
            let hy = ((e.axes.0 * s).powi(2) + (e.axes.1 * c).powi(2)).sqrt();
            if !inside(e.center.0 - hx, e.center.0 + hx) || !inside(e.center.1 - hy, e.center.1 + hy) {
                return Err(Error::config(format!("ellipses[{i}]"), "shape leaves the frame"));
            }
        }
        if let Some(d) = &self.disk {
            if !(d.radius > 0.0) || d.orbit_radius < 0.0 {
                return Err(Error::config("disk", "radius must be positive"));
            }
            for t in 0..self.frames {
                let (cx, cy) = d.center_at(t);
                if !inside(cx - d.radius, cx + d.radius) || !inside(cy - d.radius, cy + d.radius) {
                    return Err(Error::config("disk", format!("disk leaves the frame at t = {t}")));
                }
            }
        }
        Ok(())
    }
}

/// Fraction of pixel `(px, py)` covered by the region `inside`.
fn coverage(px: usize, py: usize, inside: impl Fn(f64, f64) -> bool) -> f64 {
    let mut hits = 0;
    for sy in 0..SUPERSAMPLE {
        for sx in 0..SUPERSAMPLE {
            let x = px as f64 + (sx as f64 + 0.5) / SUPERSAMPLE as f64;
            let y = py as f64 + (sy as f64 + 0.5) / SUPERSAMPLE as f64;
            if inside(x, y) {
                hits += 1;
            }
        }
    }
    hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
}

fn paint(frame: &mut [Complex64], n: usize, amp: Complex64, bbox: (f64, f64, f64, f64), inside: impl Fn(f64, f64) -> bool) {
    let (x0, x1, y0, y1) = bbox;
    let clamp = |v: f64| (v.max(0.0) as usize).min(n);
    for py in clamp(y0.floor())..clamp(y1.ceil()) {
        for px in clamp(x0.floor())..clamp(x1.ceil()) {
            let c = coverage(px, py, &inside);
            if c > 0.0 {
                frame[py * n + px] += amp * c;
            }
        }
    }
}

/// Renders and normalizes the phantom. Pure in `spec`.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<DynamicImage> {
    spec.validate()?;
    let (n, frames) = (spec.n, spec.frames);
    let mut rng = stream_rng(spec.seed, streams::PHANTOM_JITTER);
    let mut jittered = |(re, im): (f64, f64)| {
        let u: f64 = rng.random_range(-1.0..=1.0);
        Complex64::new(re, im) * (1.0 + spec.jitter * u)
    };
    let ellipse_amps: Vec<Complex64> = spec.ellipses.iter().map(|e| jittered(e.amplitude)).collect();
    let disk_amp = spec.disk.as_ref().map(|d| jittered(d.amplitude));

    let mut background = vec![Complex64::new(0.0, 0.0); n * n];
    for (e, &amp) in spec.ellipses.iter().zip(&ellipse_amps) {
        let (c, s) = (e.angle.cos(), e.angle.sin());
        let r = e.axes.0.max(e.axes.1);
        let bbox = (e.center.0 - r, e.center.0 + r, e.center.1 - r, e.center.1 + r);
        paint(&mut background, n, amp, bbox, |x, y| {
            let (dx, dy) = (x - e.center.0, y - e.center.1);
            let u = (dx * c + dy * s) / e.axes.0;
            let v = (-dx * s + dy * c) / e.axes.1;
            u * u + v * v <= 1.0
        });
    }

    let mut data = Vec::with_capacity(n * n * frames);
    for t in 0..frames {
        let mut frame = background.clone();
        if let (Some(d), Some(amp)) = (&spec.disk, disk_amp) {
            let (cx, cy) = d.center_at(t);
            let r = d.radius;
            paint(&mut frame, n, amp, (cx - r, cx + r, cy - r, cy + r), |x, y| {
                (x - cx).powi(2) + (y - cy).powi(2) <= r * r
            });
        }
        data.extend(frame);
    }
    normalize(&DynamicImage::from_raw(n, frames, data))
}

/// `count` phantom specs with seeded geometric variation around
/// [`PhantomSpec::default_for`]: orbit phase, orbit and disk radii, and
/// inclusion positions all differ between members.
pub fn phantom_suite(n: usize, frames: usize, count: usize, seed: u64) -> Vec<PhantomSpec> {
    (0..count)
        .map(|i| {
            let member_seed = derive_seed(seed, &[i as u64]);
            let mut rng = stream_rng(member_seed, streams::SUITE);
            let s = n as f64;
            let mut spec = PhantomSpec::default_for(n, frames, member_seed);
            for e in spec.ellipses.iter_mut().skip(1) {
                e.center.0 += rng.random_range(-0.04..0.04) * s;
                e.center.1 += rng.random_range(-0.04..0.04) * s;
                e.angle += rng.random_range(-0.4..0.4);
            }
            if let Some(d) = spec.disk.as_mut() {
                d.phase = rng.random_range(0.0..2.0 * PI);
                d.orbit_radius *= rng.random_range(0.8..1.2);
                d.radius *= rng.random_range(0.85..1.15);
                d.orbit_center.0 += rng.random_range(-0.03..0.03) * s;
                d.orbit_center.1 += rng.random_range(-0.03..0.03) * s;
            }
            spec
        })
        .collect()
}

/// Adds i.i.d. `N(0, sigma^2)` noise to the real and imaginary parts of
/// every entry.
pub fn add_image_noise(image: &DynamicImage, sigma: f64, seed: u64) -> Result<DynamicImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::config("sigma", "must be finite and >= 0"));
    }
    if sigma == 0.0 {
        return Ok(image.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config("sigma", e.to_string()))?;
    let mut rng = stream_rng(seed, streams::NOISE);
    let data = image
        .data()
        .iter()
        .map(|z| z + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    Ok(DynamicImage::from_raw(image.n(), image.frames(), data).with_norm_factor(image.norm_factor()))
}

/// First `train` volumes for training, next `test` for testing.
pub fn split_dataset<T: Clone>(volumes: &[T], train: usize, test: usize) -> Result<(Vec<T>, Vec<T>)> {
    if train + test > volumes.len() {
        return Err(Error::config(
            "split",
            format!("{train} + {test} volumes requested, {} available", volumes.len()),
        ));
    }
    Ok((
        volumes[..train].to_vec(),
        volumes[train..train + test].to_vec(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::temporal_fft;

    fn temporal_ac_fraction(img: &DynamicImage) -> f64 {
        let xf = temporal_fft(img);
        let px = img.n() * img.n();
        let ac: f64 = xf.data()[px..].iter().map(|z| z.norm_sqr()).sum();
        ac / xf.energy()
    }

    #[test]
    fn empty_spec_is_degenerate() {
        let spec = PhantomSpec {
            n: 8,
            frames: 2,
            ellipses: vec![],
            disk: None,
            seed: 0,
            jitter: 0.1,
        };
        assert!(matches!(generate_phantom(&spec), Err(Error::DegenerateImage)));
    }

    #[test]
    fn static_spec_has_no_temporal_ac_energy() {
        let img = generate_phantom(&PhantomSpec::static_for(16, 4, 3)).unwrap();
        for t in 1..4 {
            assert_eq!(img.frame(t), img.frame(0));
        }
        assert!(temporal_ac_fraction(&img) < 1e-12);
    }

    #[test]
    fn moving_disk_has_temporal_ac_energy() {
        let img = generate_phantom(&PhantomSpec::default_for(16, 4, 3)).unwrap();
        assert!(temporal_ac_fraction(&img) > 0.0);
    }

    #[test]
    fn generation_is_deterministic_and_normalized() {
        let spec = PhantomSpec::default_for(32, 8, 42);
        let a = generate_phantom(&spec).unwrap();
        let b = generate_phantom(&spec).unwrap();
        assert_eq!(a, b);
        assert!((a.max_magnitude() - 1.0).abs() < 1e-12);
        let c = generate_phantom(&PhantomSpec::default_for(32, 8, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn edges_are_anti_aliased() {
        let img = generate_phantom(&PhantomSpec::static_for(32, 1, 0)).unwrap();
        let frac = img
            .data()
            .iter()
            .filter(|z| {
                let m = z.norm();
                m > 0.0 && m < 0.2
            })
            .count();
        assert!(frac > 0, "expected partially covered boundary pixels");
    }

    #[test]
    fn out_of_bounds_shapes_are_rejected() {
        let mut spec = PhantomSpec::default_for(16, 4, 0);
        spec.ellipses[0].center = (2.0, 8.0);
        assert!(generate_phantom(&spec).is_err());
        let mut spec = PhantomSpec::default_for(16, 4, 0);
        spec.disk.as_mut().unwrap().orbit_radius = 7.0;
        assert!(generate_phantom(&spec).is_err());
    }

    #[test]
    fn suite_members_are_valid_and_distinct() {
        for (n, t) in [(8, 2), (16, 4), (32, 8)] {
            let suite = phantom_suite(n, t, 6, 5);
            let imgs: Vec<_> = suite.iter().map(|s| generate_phantom(s).unwrap()).collect();
            for i in 1..imgs.len() {
                assert_ne!(imgs[0], imgs[i]);
            }
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let img = generate_phantom(&PhantomSpec::default_for(8, 2, 0)).unwrap();
        assert_eq!(add_image_noise(&img, 0.0, 1).unwrap(), img);
    }

    #[test]
    fn noise_has_requested_spread() {
        let img = generate_phantom(&PhantomSpec::default_for(32, 8, 0)).unwrap();
        let noisy = add_image_noise(&img, 0.05, 7).unwrap();
        let diffs: Vec<f64> = img
            .data()
            .iter()
            .zip(noisy.data())
            .flat_map(|(a, b)| {
                let d = b - a;
                [d.re, d.im]
            })
            .collect();
        assert!(diffs.len() >= 8192);
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        let sd = var.sqrt();
        assert!((0.045..=0.055).contains(&sd), "sd = {sd}");
    }

    #[test]
    fn different_noise_seeds_have_similar_energy() {
        let img = generate_phantom(&PhantomSpec::default_for(32, 8, 0)).unwrap();
        let a = add_image_noise(&img, 0.05, 1).unwrap();
        let b = add_image_noise(&img, 0.05, 2).unwrap();
        assert_ne!(a, b);
        let ea: f64 = a.data().iter().zip(img.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
        let eb: f64 = b.data().iter().zip(img.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
        // each energy is 2 p sigma^2 in expectation with relative sd 1/sqrt(p)
        let p = img.data().len() as f64;
        let expect = 2.0 * p * 0.05 * 0.05;
        for e in [ea, eb] {
            assert!((e / expect - 1.0).abs() < 5.0 / p.sqrt(), "{e} vs {expect}");
        }
    }

    #[test]
    fn split_examples() {
        let v: Vec<usize> = (0..7).collect();
        let (tr, te) = split_dataset(&v, 3, 4).unwrap();
        assert_eq!(tr, vec![0, 1, 2]);
        assert_eq!(te, vec![3, 4, 5, 6]);
        let (tr, te) = split_dataset(&[10, 11], 1, 1).unwrap();
        assert_eq!((tr, te), (vec![10], vec![11]));
        assert!(split_dataset(&[1, 2, 3], 3, 1).is_err());
    }
}
