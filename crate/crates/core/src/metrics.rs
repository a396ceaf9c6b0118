//! Reconstruction quality metrics.
//!
//! PSNR and SSIM are computed on magnitude images with the peak fixed at 1.0
//! (volumes are normalized at ingestion). PSNR uses a single MSE over the
//! whole volume rather than a per-frame average.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::DynamicImage;

pub const PEAK: f64 = 1.0;
pub const SSIM_WINDOW: usize = 8;
/// Magnitude MSE at or below which a reconstruction counts as exact
/// (RMSE of 1e-10 at unit peak, i.e. 200 dB). Unitary FFT round trips land
/// around 1e-32, so full-mask decodes hit the sentinel.
pub const EXACT_MSE: f64 = 1e-20;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricId {
    Psnr,
    Ssim,
    NegMse,
}

impl MetricId {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::Psnr => "psnr",
            MetricId::Ssim => "ssim",
            MetricId::NegMse => "negmse",
        }
    }

    /// Quality score, oriented so larger is better.
    pub fn score(&self, x: &DynamicImage, xhat: &DynamicImage) -> Result<f64> {
        match self {
            MetricId::Psnr => psnr(x, xhat),
            MetricId::Ssim => ssim(x, xhat),
            MetricId::NegMse => mse(x, xhat).map(|v| -v),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psnr" => Ok(MetricId::Psnr),
            "ssim" => Ok(MetricId::Ssim),
            "negmse" | "neg_mse" | "mse" => Ok(MetricId::NegMse),
            _ => Err(Error::Unknown {
                kind: "metric",
                id: s.to_string(),
            }),
        }
    }
}

fn same_dims(x: &DynamicImage, y: &DynamicImage) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(Error::Dimension(format!(
            "{:?} vs {:?}",
            x.dims(),
            y.dims()
        )));
    }
    Ok(())
}

/// Mean of `|x_i - y_i|^2` over all complex entries.
pub fn mse(x: &DynamicImage, y: &DynamicImage) -> Result<f64> {
    same_dims(x, y)?;
    let sum: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(sum / x.data().len() as f64)
}

/// Mean of `(|x_i| - |y_i|)^2`.
pub fn magnitude_mse(x: &DynamicImage, y: &DynamicImage) -> Result<f64> {
    same_dims(x, y)?;
    let sum: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| {
            let d = a.norm_sqr().sqrt() - b.norm_sqr().sqrt();
            d * d
        })
        .sum();
    Ok(sum / x.data().len() as f64)
}

/// PSNR in dB on magnitudes with unit peak. Returns `f64::INFINITY` when the
/// magnitudes agree to within [`EXACT_MSE`].
pub fn psnr(x: &DynamicImage, y: &DynamicImage) -> Result<f64> {
    let m = magnitude_mse(x, y)?;
    if m <= EXACT_MSE {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / m).log10())
}

/// Summed-area table with a zero border: `s[(i, j)]` sums rows `< i`, cols `< j`.
struct Integral {
    w: usize,
    s: Vec<f64>,
}

impl Integral {
    fn new(img: &[f64], n: usize) -> Self {
        let w = n + 1;
        let mut s = vec![0.0; w * w];
        for y in 0..n {
            let mut row = 0.0;
            for x in 0..n {
                row += img[y * n + x];
                s[(y + 1) * w + x + 1] = s[y * w + x + 1] + row;
            }
        }
        Self { w, s }
    }

    fn window(&self, y: usize, x: usize, size: usize) -> f64 {
        let w = self.w;
        self.s[(y + size) * w + x + size] - self.s[y * w + x + size] - self.s[(y + size) * w + x]
            + self.s[y * w + x]
    }
}

/// Mean SSIM over all 8x8 windows (stride 1) of every frame, on magnitude
/// images. Window statistics are unweighted population moments.
pub fn ssim(x: &DynamicImage, y: &DynamicImage) -> Result<f64> {
    same_dims(x, y)?;
    let (n, frames) = x.dims();
    if n < SSIM_WINDOW {
        return Err(Error::Dimension(format!(
            "frame {n}x{n} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let area = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let span = n - SSIM_WINDOW + 1;

    let mut total = 0.0;
    for t in 0..frames {
        let a: Vec<f64> = x.frame(t).iter().map(|z| z.norm_sqr().sqrt()).collect();
        let b: Vec<f64> = y.frame(t).iter().map(|z| z.norm_sqr().sqrt()).collect();
        let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u * v).collect();
        let (sa, sb) = (Integral::new(&a, n), Integral::new(&b, n));
        let (saa, sbb, sab) = (Integral::new(&aa, n), Integral::new(&bb, n), Integral::new(&ab, n));
        for wy in 0..span {
            for wx in 0..span {
                let mu_a = sa.window(wy, wx, SSIM_WINDOW) / area;
                let mu_b = sb.window(wy, wx, SSIM_WINDOW) / area;
                let var_a = saa.window(wy, wx, SSIM_WINDOW) / area - mu_a * mu_a;
                let var_b = sbb.window(wy, wx, SSIM_WINDOW) / area - mu_b * mu_b;
                let cov = sab.window(wy, wx, SSIM_WINDOW) / area - mu_a * mu_b;
                total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                    / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            }
        }
    }
    Ok(total / (frames * span * span) as f64)
}
