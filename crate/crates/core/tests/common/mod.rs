//! Straightforward reference implementations used as test oracles. Nothing
//! here shares code with the library beyond the data types.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use sgmask::rng::stream_rng;
use sgmask::{DynamicImage, Mask};

pub fn random_image(n: usize, frames: usize, seed: u64) -> DynamicImage {
    let mut rng = stream_rng(seed, 99);
    let data = (0..n * n * frames)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    DynamicImage::new(n, frames, data).unwrap()
}

/// Unitary 2-D DFT of one `n x n` frame, `sign = -1` forward, `+1` inverse.
pub fn naive_dft2(frame: &[Complex64], n: usize, sign: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for ky in 0..n {
        for kx in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..n {
                for x in 0..n {
                    let phase = sign * 2.0 * PI * ((ky * y + kx * x) % n) as f64 / n as f64;
                    acc += frame[y * n + x] * Complex64::from_polar(1.0, phase);
                }
            }
            out[ky * n + kx] = acc / n as f64;
        }
    }
    out
}

/// Zero-filled reconstruction through naive DFTs.
pub fn naive_zero_fill(x: &DynamicImage, mask: &Mask) -> DynamicImage {
    let (n, frames) = x.dims();
    let mut data = Vec::with_capacity(n * n * frames);
    for t in 0..frames {
        let k = naive_dft2(x.frame(t), n, -1.0);
        let mut kept = vec![Complex64::new(0.0, 0.0); n * n];
        for l in mask.lines().iter().filter(|l| l.frame == t) {
            kept[l.row * n..(l.row + 1) * n].copy_from_slice(&k[l.row * n..(l.row + 1) * n]);
        }
        data.extend(naive_dft2(&kept, n, 1.0));
    }
    DynamicImage::new(n, frames, data).unwrap()
}

pub fn naive_mse(x: &DynamicImage, y: &DynamicImage) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.data().len() {
        let d = x.data()[i] - y.data()[i];
        sum += d.re * d.re + d.im * d.im;
    }
    sum / x.data().len() as f64
}

pub fn naive_psnr(x: &DynamicImage, y: &DynamicImage) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.data().len() {
        let d = x.data()[i].norm() - y.data()[i].norm();
        sum += d * d;
    }
    let mse = sum / x.data().len() as f64;
    if mse <= 1e-20 {
        return f64::INFINITY;
    }
    10.0 * (1.0 / mse).log10()
}

/// Mean SSIM over every 8x8 window of every frame, two-pass moments.
pub fn naive_ssim(x: &DynamicImage, y: &DynamicImage) -> f64 {
    let (n, frames) = x.dims();
    let w = 8;
    let c1 = 0.01f64 * 0.01;
    let c2 = 0.03f64 * 0.03;
    let mut total = 0.0;
    let mut count = 0usize;
    for t in 0..frames {
        for wy in 0..=n - w {
            for wx in 0..=n - w {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for dy in 0..w {
                    for dx in 0..w {
                        a.push(x.get(t, wy + dy, wx + dx).norm());
                        b.push(y.get(t, wy + dy, wx + dx).norm());
                    }
                }
                let len = a.len() as f64;
                let ma = a.iter().sum::<f64>() / len;
                let mb = b.iter().sum::<f64>() / len;
                let va = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / len;
                let vb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / len;
                let cov = a.iter().zip(&b).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / len;
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
    }
    total / count as f64
}

pub fn checkerboard(n: usize, shift: usize) -> DynamicImage {
    let data = (0..n * n)
        .map(|i| {
            let (y, x) = (i / n, i % n);
            Complex64::new(((y + x + shift) % 2) as f64, 0.0)
        })
        .collect();
    DynamicImage::new(n, 1, data).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
