mod common;

use common::*;
use num_complex::Complex64;
use rand::Rng;
use sgmask::metrics::{mse, psnr, ssim, MetricId};
use sgmask::rng::stream_rng;
use sgmask::DynamicImage;

fn perturbed(x: &DynamicImage, seed: u64, scale: f64) -> DynamicImage {
    let mut rng = stream_rng(seed, 98);
    let data = x
        .data()
        .iter()
        .map(|z| z + Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
        .collect();
    DynamicImage::new(x.n(), x.frames(), data).unwrap()
}

fn random_pair(i: u64) -> (DynamicImage, DynamicImage) {
    let mut rng = stream_rng(i, 97);
    let n = rng.random_range(8..=16);
    let frames = rng.random_range(1..=3);
    let x = random_image(n, frames, 1000 + i).map(|z| z * 0.5);
    let y = perturbed(&x, 2000 + i, 0.05 + 0.05 * i as f64);
    (x, y)
}

#[test]
fn metrics_match_brute_force_on_random_pairs() {
    for i in 0..20 {
        let (x, y) = random_pair(i);
        assert!(rel_err(mse(&x, &y).unwrap(), naive_mse(&x, &y)) < 1e-9, "mse pair {i}");
        assert!((psnr(&x, &y).unwrap() - naive_psnr(&x, &y)).abs() < 1e-9, "psnr pair {i}");
        assert!((ssim(&x, &y).unwrap() - naive_ssim(&x, &y)).abs() < 1e-9, "ssim pair {i}");
    }
}

#[test]
fn mse_is_symmetric() {
    for i in 0..5 {
        let (x, y) = random_pair(i);
        assert_eq!(mse(&x, &y).unwrap(), mse(&y, &x).unwrap());
    }
}

#[test]
fn identity_and_sentinel() {
    for i in 0..5 {
        let (x, _) = random_pair(i);
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(psnr(&x, &x).unwrap(), f64::INFINITY);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
    }
    // a quarter turn keeps every magnitude bit-exact
    let (x, _) = random_pair(7);
    let rotated = x.map(|z| z * Complex64::i());
    assert_eq!(psnr(&x, &rotated).unwrap(), f64::INFINITY);
}

#[test]
fn psnr_half_energy_example() {
    let x = DynamicImage::new(1, 2, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
    let v = psnr(&x, &DynamicImage::zeros(1, 2)).unwrap();
    assert!((v - 3.0103).abs() < 1e-4);
}

#[test]
fn shifted_checkerboard_ssim_matches_windowed_oracle() {
    let a = checkerboard(16, 0);
    let b = checkerboard(16, 1);
    let got = ssim(&a, &b).unwrap();
    assert!((got - naive_ssim(&a, &b)).abs() < 1e-9);
    assert!(got < 0.0, "complementary patterns are anti-correlated: {got}");
}

#[test]
fn psnr_ordering_follows_error_size() {
    let x = random_image(12, 2, 5).map(|z| z * 0.5);
    let near = perturbed(&x, 6, 0.01);
    let far = perturbed(&x, 6, 0.1);
    assert!(psnr(&x, &near).unwrap() > psnr(&x, &far).unwrap());
    assert!(MetricId::NegMse.score(&x, &near).unwrap() > MetricId::NegMse.score(&x, &far).unwrap());
}
