use std::f64::consts::PI;

use jmgt_core::lp::{
    bernstein_ratio, chemin_lerner_norm, chi, dyadic_block, interpolation_check, mixed_time_norm, phi,
    BesovEvaluator, SpectralSamples, TimeExponent,
};
use jmgt_core::util::log_space;
use jmgt_core::{DyadicPartition, Grid, NormSeries, SpectralGrid, SumExponent};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn partition_sum(r: f64) -> f64 {
    chi(r) + (0..80).map(|q| phi(r / 2f64.powi(q))).sum::<f64>()
}

/// Random real field whose spectrum lives on `lo ≤ |m| ≤ hi`.
fn band_field(sg: &SpectralGrid, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let spec: Vec<Complex64> = sg
        .modes()
        .iter()
        .map(|m| {
            let r = (m.m2() as f64).sqrt();
            let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            if r >= lo && r <= hi {
                z
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    sg.inverse(&spec)
}

fn sup(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn gaussian_samples(k: &[f64], sigma: f64, amp: f64) -> Vec<f64> {
    let c = (2.0 * PI * sigma * sigma).powf(1.5);
    k.iter().map(|&k| (amp * c * (-0.5 * sigma * sigma * k * k).exp()).powi(2)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partition_of_unity(log_r in -8.0f64..12.0) {
        let r = 10f64.powf(log_r);
        prop_assert!((partition_sum(r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distant_blocks_are_orthogonal(log_r in -6.0f64..6.0, q in -10i32..10, gap in 2i32..6) {
        let r = 10f64.powf(log_r);
        let a = phi(r / 2f64.powi(q));
        let b = phi(r / 2f64.powi(q + gap));
        prop_assert_eq!(a * b, 0.0);
    }

    #[test]
    fn bernstein_bounds_on_block_limited_samples(seed in any::<u64>(), q in -6i32..6, ell in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 2f64.powi(q);
        let k: Vec<f64> = (0..64).map(|_| scale * rng.random_range(0.75..8.0 / 3.0)).collect();
        let mass: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
        let s = SpectralSamples::new(k, mass).unwrap();
        let r = bernstein_ratio(&s, ell as f64, q).unwrap();
        let e = ell as i32;
        prop_assert!(r >= 0.75f64.powi(e) * (1.0 - 1e-12) && r <= (8.0f64 / 3.0).powi(e) * (1.0 + 1e-12));
    }

    #[test]
    fn norm_is_monotone_in_sum_exponent(seed in any::<u64>(), s in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = log_space(1e-2, 1e2, 300);
        let mass: Vec<f64> = k.iter().map(|_| rng.random::<f64>()).collect();
        let ev = BesovEvaluator::covering(&k, true).unwrap();
        let n = |r| ev.norm(&mass, s, r).value;
        let (inf, two, one) = (n(SumExponent::Inf), n(SumExponent::Two), n(SumExponent::One));
        prop_assert!(inf <= two * (1.0 + 1e-12) && two <= one * (1.0 + 1e-12));
    }

    #[test]
    fn derivative_equivalence(seed in any::<u64>(), s in -1.5f64..2.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = log_space(1e-2, 1e2, 400);
        let mass: Vec<f64> = k.iter().map(|_| rng.random::<f64>()).collect();
        let f = SpectralSamples::new(k.clone(), mass).unwrap();
        let grad = f.lambda_power(1.0);
        let ev = BesovEvaluator::covering(&k, true).unwrap();
        let a = ev.norm(&f.mass, s, SumExponent::One).value;
        let b = ev.norm(&grad.mass, s - 1.0, SumExponent::One).value;
        // blockwise |ξ| ∈ 2^q [1, 8/3]
        prop_assert!(b >= a * (1.0 - 1e-12) && b <= 8.0 / 3.0 * a * (1.0 + 1e-12));
    }

    #[test]
    fn minkowski_ordering(seed in any::<u64>(), s in -1.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let times: Vec<f64> = (0..41).map(|i| i as f64 * 0.25).collect();
        let blocks: Vec<(i32, NormSeries)> = (-3..5)
            .map(|q| {
                let a: f64 = rng.random();
                let rate: f64 = rng.random_range(0.0..2.0);
                let phase: f64 = rng.random_range(0.0..6.0);
                let v = times.iter().map(|t| a * (-rate * t).exp() * (1.0 + 0.5 * (t + phase).sin())).collect();
                (q, NormSeries::new(times.clone(), v, format!("q{q}")).unwrap())
            })
            .collect();
        for theta in [TimeExponent::Two, TimeExponent::Inf] {
            for r in [SumExponent::One, SumExponent::Two, SumExponent::Inf] {
                let cl = chemin_lerner_norm(&blocks, theta, s, r).unwrap();
                let mx = mixed_time_norm(&blocks, theta, s, r).unwrap();
                let slack = 1e-12 * cl.max(mx);
                if r.value() >= theta.value() {
                    prop_assert!(cl <= mx + slack, "r ≥ θ: {cl} > {mx}");
                }
                if r.value() <= theta.value() {
                    prop_assert!(mx <= cl + slack, "r ≤ θ: {mx} > {cl}");
                }
            }
        }
    }
}

#[test]
fn partition_identity_at_ten_thousand_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let worst = (0..10_000)
        .map(|_| partition_sum(10f64.powf(rng.random_range(-6.0..6.0))))
        .fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    assert!(worst < 1e-12, "{worst:e}");
}

#[test]
fn torus_blocks_sum_back_and_are_orthogonal() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    let sg = SpectralGrid::new(g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut f = sg.forward(&band_field(&sg, 1.0, 7.0, &mut rng));
    f[0] = Complex64::new(0.0, 0.0);
    let p = DyadicPartition { q_min: -1, q_max: 4 };
    let blocks: Vec<Vec<Complex64>> = (-1..=4).map(|q| dyadic_block(&sg, &f, &p, q, true).unwrap()).collect();
    let sum: Vec<Complex64> = (0..f.len()).map(|i| blocks.iter().map(|b| b[i]).sum()).collect();
    let err: f64 = sum.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err:e}");
    for (i, q) in (-1..=4).enumerate() {
        for q2 in (q + 2)..=4 {
            let bb = dyadic_block(&sg, &blocks[i], &p, q2, true).unwrap();
            assert!(bb.iter().all(|z| z.norm() == 0.0), "blocks {q} and {q2}");
        }
    }
}

#[test]
fn product_estimate_constant_is_stable() {
    let g = Grid::new(3, 32, 2.0 * PI).unwrap();
    let sg = SpectralGrid::new(g).unwrap();
    let k: Vec<f64> = sg.modes().iter().map(|m| m.k_abs()).collect();
    let ev = BesovEvaluator::covering(&k, true).unwrap();
    let b32 = |f: &[f64]| {
        let s = SpectralSamples::from_grid(&sg, &sg.forward(f));
        ev.norm(&s.mass, 1.5, SumExponent::One).value
    };
    let batch = |seed: u64| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..8)
            .map(|_| {
                let f = band_field(&sg, 0.0, 5.0, &mut rng);
                let h = band_field(&sg, 0.0, 5.0, &mut rng);
                let fh: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a * b).collect();
                b32(&fh) / (sup(&f) * b32(&h) + sup(&h) * b32(&f))
            })
            .collect()
    };
    let fit = batch(10).into_iter().fold(0.0, f64::max);
    let check = batch(20).into_iter().fold(0.0, f64::max);
    assert!(fit.is_finite() && fit > 0.0);
    assert!(check <= 2.0 * fit, "fitted {fit}, held-out {check}");
}

#[test]
fn embedding_constant_fits_bump_family() {
    let k = log_space(1e-4, 1e2, 4096);
    let ev = BesovEvaluator::covering(&k, true).unwrap();
    let ratio = |widths: &[(f64, f64)]| {
        let l1: f64 = widths.iter().map(|&(s, a)| a * (2.0 * PI * s * s).powf(1.5)).sum();
        let amp: Vec<f64> = k
            .iter()
            .map(|&kk| widths.iter().map(|&(s, a)| a * (2.0 * PI * s * s).powf(1.5) * (-0.5 * s * s * kk * kk).exp()).sum())
            .collect();
        let power: Vec<f64> = amp.iter().map(|a| a * a).collect();
        let samples = SpectralSamples::from_radial(&k, &power, 3).unwrap();
        ev.norm(&samples.mass, -1.5, SumExponent::Inf).value / l1
    };
    let family: Vec<Vec<(f64, f64)>> = vec![
        vec![(0.5, 1.0)],
        vec![(0.8, 1.0)],
        vec![(1.0, 1.0)],
        vec![(1.5, 1.0)],
        vec![(2.0, 1.0)],
        vec![(3.0, 1.0)],
        vec![(0.5, 1.0), (2.0, 0.1)],
        vec![(1.0, 2.0), (3.0, 0.05)],
        vec![(0.7, 0.3), (1.2, 0.7)],
        vec![(0.6, 1.0), (1.1, 1.0), (2.5, 1.0)],
    ];
    let ratios: Vec<f64> = family.iter().map(|f| ratio(f)).collect();
    let c = ratios.iter().copied().fold(0.0, f64::max);
    assert!(c.is_finite() && c > 0.0);
    // the low-frequency blocks see only ∫f, so the ratio barely moves across the family
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(lo >= 0.9 * c, "{ratios:?}");
    // Ḃ^{-3/2}_{2,∞} and L¹ share the 3D scaling, so halving the width changes nothing
    let shrunk: Vec<(f64, f64)> = family[2].iter().map(|&(s, a)| (0.5 * s, a)).collect();
    assert!((ratio(&shrunk) / ratios[2] - 1.0).abs() < 1e-3);
}

#[test]
fn interpolation_ratio_is_scale_invariant_for_dyadic_bumps() {
    let base = log_space(1.0, 2.0, 64);
    let report = |q: i32| {
        let k: Vec<f64> = base.iter().map(|x| x * 2f64.powi(q)).collect();
        let power: Vec<f64> = base.iter().map(|x| (-(x - 1.5f64).powi(2) * 20.0).exp()).collect();
        let s = SpectralSamples::from_radial(&k, &power, 3).unwrap();
        // rescale the mass so every bump has the same L² norm
        let total = s.total();
        let s = SpectralSamples::new(s.k.clone(), s.mass.iter().map(|m| m / total).collect()).unwrap();
        interpolation_check(&s, 0.0, 1.0, 1.5).unwrap()
    };
    let r0 = report(0).ratio;
    for q in [-3, -1, 2, 4] {
        assert!((report(q).ratio / r0 - 1.0).abs() < 1e-9, "q={q}");
    }
    assert!(r0.is_finite() && r0 > 0.0);
}

#[test]
fn interpolation_holds_for_gaussians_with_bounded_constant() {
    let k = log_space(1e-4, 1e2, 4096);
    let ratios: Vec<f64> = [0.3, 0.6, 1.0, 2.0, 4.0]
        .iter()
        .map(|&sigma| {
            let s = SpectralSamples::from_radial(&k, &gaussian_samples(&k, sigma, 1.0), 3).unwrap();
            interpolation_check(&s, 0.0, 1.0, 1.5).unwrap().ratio
        })
        .collect();
    let c = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(c.is_finite() && lo > 0.0);
    // pure dilations leave the ratio fixed
    assert!(c / lo < 1.01, "{ratios:?}");
}
