// Oracle literals keep every digit of the reference computation.
#![allow(clippy::excessive_precision)]

use proptest::prelude::*;
use ruinlab::gaussian_paths::{fbm_cov, CirculantFbm, CirculantWorkspace, DenseFbm, TOL_JITTER};
use ruinlab::rng::{self, Lane};
use ruinlab::stats::{ks_critical, ks_statistic, mean_stderr};
use ruinlab::{gaussian_paths, Hurst, PointSet, TimeGrid};

fn hurst(h: f64) -> Hurst {
    Hurst::new(h).unwrap()
}

/// Values at `t = 1` (or the last grid point) over `reps` circulant paths.
fn terminal_grid(grid: TimeGrid, h: Hurst, reps: u64, seed: u64) -> Vec<f64> {
    let sampler = CirculantFbm::new(grid, h).unwrap();
    let mut ws = CirculantWorkspace::default();
    let mut path = Vec::new();
    (0..reps)
        .map(|r| {
            sampler.sample_into(&mut rng::stream(seed, r, Lane::Gaussian), &mut ws, &mut path);
            *path.last().unwrap()
        })
        .collect()
}

#[test]
fn covariance_examples() {
    assert_eq!(fbm_cov(1.0, 1.0, hurst(0.3)), 1.0);
    assert_eq!(fbm_cov(1.0, 2.0, hurst(0.5)), 1.0);
    // High-precision evaluation of ½(0.5^1.6 + 0.7^1.6 − 0.2^1.6).
    approx::assert_relative_eq!(fbm_cov(0.5, 0.7, hurst(0.8)), 0.409_435_941_478_848_232_61, max_relative = 1e-14);
}

#[test]
fn grid_sampler_is_deterministic() {
    let grid = TimeGrid::new(300, 0.01).unwrap();
    for h in [0.2, 0.5, 0.8] {
        let a = gaussian_paths::sample_fbm_grid(grid, hurst(h), 17).unwrap();
        let b = gaussian_paths::sample_fbm_grid(grid, hurst(h), 17).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.values[0], 0.0);
        assert_eq!(a.values.len(), 301);
        assert_eq!(a.times.len(), 301);
    }
}

#[test]
fn brownian_grid_has_unit_variance_at_one() {
    let ends = terminal_grid(TimeGrid::new(1024, 1.0 / 1024.0).unwrap(), hurst(0.5), 10_000, 3);
    // The variance estimator of a centred normal has standard error √2·σ²/√n.
    let squares: Vec<f64> = ends.iter().map(|x| x * x).collect();
    let (var, se) = mean_stderr(&squares);
    assert!((var - 1.0).abs() <= 4.0 * se, "variance {var} ± {se}");
    for h in [0.25, 0.8] {
        let ends = terminal_grid(TimeGrid::new(256, 1.0 / 256.0).unwrap(), hurst(h), 10_000, 4);
        let squares: Vec<f64> = ends.iter().map(|x| x * x).collect();
        let (var, se) = mean_stderr(&squares);
        assert!((var - 1.0).abs() <= 4.0 * se, "h={h}: variance {var} ± {se}");
    }
}

#[test]
fn brownian_increments_are_uncorrelated() {
    let grid = TimeGrid::new(512, 1.0 / 512.0).unwrap();
    let sampler = CirculantFbm::new(grid, hurst(0.5)).unwrap();
    let mut ws = CirculantWorkspace::default();
    let mut path = Vec::new();
    let products: Vec<f64> = (0..10_000u64)
        .map(|r| {
            sampler.sample_into(&mut rng::stream(5, r, Lane::Gaussian), &mut ws, &mut path);
            let first = path[256];
            let second = path[512] - path[256];
            first * second
        })
        .collect();
    let (m, se) = mean_stderr(&products);
    assert!(m.abs() <= 4.0 * se, "covariance {m} ± {se}");
}

#[test]
fn fractional_grid_increment_correlation() {
    // Adjacent unit increments of fBm have correlation 2^{2H−1} − 1.
    let h = 0.8;
    let grid = TimeGrid::new(2, 1.0).unwrap();
    let sampler = CirculantFbm::new(grid, hurst(h)).unwrap();
    let mut ws = CirculantWorkspace::default();
    let mut path = Vec::new();
    let products: Vec<f64> = (0..20_000u64)
        .map(|r| {
            sampler.sample_into(&mut rng::stream(6, r, Lane::Gaussian), &mut ws, &mut path);
            path[1] * (path[2] - path[1])
        })
        .collect();
    let (m, se) = mean_stderr(&products);
    let exact = 2f64.powf(2.0 * h - 1.0) - 1.0;
    assert!((m - exact).abs() <= 4.0 * se, "{m} ± {se} vs {exact}");
}

#[test]
fn origin_only_point_set() {
    let s = gaussian_paths::sample_fbm_points(PointSet::new(vec![0.0]).unwrap(), hurst(0.3), 1).unwrap();
    assert_eq!(s.values, vec![0.0]);
}

fn empirical_cov(samples: &[Vec<f64>], i: usize, j: usize) -> (f64, f64) {
    let products: Vec<f64> = samples.iter().map(|v| v[i] * v[j]).collect();
    mean_stderr(&products)
}

#[test]
fn dense_brownian_covariance_matrix() {
    let points = PointSet::new(vec![1.0, 2.0, 3.0]).unwrap();
    let sampler = DenseFbm::new(&points, hurst(0.5)).unwrap();
    let samples: Vec<Vec<f64>> = (0..10_000u64)
        .map(|r| {
            let mut v = Vec::new();
            sampler.sample_into(&mut rng::stream(7, r, Lane::Gaussian), &mut v);
            v
        })
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            let (m, se) = empirical_cov(&samples, i, j);
            let exact = (i.min(j) + 1) as f64;
            assert!((m - exact).abs() <= 4.0 * se, "({i},{j}): {m} ± {se}");
        }
    }
}

#[test]
fn dense_fractional_covariance() {
    let points = PointSet::new(vec![0.5, 0.7]).unwrap();
    let sampler = DenseFbm::new(&points, hurst(0.8)).unwrap();
    let samples: Vec<Vec<f64>> = (0..10_000u64)
        .map(|r| {
            let mut v = Vec::new();
            sampler.sample_into(&mut rng::stream(8, r, Lane::Gaussian), &mut v);
            v
        })
        .collect();
    let (m, se) = empirical_cov(&samples, 0, 1);
    assert!((m - 0.409_435_941_478_848).abs() <= 4.0 * se, "{m} ± {se}");
}

#[test]
fn dense_sampler_respects_cap() {
    let points = PointSet::new((1..=10).map(f64::from).collect()).unwrap();
    assert!(matches!(
        DenseFbm::with_cap(&points, hurst(0.3), 9),
        Err(ruinlab::Error::TooManyPoints { count: 10, cap: 9 })
    ));
}

#[test]
fn grid_and_point_samplers_agree_in_law() {
    let h = hurst(0.7);
    let grid = TimeGrid::new(7, 0.25).unwrap();
    let reps = 10_000u64;
    let from_grid = terminal_grid(grid, h, reps, 9);
    let points = PointSet::new(grid.times()).unwrap();
    let dense = DenseFbm::new(&points, h).unwrap();
    let mut v = Vec::new();
    let from_points: Vec<f64> = (0..reps)
        .map(|r| {
            dense.sample_into(&mut rng::stream(10, r, Lane::Gaussian), &mut v);
            *v.last().unwrap()
        })
        .collect();
    let d = ks_statistic(&from_grid, &from_points);
    assert!(d < ks_critical(1e-3, reps as usize, reps as usize), "KS {d}");
}

#[test]
fn self_similarity_in_law() {
    let h = 0.3;
    let a = 4.0;
    let reps = 10_000u64;
    let base = terminal_grid(TimeGrid::new(64, 1.0 / 64.0).unwrap(), hurst(h), reps, 11);
    let stretched: Vec<f64> = terminal_grid(TimeGrid::new(64, a / 64.0).unwrap(), hurst(h), reps, 12)
        .into_iter()
        .map(|x| x * a.powf(-h))
        .collect();
    let d = ks_statistic(&base, &stretched);
    assert!(d < ks_critical(1e-3, reps as usize, reps as usize), "KS {d}");
}

proptest! {
    #[test]
    fn covariance_is_symmetric(s in 0.0f64..50.0, t in 0.0f64..50.0, h in 0.01f64..0.99) {
        let h = hurst(h);
        prop_assert_eq!(fbm_cov(s, t, h), fbm_cov(t, s, h));
    }

    #[test]
    fn brownian_covariance_is_minimum(s in 0.0f64..100.0, t in 0.0f64..100.0) {
        let v = fbm_cov(s, t, hurst(0.5));
        prop_assert!((v - s.min(t)).abs() <= 4.0 * f64::EPSILON * s.max(t));
    }

    #[test]
    fn covariance_on_the_diagonal(t in 0.0f64..100.0, h in 0.01f64..0.99) {
        let v = fbm_cov(t, t, hurst(h));
        prop_assert!((v - t.powf(2.0 * h)).abs() <= 1e-14 * v.max(1.0));
    }

    #[test]
    fn covariance_factorizes_with_bounded_jitter(
        gaps in prop::collection::vec(1e-6f64..2.0, 1..64),
        h in prop::sample::select(vec![0.2, 0.5, 0.8]),
    ) {
        let times: Vec<f64> = gaps.iter().scan(0.0, |acc, g| { *acc += g; Some(*acc) }).collect();
        let max_diag = times.last().unwrap().powf(2.0 * h);
        let points = PointSet::new(times).unwrap();
        let sampler = DenseFbm::new(&points, hurst(h)).unwrap();
        prop_assert!(sampler.jitter() <= TOL_JITTER * 1e3 * max_diag);
    }

    #[test]
    fn point_samples_start_at_zero(gaps in prop::collection::vec(0.01f64..1.0, 1..20), seed: u64) {
        let mut times = vec![0.0];
        times.extend(gaps.iter().scan(0.0, |acc, g| { *acc += g; Some(*acc) }));
        let s = gaussian_paths::sample_fbm_points(PointSet::new(times).unwrap(), hurst(0.35), seed).unwrap();
        prop_assert_eq!(s.values[0], 0.0);
        prop_assert_eq!(s.values.len(), s.times.len());
    }
}
