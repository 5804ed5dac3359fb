#![allow(dead_code)]

pub mod qp;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform_vec(r: &mut StdRng, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..k).map(|_| r.random_range(lo..hi)).collect()
}

pub fn random_simplex(r: &mut StdRng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -r.random_range(1e-12..1.0f64).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Strictly increasing means with a unique closest arm, not at a midpoint.
pub fn random_increasing(r: &mut StdRng, k: usize) -> (Vec<f64>, f64) {
    loop {
        let mut mu = uniform_vec(r, k, -3.0, 3.0);
        mu.sort_by(f64::total_cmp);
        if mu.windows(2).any(|p| p[1] - p[0] < 1e-3) {
            continue;
        }
        let s = r.random_range(mu[0] - 0.5..mu[k - 1] + 0.5);
        let mut d: Vec<f64> = mu.iter().map(|m| (m - s).abs()).collect();
        d.sort_by(f64::total_cmp);
        if d[1] - d[0] > 1e-3 {
            return (mu, s);
        }
    }
}

pub fn weighted_cost(x: &[f64], w: &[f64], l: &[f64]) -> f64 {
    x.iter().zip(w).zip(l).map(|((x, w), l)| w * (x - l).powi(2)).sum::<f64>() / 2.0
}
