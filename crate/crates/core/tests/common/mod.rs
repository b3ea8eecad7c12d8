//! Seeded generators and independent reference computations shared by the
//! integration tests.

#![allow(dead_code)]

use motlab::measures::{quantize, DiscreteMeasure, MeasurePair};
use motlab::mot::Coupling;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to `max_atoms` atoms in `[lo, hi]` with weights bounded away from 0.
pub fn random_measure(r: &mut ChaCha8Rng, max_atoms: usize, lo: f64, hi: f64) -> DiscreteMeasure<f64> {
    let n = r.gen_range(1..=max_atoms);
    let atoms: Vec<f64> = (0..n).map(|_| r.gen_range(lo..hi)).collect();
    let weights: Vec<f64> = (0..n).map(|_| r.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::from_f64(&atoms, &weights).unwrap()
}

/// `(quantize(P, k), P)` for a random parent `P`, ordered by construction.
pub fn ordered_pair(r: &mut ChaCha8Rng, max_atoms: usize) -> MeasurePair<f64> {
    let parent = random_measure(r, max_atoms, -3.0, 3.0);
    let k = r.gen_range(1..=parent.len());
    MeasurePair::new(quantize(&parent, k).unwrap(), parent)
}

/// Stability base: a 4-block coarsening and the parent itself, both
/// quantized at resolution 64, from a random parent grid on `[-1/2, 1/2]`.
pub fn stability_base(seed: u64) -> MeasurePair<f64> {
    let mut r = rng(seed);
    let grid: Vec<f64> = (0..200).map(|i| -0.5 + i as f64 / 199.0).collect();
    let weights: Vec<f64> = grid.iter().map(|_| r.gen_range(0.0..1.0f64).powi(2)).collect();
    let parent = DiscreteMeasure::from_f64(&grid, &weights).unwrap();
    let coarse = quantize(&parent, 4).unwrap();
    MeasurePair::new(quantize(&coarse, 64).unwrap(), quantize(&parent, 64).unwrap())
}

pub fn random_coupling(r: &mut ChaCha8Rng, max_side: usize) -> Coupling<f64> {
    let nx = r.gen_range(1..=max_side);
    let ny = r.gen_range(1..=max_side);
    let mut cells = Vec::new();
    for _ in 0..nx {
        let x = r.gen_range(-2.0..2.0);
        for _ in 0..ny {
            if r.gen_bool(0.7) {
                cells.push((x, r.gen_range(-2.0..2.0), r.gen_range(0.05..1.0)));
            }
        }
        if cells.last().map(|c| c.0) != Some(x) {
            cells.push((x, r.gen_range(-2.0..2.0), r.gen_range(0.05..1.0)));
        }
    }
    Coupling::from_cells(&cells).unwrap()
}

/// `G(u) = ∫₀ᵘ F⁻¹` at the given levels.
fn integrated_quantile(mu: &DiscreteMeasure<f64>, levels: &[f64]) -> Vec<f64> {
    levels
        .iter()
        .map(|&u| {
            let (mut acc, mut cum) = (0.0, 0.0);
            for (&x, &w) in mu.iter() {
                let take = w.min(u - cum).max(0.0);
                acc += take * x;
                cum += w;
                if cum >= u {
                    break;
                }
            }
            acc
        })
        .collect()
}

/// Convex order via integrated quantile functions: equal means and
/// `G₁ ≥ G₂` everywhere, which suffices at the cumulative-weight breakpoints
/// of both measures since both G are piecewise linear there.
pub fn convex_order_by_quantiles(mu1: &DiscreteMeasure<f64>, mu2: &DiscreteMeasure<f64>, tol: f64) -> bool {
    let mut levels = Vec::new();
    for m in [mu1, mu2] {
        let mut c = 0.0;
        for w in m.weights() {
            c += w;
            levels.push(c.min(1.0));
        }
    }
    levels.sort_by(f64::total_cmp);
    let g1 = integrated_quantile(mu1, &levels);
    let g2 = integrated_quantile(mu2, &levels);
    (mu1.mean() - mu2.mean()).abs() <= tol && g1.iter().zip(&g2).all(|(a, b)| a + tol >= *b)
}

/// W1 on the line as `∫|F⁻¹ − G⁻¹|`, integrating over the merged breakpoints.
pub fn w1_by_quantiles(mu: &DiscreteMeasure<f64>, nu: &DiscreteMeasure<f64>) -> f64 {
    let cdf = |m: &DiscreteMeasure<f64>| {
        let mut c = 0.0;
        m.weights()
            .iter()
            .map(|w| {
                c += w;
                c
            })
            .collect::<Vec<_>>()
    };
    let (ca, cb) = (cdf(mu), cdf(nu));
    let mut levels: Vec<f64> = ca.iter().chain(&cb).copied().collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    let q = |m: &DiscreteMeasure<f64>, c: &[f64], u: f64| {
        let k = c.iter().position(|&v| v >= u).unwrap_or(c.len() - 1);
        m.atoms()[k]
    };
    levels
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[1] - w[0]) * (q(mu, &ca, mid) - q(nu, &cb, mid)).abs()
        })
        .sum()
}
