//! Seeded sample-point generation.
//!
//! Base coordinates are uniform on [-1, 1]^n (then shifted into the metric's
//! validity domain); fiber vectors are uniform directions with radius
//! uniform on the annulus [1/2, 2], resampled away from directions the
//! metric declares degenerate. Identical seeds give identical point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jets::TangentPoint;

use super::zoo::ZooMetric;

const RADIUS_MIN: f64 = 0.5;
const RADIUS_MAX: f64 = 2.0;

fn draw_fiber(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        // Gaussian direction via Box-Muller on uniform pairs
        let dir: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.gen_range(1e-12..1.0);
                let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u.ln()).sqrt() * v.cos()
            })
            .collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        let radius = rng.gen_range(RADIUS_MIN..RADIUS_MAX);
        return dir.into_iter().map(|d| d * radius / norm).collect();
    }
}

/// Sample points for a builtin metric, honoring its domain restrictions.
pub fn sample_points(metric: &ZooMetric, count: usize, seed: u64) -> Vec<TangentPoint> {
    let n = metric.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        metric.adjust_base_point(&mut x);
        let y = draw_fiber(&mut rng, n);
        if !metric.fiber_acceptable(&y) {
            continue;
        }
        out.push(TangentPoint::new(x, y).expect("sampled fiber is nonzero"));
    }
    out
}

/// Sample points with no domain restrictions (expression metrics).
pub fn sample_points_generic(n: usize, count: usize, seed: u64) -> Vec<TangentPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = draw_fiber(&mut rng, n);
            TangentPoint::new(x, y).expect("sampled fiber is nonzero")
        })
        .collect()
}
