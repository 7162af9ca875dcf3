//! Unit directions, geodesic distances and probe grids on `S^{n-1}`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Sampled directions of a limit set together with the origin flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionCloud {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    pub origin_member: bool,
}

impl DirectionCloud {
    pub fn empty(dim: usize, origin_member: bool) -> Self {
        DirectionCloud { dim, directions: Vec::new(), origin_member }
    }

    /// Normalizes each vector; zero vectors only set `origin_member`.
    pub fn from_vectors(dim: usize, vectors: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut cloud = DirectionCloud::empty(dim, false);
        for v in vectors {
            cloud.origin_member = true;
            if let Some(u) = normalize(&v) {
                cloud.directions.push(u);
            }
        }
        cloud
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `v / |v|`, or `None` for the zero vector.
pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if n > 0.0 && n.is_finite() {
        Some(v.iter().map(|x| x / n).collect())
    } else {
        None
    }
}

/// Great-circle distance between two unit vectors.
pub fn geodesic(a: &[f64], b: &[f64]) -> f64 {
    let chord = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    2.0 * (chord / 2.0).min(1.0).asin()
}

/// Distance from `d` to the nearest member of `cloud`, `π` if there is none.
pub fn distance_to_cloud(d: &[f64], cloud: &[Vec<f64>]) -> f64 {
    cloud.iter().map(|c| geodesic(d, c)).fold(PI, f64::min)
}

/// Directed distance `max_{a} min_{b} d(a, b)`.
pub fn directed_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().map(|x| distance_to_cloud(x, b)).fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance; two empty sets are at distance 0 and an
/// empty set is at distance `π` from a non-empty one.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => PI,
        _ => directed_hausdorff(a, b).max(directed_hausdorff(b, a)),
    }
}

/// Deterministic, roughly uniform directions on `S^{n-1}`: equally spaced
/// angles on the circle, a Fibonacci lattice on `S^2`, seeded Gaussian
/// samples above that.
pub fn sphere_grid(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                if let Some(u) = normalize(&v) {
                    out.push(u);
                }
            }
            out
        }
    }
}

/// Typical spacing of [`sphere_grid`] with `count` points.
pub fn grid_resolution(dim: usize, count: usize) -> f64 {
    match dim {
        0 | 1 => 0.0,
        2 => 2.0 * PI / count as f64,
        3 => (4.0 * PI / count as f64).sqrt(),
        d => (surface_area(d) / count as f64).powf(1.0 / (d as f64 - 1.0)),
    }
}

fn surface_area(dim: usize) -> f64 {
    // |S^{d-1}| = 2 π^{d/2} / Γ(d/2), by the recursion |S^{d+1}| = 2π/d |S^{d-1}|
    let (mut area, mut d) = if dim % 2 == 0 { (2.0 * PI, 2) } else { (4.0 * PI, 3) };
    while d < dim {
        area *= 2.0 * PI / d as f64;
        d += 2;
    }
    area
}
