//! Low-discrepancy sampling of a formula's solution set in log coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::formula::Term;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

pub(crate) const MAX_DIM: usize = PRIMES.len();

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points in `[lo, hi]^n` with a random shift modulo 1 drawn from
/// `(seed, stream)`.
pub(crate) struct Halton {
    shift: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Halton {
    pub fn new(dim: usize, lo: f64, hi: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Halton { shift: (0..dim).map(|_| rng.random::<f64>()).collect(), lo, hi }
    }

    pub fn unit(&self, index: u64) -> Vec<f64> {
        self.shift.iter().enumerate().map(|(d, s)| (radical_inverse(index + 1, PRIMES[d]) + s).fract()).collect()
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        self.unit(index).into_iter().map(|u| self.lo + (self.hi - self.lo) * u).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What the sampler needs from a semantics: signed gaps of the equality
/// atoms and the acceptance test.
pub(crate) trait Membership: Sync {
    fn gap(&self, lhs: &Term, rhs: &Term, p: &[f64]) -> f64;
    /// `refined` points come from bisection and may use the looser
    /// equality tolerance.
    fn holds(&self, p: &[f64], refined: bool) -> bool;
}

pub(crate) struct Plan<'a> {
    pub eq_atoms: Vec<(&'a Term, &'a Term)>,
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub lines: usize,
    pub seed: u64,
    pub stream: u64,
    /// When set, each coordinate of a sample is drawn either from
    /// `[lo, hi]` or from `[lo, hi]` times this factor, following a hashed
    /// per-index pattern. Sets whose image collapses towards a coordinate
    /// subspace are then still hit.
    pub inner_scale: Option<f64>,
}

const SCAN: usize = 32;
const FINE_SCAN: usize = 256;

impl Plan<'_> {
    fn anchor(&self, halton: &Halton, i: u64) -> Vec<f64> {
        let u = halton.unit(i);
        let pattern = match self.inner_scale {
            Some(_) => splitmix64(i ^ self.seed.rotate_left(17) ^ self.stream.rotate_left(41)),
            None => 0,
        };
        u.into_iter()
            .enumerate()
            .map(|(d, u)| {
                let k = if pattern >> d & 1 == 1 { self.inner_scale.unwrap_or(1.0) } else { 1.0 };
                k * (self.lo + (self.hi - self.lo) * u)
            })
            .collect()
    }

    /// Accepted points in sample order: thickened hits first, then the
    /// roots found on axis-parallel lines.
    pub fn run<M: Membership>(&self, m: &M) -> Vec<Vec<f64>> {
        let halton = Halton::new(self.dim, self.lo, self.hi, self.seed, self.stream);
        let mut out: Vec<Vec<f64>> = (0..self.samples as u64)
            .into_par_iter()
            .filter_map(|i| {
                let p = self.anchor(&halton, i);
                m.holds(&p, false).then_some(p)
            })
            .collect();
        if !self.eq_atoms.is_empty() && self.lines > 0 {
            let roots: Vec<Vec<Vec<f64>>> = (0..self.lines as u64)
                .into_par_iter()
                .map(|i| {
                    let p = self.anchor(&halton, i);
                    let axis = i as usize % self.dim;
                    let (l, r) = self.eq_atoms[(i as usize / self.dim) % self.eq_atoms.len()];
                    self.line_roots(m, l, r, p, axis)
                })
                .collect();
            out.extend(roots.into_iter().flatten());
        }
        out
    }

    fn line_roots<M: Membership>(&self, m: &M, l: &Term, r: &Term, mut p: Vec<f64>, axis: usize) -> Vec<Vec<f64>> {
        let mut found = Vec::new();
        let mut ranges = vec![(self.lo, self.hi, SCAN)];
        if let Some(k) = self.inner_scale {
            ranges.push((self.lo * k, self.hi * k, FINE_SCAN));
        }
        for (lo, hi, n) in ranges {
            scan_roots(&mut |s: f64| {
                p[axis] = s;
                m.gap(l, r, &p)
            }, lo, hi, n, &mut found);
        }
        found
            .into_iter()
            .filter_map(|s| {
                p[axis] = s;
                m.holds(&p, true).then(|| p.clone())
            })
            .collect()
    }
}

/// Sign changes of `g` on `n` equal segments of `[lo, hi]`, refined by
/// bisection.
fn scan_roots(g: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64, n: usize, found: &mut Vec<f64>) {
    let step = (hi - lo) / n as f64;
    let mut s0 = lo;
    let mut g0 = g(s0);
    for k in 1..=n {
        let s1 = lo + step * k as f64;
        let g1 = g(s1);
        if g0 == 0.0 {
            found.push(s0);
        } else if g0.is_finite() && g1.is_finite() && g1 != 0.0 && (g0 < 0.0) != (g1 < 0.0) {
            let (mut a, mut b, mut ga) = (s0, s1, g0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let gm = g(mid);
                if gm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if (gm < 0.0) == (ga < 0.0) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            found.push(0.5 * (a + b));
        }
        s0 = s1;
        g0 = g1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn halton_points_fill_the_box_deterministically() {
        let h = Halton::new(2, -1.0, 3.0, 9, 4);
        let pts: Vec<_> = (0..1000).map(|i| h.point(i)).collect();
        assert!(pts.iter().flatten().all(|&v| (-1.0..=3.0).contains(&v)));
        let h2 = Halton::new(2, -1.0, 3.0, 9, 4);
        assert_eq!(pts[17], h2.point(17));
        let other = Halton::new(2, -1.0, 3.0, 9, 5);
        assert_ne!(pts[17], other.point(17));
        // quarter of the points in each quadrant of the box, up to discrepancy
        let q = pts.iter().filter(|p| p[0] < 1.0 && p[1] < 1.0).count();
        assert!((q as i64 - 250).abs() < 15);
    }
}
