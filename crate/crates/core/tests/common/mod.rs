//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls the library's distance or Lipschitz code, so the
//! tests compare two separate implementations.

#![allow(dead_code)]

use std::path::PathBuf;

use convex_ifs::config::SystemConfig;
use convex_ifs::{IFSSystem, PointSet};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture_config(name: &str) -> SystemConfig {
    SystemConfig::load(&fixture_path(name)).expect("fixture parses")
}

pub fn fixture(name: &str) -> IFSSystem {
    fixture_config(name).build().expect("fixture builds")
}

pub fn points(set: &PointSet) -> Vec<Vec<f64>> {
    set.iter().map(|p| p.to_vec()).collect()
}

fn euclid(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Quadratic-time `sup_a inf_b |a - b|`.
pub fn brute_directed(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| euclid(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn brute_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    brute_directed(a, b).max(brute_directed(b, a))
}

pub fn brute_delta(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|p| b.iter().map(move |q| euclid(p, q)))
        .fold(0.0, f64::max)
}

/// 1-D Hausdorff distance by sorting and binary search.
pub fn sorted_hausdorff_1d(a: &[f64], b: &[f64]) -> f64 {
    fn directed(a: &[f64], b: &[f64]) -> f64 {
        let mut s = b.to_vec();
        s.sort_by(f64::total_cmp);
        a.iter()
            .map(|&x| {
                let k = s.partition_point(|&v| v < x);
                let right = s.get(k).map_or(f64::INFINITY, |&v| v - x);
                let left = if k > 0 { x - s[k - 1] } else { f64::INFINITY };
                left.min(right)
            })
            .fold(0.0, f64::max)
    }
    directed(a, b).max(directed(b, a))
}

/// Endpoints of the `2^level` intervals of the middle-thirds construction,
/// computed as integers over `3^level`.
pub fn cantor_endpoints(level: u32) -> Vec<f64> {
    let scale = 3u64.pow(level);
    let mut lefts = vec![0u64];
    for k in 0..level {
        let step = 2 * 3u64.pow(level - 1 - k);
        lefts = lefts.iter().flat_map(|&l| [l, l + step]).collect();
    }
    let width = 1u64;
    let mut out: Vec<f64> = lefts
        .iter()
        .flat_map(|&l| [l as f64 / scale as f64, (l + width) as f64 / scale as f64])
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Closed interval with outward widening after every operation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

const WIDEN: f64 = 4.0 * f64::EPSILON;

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi);
        Interval { lo, hi }
    }

    fn widened(lo: f64, hi: f64) -> Self {
        Interval {
            lo: lo - WIDEN * lo.abs() - f64::MIN_POSITIVE,
            hi: hi + WIDEN * hi.abs() + f64::MIN_POSITIVE,
        }
    }

    fn add(self, o: Interval) -> Self {
        Interval::widened(self.lo + o.lo, self.hi + o.hi)
    }

    fn mul(self, o: Interval) -> Self {
        let c = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        Interval::widened(
            c.iter().copied().fold(f64::INFINITY, f64::min),
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }
}

/// Ascending-coefficient polynomial evaluated over intervals.
#[derive(Clone, Debug)]
pub struct IntervalPoly {
    coeffs: Vec<f64>,
    deriv: Vec<f64>,
}

impl IntervalPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let deriv = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect();
        IntervalPoly { coeffs, deriv }
    }

    fn horner(c: &[f64], x: Interval) -> Interval {
        let mut acc = Interval::point(0.0);
        for &a in c.iter().rev() {
            acc = acc.mul(x).add(Interval::point(a));
        }
        acc
    }

    /// Enclosure of `p(x)`; tight when `p` is monotone on `x`.
    pub fn image(&self, x: Interval) -> Interval {
        let d = Self::horner(&self.deriv, x);
        if d.lo >= 0.0 || d.hi <= 0.0 {
            let a = Self::horner(&self.coeffs, Interval::point(x.lo));
            let b = Self::horner(&self.coeffs, Interval::point(x.hi));
            Interval::new(a.lo.min(b.lo), a.hi.max(b.hi))
        } else {
            Self::horner(&self.coeffs, x)
        }
    }

    /// Upper bound on `|p'|` over `x`.
    pub fn slope(&self, x: Interval) -> f64 {
        Self::horner(&self.deriv, x).mag()
    }
}

/// `L[j]` bounds the Lipschitz constant of every `f_w`, `|w| = j`, on
/// `domain`. Words are grown on the outside, `f_{iw} = f_i ∘ f_w`, with an
/// interval enclosure of `f_w(domain)` carried along.
pub fn word_lipschitz_1d(maps: &[IntervalPoly], domain: Interval, depth: usize) -> Vec<f64> {
    let mut best = vec![0.0; depth + 1];
    best[0] = 1.0;
    fn walk(maps: &[IntervalPoly], j: Interval, l: f64, k: usize, depth: usize, best: &mut [f64]) {
        if k == depth {
            return;
        }
        for f in maps {
            let l2 = l * f.slope(j);
            let j2 = f.image(j);
            best[k + 1] = f64::max(best[k + 1], l2);
            walk(maps, j2, l2, k + 1, depth, best);
        }
    }
    walk(maps, domain, 1.0, 0, depth, &mut best);
    best
}

/// Upper bounds `U[n]` on `h(F^n(B_0), A)` for `n = 0..=n_max`.
///
/// `exact[n]` for `n < exact.len()` are already-certified bounds; later
/// entries use `h(F^j Y, A) <= L[j] h(Y, A)`.
pub fn propagate_bounds(exact: &[f64], lip: &[f64], n_max: usize) -> Vec<f64> {
    let mut u: Vec<f64> = exact.to_vec();
    for n in exact.len()..=n_max {
        let mut best = f64::INFINITY;
        for (j, &lj) in lip.iter().enumerate().skip(1) {
            if j <= n && n - j < u.len() {
                best = best.min(lj * u[n - j]);
            }
        }
        u.push(best);
    }
    u
}
