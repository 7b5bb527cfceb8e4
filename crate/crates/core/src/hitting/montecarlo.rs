//! Monte Carlo escape estimates. Used as independent checks of the exact
//! solves and as the fallback for sets too large for a dense solve.

use std::collections::HashSet;

use serde::Serialize;

use crate::lattice::{LatticeBox, Point};
use crate::rng::{tag, RandomStream};
use crate::stats::{self, Z95};
use crate::walk::random_direction;

use super::exposed_points;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// 95% normal half-width plus any systematic bias bound.
    pub error_bound: f64,
}

/// `a_d` with `G(x) ~ a_d |x|^{2-d}` for the unkilled walk.
pub fn green_decay_constant(d: usize) -> f64 {
    super::green::green_asymptotic_constant(d)
}

/// Heuristic upper bound on `P_y(H_K < ∞)` when `y` is at Euclidean distance
/// at least `dist` from every point of a set of `n_points` sites. A factor
/// 2 covers the error of the asymptotic kernel at moderate distance.
pub fn return_probability_bound(n_points: usize, d: usize, dist: f64) -> f64 {
    (2.0 * n_points as f64 * green_decay_constant(d) * dist.powf(2.0 - d as f64)).min(1.0)
}

/// Smallest l∞ margin around `K` after which a return to `K` has probability
/// at most `bias_tol` according to [`return_probability_bound`].
pub fn escape_radius(n_points: usize, d: usize, bias_tol: f64) -> u32 {
    let r = (2.0 * n_points as f64 * green_decay_constant(d) / bias_tol).powf(1.0 / (d as f64 - 2.0));
    r.ceil().max(1.0) as u32
}

fn returns_killed(x: Point, k: &HashSet<Point>, survival: f64, rng: &mut RandomStream) -> bool {
    let len = stats::geometric(survival, rng);
    let d = x.dim();
    let mut p = x;
    for _ in 0..len {
        p = p.step(random_direction(d, rng));
        if k.contains(&p) {
            return true;
        }
    }
    false
}

/// `P_x^{(T)}(H~_K = ∞)` from `walks` independent killed walks.
pub fn killed_escape_mc(k: &[Point], t: f64, x: &Point, walks: u64, seed: u64) -> Estimate {
    let set: HashSet<Point> = k.iter().copied().collect();
    let s = t / (t + 1.0);
    let mut rng = RandomStream::derive(seed, &[tag::CAPACITY_MC, 0]);
    let escapes = (0..walks).filter(|_| !returns_killed(*x, &set, s, &mut rng)).count() as u64;
    let p = escapes as f64 / walks as f64;
    Estimate { value: p, error_bound: Z95 * stats::binomial_se(p, walks).max(0.5 / walks as f64) }
}

/// `cap^{(T)}(K)` with `walks` killed walks from each point of `K`.
pub fn killed_capacity_mc(k: &[Point], t: f64, walks: u64, seed: u64) -> Estimate {
    let set: HashSet<Point> = k.iter().copied().collect();
    let mut pts: Vec<Point> = set.iter().copied().collect();
    pts.sort_unstable();
    let two_d = 2.0 * pts[0].dim() as f64;
    let s = t / (t + 1.0);
    let mut value = 0.0;
    let mut var = 0.0;
    for (i, x) in pts.iter().enumerate() {
        let mut rng = RandomStream::derive(seed, &[tag::CAPACITY_MC, 1, i as u64]);
        let escapes = (0..walks).filter(|_| !returns_killed(*x, &set, s, &mut rng)).count() as u64;
        let p = escapes as f64 / walks as f64;
        value += two_d * p;
        var += two_d * two_d * p * (1.0 - p) / walks as f64;
    }
    Estimate { value, error_bound: Z95 * var.sqrt() }
}

/// `cap(K)` for the unkilled walk: a walk from an exposed point counts as
/// escaped once it leaves `K`'s bounding box widened by [`escape_radius`].
pub fn classical_capacity_mc(k: &[Point], walks: u64, bias_tol: f64, seed: u64) -> Estimate {
    let set: HashSet<Point> = k.iter().copied().collect();
    let exposed = exposed_points(k);
    let d = exposed[0].dim();
    let radius = escape_radius(set.len(), d, bias_tol);
    let ball = LatticeBox::bounding(&exposed).expect("nonempty").expanded(radius);
    let mut value = 0.0;
    let mut var = 0.0;
    for (i, x) in exposed.iter().enumerate() {
        let mut rng = RandomStream::derive(seed, &[tag::CAPACITY_MC, 2, i as u64]);
        let mut escapes = 0u64;
        for _ in 0..walks {
            let mut p = *x;
            loop {
                p = p.step(random_direction(d, &mut rng));
                if set.contains(&p) {
                    break;
                }
                if !ball.contains(&p) {
                    escapes += 1;
                    break;
                }
            }
        }
        let p = escapes as f64 / walks as f64;
        value += p;
        var += p * (1.0 - p) / walks as f64;
    }
    Estimate { value, error_bound: Z95 * var.sqrt() + exposed.len() as f64 * bias_tol }
}
