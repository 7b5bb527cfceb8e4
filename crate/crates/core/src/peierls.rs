//! Subcritical regime: the explicit threshold `T0(u, d)` below which a
//! fixed self-avoiding path of length `n` is open with probability at most
//! `2(3d)^{-n} + (3d)^{-n-1}`, and the resulting bound on the expected
//! number of open self-avoiding paths.

use std::collections::HashSet;
use std::f64::consts::E;

use serde::Serialize;
use thiserror::Error;

use crate::hitting::{self, SolverError};
use crate::lattice::{LatticeBox, Point};
use crate::sampler::{FriParams, SamplerError, WindowSampler, DEFAULT_WALK_BUDGET};
use crate::scalar::Real;
use crate::stats;
use crate::walk::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeierlsError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("path revisits {0}")]
    NotSelfAvoiding(Point),
    #[error("threshold constraint not increasing near T = {0}")]
    NonMonotone(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeierlsThreshold<F: Real = f64> {
    pub u: F,
    pub d: usize,
    /// `log(6d)`.
    pub t0: F,
    /// `ceil(e · u · 2d + log(3d))`.
    pub lprime: u64,
    /// Largest `T` meeting both constraints.
    pub threshold: F,
}

impl<F: Real> PeierlsThreshold<F> {
    /// `6dT < 1`.
    pub fn first_condition(&self, t: F) -> bool {
        F::from_usize_lossy(6 * self.d) * t < F::one()
    }

    /// `((1 - T)/(1 - 6dT))^{L'} <= 2`.
    pub fn second_condition(&self, t: F) -> bool {
        self.first_condition(t) && constraint(self.lprime, self.d, t.as_f64()) <= 2f64.ln()
    }
}

pub fn lprime(u: f64, d: usize) -> u64 {
    (E * u * 2.0 * d as f64 + (3.0 * d as f64).ln()).ceil() as u64
}

/// `L' (log(1 - T) - log(1 - 6dT))`, the log of the second constraint.
fn constraint(lprime: u64, d: usize, t: f64) -> f64 {
    lprime as f64 * ((-t).ln_1p() - (-(6.0 * d as f64) * t).ln_1p())
}

/// Bisection for the largest `T` in `(0, 1/(6d))` satisfying both
/// constraints, to relative precision `1e-9`.
pub fn subcritical_threshold<F: Real>(u: F, d: usize) -> Result<PeierlsThreshold<F>, PeierlsError> {
    let uf = u.as_f64();
    if !(uf > 0.0) || !uf.is_finite() {
        return Err(PeierlsError::InvalidParameter { name: "u", value: uf });
    }
    if d < 2 {
        return Err(PeierlsError::InvalidParameter { name: "d", value: d as f64 });
    }
    let lp = lprime(uf, d);
    let upper = 1.0 / (6.0 * d as f64);
    // the constraint must increase on the bracket for bisection to be valid
    let grid: Vec<f64> = (1..200).map(|i| upper * i as f64 / 200.0).collect();
    for w in grid.windows(2) {
        if constraint(lp, d, w[1]) <= constraint(lp, d, w[0]) {
            return Err(PeierlsError::NonMonotone(w[1]));
        }
    }
    let target = 2f64.ln();
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > 1e-9 * lo.max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if constraint(lp, d, mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PeierlsThreshold { u, d, t0: F::lit((6.0 * d as f64).ln()), lprime: lp, threshold: F::lit(lo) })
}

/// `2(3d)^{-n} + (3d)^{-n-1}`.
pub fn open_path_bound(n: u32, d: usize) -> f64 {
    let base = 3.0 * d as f64;
    2.0 * base.powi(-(n as i32)) + base.powi(-(n as i32) - 1)
}

/// `(2d)^n (2(3d)^{-n} + (3d)^{-n-1}) = (2/3)^n (2 + 1/(3d))`.
pub fn expected_saw_bound(n: u32, d: usize) -> f64 {
    (2.0f64 / 3.0).powi(n as i32) * (2.0 + 1.0 / (3.0 * d as f64))
}

fn check_self_avoiding(path: &Trajectory) -> Result<(), PeierlsError> {
    let mut seen = HashSet::new();
    for p in path.points() {
        if !seen.insert(p) {
            return Err(PeierlsError::NotSelfAvoiding(p));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathCapacityCheck {
    pub n: usize,
    pub capacity: f64,
    pub error_bound: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `cap^{(T)}(γ) <= 2d(n + 1)` for a self-avoiding path with `n` steps.
pub fn path_killed_capacity_check(path: &Trajectory, t: f64) -> Result<PathCapacityCheck, PeierlsError> {
    check_self_avoiding(path)?;
    let pts = path.to_points();
    let cap = hitting::killed_capacity(&pts, t, 1e-9)?;
    let bound = 2.0 * path.dim() as f64 * pts.len() as f64;
    Ok(PathCapacityCheck {
        n: path.len(),
        capacity: cap.value,
        error_bound: cap.error_bound,
        bound,
        holds: cap.value - cap.error_bound <= bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OpenPathEstimate {
    pub trials: u64,
    pub open: u64,
    pub frequency: f64,
    /// One-sided upper confidence bound at `confidence`.
    pub upper: f64,
    pub confidence: f64,
}

/// Frequency with which every edge of `path` is open, from independent
/// window samples on the path's bounding box.
pub fn empirical_path_open_probability(
    path: &Trajectory,
    params: &FriParams<f64>,
    trials: u64,
    confidence: f64,
    master: u64,
) -> Result<OpenPathEstimate, PeierlsError> {
    check_self_avoiding(path)?;
    if path.is_empty() {
        return Err(PeierlsError::InvalidParameter { name: "n", value: 0.0 });
    }
    let window = LatticeBox::bounding(&path.to_points()).expect("nonempty");
    let sampler = WindowSampler::new(params, window, 1e-9, DEFAULT_WALK_BUDGET)?;
    let wanted: Vec<_> = path.edges().collect();
    let mut open = 0;
    let mut seen = HashSet::new();
    for trial in 0..trials {
        seen.clear();
        sampler.run(master, trial, &mut |w| {
            for e in w.edges() {
                if wanted.contains(&e) {
                    seen.insert(e);
                }
            }
        });
        if seen.len() == wanted.len() {
            open += 1;
        }
    }
    Ok(OpenPathEstimate {
        trials,
        open,
        frequency: open as f64 / trials as f64,
        upper: stats::binomial_upper_bound(open, trials, confidence),
        confidence,
    })
}
