//! Geometrically killed simple random walks and per-trajectory functionals.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{Edge, LatticeBox, Point};
use crate::rng::RandomStream;
use crate::scalar::Real;
use crate::stats;

pub type PointSet = HashSet<Point>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("walk never visits the target set")]
    NeverHits,
    #[error("walk starts at {0}, outside the box")]
    StartOutside(Point),
    #[error("consecutive points {0} and {1} are not neighbors")]
    NotNearestNeighbor(Point, Point),
    #[error("direction code {0} invalid in dimension {1}")]
    BadCode(u8, usize),
    #[error("empty point sequence")]
    Empty,
}

/// A finite nearest-neighbor path, stored as its start and direction codes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Trajectory {
    start: Point,
    steps: Vec<u8>,
}

impl Trajectory {
    pub fn single(start: Point) -> Self {
        Trajectory { start, steps: Vec::new() }
    }

    pub fn from_steps(start: Point, steps: Vec<u8>) -> Result<Self, WalkError> {
        let two_d = 2 * start.dim() as u8;
        if let Some(&c) = steps.iter().find(|&&c| c >= two_d) {
            return Err(WalkError::BadCode(c, start.dim()));
        }
        Ok(Trajectory { start, steps })
    }

    /// Unchecked constructor for steps produced by the samplers.
    pub(crate) fn from_raw(start: Point, steps: Vec<u8>) -> Self {
        Trajectory { start, steps }
    }

    pub fn from_points(points: &[Point]) -> Result<Self, WalkError> {
        let (&start, _) = points.split_first().ok_or(WalkError::Empty)?;
        let steps = points
            .windows(2)
            .map(|w| w[0].direction_to(&w[1]).ok_or(WalkError::NotNearestNeighbor(w[0], w[1])))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trajectory { start, steps })
    }

    pub fn start(&self) -> Point {
        self.start
    }

    /// Number of steps `N`; the path visits `N + 1` points.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[u8] {
        &self.steps
    }

    pub fn dim(&self) -> usize {
        self.start.dim()
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().scan(self.start, |p, &c| {
            *p = p.step(c);
            Some(*p)
        }))
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.points().collect()
    }

    pub fn end(&self) -> Point {
        self.points().last().expect("nonempty")
    }

    /// Canonical edges crossed, in path order (with repetitions).
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.steps.iter().scan(self.start, |p, &c| {
            let e = Edge::from_step(*p, c);
            *p = p.step(c);
            Some(e)
        })
    }

    /// The time-reversed path.
    pub fn reversed(&self) -> Trajectory {
        let steps = self.steps.iter().rev().map(|&c| c ^ 1).collect();
        Trajectory { start: self.end(), steps }
    }

    pub fn truncated(&self, max_len: usize) -> Trajectory {
        Trajectory { start: self.start, steps: self.steps[..self.steps.len().min(max_len)].to_vec() }
    }

    pub fn visits_any(&self, set: &PointSet) -> bool {
        self.points().any(|p| set.contains(&p))
    }

    pub fn intersects_box(&self, bx: &LatticeBox) -> bool {
        self.points().any(|p| bx.contains(&p))
    }
}

/// Geometric killing with mean length `t`: each step survives with
/// probability `t / (t + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KillingLaw<F: Real = f64> {
    t: F,
}

impl<F: Real> KillingLaw<F> {
    /// `t = 0` is the degenerate law of length-zero walks.
    pub fn new(t: F) -> Self {
        assert!(t >= F::zero() && t.is_finite(), "mean length must be finite and nonnegative");
        KillingLaw { t }
    }

    pub fn mean_length(&self) -> F {
        self.t
    }

    pub fn survival(&self) -> F {
        self.t / (self.t + F::one())
    }

    pub fn kill_rate(&self) -> F {
        F::one() / (self.t + F::one())
    }

    pub fn pmf(&self, n: u64) -> F {
        length_pmf(self.t, n)
    }

    /// Inverse-CDF draw of the walk length.
    pub fn sample_length(&self, rng: &mut RandomStream) -> u64 {
        stats::geometric(self.survival().as_f64(), rng)
    }
}

/// `P(length = n) = (1/(T+1)) (T/(T+1))^n`.
pub fn length_pmf<F: Real>(t: F, n: u64) -> F {
    let s = t / (t + F::one());
    let k = F::one() / (t + F::one());
    if n == 0 {
        return k;
    }
    k * s.powf(F::from_u64(n).expect("representable"))
}

#[inline]
pub fn random_direction(d: usize, rng: &mut RandomStream) -> u8 {
    rng.below(2 * d as u64) as u8
}

/// Uniform nearest-neighbor path of exactly `len` steps from `x`.
pub fn sample_walk_of_length(x: Point, len: usize, rng: &mut RandomStream) -> Trajectory {
    let d = x.dim();
    let steps = (0..len).map(|_| random_direction(d, rng)).collect();
    Trajectory { start: x, steps }
}

/// Killed simple random walk from `x`: geometric length first, then the steps.
pub fn sample_killed_walk<F: Real>(x: Point, law: &KillingLaw<F>, rng: &mut RandomStream) -> Trajectory {
    let len = law.sample_length(rng);
    sample_walk_of_length(x, len as usize, rng)
}

/// `(H_K, H~_K)`: first time `>= 0`, resp. `>= 1`, the walk is in `K`;
/// `None` when the walk dies first.
pub fn hitting_times(w: &Trajectory, k: &PointSet) -> (Option<usize>, Option<usize>) {
    let mut first = None;
    let mut first_positive = None;
    for (t, p) in w.points().enumerate() {
        if k.contains(&p) {
            if first.is_none() {
                first = Some(t);
            }
            if t >= 1 {
                first_positive = Some(t);
                break;
            }
        }
    }
    (first, first_positive)
}

/// The restriction map: the part of `w` from its first visit to `K` on,
/// re-indexed so that the visit happens at time 0.
pub fn shift_to_hit(w: &Trajectory, k: &PointSet) -> Result<Trajectory, WalkError> {
    let (h, _) = hitting_times(w, k);
    let h = h.ok_or(WalkError::NeverHits)?;
    let start = w.points().nth(h).expect("hit index within path");
    Ok(Trajectory { start, steps: w.steps[h..].to_vec() })
}

/// First index at which the walk is outside `a`, or `None` if it dies inside.
pub fn first_exit_time(w: &Trajectory, a: &LatticeBox) -> Result<Option<usize>, WalkError> {
    if !a.contains(&w.start) {
        return Err(WalkError::StartOutside(w.start));
    }
    Ok(w.points().position(|p| !a.contains(&p)))
}

/// Runs an unkilled walk from `x` until it leaves `a` or `max_steps` steps
/// have been taken; returns the exit time if it happened.
pub fn unkilled_exit_time(x: Point, a: &LatticeBox, max_steps: u64, rng: &mut RandomStream) -> Option<u64> {
    let d = x.dim();
    let mut p = x;
    for t in 1..=max_steps {
        p = p.step(random_direction(d, rng));
        if !a.contains(&p) {
            return Some(t);
        }
    }
    None
}
