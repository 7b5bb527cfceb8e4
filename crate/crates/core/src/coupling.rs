//! Two-sided constructions coupling FRI and random interlacements on a
//! finite set `K`.
//!
//! For every `x ∈ K`, Poisson(`u`) proposals are made, each a backward walk
//! and a forward walk from `x`. A proposal is accepted when the backward
//! walk avoids `K` after time 0:
//!
//! * `I_T`: killed backward and forward walks; count ~ Poisson(`u Σ_x P_x^{(T)}(H~_K = ∞)`).
//! * `I_HAT`: the accepted `I_T` proposals whose forward lifetime is `>= T0`.
//! * `I_BAR`: unkilled backward walk, forward lifetime `>= T0`; the forward
//!   path is unkilled, materialised up to a horizon.
//!   Count ~ Poisson(`u q cap(K)`), `q = (T/(T+1))^{T0}`.
//! * `I_TILDE`: `I_BAR` forward paths cut at `T0` steps.
//!
//! The acceptance probability carries no `2d` factor, so `I_T(u)` has the law
//! of the restricted FRI sample at intensity `u/(2d)`.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::hitting::{self, montecarlo, EscapeSolution, GreenKernel, SolverError};
use crate::lattice::{LatticeBox, Point};
use crate::rng::{tag, RandomStream};
use crate::stats;
use crate::walk::{random_direction, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("backward and forward paths start at {0} and {1}")]
    StartMismatch(Point, Point),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("unkilled backward escape needs d >= 3, got d = {0}")]
    Domain(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    Accepted,
    /// The backward walk came back to `K`.
    BackwardReturned,
    /// The forward lifetime was shorter than `T0`.
    ForwardShort,
}

/// A pair of paths sharing their start point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoSidedTrajectory {
    pub backward: Trajectory,
    pub forward: Trajectory,
    pub decision: Decision,
}

impl TwoSidedTrajectory {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accepted
    }
}

/// `(a(len a), ..., a(0), b(1), ..., b(len b))` for backward `a`, forward `b`.
pub fn concatenate(backward: &Trajectory, forward: &Trajectory) -> Result<Trajectory, CouplingError> {
    if backward.start() != forward.start() {
        return Err(CouplingError::StartMismatch(backward.start(), forward.start()));
    }
    let rev = backward.reversed();
    let mut steps = rev.steps().to_vec();
    steps.extend_from_slice(forward.steps());
    Ok(Trajectory::from_raw(rev.start(), steps))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CouplingKind {
    #[serde(rename = "I_T")]
    IT,
    #[serde(rename = "I_HAT")]
    IHat,
    #[serde(rename = "I_BAR")]
    IBar,
    #[serde(rename = "I_TILDE")]
    ITilde,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingSample {
    pub kind: CouplingKind,
    pub k: Vec<Point>,
    /// Forward paths of the accepted proposals.
    pub trajectories: Vec<Trajectory>,
    pub count: usize,
    pub proposals: u64,
    /// Bound on the probability that a single backward decision is wrong.
    pub bias_bound: f64,
    /// Forward paths are cut at this many steps (`None`: killed lifetime).
    pub horizon: Option<u64>,
}

/// `q(T, T0) = P(Y >= T0) = (T/(T+1))^{T0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QFactor {
    pub t: f64,
    pub t0: u64,
    pub q: f64,
}

pub fn q_factor(t: f64, t0: u64) -> Result<QFactor, CouplingError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(CouplingError::InvalidParameter { name: "T", value: t });
    }
    Ok(QFactor { t, t0, q: (t / (t + 1.0)).powf(t0 as f64) })
}

fn check_u(u: f64) -> Result<(), CouplingError> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(CouplingError::InvalidParameter { name: "u", value: u })
    }
}

fn sorted_set(k: &[Point]) -> Result<Vec<Point>, CouplingError> {
    let first = k.first().ok_or(SolverError::EmptySet)?;
    if k.iter().any(|p| p.dim() != first.dim()) {
        return Err(SolverError::DimensionMismatch.into());
    }
    let mut v = k.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn killed_path(x: Point, len: u64, rng: &mut RandomStream) -> Trajectory {
    let d = x.dim();
    Trajectory::from_raw(x, (0..len).map(|_| random_direction(d, rng)).collect())
}

/// Pathwise samples of `I_T(u, K)` and `I_HAT(u, K)` from the same proposals.
#[derive(Clone, Debug, Serialize)]
pub struct KilledCoupling {
    pub i_t: CouplingSample,
    pub i_hat: CouplingSample,
    pub pairs: Vec<TwoSidedTrajectory>,
}

pub fn sample_i_t(u: f64, t: f64, t0: u64, k: &[Point], master: u64, trial: u64) -> Result<KilledCoupling, CouplingError> {
    check_u(u)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(CouplingError::InvalidParameter { name: "T", value: t });
    }
    let k = sorted_set(k)?;
    let set: HashSet<Point> = k.iter().copied().collect();
    let s = t / (t + 1.0);
    let mut pairs = Vec::new();
    let mut proposals = 0;
    for (a, &x) in k.iter().enumerate() {
        let mut count_rng = RandomStream::derive(master, &[tag::COUPLING, 0, trial, a as u64, 0]);
        let n = stats::poisson(u, &mut count_rng);
        for i in 1..=n {
            proposals += 1;
            let mut rng = RandomStream::derive(master, &[tag::COUPLING, 0, trial, a as u64, i]);
            let back_len = stats::geometric(s, &mut rng);
            let backward = killed_path(x, back_len, &mut rng);
            let fwd_len = stats::geometric(s, &mut rng);
            let forward = killed_path(x, fwd_len, &mut rng);
            let returned = backward.points().skip(1).any(|p| set.contains(&p));
            let decision = if returned { Decision::BackwardReturned } else { Decision::Accepted };
            pairs.push(TwoSidedTrajectory { backward, forward, decision });
        }
    }
    let accepted: Vec<&TwoSidedTrajectory> = pairs.iter().filter(|p| p.accepted()).collect();
    let i_t_paths: Vec<Trajectory> = accepted.iter().map(|p| p.forward.clone()).collect();
    let i_hat_paths: Vec<Trajectory> = accepted.iter().filter(|p| p.forward.len() as u64 >= t0).map(|p| p.forward.clone()).collect();
    let make = |kind, trajectories: Vec<Trajectory>| CouplingSample {
        kind,
        k: k.clone(),
        count: trajectories.len(),
        trajectories,
        proposals,
        bias_bound: 0.0,
        horizon: None,
    };
    Ok(KilledCoupling { i_t: make(CouplingKind::IT, i_t_paths), i_hat: make(CouplingKind::IHat, i_hat_paths), pairs })
}

/// How an unkilled backward walk is declared to avoid `K` forever.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EscapeRule {
    /// Escape once the walk leaves the bounding box of `K` widened so that
    /// the asymptotic return bound is below `bias_tol`.
    ExitBall { bias_tol: f64 },
    /// Leave the bounding box widened by `radius`, then return with the exact
    /// probability `Σ_z G(y - z) e_K(z)` from the exit point `y`.
    Harmonic { radius: u32 },
}

impl Default for EscapeRule {
    fn default() -> Self {
        EscapeRule::Harmonic { radius: 4 }
    }
}

/// Sampler for `I_BAR` / `I_TILDE` on a fixed `K`, caching the classical
/// equilibrium measure and kernel values.
#[derive(Clone, Debug)]
pub struct TruncatedRiSampler {
    k: Vec<Point>,
    set: HashSet<Point>,
    ball: LatticeBox,
    rule: EscapeRule,
    kernel: Option<GreenKernel<f64>>,
    equilibrium: Option<EscapeSolution<f64>>,
    bias_bound: f64,
}

impl TruncatedRiSampler {
    pub fn new(k: &[Point], rule: EscapeRule) -> Result<Self, CouplingError> {
        let k = sorted_set(k)?;
        let d = k[0].dim();
        if d < 3 {
            return Err(CouplingError::Domain(d));
        }
        let bounding = LatticeBox::bounding(&k).expect("nonempty");
        let (ball, kernel, equilibrium, bias_bound) = match rule {
            EscapeRule::ExitBall { bias_tol } => {
                if !(bias_tol > 0.0 && bias_tol < 1.0) {
                    return Err(CouplingError::InvalidParameter { name: "bias_tol", value: bias_tol });
                }
                let r = montecarlo::escape_radius(k.len(), d, bias_tol);
                let bound = montecarlo::return_probability_bound(k.len(), d, r as f64 + 1.0);
                (bounding.expanded(r), None, None, bound)
            }
            EscapeRule::Harmonic { radius } => {
                let mut kernel = GreenKernel::unkilled(d);
                let sol = EscapeSolution::solve(&mut kernel, &hitting::exposed_points(&k))?;
                let bound = sol.error_bound;
                (bounding.expanded(radius.max(1)), Some(kernel), Some(sol), bound)
            }
        };
        Ok(TruncatedRiSampler { set: k.iter().copied().collect(), k, ball, rule, kernel, equilibrium, bias_bound })
    }

    pub fn rule(&self) -> EscapeRule {
        self.rule
    }

    /// Runs the unkilled backward walk; returns the path and whether it
    /// escaped.
    fn backward(&mut self, x: Point, rng: &mut RandomStream) -> (Trajectory, bool) {
        let d = x.dim();
        let mut steps = Vec::new();
        let mut p = x;
        loop {
            let c = random_direction(d, rng);
            steps.push(c);
            p = p.step(c);
            if self.set.contains(&p) {
                return (Trajectory::from_raw(x, steps), false);
            }
            if !self.ball.contains(&p) {
                break;
            }
        }
        let escaped = match (&mut self.kernel, &self.equilibrium) {
            (Some(kernel), Some(eq)) => {
                let h = 1.0 - eq.avoid_prob(kernel, &p);
                rng.uniform() >= h
            }
            _ => true,
        };
        (Trajectory::from_raw(x, steps), escaped)
    }

    /// `(I_BAR up to horizon, I_TILDE)` from shared proposals.
    pub fn sample(&mut self, u: f64, t: f64, t0: u64, horizon: u64, master: u64, trial: u64) -> Result<(CouplingSample, CouplingSample, Vec<TwoSidedTrajectory>), CouplingError> {
        check_u(u)?;
        let q = q_factor(t, t0)?;
        if horizon < t0 {
            return Err(CouplingError::InvalidParameter { name: "horizon", value: horizon as f64 });
        }
        let s = t / (t + 1.0);
        let mut pairs = Vec::new();
        let mut proposals = 0;
        let k = self.k.clone();
        for (a, &x) in k.iter().enumerate() {
            let mut count_rng = RandomStream::derive(master, &[tag::COUPLING, 1, trial, a as u64, 0]);
            let n = stats::poisson(u, &mut count_rng);
            for i in 1..=n {
                proposals += 1;
                let mut rng = RandomStream::derive(master, &[tag::COUPLING, 1, trial, a as u64, i]);
                let lifetime = stats::geometric(s, &mut rng);
                let (backward, escaped) = self.backward(x, &mut rng);
                let forward = killed_path(x, horizon, &mut rng);
                let decision = if !escaped {
                    Decision::BackwardReturned
                } else if lifetime < t0 {
                    Decision::ForwardShort
                } else {
                    Decision::Accepted
                };
                pairs.push(TwoSidedTrajectory { backward, forward, decision });
            }
        }
        let bar: Vec<Trajectory> = pairs.iter().filter(|p| p.accepted()).map(|p| p.forward.clone()).collect();
        let tilde: Vec<Trajectory> = bar.iter().map(|w| w.truncated(q.t0 as usize)).collect();
        let make = |kind, trajectories: Vec<Trajectory>, horizon| CouplingSample {
            kind,
            k: k.clone(),
            count: trajectories.len(),
            trajectories,
            proposals,
            bias_bound: self.bias_bound,
            horizon: Some(horizon),
        };
        Ok((make(CouplingKind::IBar, bar, horizon), make(CouplingKind::ITilde, tilde, t0), pairs))
    }
}

/// One draw of `(I_BAR, I_TILDE)` with the default escape rule.
pub fn sample_truncated_ri(u: f64, t: f64, t0: u64, k: &[Point], horizon: u64, master: u64, trial: u64) -> Result<(CouplingSample, CouplingSample), CouplingError> {
    let mut sampler = TruncatedRiSampler::new(k, EscapeRule::default())?;
    let (bar, tilde, _) = sampler.sample(u, t, t0, horizon, master, trial)?;
    Ok((bar, tilde))
}
