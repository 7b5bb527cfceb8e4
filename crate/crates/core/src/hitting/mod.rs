//! Escape probabilities, equilibrium measures and capacities of finite sets
//! for the killed and the unkilled simple random walk.
//!
//! Normalisation: the killed equilibrium measure carries the factor `2d`,
//! `e_K^{(T)}(x) = 2d · P_x^{(T)}(H~_K = ∞)`, while the classical one does
//! not, `e_K(x) = P_x(H~_K = ∞)`. So `cap^{(T)}(K) → 2d · cap(K)` as
//! `T → ∞`, and FRI at level `u` corresponds to random interlacements at
//! level `2du`.
//!
//! The exact route solves the last-exit identity `Σ_y G(x - y) ê(y) = 1`
//! (`x ∈ K`) with the kernel from [`green`]. [`truncated`] is an independent
//! second route for moderate `T`, and [`montecarlo`] gives statistical
//! estimates.

pub mod green;
mod linalg;
pub mod montecarlo;
pub mod truncated;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{LatticeError, Point};
use crate::scalar::Real;

pub use green::GreenKernel;
pub use truncated::TruncatedBoxSolution;

/// Largest set handled by the dense exact solve.
pub const MAX_EXACT_POINTS: usize = 6000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("tolerance {0} not in (0, 1)")]
    InvalidTolerance(f64),
    #[error("target set is empty")]
    EmptySet,
    #[error("mixed dimensions in target set")]
    DimensionMismatch,
    #[error("classical capacity needs a transient walk (d >= 3), got d = {0}")]
    Domain(usize),
    #[error("problem needs {required} units, budget is {limit}; use the Monte Carlo method")]
    Resource { required: u64, limit: u64 },
    #[error("Green matrix not positive definite (numerical breakdown)")]
    Breakdown,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    ExactSolve,
    MonteCarlo,
}

/// A capacity estimate with its error bound: a quadrature/iteration bound
/// for exact solves, a 95% half-width for Monte Carlo.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapacityResult<F: Real = f64> {
    pub value: F,
    pub method: Method,
    pub error_bound: F,
}

impl<F: Real> CapacityResult<F> {
    pub fn interval(&self) -> (F, F) {
        (self.value - self.error_bound, self.value + self.error_bound)
    }
}

/// Finitely supported nonnegative measure on `Z^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure<F: Real = f64> {
    weights: BTreeMap<Point, F>,
}

impl<F: Real> DiscreteMeasure<F> {
    pub fn from_weights(weights: impl IntoIterator<Item = (Point, F)>) -> Self {
        let weights = weights.into_iter().filter(|(_, w)| *w > F::zero()).collect();
        DiscreteMeasure { weights }
    }

    pub fn weight(&self, x: &Point) -> F {
        self.weights.get(x).copied().unwrap_or_else(F::zero)
    }

    pub fn total(&self) -> F {
        self.weights.values().copied().sum()
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.weights.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &F)> {
        self.weights.iter()
    }

    /// Probability measure proportional to `self`; `None` if the mass is zero.
    pub fn normalized(&self) -> Option<DiscreteMeasure<F>> {
        let total = self.total();
        if total <= F::zero() {
            return None;
        }
        Some(DiscreteMeasure { weights: self.weights.iter().map(|(p, w)| (*p, *w / total)).collect() })
    }
}

pub(crate) fn dedup_points(k: &[Point]) -> Result<Vec<Point>, SolverError> {
    let first = k.first().ok_or(SolverError::EmptySet)?;
    if k.iter().any(|p| p.dim() != first.dim()) {
        return Err(SolverError::DimensionMismatch);
    }
    let mut v = k.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn check_tol(tol: f64) -> Result<(), SolverError> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(SolverError::InvalidTolerance(tol))
    }
}

/// Escape probabilities `P_x(H~_K = ∞)` for the points of `k` (sorted,
/// deduplicated) from a Green kernel, plus an error estimate for their sum.
#[derive(Clone, Debug)]
pub struct EscapeSolution<F: Real = f64> {
    pub points: Vec<Point>,
    pub escape: Vec<F>,
    pub error_bound: F,
}

impl<F: Real> EscapeSolution<F> {
    pub fn solve(kernel: &mut GreenKernel<F>, k: &[Point]) -> Result<Self, SolverError> {
        let points = dedup_points(k)?;
        let n = points.len();
        if n > MAX_EXACT_POINTS {
            return Err(SolverError::Resource { required: n as u64, limit: MAX_EXACT_POINTS as u64 });
        }
        let (mut m, quad_err) = kernel.matrix(&points);
        let a = m.clone();
        if !linalg::cholesky_in_place(&mut m, n) {
            return Err(SolverError::Breakdown);
        }
        let ones = vec![F::one(); n];
        let escape = linalg::cholesky_solve(&m, n, &ones);
        let residual = linalg::mat_vec(&a, n, &escape)
            .iter()
            .map(|&r| (r - F::one()).abs())
            .fold(F::zero(), F::max);
        let mass: F = escape.iter().copied().sum();
        // δ(1ᵀG⁻¹1) = -êᵀ δG ê, |êᵀ δG ê| <= max|δG| (Σ ê)^2; the residual
        // enters the same way through ê.
        let error_bound = (quad_err + residual) * mass * mass + F::lit(1e-14) * mass;
        Ok(EscapeSolution { points, escape, error_bound })
    }

    pub fn mass(&self) -> F {
        self.escape.iter().copied().sum()
    }

    pub fn escape_of(&self, x: &Point) -> Option<F> {
        self.points.binary_search(x).ok().map(|i| self.escape[i])
    }

    /// `P_x(H_K = ∞)` for `x` outside `K`, by last-exit decomposition.
    pub fn avoid_prob(&self, kernel: &mut GreenKernel<F>, x: &Point) -> F {
        let hit: F = self.points.iter().zip(&self.escape).map(|(y, &e)| kernel.value(&(*x - *y)) * e).sum();
        (F::one() - hit).max(F::zero())
    }
}

/// `P_x^{(T)}(H~_K = ∞)` for any site `x`.
pub fn killed_escape_prob<F: Real>(k: &[Point], t: F, x: &Point, tol: F) -> Result<F, SolverError> {
    check_tol(tol.as_f64())?;
    let k = dedup_points(k)?;
    if t == F::zero() {
        return Ok(F::one());
    }
    let mut kernel = GreenKernel::<F>::killed(k[0].dim(), t);
    let sol = EscapeSolution::solve(&mut kernel, &k)?;
    Ok(match sol.escape_of(x) {
        Some(e) => e,
        None => sol.avoid_prob(&mut kernel, x),
    })
}

/// `e_K^{(T)}(x) = 2d · P_x^{(T)}(H~_K = ∞) · 1_{x ∈ K}`.
pub fn killed_equilibrium<F: Real>(k: &[Point], t: F, tol: F) -> Result<DiscreteMeasure<F>, SolverError> {
    check_tol(tol.as_f64())?;
    let k = dedup_points(k)?;
    let two_d = F::from_usize_lossy(2 * k[0].dim());
    if t == F::zero() {
        return Ok(DiscreteMeasure::from_weights(k.into_iter().map(|p| (p, two_d))));
    }
    let mut kernel = GreenKernel::<F>::killed(k[0].dim(), t);
    let sol = EscapeSolution::solve(&mut kernel, &k)?;
    Ok(DiscreteMeasure::from_weights(sol.points.into_iter().zip(sol.escape).map(|(p, e)| (p, two_d * e))))
}

/// `cap^{(T)}(K) = Σ_x e_K^{(T)}(x)`.
pub fn killed_capacity<F: Real>(k: &[Point], t: F, tol: F) -> Result<CapacityResult<F>, SolverError> {
    check_tol(tol.as_f64())?;
    let k = dedup_points(k)?;
    let two_d = F::from_usize_lossy(2 * k[0].dim());
    if t == F::zero() {
        return Ok(CapacityResult {
            value: two_d * F::from_usize_lossy(k.len()),
            method: Method::ExactSolve,
            error_bound: F::zero(),
        });
    }
    let mut kernel = GreenKernel::<F>::killed(k[0].dim(), t);
    killed_capacity_with(&mut kernel, &k)
}

/// Killed capacity reusing a kernel (and its cache) across many sets.
pub fn killed_capacity_with<F: Real>(kernel: &mut GreenKernel<F>, k: &[Point]) -> Result<CapacityResult<F>, SolverError> {
    let sol = EscapeSolution::solve(kernel, k)?;
    let two_d = F::from_usize_lossy(2 * kernel.dim());
    Ok(CapacityResult { value: two_d * sol.mass(), method: Method::ExactSolve, error_bound: two_d * sol.error_bound })
}

/// Points of `k` with a nearest neighbor outside `k`; the only ones that can
/// carry classical equilibrium mass.
pub fn exposed_points(k: &[Point]) -> Vec<Point> {
    let set: std::collections::HashSet<Point> = k.iter().copied().collect();
    let mut out: Vec<Point> = set.iter().copied().filter(|p| p.neighbors().any(|q| !set.contains(&q))).collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CapacityBudget {
    /// Direct solve with the unkilled kernel.
    Exact,
    /// Monte Carlo escape: `walks` per exposed point, escape decided on
    /// exiting a ball whose return probability is below `bias_tol`.
    MonteCarlo { walks: u64, bias_tol: f64, seed: u64 },
}

/// `cap(K) = Σ_{x∈K} P_x(H~_K = ∞)` for the unkilled walk (no `2d` factor).
pub fn classical_capacity<F: Real>(k: &[Point], budget: CapacityBudget) -> Result<CapacityResult<F>, SolverError> {
    let k = dedup_points(k)?;
    let d = k[0].dim();
    if d < 3 {
        return Err(SolverError::Domain(d));
    }
    match budget {
        CapacityBudget::Exact => {
            let mut kernel = GreenKernel::<F>::unkilled(d);
            classical_capacity_with(&mut kernel, &k)
        }
        CapacityBudget::MonteCarlo { walks, bias_tol, seed } => {
            let est = montecarlo::classical_capacity_mc(&k, walks, bias_tol, seed);
            Ok(CapacityResult { value: F::lit(est.value), method: Method::MonteCarlo, error_bound: F::lit(est.error_bound) })
        }
    }
}

/// Classical capacity reusing an unkilled kernel.
pub fn classical_capacity_with<F: Real>(kernel: &mut GreenKernel<F>, k: &[Point]) -> Result<CapacityResult<F>, SolverError> {
    if kernel.mean_length().is_some() {
        panic!("classical capacity needs the unkilled kernel");
    }
    let exposed = exposed_points(k);
    let sol = EscapeSolution::solve(kernel, &exposed)?;
    Ok(CapacityResult { value: sol.mass(), method: Method::ExactSolve, error_bound: sol.error_bound })
}
