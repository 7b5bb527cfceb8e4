//! Escape probabilities of the killed walk by fixed-point iteration of
//!
//! ```text
//! h(y) = 1/(T+1) + T/(T+1) · (1/2d) Σ_{y'~y, y'∉K} h(y'),   h = P^{(T)}(H_K = ∞)
//! ```
//!
//! on a finite box around `K`, with `h = 1` imposed outside the box. A walk
//! that never leaves the box sees the exact equation, so the boundary
//! condition moves the answer by at most the probability of reaching the
//! exterior before dying.

use crate::lattice::{LatticeBox, Point};
use crate::scalar::Real;

use super::{dedup_points, SolverError};

/// Default cap on the number of grid cells.
pub const DEFAULT_MAX_CELLS: u64 = 30_000_000;

/// Upper bound on `P(killed walk reaches l∞ distance r)`: either the walk
/// lives `r` steps, or within `N` steps some coordinate martingale moves by
/// `r` (Azuma–Hoeffding with Doob's maximal inequality).
pub fn escape_distance_bound(survival: f64, r: u64, d: usize, n: u64) -> f64 {
    let direct = survival.powf(r as f64);
    let azuma = survival.powf(n as f64) + 2.0 * d as f64 * (-(r as f64).powi(2) / (2.0 * n as f64)).exp();
    direct.min(azuma)
}

/// Box margin `M` such that a walk from `K` reaches the exterior with
/// probability below `tol`: the smaller of `ceil((T+1) ln(1/tol)) + diam(K)`
/// and the Azuma radius.
pub fn truncation_margin(t: f64, tol: f64, d: usize, diam: u64) -> (u64, u64) {
    let s = t / (t + 1.0);
    let mixing = ((t + 1.0) * (1.0 / tol).ln()).ceil() as u64 + diam;
    let n = ((tol / 2.0).ln() / s.ln()).ceil().max(1.0) as u64;
    let azuma = (2.0 * n as f64 * (4.0 * d as f64 / tol).ln()).sqrt().ceil() as u64;
    (mixing.min(azuma), n)
}

#[derive(Clone, Debug)]
pub struct TruncatedBoxSolution<F: Real = f64> {
    grid: LatticeBox,
    /// `h` on the grid padded by one ghost layer fixed at 1.
    h: Vec<f64>,
    in_k: Vec<bool>,
    strides: Vec<usize>,
    survival: f64,
    d: usize,
    truncation_bound: f64,
    iteration_bound: f64,
    sweeps: usize,
    _scalar: std::marker::PhantomData<F>,
}

impl<F: Real> TruncatedBoxSolution<F> {
    /// Solves on the box spanned by `K ∪ extra` widened by the truncation margin.
    pub fn solve(k: &[Point], t: F, tol: F, extra: &[Point], max_cells: u64) -> Result<Self, SolverError> {
        let tol_f = tol.as_f64();
        if !(tol_f > 0.0 && tol_f < 1.0) {
            return Err(SolverError::InvalidTolerance(tol_f));
        }
        let k = dedup_points(k)?;
        let t_f = t.as_f64();
        let d = k[0].dim();
        let s = t_f / (t_f + 1.0);
        let span: Vec<Point> = k.iter().chain(extra).copied().collect();
        let bounding = LatticeBox::bounding(&span).expect("nonempty");
        let diam = (0..d).map(|j| bounding.side(j) - 1).max().unwrap_or(0);
        let (margin, n_horizon) = if t_f == 0.0 { (0, 1) } else { truncation_margin(t_f, tol_f / 2.0, d, diam) };
        let grid = bounding.expanded(margin as u32);
        grid.check_headroom(2)?;
        let padded = grid.expanded(1);
        let cells = padded.volume();
        if cells > max_cells {
            return Err(SolverError::Resource { required: cells, limit: max_cells });
        }
        let mut strides = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * padded.side(j + 1) as usize;
        }
        let n = cells as usize;
        let mut h = vec![1.0f64; n];
        let mut in_k = vec![false; n];
        for p in &k {
            let i = padded.index_of(p).expect("K inside grid");
            in_k[i] = true;
            h[i] = 0.0;
        }
        let interior: Vec<usize> = grid.points().map(|p| padded.index_of(&p).unwrap()).filter(|&i| !in_k[i]).collect();
        let truncation_bound = if t_f == 0.0 { 0.0 } else { escape_distance_bound(s, margin + 1, d, n_horizon) };
        let inv = s / (2 * d) as f64;
        let kill = 1.0 - s;
        let mut sweeps = 0;
        let mut iteration_bound = 0.0;
        if s > 0.0 {
            loop {
                sweeps += 1;
                let mut delta = 0.0f64;
                for &i in &interior {
                    let mut acc = 0.0;
                    for &st in &strides {
                        acc += h[i + st] + h[i - st];
                    }
                    let v = kill + inv * acc;
                    delta = delta.max((v - h[i]).abs());
                    h[i] = v;
                }
                iteration_bound = s / (1.0 - s) * delta;
                if iteration_bound <= tol_f / 10.0 || sweeps > 1_000_000 {
                    break;
                }
            }
        }
        Ok(TruncatedBoxSolution {
            grid,
            h,
            in_k,
            strides,
            survival: s,
            d,
            truncation_bound,
            iteration_bound,
            sweeps,
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn grid(&self) -> LatticeBox {
        self.grid
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Rigorous bound on the error of [`Self::escape_prob`].
    pub fn error_bound(&self) -> F {
        F::lit(self.truncation_bound + self.iteration_bound)
    }

    /// `P_x^{(T)}(H~_K = ∞)` for `x` inside the solved grid.
    pub fn escape_prob(&self, x: &Point) -> Option<F> {
        if !self.grid.contains(x) {
            return None;
        }
        let padded = self.grid.expanded(1);
        let i = padded.index_of(x)?;
        let mut acc = 0.0;
        for &st in &self.strides {
            for j in [i + st, i - st] {
                if !self.in_k[j] {
                    acc += self.h[j];
                }
            }
        }
        let v = (1.0 - self.survival) + self.survival / (2 * self.d) as f64 * acc;
        Some(F::lit(v))
    }
}
