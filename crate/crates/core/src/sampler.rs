//! FRI samplers.
//!
//! The window sampler realises the per-site construction on a finite box `W`:
//! every site emits Poisson(`2du/(T+1)`) killed walks. Sites of `W` are
//! sampled directly. For a site at l1 distance `m >= 1` from `W` only walks
//! of length `>= m` can reach `W`; by thinning, those form a Poisson number
//! with mean `|shell_m| · 2du/(T+1) · s^m` (`s = T/(T+1)`), with lengths
//! `m + Geometric` and uniform starts on the shell. Shells are processed out
//! to a margin `M(eps)` whose neglected expected walk count is below `eps`,
//! so the trace on `W` differs from FRI by at most `eps` in total variation.
//! Only walks that visit `W` are kept.

use std::collections::HashSet;

use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hitting::{self, SolverError};
use crate::lattice::{EdgeSet, LatticeBox, LatticeError, Point, MAX_DIM};
use crate::rng::{tag, RandomStream};
use crate::scalar::Real;
use crate::stats;
use crate::walk::{random_direction, Trajectory};

/// Default cap on the expected number of simulated walks per sample.
pub const DEFAULT_WALK_BUDGET: f64 = 5.0e7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("margin {margin} needs about {expected_walks:.3e} walks, budget is {budget:.3e}")]
    Resource { margin: u64, expected_walks: f64, budget: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Intensity `u`, mean walk length `T`, dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FriParams<F: Real = f64> {
    pub u: F,
    pub t: F,
    pub d: usize,
}

impl<F: Real> FriParams<F> {
    pub fn new(u: F, t: F, d: usize) -> Result<Self, SamplerError> {
        if !(u > F::zero()) || !u.is_finite() {
            return Err(SamplerError::InvalidParameter { name: "u", value: u.as_f64() });
        }
        if !(t > F::zero()) || !t.is_finite() {
            return Err(SamplerError::InvalidParameter { name: "T", value: t.as_f64() });
        }
        if d == 0 || d > MAX_DIM {
            return Err(SamplerError::InvalidParameter { name: "d", value: d as f64 });
        }
        Ok(FriParams { u, t, d })
    }

    /// Expected number of walks emitted per site, `2du/(T+1)`.
    pub fn site_rate(&self) -> F {
        F::from_usize_lossy(2 * self.d) * self.u / (self.t + F::one())
    }

    pub fn survival(&self) -> F {
        self.t / (self.t + F::one())
    }

    pub fn with_u(&self, u: F) -> Self {
        FriParams { u, ..*self }
    }

    pub fn to_f64(&self) -> FriParams<f64> {
        FriParams { u: self.u.as_f64(), t: self.t.as_f64(), d: self.d }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SampleRegion {
    /// Walks visiting the window, from the window and its margin.
    Window(LatticeBox),
    /// All walks started in the box.
    Sources(LatticeBox),
    /// Walks re-indexed from their first visit to the set.
    Restricted(Vec<Point>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginInfo {
    pub margin: u64,
    /// Expected number of neglected walks able to reach the window.
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SeedInfo {
    pub master: u64,
    pub trial: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FriSample {
    pub params: FriParams<f64>,
    pub region: SampleRegion,
    pub trajectories: Vec<Trajectory>,
    pub open_edges: EdgeSet,
    pub seed: SeedInfo,
    pub margin: MarginInfo,
}

impl FriSample {
    fn assemble(params: FriParams<f64>, region: SampleRegion, trajectories: Vec<Trajectory>, seed: SeedInfo, margin: MarginInfo) -> Self {
        let open_edges = edges_of(&trajectories);
        FriSample { params, region, trajectories, open_edges, seed, margin }
    }

    /// The walks started in `sources`, or `None` unless this is a source
    /// sample covering `sources`.
    pub fn sources_within(&self, sources: LatticeBox) -> Option<FriSample> {
        match self.region {
            SampleRegion::Sources(b) if b.contains_box(&sources) => {}
            _ => return None,
        }
        let walks = self.trajectories.iter().filter(|w| sources.contains(&w.start())).cloned().collect();
        Some(FriSample::assemble(self.params, SampleRegion::Sources(sources), walks, self.seed, self.margin))
    }

    /// Sites visited by at least one trajectory.
    pub fn visited(&self) -> HashSet<Point> {
        self.trajectories.iter().flat_map(|w| w.points()).collect()
    }
}

pub fn edges_of(trajectories: &[Trajectory]) -> EdgeSet {
    trajectories.iter().flat_map(|w| w.edges()).collect()
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of sites at l1 distance exactly `m >= 1` from a box with the
/// given side lengths: choose the coordinates `S` that lie outside, a side
/// for each, and a composition of `m` into `|S|` positive parts.
pub fn shell_size(sides: &[u64], m: u64) -> f64 {
    let d = sides.len();
    (1u32..(1 << d)).map(|mask| subset_weight(sides, mask, m)).sum()
}

fn subset_weight(sides: &[u64], mask: u32, m: u64) -> f64 {
    let k = mask.count_ones() as u64;
    let inside: f64 = (0..sides.len()).filter(|j| mask & (1 << j) == 0).map(|j| sides[j] as f64).product();
    2f64.powi(k as i32) * binomial(m - 1, k - 1) * inside
}

/// Margin `M` and the expected number of walks from beyond `M` able to reach
/// the window: the smallest `M` with `Σ_{m>M} |shell_m| λ s^m <= eps`.
pub fn window_margin(params: &FriParams<f64>, window: &LatticeBox, eps: f64) -> Result<(MarginInfo, Vec<f64>), SamplerError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SamplerError::InvalidParameter { name: "eps", value: eps });
    }
    let sides: Vec<u64> = (0..window.dim()).map(|j| window.side(j)).collect();
    let rate = params.site_rate();
    let s = params.survival();
    // term_m = expected number of walks from shell m reaching distance m
    let mut terms = Vec::new();
    let mut m = 1u64;
    let mut power = s;
    loop {
        let term = shell_size(&sides, m) * rate * power;
        terms.push(term);
        let next = shell_size(&sides, m + 1) * rate * power * s;
        let ratio = if term > 0.0 { next / term } else { 0.0 };
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < eps * 1e-6 {
            break;
        }
        m += 1;
        power *= s;
        if m > 50_000_000 {
            return Err(SamplerError::Resource { margin: m, expected_walks: f64::INFINITY, budget: 0.0 });
        }
    }
    // tail beyond the computed range is geometric with the last ratio
    let mut tail = eps * 1e-6;
    let mut margin = terms.len() as u64;
    for (i, &t) in terms.iter().enumerate().rev() {
        if tail + t > eps {
            margin = i as u64 + 1;
            break;
        }
        tail += t;
        margin = i as u64;
    }
    terms.truncate(margin as usize);
    Ok((MarginInfo { margin, tail_bound: tail }, terms))
}

/// Precomputed window construction; [`WindowSampler::run`] streams the walks
/// of one independent sample to a sink.
#[derive(Clone, Debug)]
pub struct WindowSampler {
    params: FriParams<f64>,
    window: LatticeBox,
    margin: MarginInfo,
    /// Expected walk count per exterior shell `m = 1..=M`.
    shell_means: Vec<f64>,
    /// Window side lengths, for uniform shell sampling.
    sides: Vec<u64>,
}

impl WindowSampler {
    pub fn new<F: Real>(params: &FriParams<F>, window: LatticeBox, eps: f64, walk_budget: f64) -> Result<Self, SamplerError> {
        let params = params.to_f64();
        if window.dim() != params.d {
            return Err(LatticeError::DimensionMismatch(window.dim(), params.d).into());
        }
        let (margin, shell_means) = window_margin(&params, &window, eps)?;
        window.check_headroom(margin.margin + 1)?;
        let expected = window.volume() as f64 * params.site_rate() + shell_means.iter().sum::<f64>();
        if expected > walk_budget {
            return Err(SamplerError::Resource { margin: margin.margin, expected_walks: expected, budget: walk_budget });
        }
        let sides = (0..window.dim()).map(|j| window.side(j)).collect();
        Ok(WindowSampler { params, window, margin, shell_means, sides })
    }

    pub fn window(&self) -> LatticeBox {
        self.window
    }

    pub fn margin(&self) -> MarginInfo {
        self.margin
    }

    pub fn params(&self) -> FriParams<f64> {
        self.params
    }

    /// Expected number of walks simulated per sample.
    pub fn expected_walks(&self) -> f64 {
        self.window.volume() as f64 * self.params.site_rate() + self.shell_means.iter().sum::<f64>()
    }

    /// Streams every walk of the sample `(master, trial)` that visits the
    /// window: window sites in row order, then shells `1..=M`.
    pub fn run(&self, master: u64, trial: u64, sink: &mut impl FnMut(&Trajectory)) {
        let rate = self.params.site_rate();
        let s = self.params.survival();
        let d = self.params.d;
        let row_len = self.window.side(d - 1);
        let rows = self.window.volume() / row_len;
        let mut steps = Vec::new();
        for row in 0..rows {
            let mut rng = RandomStream::derive(master, &[tag::WINDOW_ROW, trial, row]);
            let mut start = self.window.point_at((row * row_len) as usize);
            for _ in 0..row_len {
                for _ in 0..stats::poisson(rate, &mut rng) {
                    let len = stats::geometric(s, &mut rng);
                    steps.clear();
                    steps.extend((0..len).map(|_| random_direction(d, &mut rng)));
                    sink(&Trajectory::from_raw(start, steps.clone()));
                }
                start.set(d - 1, start.get(d - 1) + 1);
            }
        }
        for (i, &mean) in self.shell_means.iter().enumerate() {
            let m = i as u64 + 1;
            let mut rng = RandomStream::derive(master, &[tag::WINDOW_SHELL, trial, m]);
            for _ in 0..stats::poisson(mean, &mut rng) {
                let start = self.shell_point(m, &mut rng);
                let len = m + stats::geometric(s, &mut rng);
                if let Some(w) = self.walk_if_hits(start, len, &mut rng, &mut steps) {
                    sink(&w);
                }
            }
        }
    }

    /// Collects one sample.
    pub fn sample(&self, master: u64, trial: u64) -> FriSample {
        let mut trajectories = Vec::new();
        self.run(master, trial, &mut |w| trajectories.push(w.clone()));
        FriSample::assemble(
            self.params,
            SampleRegion::Window(self.window),
            trajectories,
            SeedInfo { master, trial },
            self.margin,
        )
    }

    fn shell_point(&self, m: u64, rng: &mut RandomStream) -> Point {
        let d = self.sides.len();
        let masks: Vec<(u32, f64)> = (1u32..(1 << d)).map(|mask| (mask, subset_weight(&self.sides, mask, m))).collect();
        let total: f64 = masks.iter().map(|x| x.1).sum();
        let mut target = rng.uniform() * total;
        let mut mask = masks.last().expect("d >= 1").0;
        for &(mk, w) in &masks {
            if target < w {
                mask = mk;
                break;
            }
            target -= w;
        }
        let k = mask.count_ones() as usize;
        let parts = random_composition(m, k, rng);
        let lo = self.window.lower();
        let hi = self.window.upper();
        let mut p = lo;
        let mut part = parts.into_iter();
        for j in 0..d {
            if mask & (1 << j) != 0 {
                let off = part.next().expect("one part per outside axis") as i32;
                let c = if rng.below(2) == 0 { hi.get(j) + off } else { lo.get(j) - off };
                p.set(j, c);
            } else {
                p.set(j, lo.get(j) + rng.below(self.sides[j]) as i32);
            }
        }
        p
    }

    /// Simulates a walk of `len` steps from `start`, abandoning it as soon as
    /// the remaining steps cannot reach the window.
    fn walk_if_hits(&self, start: Point, len: u64, rng: &mut RandomStream, steps: &mut Vec<u8>) -> Option<Trajectory> {
        let d = self.params.d;
        steps.clear();
        let mut p = start;
        let mut dist = self.window.l1_distance(&p);
        let mut t = 0u64;
        while dist > 0 {
            if len - t < dist {
                return None;
            }
            let c = random_direction(d, rng);
            steps.push(c);
            p = p.step(c);
            t += 1;
            dist = self.window.l1_distance(&p);
        }
        steps.extend((t..len).map(|_| random_direction(d, rng)));
        Some(Trajectory::from_raw(start, steps.clone()))
    }
}

/// Uniform composition of `m` into `k` positive parts.
fn random_composition(m: u64, k: usize, rng: &mut RandomStream) -> Vec<u64> {
    let mut cuts: Vec<u64> = Vec::with_capacity(k + 1);
    while cuts.len() < k - 1 {
        let c = 1 + rng.below(m - 1);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.push(0);
    cuts.push(m);
    cuts.sort_unstable();
    cuts.windows(2).map(|w| w[1] - w[0]).collect()
}

/// One FRI sample on `window` with truncation error `eps`.
pub fn sample_window<F: Real>(params: &FriParams<F>, window: LatticeBox, eps: f64, master: u64, trial: u64) -> Result<FriSample, SamplerError> {
    Ok(WindowSampler::new(params, window, eps, DEFAULT_WALK_BUDGET)?.sample(master, trial))
}

/// Every walk started in `sources`, with no thinning.
pub fn sample_sources<F: Real>(params: &FriParams<F>, sources: LatticeBox, master: u64, trial: u64, walk_budget: f64) -> Result<FriSample, SamplerError> {
    let params = params.to_f64();
    let expected = sources.volume() as f64 * params.site_rate();
    if expected > walk_budget {
        return Err(SamplerError::Resource { margin: 0, expected_walks: expected, budget: walk_budget });
    }
    sources.check_headroom(1)?;
    let rate = params.site_rate();
    let s = params.survival();
    let d = params.d;
    let row_len = sources.side(d - 1);
    let rows = sources.volume() / row_len;
    let mut trajectories = Vec::new();
    for row in 0..rows {
        let mut rng = RandomStream::derive(master, &[tag::SOURCE_ROW, trial, row]);
        let mut start = sources.point_at((row * row_len) as usize);
        for _ in 0..row_len {
            for _ in 0..stats::poisson(rate, &mut rng) {
                let len = stats::geometric(s, &mut rng);
                let steps = (0..len).map(|_| random_direction(d, &mut rng)).collect();
                trajectories.push(Trajectory::from_raw(start, steps));
            }
            start.set(d - 1, start.get(d - 1) + 1);
        }
    }
    Ok(FriSample::assemble(
        params,
        SampleRegion::Sources(sources),
        trajectories,
        SeedInfo { master, trial },
        MarginInfo { margin: 0, tail_bound: 0.0 },
    ))
}

/// Restricted sampler on a finite set: Poisson(`u · cap^{(T)}(K)`) killed
/// walks started from the normalised killed equilibrium measure.
pub fn sample_restricted<F: Real>(params: &FriParams<F>, k: &[Point], master: u64, trial: u64) -> Result<FriSample, SamplerError> {
    RestrictedSampler::new(params, k)?.sample(master, trial)
}

/// Restricted sampler with the equilibrium solve and alias table cached.
#[derive(Clone, Debug)]
pub struct RestrictedSampler {
    params: FriParams<f64>,
    support: Vec<Point>,
    alias: Option<WeightedAliasIndex<f64>>,
    mean: f64,
}

impl RestrictedSampler {
    pub fn new<F: Real>(params: &FriParams<F>, k: &[Point]) -> Result<Self, SamplerError> {
        let params = params.to_f64();
        let eq = hitting::killed_equilibrium(k, params.t, 1e-9)?;
        let support: Vec<Point> = eq.support().copied().collect();
        let weights: Vec<f64> = support.iter().map(|p| eq.weight(p)).collect();
        let alias = if weights.is_empty() { None } else { Some(WeightedAliasIndex::new(weights).expect("positive weights")) };
        Ok(RestrictedSampler { params, support, alias, mean: params.u * eq.total() })
    }

    /// `u · cap^{(T)}(K)`.
    pub fn mean_count(&self) -> f64 {
        self.mean
    }

    pub fn sample(&self, master: u64, trial: u64) -> Result<FriSample, SamplerError> {
        let mut rng = RandomStream::derive(master, &[tag::RESTRICTED, trial]);
        let n = stats::poisson(self.mean, &mut rng);
        let s = self.params.survival();
        let d = self.params.d;
        let mut trajectories = Vec::with_capacity(n as usize);
        if let Some(alias) = &self.alias {
            for _ in 0..n {
                let start = self.support[alias.sample(&mut rng)];
                let len = stats::geometric(s, &mut rng);
                let steps = (0..len).map(|_| random_direction(d, &mut rng)).collect();
                trajectories.push(Trajectory::from_raw(start, steps));
            }
        }
        Ok(FriSample::assemble(
            self.params,
            SampleRegion::Restricted(self.support.clone()),
            trajectories,
            SeedInfo { master, trial },
            MarginInfo { margin: 0, tail_bound: 0.0 },
        ))
    }
}

/// `P(K ∩ FRI = ∅) = exp(-u · cap^{(T)}(K))`.
pub fn vacancy_probability<F: Real>(params: &FriParams<F>, k: &[Point]) -> Result<F, SamplerError> {
    let cap = hitting::killed_capacity(k, params.t, F::lit(1e-9))?;
    Ok((-params.u * cap.value).exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitUnionReport {
    pub trials: u64,
    pub vacancy_site: Point,
    pub vacancy_exact: f64,
    pub vacancy_full: f64,
    pub vacancy_union: f64,
    /// Two-proportion z statistic for the vacancy frequencies.
    pub vacancy_z: f64,
    pub edges_full: stats::Summary,
    pub edges_union: stats::Summary,
    /// Welch z statistic for the open-edge counts inside the window.
    pub edges_z: f64,
}

/// Compares FRI(u, T) with the union of two independent FRI(u/2, T) on a
/// window: vacancy of the window's centre and the open-edge count.
pub fn split_union_check(params: &FriParams<f64>, window: LatticeBox, eps: f64, trials: u64, master: u64) -> Result<SplitUnionReport, SamplerError> {
    let full = WindowSampler::new(params, window, eps, DEFAULT_WALK_BUDGET)?;
    let half = WindowSampler::new(&params.with_u(params.u / 2.0), window, eps, DEFAULT_WALK_BUDGET)?;
    let centre = window.center();
    let inside = |e: &crate::lattice::Edge| {
        let (a, b) = e.endpoints();
        window.contains(&a) && window.contains(&b)
    };
    let mut vac = [0u64; 2];
    let mut counts: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for trial in 0..trials {
        let a = full.sample(master, 3 * trial);
        let b1 = half.sample(master, 3 * trial + 1);
        let b2 = half.sample(master, 3 * trial + 2);
        let mut union_edges = b1.open_edges.clone();
        union_edges.extend(b2.open_edges.iter().copied());
        let hit_full = a.trajectories.iter().any(|w| w.points().any(|p| p == centre));
        let hit_union = b1.trajectories.iter().chain(&b2.trajectories).any(|w| w.points().any(|p| p == centre));
        vac[0] += u64::from(!hit_full);
        vac[1] += u64::from(!hit_union);
        counts[0].push(a.open_edges.iter().filter(|e| inside(e)).count() as f64);
        counts[1].push(union_edges.iter().filter(|e| inside(e)).count() as f64);
    }
    let n = trials as f64;
    let (p1, p2) = (vac[0] as f64 / n, vac[1] as f64 / n);
    let pooled = (p1 + p2) / 2.0;
    let se = (2.0 * pooled * (1.0 - pooled) / n).sqrt();
    let vacancy_z = if se > 0.0 { (p1 - p2) / se } else { 0.0 };
    let edges_full = stats::Summary::of(counts[0].iter().copied());
    let edges_union = stats::Summary::of(counts[1].iter().copied());
    let se_e = (edges_full.std_error().powi(2) + edges_union.std_error().powi(2)).sqrt();
    let edges_z = if se_e > 0.0 { (edges_full.mean - edges_union.mean) / se_e } else { 0.0 };
    Ok(SplitUnionReport {
        trials,
        vacancy_site: centre,
        vacancy_exact: vacancy_probability(params, &[centre])?,
        vacancy_full: p1,
        vacancy_union: p2,
        vacancy_z,
        edges_full,
        edges_union,
        edges_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Edge;
    use std::collections::BTreeSet;

    fn p(c: &[i32]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FriParams::new(0.0, 1.0, 3).is_err());
        assert!(FriParams::new(1.0, -1.0, 3).is_err());
        assert!(FriParams::new(1.0, 1.0, 0).is_err());
        let fp = FriParams::new(0.5f64, 2.0, 3).unwrap();
        assert!((fp.site_rate() - 1.0).abs() < 1e-15);
        let f32p = FriParams::new(0.5f32, 2.0, 3).unwrap();
        assert!((f32p.site_rate() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shell_sizes_match_enumeration() {
        let window = LatticeBox::new(p(&[0, 0, 0]), p(&[2, 1, 3])).unwrap();
        let sides = [3, 2, 4];
        let big = window.expanded(6);
        for m in 1..=5u64 {
            let direct = big.points().filter(|q| window.l1_distance(q) == m).count() as f64;
            assert_eq!(shell_size(&sides, m), direct, "m = {m}");
        }
        assert_eq!(shell_size(&[1], 3), 2.0);
    }

    #[test]
    fn shell_points_are_uniform() {
        let window = LatticeBox::new(p(&[0, 0]), p(&[2, 1])).unwrap();
        let params = FriParams::new(1.0, 5.0, 2).unwrap();
        let ws = WindowSampler::new(&params, window, 1e-3, 1e9).unwrap();
        let mut rng = RandomStream::derive(1, &[99]);
        let m = 3;
        let shell: Vec<Point> = window.expanded(4).points().filter(|q| window.l1_distance(q) == m).collect();
        let mut counts = std::collections::HashMap::new();
        let n = 60_000;
        for _ in 0..n {
            let q = ws.shell_point(m, &mut rng);
            assert_eq!(window.l1_distance(&q), m);
            *counts.entry(q).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), shell.len());
        let expected = n as f64 / shell.len() as f64;
        let chi: f64 = shell.iter().map(|q| (counts[q] as f64 - expected).powi(2) / expected).sum();
        let t = statrs::distribution::ChiSquared::new((shell.len() - 1) as f64).unwrap();
        use statrs::distribution::ContinuousCDF;
        assert!(1.0 - t.cdf(chi) > 1e-4, "chi2 {chi}");
    }

    #[test]
    fn margin_tail_is_below_eps() {
        let params = FriParams::new(1.0, 3.0, 3).unwrap();
        let window = LatticeBox::cube(3, 2);
        for &eps in &[1e-2, 1e-6] {
            let (info, terms) = window_margin(&params, &window, eps).unwrap();
            assert!(info.tail_bound <= eps);
            assert_eq!(terms.len() as u64, info.margin);
            // brute force tail over a long range
            let sides = [5, 5, 5];
            let s: f64 = 0.75;
            let tail: f64 = (info.margin + 1..2000).map(|m| shell_size(&sides, m) * 1.5 * s.powi(m as i32)).sum();
            assert!(tail <= eps, "tail {tail} eps {eps}");
            if info.margin > 0 {
                let with_last = tail + shell_size(&sides, info.margin) * 1.5 * s.powi(info.margin as i32);
                assert!(with_last > eps * 0.999);
            }
        }
        assert!(window_margin(&params, &window, 0.0).is_err());
    }

    #[test]
    fn resource_error_reports_margin() {
        let params = FriParams::new(1.0, 50.0, 3).unwrap();
        let err = WindowSampler::new(&params, LatticeBox::cube(3, 40), 1e-6, 1e4).unwrap_err();
        match err {
            SamplerError::Resource { margin, .. } => assert!(margin > 0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn open_edges_are_the_union_of_crossed_edges() {
        let params = FriParams::new(0.3, 4.0, 3).unwrap();
        let s = sample_window(&params, LatticeBox::cube(3, 3), 1e-4, 11, 0).unwrap();
        let recomputed: BTreeSet<Edge> = s.trajectories.iter().flat_map(|w| w.edges()).collect();
        assert_eq!(recomputed, s.open_edges);
        let window = LatticeBox::cube(3, 3);
        let padded = window.expanded(s.margin.margin as u32);
        assert!(s.trajectories.iter().all(|w| padded.contains(&w.start()) && w.intersects_box(&window)));
    }

    #[test]
    fn samples_are_reproducible() {
        let params = FriParams::new(0.3, 4.0, 3).unwrap();
        let a = sample_window(&params, LatticeBox::cube(3, 3), 1e-4, 11, 5).unwrap();
        let b = sample_window(&params, LatticeBox::cube(3, 3), 1e-4, 11, 5).unwrap();
        let c = sample_window(&params, LatticeBox::cube(3, 3), 1e-4, 11, 6).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
        assert_ne!(a.trajectories, c.trajectories);
    }

    #[test]
    fn tiny_intensity_gives_empty_samples() {
        let params = FriParams::new(1e-9, 1.0, 3).unwrap();
        let window = LatticeBox::cube(3, 2);
        let empty = (0..200).filter(|&t| sample_window(&params, window, 1e-3, 1, t).unwrap().trajectories.is_empty()).count();
        assert_eq!(empty, 200);
    }

    #[test]
    fn mean_count_of_walks_started_in_window() {
        let params = FriParams::new(0.5, 2.0, 3).unwrap();
        let window = LatticeBox::cube(3, 2);
        let n = 2000;
        let counts: Vec<f64> = (0..n)
            .map(|t| {
                let s = sample_window(&params, window, 1e-3, 7, t).unwrap();
                s.trajectories.iter().filter(|w| window.contains(&w.start())).count() as f64
            })
            .collect();
        let summary = stats::Summary::of(counts);
        let expected = 125.0 * params.site_rate();
        assert!((summary.mean - expected).abs() < 4.0 * (expected / n as f64).sqrt());
    }

    #[test]
    fn sources_match_window_inside() {
        // walks started in the window are drawn from the same law by both
        let params = FriParams::new(0.5, 2.0, 2).unwrap();
        let bx = LatticeBox::cube(2, 3);
        let n = 3000;
        let mean_src: f64 = (0..n).map(|t| sample_sources(&params, bx, 3, t, 1e9).unwrap().trajectories.len() as f64).sum::<f64>() / n as f64;
        let expected = 49.0 * params.site_rate();
        assert!((mean_src - expected).abs() < 4.0 * (expected / n as f64).sqrt());
    }

    #[test]
    fn restricted_singleton_and_symmetric_pair() {
        let params = FriParams::new(0.5, 2.0, 3).unwrap();
        let single = RestrictedSampler::new(&params, &[Point::origin(3)]).unwrap();
        for t in 0..50 {
            let s = single.sample(1, t).unwrap();
            assert!(s.trajectories.iter().all(|w| w.start() == Point::origin(3)));
        }
        let pair = vec![p(&[0, 0, 0]), p(&[1, 0, 0])];
        let sampler = RestrictedSampler::new(&params, &pair).unwrap();
        let (mut a, mut total) = (0u64, 0u64);
        for t in 0..4000 {
            for w in sampler.sample(2, t).unwrap().trajectories {
                total += 1;
                a += u64::from(w.start() == pair[0]);
            }
        }
        let frac = a as f64 / total as f64;
        assert!((frac - 0.5).abs() < 4.0 * stats::binomial_se(0.5, total));
    }

    #[test]
    fn vacancy_closed_forms() {
        let params = FriParams::new(0.5f64, 2.0, 3).unwrap();
        let v = vacancy_probability(&params, &[Point::origin(3)]).unwrap();
        assert!((v - 0.064_240_347_94).abs() < 1e-9);
        let pair = vec![p(&[0, 0, 0]), p(&[1, 0, 0])];
        let v2 = vacancy_probability(&params, &pair).unwrap();
        assert!((v2 - 0.007_675_924_626).abs() < 1e-9);
        let tiny = FriParams::new(1e-12f64, 2.0, 3).unwrap();
        assert!((vacancy_probability(&tiny, &pair).unwrap() - 1.0).abs() < 1e-10);
        // halving identity
        let h = vacancy_probability(&params.with_u(0.25), &pair).unwrap();
        assert!((h * h - v2).abs() < 1e-14);
    }

    #[test]
    fn union_of_two_half_intensity_copies() {
        let params = FriParams::new(0.6, 3.0, 3).unwrap();
        let report = split_union_check(&params, LatticeBox::cube(3, 2), 1e-4, 1500, 21).unwrap();
        assert!(report.vacancy_z.abs() < 4.0, "{report:?}");
        assert!(report.edges_z.abs() < 4.0, "{report:?}");
        let se = stats::binomial_se(report.vacancy_exact, report.trials);
        assert!((report.vacancy_full - report.vacancy_exact).abs() < 4.0 * se);
    }
}
