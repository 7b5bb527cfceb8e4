//! Good-box events of the renormalisation scheme and the block field they
//! induce.
//!
//! Geometry, with full-scale defaults in terms of `R`:
//!
//! * `B̂ = c + [-Ŝ, Ŝ]^d`, `Ŝ = 64R²`;
//! * anchors `x_{i,j} = c + (-Ŝ/2 + s i) e_j`, `0 <= i <= Ŝ/s`, `s = 8R`;
//! * `b_{i,j} = x_{i,j} + [-r, r]^d`, `b̂_{i,j} = x_{i,j} + [-r̂, r̂]^d`, `r = R`, `r̂ = 2R`;
//! * walk sources `B(c, ρ)`, `ρ = 128R²`;
//! * halves `B̂_j^±` (`x_j > 0` resp. `< 0` inside `B̂`) and slabs
//!   `A_j^± = {a <= ±x_j <= ρ, |x_i| <= ρ}`, `a = 96R²`.
//!
//! Block `x` uses the geometry centred at `(Ŝ/2) x`.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hitting::{self, CapacityBudget, GreenKernel, SolverError};
use crate::lattice::{Edge, LatticeBox, LatticeError, Point};
use crate::parallel;
use crate::percolation::UnionFind;
use crate::rng::{stream_id, tag};
use crate::sampler::{sample_sources, FriParams, FriSample, SampleRegion, SamplerError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GoodBoxError {
    #[error("geometry violates {0}")]
    Geometry(String),
    #[error("sample does not record every walk started in {0:?}")]
    MissingSources(LatticeBox),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Optional replacements for the full-scale parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryOverrides {
    pub s_hat: Option<u32>,
    pub spacing: Option<u32>,
    pub r: Option<u32>,
    pub r_hat: Option<u32>,
    pub rho: Option<u32>,
    pub slab_inner: Option<u32>,
    pub cap_threshold: Option<f64>,
}

impl GeometryOverrides {
    /// Scaled-down geometry at `R = 1` used by the tests and acceptance runs.
    pub fn toy() -> Self {
        GeometryOverrides {
            s_hat: Some(16),
            spacing: Some(4),
            r: Some(1),
            r_hat: Some(2),
            rho: Some(24),
            slab_inner: Some(20),
            cap_threshold: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GoodBoxGeometry {
    pub scale: u32,
    pub d: usize,
    pub s_hat: u32,
    pub spacing: u32,
    pub r: u32,
    pub r_hat: u32,
    pub rho: u32,
    pub slab_inner: u32,
    pub cap_threshold: f64,
    pub center: Point,
}

impl GoodBoxGeometry {
    pub fn build(scale: u32, d: usize, overrides: &GeometryOverrides) -> Result<Self, GoodBoxError> {
        if scale == 0 {
            return Err(GoodBoxError::Geometry("R >= 1".into()));
        }
        if d < 3 {
            return Err(GoodBoxError::Geometry(format!("d >= 3 (got {d})")));
        }
        let r2 = scale * scale;
        let g = GoodBoxGeometry {
            scale,
            d,
            s_hat: overrides.s_hat.unwrap_or(64 * r2),
            spacing: overrides.spacing.unwrap_or(8 * scale),
            r: overrides.r.unwrap_or(scale),
            r_hat: overrides.r_hat.unwrap_or(2 * scale),
            rho: overrides.rho.unwrap_or(128 * r2),
            slab_inner: overrides.slab_inner.unwrap_or(96 * r2),
            cap_threshold: overrides.cap_threshold.unwrap_or((scale as f64).powf(2.0 * (d as f64 - 2.0) / 3.0)),
            center: Point::origin(d),
        };
        let checks = [
            (g.s_hat > 0 && g.spacing > 0 && g.r > 0 && g.r_hat > 0, "all scales positive"),
            (g.r <= g.r_hat, "b_{i,j} ⊂ b̂_{i,j} (r <= r̂)"),
            (g.s_hat / 2 + g.r_hat <= g.s_hat && g.s_hat % 2 == 0, "b̂_{i,j} ⊂ B̂ (Ŝ even, Ŝ/2 + r̂ <= Ŝ)"),
            (g.spacing <= g.s_hat, "spacing <= Ŝ"),
            (g.s_hat <= g.rho, "B̂ ⊂ B(ρ) (Ŝ <= ρ)"),
            (g.slab_inner <= g.rho, "A_j^± nonempty (a <= ρ)"),
            (g.cap_threshold.is_finite() && g.cap_threshold >= 0.0, "finite capacity threshold"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(GoodBoxError::Geometry(what.into()));
            }
        }
        LatticeBox::centered(g.center, g.rho).check_headroom(1)?;
        Ok(g)
    }

    /// Largest anchor index, `Ŝ/s`.
    pub fn max_index(&self) -> u32 {
        self.s_hat / self.spacing
    }

    pub fn anchor(&self, i: u32, j: usize) -> Point {
        let mut p = self.center;
        p.set(j, p.get(j) - (self.s_hat / 2) as i32 + (self.spacing * i) as i32);
        p
    }

    pub fn sub_box(&self, i: u32, j: usize) -> LatticeBox {
        LatticeBox::centered(self.anchor(i, j), self.r)
    }

    pub fn sub_box_hat(&self, i: u32, j: usize) -> LatticeBox {
        LatticeBox::centered(self.anchor(i, j), self.r_hat)
    }

    /// `B̂`.
    pub fn big_box(&self) -> LatticeBox {
        LatticeBox::centered(self.center, self.s_hat)
    }

    /// `B(c, ρ)`: the walks that the event depends on start here.
    pub fn source_ball(&self) -> LatticeBox {
        LatticeBox::centered(self.center, self.rho)
    }

    /// `B̂_j^+` (`plus`) or `B̂_j^-`.
    pub fn half(&self, j: usize, plus: bool) -> LatticeBox {
        let b = self.big_box();
        let (mut lo, mut hi) = (b.lower(), b.upper());
        let c = self.center.get(j);
        if plus {
            lo.set(j, c + 1);
        } else {
            hi.set(j, c - 1);
        }
        LatticeBox::new(lo, hi).expect("Ŝ >= 1")
    }

    /// `A_j^+` (`plus`) or `A_j^-`.
    pub fn slab(&self, j: usize, plus: bool) -> LatticeBox {
        let b = self.source_ball();
        let (mut lo, mut hi) = (b.lower(), b.upper());
        let c = self.center.get(j);
        let (a, rho) = (self.slab_inner as i32, self.rho as i32);
        if plus {
            lo.set(j, c + a);
            hi.set(j, c + rho);
        } else {
            lo.set(j, c - rho);
            hi.set(j, c - a);
        }
        LatticeBox::new(lo, hi).expect("a <= ρ")
    }

    /// Centre shift between neighbouring blocks, `Ŝ/2`.
    pub fn block_shift(&self) -> u32 {
        self.s_hat / 2
    }

    /// Geometry of block `x` (block coordinates).
    pub fn shifted(&self, x: &Point) -> GoodBoxGeometry {
        GoodBoxGeometry { center: x.scaled(self.block_shift() as i32), ..*self }
    }

    /// Blocks further apart than this in l∞ have disjoint walk sources.
    pub fn dependence_range(&self) -> u32 {
        2 * self.rho / self.block_shift()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Yes,
    No,
    /// The capacity interval straddles the threshold; counted as failure.
    Uncertain,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubBoxWitness {
    pub i: u32,
    pub j: usize,
    /// `E_{i,j}`.
    pub witnesses: Vec<Point>,
    pub uncertain: Vec<Point>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WalkId {
    /// 1 or 2.
    pub sample: u8,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodBoxReport {
    pub geometry: GoodBoxGeometry,
    pub cond1: bool,
    pub cond1_sets: Vec<SubBoxWitness>,
    pub cond2: bool,
    /// `(i, j, x, y)` with `x ∈ E_{i,j}`, `y ∈ E_{i+1,j}` not linked.
    pub cond2_failures: Vec<(u32, usize, Point, Point)>,
    pub cond3: bool,
    pub cond3_offenders: Vec<WalkId>,
    pub good: bool,
}

/// Walk-source subgraph `D_i`: edges and vertices of the walks of a sample
/// started in the source ball.
#[derive(Clone, Debug, Default)]
pub struct SourceGraph {
    pub vertices: HashSet<Point>,
    pub edges: HashSet<Edge>,
}

impl SourceGraph {
    pub fn from_sample(sample: &FriSample, sources: &LatticeBox) -> Self {
        let mut g = SourceGraph::default();
        for w in sample.trajectories.iter().filter(|w| sources.contains(&w.start())) {
            g.vertices.extend(w.points());
            g.edges.extend(w.edges());
        }
        g
    }
}

fn require_sources(sample: &FriSample, ball: &LatticeBox) -> Result<(), GoodBoxError> {
    match &sample.region {
        SampleRegion::Sources(b) if b.contains_box(ball) => Ok(()),
        _ => Err(GoodBoxError::MissingSources(*ball)),
    }
}

/// Components of `D_1 ∩ b̂`: vertices of `D_1` in the box joined by `D_1`
/// edges with both endpoints in the box.
fn clusters_in(g: &SourceGraph, bx: &LatticeBox) -> (Vec<Point>, HashMap<Point, u32>, Vec<Vec<Point>>) {
    let verts: Vec<Point> = bx.points().filter(|p| g.vertices.contains(p)).collect();
    let index: HashMap<Point, u32> = verts.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect();
    let mut uf = UnionFind::new(verts.len());
    for (i, p) in verts.iter().enumerate() {
        for axis in 0..p.dim() {
            let q = p.step(2 * axis as u8);
            if let Some(&k) = index.get(&q) {
                if g.edges.contains(&Edge { base: *p, axis: axis as u8 }) {
                    uf.union(i as u32, k);
                }
            }
        }
    }
    let mut label_of_root = HashMap::new();
    let mut members: Vec<Vec<Point>> = Vec::new();
    let mut label = HashMap::new();
    for (i, p) in verts.iter().enumerate() {
        let r = uf.find(i as u32);
        let next = members.len() as u32;
        let l = *label_of_root.entry(r).or_insert(next);
        if l == next {
            members.push(Vec::new());
        }
        members[l as usize].push(*p);
        label.insert(*p, l);
    }
    (verts, label, members)
}

/// Evaluates the good-box event; keeps the capacity kernel between calls.
#[derive(Clone, Debug)]
pub struct GoodBoxChecker {
    budget: CapacityBudget,
    kernel: Option<GreenKernel<f64>>,
    cap_cache: HashMap<Vec<Point>, (f64, f64)>,
}

impl GoodBoxChecker {
    pub fn new(budget: CapacityBudget) -> Self {
        GoodBoxChecker { budget, kernel: None, cap_cache: HashMap::new() }
    }

    /// Classical capacity of a cluster with its error bound, memoised up to
    /// translation.
    pub fn capacity(&mut self, cluster: &[Point]) -> Result<(f64, f64), GoodBoxError> {
        let base = *cluster.iter().min().expect("nonempty cluster");
        let mut key: Vec<Point> = cluster.iter().map(|p| *p - base).collect();
        key.sort_unstable();
        if let Some(&v) = self.cap_cache.get(&key) {
            return Ok(v);
        }
        let res = match self.budget {
            CapacityBudget::Exact => {
                let kernel = self.kernel.get_or_insert_with(|| GreenKernel::unkilled(cluster[0].dim()));
                hitting::classical_capacity_with(kernel, &key)?
            }
            budget => hitting::classical_capacity::<f64>(&key, budget)?,
        };
        let v = (res.value, res.error_bound);
        self.cap_cache.insert(key, v);
        Ok(v)
    }

    pub fn verdict(&mut self, cluster: &[Point], threshold: f64) -> Result<Verdict, GoodBoxError> {
        let (v, e) = self.capacity(cluster)?;
        Ok(if v - e >= threshold {
            Verdict::Yes
        } else if v + e < threshold {
            Verdict::No
        } else {
            Verdict::Uncertain
        })
    }

    pub fn check(&mut self, geometry: &GoodBoxGeometry, sample1: &FriSample, sample2: &FriSample) -> Result<GoodBoxReport, GoodBoxError> {
        let ball = geometry.source_ball();
        require_sources(sample1, &ball)?;
        require_sources(sample2, &ball)?;
        let d1 = SourceGraph::from_sample(sample1, &ball);
        let d2 = SourceGraph::from_sample(sample2, &ball);

        // condition (1)
        let n = geometry.max_index();
        let mut cond1_sets = Vec::new();
        // per (i, j): cluster label of each witness and the cluster members
        let mut witness_clusters: HashMap<(u32, usize), Vec<(Point, u32)>> = HashMap::new();
        let mut cluster_members: HashMap<(u32, usize), Vec<Vec<Point>>> = HashMap::new();
        for j in 0..geometry.d {
            for i in 0..=n {
                let (_, label, members) = clusters_in(&d1, &geometry.sub_box_hat(i, j));
                let mut verdicts: HashMap<u32, Verdict> = HashMap::new();
                let mut witnesses = Vec::new();
                let mut uncertain = Vec::new();
                let mut wc = Vec::new();
                for x in geometry.sub_box(i, j).points() {
                    let Some(&l) = label.get(&x) else { continue };
                    let v = match verdicts.get(&l) {
                        Some(&v) => v,
                        None => {
                            let v = self.verdict(&members[l as usize], geometry.cap_threshold)?;
                            verdicts.insert(l, v);
                            v
                        }
                    };
                    match v {
                        Verdict::Yes => {
                            witnesses.push(x);
                            wc.push((x, l));
                        }
                        Verdict::Uncertain => uncertain.push(x),
                        Verdict::No => {}
                    }
                }
                witness_clusters.insert((i, j), wc);
                cluster_members.insert((i, j), members);
                cond1_sets.push(SubBoxWitness { i, j, witnesses, uncertain });
            }
        }
        let cond1 = cond1_sets.iter().all(|s| !s.witnesses.is_empty());

        // condition (2): C(A, D_2) is A plus every D_2 component meeting A
        let d2_label = d2_labels(&d2);
        let mut cond2_failures = Vec::new();
        for j in 0..geometry.d {
            for i in 0..n {
                let a_side = &witness_clusters[&(i, j)];
                let b_side = &witness_clusters[&(i + 1, j)];
                let mut linked: HashMap<(u32, u32), bool> = HashMap::new();
                for &(x, la) in a_side {
                    for &(y, lb) in b_side {
                        let ok = *linked.entry((la, lb)).or_insert_with(|| {
                            let a = &cluster_members[&(i, j)][la as usize];
                            let b = &cluster_members[&(i + 1, j)][lb as usize];
                            clusters_linked(a, b, &d2_label)
                        });
                        if !ok {
                            cond2_failures.push((i, j, x, y));
                        }
                    }
                }
            }
        }
        let cond2 = cond2_failures.is_empty();

        // condition (3)
        let mut cond3_offenders = Vec::new();
        for (tagn, sample) in [(1u8, sample1), (2u8, sample2)] {
            for (index, w) in sample.trajectories.iter().enumerate() {
                let start = w.start();
                let offends = (0..geometry.d).any(|j| {
                    (geometry.slab(j, true).contains(&start) && w.intersects_box(&geometry.half(j, false)))
                        || (geometry.slab(j, false).contains(&start) && w.intersects_box(&geometry.half(j, true)))
                });
                if offends {
                    cond3_offenders.push(WalkId { sample: tagn, index });
                }
            }
        }
        let cond3 = cond3_offenders.is_empty();
        Ok(GoodBoxReport {
            geometry: *geometry,
            cond1,
            cond1_sets,
            cond2,
            cond2_failures,
            cond3,
            cond3_offenders,
            good: cond1 && cond2 && cond3,
        })
    }
}

/// Component label of every vertex of `D_2`.
fn d2_labels(g: &SourceGraph) -> HashMap<Point, u32> {
    let mut verts: Vec<Point> = g.vertices.iter().copied().collect();
    verts.sort_unstable();
    let index: HashMap<Point, u32> = verts.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect();
    let mut uf = UnionFind::new(verts.len());
    for e in &g.edges {
        let (a, b) = e.endpoints();
        uf.union(index[&a], index[&b]);
    }
    verts.iter().enumerate().map(|(i, p)| (*p, uf.find(i as u32))).collect()
}

fn clusters_linked(a: &[Point], b: &[Point], d2_label: &HashMap<Point, u32>) -> bool {
    let set_b: HashSet<&Point> = b.iter().collect();
    if a.iter().any(|p| set_b.contains(p)) {
        return true;
    }
    let labels_a: HashSet<u32> = a.iter().filter_map(|p| d2_label.get(p).copied()).collect();
    b.iter().filter_map(|p| d2_label.get(p)).any(|l| labels_a.contains(l))
}

pub fn check_good(geometry: &GoodBoxGeometry, sample1: &FriSample, sample2: &FriSample, budget: CapacityBudget) -> Result<GoodBoxReport, GoodBoxError> {
    GoodBoxChecker::new(budget).check(geometry, sample1, sample2)
}

/// Two independent FRI(`u/2`, `T`) samples of every walk started in
/// `geometry.source_ball()` widened by `extra`.
pub fn sample_pair(params: &FriParams<f64>, geometry: &GoodBoxGeometry, extra: u32, master: u64, trial: u64, walk_budget: f64) -> Result<(FriSample, FriSample), GoodBoxError> {
    let half = params.with_u(params.u / 2.0);
    let sources = geometry.source_ball().expanded(extra);
    let key = |copy: u64| stream_id(&[tag::BLOCK, trial, copy]);
    let s1 = sample_sources(&half, sources, master, key(1), walk_budget)?;
    let s2 = sample_sources(&half, sources, master, key(2), walk_budget)?;
    Ok((s1, s2))
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockField {
    pub geometry: GoodBoxGeometry,
    pub values: BTreeMap<Point, bool>,
    /// Blocks not evaluated because the walk budget ran out.
    pub missing: Vec<Point>,
}

fn block_key(x: &Point) -> u64 {
    let coords: Vec<u64> = x.coords().iter().map(|&c| c as i64 as u64).collect();
    stream_id(&coords)
}

/// `Y_x` for every block `x` of `region`, each from its own locally
/// generated pair of samples. Blocks run on `workers` threads.
pub fn block_field(
    params: &FriParams<f64>,
    geometry: &GoodBoxGeometry,
    region: &LatticeBox,
    budget: CapacityBudget,
    master: u64,
    walk_budget: f64,
    workers: usize,
) -> Result<BlockField, GoodBoxError> {
    let per_block = geometry.source_ball().volume() as f64 * params.site_rate();
    let blocks: Vec<Point> = region.points().collect();
    let affordable = if per_block > 0.0 { (walk_budget / per_block).floor() as usize } else { blocks.len() };
    let (run, missing) = blocks.split_at(affordable.min(blocks.len()));
    let results = parallel::map_ordered(workers, run, |x| {
        let g = geometry.shifted(x);
        let (s1, s2) = sample_pair(params, &g, 0, master, block_key(x), f64::INFINITY)?;
        let report = check_good(&g, &s1, &s2, budget)?;
        Ok::<_, GoodBoxError>((*x, report.good))
    });
    let values = results.into_iter().collect::<Result<BTreeMap<_, _>, _>>()?;
    Ok(BlockField { geometry: *geometry, values, missing: missing.to_vec() })
}

/// Block field from one shared pair of samples covering every block's
/// source ball, so neighbouring blocks see the same walks.
pub fn block_field_joint(
    params: &FriParams<f64>,
    geometry: &GoodBoxGeometry,
    region: &LatticeBox,
    budget: CapacityBudget,
    master: u64,
    trial: u64,
) -> Result<(BlockField, Vec<GoodBoxReport>, FriSample, FriSample), GoodBoxError> {
    let balls: Vec<LatticeBox> = region.points().map(|x| geometry.shifted(&x).source_ball()).collect();
    let corners: Vec<Point> = balls.iter().flat_map(|b| [b.lower(), b.upper()]).collect();
    let sources = LatticeBox::bounding(&corners).expect("nonempty region");
    let half = params.with_u(params.u / 2.0);
    let s1 = sample_sources(&half, sources, master, stream_id(&[tag::BLOCK, trial, 1, 1]), f64::INFINITY)?;
    let s2 = sample_sources(&half, sources, master, stream_id(&[tag::BLOCK, trial, 1, 2]), f64::INFINITY)?;
    let mut checker = GoodBoxChecker::new(budget);
    let mut values = BTreeMap::new();
    let mut reports = Vec::new();
    for x in region.points() {
        let report = checker.check(&geometry.shifted(&x), &s1, &s2)?;
        values.insert(x, report.good);
        reports.push(report);
    }
    Ok((BlockField { geometry: *geometry, values, missing: Vec::new() }, reports, s1, s2))
}
