//! Connectivity of the open subgraph: union-find components, crossings and
//! cluster statistics, in a sparse form over edge sets and a dense form over
//! the sites of a window.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::lattice::{Edge, LatticeBox, Point};
use crate::walk::Trajectory;

/// Disjoint sets with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "union-find capacity");
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.size.push(1);
        id
    }

    #[inline]
    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    #[inline]
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    pub fn set_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.fill(1);
    }
}

/// Connected components of the graph spanned by a set of edges. Ids are
/// assigned in order of first appearance in the input.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ComponentLabeling {
    pub label_of: HashMap<Point, u32>,
    pub vertex_counts: Vec<u64>,
    pub edge_counts: Vec<u64>,
}

impl ComponentLabeling {
    pub fn label(&self, p: &Point) -> Option<u32> {
        self.label_of.get(p).copied()
    }

    pub fn num_components(&self) -> usize {
        self.vertex_counts.len()
    }

    /// Vertex sets per component, sorted.
    pub fn members(&self) -> Vec<Vec<Point>> {
        let mut out = vec![Vec::new(); self.num_components()];
        for (p, &l) in &self.label_of {
            out[l as usize].push(*p);
        }
        for m in &mut out {
            m.sort_unstable();
        }
        out
    }
}

pub fn components<'a>(edges: impl IntoIterator<Item = &'a Edge>) -> ComponentLabeling {
    let mut index: HashMap<Point, u32> = HashMap::new();
    let mut uf = UnionFind::new(0);
    let mut edge_list: Vec<(u32, u32)> = Vec::new();
    let mut id_of = |p: Point, uf: &mut UnionFind| *index.entry(p).or_insert_with(|| uf.push());
    for e in edges {
        let (a, b) = e.endpoints();
        let ia = id_of(a, &mut uf);
        let ib = id_of(b, &mut uf);
        uf.union(ia, ib);
        edge_list.push((ia, ib));
    }
    let mut label_of_root: HashMap<u32, u32> = HashMap::new();
    let mut vertex_counts = Vec::new();
    // vertex ids were handed out in order of first appearance
    let mut vertex_label = vec![0u32; uf.len()];
    for v in 0..uf.len() as u32 {
        let r = uf.find(v);
        let next = label_of_root.len() as u32;
        let l = *label_of_root.entry(r).or_insert(next);
        if l as usize == vertex_counts.len() {
            vertex_counts.push(0);
        }
        vertex_counts[l as usize] += 1;
        vertex_label[v as usize] = l;
    }
    let mut edge_counts = vec![0u64; vertex_counts.len()];
    for (a, _) in edge_list {
        edge_counts[vertex_label[a as usize] as usize] += 1;
    }
    let label_of = index.into_iter().map(|(p, v)| (p, vertex_label[v as usize])).collect();
    ComponentLabeling { label_of, vertex_counts, edge_counts }
}

/// Edges with both endpoints in `window`.
pub fn edges_within<'a>(edges: impl IntoIterator<Item = &'a Edge>, window: &LatticeBox) -> Vec<Edge> {
    edges
        .into_iter()
        .filter(|e| {
            let (a, b) = e.endpoints();
            window.contains(&a) && window.contains(&b)
        })
        .copied()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossingResult {
    pub axis: usize,
    pub crosses: bool,
    pub spanning_ids: BTreeSet<u32>,
}

/// Components touching both faces `{x_axis = lower}` and `{x_axis = upper}`.
pub fn crossing(labeling: &ComponentLabeling, window: &LatticeBox, axis: usize) -> CrossingResult {
    let lo = window.lower().get(axis);
    let hi = window.upper().get(axis);
    let mut low = BTreeSet::new();
    let mut high = BTreeSet::new();
    for (p, &l) in &labeling.label_of {
        if !window.contains(p) {
            continue;
        }
        if p.get(axis) == lo {
            low.insert(l);
        }
        if p.get(axis) == hi {
            high.insert(l);
        }
    }
    let spanning_ids: BTreeSet<u32> = low.intersection(&high).copied().collect();
    CrossingResult { axis, crosses: !spanning_ids.is_empty(), spanning_ids }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterStats {
    pub largest_fraction: f64,
    pub count: usize,
    /// Component vertex count -> number of components.
    pub size_histogram: BTreeMap<u64, u64>,
}

pub fn cluster_stats(labeling: &ComponentLabeling, window: &LatticeBox) -> ClusterStats {
    let mut size_histogram = BTreeMap::new();
    for &c in &labeling.vertex_counts {
        *size_histogram.entry(c).or_insert(0) += 1;
    }
    let largest = labeling.vertex_counts.iter().copied().max().unwrap_or(0);
    ClusterStats {
        largest_fraction: largest as f64 / window.volume() as f64,
        count: labeling.num_components(),
        size_histogram,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Edges crossed by trajectories are open.
    #[default]
    Bond,
    /// Sites visited by trajectories are open; open neighbors connect.
    Site,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowSummary {
    pub crosses: bool,
    pub spanning_count: usize,
    pub largest_fraction: f64,
    pub component_count: usize,
}

/// Dense union-find over the sites of a window, fed trajectory by
/// trajectory, so samples never need to be stored.
#[derive(Clone, Debug)]
pub struct WindowPercolation {
    window: LatticeBox,
    mode: Mode,
    uf: UnionFind,
    open: Vec<bool>,
    strides: Vec<usize>,
}

impl WindowPercolation {
    pub fn new(window: LatticeBox, mode: Mode) -> Self {
        let n = window.volume() as usize;
        let d = window.dim();
        let mut strides = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * window.side(j + 1) as usize;
        }
        WindowPercolation { window, mode, uf: UnionFind::new(n), open: vec![false; n], strides }
    }

    pub fn window(&self) -> LatticeBox {
        self.window
    }

    pub fn reset(&mut self) {
        self.uf.reset();
        self.open.fill(false);
    }

    pub fn add_trajectory(&mut self, w: &Trajectory) {
        let mut prev: Option<usize> = None;
        for p in w.points() {
            let idx = self.window.index_of(&p);
            if let Some(i) = idx {
                self.open[i] = true;
                if self.mode == Mode::Bond {
                    if let Some(j) = prev {
                        self.uf.union(i as u32, j as u32);
                    }
                }
            }
            prev = idx;
        }
    }

    pub fn is_open(&self, p: &Point) -> bool {
        self.window.index_of(p).is_some_and(|i| self.open[i])
    }

    fn connect_sites(&mut self) {
        let d = self.window.dim();
        for i in 0..self.open.len() {
            if !self.open[i] {
                continue;
            }
            let p = self.window.point_at(i);
            for j in 0..d {
                if p.get(j) < self.window.upper().get(j) && self.open[i + self.strides[j]] {
                    self.uf.union(i as u32, (i + self.strides[j]) as u32);
                }
            }
        }
    }

    /// Crossing along `axis` and cluster sizes. In site mode this first
    /// joins adjacent open sites, so call it once per sample.
    pub fn summarize(&mut self, axis: usize) -> WindowSummary {
        if self.mode == Mode::Site {
            self.connect_sites();
        }
        let side = self.window.side(axis) as usize;
        let stride = self.strides[axis];
        let mut low = BTreeSet::new();
        let mut high = BTreeSet::new();
        let mut roots = BTreeSet::new();
        let mut largest = 0u32;
        for i in 0..self.open.len() {
            if !self.open[i] {
                continue;
            }
            let r = self.uf.find(i as u32);
            roots.insert(r);
            largest = largest.max(self.uf.set_size(r));
            let c = (i / stride) % side;
            if c == 0 {
                low.insert(r);
            }
            if c == side - 1 {
                high.insert(r);
            }
        }
        let spanning_count = low.intersection(&high).count();
        WindowSummary {
            crosses: spanning_count > 0,
            spanning_count,
            largest_fraction: largest as f64 / self.open.len() as f64,
            component_count: roots.len(),
        }
    }
}
