//! Direct recomputation of the good-box conditions from the raw walk lists:
//! explicit adjacency lists and breadth-first search, boxes from coordinate
//! comparisons.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use fri_core::goodbox::{GoodBoxGeometry, WalkId};
use fri_core::hitting::{classical_capacity, CapacityBudget};
use fri_core::sampler::FriSample;
use fri_core::Point;

pub struct OracleReport {
    pub witnesses: Vec<(u32, usize, Vec<Point>)>,
    pub uncertain: Vec<(u32, usize, Vec<Point>)>,
    pub cond2_failures: Vec<(u32, usize, Point, Point)>,
    pub offenders: Vec<WalkId>,
    pub good: bool,
}

type Graph = HashMap<Point, BTreeSet<Point>>;

fn in_cube(p: &Point, c: &Point, r: i64) -> bool {
    (0..p.dim()).all(|k| (p.get(k) as i64 - c.get(k) as i64).abs() <= r)
}

fn graph_of(sample: &FriSample, center: &Point, rho: i64) -> Graph {
    let mut g: Graph = HashMap::new();
    for w in &sample.trajectories {
        if !in_cube(&w.start(), center, rho) {
            continue;
        }
        let pts = w.to_points();
        g.entry(pts[0]).or_default();
        for pair in pts.windows(2) {
            g.entry(pair[0]).or_default().insert(pair[1]);
            g.entry(pair[1]).or_default().insert(pair[0]);
        }
    }
    g
}

fn bfs(g: &Graph, from: &[Point], allowed: impl Fn(&Point) -> bool) -> HashSet<Point> {
    let mut seen: HashSet<Point> = from.iter().copied().collect();
    let mut queue: VecDeque<Point> = from.iter().copied().collect();
    while let Some(p) = queue.pop_front() {
        if let Some(nbrs) = g.get(&p) {
            for q in nbrs {
                if allowed(q) && seen.insert(*q) {
                    queue.push_back(*q);
                }
            }
        }
    }
    seen
}

pub fn recompute(g: &GoodBoxGeometry, s1: &FriSample, s2: &FriSample) -> OracleReport {
    let c = g.center;
    let d = g.d;
    let rho = g.rho as i64;
    let d1 = graph_of(s1, &c, rho);
    let d2 = graph_of(s2, &c, rho);
    let n = g.s_hat / g.spacing;
    let anchor = |i: u32, j: usize| {
        let mut a = c;
        a.set(j, c.get(j) - g.s_hat as i32 / 2 + (g.spacing * i) as i32);
        a
    };

    let mut witnesses = Vec::new();
    let mut uncertain = Vec::new();
    let mut clusters: HashMap<(u32, usize), Vec<(Point, Vec<Point>)>> = HashMap::new();
    for j in 0..d {
        for i in 0..=n {
            let a = anchor(i, j);
            let mut xs: Vec<Point> = d1.keys().filter(|p| in_cube(p, &a, g.r as i64)).copied().collect();
            xs.sort();
            let mut yes = Vec::new();
            let mut unsure = Vec::new();
            let mut cl = Vec::new();
            for x in xs {
                let comp = bfs(&d1, &[x], |q| in_cube(q, &a, g.r_hat as i64));
                let mut comp: Vec<Point> = comp.into_iter().collect();
                comp.sort();
                let cap = classical_capacity::<f64>(&comp, CapacityBudget::Exact).expect("capacity");
                if cap.value - cap.error_bound >= g.cap_threshold {
                    yes.push(x);
                    cl.push((x, comp));
                } else if cap.value + cap.error_bound >= g.cap_threshold {
                    unsure.push(x);
                }
            }
            witnesses.push((i, j, yes));
            uncertain.push((i, j, unsure));
            clusters.insert((i, j), cl);
        }
    }

    let mut cond2_failures = Vec::new();
    for j in 0..d {
        for i in 0..n {
            let mut reach_of: HashMap<Vec<Point>, HashSet<Point>> = HashMap::new();
            for (x, cx) in &clusters[&(i, j)] {
                // component of C(x) in the graph C(x) ∪ D_2
                let reach = reach_of.entry(cx.clone()).or_insert_with(|| {
                    let set: HashSet<Point> = cx.iter().copied().collect();
                    let mut seen = set.clone();
                    let mut queue: VecDeque<Point> = cx.iter().copied().collect();
                    while let Some(p) = queue.pop_front() {
                        let own = d1.get(&p).into_iter().flatten().filter(|q| set.contains(q) && set.contains(&p));
                        let other = d2.get(&p).into_iter().flatten();
                        for q in own.chain(other) {
                            if seen.insert(*q) {
                                queue.push_back(*q);
                            }
                        }
                    }
                    seen
                });
                for (y, cy) in &clusters[&(i + 1, j)] {
                    if !cy.iter().any(|p| reach.contains(p)) {
                        cond2_failures.push((i, j, *x, *y));
                    }
                }
            }
        }
    }

    let s_hat = g.s_hat as i64;
    let a_in = g.slab_inner as i64;
    let rel = |p: &Point, k: usize| p.get(k) as i64 - c.get(k) as i64;
    let mut offenders = Vec::new();
    for (tag, s) in [(1u8, s1), (2u8, s2)] {
        for (index, w) in s.trajectories.iter().enumerate() {
            let x = w.start();
            let bad = (0..d).any(|j| {
                let others_rho = (0..d).all(|k| k == j || rel(&x, k).abs() <= rho);
                let in_big = |p: &Point| (0..d).all(|k| rel(p, k).abs() <= s_hat);
                let plus = others_rho && rel(&x, j) >= a_in && rel(&x, j) <= rho;
                let minus = others_rho && rel(&x, j) <= -a_in && rel(&x, j) >= -rho;
                (plus && w.points().any(|p| in_big(&p) && rel(&p, j) < 0)) || (minus && w.points().any(|p| in_big(&p) && rel(&p, j) > 0))
            });
            if bad {
                offenders.push(WalkId { sample: tag, index });
            }
        }
    }

    let cond1 = witnesses.iter().all(|(_, _, e)| !e.is_empty());
    let good = cond1 && cond2_failures.is_empty() && offenders.is_empty();
    OracleReport { witnesses, uncertain, cond2_failures, offenders, good }
}
