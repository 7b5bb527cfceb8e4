//! Geometry of the integer lattice: points, boxes, nearest-neighbor
//! structure and canonical bonds.
//!
//! Direction codes follow one convention everywhere in the crate: code `2j`
//! is the step `+e_j` and code `2j + 1` is the step `-e_j`, for axes
//! `j = 0..d`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 6;

/// Coordinates of any geometry used in an experiment must stay below this
/// bound, leaving a factor of two before `i32` wraparound.
pub const COORD_LIMIT: i64 = (i32::MAX / 2) as i64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension {0} outside supported range 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("points {0} and {1} are not nearest neighbors")]
    NotAdjacent(Point, Point),
    #[error("box corners {0} and {1} are not ordered coordinatewise")]
    EmptyBox(Point, Point),
    #[error("coordinate {0} exceeds the headroom limit {COORD_LIMIT}")]
    Headroom(i64),
}

/// A site of `Z^d`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[i32]) -> Result<Self, LatticeError> {
        let d = coords.len();
        if d == 0 || d > MAX_DIM {
            return Err(LatticeError::BadDimension(d));
        }
        let mut c = [0; MAX_DIM];
        c[..d].copy_from_slice(coords);
        Ok(Point { dim: d as u8, coords: c })
    }

    /// Builds a point from wide coordinates, rejecting values outside the
    /// headroom limit.
    pub fn checked(coords: &[i64]) -> Result<Self, LatticeError> {
        let narrowed = coords
            .iter()
            .map(|&c| {
                if c.abs() > COORD_LIMIT {
                    Err(LatticeError::Headroom(c))
                } else {
                    Ok(c as i32)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Point::new(&narrowed)
    }

    pub fn origin(d: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&d), "dimension {d} unsupported");
        Point { dim: d as u8, coords: [0; MAX_DIM] }
    }

    /// The unit vector `e_axis`.
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut p = Point::origin(d);
        p.coords[axis] = 1;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn get(&self, axis: usize) -> i32 {
        self.coords[axis]
    }

    #[inline]
    pub fn set(&mut self, axis: usize, value: i32) {
        debug_assert!(axis < self.dim());
        self.coords[axis] = value;
    }

    /// The neighbor reached by direction code `code`.
    #[inline]
    pub fn step(&self, code: u8) -> Point {
        let mut p = *self;
        let axis = (code >> 1) as usize;
        debug_assert!(axis < self.dim());
        if code & 1 == 0 {
            p.coords[axis] += 1;
        } else {
            p.coords[axis] -= 1;
        }
        p
    }

    /// The `2d` nearest neighbors in direction-code order.
    pub fn neighbors(&self) -> impl Iterator<Item = Point> + '_ {
        (0..2 * self.dim).map(move |code| self.step(code))
    }

    pub fn l1_dist(&self, other: &Point) -> u64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs())
            .sum()
    }

    pub fn linf_dist(&self, other: &Point) -> u64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Direction code of the step from `self` to an adjacent `other`.
    pub fn direction_to(&self, other: &Point) -> Option<u8> {
        if self.dim != other.dim || self.l1_dist(other) != 1 {
            return None;
        }
        let axis = (0..self.dim()).find(|&j| self.coords[j] != other.coords[j])?;
        let code = 2 * axis as u8;
        Some(if other.coords[axis] > self.coords[axis] { code } else { code + 1 })
    }

    pub fn scaled(&self, factor: i32) -> Point {
        let mut p = *self;
        for c in &mut p.coords[..self.dim()] {
            *c *= factor;
        }
        p
    }

    pub fn max_abs_coord(&self) -> i64 {
        self.coords().iter().map(|&c| (c as i64).abs()).max().unwrap_or(0)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut p = self;
        for j in 0..self.dim() {
            p.coords[j] += rhs.coords[j];
        }
        p
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut p = self;
        for j in 0..self.dim() {
            p.coords[j] -= rhs.coords[j];
        }
        p
    }
}

/// Lexicographic order on coordinates (dimension first).
impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim.cmp(&other.dim).then_with(|| self.coords().cmp(other.coords()))
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for c in self.coords() {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<i32>::deserialize(deserializer)?;
        Point::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Inclusive box `lower..=upper` in every coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    lower: Point,
    upper: Point,
}

impl LatticeBox {
    pub fn new(lower: Point, upper: Point) -> Result<Self, LatticeError> {
        if lower.dim != upper.dim {
            return Err(LatticeError::DimensionMismatch(lower.dim(), upper.dim()));
        }
        if (0..lower.dim()).any(|j| lower.coords[j] > upper.coords[j]) {
            return Err(LatticeError::EmptyBox(lower, upper));
        }
        Ok(LatticeBox { lower, upper })
    }

    /// `B(x, r) = x + [-r, r]^d`.
    pub fn centered(center: Point, radius: u32) -> Self {
        let r = radius as i32;
        let mut lower = center;
        let mut upper = center;
        for j in 0..center.dim() {
            lower.coords[j] -= r;
            upper.coords[j] += r;
        }
        LatticeBox { lower, upper }
    }

    /// `B(r) = [-r, r]^d`.
    pub fn cube(d: usize, radius: u32) -> Self {
        LatticeBox::centered(Point::origin(d), radius)
    }

    /// Smallest box containing all `points`; `None` when empty.
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (mut lower, mut upper) = (first, first);
        for p in it {
            for j in 0..first.dim() {
                lower.coords[j] = lower.coords[j].min(p.coords[j]);
                upper.coords[j] = upper.coords[j].max(p.coords[j]);
            }
        }
        Some(LatticeBox { lower, upper })
    }

    pub fn lower(&self) -> Point {
        self.lower
    }

    pub fn upper(&self) -> Point {
        self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn side(&self, axis: usize) -> u64 {
        (self.upper.coords[axis] as i64 - self.lower.coords[axis] as i64 + 1) as u64
    }

    pub fn volume(&self) -> u64 {
        (0..self.dim()).map(|j| self.side(j)).product()
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|j| self.lower.coords[j] <= p.coords[j] && p.coords[j] <= self.upper.coords[j])
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    pub fn intersects(&self, other: &LatticeBox) -> bool {
        (0..self.dim())
            .all(|j| self.lower.coords[j] <= other.upper.coords[j] && other.lower.coords[j] <= self.upper.coords[j])
    }

    /// Whether `p` lies in the box and has a neighbor outside it.
    #[inline]
    pub fn on_boundary(&self, p: &Point) -> bool {
        self.contains(p)
            && (0..self.dim()).any(|j| p.coords[j] == self.lower.coords[j] || p.coords[j] == self.upper.coords[j])
    }

    /// Minimal number of nearest-neighbor steps from `p` into the box.
    #[inline]
    pub fn l1_distance(&self, p: &Point) -> u64 {
        (0..self.dim())
            .map(|j| {
                let c = p.coords[j] as i64;
                let lo = self.lower.coords[j] as i64;
                let hi = self.upper.coords[j] as i64;
                if c < lo {
                    (lo - c) as u64
                } else if c > hi {
                    (c - hi) as u64
                } else {
                    0
                }
            })
            .sum()
    }

    pub fn expanded(&self, margin: u32) -> LatticeBox {
        let m = margin as i32;
        let mut b = *self;
        for j in 0..self.dim() {
            b.lower.coords[j] -= m;
            b.upper.coords[j] += m;
        }
        b
    }

    pub fn translated(&self, shift: Point) -> LatticeBox {
        LatticeBox { lower: self.lower + shift, upper: self.upper + shift }
    }

    pub fn center(&self) -> Point {
        let mut c = self.lower;
        for j in 0..self.dim() {
            c.coords[j] = ((self.lower.coords[j] as i64 + self.upper.coords[j] as i64).div_euclid(2)) as i32;
        }
        c
    }

    /// Rejects geometries whose corners (after a margin) leave no factor-two
    /// headroom before `i32` overflow.
    pub fn check_headroom(&self, margin: u64) -> Result<(), LatticeError> {
        let worst = self.lower.max_abs_coord().max(self.upper.max_abs_coord()) + margin as i64;
        if worst > COORD_LIMIT {
            Err(LatticeError::Headroom(worst))
        } else {
            Ok(())
        }
    }

    /// Row-major index (last axis fastest).
    #[inline]
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let mut idx: usize = 0;
        for j in 0..self.dim() {
            idx = idx * self.side(j) as usize + (p.coords[j] - self.lower.coords[j]) as usize;
        }
        Some(idx)
    }

    pub fn point_at(&self, mut index: usize) -> Point {
        let mut p = self.lower;
        for j in (0..self.dim()).rev() {
            let s = self.side(j) as usize;
            p.coords[j] = self.lower.coords[j] + (index % s) as i32;
            index /= s;
        }
        p
    }

    /// All sites in lexicographic order.
    pub fn points(&self) -> BoxPoints {
        BoxPoints { bx: *self, next: Some(self.lower), boundary_only: false }
    }

    /// Internal vertex boundary: sites of the box with a neighbor outside.
    /// Generated lazily, skipping the interior.
    pub fn internal_boundary(&self) -> BoxPoints {
        BoxPoints { bx: *self, next: Some(self.lower), boundary_only: true }
    }

    /// External vertex boundary: sites outside the box with a neighbor inside.
    pub fn external_boundary(&self) -> impl Iterator<Item = Point> {
        let bx = *self;
        (0..2 * bx.dim()).flat_map(move |code| {
            let axis = code / 2;
            let mut lower = bx.lower;
            let mut upper = bx.upper;
            let c = if code % 2 == 0 { bx.upper.coords[axis] + 1 } else { bx.lower.coords[axis] - 1 };
            lower.coords[axis] = c;
            upper.coords[axis] = c;
            LatticeBox { lower, upper }.points()
        })
    }
}

/// Lexicographic iterator over a box, optionally restricted to its
/// internal boundary.
#[derive(Clone, Debug)]
pub struct BoxPoints {
    bx: LatticeBox,
    next: Option<Point>,
    boundary_only: bool,
}

impl BoxPoints {
    fn advance(&self, mut p: Point) -> Option<Point> {
        let d = self.bx.dim();
        let mut j = d;
        loop {
            if j == 0 {
                return None;
            }
            j -= 1;
            if p.coords[j] < self.bx.upper.coords[j] {
                p.coords[j] += 1;
                break;
            }
            p.coords[j] = self.bx.lower.coords[j];
        }
        if self.boundary_only && !self.bx.on_boundary(&p) {
            // only the last coordinate can still reach a face
            p.coords[d - 1] = self.bx.upper.coords[d - 1];
        }
        Some(p)
    }
}

impl Iterator for BoxPoints {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let current = self.next?;
        self.next = self.advance(current);
        Some(current)
    }
}

/// Sparse set of open bonds, ordered for reproducible output.
pub type EdgeSet = std::collections::BTreeSet<Edge>;

/// Nearest-neighbor bond `{base, base + e_axis}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub base: Point,
    pub axis: u8,
}

impl Edge {
    pub fn endpoints(&self) -> (Point, Point) {
        (self.base, self.base.step(2 * self.axis))
    }

    /// The edge traversed by stepping from `from` with direction `code`.
    #[inline]
    pub fn from_step(from: Point, code: u8) -> Edge {
        let axis = code >> 1;
        if code & 1 == 0 {
            Edge { base: from, axis }
        } else {
            Edge { base: from.step(code), axis }
        }
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.endpoints();
        write!(f, "{a}-{b}")
    }
}

/// Canonical representation of the bond between adjacent `a` and `b`.
pub fn canonical_edge(a: Point, b: Point) -> Result<Edge, LatticeError> {
    match a.direction_to(&b) {
        Some(code) => Ok(Edge::from_step(a, code)),
        None => Err(LatticeError::NotAdjacent(a, b)),
    }
}
