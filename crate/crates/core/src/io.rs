//! File formats.
//!
//! * trajectories, binary: magic `FRIW`, version `u16`, `d` as `u16`,
//!   walk count `u64`, then per walk its length `u32`, `d` start coordinates
//!   `i32`, and one step code byte per step; all little endian.
//! * trajectories, text: one walk per line, start coordinates then `:` then
//!   the step codes as digits.
//! * edges: one edge per line, base coordinates then the axis.
//! * points: one point per line, `d` integers separated by spaces; blank
//!   lines and `#` comments are skipped.

use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

use crate::lattice::{Edge, LatticeError, Point, MAX_DIM};
use crate::walk::{Trajectory, WalkError};

pub const TRAJECTORY_MAGIC: [u8; 4] = *b"FRIW";
pub const TRAJECTORY_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("bad header: {0}")]
    Header(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

pub fn write_trajectories_binary(d: usize, walks: &[Trajectory], mut out: impl Write) -> io::Result<()> {
    out.write_all(&TRAJECTORY_MAGIC)?;
    out.write_all(&TRAJECTORY_VERSION.to_le_bytes())?;
    out.write_all(&(d as u16).to_le_bytes())?;
    out.write_all(&(walks.len() as u64).to_le_bytes())?;
    for w in walks {
        out.write_all(&(w.len() as u32).to_le_bytes())?;
        for &c in w.start().coords() {
            out.write_all(&c.to_le_bytes())?;
        }
        out.write_all(w.steps())?;
    }
    Ok(())
}

fn read_array<const N: usize>(input: &mut impl Read) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    input.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_trajectories_binary(mut input: impl Read) -> Result<(usize, Vec<Trajectory>), FormatError> {
    if read_array::<4>(&mut input)? != TRAJECTORY_MAGIC {
        return Err(FormatError::Header("magic".into()));
    }
    let version = u16::from_le_bytes(read_array(&mut input)?);
    if version != TRAJECTORY_VERSION {
        return Err(FormatError::Header(format!("unsupported version {version}")));
    }
    let d = u16::from_le_bytes(read_array(&mut input)?) as usize;
    if d == 0 || d > MAX_DIM {
        return Err(FormatError::Header(format!("dimension {d}")));
    }
    let count = u64::from_le_bytes(read_array(&mut input)?);
    let mut walks = Vec::new();
    let mut coords = vec![0i32; d];
    for _ in 0..count {
        let len = u32::from_le_bytes(read_array(&mut input)?) as usize;
        for c in coords.iter_mut() {
            *c = i32::from_le_bytes(read_array(&mut input)?);
        }
        let mut steps = vec![0u8; len];
        input.read_exact(&mut steps)?;
        walks.push(Trajectory::from_steps(Point::new(&coords)?, steps)?);
    }
    Ok((d, walks))
}

pub fn write_trajectories_text(walks: &[Trajectory], mut out: impl Write) -> io::Result<()> {
    for w in walks {
        let start: Vec<String> = w.start().coords().iter().map(i32::to_string).collect();
        let steps: String = w.steps().iter().map(|&c| char::from(b'0' + c)).collect();
        writeln!(out, "{} : {}", start.join(" "), steps)?;
    }
    Ok(())
}

pub fn read_trajectories_text(input: impl BufRead) -> Result<Vec<Trajectory>, FormatError> {
    let mut walks = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: &str| FormatError::Parse { line: i + 1, reason: reason.into() };
        let (start, steps) = line.split_once(':').ok_or_else(|| err("missing `:`"))?;
        let coords = parse_ints(start).map_err(|r| err(&r))?;
        let steps: Vec<u8> = steps
            .trim()
            .bytes()
            .map(|b| if b.is_ascii_digit() { Ok(b - b'0') } else { Err(err("step codes must be digits")) })
            .collect::<Result<_, _>>()?;
        walks.push(Trajectory::from_steps(Point::new(&coords)?, steps)?);
    }
    Ok(walks)
}

pub fn write_edges<'a>(edges: impl IntoIterator<Item = &'a Edge>, mut out: impl Write) -> io::Result<()> {
    for e in edges {
        let base: Vec<String> = e.base.coords().iter().map(i32::to_string).collect();
        writeln!(out, "{} {}", base.join(" "), e.axis)?;
    }
    Ok(())
}

pub fn read_edges(input: impl BufRead) -> Result<Vec<Edge>, FormatError> {
    let mut edges = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |reason: String| FormatError::Parse { line: i + 1, reason };
        let mut v = parse_ints(&line).map_err(err)?;
        let axis = v.pop().ok_or_else(|| err("empty".into()))?;
        if axis < 0 || axis as usize >= v.len() {
            return Err(err(format!("axis {axis} out of range")));
        }
        edges.push(Edge { base: Point::new(&v)?, axis: axis as u8 });
    }
    Ok(edges)
}

fn parse_ints(s: &str) -> Result<Vec<i32>, String> {
    s.split_whitespace().map(|t| t.parse::<i32>().map_err(|e| format!("`{t}`: {e}"))).collect()
}

/// Reads a points file; every point must have dimension `d`.
pub fn read_points(input: impl BufRead, d: usize) -> Result<Vec<Point>, FormatError> {
    let mut points = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |reason: String| FormatError::Parse { line: i + 1, reason };
        let coords = parse_ints(body).map_err(err)?;
        if coords.len() != d {
            return Err(err(format!("expected {d} coordinates, found {}", coords.len())));
        }
        points.push(Point::new(&coords)?);
    }
    Ok(points)
}

pub fn write_points<'a>(points: impl IntoIterator<Item = &'a Point>, mut out: impl Write) -> io::Result<()> {
    for p in points {
        let c: Vec<String> = p.coords().iter().map(i32::to_string).collect();
        writeln!(out, "{}", c.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn walk_strategy(d: usize) -> impl Strategy<Value = Trajectory> {
        (prop::collection::vec(-1000i32..1000, d), prop::collection::vec(0u8..(2 * d as u8), 0..40))
            .prop_map(|(c, s)| Trajectory::from_steps(Point::new(&c).unwrap(), s).unwrap())
    }

    proptest! {
        #[test]
        fn binary_round_trip(walks in prop::collection::vec(walk_strategy(3), 0..20)) {
            let mut buf = Vec::new();
            write_trajectories_binary(3, &walks, &mut buf).unwrap();
            let (d, back) = read_trajectories_binary(&buf[..]).unwrap();
            prop_assert_eq!(d, 3);
            prop_assert_eq!(back, walks);
        }

        #[test]
        fn text_round_trip(walks in prop::collection::vec(walk_strategy(4), 0..20)) {
            let mut buf = Vec::new();
            write_trajectories_text(&walks, &mut buf).unwrap();
            prop_assert_eq!(read_trajectories_text(&buf[..]).unwrap(), walks);
        }

        #[test]
        fn edge_round_trip(walk in walk_strategy(3)) {
            let edges: Vec<Edge> = walk.edges().collect();
            let mut buf = Vec::new();
            write_edges(&edges, &mut buf).unwrap();
            prop_assert_eq!(read_edges(&buf[..]).unwrap(), edges);
        }

        #[test]
        fn points_round_trip(walk in walk_strategy(2)) {
            let pts = walk.to_points();
            let mut buf = Vec::new();
            write_points(&pts, &mut buf).unwrap();
            prop_assert_eq!(read_points(&buf[..], 2).unwrap(), pts);
        }
    }

    #[test]
    fn points_file_errors_name_line() {
        let text = "0 0 0\n# comment\n1 2\n";
        match read_points(text.as_bytes(), 3) {
            Err(FormatError::Parse { line, .. }) => assert_eq!(line, 3),
            r => panic!("{r:?}"),
        }
        assert!(read_points("1 x 2\n".as_bytes(), 3).is_err());
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(read_trajectories_binary(&b"XXXX\x01\x00"[..]), Err(FormatError::Header(_))));
    }
}
