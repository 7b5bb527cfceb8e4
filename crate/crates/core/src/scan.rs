//! Crossing-probability sweeps over `T` (or `u`) in a cubic window, and a
//! bisection search for the level where the crossing probability is 1/2.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeBox, Point};
use crate::parallel;
use crate::percolation::{Mode, WindowPercolation, WindowSummary};
use crate::sampler::{FriParams, SamplerError, WindowSampler, DEFAULT_WALK_BUDGET};
use crate::stats;

pub const CSV_HEADER: &str = "T,crossing_prob,ci_half_width,largest_fraction_mean,spanning_count_mean,trials,seed_lo,seed_hi";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("sampling failed at {variable} = {value}: {source}")]
    Sampler { variable: &'static str, value: f64, source: SamplerError },
    #[error("crossing probability does not bracket {target}: {low:?} / {high:?}")]
    NotBracketing { target: f64, low: Box<ScanRow>, high: Box<ScanRow> },
}

impl ScanError {
    pub fn is_resource(&self) -> bool {
        matches!(self, ScanError::Sampler { source: SamplerError::Resource { .. }, .. })
    }
}

/// Which parameter the grid sweeps; the other one is held fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanVariable {
    #[default]
    T,
    #[serde(rename = "u")]
    U,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub d: usize,
    /// Intensity; ignored for the swept variable.
    pub u: f64,
    /// Mean walk length; ignored for the swept variable.
    pub t: f64,
    /// Window side `L` (sites per axis).
    pub side: u32,
    pub grid: Vec<f64>,
    pub variable: ScanVariable,
    pub trials: u64,
    pub eps: f64,
    pub master: u64,
    pub mode: Mode,
    pub axis: usize,
    pub walk_budget: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            d: 3,
            u: 1.0,
            t: 1.0,
            side: 32,
            grid: vec![0.001, 50.0],
            variable: ScanVariable::T,
            trials: 100,
            eps: 1e-3,
            master: 0,
            mode: Mode::Bond,
            axis: 0,
            walk_budget: DEFAULT_WALK_BUDGET,
        }
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), ScanError> {
        let bad = |key, reason: &str| Err(ScanError::InvalidConfig { key, reason: reason.into() });
        if !(1..=crate::lattice::MAX_DIM).contains(&self.d) {
            return bad("d", "dimension out of range");
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1");
        }
        if self.grid.is_empty() {
            return bad("grid", "must be nonempty");
        }
        if self.side < 4 {
            return bad("side", "window side must be at least 4");
        }
        if self.axis >= self.d {
            return bad("axis", "must be below d");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps", "must lie in (0, 1)");
        }
        let (fixed_key, fixed) = match self.variable {
            ScanVariable::T => ("u", self.u),
            ScanVariable::U => ("t", self.t),
        };
        if !(fixed.is_finite() && fixed >= 0.0) || (self.variable == ScanVariable::T && fixed == 0.0) {
            return bad(fixed_key, "must be positive and finite");
        }
        if self.grid.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return bad("grid", "values must be positive and finite");
        }
        Ok(())
    }

    pub fn window(&self) -> LatticeBox {
        let lo = Point::origin(self.d);
        let hi = Point::new(&vec![self.side as i32 - 1; self.d]).expect("dimension checked");
        LatticeBox::new(lo, hi).expect("side >= 1")
    }

    fn variable_name(&self) -> &'static str {
        match self.variable {
            ScanVariable::T => "T",
            ScanVariable::U => "u",
        }
    }

    pub fn params_at(&self, value: f64) -> Result<FriParams<f64>, ScanError> {
        let (u, t) = match self.variable {
            ScanVariable::T => (self.u, value),
            ScanVariable::U => (value, self.t),
        };
        FriParams::new(u, t, self.d).map_err(|source| ScanError::Sampler { variable: self.variable_name(), value, source })
    }

    pub fn csv_header(&self) -> String {
        match self.variable {
            ScanVariable::T => CSV_HEADER.to_string(),
            ScanVariable::U => CSV_HEADER.replacen('T', "u", 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    /// Value of the swept variable.
    #[serde(rename = "T")]
    pub value: f64,
    pub crossing_prob: f64,
    pub ci_half_width: f64,
    pub largest_fraction_mean: f64,
    pub spanning_count_mean: f64,
    pub trials: u64,
    pub seed_lo: u64,
    pub seed_hi: u64,
}

impl ScanRow {
    pub fn from_outcomes(value: f64, outcomes: &[WindowSummary], seed_lo: u64) -> Self {
        let n = outcomes.len() as u64;
        let crossings = outcomes.iter().filter(|o| o.crosses).count() as u64;
        let mean = |f: &dyn Fn(&WindowSummary) -> f64| outcomes.iter().map(f).sum::<f64>() / n as f64;
        ScanRow {
            value,
            crossing_prob: crossings as f64 / n as f64,
            ci_half_width: stats::wilson_half_width(crossings, n),
            largest_fraction_mean: mean(&|o| o.largest_fraction),
            spanning_count_mean: mean(&|o| o.spanning_count as f64),
            trials: n,
            seed_lo,
            seed_hi: seed_lo + n - 1,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.value,
            self.crossing_prob,
            self.ci_half_width,
            self.largest_fraction_mean,
            self.spanning_count_mean,
            self.trials,
            self.seed_lo,
            self.seed_hi
        )
    }
}

/// Per-trial window summaries for grid value `value`, using trial ids
/// `row * trials .. (row + 1) * trials`.
pub fn trial_outcomes(config: &ScanConfig, value: f64, row: u64, workers: usize) -> Result<Vec<WindowSummary>, ScanError> {
    config.validate()?;
    let params = config.params_at(value)?;
    let window = config.window();
    let sampler = WindowSampler::new(&params, window, config.eps, config.walk_budget)
        .map_err(|source| ScanError::Sampler { variable: config.variable_name(), value, source })?;
    let first = row * config.trials;
    let ids: Vec<u64> = (first..first + config.trials).collect();
    Ok(parallel::map_ordered_init(
        workers,
        &ids,
        || WindowPercolation::new(window, config.mode),
        |perc, &trial| {
            perc.reset();
            sampler.run(config.master, trial, &mut |w| perc.add_trajectory(w));
            perc.summarize(config.axis)
        },
    ))
}

fn scan_row(config: &ScanConfig, value: f64, row: u64, workers: usize) -> Result<ScanRow, ScanError> {
    let outcomes = trial_outcomes(config, value, row, workers)?;
    Ok(ScanRow::from_outcomes(value, &outcomes, row * config.trials))
}

/// One row per grid value, in grid order.
pub fn phase_scan(config: &ScanConfig, workers: usize) -> Result<Vec<ScanRow>, ScanError> {
    config.validate()?;
    config.grid.iter().enumerate().map(|(i, &v)| scan_row(config, v, i as u64, workers)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudoCritical {
    pub target: f64,
    /// Midpoint of the final bracket.
    pub value: f64,
    pub bracket: (f64, f64),
    pub converged: bool,
    /// Every evaluated row, boundary rows first.
    pub probes: Vec<ScanRow>,
}

/// Bisection for the crossing level `target` between the smallest and
/// largest grid values. `probe(value, index)` must return the row for
/// `value`; index 0 and 1 are the bracket ends. Midpoints are geometric,
/// and at most `max_probes` interior rows are evaluated.
pub fn bisect_crossing(
    lo: f64,
    hi: f64,
    target: f64,
    tol: f64,
    max_probes: usize,
    mut probe: impl FnMut(f64, u64) -> Result<ScanRow, ScanError>,
) -> Result<PseudoCritical, ScanError> {
    let low = probe(lo, 0)?;
    let high = probe(hi, 1)?;
    if !(low.crossing_prob < target && high.crossing_prob >= target) {
        return Err(ScanError::NotBracketing { target, low: Box::new(low), high: Box::new(high) });
    }
    let (mut a, mut b) = (lo, hi);
    let mut probes = vec![low, high];
    let mut index = 2;
    while b - a > tol && probes.len() - 2 < max_probes {
        let mid = if a > 0.0 { (a * b).sqrt() } else { 0.5 * (a + b) };
        let row = probe(mid, index)?;
        index += 1;
        if row.crossing_prob < target {
            a = mid;
        } else {
            b = mid;
        }
        probes.push(row);
    }
    Ok(PseudoCritical { target, value: 0.5 * (a + b), bracket: (a, b), converged: b - a <= tol, probes })
}

/// [`bisect_crossing`] on window samples; probe `i` uses row index
/// `grid.len() + i` so its trials never overlap a scan row's.
pub fn estimate_pseudocritical(config: &ScanConfig, target: f64, tol: f64, max_probes: usize, workers: usize) -> Result<PseudoCritical, ScanError> {
    config.validate()?;
    if !(target > 0.0 && target < 1.0) {
        return Err(ScanError::InvalidConfig { key: "target", reason: "must lie in (0, 1)".into() });
    }
    let lo = config.grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = config.grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo >= hi {
        return Err(ScanError::InvalidConfig { key: "grid", reason: "needs two distinct values to bracket".into() });
    }
    let offset = config.grid.len() as u64;
    bisect_crossing(lo, hi, target, tol, max_probes, |v, i| scan_row(config, v, offset + i, workers))
}

pub fn write_csv(header: &str, rows: &[ScanRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn write_jsonl<T: Serialize>(rows: &[T], mut out: impl Write) -> io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}
