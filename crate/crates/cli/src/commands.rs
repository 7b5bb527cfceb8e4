//! Subcommand options and implementations. Every option is optional on the
//! command line so a config file can supply it; defaults are applied last.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use fri_core::goodbox::{sample_pair, GeometryOverrides, GoodBoxChecker, GoodBoxGeometry};
use fri_core::hitting::{self, CapacityBudget, MAX_EXACT_POINTS};
use fri_core::lattice::{LatticeBox, Point, MAX_DIM};
use fri_core::parallel;
use fri_core::peierls::{expected_saw_bound, open_path_bound, subcritical_threshold};
use fri_core::percolation::{Mode, WindowPercolation};
use fri_core::sampler::{vacancy_probability, FriParams, RestrictedSampler, WindowSampler, DEFAULT_WALK_BUDGET};
use fri_core::scan::{self, ScanConfig, ScanError, ScanVariable};
use fri_core::{io as fio, Trajectory};

use crate::error::CliError;
use crate::Context;

/// `self` wins field by field over `base`.
macro_rules! layered {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            pub fn over(self, base: Self) -> Self {
                $ty { $($field: self.$field.or(base.$field)),* }
            }
        }
    };
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::config(key, "required: pass the flag or set it in the config file"))
}

fn check(ok: bool, key: &str, reason: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, reason))
    }
}

fn to_section<T: Serialize>(v: &T) -> toml::Value {
    toml::Value::try_from(v).expect("resolved config serializes")
}

fn json_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn check_dim(d: usize, key: &str) -> Result<(), CliError> {
    check((1..=MAX_DIM).contains(&d), key, &format!("must be between 1 and {MAX_DIM}"))
}

fn load_points(path: &PathBuf, d: usize, key: &str) -> Result<Vec<Point>, CliError> {
    let f = File::open(path).map_err(|e| CliError::config(key, format!("{}: {e}", path.display())))?;
    let pts = fio::read_points(BufReader::new(f), d).map_err(|e| CliError::config(key, e.to_string()))?;
    check(!pts.is_empty(), key, "points file is empty")?;
    Ok(pts)
}

fn cube_window(d: usize, side: u32) -> LatticeBox {
    let hi = Point::new(&vec![side as i32 - 1; d]).expect("dimension checked");
    LatticeBox::new(Point::origin(d), hi).expect("side >= 1")
}

// ---------------------------------------------------------------- sample

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleOpts {
    /// Intensity u (> 0) [required]
    #[arg(long)]
    pub u: Option<f64>,
    /// Mean walk length T in steps (> 0) [default: 1]
    #[arg(long)]
    pub t: Option<f64>,
    /// Lattice dimension d [default: 3]
    #[arg(long)]
    pub d: Option<usize>,
    /// Window side L in sites; the window is [0, L-1]^d [default: 16]
    #[arg(long)]
    pub side: Option<u32>,
    /// Probability bound for walks from outside the window that are dropped [default: 1e-6]
    #[arg(long)]
    pub eps: Option<f64>,
    /// `window`: every walk meeting the window; `restricted`: walks hitting the points set, started at their first hit [default: window]
    #[arg(long)]
    pub region: Option<String>,
    /// Points file for `--region restricted`: one point per line, d integers
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Trajectory file format, `binary` or `text` [default: binary]
    #[arg(long)]
    pub format: Option<String>,
    /// Trial index of the sample under the master seed [default: 0]
    #[arg(long)]
    pub trial: Option<u64>,
    /// Largest allowed expected number of simulated walks [default: 5e7]
    #[arg(long)]
    pub walk_budget: Option<f64>,
}
layered!(SampleOpts { u, t, d, side, eps, region, points, format, trial, walk_budget });

#[derive(Clone, Debug, Serialize)]
struct SampleConfig {
    u: f64,
    t: f64,
    d: usize,
    side: u32,
    eps: f64,
    region: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<PathBuf>,
    format: String,
    trial: u64,
    walk_budget: f64,
}

#[derive(Serialize)]
struct SampleSummary {
    region: String,
    walks: usize,
    open_edges: usize,
    visited_sites: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    margin: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_walks: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    percolation: Option<fri_core::percolation::WindowSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vacancy_probability: Option<f64>,
}

pub fn sample(o: SampleOpts, ctx: &mut Context) -> Result<toml::Value, CliError> {
    let c = SampleConfig {
        u: required(o.u, "sample.u")?,
        t: o.t.unwrap_or(1.0),
        d: o.d.unwrap_or(3),
        side: o.side.unwrap_or(16),
        eps: o.eps.unwrap_or(1e-6),
        region: o.region.unwrap_or_else(|| "window".into()),
        points: o.points,
        format: o.format.unwrap_or_else(|| "binary".into()),
        trial: o.trial.unwrap_or(0),
        walk_budget: o.walk_budget.unwrap_or(DEFAULT_WALK_BUDGET),
    };
    check_dim(c.d, "sample.d")?;
    check(c.u > 0.0 && c.u.is_finite(), "sample.u", "must be positive")?;
    check(c.t > 0.0 && c.t.is_finite(), "sample.t", "must be positive")?;
    check(c.side >= 1, "sample.side", "must be at least 1")?;
    check(c.eps > 0.0 && c.eps < 1.0, "sample.eps", "must lie in (0, 1)")?;
    check(c.format == "binary" || c.format == "text", "sample.format", "expected `binary` or `text`")?;
    let params = FriParams::new(c.u, c.t, c.d)?;
    let (walks, summary) = match c.region.as_str() {
        "window" => {
            let window = cube_window(c.d, c.side);
            let sampler = WindowSampler::new(&params, window, c.eps, c.walk_budget)?;
            let s = sampler.sample(ctx.seed, c.trial);
            let mut perc = WindowPercolation::new(window, Mode::Bond);
            s.trajectories.iter().for_each(|w| perc.add_trajectory(w));
            let summary = SampleSummary {
                region: c.region.clone(),
                walks: s.trajectories.len(),
                open_edges: s.open_edges.len(),
                visited_sites: s.visited().len(),
                margin: Some(s.margin.margin),
                tail_bound: Some(s.margin.tail_bound),
                expected_walks: Some(sampler.expected_walks()),
                percolation: Some(perc.summarize(0)),
                vacancy_probability: None,
            };
            (s.trajectories, summary)
        }
        "restricted" => {
            let path = required(c.points.as_ref(), "sample.points")?;
            let k = load_points(path, c.d, "sample.points")?;
            let sampler = RestrictedSampler::new(&params, &k)?;
            let s = sampler.sample(ctx.seed, c.trial)?;
            let summary = SampleSummary {
                region: c.region.clone(),
                walks: s.trajectories.len(),
                open_edges: s.open_edges.len(),
                visited_sites: s.visited().len(),
                margin: None,
                tail_bound: None,
                expected_walks: Some(sampler.mean_count()),
                percolation: None,
                vacancy_probability: Some(vacancy_probability(&params, &k)?),
            };
            (s.trajectories, summary)
        }
        _ => return Err(CliError::config("sample.region", "expected `window` or `restricted`")),
    };
    write_walks(ctx, &c.format, c.d, &walks)?;
    let edges = fri_core::sampler::edges_of(&walks);
    let mut buf = Vec::new();
    fio::write_edges(&edges, &mut buf)?;
    ctx.out.write("edges.txt", buf)?;
    ctx.out.write("summary.json", json_line(&summary))?;
    Ok(to_section(&c))
}

fn write_walks(ctx: &mut Context, format: &str, d: usize, walks: &[Trajectory]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    if format == "binary" {
        fio::write_trajectories_binary(d, walks, &mut buf)?;
        ctx.out.write("trajectories.bin", buf)?;
    } else {
        fio::write_trajectories_text(walks, &mut buf)?;
        ctx.out.write("trajectories.txt", buf)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- capacity

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityOpts {
    /// Points file: one point per line, d integers [required]
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Lattice dimension d [default: 3]
    #[arg(long)]
    pub d: Option<usize>,
    /// Mean walk length T in steps for the killed capacity; omit for the classical capacity only
    #[arg(long)]
    pub t: Option<f64>,
    /// Also compute the classical capacity (d >= 3) [default: true]
    #[arg(long)]
    pub classical: Option<bool>,
    /// `exact` (linear solve) or `mc` (Monte Carlo) [default: exact]
    #[arg(long)]
    pub method: Option<String>,
    /// Exact solver tolerance [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Monte Carlo walks per point [default: 100000]
    #[arg(long)]
    pub mc_walks: Option<u64>,
    /// Monte Carlo bias tolerance for the classical escape cutoff [default: 1e-3]
    #[arg(long)]
    pub bias_tol: Option<f64>,
}
layered!(CapacityOpts { points, d, t, classical, method, tol, mc_walks, bias_tol });

#[derive(Clone, Debug, Serialize)]
struct CapacityConfig {
    points: PathBuf,
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    classical: bool,
    method: String,
    tol: f64,
    mc_walks: u64,
    bias_tol: f64,
}

#[derive(Serialize)]
struct CapacityEntry {
    value: f64,
    error_bound: f64,
    method: String,
    /// Equilibrium measure as `(point, weight)`; exact method only.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    equilibrium: Vec<(Vec<i32>, f64)>,
}

#[derive(Serialize)]
struct CapacityReport {
    points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    killed: Option<CapacityEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical: Option<CapacityEntry>,
}

pub fn capacity(o: CapacityOpts, ctx: &mut Context) -> Result<toml::Value, CliError> {
    let c = CapacityConfig {
        points: required(o.points, "capacity.points")?,
        d: o.d.unwrap_or(3),
        t: o.t,
        classical: o.classical.unwrap_or(true),
        method: o.method.unwrap_or_else(|| "exact".into()),
        tol: o.tol.unwrap_or(1e-10),
        mc_walks: o.mc_walks.unwrap_or(100_000),
        bias_tol: o.bias_tol.unwrap_or(1e-3),
    };
    check_dim(c.d, "capacity.d")?;
    check(c.method == "exact" || c.method == "mc", "capacity.method", "expected `exact` or `mc`")?;
    check(c.tol > 0.0 && c.tol < 1.0, "capacity.tol", "must lie in (0, 1)")?;
    check(c.mc_walks > 0, "capacity.mc_walks", "must be positive")?;
    check(c.bias_tol > 0.0 && c.bias_tol < 1.0, "capacity.bias_tol", "must lie in (0, 1)")?;
    check(c.t.is_some() || c.classical, "capacity.t", "nothing to compute: give T or enable classical")?;
    let k = load_points(&c.points, c.d, "capacity.points")?;
    check(c.method == "mc" || k.len() <= MAX_EXACT_POINTS, "capacity.method", "too many points for the exact solver; use `mc`")?;
    let exact = c.method == "exact";
    let killed = match c.t {
        Some(t) => {
            check(t >= 0.0 && t.is_finite(), "capacity.t", "must be nonnegative and finite")?;
            Some(if exact {
                let cap = hitting::killed_capacity::<f64>(&k, t, c.tol)?;
                let eq = hitting::killed_equilibrium::<f64>(&k, t, c.tol)?;
                CapacityEntry {
                    value: cap.value,
                    error_bound: cap.error_bound,
                    method: "exact".into(),
                    equilibrium: eq.iter().map(|(p, w)| (p.coords().to_vec(), *w)).collect(),
                }
            } else {
                let est = hitting::montecarlo::killed_capacity_mc(&k, t, c.mc_walks, ctx.seed);
                CapacityEntry { value: est.value, error_bound: est.error_bound, method: "mc".into(), equilibrium: Vec::new() }
            })
        }
        None => None,
    };
    let classical = if c.classical {
        check(c.d >= 3, "capacity.d", "the classical capacity needs d >= 3 (set classical = false)")?;
        let budget = if exact {
            CapacityBudget::Exact
        } else {
            CapacityBudget::MonteCarlo { walks: c.mc_walks, bias_tol: c.bias_tol, seed: ctx.seed }
        };
        let cap = hitting::classical_capacity::<f64>(&k, budget)?;
        Some(CapacityEntry { value: cap.value, error_bound: cap.error_bound, method: c.method.clone(), equilibrium: Vec::new() })
    } else {
        None
    };
    let report = CapacityReport { points: k.len(), killed, classical };
    let text = json_line(&report);
    print!("{text}");
    ctx.out.write("capacity.json", text)?;
    Ok(to_section(&c))
}

// ---------------------------------------------------------------- scan

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOpts {
    /// Intensity u; fixed when scanning T [required when scanning T]
    #[arg(long)]
    pub u: Option<f64>,
    /// Mean walk length T in steps; fixed when scanning u [required when scanning u]
    #[arg(long)]
    pub t: Option<f64>,
    /// Lattice dimension d [default: 3]
    #[arg(long)]
    pub d: Option<usize>,
    /// Window side L in sites (>= 4) [default: 32]
    #[arg(long)]
    pub side: Option<u32>,
    /// Grid of values of the scanned variable, comma separated [default: 0.001,50]
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Log-spaced grid `min:max:points`; replaces --grid
    #[arg(long)]
    pub grid_log: Option<String>,
    /// Scanned variable, `T` or `u` [default: T]
    #[arg(long)]
    pub variable: Option<String>,
    /// Independent windows per grid value [default: 100]
    #[arg(long)]
    pub trials: Option<u64>,
    /// Probability bound for walks from outside the window that are dropped [default: 1e-3]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Percolation of `bond` (traversed edges) or `site` (visited sites) [default: bond]
    #[arg(long)]
    pub mode: Option<String>,
    /// Crossing axis, 0-based coordinate index [default: 0]
    #[arg(long)]
    pub axis: Option<usize>,
    /// Largest allowed expected number of walks per window [default: 5e7]
    #[arg(long)]
    pub walk_budget: Option<f64>,
    /// Also bisect for the crossing level `target` between the grid ends [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pseudocritical: Option<bool>,
    /// Target crossing probability for the bisection [default: 0.5]
    #[arg(long)]
    pub target: Option<f64>,
    /// Bisection stops when the bracket is narrower than this [default: 0.01]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest number of bisection probes [default: 20]
    #[arg(long)]
    pub max_probes: Option<usize>,
}
layered!(ScanOpts {
    u, t, d, side, grid, grid_log, variable, trials, eps, mode, axis, walk_budget, pseudocritical, target, tol, max_probes
});

#[derive(Clone, Debug, Serialize)]
struct ScanSettings {
    u: f64,
    t: f64,
    d: usize,
    side: u32,
    grid: Vec<f64>,
    variable: String,
    trials: u64,
    eps: f64,
    mode: String,
    axis: usize,
    walk_budget: f64,
    pseudocritical: bool,
    target: f64,
    tol: f64,
    max_probes: usize,
}

fn parse_grid_log(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::config("scan.grid_log", "expected `min:max:points` with 0 < min <= max and points >= 1");
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite() && n >= 1) {
        return Err(bad());
    }
    Ok(scan::log_grid(lo, hi, n))
}

#[derive(Serialize)]
struct NotBracketing {
    diagnostic: String,
    target: f64,
    low: scan::ScanRow,
    high: scan::ScanRow,
}

pub fn scan(o: ScanOpts, ctx: &mut Context) -> Result<toml::Value, CliError> {
    let variable = o.variable.unwrap_or_else(|| "T".into());
    let var = match variable.as_str() {
        "T" => ScanVariable::T,
        "u" => ScanVariable::U,
        _ => return Err(CliError::config("scan.variable", "expected `T` or `u`")),
    };
    let grid = match &o.grid_log {
        Some(spec) => parse_grid_log(spec)?,
        None => o.grid.unwrap_or_else(|| vec![0.001, 50.0]),
    };
    let (u, t) = match var {
        ScanVariable::T => (required(o.u, "scan.u")?, o.t.unwrap_or(1.0)),
        ScanVariable::U => (o.u.unwrap_or(1.0), required(o.t, "scan.t")?),
    };
    let s = ScanSettings {
        u,
        t,
        d: o.d.unwrap_or(3),
        side: o.side.unwrap_or(32),
        grid,
        variable,
        trials: o.trials.unwrap_or(100),
        eps: o.eps.unwrap_or(1e-3),
        mode: o.mode.unwrap_or_else(|| "bond".into()),
        axis: o.axis.unwrap_or(0),
        walk_budget: o.walk_budget.unwrap_or(DEFAULT_WALK_BUDGET),
        pseudocritical: o.pseudocritical.unwrap_or(false),
        target: o.target.unwrap_or(0.5),
        tol: o.tol.unwrap_or(0.01),
        max_probes: o.max_probes.unwrap_or(20),
    };
    let mode = match s.mode.as_str() {
        "bond" => Mode::Bond,
        "site" => Mode::Site,
        _ => return Err(CliError::config("scan.mode", "expected `bond` or `site`")),
    };
    check(s.tol > 0.0, "scan.tol", "must be positive")?;
    let config = ScanConfig {
        d: s.d,
        u: s.u,
        t: s.t,
        side: s.side,
        grid: s.grid.clone(),
        variable: var,
        trials: s.trials,
        eps: s.eps,
        master: ctx.seed,
        mode,
        axis: s.axis,
        walk_budget: s.walk_budget,
    };
    config.validate()?;
    let rows = scan::phase_scan(&config, ctx.workers)?;
    let mut csv = Vec::new();
    scan::write_csv(&config.csv_header(), &rows, &mut csv)?;
    ctx.out.write("scan.csv", &csv)?;
    let mut jl = Vec::new();
    scan::write_jsonl(&rows, &mut jl)?;
    ctx.out.write("scan.jsonl", jl)?;
    print!("{}", String::from_utf8_lossy(&csv));
    if s.pseudocritical {
        match scan::estimate_pseudocritical(&config, s.target, s.tol, s.max_probes, ctx.workers) {
            Ok(pc) => {
                eprintln!("pseudo-critical value {} in [{}, {}]", pc.value, pc.bracket.0, pc.bracket.1);
                ctx.out.write("pseudocritical.json", json_line(&pc))?;
            }
            Err(ScanError::NotBracketing { target, low, high }) => {
                let diag = NotBracketing {
                    diagnostic: format!("crossing probability does not bracket {target} between the grid ends"),
                    target,
                    low: *low,
                    high: *high,
                };
                eprintln!("diagnostic: {}", diag.diagnostic);
                ctx.out.write("pseudocritical.json", json_line(&diag))?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(to_section(&s))
}

// ---------------------------------------------------------------- goodbox

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodboxOpts {
    /// Total intensity u; each of the two samples has u/2 [required]
    #[arg(long)]
    pub u: Option<f64>,
    /// Mean walk length T in steps [default: R^3]
    #[arg(long)]
    pub t: Option<f64>,
    /// Lattice dimension d (>= 3) [default: 3]
    #[arg(long)]
    pub d: Option<usize>,
    /// Scale R [default: 1]
    #[arg(long)]
    pub scale: Option<u32>,
    /// Start from the scaled-down test geometry instead of the full one [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub toy: Option<bool>,
    /// Half-width of the big box in sites [default: 64R^2]
    #[arg(long)]
    pub s_hat: Option<u32>,
    /// Distance between sub-box anchors in sites [default: 8R]
    #[arg(long)]
    pub spacing: Option<u32>,
    /// Sub-box half-width in sites [default: R]
    #[arg(long)]
    pub r: Option<u32>,
    /// Enlarged sub-box half-width in sites [default: 2R]
    #[arg(long)]
    pub r_hat: Option<u32>,
    /// Radius of the walk-source ball in sites [default: 128R^2]
    #[arg(long)]
    pub rho: Option<u32>,
    /// Inner face of the slabs in sites [default: 96R^2]
    #[arg(long)]
    pub slab_inner: Option<u32>,
    /// Capacity threshold for clusters [default: R^(2(d-2)/3)]
    #[arg(long)]
    pub cap_threshold: Option<f64>,
    /// Independent sample pairs [default: 10]
    #[arg(long)]
    pub trials: Option<u64>,
    /// Cluster capacities by `exact` solve or `mc` [default: exact]
    #[arg(long)]
    pub cap_method: Option<String>,
    /// Monte Carlo walks per point for `--cap-method mc` [default: 20000]
    #[arg(long)]
    pub mc_walks: Option<u64>,
    /// Largest allowed expected number of walks per trial [default: 5e7]
    #[arg(long)]
    pub walk_budget: Option<f64>,
}
layered!(GoodboxOpts {
    u, t, d, scale, toy, s_hat, spacing, r, r_hat, rho, slab_inner, cap_threshold, trials, cap_method, mc_walks, walk_budget
});

#[derive(Clone, Debug, Serialize)]
struct GoodboxConfig {
    u: f64,
    t: f64,
    d: usize,
    scale: u32,
    toy: bool,
    s_hat: u32,
    spacing: u32,
    r: u32,
    r_hat: u32,
    rho: u32,
    slab_inner: u32,
    cap_threshold: f64,
    trials: u64,
    cap_method: String,
    mc_walks: u64,
    walk_budget: f64,
}

#[derive(Serialize)]
struct Frequency {
    count: u64,
    fraction: f64,
}

#[derive(Serialize)]
struct GoodboxSummary {
    geometry: GoodBoxGeometry,
    trials: u64,
    good: Frequency,
    cond1: Frequency,
    cond2: Frequency,
    cond3: Frequency,
}

pub fn goodbox(o: GoodboxOpts, ctx: &mut Context) -> Result<toml::Value, CliError> {
    let d = o.d.unwrap_or(3);
    let scale = o.scale.unwrap_or(1);
    let toy = o.toy.unwrap_or(false);
    check(d >= 3 && d <= MAX_DIM, "goodbox.d", &format!("must be between 3 and {MAX_DIM}"))?;
    check(scale >= 1, "goodbox.scale", "must be at least 1")?;
    let base = if toy { GeometryOverrides::toy() } else { GeometryOverrides::default() };
    let overrides = GeometryOverrides {
        s_hat: o.s_hat.or(base.s_hat),
        spacing: o.spacing.or(base.spacing),
        r: o.r.or(base.r),
        r_hat: o.r_hat.or(base.r_hat),
        rho: o.rho.or(base.rho),
        slab_inner: o.slab_inner.or(base.slab_inner),
        cap_threshold: o.cap_threshold.or(base.cap_threshold),
    };
    let g = GoodBoxGeometry::build(scale, d, &overrides)?;
    let c = GoodboxConfig {
        u: required(o.u, "goodbox.u")?,
        t: o.t.unwrap_or((scale as f64).powi(3)),
        d,
        scale,
        toy,
        s_hat: g.s_hat,
        spacing: g.spacing,
        r: g.r,
        r_hat: g.r_hat,
        rho: g.rho,
        slab_inner: g.slab_inner,
        cap_threshold: g.cap_threshold,
        trials: o.trials.unwrap_or(10),
        cap_method: o.cap_method.unwrap_or_else(|| "exact".into()),
        mc_walks: o.mc_walks.unwrap_or(20_000),
        walk_budget: o.walk_budget.unwrap_or(DEFAULT_WALK_BUDGET),
    };
    check(c.trials >= 1, "goodbox.trials", "must be at least 1")?;
    check(c.mc_walks > 0, "goodbox.mc_walks", "must be positive")?;
    let params = FriParams::new(c.u, c.t, d)?;
    let budget = match c.cap_method.as_str() {
        "exact" => CapacityBudget::Exact,
        "mc" => CapacityBudget::MonteCarlo { walks: c.mc_walks, bias_tol: 1e-3, seed: ctx.seed },
        _ => return Err(CliError::config("goodbox.cap_method", "expected `exact` or `mc`")),
    };
    let expected = g.source_ball().volume() as f64 * params.site_rate();
    if expected > c.walk_budget {
        return Err(CliError::Resource(format!("each trial needs about {expected:.3e} walks, budget is {:.3e}", c.walk_budget)));
    }
    let ids: Vec<u64> = (0..c.trials).collect();
    let seed = ctx.seed;
    let reports = parallel::map_ordered(ctx.workers, &ids, |&trial| {
        let (s1, s2) = sample_pair(&params, &g, 0, seed, trial, f64::INFINITY)?;
        GoodBoxChecker::new(budget).check(&g, &s1, &s2)
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut jl = Vec::new();
    scan::write_jsonl(&reports, &mut jl)?;
    ctx.out.write("reports.jsonl", jl)?;
    let freq = |f: &dyn Fn(&fri_core::goodbox::GoodBoxReport) -> bool| {
        let count = reports.iter().filter(|r| f(r)).count() as u64;
        Frequency { count, fraction: count as f64 / c.trials as f64 }
    };
    let summary = GoodboxSummary {
        geometry: g,
        trials: c.trials,
        good: freq(&|r| r.good),
        cond1: freq(&|r| r.cond1),
        cond2: freq(&|r| r.cond2),
        cond3: freq(&|r| r.cond3),
    };
    let text = json_line(&summary);
    print!("{text}");
    ctx.out.write("summary.json", text)?;
    Ok(to_section(&c))
}

// ---------------------------------------------------------------- peierls

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeierlsOpts {
    /// Intensity u (> 0) [required]
    #[arg(long)]
    pub u: Option<f64>,
    /// Lattice dimension d (>= 2) [default: 3]
    #[arg(long)]
    pub d: Option<usize>,
    /// Path lengths for the bound table, comma separated [default: 1,2,3,4,5,10]
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
}
layered!(PeierlsOpts { u, d, n });

#[derive(Clone, Debug, Serialize)]
struct PeierlsConfig {
    u: f64,
    d: usize,
    n: Vec<u32>,
}

#[derive(Serialize)]
struct BoundRow {
    n: u32,
    open_path_bound: f64,
    expected_saw_bound: f64,
}

#[derive(Serialize)]
struct PeierlsReport {
    threshold: fri_core::PeierlsThreshold64,
    bounds: Vec<BoundRow>,
}

pub fn peierls(o: PeierlsOpts, ctx: &mut Context) -> Result<toml::Value, CliError> {
    let c = PeierlsConfig {
        u: required(o.u, "peierls.u")?,
        d: o.d.unwrap_or(3),
        n: o.n.unwrap_or_else(|| vec![1, 2, 3, 4, 5, 10]),
    };
    check(c.u > 0.0 && c.u.is_finite(), "peierls.u", "must be positive")?;
    check((2..=MAX_DIM).contains(&c.d), "peierls.d", &format!("must be between 2 and {MAX_DIM}"))?;
    check(c.n.iter().all(|&n| n >= 1), "peierls.n", "path lengths must be at least 1")?;
    let threshold = subcritical_threshold::<f64>(c.u, c.d)?;
    let bounds = c
        .n
        .iter()
        .map(|&n| BoundRow { n, open_path_bound: open_path_bound(n, c.d), expected_saw_bound: expected_saw_bound(n, c.d) })
        .collect();
    let text = json_line(&PeierlsReport { threshold, bounds });
    print!("{text}");
    ctx.out.write("peierls.json", text)?;
    Ok(to_section(&c))
}
