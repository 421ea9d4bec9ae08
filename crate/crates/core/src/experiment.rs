//! Experiment orchestration and report files.
//!
//! A run directory holds:
//!
//! - `manifest.json`: config, config hash, versions, certified truncation
//! - `trajectory.csv`: per-instant norms and the half-mass radius
//! - `snapshots.csv`: nonzero state values per instant, `t = 0` included
//! - `checks/<tag>.csv`, `checks/<tag>.json`: one pair per configured check
//! - `report.json`: verdicts and invariants
//! - `plot_data.csv`: wide table keyed by `t`
//!
//! Floats in CSV files are written with 17 significant digits, so every
//! stored value parses back to the same bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CheckSpec, ConfigError, ExperimentConfig};
use crate::estimates::{
    check_entropy_bound, check_lower_bound, check_moment_bound, check_slow_decay, check_sup_bound,
    fit_exponent, lattice_decay_exponent, lattice_propagation_exponent, loglog_fit, slow_decay_exponent,
    BoundCheck, EstimateError, ExponentFit, MIN_WINDOW,
};
use crate::faberkrahn::{check_assumptions, fk_profile_bruteforce, log_grid, AssumptionReport, EigenOptions, FkError, FkProfile};
use crate::graph::{ball, GraphGenerator, VertexId};
use crate::solver::{region_distances, solve_cauchy, SolverConfig, SolverError, Trajectory, TruncationRecord};

/// Version of the run-directory layout.
pub const FORMAT_VERSION: u32 = 1;

/// Largest relative mass drift accepted by the conservation invariant.
pub const MASS_DRIFT_TOL: f64 = 1e-6;

/// Relative slack for the nonincreasing-norm invariant, above the solver
/// tolerance.
pub const NORM_INCREASE_TOL: f64 = 1e-9;

const NORM_EXPONENTS: [f64; 3] = [1.5, 2.0, 4.0];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("estimates: {0}")]
    Estimate(#[from] EstimateError),
    #[error("faber-krahn: {0}")]
    Fk(#[from] FkError),
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("{0}")]
    Input(String),
}

impl ExperimentError {
    /// Process exit code: 2 for usage and input problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Io { .. } | ExperimentError::Input(_) => 2,
            ExperimentError::Solver(_) | ExperimentError::Estimate(_) | ExperimentError::Fk(_) => 3,
        }
    }
}

fn io_err(path: &Path, e: impl ToString) -> ExperimentError {
    ExperimentError::Io {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn read_file(path: &Path) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub graphflow: String,
    pub format: u32,
}

impl Versions {
    fn current() -> Self {
        Versions {
            graphflow: env!("CARGO_PKG_VERSION").to_string(),
            format: FORMAT_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub graph: String,
    pub center: String,
    pub certified_n: u32,
    pub truncation_history: Vec<TruncationRecord>,
    pub max_clamp: f64,
    pub floor_violation: f64,
    pub config: ExperimentConfig,
}

/// JSON verdict of one configured check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub tag: String,
    pub fitted_constant: Option<f64>,
    /// Fitted exponent for fits; log-log slope of the ratio for bounds.
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    pub theoretical: Option<f64>,
    pub upper_decade_variation: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
}

impl CheckVerdict {
    fn failed(tag: &str, e: impl ToString) -> Self {
        CheckVerdict {
            tag: tag.to_string(),
            fitted_constant: None,
            slope: None,
            stderr: None,
            theoretical: None,
            upper_decade_variation: None,
            pass: false,
            error: Some(e.to_string()),
        }
    }

    fn from_fit(tag: &str, f: &ExponentFit) -> Self {
        CheckVerdict {
            tag: tag.to_string(),
            fitted_constant: None,
            slope: finite(f.slope),
            stderr: finite(f.stderr),
            theoretical: Some(f.theoretical),
            upper_decade_variation: None,
            pass: f.pass,
            error: None,
        }
    }

    fn from_bound(b: &BoundCheck) -> Self {
        let ts: Vec<f64> = b.series.iter().map(|x| x.t).collect();
        let rs: Vec<f64> = b.series.iter().map(|x| x.ratio).collect();
        let trend = loglog_fit(&ts, &rs).ok();
        CheckVerdict {
            tag: b.tag.clone(),
            fitted_constant: finite(b.fitted_constant),
            slope: trend.and_then(|f| finite(f.slope)),
            stderr: trend.and_then(|f| finite(f.stderr)),
            theoretical: None,
            upper_decade_variation: finite(b.upper_decade_variation),
            pass: b.pass,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    /// `max_t |M(t) - M(0)| / M(0)`.
    pub mass_drift: f64,
    /// Largest relative increase of the sup norm or an `l^q` norm between
    /// consecutive instants (0 when all are nonincreasing).
    pub worst_norm_increase: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub certified_n: u32,
    pub invariants: Invariants,
    pub checks: Vec<CheckVerdict>,
    pub fits: Vec<ExponentFit>,
    pub pass: bool,
}

impl ExperimentReport {
    /// Exit code of a completed run: 0 when everything passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn check(&self, tag: &str) -> Option<&CheckVerdict> {
        self.checks.iter().find(|c| c.tag == tag)
    }
}

/// Everything a run computes, before it is written out.
pub struct RunArtifacts {
    pub graph: GraphGenerator,
    pub trajectory: Trajectory,
    pub report: ExperimentReport,
    pub bounds: Vec<BoundCheck>,
    /// CSV blocks of the exponent fits, keyed by tag.
    pub fit_series: BTreeMap<String, String>,
}

/// Output root: the explicit directory, else `GRAPHFLOW_OUT`, else the
/// config's `output_dir`, else `graphflow-out`.
pub fn output_root(explicit: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("GRAPHFLOW_OUT") {
        return PathBuf::from(p);
    }
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("graphflow-out"))
}

fn center(cfg: &ExperimentConfig, g: &GraphGenerator) -> Result<VertexId, ConfigError> {
    Ok(cfg.solver_config(g)?.center.unwrap_or_else(|| g.origin()))
}

fn mass_radius_eps(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut eps = vec![0.5];
    for c in &cfg.checks {
        if let CheckSpec::PropagationFit { eps: e, .. } = c {
            if !eps.contains(e) {
                eps.push(*e);
            }
        }
    }
    eps
}

/// Solve the Cauchy problem, re-solving at the next radius of the schedule
/// while some mass radius needed by the report falls outside the ball.
fn solve_with_retry(
    g: &GraphGenerator,
    u0: &crate::field::Field,
    scfg: &SolverConfig,
    x0: &VertexId,
    eps: &[f64],
) -> Result<Trajectory, SolverError> {
    let mut scfg = scfg.clone();
    loop {
        let traj = solve_cauchy(g, u0, &scfg)?;
        let dist = region_distances(g, traj.region(), x0)?;
        let mut deficit = None;
        'scan: for t in traj.times() {
            for &e in eps {
                match traj.mass_radius_with(&dist, t, e) {
                    Ok(_) => {}
                    Err(err @ SolverError::TruncationDeficit { .. }) => {
                        deficit = Some(err);
                        break 'scan;
                    }
                    Err(err) => return Err(err),
                }
            }
        }
        let Some(err) = deficit else {
            return Ok(traj);
        };
        match scfg.schedule().into_iter().find(|&n| n > traj.n()) {
            Some(next) => {
                warn!("{err}; re-solving from n = {next}");
                scfg.n0 = next;
            }
            None => return Err(err),
        }
    }
}

/// Solve and evaluate an experiment without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    let g = cfg.graph()?;
    let u0 = cfg.initial_field(&g)?;
    let scfg = cfg.solver_config(&g)?;
    let x0 = center(cfg, &g)?;
    let profile = cfg.profile(&g)?;
    info!("{}: solving on {}", cfg.name, g.name());
    let traj = solve_with_retry(&g, &u0, &scfg, &x0, &mass_radius_eps(cfg))?;
    info!("{}: certified at n = {}", cfg.name, traj.n());
    evaluate(cfg, g, traj, &profile)
}

fn evaluate(
    cfg: &ExperimentConfig,
    g: GraphGenerator,
    traj: Trajectory,
    profile: &FkProfile,
) -> Result<RunArtifacts, ExperimentError> {
    let x0 = center(cfg, &g)?;
    let invariants = invariants(&traj)?;
    let mut checks = Vec::new();
    let mut fits = Vec::new();
    let mut bounds = Vec::new();
    let mut fit_series = BTreeMap::new();
    for spec in &cfg.checks {
        let tag = spec.tag();
        match run_check(cfg, &g, &traj, profile, &x0, spec) {
            Ok(CheckOutput::Fit(f, csv)) => {
                checks.push(CheckVerdict::from_fit(tag, &f));
                fits.push(f);
                fit_series.insert(tag.to_string(), csv);
            }
            Ok(CheckOutput::Bound(b)) => {
                checks.push(CheckVerdict::from_bound(&b));
                bounds.push(b);
            }
            Ok(CheckOutput::Both(b, f)) => {
                let mut v = CheckVerdict::from_bound(&b);
                v.slope = finite(f.slope);
                v.stderr = finite(f.stderr);
                v.theoretical = Some(f.theoretical);
                v.pass = b.pass && f.pass;
                checks.push(v);
                fits.push(f);
                bounds.push(b);
            }
            Err(e) => {
                warn!("{}: check {tag} failed: {e}", cfg.name);
                checks.push(CheckVerdict::failed(tag, e));
            }
        }
    }
    let pass = invariants.pass && checks.iter().all(|c| c.pass);
    let report = ExperimentReport {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        certified_n: traj.n(),
        invariants,
        checks,
        fits,
        pass,
    };
    Ok(RunArtifacts {
        graph: g,
        trajectory: traj,
        report,
        bounds,
        fit_series,
    })
}

enum CheckOutput {
    Fit(ExponentFit, String),
    Bound(BoundCheck),
    Both(BoundCheck, ExponentFit),
}

fn lattice_dim(g: &GraphGenerator) -> Result<usize, EstimateError> {
    match g {
        GraphGenerator::Lattice { .. } => Ok(g.dimension().expect("lattices have a dimension")),
        _ => Err(EstimateError::Precondition("exponent fits need a lattice graph".into())),
    }
}

fn series_csv(ts: &[f64], ys: &[f64]) -> String {
    let mut s = String::from("t,value\n");
    for (t, y) in ts.iter().zip(ys) {
        let _ = writeln!(s, "{t:.16e},{y:.16e}");
    }
    s
}

fn run_check(
    cfg: &ExperimentConfig,
    g: &GraphGenerator,
    traj: &Trajectory,
    profile: &FkProfile,
    x0: &VertexId,
    spec: &CheckSpec,
) -> Result<CheckOutput, EstimateError> {
    if !traj.certified() {
        return Err(EstimateError::Uncertified);
    }
    let window = spec.window();
    Ok(match spec {
        CheckSpec::DecayFit { tolerance, .. } => {
            let dim = lattice_dim(g)?;
            let ts = window.select_at_least(&traj.times(), MIN_WINDOW)?;
            let ys = ts.iter().map(|&t| traj.sup_norm(t)).collect::<Result<Vec<_>, _>>()?;
            let f = fit_exponent("sup_norm", &ts, &ys, window, lattice_decay_exponent(dim, cfg.p), *tolerance)?;
            CheckOutput::Fit(f, series_csv(&ts, &ys))
        }
        CheckSpec::PropagationFit { tolerance, eps, .. } => {
            let dim = lattice_dim(g)?;
            let dist = region_distances(g, traj.region(), x0)?;
            let ts = window.select_at_least(&traj.times(), MIN_WINDOW)?;
            let ys = ts
                .iter()
                .map(|&t| traj.mass_radius_with(&dist, t, *eps).map(|r| r as f64))
                .collect::<Result<Vec<_>, _>>()?;
            let f = fit_exponent(
                "mass_radius",
                &ts,
                &ys,
                window,
                lattice_propagation_exponent(dim, cfg.p),
                *tolerance,
            )?;
            CheckOutput::Fit(f, series_csv(&ts, &ys))
        }
        CheckSpec::SupBound { .. } => CheckOutput::Bound(check_sup_bound(traj, profile, window)?),
        CheckSpec::LowerBound { .. } => CheckOutput::Bound(check_lower_bound(g, traj, profile, x0, window)?),
        CheckSpec::MomentBound { alpha, .. } => {
            CheckOutput::Bound(check_moment_bound(g, traj, *alpha, x0, profile, window)?)
        }
        CheckSpec::EntropyBound { .. } => CheckOutput::Bound(check_entropy_bound(traj, profile, window)?),
        CheckSpec::SlowDecay { tolerance, .. } => {
            let (data, q) = cfg
                .power_law()
                .ok_or_else(|| EstimateError::Precondition("slow_decay needs power_law data".into()))?;
            let out = check_slow_decay(traj, &data, q, profile, window, *tolerance)?;
            CheckOutput::Both(out.bound, out.fit)
        }
    })
}

fn invariants(traj: &Trajectory) -> Result<Invariants, SolverError> {
    let m0 = traj.mass(0.0)?;
    let mut drift: f64 = 0.0;
    let mut worst: f64 = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    for t in std::iter::once(0.0).chain(traj.times()) {
        drift = drift.max((traj.mass(t)? - m0).abs() / m0);
        let mut norms = vec![traj.sup_norm(t)?];
        for q in NORM_EXPONENTS {
            norms.push(traj.lq_norm(t, q)?);
        }
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&norms) {
                if *a > 0.0 {
                    worst = worst.max((b - a) / a);
                }
            }
        }
        prev = Some(norms);
    }
    Ok(Invariants {
        mass_drift: drift,
        worst_norm_increase: worst,
        pass: drift <= MASS_DRIFT_TOL && worst <= NORM_INCREASE_TOL,
    })
}

/// `trajectory.csv`: one row per instant, `t = 0` first.
pub fn trajectory_csv(g: &GraphGenerator, traj: &Trajectory, x0: &VertexId) -> Result<String, SolverError> {
    let dist = region_distances(g, traj.region(), x0)?;
    let mut s = String::from("t,mass,sup,l1.5,l2,l4,mass_radius_half,n\n");
    for t in std::iter::once(0.0).chain(traj.times()) {
        let _ = write!(s, "{t:.16e},{:.16e},{:.16e}", traj.mass(t)?, traj.sup_norm(t)?);
        for q in NORM_EXPONENTS {
            let _ = write!(s, ",{:.16e}", traj.lq_norm(t, q)?);
        }
        let _ = writeln!(s, ",{},{}", traj.mass_radius_with(&dist, t, 0.5)?, traj.n());
    }
    Ok(s)
}

/// `snapshots.csv`: nonzero values per instant with their ball index.
pub fn snapshots_csv(g: &GraphGenerator, traj: &Trajectory) -> String {
    let mut s = String::from("t,index,vertex,value\n");
    let labels: Vec<String> = traj.region().vertices().iter().map(|x| g.label(x)).collect();
    let mut emit = |t: f64, values: &[f64]| {
        for (i, v) in values.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(s, "{t:.16e},{i},{},{v:.16e}", labels[i]);
            }
        }
    };
    emit(0.0, traj.initial());
    for snap in traj.snapshots() {
        emit(snap.t, &snap.values);
    }
    s
}

fn plot_csv(traj: &Trajectory, traj_csv: &str, bounds: &[BoundCheck]) -> String {
    let mut header = String::from("t,mass,sup,mass_radius_half");
    for b in bounds {
        let _ = write!(header, ",{0}_lhs,{0}_rhs,{0}_ratio", b.tag);
    }
    let mut s = header + "\n";
    let by_t: Vec<BTreeMap<u64, [f64; 3]>> = bounds
        .iter()
        .map(|b| b.series.iter().map(|x| (x.t.to_bits(), [x.lhs, x.rhs, x.ratio])).collect())
        .collect();
    let times = traj.times();
    for (row, t) in traj_csv.lines().skip(2).zip(&times) {
        let cols: Vec<&str> = row.split(',').collect();
        let _ = write!(s, "{},{},{},{}", cols[0], cols[1], cols[2], cols[6]);
        for m in &by_t {
            match m.get(&t.to_bits()) {
                Some(v) => {
                    let _ = write!(s, ",{:.16e},{:.16e},{:.16e}", v[0], v[1], v[2]);
                }
                None => s.push_str(",,,"),
            }
        }
        s.push('\n');
    }
    s
}

fn write_checks_and_report(dir: &Path, art: &RunArtifacts, traj_csv: &str) -> Result<(), ExperimentError> {
    let checks = dir.join("checks");
    for b in &art.bounds {
        write_file(&checks.join(format!("{}.csv", b.tag)), &b.to_csv())?;
    }
    for (tag, csv) in &art.fit_series {
        write_file(&checks.join(format!("{tag}.csv")), csv)?;
    }
    for v in &art.report.checks {
        write_file(&checks.join(format!("{}.json", v.tag)), &to_json(v))?;
    }
    write_file(&dir.join("report.json"), &to_json(&art.report))?;
    write_file(
        &dir.join("plot_data.csv"),
        &plot_csv(&art.trajectory, traj_csv, &art.bounds),
    )
}

/// Run an experiment and write its directory under `out_root`.
pub fn run(cfg: &ExperimentConfig, out_root: &Path) -> Result<ExperimentReport, ExperimentError> {
    let art = execute(cfg)?;
    let dir = out_root.join(&cfg.name);
    let g = &art.graph;
    let traj = &art.trajectory;
    let x0 = center(cfg, g)?;
    let manifest = Manifest {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        versions: Versions::current(),
        graph: g.name(),
        center: g.label(&x0),
        certified_n: traj.n(),
        truncation_history: traj.history().to_vec(),
        max_clamp: traj.max_clamp(),
        floor_violation: traj.floor_violation(),
        config: cfg.clone(),
    };
    write_file(&dir.join("manifest.json"), &to_json(&manifest))?;
    let traj_csv = trajectory_csv(g, traj, &x0)?;
    write_file(&dir.join("trajectory.csv"), &traj_csv)?;
    write_file(&dir.join("snapshots.csv"), &snapshots_csv(g, traj))?;
    write_checks_and_report(&dir, &art, &traj_csv)?;
    Ok(art.report)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, ExperimentError> {
    let path = dir.join("manifest.json");
    serde_json::from_str(&read_file(&path)?).map_err(|e| io_err(&path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, ExperimentError> {
    csv::Reader::from_path(path).map_err(|e| io_err(path, e))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, ExperimentError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| io_err(path, format!("missing column `{name}`")))
}

fn parse_f64(s: &str, path: &Path) -> Result<f64, ExperimentError> {
    s.trim().parse().map_err(|_| io_err(path, format!("bad number `{s}`")))
}

/// Rebuild the trajectory stored in a run directory.
pub fn load_trajectory(dir: &Path, manifest: &Manifest) -> Result<(GraphGenerator, Trajectory), ExperimentError> {
    let cfg = &manifest.config;
    let g = cfg.graph()?;
    let x0 = g
        .parse_label(&manifest.center)
        .map_err(|e| ExperimentError::Input(e.to_string()))?;
    let region = ball(&g, &x0, manifest.certified_n).map_err(SolverError::from)?;
    let path = dir.join("snapshots.csv");
    let mut rdr = csv_reader(&path)?;
    let headers = rdr.headers().map_err(|e| io_err(&path, e))?.clone();
    let (ct, ci, cv) = (
        column(&headers, "t", &path)?,
        column(&headers, "index", &path)?,
        column(&headers, "value", &path)?,
    );
    let mut states: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| io_err(&path, e))?;
        let t = parse_f64(&rec[ct], &path)?;
        let i: usize = rec[ci].parse().map_err(|_| io_err(&path, "bad index"))?;
        if i >= region.len() {
            return Err(io_err(&path, format!("index {i} outside the ball")));
        }
        states.entry(t.to_bits()).or_insert_with(|| vec![0.0; region.len()])[i] = parse_f64(&rec[cv], &path)?;
    }
    let u0 = states
        .remove(&0f64.to_bits())
        .ok_or_else(|| io_err(&path, "no rows at t = 0"))?;
    // Instants with an all-zero state leave no rows; take the instants
    // from the config.
    let states: Vec<(f64, Vec<f64>)> = cfg
        .times()
        .into_iter()
        .map(|t| {
            let v = states.remove(&t.to_bits()).unwrap_or_else(|| vec![0.0; region.len()]);
            (t, v)
        })
        .collect();
    if !states.is_empty() && states.len() != cfg.times().len() {
        return Err(io_err(&path, "instants do not match the config"));
    }
    let history = (!manifest.truncation_history.is_empty()).then(|| manifest.truncation_history.clone());
    let traj = Trajectory::restore(region, cfg.p, u0, states, manifest.certified_n, history)?;
    Ok((g, traj))
}

/// Re-run the checks on a stored run directory, optionally with the checks
/// of another config, and rewrite its check files and report.
pub fn verify(dir: &Path, checks: Option<Vec<CheckSpec>>) -> Result<ExperimentReport, ExperimentError> {
    let manifest = load_manifest(dir)?;
    let (g, traj) = load_trajectory(dir, &manifest)?;
    let mut cfg = manifest.config.clone();
    if let Some(c) = checks {
        cfg.checks = c;
        cfg.validate()?;
    }
    let profile = cfg.profile(&g)?;
    let x0 = center(&cfg, &g)?;
    let traj_csv = trajectory_csv(&g, &traj, &x0)?;
    let art = evaluate(&cfg, g, traj, &profile)?;
    write_checks_and_report(dir, &art, &traj_csv)?;
    Ok(art.report)
}

/// Re-fit the exponents of a run directory from `trajectory.csv`.
pub fn refit(dir: &Path) -> Result<Vec<ExponentFit>, ExperimentError> {
    let manifest = load_manifest(dir)?;
    let cfg = &manifest.config;
    let path = dir.join("trajectory.csv");
    let mut rdr = csv_reader(&path)?;
    let headers = rdr.headers().map_err(|e| io_err(&path, e))?.clone();
    let (ct, cs, cr) = (
        column(&headers, "t", &path)?,
        column(&headers, "sup", &path)?,
        column(&headers, "mass_radius_half", &path)?,
    );
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| io_err(&path, e))?;
        rows.push((
            parse_f64(&rec[ct], &path)?,
            parse_f64(&rec[cs], &path)?,
            parse_f64(&rec[cr], &path)?,
        ));
    }
    let times: Vec<f64> = rows.iter().map(|r| r.0).filter(|&t| t > 0.0).collect();
    let lookup = |t: f64, col: fn(&(f64, f64, f64)) -> f64| {
        rows.iter().find(|r| r.0 == t).map(col).expect("window instants come from the rows")
    };
    let g = cfg.graph()?;
    let mut fits = Vec::new();
    for spec in &cfg.checks {
        let window = spec.window();
        let (quantity, theoretical, tol, col): (&str, f64, f64, fn(&(f64, f64, f64)) -> f64) = match spec {
            CheckSpec::DecayFit { tolerance, .. } => (
                "sup_norm",
                lattice_decay_exponent(lattice_dim(&g)?, cfg.p),
                *tolerance,
                |r| r.1,
            ),
            CheckSpec::PropagationFit { tolerance, eps, .. } => {
                if *eps != 0.5 {
                    return Err(ExperimentError::Input(format!(
                        "trajectory.csv stores the mass radius at eps = 0.5 only, not {eps}"
                    )));
                }
                (
                    "mass_radius",
                    lattice_propagation_exponent(lattice_dim(&g)?, cfg.p),
                    *tolerance,
                    |r| r.2,
                )
            }
            CheckSpec::SlowDecay { tolerance, .. } => {
                let (data, _) = cfg.power_law().expect("validated slow-decay config");
                ("sup_norm", slow_decay_exponent(data.alpha, cfg.p), *tolerance, |r| r.1)
            }
            _ => continue,
        };
        let ts = window.select_at_least(&times, MIN_WINDOW)?;
        let ys: Vec<f64> = ts.iter().map(|&t| lookup(t, col)).collect();
        fits.push(fit_exponent(quantity, &ts, &ys, window, theoretical, tol)?);
    }
    write_file(&dir.join("fit.json"), &to_json(&fits))?;
    Ok(fits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkReport {
    pub name: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub p: f64,
    pub base: String,
    pub size_cap: usize,
    pub subsets: usize,
    /// `(measure, eigenvalue)` envelope.
    pub table: Vec<(f64, f64)>,
    pub assumptions: AssumptionReport,
    pub pass: bool,
}

/// Brute-force Faber-Krahn workflow: subset table, envelope profile and
/// structural checks, written under `<out_root>/<name>/fk`.
pub fn run_fk(cfg: &ExperimentConfig, out_root: &Path) -> Result<FkReport, ExperimentError> {
    let fk = cfg
        .fk
        .as_ref()
        .ok_or_else(|| ExperimentError::Input("config has no `fk` section".into()))?;
    let g = cfg.graph()?;
    let base = cfg.fk_base(&g)?;
    let opts = EigenOptions {
        tol: fk.tol,
        random_starts: fk.random_starts,
        seed: cfg.seed.expect("validated: fk requires a seed"),
        ..EigenOptions::default()
    };
    let table = fk_profile_bruteforce(&g, &base, fk.size_cap, cfg.p, &opts)?;
    let v_min = table.envelope.first().map_or(1.0, |e| e.0);
    let v_max = table.envelope.last().map_or(1.0, |e| e.0);
    let assumptions = check_assumptions(&table.profile, &log_grid(v_min, v_max * 10.0, 120))?;
    let dir = out_root.join(&cfg.name).join("fk");
    let mut subsets = String::from("size,measure,lambda,vertices\n");
    for s in &table.subsets {
        let labels: Vec<String> = s.vertices.iter().map(|x| g.label(x)).collect();
        let _ = writeln!(
            subsets,
            "{},{:.16e},{:.16e},{}",
            s.vertices.len(),
            s.measure,
            s.lambda,
            labels.join(" ")
        );
    }
    write_file(&dir.join("subsets.csv"), &subsets)?;
    let mut tab = String::from("measure,lambda_min,lambda_envelope\n");
    for ((v, raw), (_, env)) in table.raw.iter().zip(&table.envelope) {
        let _ = writeln!(tab, "{v:.16e},{raw:.16e},{env:.16e}");
    }
    write_file(&dir.join("table.csv"), &tab)?;
    if let Some(csv) = table.profile.to_csv() {
        write_file(&dir.join("profile.csv"), &csv)?;
    }
    let report = FkReport {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        p: cfg.p,
        base: g.label(&base),
        size_cap: fk.size_cap,
        subsets: table.subsets.len(),
        table: table.envelope.clone(),
        pass: assumptions.all_pass(),
        assumptions,
    };
    write_file(&dir.join("report.json"), &to_json(&report))?;
    Ok(report)
}
