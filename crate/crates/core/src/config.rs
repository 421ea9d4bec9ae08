//! JSON experiment configuration.
//!
//! Unknown keys are rejected and every error carries the JSON path of the
//! offending key. The published schema lives in `schemas/`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::estimates::{PowerLawData, Window};
use crate::faberkrahn::{log_grid, EigenOptions, FkProfile};
use crate::field::Field;
use crate::graph::{FiniteGraph, GraphGenerator, VertexId};
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("{path}: cannot read: {msg}")]
    Io { path: String, msg: String },
}

impl ConfigError {
    fn at(path: &str, msg: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.to_string(),
            msg: msg.into(),
        }
    }

    /// JSON path of the offending key.
    pub fn path(&self) -> &str {
        match self {
            ConfigError::Invalid { path, .. } | ConfigError::Io { path, .. } => path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub graph: GraphSpec,
    pub p: f64,
    pub initial_data: InitialData,
    pub solver: SolverSpec,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fk: Option<FkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Lattice {
        #[serde(rename = "N")]
        dim: usize,
    },
    Product {
        #[serde(rename = "H")]
        factor: Vec<(String, String, f64)>,
        #[serde(rename = "N")]
        dim: usize,
    },
    Custom { adjacency_file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Delta {
        #[serde(default = "one")]
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<String>,
    },
    BallIndicator {
        radius: u32,
        #[serde(default = "one")]
        value: f64,
    },
    PowerLaw {
        alpha: f64,
        q: f64,
        truncation: u32,
        #[serde(default = "one")]
        center_value: f64,
    },
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    List(Vec<f64>),
    Log(LogTimes),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogTimes {
    /// Piecewise log-spaced segments `[t_min, t_max, count]`, joined at
    /// shared endpoints.
    pub log: Vec<(f64, f64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub times: TimeSpec,
    #[serde(default = "d_n0")]
    pub n0: u32,
    #[serde(default = "d_growth")]
    pub growth: f64,
    #[serde(default = "d_nmax")]
    pub n_max: u32,
    #[serde(default = "d_atol")]
    pub atol: f64,
    #[serde(default = "d_rtol")]
    pub rtol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_boundary: Option<f64>,
    #[serde(default = "d_eps")]
    pub eps_trunc: f64,
    #[serde(default = "d_steps")]
    pub max_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<String>,
}

fn d_n0() -> u32 {
    8
}
fn d_growth() -> f64 {
    2.0
}
fn d_nmax() -> u32 {
    4096
}
fn d_atol() -> f64 {
    1e-12
}
fn d_rtol() -> f64 {
    1e-9
}
fn d_eps() -> f64 {
    1e-9
}
fn d_steps() -> usize {
    5_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Lattice {
        #[serde(default = "one")]
        c0: f64,
    },
    Tabulated {
        file: PathBuf,
        #[serde(rename = "N")]
        dim: f64,
        omega_exp: f64,
    },
    Bruteforce {
        size_cap: usize,
    },
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::Lattice { c0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    DecayFit {
        window: (f64, f64),
        tolerance: f64,
    },
    PropagationFit {
        window: (f64, f64),
        tolerance: f64,
        #[serde(default = "half")]
        eps: f64,
    },
    SupBound {
        window: (f64, f64),
    },
    LowerBound {
        window: (f64, f64),
    },
    MomentBound {
        window: (f64, f64),
        #[serde(default = "half")]
        alpha: f64,
    },
    EntropyBound {
        window: (f64, f64),
    },
    SlowDecay {
        window: (f64, f64),
        tolerance: f64,
    },
}

fn half() -> f64 {
    0.5
}

impl CheckSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            CheckSpec::DecayFit { .. } => "decay_fit",
            CheckSpec::PropagationFit { .. } => "propagation_fit",
            CheckSpec::SupBound { .. } => "sup_bound",
            CheckSpec::LowerBound { .. } => "lower_bound",
            CheckSpec::MomentBound { .. } => "moment_bound",
            CheckSpec::EntropyBound { .. } => "entropy_bound",
            CheckSpec::SlowDecay { .. } => "slow_decay",
        }
    }

    pub fn window(&self) -> Window {
        let (a, b) = match self {
            CheckSpec::DecayFit { window, .. }
            | CheckSpec::PropagationFit { window, .. }
            | CheckSpec::SupBound { window }
            | CheckSpec::LowerBound { window }
            | CheckSpec::MomentBound { window, .. }
            | CheckSpec::EntropyBound { window }
            | CheckSpec::SlowDecay { window, .. } => *window,
        };
        Window::new(a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkSpec {
    pub size_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default = "d_eig_tol")]
    pub tol: f64,
    #[serde(default = "d_starts")]
    pub random_starts: usize,
}

fn d_eig_tol() -> f64 {
    1e-12
}
fn d_starts() -> usize {
    8
}

fn deserialize(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::at(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
    })
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg = deserialize(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    load_config_with_seed(path, None)
}

/// Load a config file, replacing its seed before validation. Relative
/// paths inside the file resolve against its directory.
pub fn load_config_with_seed(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut cfg = deserialize(&text)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    cfg.validate()?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Semantic checks beyond the shape of the document.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(ConfigError::at("name", "must be a nonempty file-name-safe string"));
        }
        if !(self.p > 2.0 && self.p.is_finite()) {
            return Err(ConfigError::at("p", format!("p must exceed 2, got {}", self.p)));
        }
        match &self.graph {
            GraphSpec::Lattice { dim } | GraphSpec::Product { dim, .. } if *dim == 0 => {
                return Err(ConfigError::at("graph.N", "must be at least 1"));
            }
            _ => {}
        }
        match &self.initial_data {
            InitialData::Delta { value, .. } | InitialData::BallIndicator { value, .. } => {
                positive("initial_data.value", *value)?
            }
            InitialData::PowerLaw { alpha, q, center_value, .. } => {
                positive("initial_data.alpha", *alpha)?;
                positive("initial_data.center_value", *center_value)?;
                if !(*q > 1.0) {
                    return Err(ConfigError::at("initial_data.q", format!("must exceed 1, got {q}")));
                }
                if !matches!(self.graph, GraphSpec::Lattice { .. }) {
                    return Err(ConfigError::at("initial_data", "power-law data needs a lattice graph"));
                }
            }
            InitialData::File { .. } => {}
        }
        self.solver_config_unchecked()
            .validate()
            .map_err(|e| ConfigError::at("solver", e.to_string()))?;
        for (i, c) in self.checks.iter().enumerate() {
            if self.checks[..i].iter().any(|d| d.tag() == c.tag()) {
                return Err(ConfigError::at(&format!("checks[{i}]"), format!("duplicate `{}` check", c.tag())));
            }
            let w = c.window();
            if !(w.t_min > 0.0 && w.t_max > w.t_min) {
                return Err(ConfigError::at(
                    &format!("checks[{i}].window"),
                    "needs 0 < t_min < t_max",
                ));
            }
            match c {
                CheckSpec::DecayFit { tolerance, .. }
                | CheckSpec::PropagationFit { tolerance, .. }
                | CheckSpec::SlowDecay { tolerance, .. } => {
                    positive(&format!("checks[{i}].tolerance"), *tolerance)?
                }
                _ => {}
            }
            if let CheckSpec::MomentBound { alpha, .. } = c {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(ConfigError::at(&format!("checks[{i}].alpha"), "must lie in (0, 1)"));
                }
            }
            if let CheckSpec::PropagationFit { eps, .. } = c {
                if !(*eps > 0.0 && *eps < 1.0) {
                    return Err(ConfigError::at(&format!("checks[{i}].eps"), "must lie in (0, 1)"));
                }
            }
            if matches!(c, CheckSpec::SlowDecay { .. })
                && !matches!(self.initial_data, InitialData::PowerLaw { .. })
            {
                return Err(ConfigError::at(&format!("checks[{i}]"), "slow_decay needs power_law data"));
            }
        }
        if let ProfileSpec::Tabulated { dim, omega_exp, .. } = &self.profile {
            positive("profile.N", *dim)?;
            positive("profile.omega_exp", *omega_exp)?;
        }
        if self.randomized() && self.seed.is_none() {
            return Err(ConfigError::at("seed", "required when a randomized operation is requested"));
        }
        Ok(())
    }

    /// Whether any requested operation draws random numbers.
    pub fn randomized(&self) -> bool {
        self.fk.is_some() || matches!(self.profile, ProfileSpec::Bruteforce { .. })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let GraphSpec::Custom { adjacency_file } = &mut self.graph {
            fix(adjacency_file);
        }
        if let InitialData::File { path } = &mut self.initial_data {
            fix(path);
        }
        if let ProfileSpec::Tabulated { file, .. } = &mut self.profile {
            fix(file);
        }
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn times(&self) -> Vec<f64> {
        match &self.solver.times {
            TimeSpec::List(v) => v.clone(),
            TimeSpec::Log(l) => {
                let mut out: Vec<f64> = Vec::new();
                for &(a, b, n) in &l.log {
                    for t in log_grid(a, b, n) {
                        if out.last().is_none_or(|&last| t > last) {
                            out.push(t);
                        }
                    }
                }
                out
            }
        }
    }

    fn solver_config_unchecked(&self) -> SolverConfig {
        let s = &self.solver;
        let mut c = SolverConfig::new(self.p, self.times());
        c.n0 = s.n0;
        c.growth = s.growth;
        c.n_max = s.n_max;
        c.atol = s.atol;
        c.rtol = s.rtol;
        c.delta_boundary = s.delta_boundary;
        c.eps_trunc = s.eps_trunc;
        c.max_steps = s.max_steps;
        c
    }

    pub fn graph(&self) -> Result<GraphGenerator, ConfigError> {
        let err = |e: crate::graph::GraphError| ConfigError::at("graph", e.to_string());
        match &self.graph {
            GraphSpec::Lattice { dim } => GraphGenerator::lattice(*dim).map_err(err),
            GraphSpec::Product { factor, dim } => {
                let h = FiniteGraph::from_edges(factor).map_err(|e| ConfigError::at("graph.H", e.to_string()))?;
                GraphGenerator::product(h, *dim).map_err(err)
            }
            GraphSpec::Custom { adjacency_file } => FiniteGraph::from_file(adjacency_file)
                .map(GraphGenerator::custom)
                .map_err(|e| ConfigError::at("graph.adjacency_file", e.to_string())),
        }
    }

    pub fn solver_config(&self, g: &GraphGenerator) -> Result<SolverConfig, ConfigError> {
        let mut c = self.solver_config_unchecked();
        if let Some(label) = &self.solver.center {
            c.center = Some(
                g.parse_label(label)
                    .map_err(|e| ConfigError::at("solver.center", e.to_string()))?,
            );
        }
        Ok(c)
    }

    pub fn power_law(&self) -> Option<(PowerLawData, f64)> {
        match (&self.initial_data, &self.graph) {
            (
                InitialData::PowerLaw {
                    alpha,
                    q,
                    truncation,
                    center_value,
                },
                GraphSpec::Lattice { dim },
            ) => Some((
                PowerLawData {
                    dim: *dim,
                    alpha: *alpha,
                    center_value: *center_value,
                    truncation: *truncation,
                },
                *q,
            )),
            _ => None,
        }
    }

    pub fn initial_field(&self, g: &GraphGenerator) -> Result<Field, ConfigError> {
        let path = "initial_data";
        let fe = |e: crate::field::FieldError| ConfigError::at(path, e.to_string());
        match &self.initial_data {
            InitialData::Delta { value, at } => {
                let x = match at {
                    Some(label) => g.parse_label(label).map_err(|e| ConfigError::at("initial_data.at", e.to_string()))?,
                    None => g.origin(),
                };
                Field::delta(x, *value).map_err(fe)
            }
            InitialData::BallIndicator { radius, value } => {
                let b = crate::graph::ball(g, &g.origin(), *radius).map_err(|e| ConfigError::at(path, e.to_string()))?;
                Field::indicator(b.vertices(), *value).map_err(fe)
            }
            InitialData::PowerLaw { .. } => {
                let (data, _) = self.power_law().expect("validated lattice power law");
                data.field(g).map_err(|e| ConfigError::at(path, e.to_string()))
            }
            InitialData::File { path: file } => {
                let text = std::fs::read_to_string(file).map_err(|e| ConfigError::Io {
                    path: file.display().to_string(),
                    msg: e.to_string(),
                })?;
                let parsed = if file.extension().is_some_and(|e| e == "json") {
                    Field::from_json(g, &text)
                } else {
                    Field::from_csv(g, &text)
                };
                parsed.map_err(|e| ConfigError::at("initial_data.path", e.to_string()))
            }
        }
    }

    /// Profile for the estimates. A brute-forced profile is built around
    /// the graph origin with the config seed.
    pub fn profile(&self, g: &GraphGenerator) -> Result<FkProfile, ConfigError> {
        let perr = |e: crate::faberkrahn::FkError| ConfigError::at("profile", e.to_string());
        match &self.profile {
            ProfileSpec::Lattice { c0 } => {
                let dim = g
                    .dimension()
                    .ok_or_else(|| ConfigError::at("profile", "lattice profile needs a graph dimension"))?;
                FkProfile::lattice(dim, self.p, *c0).map_err(perr)
            }
            ProfileSpec::Tabulated { file, dim, omega_exp } => {
                let text = std::fs::read_to_string(file).map_err(|e| ConfigError::Io {
                    path: file.display().to_string(),
                    msg: e.to_string(),
                })?;
                FkProfile::from_csv(&text, self.p, *dim, *omega_exp).map_err(perr)
            }
            ProfileSpec::Bruteforce { size_cap } => {
                let opts = EigenOptions {
                    seed: self.seed.unwrap_or_default(),
                    ..EigenOptions::default()
                };
                crate::faberkrahn::fk_profile_bruteforce(g, &g.origin(), *size_cap, self.p, &opts)
                    .map(|t| t.profile)
                    .map_err(perr)
            }
        }
    }

    /// Base vertex for the `fk` workflow.
    pub fn fk_base(&self, g: &GraphGenerator) -> Result<VertexId, ConfigError> {
        match self.fk.as_ref().and_then(|f| f.base.as_ref()) {
            Some(label) => g
                .parse_label(label)
                .map_err(|e| ConfigError::at("fk.base", e.to_string())),
            None => Ok(g.origin()),
        }
    }
}
