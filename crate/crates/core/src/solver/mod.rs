//! Truncated-ball scheme for the Cauchy problem `u' = Delta_p u`.
//!
//! The ODE system on `B_n` (zero values outside) is integrated with an
//! embedded 5(4) Runge-Kutta pair. [`solve_cauchy`] walks a radius schedule
//! and stops once successive truncations agree.

pub mod dopri;
mod trajectory;

use log::{debug, warn};
use thiserror::Error;

use crate::field::{Field, FieldError};
use crate::graph::{ball, GraphError, GraphGenerator, VertexId};
use crate::plaplacian::{DenseOperator, PLaplacianError};

pub use dopri::{Dopri5Options, StepStats};
pub use trajectory::{region_distances, Snapshot, Trajectory, TruncationRecord};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("initial data supported outside B_{n}: {vertex}")]
    SupportOutsideBall { n: u32, vertex: String },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit reached at t = {t} after {steps} steps")]
    StepLimit { t: f64, steps: usize },
    #[error("truncation schedule exhausted at n = {n}; residual {residual}, boundary ring {ring_max}")]
    NotConverged { n: u32, residual: f64, ring_max: f64 },
    #[error("t = {0} is not an output instant")]
    TimeNotOnGrid(f64),
    #[error("mass in B_{n} at t = {t} falls short of the requested fraction by {deficit}")]
    TruncationDeficit { t: f64, n: u32, deficit: f64 },
    #[error("at least {min} output instants needed, got {got}")]
    TooFewInstants { min: usize, got: usize },
    #[error("comparison data not ordered at {0}")]
    NotOrdered(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    PLaplacian(#[from] PLaplacianError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Negative values above `-NEG_FLOOR * ||u0||_inf` are clamped to zero in
/// stored snapshots of nonnegative solutions.
pub const NEG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub p: f64,
    /// Center of the truncation balls; the graph origin when `None`.
    pub center: Option<VertexId>,
    pub n0: u32,
    pub growth: f64,
    pub n_max: u32,
    /// Output instants, strictly increasing, first one positive.
    pub times: Vec<f64>,
    pub atol: f64,
    pub rtol: f64,
    /// Boundary-ring threshold; `1e-10 ||u0||_inf` when `None`.
    pub delta_boundary: Option<f64>,
    pub eps_trunc: f64,
    pub max_steps: usize,
}

impl SolverConfig {
    pub fn new(p: f64, times: Vec<f64>) -> Self {
        SolverConfig {
            p,
            center: None,
            n0: 16,
            growth: 2.0,
            n_max: 4096,
            times,
            atol: 1e-12,
            rtol: 1e-9,
            delta_boundary: None,
            eps_trunc: 1e-9,
            max_steps: 5_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        crate::plaplacian::check_exponent(self.p)?;
        let bad = |m: String| Err(SolverError::Config(m));
        if self.times.is_empty() {
            return bad("no output instants".into());
        }
        if !(self.times[0] > 0.0) || self.times.iter().any(|t| !t.is_finite()) {
            return bad("output instants must be finite and positive".into());
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("output instants must increase strictly".into());
        }
        for (name, v) in [("atol", self.atol), ("rtol", self.rtol), ("eps_trunc", self.eps_trunc)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(d) = self.delta_boundary {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("delta_boundary must be positive, got {d}"));
            }
        }
        if self.n0 == 0 || self.n_max < self.n0 {
            return bad(format!("need 0 < n0 <= n_max, got {} and {}", self.n0, self.n_max));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return bad(format!("growth must exceed 1, got {}", self.growth));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }

    /// `n_k = ceil(n0 growth^k)`, strictly increasing, ending at `n_max`.
    pub fn schedule(&self) -> Vec<u32> {
        let mut out = vec![self.n0];
        let mut x = self.n0 as f64;
        while *out.last().unwrap() < self.n_max {
            x *= self.growth;
            let last = *out.last().unwrap();
            let next = (x.ceil() as u32).max(last + 1).min(self.n_max);
            out.push(next);
        }
        out
    }

    fn dopri(&self) -> Dopri5Options {
        Dopri5Options {
            atol: self.atol,
            rtol: self.rtol,
            h_init: None,
            max_steps: self.max_steps,
        }
    }
}

/// Solve on `B_n(center)` with zero exterior values.
pub fn solve_truncated(
    g: &GraphGenerator,
    u0: &Field,
    cfg: &SolverConfig,
    n: u32,
) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    let center = cfg.center.clone().unwrap_or_else(|| g.origin());
    let region = ball(g, &center, n)?;
    if let Some(x) = u0.support().find(|x| !region.contains(x)) {
        return Err(SolverError::SupportOutsideBall {
            n,
            vertex: g.label(x),
        });
    }
    let y0 = u0.to_dense(&region);
    let nonneg = y0.iter().all(|&v| v >= 0.0);
    let floor = NEG_FLOOR * u0.sup_norm();
    let op = DenseOperator::new(&region, cfg.p)?;
    let mut snapshots = Vec::with_capacity(cfg.times.len());
    let mut max_clamp: f64 = 0.0;
    let mut floor_violation: f64 = 0.0;
    dopri::integrate(
        |u, du| op.apply(u, du),
        &y0,
        &cfg.times,
        &cfg.dopri(),
        |_, t, y, st| {
            let mut values = y.to_vec();
            let mut clamp: f64 = 0.0;
            if nonneg {
                for v in values.iter_mut().filter(|v| **v < 0.0) {
                    if *v >= -floor {
                        clamp = clamp.max(-*v);
                        *v = 0.0;
                    } else {
                        floor_violation = floor_violation.min(*v);
                    }
                }
            }
            max_clamp = max_clamp.max(clamp);
            snapshots.push(Snapshot {
                t,
                values,
                accepted: st.accepted,
                rejected: st.rejected,
                error_estimate: st.last_error,
                clamp,
            });
        },
    )?;
    if floor_violation < 0.0 {
        warn!("B_{n}: negative value {floor_violation:e} below the clamping floor");
    }
    if max_clamp > 0.0 {
        debug!("B_{n}: clamped negative undershoot up to {max_clamp:e}");
    }
    Ok(Trajectory::new(
        region,
        cfg.p,
        y0,
        snapshots,
        n,
        max_clamp,
        floor_violation,
    ))
}

/// Solve on successive balls of the schedule until two consecutive
/// truncations agree to `eps_trunc` on the smaller ball at every output
/// instant, expanding early while the boundary ring carries more than the
/// boundary threshold. Each radius is solved from `t = 0`.
pub fn solve_cauchy(g: &GraphGenerator, u0: &Field, cfg: &SolverConfig) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    let delta = cfg.delta_boundary.unwrap_or(1e-10 * u0.sup_norm());
    let center = cfg.center.clone().unwrap_or_else(|| g.origin());
    let needed = match u0.support_radius(g, &center, cfg.n_max)? {
        Some(r) => r,
        None => {
            return Err(SolverError::SupportOutsideBall {
                n: cfg.n_max,
                vertex: "initial data".into(),
            })
        }
    };
    let schedule: Vec<u32> = cfg.schedule().into_iter().filter(|&n| n >= needed.max(1)).collect();
    let schedule = if schedule.is_empty() { vec![cfg.n_max] } else { schedule };
    let mut history = Vec::new();
    let mut prev: Option<Trajectory> = None;
    for &n in &schedule {
        let traj = solve_truncated(g, u0, cfg, n)?;
        let ring = traj.ring_max();
        let diff = prev.as_ref().map(|p| traj.max_difference_on(p));
        debug!("n = {n}: ring {ring:e}, diff {diff:?}");
        history.push(TruncationRecord {
            n,
            diff,
            ring_max: ring,
        });
        let quiet = ring <= delta;
        if quiet && diff.is_some_and(|d| d <= cfg.eps_trunc) {
            return Ok(traj.certify(history));
        }
        prev = Some(traj);
    }
    let last = history.last().expect("schedule is nonempty");
    Err(SolverError::NotConverged {
        n: last.n,
        residual: last.diff.unwrap_or(f64::INFINITY),
        ring_max: last.ring_max,
    })
}

/// Worst signed gap `min (u1 - u2)` over the output instants and the
/// common ball, for `u01 >= u02` solved on the same truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOutcome {
    pub worst_gap: f64,
    pub threshold: f64,
    pub n: u32,
    pub pass: bool,
}

pub fn comparison_check(
    g: &GraphGenerator,
    u01: &Field,
    u02: &Field,
    cfg: &SolverConfig,
) -> Result<ComparisonOutcome, SolverError> {
    let support: std::collections::BTreeSet<&VertexId> = u01.support().chain(u02.support()).collect();
    if let Some(x) = support.into_iter().find(|x| u01.get(x) < u02.get(x)) {
        return Err(SolverError::NotOrdered(g.label(x)));
    }
    let (t1, t2) = rayon::join(|| solve_cauchy(g, u01, cfg), || solve_cauchy(g, u02, cfg));
    let (mut t1, mut t2) = (t1?, t2?);
    let n = t1.n().max(t2.n());
    if t1.n() < n {
        t1 = solve_truncated(g, u01, cfg, n)?;
    }
    if t2.n() < n {
        t2 = solve_truncated(g, u02, cfg, n)?;
    }
    let mut worst = f64::INFINITY;
    for (a, b) in t1.snapshots().iter().zip(t2.snapshots()) {
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.min(x - y);
        }
    }
    let threshold = -1e-8 * u01.sup_norm();
    Ok(ComparisonOutcome {
        worst_gap: worst,
        threshold,
        n,
        pass: worst >= threshold,
    })
}
