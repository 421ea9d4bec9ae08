use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::field::Field;
use crate::graph::{GraphGenerator, Region, VertexId};
use crate::plaplacian::DenseOperator;

/// State at one output instant, dense on the truncation ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
    /// Accepted and rejected steps up to this instant.
    pub accepted: usize,
    pub rejected: usize,
    /// Scaled local error estimate of the step that produced the instant.
    pub error_estimate: f64,
    /// Largest negative undershoot clamped to zero.
    pub clamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRecord {
    pub n: u32,
    /// Sup difference against the previous radius on the smaller ball.
    pub diff: Option<f64>,
    /// Largest value on the sphere of radius `n` over all instants.
    pub ring_max: f64,
}

/// Minimum number of output instants for the time integral of the
/// gradient term.
pub const MIN_ENTROPY_INSTANTS: usize = 50;

#[derive(Debug, Clone)]
pub struct Trajectory {
    region: Region,
    p: f64,
    u0: Vec<f64>,
    snapshots: Vec<Snapshot>,
    n: u32,
    certified: bool,
    history: Vec<TruncationRecord>,
    max_clamp: f64,
    floor_violation: f64,
}

/// Graph distances from `x0` to every vertex of `region`, by BFS in the
/// full graph.
pub fn region_distances(
    g: &GraphGenerator,
    region: &Region,
    x0: &VertexId,
) -> Result<Vec<u32>, SolverError> {
    if region.center() == Some(x0) {
        if let Some(d) = region.distances() {
            return Ok(d.to_vec());
        }
    }
    let mut out = vec![u32::MAX; region.len()];
    let mut left = region.len();
    let mut seen: BTreeMap<VertexId, u32> = BTreeMap::from([(x0.clone(), 0)]);
    let mut queue = VecDeque::from([x0.clone()]);
    while let Some(v) = queue.pop_front() {
        let d = seen[&v];
        if let Some(i) = region.index_of(&v) {
            out[i] = d;
            left -= 1;
            if left == 0 {
                break;
            }
        }
        for (y, _) in g.neighbors(&v)? {
            if !seen.contains_key(&y) {
                seen.insert(y.clone(), d + 1);
                queue.push_back(y);
            }
        }
    }
    Ok(out)
}

impl Trajectory {
    pub(crate) fn new(
        region: Region,
        p: f64,
        u0: Vec<f64>,
        snapshots: Vec<Snapshot>,
        n: u32,
        max_clamp: f64,
        floor_violation: f64,
    ) -> Self {
        Trajectory {
            region,
            p,
            u0,
            snapshots,
            n,
            certified: false,
            history: Vec::new(),
            max_clamp,
            floor_violation,
        }
    }

    /// Rebuild a stored trajectory. Step statistics are not persisted and
    /// read as zero.
    pub fn restore(
        region: Region,
        p: f64,
        u0: Vec<f64>,
        states: Vec<(f64, Vec<f64>)>,
        n: u32,
        history: Option<Vec<TruncationRecord>>,
    ) -> Result<Self, SolverError> {
        if u0.len() != region.len() || states.iter().any(|(_, v)| v.len() != region.len()) {
            return Err(SolverError::Config("stored state does not match the ball".into()));
        }
        if states.first().is_some_and(|(t, _)| *t <= 0.0) || states.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(SolverError::Config("stored instants must be positive and increasing".into()));
        }
        let snapshots = states
            .into_iter()
            .map(|(t, values)| Snapshot {
                t,
                values,
                accepted: 0,
                rejected: 0,
                error_estimate: 0.0,
                clamp: 0.0,
            })
            .collect();
        let traj = Trajectory::new(region, p, u0, snapshots, n, 0.0, 0.0);
        Ok(match history {
            Some(h) => traj.certify(h),
            None => traj,
        })
    }

    pub(crate) fn certify(mut self, history: Vec<TruncationRecord>) -> Self {
        self.certified = true;
        self.history = history;
        self
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Truncation radius of this solve.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn certified(&self) -> bool {
        self.certified
    }

    pub fn history(&self) -> &[TruncationRecord] {
        &self.history
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn initial(&self) -> &[f64] {
        &self.u0
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn max_clamp(&self) -> f64 {
        self.max_clamp
    }

    /// Most negative unclamped value (0 when none).
    pub fn floor_violation(&self) -> f64 {
        self.floor_violation
    }

    /// Dense values at `t`; `t = 0` gives the initial data.
    pub fn values_at(&self, t: f64) -> Result<&[f64], SolverError> {
        if t == 0.0 {
            return Ok(&self.u0);
        }
        self.snapshots
            .iter()
            .find(|s| s.t == t)
            .map(|s| s.values.as_slice())
            .ok_or(SolverError::TimeNotOnGrid(t))
    }

    pub fn field_at(&self, t: f64) -> Result<Field, SolverError> {
        Ok(Field::from_dense(&self.region, self.values_at(t)?)?)
    }

    pub fn mass(&self, t: f64) -> Result<f64, SolverError> {
        let u = self.values_at(t)?;
        Ok(u.iter().zip(self.region.degrees()).map(|(v, d)| v * d).sum())
    }

    pub fn sup_norm(&self, t: f64) -> Result<f64, SolverError> {
        Ok(self.values_at(t)?.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn lq_norm(&self, t: f64, q: f64) -> Result<f64, SolverError> {
        let u = self.values_at(t)?;
        let s: f64 = u
            .iter()
            .zip(self.region.degrees())
            .map(|(v, d)| v.abs().powf(q) * d)
            .sum();
        Ok(s.powf(1.0 / q))
    }

    /// Largest `|u|` on the sphere of radius `n` over all output instants.
    pub fn ring_max(&self) -> f64 {
        let dist = self.region.distances().expect("trajectories live on balls");
        let ring: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] == self.n).collect();
        let mut m: f64 = 0.0;
        for s in &self.snapshots {
            for &i in &ring {
                m = m.max(s.values[i].abs());
            }
        }
        m
    }

    /// Sup over output instants and over the vertices of `other`'s ball of
    /// `|u_self - u_other|`; `other` must live on a smaller ball.
    pub fn max_difference_on(&self, other: &Trajectory) -> f64 {
        let map: Vec<usize> = other
            .region
            .vertices()
            .iter()
            .map(|x| self.region.index_of(x).expect("nested balls"))
            .collect();
        let mut m: f64 = 0.0;
        for (a, b) in self.snapshots.iter().zip(&other.snapshots) {
            for (j, &i) in map.iter().enumerate() {
                m = m.max((a.values[i] - b.values[j]).abs());
            }
        }
        m
    }

    /// Minimal `R` with `||u(t)||_{l1(B_R(x0))} >= (1 - eps) ||u0||_{l1}`.
    pub fn mass_radius(
        &self,
        g: &GraphGenerator,
        t: f64,
        eps: f64,
        x0: &VertexId,
    ) -> Result<u32, SolverError> {
        let dist = region_distances(g, &self.region, x0)?;
        self.mass_radius_with(&dist, t, eps)
    }

    /// As [`Trajectory::mass_radius`] with precomputed distances.
    pub fn mass_radius_with(&self, dist: &[u32], t: f64, eps: f64) -> Result<u32, SolverError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SolverError::Config(format!("eps must lie in (0, 1), got {eps}")));
        }
        let u = self.values_at(t)?;
        let target = (1.0 - eps) * self.mass(0.0)?;
        let mut by_radius: BTreeMap<u32, f64> = BTreeMap::new();
        for i in 0..u.len() {
            *by_radius.entry(dist[i]).or_insert(0.0) += u[i].abs() * self.region.degree(i);
        }
        let mut acc = 0.0;
        for (&r, &m) in &by_radius {
            acc += m;
            if acc >= target {
                return Ok(r);
            }
        }
        Err(SolverError::TruncationDeficit {
            t,
            n: self.n,
            deficit: target - acc,
        })
    }

    /// `sum d(x, x0)^alpha u(x, t) d_w(x)` over the ball.
    pub fn moment(&self, g: &GraphGenerator, t: f64, alpha: f64, x0: &VertexId) -> Result<f64, SolverError> {
        let dist = region_distances(g, &self.region, x0)?;
        self.moment_with(&dist, t, alpha)
    }

    pub fn moment_with(&self, dist: &[u32], t: f64, alpha: f64) -> Result<f64, SolverError> {
        let u = self.values_at(t)?;
        Ok((0..u.len())
            .map(|i| (dist[i] as f64).powf(alpha) * u[i] * self.region.degree(i))
            .sum())
    }

    /// `int_0^t sum_{x,y} |D_y u|^{p-1} w dtau` at every output instant, by
    /// the trapezoidal rule through `t = 0` and all earlier instants.
    pub fn gradient_entropy_series(&self) -> Result<Vec<(f64, f64)>, SolverError> {
        if self.snapshots.len() < MIN_ENTROPY_INSTANTS {
            return Err(SolverError::TooFewInstants {
                min: MIN_ENTROPY_INSTANTS,
                got: self.snapshots.len(),
            });
        }
        let op = DenseOperator::new(&self.region, self.p)?;
        let mut prev = (0.0, op.gradient_mass(&self.u0));
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.snapshots.len());
        for s in &self.snapshots {
            let cur = op.gradient_mass(&s.values);
            acc += 0.5 * (s.t - prev.0) * (cur + prev.1);
            out.push((s.t, acc));
            prev = (s.t, cur);
        }
        Ok(out)
    }

    pub fn gradient_entropy_integral(&self, t: f64) -> Result<f64, SolverError> {
        if t == 0.0 {
            return Ok(0.0);
        }
        self.gradient_entropy_series()?
            .into_iter()
            .find(|e| e.0 == t)
            .map(|e| e.1)
            .ok_or(SolverError::TimeNotOnGrid(t))
    }
}
