//! Infinite weighted graphs as neighbor oracles, with balls, distances and
//! cutoff functions. Only finite balls are ever materialized.

mod generator;
mod region;
mod vertex;

pub use generator::{FiniteGraph, GraphGenerator};
pub use region::{ball, ball_measures, distance, spheres, Distance, Region};
pub use vertex::VertexId;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("invalid edge: {0}")]
    InvalidEdge(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("lattice dimension must be at least 1")]
    InvalidDimension,
    #[error("vertex {0} has no neighbors")]
    IsolatedVertex(String),
    #[error("adjacency line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cutoff needs R2 > R1, got R1={r1}, R2={r2}")]
    CutoffRadii { r1: u32, r2: u32 },
    #[error("{0}")]
    Io(String),
}

/// Piecewise linear cutoff: 1 on `B_{R1}`, 0 outside `B_{R2}`, and
/// `(R2 - d) / (R2 - R1)` in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    center: VertexId,
    r1: u32,
    r2: u32,
}

impl Cutoff {
    pub fn new(center: VertexId, r1: u32, r2: u32) -> Result<Self, GraphError> {
        if r2 <= r1 {
            return Err(GraphError::CutoffRadii { r1, r2 });
        }
        Ok(Cutoff { center, r1, r2 })
    }

    /// Value from a known distance to the center.
    pub fn at_distance(&self, d: u32) -> f64 {
        if d <= self.r1 {
            1.0
        } else if d <= self.r2 {
            f64::from(self.r2 - d) / f64::from(self.r2 - self.r1)
        } else {
            0.0
        }
    }

    pub fn value(&self, g: &GraphGenerator, x: &VertexId) -> Result<f64, GraphError> {
        Ok(match distance(g, &self.center, x, self.r2)? {
            Distance::Exact(d) => self.at_distance(d),
            Distance::Exceeds => 0.0,
        })
    }

    /// Bound on `|zeta(y) - zeta(x)|` across any edge.
    pub fn lipschitz_bound(&self) -> f64 {
        1.0 / f64::from(self.r2 - self.r1)
    }
}
