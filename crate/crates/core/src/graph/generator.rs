use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use super::{GraphError, VertexId};

/// A finite, undirected, positively weighted graph with string vertex names.
///
/// Used both as the factor `H` of product graphs and as a user supplied
/// custom graph. Vertices are numbered in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGraph {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl FiniteGraph {
    /// Build from a list of undirected weighted edges `(a, b, w)`.
    ///
    /// Repeated edges are rejected, as are self loops and non-positive or
    /// non-finite weights. The result must be connected.
    pub fn from_edges<S: AsRef<str>>(edges: &[(S, S, f64)]) -> Result<Self, GraphError> {
        let mut g = FiniteGraph {
            names: Vec::new(),
            index: BTreeMap::new(),
            adjacency: Vec::new(),
        };
        for (a, b, w) in edges {
            let (a, b, w) = (a.as_ref(), b.as_ref(), *w);
            if a == b {
                return Err(GraphError::InvalidEdge(format!("self loop at {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::InvalidEdge(format!(
                    "edge {a} {b} has non-positive weight {w}"
                )));
            }
            let ia = g.intern(a);
            let ib = g.intern(b);
            if g.adjacency[ia].iter().any(|&(j, _)| j == ib) {
                return Err(GraphError::InvalidEdge(format!("duplicate edge {a} {b}")));
            }
            g.adjacency[ia].push((ib, w));
            g.adjacency[ib].push((ia, w));
        }
        if g.names.is_empty() {
            return Err(GraphError::InvalidEdge("graph has no edges".into()));
        }
        for list in &mut g.adjacency {
            list.sort_by_key(|&(j, _)| j);
        }
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Parse the text adjacency format: one edge per line, `x y weight`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("expected `x y weight`, got `{line}`"),
                });
            }
            let w: f64 = parts[2].parse().map_err(|_| GraphError::Parse {
                line: lineno + 1,
                msg: format!("bad weight `{}`", parts[2]),
            })?;
            edges.push((parts[0].to_string(), parts[1].to_string(), w));
        }
        Self::from_edges(&edges)
    }

    pub fn from_file(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Complete graph on `k` vertices named `0..k`, unit weights.
    pub fn complete(k: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                edges.push((a.to_string(), b.to_string(), 1.0));
            }
        }
        Self::from_edges(&edges)
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        self.adjacency.push(Vec::new());
        i
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.names.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Undirected edge list `(a, b, w)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (a, list) in self.adjacency.iter().enumerate() {
            for &(b, w) in list {
                if a < b {
                    out.push((a, b, w));
                }
            }
        }
        out
    }
}

/// Infinite (or finite) weighted graph given by a neighbor oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphGenerator {
    /// The standard lattice `Z^N` with unit nearest-neighbor weights.
    Lattice { dim: usize },
    /// `H x Z^N`: vertices `(h, x)`, adjacent when they differ by one edge in
    /// exactly one factor.
    Product { factor: FiniteGraph, dim: usize },
    /// A finite user graph read from an adjacency file.
    Custom(FiniteGraph),
}

impl GraphGenerator {
    pub fn lattice(dim: usize) -> Result<Self, GraphError> {
        if dim == 0 {
            return Err(GraphError::InvalidDimension);
        }
        Ok(GraphGenerator::Lattice { dim })
    }

    pub fn product(factor: FiniteGraph, dim: usize) -> Result<Self, GraphError> {
        if dim == 0 {
            return Err(GraphError::InvalidDimension);
        }
        Ok(GraphGenerator::Product { factor, dim })
    }

    pub fn custom(graph: FiniteGraph) -> Self {
        GraphGenerator::Custom(graph)
    }

    pub fn name(&self) -> String {
        match self {
            GraphGenerator::Lattice { dim } => format!("Z^{dim}"),
            GraphGenerator::Product { factor, dim } => {
                format!("H{}xZ^{dim}", factor.len())
            }
            GraphGenerator::Custom(g) => format!("custom({} vertices)", g.len()),
        }
    }

    /// Lattice dimension `N`, when the graph has one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            GraphGenerator::Lattice { dim } | GraphGenerator::Product { dim, .. } => Some(*dim),
            GraphGenerator::Custom(_) => None,
        }
    }

    /// Distinguished base vertex: the lattice origin, `(first H vertex, 0)`,
    /// or the first vertex of a custom graph.
    pub fn origin(&self) -> VertexId {
        match self {
            GraphGenerator::Lattice { dim } => VertexId::zeros(*dim),
            GraphGenerator::Product { dim, .. } => VertexId::zeros(dim + 1),
            GraphGenerator::Custom(_) => VertexId::zeros(1),
        }
    }

    pub fn contains(&self, x: &VertexId) -> bool {
        match self {
            GraphGenerator::Lattice { dim } => x.len() == *dim,
            GraphGenerator::Product { factor, dim } => {
                x.len() == dim + 1 && (0..factor.len() as i64).contains(&x.coords()[0])
            }
            GraphGenerator::Custom(g) => {
                x.len() == 1 && (0..g.len() as i64).contains(&x.coords()[0])
            }
        }
    }

    fn check(&self, x: &VertexId) -> Result<(), GraphError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(format!("{x:?}")))
        }
    }

    /// Neighbors of `x` with their edge weights, in canonical order.
    pub fn neighbors(&self, x: &VertexId) -> Result<Vec<(VertexId, f64)>, GraphError> {
        self.check(x)?;
        let mut out = Vec::new();
        match self {
            GraphGenerator::Lattice { dim } => {
                for axis in 0..*dim {
                    out.push((x.shifted(axis, -1), 1.0));
                    out.push((x.shifted(axis, 1), 1.0));
                }
            }
            GraphGenerator::Product { factor, dim } => {
                let h = x.coords()[0] as usize;
                for &(h2, w) in factor.neighbors(h) {
                    let mut c = x.coords().to_vec();
                    c[0] = h2 as i64;
                    out.push((VertexId::new(&c), w));
                }
                for axis in 1..=*dim {
                    out.push((x.shifted(axis, -1), 1.0));
                    out.push((x.shifted(axis, 1), 1.0));
                }
            }
            GraphGenerator::Custom(g) => {
                let i = x.coords()[0] as usize;
                for &(j, w) in g.neighbors(i) {
                    out.push((VertexId::new(&[j as i64]), w));
                }
            }
        }
        Ok(out)
    }

    /// Weighted degree `d_w(x)`.
    pub fn degree(&self, x: &VertexId) -> Result<f64, GraphError> {
        Ok(self.neighbors(x)?.iter().map(|&(_, w)| w).sum())
    }

    /// Weight `w(x, y)`, zero when not adjacent.
    pub fn weight(&self, x: &VertexId, y: &VertexId) -> Result<f64, GraphError> {
        Ok(self
            .neighbors(x)?
            .into_iter()
            .find(|(z, _)| z == y)
            .map_or(0.0, |(_, w)| w))
    }

    /// Text label used in field files: coordinates joined by `:` for
    /// lattice and product graphs, the vertex name for custom graphs.
    pub fn label(&self, x: &VertexId) -> String {
        match self {
            GraphGenerator::Custom(g) => g.name(x.coords()[0] as usize).to_string(),
            _ => x
                .coords()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(":"),
        }
    }

    pub fn parse_label(&self, s: &str) -> Result<VertexId, GraphError> {
        let x = match self {
            GraphGenerator::Custom(g) => {
                let i = g
                    .index_of(s)
                    .ok_or_else(|| GraphError::UnknownVertex(s.to_string()))?;
                VertexId::new(&[i as i64])
            }
            _ => {
                let coords: Result<Vec<i64>, _> = s.split(':').map(|c| c.trim().parse()).collect();
                VertexId::new(&coords.map_err(|_| GraphError::UnknownVertex(s.to_string()))?)
            }
        };
        self.check(&x)?;
        Ok(x)
    }
}
