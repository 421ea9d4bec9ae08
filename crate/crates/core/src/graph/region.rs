use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{GraphError, GraphGenerator, VertexId};

/// A finite materialized vertex set.
///
/// Vertices are stored in canonical order. Degrees are those of the full
/// graph, so boundary vertices of a truncation keep their true `d_w`. The
/// adjacency is split into edges that stay inside the region (stored as
/// index pairs) and the total weight of edges leaving it.
#[derive(Debug, Clone)]
pub struct Region {
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    degree: Vec<f64>,
    distance: Option<Vec<u32>>,
    center: Option<VertexId>,
    radius: Option<u32>,
    offsets: Vec<usize>,
    inner: Vec<(usize, f64)>,
    outer_weight: Vec<f64>,
    measure: f64,
}

impl Region {
    /// Materialize an arbitrary finite vertex set.
    pub fn from_vertices(g: &GraphGenerator, vertices: &[VertexId]) -> Result<Self, GraphError> {
        let mut vs = vertices.to_vec();
        vs.sort();
        vs.dedup();
        Self::build(g, vs, None, None, None)
    }

    fn build(
        g: &GraphGenerator,
        vertices: Vec<VertexId>,
        distance: Option<Vec<u32>>,
        center: Option<VertexId>,
        radius: Option<u32>,
    ) -> Result<Self, GraphError> {
        let index: HashMap<VertexId, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let mut degree = Vec::with_capacity(vertices.len());
        let mut offsets = Vec::with_capacity(vertices.len() + 1);
        let mut inner = Vec::new();
        let mut outer_weight = Vec::with_capacity(vertices.len());
        offsets.push(0);
        for x in &vertices {
            let mut d = 0.0;
            let mut out = 0.0;
            for (y, w) in g.neighbors(x)? {
                d += w;
                match index.get(&y) {
                    Some(&j) => inner.push((j, w)),
                    None => out += w,
                }
            }
            if d <= 0.0 {
                return Err(GraphError::IsolatedVertex(format!("{x:?}")));
            }
            degree.push(d);
            outer_weight.push(out);
            offsets.push(inner.len());
        }
        let measure = degree.iter().sum();
        Ok(Region {
            vertices,
            index,
            degree,
            distance,
            center,
            radius,
            offsets,
            inner,
            outer_weight,
            measure,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &VertexId {
        &self.vertices[i]
    }

    pub fn index_of(&self, x: &VertexId) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &VertexId) -> bool {
        self.index.contains_key(x)
    }

    /// `d_w` of every vertex, aligned with [`Region::vertices`].
    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degree[i]
    }

    /// `mu_w(U)`.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Neighbors of vertex `i` that lie inside the region.
    pub fn inner_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.inner[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Total weight of the edges from vertex `i` to vertices outside.
    pub fn outer_weight(&self, i: usize) -> f64 {
        self.outer_weight[i]
    }

    /// Distance to the ball center, for regions built by [`ball`].
    pub fn distances(&self) -> Option<&[u32]> {
        self.distance.as_deref()
    }

    pub fn center(&self) -> Option<&VertexId> {
        self.center.as_ref()
    }

    pub fn radius(&self) -> Option<u32> {
        self.radius
    }

    /// Sum of `|w(x,y) - w(y,x)|` over ordered inner pairs. Zero for every
    /// symmetric graph.
    pub fn asymmetry_residual(&self) -> f64 {
        let mut r = 0.0;
        for i in 0..self.len() {
            for &(j, w) in self.inner_neighbors(i) {
                let back = self
                    .inner_neighbors(j)
                    .iter()
                    .find(|&&(k, _)| k == i)
                    .map_or(0.0, |&(_, w2)| w2);
                r += (w - back).abs();
            }
        }
        r
    }

    /// Whether the subgraph induced on the region is connected.
    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in self.inner_neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.len()
    }
}

/// Result of a radius-capped distance query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Exact(u32),
    /// No path of length `<= r_max` exists.
    Exceeds,
}

impl Distance {
    pub fn exact(self) -> Option<u32> {
        match self {
            Distance::Exact(d) => Some(d),
            Distance::Exceeds => None,
        }
    }
}

/// Combinatorial distance by BFS from `x`, truncated at `r_max`.
pub fn distance(
    g: &GraphGenerator,
    x: &VertexId,
    y: &VertexId,
    r_max: u32,
) -> Result<Distance, GraphError> {
    if !g.contains(y) {
        return Err(GraphError::UnknownVertex(format!("{y:?}")));
    }
    if x == y {
        g.neighbors(x)?;
        return Ok(Distance::Exact(0));
    }
    let mut dist: HashMap<VertexId, u32> = HashMap::from([(x.clone(), 0)]);
    let mut queue = VecDeque::from([x.clone()]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d >= r_max {
            continue;
        }
        for (z, _) in g.neighbors(&v)? {
            if dist.contains_key(&z) {
                continue;
            }
            if &z == y {
                return Ok(Distance::Exact(d + 1));
            }
            dist.insert(z.clone(), d + 1);
            queue.push_back(z);
        }
    }
    Ok(Distance::Exceeds)
}

/// BFS layers around `x0` up to radius `r`, each sorted canonically.
pub fn spheres(g: &GraphGenerator, x0: &VertexId, r: u32) -> Result<Vec<Vec<VertexId>>, GraphError> {
    g.neighbors(x0)?;
    let mut seen: HashMap<VertexId, ()> = HashMap::from([(x0.clone(), ())]);
    let mut layers = vec![vec![x0.clone()]];
    for _ in 0..r {
        let mut next = Vec::new();
        for v in layers.last().unwrap() {
            for (z, _) in g.neighbors(v)? {
                if seen.insert(z.clone(), ()).is_none() {
                    next.push(z);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        layers.push(next);
    }
    Ok(layers)
}

/// The ball `B_R(x0)` as a materialized region.
pub fn ball(g: &GraphGenerator, x0: &VertexId, radius: u32) -> Result<Region, GraphError> {
    let layers = spheres(g, x0, radius)?;
    let mut with_dist: BTreeMap<VertexId, u32> = BTreeMap::new();
    for (d, layer) in layers.into_iter().enumerate() {
        for v in layer {
            with_dist.insert(v, d as u32);
        }
    }
    let (vertices, dist): (Vec<_>, Vec<_>) = with_dist.into_iter().unzip();
    Region::build(g, vertices, Some(dist), Some(x0.clone()), Some(radius))
}

/// Cumulative ball measures `mu_w(B_R(x0))` for `R = 0..=r_max`.
pub fn ball_measures(g: &GraphGenerator, x0: &VertexId, r_max: u32) -> Result<Vec<f64>, GraphError> {
    let layers = spheres(g, x0, r_max)?;
    let mut out = Vec::with_capacity(r_max as usize + 1);
    let mut acc = 0.0;
    for layer in &layers {
        for v in layer {
            acc += g.degree(v)?;
        }
        out.push(acc);
    }
    // a finite graph saturates before r_max
    while out.len() <= r_max as usize {
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FiniteGraph;

    #[test]
    fn distance_examples() {
        let z2 = GraphGenerator::lattice(2).unwrap();
        assert_eq!(
            distance(&z2, &VertexId::from((0, 0)), &VertexId::from((2, 3)), 10).unwrap(),
            Distance::Exact(5)
        );
        assert_eq!(
            distance(&z2, &VertexId::from((0, 0)), &VertexId::from((2, 3)), 4).unwrap(),
            Distance::Exceeds
        );
        let z1 = GraphGenerator::lattice(1).unwrap();
        assert_eq!(
            distance(&z1, &VertexId::from(0), &VertexId::from(-4), 4).unwrap(),
            Distance::Exact(4)
        );
        assert_eq!(
            distance(&z1, &VertexId::from(7), &VertexId::from(7), 0).unwrap(),
            Distance::Exact(0)
        );
    }

    #[test]
    fn ball_examples() {
        let z1 = GraphGenerator::lattice(1).unwrap();
        let b = ball(&z1, &VertexId::from(0), 2).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.measure(), 10.0);
        let z2 = GraphGenerator::lattice(2).unwrap();
        let b = ball(&z2, &VertexId::from((0, 0)), 1).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.measure(), 20.0);
        let b0 = ball(&z2, &VertexId::from((3, 3)), 0).unwrap();
        assert_eq!(b0.len(), 1);
        assert_eq!(b0.measure(), 4.0);
    }

    #[test]
    fn boundary_degrees_are_full_graph_degrees() {
        let z1 = GraphGenerator::lattice(1).unwrap();
        let b = ball(&z1, &VertexId::from(0), 3).unwrap();
        let last = b.index_of(&VertexId::from(3)).unwrap();
        assert_eq!(b.degree(last), 2.0);
        assert_eq!(b.outer_weight(last), 1.0);
        assert_eq!(b.inner_neighbors(last).len(), 1);
    }

    #[test]
    fn canonical_order_and_distances() {
        let z2 = GraphGenerator::lattice(2).unwrap();
        let b = ball(&z2, &VertexId::from((0, 0)), 2).unwrap();
        assert!(b.vertices().windows(2).all(|w| w[0] < w[1]));
        let d = b.distances().unwrap();
        for (v, &dv) in b.vertices().iter().zip(d) {
            let l1: i64 = v.coords().iter().map(|c| c.abs()).sum();
            assert_eq!(dv as i64, l1);
        }
    }

    #[test]
    fn z1_ball_measure_formula() {
        let z1 = GraphGenerator::lattice(1).unwrap();
        let m = ball_measures(&z1, &VertexId::from(0), 50).unwrap();
        for (r, &mu) in m.iter().enumerate() {
            assert_eq!(mu, 2.0 * (2.0 * r as f64 + 1.0));
        }
    }

    #[test]
    fn finite_graph_ball_saturates() {
        let g = GraphGenerator::custom(FiniteGraph::complete(3).unwrap());
        let b = ball(&g, &g.origin(), 5).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.measure(), 6.0);
        assert!(b.is_connected());
        let m = ball_measures(&g, &g.origin(), 4).unwrap();
        assert_eq!(m, vec![2.0, 6.0, 6.0, 6.0, 6.0]);
    }
}
