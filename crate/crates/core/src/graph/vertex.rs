use std::fmt;

use smallvec::SmallVec;

/// Canonical vertex identifier.
///
/// Lattice vertices carry their integer coordinates, product vertices carry
/// the factor index followed by the lattice coordinates, and user graphs carry
/// the insertion index of the vertex. The derived order is lexicographic on
/// the coordinate tuple, which fixes the iteration order of every reduction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(SmallVec<[i64; 4]>);

impl VertexId {
    pub fn new(coords: &[i64]) -> Self {
        VertexId(SmallVec::from_slice(coords))
    }

    /// The all-zero vertex of a given arity.
    pub fn zeros(len: usize) -> Self {
        VertexId(SmallVec::from_elem(0, len))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy with `delta` added to coordinate `axis`.
    pub fn shifted(&self, axis: usize, delta: i64) -> Self {
        let mut c = self.0.clone();
        c[axis] += delta;
        VertexId(c)
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<i64> for VertexId {
    fn from(x: i64) -> Self {
        VertexId::new(&[x])
    }
}

impl From<(i64, i64)> for VertexId {
    fn from((x, y): (i64, i64)) -> Self {
        VertexId::new(&[x, y])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_order() {
        let mut v = vec![
            VertexId::from((1, -1)),
            VertexId::from((0, 2)),
            VertexId::from((0, -3)),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                VertexId::from((0, -3)),
                VertexId::from((0, 2)),
                VertexId::from((1, -1))
            ]
        );
    }

    #[test]
    fn shifted_touches_one_axis() {
        let x = VertexId::from((3, 4));
        assert_eq!(x.shifted(1, -1), VertexId::from((3, 3)));
        assert_eq!(x, VertexId::from((3, 4)));
    }
}
