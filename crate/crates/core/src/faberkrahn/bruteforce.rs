//! Brute-force Faber-Krahn tables from connected vertex subsets.

use std::collections::{BTreeMap, BTreeSet};

use super::{dirichlet_p_eigenvalue, EigenOptions, FkError, FkProfile, ProfileSource};
use crate::graph::{GraphGenerator, Region, VertexId};

/// Largest subset size accepted by [`fk_profile_bruteforce`].
pub const MAX_SIZE_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetEigen {
    pub vertices: Vec<VertexId>,
    pub measure: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct BruteforceTable {
    /// Every enumerated subset with its eigenvalue, in enumeration order.
    pub subsets: Vec<SubsetEigen>,
    /// Minimum eigenvalue per achievable measure.
    pub raw: Vec<(f64, f64)>,
    /// Running minimum of `raw`, nonincreasing in `v`.
    pub envelope: Vec<(f64, f64)>,
    pub profile: FkProfile,
}

/// Connected subsets containing `base` with at most `size_cap` vertices,
/// each sorted canonically; grouped by size, each group sorted.
pub fn connected_subsets(
    g: &GraphGenerator,
    base: &VertexId,
    size_cap: usize,
) -> Result<Vec<Vec<VertexId>>, FkError> {
    if size_cap == 0 || size_cap > MAX_SIZE_CAP {
        return Err(FkError::SizeCap(size_cap));
    }
    let mut nbr_cache: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    let mut level: BTreeSet<Vec<VertexId>> = BTreeSet::new();
    level.insert(vec![base.clone()]);
    let mut out: Vec<Vec<VertexId>> = level.iter().cloned().collect();
    for _ in 1..size_cap {
        let mut next = BTreeSet::new();
        for set in &level {
            for x in set {
                if !nbr_cache.contains_key(x) {
                    let ns = g.neighbors(x)?.into_iter().map(|(y, _)| y).collect();
                    nbr_cache.insert(x.clone(), ns);
                }
                for y in &nbr_cache[x] {
                    if let Err(pos) = set.binary_search(y) {
                        let mut grown = set.clone();
                        grown.insert(pos, y.clone());
                        next.insert(grown);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    Ok(out)
}

/// Tabulated profile from the Dirichlet eigenvalues of every connected
/// subset containing `base` with at most `size_cap` vertices.
///
/// For each achievable measure the smallest eigenvalue is kept, then a
/// running minimum in increasing `v` makes the table nonincreasing. The
/// profile records `N` from the generator (1 for custom graphs) and
/// `omega_exp = p/N`.
pub fn fk_profile_bruteforce(
    g: &GraphGenerator,
    base: &VertexId,
    size_cap: usize,
    p: f64,
    opts: &EigenOptions,
) -> Result<BruteforceTable, FkError> {
    if p.is_nan() || p <= 2.0 {
        return Err(FkError::Exponent(p));
    }
    let sets = connected_subsets(g, base, size_cap)?;
    let mut subsets = Vec::with_capacity(sets.len());
    // keyed by the bit pattern of the measure; measures are positive so
    // the bit order is the numeric order
    let mut best: BTreeMap<u64, f64> = BTreeMap::new();
    for vertices in sets {
        let region = Region::from_vertices(g, &vertices)?;
        let lambda = dirichlet_p_eigenvalue(&region, p, opts)?.value;
        let measure = region.measure();
        let slot = best.entry(measure.to_bits()).or_insert(f64::INFINITY);
        *slot = slot.min(lambda);
        subsets.push(SubsetEigen {
            vertices,
            measure,
            lambda,
        });
    }
    let raw: Vec<(f64, f64)> = best.into_iter().map(|(v, l)| (f64::from_bits(v), l)).collect();
    let mut envelope = Vec::with_capacity(raw.len());
    let mut running = f64::INFINITY;
    for &(v, l) in &raw {
        running = running.min(l);
        envelope.push((v, running));
    }
    let dim = g.dimension().unwrap_or(1) as f64;
    let profile = FkProfile::from_table(&envelope, p, dim, p / dim, ProfileSource::Bruteforced)?;
    Ok(BruteforceTable {
        subsets,
        raw,
        envelope,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::faberkrahn::rayleigh_quotient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subset_counts_on_lattices() {
        let z1 = GraphGenerator::lattice(1).unwrap();
        // intervals of length k containing 0: k of them
        let sets = connected_subsets(&z1, &z1.origin(), 4).unwrap();
        assert_eq!(sets.len(), 1 + 2 + 3 + 4);
        let z2 = GraphGenerator::lattice(2).unwrap();
        // fixed polyominoes of size k, times k placements of the origin
        let sets = connected_subsets(&z2, &z2.origin(), 4).unwrap();
        assert_eq!(sets.len(), 1 + 2 * 2 + 6 * 3 + 19 * 4);
    }

    #[test]
    fn size_cap_guard() {
        let g = GraphGenerator::lattice(1).unwrap();
        assert!(matches!(connected_subsets(&g, &g.origin(), 0), Err(FkError::SizeCap(0))));
        assert!(matches!(connected_subsets(&g, &g.origin(), 9), Err(FkError::SizeCap(9))));
    }

    #[test]
    fn singleton_table() {
        let g = GraphGenerator::lattice(1).unwrap();
        let t = fk_profile_bruteforce(&g, &g.origin(), 1, 3.0, &EigenOptions::default()).unwrap();
        assert_eq!(t.envelope, vec![(2.0, 2.0)]);
        assert_eq!(t.profile.source(), ProfileSource::Bruteforced);
    }

    #[test]
    fn envelope_nonincreasing_and_dominated_by_quotients() {
        let g = GraphGenerator::lattice(1).unwrap();
        let t = fk_profile_bruteforce(&g, &g.origin(), 5, 3.0, &EigenOptions::default()).unwrap();
        for w in t.envelope.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in &t.subsets {
            let region = Region::from_vertices(&g, &s.vertices).unwrap();
            for _ in 0..20 {
                let vals: Vec<f64> = (0..region.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = Field::from_dense(&region, &vals).unwrap();
                let q = rayleigh_quotient(&region, &f, 3.0).unwrap();
                assert!(t.profile.lambda(s.measure) <= q * (1.0 + 1e-9));
            }
        }
    }
}
