//! Property suites for the structural invariants of each module.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graphflow::faberkrahn::{fk_profile_bruteforce, EigenOptions, FkProfile};
use graphflow::graph::{ball, ball_measures, distance, Cutoff, FiniteGraph};
use graphflow::plaplacian::{apply_plaplacian, dirichlet_energy};
use graphflow::solver::{solve_cauchy, SolverConfig};
use graphflow::{Field, GraphGenerator, Region, VertexId};

use common::{bfs_distances, quotient};

fn graphs() -> Vec<GraphGenerator> {
    let path = FiniteGraph::from_edges(&[("a", "b", 1.0), ("b", "c", 2.5)]).unwrap();
    vec![
        GraphGenerator::lattice(1).unwrap(),
        GraphGenerator::lattice(2).unwrap(),
        GraphGenerator::lattice(3).unwrap(),
        GraphGenerator::product(FiniteGraph::complete(2).unwrap(), 1).unwrap(),
        GraphGenerator::product(path, 2).unwrap(),
    ]
}

fn vertex_in(g: &GraphGenerator, coords: &[i64]) -> VertexId {
    let origin = g.origin();
    let mut c: Vec<i64> = origin.coords().to_vec();
    let offset = c.len() - g.dimension().unwrap();
    for (k, v) in c.iter_mut().enumerate().skip(offset) {
        *v = coords[k % coords.len()];
    }
    if offset == 1 {
        c[0] = coords[0].rem_euclid(2);
    }
    VertexId::new(&c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbor_lists_are_symmetric(gi in 0usize..5, coords in prop::collection::vec(-50i64..50, 3)) {
        let g = &graphs()[gi];
        let x = vertex_in(g, &coords);
        for (y, w) in g.neighbors(&x).unwrap() {
            prop_assert!(w > 0.0);
            prop_assert!(y != x);
            let back = g.neighbors(&y).unwrap();
            prop_assert_eq!(back.iter().filter(|(z, _)| *z == x).map(|(_, v)| *v).collect::<Vec<_>>(), vec![w]);
        }
    }

    #[test]
    fn lattice_distance_is_l1(dim in 1usize..4, coords in prop::collection::vec(-7i64..7, 3)) {
        let g = GraphGenerator::lattice(dim).unwrap();
        let x = VertexId::new(&coords[..dim]);
        let l1: i64 = coords[..dim].iter().map(|c| c.abs()).sum();
        prop_assume!(l1 <= 20);
        let d = distance(&g, &g.origin(), &x, 25).unwrap().exact();
        prop_assert_eq!(d, Some(l1 as u32));
    }

    #[test]
    fn balls_are_symmetric_and_measured(gi in 0usize..5, r in 0u32..6) {
        let g = &graphs()[gi];
        let b = ball(g, &g.origin(), r).unwrap();
        prop_assert_eq!(b.asymmetry_residual(), 0.0);
        let oracle = bfs_distances(g, &g.origin(), r);
        prop_assert_eq!(b.len(), oracle.len());
        let measure: f64 = oracle.keys().map(|x| g.degree(x).unwrap()).sum();
        prop_assert!((b.measure() - measure).abs() <= 1e-12 * measure);
        let dist = b.distances().unwrap();
        for (x, d) in b.vertices().iter().zip(dist) {
            prop_assert_eq!(oracle[x], *d);
        }
    }

    #[test]
    fn constant_fields_have_zero_interior_laplacian(c in -5.0f64..5.0, p in 2.1f64..6.0, gi in 0usize..5) {
        let g = &graphs()[gi];
        let b = ball(g, &g.origin(), 3).unwrap();
        let u = Field::indicator(b.vertices(), c).unwrap_or_default();
        let inner = ball(g, &g.origin(), 2).unwrap();
        for x in inner.vertices() {
            prop_assert_eq!(apply_plaplacian(g, &u, p, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn psi_is_strictly_increasing(dim in 1usize..4, p in 2.1f64..6.0, r in 1.0f64..4.0, s in -6.0f64..6.0) {
        let prof = FkProfile::lattice(dim, p, 1.0).unwrap();
        let s = 10f64.powf(s);
        prop_assert!(prof.psi(r, s * 1.001) > prof.psi(r, s));
    }

    #[test]
    fn energy_matches_oracle_quotient(seed in 0u64..1000, p in 2.1f64..5.0) {
        let g = GraphGenerator::lattice(2).unwrap();
        let region = ball(&g, &g.origin(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..region.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = Field::from_dense(&region, &vals).unwrap();
        let norm: f64 = vals.iter().zip(region.degrees()).map(|(v, d)| v.abs().powf(p) * d).sum();
        let lib = dirichlet_energy(&f, p, &region).unwrap() / norm;
        let oracle = quotient(&g, region.vertices(), &vals, p);
        prop_assert!((lib - oracle).abs() <= 1e-12 * oracle);
    }
}

#[test]
fn z1_ball_measures() {
    let g = GraphGenerator::lattice(1).unwrap();
    let m = ball_measures(&g, &g.origin(), 50).unwrap();
    for (r, v) in m.iter().enumerate() {
        assert_eq!(*v, 2.0 * (2.0 * r as f64 + 1.0));
    }
}

#[test]
fn cutoff_is_edge_lipschitz() {
    for g in graphs() {
        for (r1, r2) in [(0, 1), (1, 3), (2, 5)] {
            let zeta = Cutoff::new(g.origin(), r1, r2).unwrap();
            let b = ball(&g, &g.origin(), r2 + 1).unwrap();
            for x in b.vertices() {
                let zx = zeta.value(&g, x).unwrap();
                let d = bfs_distances(&g, &g.origin(), r2 + 2)[x];
                if d <= r1 {
                    assert_eq!(zx, 1.0);
                }
                if d >= r2 {
                    assert_eq!(zx, 0.0);
                }
                for (y, _) in g.neighbors(x).unwrap() {
                    let gap = (zeta.value(&g, &y).unwrap() - zx).abs();
                    assert!(gap <= zeta.lipschitz_bound() + 1e-15);
                }
            }
        }
    }
}

/// The brute-forced table lies below every Rayleigh quotient tried on a
/// subset of the matching measure.
#[test]
fn bruteforce_table_dominated_by_sampled_quotients() {
    let p = 3.0;
    let opts = EigenOptions {
        seed: 3,
        ..EigenOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for g in [GraphGenerator::lattice(1).unwrap(), GraphGenerator::lattice(2).unwrap()] {
        let table = fk_profile_bruteforce(&g, &g.origin(), 4, p, &opts).unwrap();
        for s in &table.subsets {
            let lam = table.profile.lambda(s.measure);
            for _ in 0..50 {
                let f: Vec<f64> = s.vertices.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
                assert!(lam <= quotient(&g, &s.vertices, &f, p) * (1.0 + 1e-12));
            }
        }
    }
}

/// Successive truncations agree better as the radius grows, and the
/// stored instants are the configured ones.
#[test]
fn truncation_differences_decrease() {
    let g = GraphGenerator::lattice(1).unwrap();
    let u0 = Field::delta(g.origin(), 1.0).unwrap();
    let times = graphflow::faberkrahn::log_grid(0.1, 300.0, 30);
    let mut cfg = SolverConfig::new(3.0, times.clone());
    cfg.n0 = 4;
    cfg.eps_trunc = 1e-12;
    let traj = solve_cauchy(&g, &u0, &cfg).unwrap();
    assert_eq!(traj.times(), times);
    let diffs: Vec<f64> = traj.history().iter().filter_map(|h| h.diff).collect();
    assert!(diffs.len() >= 2, "{:?}", traj.history());
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}

#[test]
fn regions_cache_full_graph_degrees() {
    for g in graphs() {
        let b = ball(&g, &g.origin(), 2).unwrap();
        let r = Region::from_vertices(&g, b.vertices()).unwrap();
        for (i, x) in r.vertices().iter().enumerate() {
            assert_eq!(r.degree(i), g.degree(x).unwrap());
        }
    }
}
