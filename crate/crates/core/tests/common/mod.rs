//! Independent oracles for the integration tests. Nothing here calls the
//! library's numerical routines; only the graph neighbor oracle is shared.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use graphflow::{GraphGenerator, VertexId};

/// Distances from `x0` up to `r_max` by plain breadth-first search.
pub fn bfs_distances(g: &GraphGenerator, x0: &VertexId, r_max: u32) -> BTreeMap<VertexId, u32> {
    let mut dist = BTreeMap::from([(x0.clone(), 0u32)]);
    let mut queue = VecDeque::from([x0.clone()]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == r_max {
            continue;
        }
        for (y, _) in g.neighbors(&x).unwrap() {
            if !dist.contains_key(&y) {
                dist.insert(y.clone(), d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// `sum_{x,y in V} |f(y) - f(x)|^p w(x,y) / sum_x |f(x)|^p d(x)` for `f`
/// given on `set` and zero elsewhere.
pub fn quotient(g: &GraphGenerator, set: &[VertexId], f: &[f64], p: f64) -> f64 {
    let index: BTreeMap<&VertexId, usize> = set.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut energy = 0.0;
    let mut norm = 0.0;
    for (i, x) in set.iter().enumerate() {
        for (y, w) in g.neighbors(x).unwrap() {
            match index.get(&y) {
                // the pair (y, x) is visited from y
                Some(&j) => energy += (f[j] - f[i]).abs().powf(p) * w,
                // (x, y) and (y, x)
                None => energy += 2.0 * f[i].abs().powf(p) * w,
            }
            norm += f[i].abs().powf(p) * w;
        }
    }
    energy / norm
}

/// Dirichlet p-eigenvalue of a set of at most 3 vertices by exhaustive
/// search: the largest entry is pinned to 1 and the others range over
/// `[0, 1]` with step `h`. Taking absolute values never raises the
/// quotient, so nonnegative fields suffice.
pub fn grid_eigenvalue(g: &GraphGenerator, set: &[VertexId], p: f64, h: f64) -> f64 {
    assert!((1..=3).contains(&set.len()), "oracle handles 1 to 3 vertices");
    let k = set.len();
    // internal ordered pairs, exterior weight and degree per vertex
    let mut inner: Vec<(usize, usize, f64)> = Vec::new();
    let mut ext = vec![0.0; k];
    let mut deg = vec![0.0; k];
    for (i, x) in set.iter().enumerate() {
        for (y, w) in g.neighbors(x).unwrap() {
            match set.iter().position(|z| *z == y) {
                Some(j) => inner.push((i, j, w)),
                None => ext[i] += w,
            }
            deg[i] += w;
        }
    }
    let q = |f: &[f64]| {
        let mut e = 0.0;
        for &(i, j, w) in &inner {
            e += (f[j] - f[i]).abs().powf(p) * w;
        }
        let mut n = 0.0;
        for i in 0..k {
            let a = f[i].abs().powf(p);
            e += 2.0 * ext[i] * a;
            n += deg[i] * a;
        }
        e / n
    };
    let m = (1.0 / h).round() as usize;
    let steps: Vec<f64> = (0..=m).map(|s| s as f64 / m as f64).collect();
    let mut best = f64::INFINITY;
    for pin in 0..k {
        let others: Vec<usize> = (0..k).filter(|&i| i != pin).collect();
        let mut f = vec![0.0; k];
        f[pin] = 1.0;
        match others.len() {
            0 => best = best.min(q(&f)),
            1 => {
                for &a in &steps {
                    f[others[0]] = a;
                    best = best.min(q(&f));
                }
            }
            _ => {
                for &a in &steps {
                    f[others[0]] = a;
                    for &b in &steps {
                        f[others[1]] = b;
                        best = best.min(q(&f));
                    }
                }
            }
        }
    }
    best
}

/// Connected vertex sets of size `1..=k` containing `base`, by closure
/// under single-vertex extension.
pub fn small_connected_sets(g: &GraphGenerator, base: &VertexId, k: usize) -> Vec<Vec<VertexId>> {
    let mut layer: BTreeSet<Vec<VertexId>> = BTreeSet::from([vec![base.clone()]]);
    let mut all: Vec<Vec<VertexId>> = layer.iter().cloned().collect();
    for _ in 1..k {
        let mut next = BTreeSet::new();
        for s in &layer {
            for x in s {
                for (y, _) in g.neighbors(x).unwrap() {
                    if !s.contains(&y) {
                        let mut t = s.clone();
                        t.push(y);
                        t.sort();
                        next.insert(t);
                    }
                }
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

/// Balance time of the data `|x|^{-alpha}` on `Z^1` (value `center` at the
/// origin) with the profile `c0 v^{-p}`, every norm summed vertex by vertex.
/// The `l^q` tail is summed out to `outer` and again to `2 * outer`; both
/// results are returned.
pub fn balance_time_z1(alpha: f64, center: f64, q: f64, p: f64, c0: f64, r: u64, outer: u64) -> (f64, f64) {
    let u = |x: i64| if x == 0 { center } else { (x.unsigned_abs() as f64).powf(-alpha) };
    let deg = 2.0;
    let a: f64 = (-(r as i64)..=r as i64).map(|x| u(x) * deg).sum();
    let tail = |k_max: u64| -> f64 {
        // both signs of x; summed from the far end for accuracy
        (r + 1..=k_max).rev().map(|k| 2.0 * u(k as i64).powf(q) * deg).sum()
    };
    let time = |bq: f64| {
        let b = bq.powf(1.0 / q);
        let v = (a / b).powf(q / (q - 1.0));
        (a / bq).powf((p - 2.0) / (q - 1.0)) / (c0 * v.powf(-p))
    };
    (time(tail(outer)), time(tail(2 * outer)))
}
