//! Grid checks of the structural assumptions on a profile, ball-radius
//! inversion and the pointwise bound from an `l^q` norm.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{FkError, FkProfile};
use crate::graph::{GraphGenerator, VertexId};

/// Relative slack for monotonicity tests on evaluated profiles. Closed-form
/// power laws make several of the checked quantities constant, so only
/// roundoff separates them from equality.
pub const ASSUMPTION_ROUNDOFF: f64 = 1e-12;

const MIN_GRID: usize = 100;

/// `n` points log-spaced on `[a, b]`, endpoints exact.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..n)
                .map(|k| match k {
                    0 => a,
                    k if k == n - 1 => b,
                    k => (la + (lb - la) * k as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Largest relative violation (0 when none).
    pub worst_violation: f64,
    /// Grid value of `v` where the worst violation occurs.
    pub location: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub extended_evaluations: usize,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Worst {
    name: &'static str,
    excess: f64,
    at: Option<f64>,
}

impl Worst {
    fn new(name: &'static str) -> Self {
        Worst {
            name,
            excess: 0.0,
            at: None,
        }
    }

    /// Record `lhs <= rhs` at `v`.
    fn le(&mut self, lhs: f64, rhs: f64, v: f64) {
        let excess = if lhs.is_nan() || rhs.is_nan() {
            f64::INFINITY
        } else if lhs <= rhs {
            0.0
        } else {
            (lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE)
        };
        if excess > self.excess {
            self.excess = excess;
            self.at = Some(v);
        }
    }

    fn finish(self) -> AssumptionCheck {
        AssumptionCheck {
            name: self.name,
            pass: self.excess <= ASSUMPTION_ROUNDOFF,
            worst_violation: self.excess,
            location: self.at,
        }
    }
}

/// Check on `grid` (sorted, at least 100 points): positivity, `Lambda`
/// nonincreasing, `Lambda(v)^{-1} v^{-p/N}` nondecreasing (`nd`),
/// `Lambda(v)^{-1} v^{-omega}` nonincreasing (`ni`), and their two
/// consequences over all grid pairs (`above`, `below`).
pub fn check_assumptions(profile: &FkProfile, grid: &[f64]) -> Result<AssumptionReport, FkError> {
    if grid.len() < MIN_GRID {
        return Err(FkError::Grid {
            min: MIN_GRID,
            got: grid.len(),
        });
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let before = profile.extended_hits();
    let (p, n, om) = (profile.p(), profile.dim(), profile.omega_exp());
    let lam: Vec<f64> = grid.iter().map(|&v| profile.lambda(v)).collect();
    let inv: Vec<f64> = lam.iter().map(|l| 1.0 / l).collect();

    let mut pos = Worst::new("positive");
    let mut dec = Worst::new("nonincreasing");
    let mut nd = Worst::new("nd");
    let mut ni = Worst::new("ni");
    let mut above = Worst::new("above");
    let mut below = Worst::new("below");
    // monotonicity is measured against the running extreme, so a violation
    // is located where the offending extreme sits
    let mut lam_min = (f64::INFINITY, grid[0]);
    let mut nd_max = (f64::NEG_INFINITY, grid[0]);
    let mut ni_min = (f64::INFINITY, grid[0]);
    for k in 0..grid.len() {
        let v = grid[k];
        if !(lam[k] > 0.0 && lam[k].is_finite()) {
            pos.excess = f64::INFINITY;
            pos.at.get_or_insert(v);
        }
        if k > 0 {
            dec.le(lam[k], lam_min.0, lam_min.1);
        }
        let h_nd = inv[k] * v.powf(-p / n);
        let h_ni = inv[k] * v.powf(-om);
        if k > 0 {
            nd.le(nd_max.0, h_nd, nd_max.1);
            ni.le(h_ni, ni_min.0, ni_min.1);
        }
        if lam[k] < lam_min.0 {
            lam_min = (lam[k], v);
        }
        if h_nd > nd_max.0 {
            nd_max = (h_nd, v);
        }
        if h_ni < ni_min.0 {
            ni_min = (h_ni, v);
        }
        // pairs (a, s a) with s >= 1 and (a, sigma a) with sigma <= 1
        for j in 0..grid.len() {
            let ratio = grid[j] / grid[k];
            if j >= k {
                above.le(inv[j], ratio.powf(om) * inv[k], grid[j]);
            }
            if j <= k {
                below.le(inv[j], ratio.powf(p / n) * inv[k], grid[j]);
            }
        }
    }
    Ok(AssumptionReport {
        checks: vec![
            pos.finish(),
            dec.finish(),
            nd.finish(),
            ni.finish(),
            above.finish(),
            below.finish(),
        ],
        extended_evaluations: profile.extended_hits() - before,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub pass: bool,
    /// Largest relative drop between consecutive grid points.
    pub worst_drop: f64,
    pub location: Option<f64>,
    pub values: Vec<(f64, f64)>,
}

/// `tau -> tau^nu psi_1^{-1}(b/tau)^{(p-2)/(p-1)}` on `taus`, with
/// `nu = N(p-2)/((N(p-2)+p)(p-1))`; passes when nondecreasing up to
/// `rel_tol`.
pub fn dcf_monotonicity_check(
    profile: &FkProfile,
    b: f64,
    taus: &[f64],
    rel_tol: f64,
) -> Result<MonotoneReport, FkError> {
    let (p, n) = (profile.p(), profile.dim());
    let nu = n * (p - 2.0) / ((n * (p - 2.0) + p) * (p - 1.0));
    let mut values = Vec::with_capacity(taus.len());
    for &tau in taus {
        let s = profile.psi_inverse(1.0, b / tau)?;
        values.push((tau, tau.powf(nu) * s.powf((p - 2.0) / (p - 1.0))));
    }
    let mut worst = 0.0;
    let mut location = None;
    for w in values.windows(2) {
        let drop = (w[0].1 - w[1].1) / w[0].1;
        if drop > worst {
            worst = drop;
            location = Some(w[1].0);
        }
    }
    Ok(MonotoneReport {
        pass: worst <= rel_tol,
        worst_drop: worst,
        location,
        values,
    })
}

/// Minimal `R` with `mu(B_R(x0)) >= v`.
pub fn ball_radius_inverse(g: &GraphGenerator, x0: &VertexId, v: f64) -> Result<u32, FkError> {
    let mut seen = BTreeSet::new();
    seen.insert(x0.clone());
    let mut frontier = vec![x0.clone()];
    let mut measure = g.degree(x0)?;
    let mut r = 0;
    while measure < v {
        let mut next = Vec::new();
        for x in &frontier {
            for (y, _) in g.neighbors(x)? {
                if seen.insert(y.clone()) {
                    measure += g.degree(&y)?;
                    next.push(y);
                }
            }
        }
        if next.is_empty() {
            return Err(FkError::Saturated(measure));
        }
        frontier = next;
        r += 1;
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallGammaSample {
    pub s: f64,
    pub radius: f64,
    pub measure: f64,
    /// `mu(B_floor(R)) psi_1^{-1}(1/s)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallGammaReport {
    pub c: f64,
    pub samples: Vec<BallGammaSample>,
    /// Empirical `gamma(c)`: the largest ratio.
    pub gamma: f64,
    /// `(max - min) / (max + min)`: half-width of the ratio band relative to
    /// its midpoint.
    pub spread: f64,
}

/// Ball-measure bound: with `R^p = c s psi_1^{-1}(1/s)^{p-2}`, the ratio of
/// `mu(B_floor(R))` to `psi_1^{-1}(1/s)^{-1}` over the `s` grid.
pub fn ball_gamma_check(
    g: &GraphGenerator,
    x0: &VertexId,
    profile: &FkProfile,
    c: f64,
    s_grid: &[f64],
) -> Result<BallGammaReport, FkError> {
    let p = profile.p();
    let mut pts = Vec::with_capacity(s_grid.len());
    let mut r_max = 0u32;
    for &s in s_grid {
        let tau = profile.psi_inverse(1.0, 1.0 / s)?;
        let radius = (c * s * tau.powf(p - 2.0)).powf(1.0 / p);
        r_max = r_max.max(radius.floor() as u32);
        pts.push((s, tau, radius));
    }
    let measures = crate::graph::ball_measures(g, x0, r_max)?;
    let samples: Vec<BallGammaSample> = pts
        .into_iter()
        .map(|(s, tau, radius)| {
            let measure = measures[radius.floor() as usize];
            BallGammaSample {
                s,
                radius,
                measure,
                ratio: measure * tau,
            }
        })
        .collect();
    let hi = samples.iter().map(|x| x.ratio).fold(f64::NEG_INFINITY, f64::max);
    let lo = samples.iter().map(|x| x.ratio).fold(f64::INFINITY, f64::min);
    Ok(BallGammaReport {
        c,
        samples,
        gamma: hi,
        spread: (hi - lo) / (hi + lo),
    })
}

/// Pointwise bound `Lambda^{-1}(2)^{-1/q} ||f||_q` implied by the
/// single-vertex Faber-Krahn pair.
pub fn lp_linf_bound(profile: &FkProfile, q: f64, lq_norm: f64) -> Result<f64, FkError> {
    let v2 = profile
        .lambda_inverse(2.0)
        .ok_or_else(|| FkError::Profile("profile stays below 2".into()))?;
    Ok(v2.powf(-1.0 / q) * lq_norm)
}
