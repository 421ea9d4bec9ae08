//! The discrete p-Laplacian
//!
//! ```text
//! Delta_p u(x) = d_w(x)^-1 sum_y |u(y) - u(x)|^{p-2} (u(y) - u(x)) w(x,y)
//! ```
//!
//! together with Dirichlet p-energies, the summation-by-parts identity and
//! the elementary monotonicity inequality used in the energy estimates.

use thiserror::Error;

use crate::field::{Field, FieldError};
use crate::graph::{GraphError, GraphGenerator, Region, VertexId};

#[derive(Debug, Error)]
pub enum PLaplacianError {
    #[error("exponent p must exceed 2, got {0}")]
    Exponent(f64),
    #[error("field is nonzero at {0}, outside the region")]
    OutsideRegion(String),
    #[error("monotonicity check needs a > b > 0, q > 0, p > 2 (a={a}, b={b}, q={q}, p={p})")]
    Domain { a: f64, b: f64, q: f64, p: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub fn check_exponent(p: f64) -> Result<(), PLaplacianError> {
    if p.is_finite() && p > 2.0 {
        Ok(())
    } else {
        Err(PLaplacianError::Exponent(p))
    }
}

/// `|s|^{p-2} s`, with the continuous value 0 at `s = 0`.
#[inline]
pub fn flux(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else if p == 3.0 {
        s.abs() * s
    } else if p == 4.0 {
        s * s * s
    } else {
        s.signum() * s.abs().powf(p - 1.0)
    }
}

/// `|s|^p`.
#[inline]
pub fn abs_pow(s: f64, p: f64) -> f64 {
    if p == 3.0 {
        let a = s.abs();
        a * a * a
    } else if p == 4.0 {
        let s2 = s * s;
        s2 * s2
    } else {
        s.abs().powf(p)
    }
}

/// `Delta_p u(x)` evaluated over the full neighbor list of `x`.
pub fn apply_plaplacian(
    g: &GraphGenerator,
    u: &Field,
    p: f64,
    x: &VertexId,
) -> Result<f64, PLaplacianError> {
    check_exponent(p)?;
    let ux = u.get(x);
    let mut sum = 0.0;
    let mut deg = 0.0;
    for (y, w) in g.neighbors(x)? {
        sum += flux(u.get(&y) - ux, p) * w;
        deg += w;
    }
    Ok(sum / deg)
}

/// `Delta_p` restricted to a region with zero exterior values, on dense
/// vectors aligned with the region's vertex order. This is the right-hand
/// side of the truncated ODE system.
#[derive(Debug, Clone)]
pub struct DenseOperator<'a> {
    region: &'a Region,
    p: f64,
}

impl<'a> DenseOperator<'a> {
    pub fn new(region: &'a Region, p: f64) -> Result<Self, PLaplacianError> {
        check_exponent(p)?;
        Ok(DenseOperator { region, p })
    }

    pub fn region(&self) -> &Region {
        self.region
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `out[i] = Delta_p u (x_i)`. Each inner edge flux is evaluated once
    /// and applied with opposite signs at both ends.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let r = self.region;
        let p = self.p;
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..r.len() {
            let ui = u[i];
            let mut acc = out[i];
            for &(j, w) in r.inner_neighbors(i) {
                if j > i {
                    let f = flux(u[j] - ui, p) * w;
                    acc += f;
                    out[j] -= f;
                }
            }
            let ow = r.outer_weight(i);
            if ow > 0.0 {
                acc += flux(-ui, p) * ow;
            }
            out[i] = acc;
        }
        for (o, d) in out.iter_mut().zip(r.degrees()) {
            *o /= d;
        }
    }

    /// `sum_{x,y} |D_y u(x)|^{p-1} w(x,y)` over ordered pairs with at least
    /// one endpoint in the region; exterior values are zero.
    pub fn gradient_mass(&self, u: &[f64]) -> f64 {
        let r = self.region;
        let mut s = 0.0;
        for i in 0..r.len() {
            for &(j, w) in r.inner_neighbors(i) {
                s += flux(u[j] - u[i], self.p).abs() * w;
            }
            s += 2.0 * flux(u[i], self.p).abs() * r.outer_weight(i);
        }
        s
    }
}

/// Dirichlet p-energy `sum_{x,y in (U)_1} |f(y) - f(x)|^p w(x,y)` over
/// ordered pairs, so every undirected edge is counted twice.
///
/// The region carries the full-graph adjacency of its vertices, so no graph
/// handle is needed.
pub fn dirichlet_energy(f: &Field, p: f64, region: &Region) -> Result<f64, PLaplacianError> {
    if let Some(x) = f.support().find(|x| !region.contains(x)) {
        return Err(PLaplacianError::OutsideRegion(format!("{x:?}")));
    }
    Ok(dense_energy(region, &f.to_dense(region), p))
}

/// Dirichlet energy of dense values on a region with zero exterior.
pub fn dense_energy(region: &Region, f: &[f64], p: f64) -> f64 {
    let mut e = 0.0;
    for i in 0..region.len() {
        for &(j, w) in region.inner_neighbors(i) {
            e += abs_pow(f[j] - f[i], p) * w;
        }
        e += 2.0 * abs_pow(f[i], p) * region.outer_weight(i);
    }
    e
}

/// Outcome of the summation-by-parts identity
/// `sum_{x,y} phi(D_y u(x)) f(x) w = -1/2 sum_{x,y} phi(D_y u(x)) D_y f(x) w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbpResidual {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs|`.
    pub residual: f64,
    /// Sum of absolute values of all terms on both sides.
    pub scale: f64,
}

impl SbpResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.residual / self.scale
        }
    }
}

pub fn summation_by_parts_residual(
    g: &GraphGenerator,
    u: &Field,
    f: &Field,
    p: f64,
) -> Result<SbpResidual, PLaplacianError> {
    check_exponent(p)?;
    let mut lhs = 0.0;
    let mut scale = 0.0;
    for (x, fx) in f.iter() {
        let ux = u.get(x);
        for (y, w) in g.neighbors(x)? {
            let t = flux(u.get(&y) - ux, p) * fx * w;
            lhs += t;
            scale += t.abs();
        }
    }
    // pairs where D_y f(x) can be nonzero: x in supp f or adjacent to it
    let mut hull: Vec<VertexId> = Vec::new();
    for x in f.support() {
        hull.push(x.clone());
        for (y, _) in g.neighbors(x)? {
            hull.push(y);
        }
    }
    hull.sort();
    hull.dedup();
    let mut rhs = 0.0;
    for x in &hull {
        let (ux, fx) = (u.get(x), f.get(x));
        for (y, w) in g.neighbors(x)? {
            let t = -0.5 * flux(u.get(&y) - ux, p) * (f.get(&y) - fx) * w;
            rhs += t;
            scale += t.abs();
        }
    }
    Ok(SbpResidual {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        scale,
    })
}

/// `gamma(q, p) = ((q - 1 + p) / p)^p / q`.
pub fn monotonicity_constant(q: f64, p: f64) -> f64 {
    ((q - 1.0 + p) / p).powf(p) / q
}

/// Both sides of
/// `(a^m - b^m)^p <= gamma(q,p) (a^q - b^q)(a - b)^{p-1}`, `m = (q-1+p)/p`.
pub fn monotonicity_sides(a: f64, b: f64, q: f64, p: f64) -> Result<(f64, f64), PLaplacianError> {
    if !(a > b && b > 0.0 && q > 0.0 && p > 2.0 && a.is_finite() && q.is_finite() && p.is_finite()) {
        return Err(PLaplacianError::Domain { a, b, q, p });
    }
    let m = (q - 1.0 + p) / p;
    // a^k - b^k = b^k expm1(k ln(a/b)) avoids cancellation as a -> b,
    // where the two sides agree to leading order
    let d = a - b;
    let l = (d / b).ln_1p();
    let lhs = (b.powf(m) * (m * l).exp_m1()).powf(p);
    let rhs = monotonicity_constant(q, p) * b.powf(q) * (q * l).exp_m1() * d.powf(p - 1.0);
    Ok((lhs, rhs))
}

/// Relative slack granted to the floating-point evaluation of both sides;
/// the inequality is an equality at `q = 1`.
pub const MONOTONICITY_ROUNDOFF: f64 = 1e-12;

pub fn monotonicity_check(a: f64, b: f64, q: f64, p: f64) -> Result<bool, PLaplacianError> {
    let (lhs, rhs) = monotonicity_sides(a, b, q, p)?;
    Ok(lhs <= rhs * (1.0 + MONOTONICITY_ROUNDOFF))
}
