//! Slow-decay data `u0(x) = |x|_1^{-alpha}` on `Z^N` and the balance time
//! `T_{u0}(R)`.

use serde::{Deserialize, Serialize};

use super::{fit_exponent, slow_decay_exponent, BoundCheck, BoundPoint, EstimateError, ExponentFit, Window, MIN_WINDOW};
use crate::faberkrahn::FkProfile;
use crate::field::Field;
use crate::graph::{ball, GraphGenerator};
use crate::solver::Trajectory;

/// Target relative accuracy of tail sums; the hard requirement is 1%.
const TAIL_TARGET: f64 = 1e-9;
const TAIL_REQUIRED: f64 = 1e-2;
const TAIL_MAX_RADIUS: u64 = 1 << 26;

/// Power-law data on `Z^N` centred at the origin. The origin, where the
/// power is undefined, takes `center_value`; the materialized field is cut
/// off beyond `truncation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawData {
    pub dim: usize,
    pub alpha: f64,
    pub center_value: f64,
    pub truncation: u32,
}

/// A tail sum with its certified error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSum {
    pub value: f64,
    pub error_bound: f64,
    /// Outer radius of the directly summed annulus.
    pub annulus: u64,
}

/// Number of points of `Z^N` at l1 norm `k`.
fn sphere_count(dim: usize, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    // sum_j 2^j C(N, j) C(k-1, j-1)
    let mut total = 0.0;
    let mut c_nj = 1.0;
    let mut c_kj = 1.0;
    for j in 1..=dim.min(k as usize) {
        c_nj *= (dim - j + 1) as f64 / j as f64;
        if j > 1 {
            c_kj *= (k as f64 - j as f64 + 1.0) / (j as f64 - 1.0);
        }
        total += 2f64.powi(j as i32) * c_nj * c_kj;
    }
    total
}

impl PowerLawData {
    pub fn new(dim: usize, alpha: f64) -> Self {
        PowerLawData {
            dim,
            alpha,
            center_value: 1.0,
            truncation: 1000,
        }
    }

    /// Value on the sphere of l1 radius `k`.
    pub fn value(&self, k: u64) -> f64 {
        if k == 0 {
            self.center_value
        } else {
            (k as f64).powf(-self.alpha)
        }
    }

    fn degree(&self) -> f64 {
        2.0 * self.dim as f64
    }

    /// The truncated data as a field.
    pub fn field(&self, g: &GraphGenerator) -> Result<Field, EstimateError> {
        if g.dimension() != Some(self.dim) || !matches!(g, GraphGenerator::Lattice { .. }) {
            return Err(EstimateError::Precondition(format!(
                "power-law data needs the lattice Z^{}",
                self.dim
            )));
        }
        let b = ball(g, &g.origin(), self.truncation)?;
        let dist = b.distances().expect("balls carry distances");
        let mut f = Field::new();
        for (x, &d) in b.vertices().iter().zip(dist) {
            f.set(x.clone(), self.value(d as u64)).map_err(crate::solver::SolverError::from)?;
        }
        Ok(f)
    }

    /// `||u0||_{l1(B_R)}` of the untruncated data.
    pub fn l1_ball(&self, r: u32) -> f64 {
        (0..=r as u64)
            .map(|k| sphere_count(self.dim, k) * self.value(k))
            .sum::<f64>()
            * self.degree()
    }

    /// `||u0||^q_{l^q(V \ B_R)}` of the untruncated data: a direct sum over
    /// an annulus plus integral bounds for the rest, the annulus doubling
    /// until the bracket is tight.
    pub fn lq_tail(&self, r: u32, q: f64) -> Result<TailSum, EstimateError> {
        let n = self.dim as f64;
        if !(q > n / self.alpha) {
            return Err(EstimateError::QTooSmall { q, min: n / self.alpha });
        }
        // S(k) = c k^{N-1} exactly for these dimensions
        let c = match self.dim {
            1 => 2.0,
            2 => 4.0,
            d => return Err(EstimateError::TailUnavailable(format!("no closed-form sphere count for N = {d}"))),
        };
        let s = self.alpha * q;
        let m = n - 1.0 - s;
        // int_a^inf c d x^m dx
        let integral = |a: f64| c * self.degree() * a.powf(m + 1.0) / (-(m + 1.0));
        let mut direct = 0.0;
        let mut k0 = r as u64 + 1;
        let mut outer = (2 * r as u64).max(r as u64 + 64);
        loop {
            for k in k0..=outer {
                direct += sphere_count(self.dim, k) * self.value(k).powf(q) * self.degree();
            }
            let hi = integral(outer as f64);
            let lo = integral(outer as f64 + 1.0);
            let value = direct + 0.5 * (hi + lo);
            let error_bound = 0.5 * (hi - lo);
            if error_bound <= TAIL_TARGET * value || outer >= TAIL_MAX_RADIUS {
                if error_bound > TAIL_REQUIRED * value {
                    return Err(EstimateError::TailUnavailable(format!(
                        "tail bracket {error_bound:e} above 1% of {value:e}"
                    )));
                }
                return Ok(TailSum {
                    value,
                    error_bound,
                    annulus: outer,
                });
            }
            k0 = outer + 1;
            outer *= 2;
        }
    }
}

/// Balance time
/// `T(R) = [A / B^q]^{(p-2)/(q-1)} Lambda((A/B)^{q/(q-1)})^{-1}` with
/// `A = ||u0||_{l1(B_R)}` and `B = ||u0||_{l^q(V \ B_R)}`, for data centred
/// at the origin and balls around the origin.
#[allow(non_snake_case)]
pub fn slow_decay_T(data: &PowerLawData, q: f64, r: u32, profile: &FkProfile) -> Result<f64, EstimateError> {
    let p = profile.p();
    let a = data.l1_ball(r);
    let bq = data.lq_tail(r, q)?.value;
    let b = bq.powf(1.0 / q);
    Ok((a / bq).powf((p - 2.0) / (q - 1.0)) / profile.lambda((a / b).powf(q / (q - 1.0))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowDecayOutcome {
    pub bound: BoundCheck,
    pub fit: ExponentFit,
    /// `(t, R(t))`, the smallest radius with `t <= T(R)`.
    pub radii: Vec<(f64, u32)>,
}

/// Sup norm against `A_R psi_1^{-1}(t^{-1} A_R^{-(p-2)})` with `R = R(t)`
/// minimal such that `t <= T(R)`, plus the decay-exponent fit.
pub fn check_slow_decay(
    traj: &Trajectory,
    data: &PowerLawData,
    q: f64,
    profile: &FkProfile,
    window: Window,
    tolerance: f64,
) -> Result<SlowDecayOutcome, EstimateError> {
    if !traj.certified() {
        return Err(EstimateError::Uncertified);
    }
    let p = profile.p();
    let times = window.select_at_least(&traj.times(), MIN_WINDOW)?;
    let r_cap = data.truncation.min(traj.n());
    let t_last = *times.last().expect("nonempty window");
    let mut table: Vec<f64> = Vec::new();
    while table.last().is_none_or(|&t| t < t_last) {
        let r = table.len() as u32;
        if r > r_cap {
            return Err(EstimateError::RadiusExceeded { t: t_last, r, max: r_cap });
        }
        table.push(slow_decay_T(data, q, r, profile)?);
    }
    let mut series = Vec::with_capacity(times.len());
    let mut radii = Vec::with_capacity(times.len());
    let mut sups = Vec::with_capacity(times.len());
    for &t in &times {
        let r = table.partition_point(|&big_t| big_t < t) as u32;
        let a = data.l1_ball(r);
        let rhs = a * profile.psi_inverse(1.0, a.powf(-(p - 2.0)) / t)?;
        let lhs = traj.sup_norm(t)?;
        series.push(BoundPoint { t, lhs, rhs, ratio: lhs / rhs });
        radii.push((t, r));
        sups.push(lhs);
    }
    let mut bound = BoundCheck::from_series("slow_decay", series, traj.n());
    bound.pass = bound.verdict.is_finite();
    let fit = fit_exponent(
        "sup_norm",
        &times,
        &sups,
        window,
        slow_decay_exponent(data.alpha, p),
        tolerance,
    )?;
    Ok(SlowDecayOutcome { bound, fit, radii })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_counts() {
        assert_eq!(sphere_count(1, 0), 1.0);
        assert_eq!(sphere_count(1, 5), 2.0);
        for k in 1..20 {
            assert_eq!(sphere_count(2, k), 4.0 * k as f64);
        }
        // Z^3: 4k^2 + 2
        for k in 1..20u64 {
            assert_eq!(sphere_count(3, k), (4 * k * k + 2) as f64);
        }
    }

    #[test]
    fn sphere_counts_match_enumeration() {
        let g = GraphGenerator::lattice(3).unwrap();
        let b = ball(&g, &g.origin(), 6).unwrap();
        let d = b.distances().unwrap();
        for k in 0..=6u32 {
            let n = d.iter().filter(|&&x| x == k).count() as f64;
            assert_eq!(n, sphere_count(3, k as u64));
        }
    }

    #[test]
    fn q_below_threshold_rejected() {
        let data = PowerLawData::new(1, 0.5);
        assert!(matches!(data.lq_tail(3, 2.0), Err(EstimateError::QTooSmall { .. })));
        assert!(matches!(data.lq_tail(3, 1.5), Err(EstimateError::QTooSmall { .. })));
        let data2 = PowerLawData::new(2, 0.5);
        assert!(matches!(data2.lq_tail(3, 3.9), Err(EstimateError::QTooSmall { .. })));
    }

    #[test]
    fn tail_bracket_is_tight_and_contains_a_longer_sum() {
        let data = PowerLawData::new(1, 0.5);
        let t = data.lq_tail(10, 4.0).unwrap();
        assert!(t.error_bound <= 1e-9 * t.value);
        // sum_{k>10} 2 * 2 k^{-2} = 4 (pi^2/6 - H_10^{(2)})
        let h: f64 = (1..=10).map(|k| 1.0 / (k * k) as f64).sum();
        let exact = 4.0 * (std::f64::consts::PI.powi(2) / 6.0 - h);
        assert!((t.value - exact).abs() <= t.error_bound + 1e-14);
    }

    #[test]
    fn balance_time_is_nondecreasing_and_unbounded() {
        let data = PowerLawData::new(1, 0.5);
        let prof = FkProfile::lattice(1, 3.0, 1.0).unwrap();
        let ts: Vec<f64> = (0..60).map(|r| slow_decay_T(&data, 4.0, r, &prof).unwrap()).collect();
        assert!(ts.windows(2).all(|w| w[1] >= w[0]));
        assert!(ts[59] > 1e6 * ts[1]);
    }
}
