use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::FkError;

/// Where a profile came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    ClosedForm,
    Tabulated,
    Bruteforced,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// `Lambda(v) = c0 v^{-p/N}`.
    Power { c0: f64 },
    /// Piecewise linear in `(ln v, ln Lambda)`.
    Table {
        raw: Vec<(f64, f64)>,
        log_v: Vec<f64>,
        log_l: Vec<f64>,
    },
}

/// A Faber-Krahn function `v -> Lambda_p(v)` together with the exponents
/// `p`, `N` and the growth exponent `omega_exp` used by the structural
/// assumptions.
///
/// Tabulated profiles are extended outside their table: by the constant
/// `Lambda(v_min)` below the first entry, and by the last log-log segment
/// above the last one. Every evaluation in an extended range is counted, see
/// [`FkProfile::extended_hits`].
#[derive(Debug)]
pub struct FkProfile {
    p: f64,
    dim: f64,
    omega_exp: f64,
    shape: Shape,
    source: ProfileSource,
    extended_hits: AtomicUsize,
}

impl Clone for FkProfile {
    fn clone(&self) -> Self {
        FkProfile {
            p: self.p,
            dim: self.dim,
            omega_exp: self.omega_exp,
            shape: self.shape.clone(),
            source: self.source,
            extended_hits: AtomicUsize::new(self.extended_hits.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for FkProfile {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.dim == other.dim
            && self.omega_exp == other.omega_exp
            && self.shape == other.shape
            && self.source == other.source
    }
}

/// JSON form of a closed-form lattice profile.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormJson {
    pub c0: f64,
    #[serde(rename = "N")]
    pub dim: f64,
    pub p: f64,
}

fn check_p(p: f64) -> Result<(), FkError> {
    if p.is_finite() && p > 2.0 {
        Ok(())
    } else {
        Err(FkError::Exponent(p))
    }
}

impl FkProfile {
    /// Lattice profile `Lambda(v) = c0 v^{-p/N}`, with `omega_exp = p/N`.
    pub fn lattice(dim: usize, p: f64, c0: f64) -> Result<Self, FkError> {
        check_p(p)?;
        if dim == 0 {
            return Err(FkError::Profile("dimension must be positive".into()));
        }
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(FkError::Profile(format!("c0 must be positive, got {c0}")));
        }
        let dim = dim as f64;
        Ok(FkProfile {
            p,
            dim,
            omega_exp: p / dim,
            shape: Shape::Power { c0 },
            source: ProfileSource::ClosedForm,
            extended_hits: AtomicUsize::new(0),
        })
    }

    /// Tabulated profile from `(v, Lambda)` pairs with strictly increasing
    /// positive `v` and positive `Lambda`.
    pub fn tabulated(
        table: &[(f64, f64)],
        p: f64,
        dim: f64,
        omega_exp: f64,
    ) -> Result<Self, FkError> {
        Self::from_table(table, p, dim, omega_exp, ProfileSource::Tabulated)
    }

    pub(crate) fn from_table(
        table: &[(f64, f64)],
        p: f64,
        dim: f64,
        omega_exp: f64,
        source: ProfileSource,
    ) -> Result<Self, FkError> {
        check_p(p)?;
        if table.is_empty() {
            return Err(FkError::Profile("empty table".into()));
        }
        if !(dim > 0.0 && omega_exp > 0.0) {
            return Err(FkError::Profile("N and omega_exp must be positive".into()));
        }
        for w in table.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(FkError::Profile(format!(
                    "table abscissae must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(v, l)) = table
            .iter()
            .find(|(v, l)| !(v.is_finite() && *v > 0.0 && l.is_finite() && *l > 0.0))
        {
            return Err(FkError::Profile(format!("non-positive entry ({v}, {l})")));
        }
        Ok(FkProfile {
            p,
            dim,
            omega_exp,
            shape: Shape::Table {
                raw: table.to_vec(),
                log_v: table.iter().map(|e| e.0.ln()).collect(),
                log_l: table.iter().map(|e| e.1.ln()).collect(),
            },
            source,
            extended_hits: AtomicUsize::new(0),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The exponent `N` of the lower growth assumption.
    pub fn dim(&self) -> f64 {
        self.dim
    }

    pub fn omega_exp(&self) -> f64 {
        self.omega_exp
    }

    pub fn with_omega_exp(mut self, omega_exp: f64) -> Self {
        self.omega_exp = omega_exp;
        self
    }

    pub fn source(&self) -> ProfileSource {
        self.source
    }

    /// Table entries, for tabulated profiles.
    pub fn table(&self) -> Option<Vec<(f64, f64)>> {
        match &self.shape {
            Shape::Table { raw, .. } => Some(raw.clone()),
            Shape::Power { .. } => None,
        }
    }

    /// `[v_min, v_max]` of the table; `None` for closed forms.
    pub fn table_range(&self) -> Option<(f64, f64)> {
        match &self.shape {
            Shape::Table { raw, .. } => Some((raw[0].0, raw[raw.len() - 1].0)),
            Shape::Power { .. } => None,
        }
    }

    /// Number of evaluations that fell outside the tabulated range.
    pub fn extended_hits(&self) -> usize {
        self.extended_hits.load(Ordering::Relaxed)
    }

    pub fn reset_extended_hits(&self) {
        self.extended_hits.store(0, Ordering::Relaxed);
    }

    /// `Lambda_p(v)`.
    pub fn lambda(&self, v: f64) -> f64 {
        match &self.shape {
            Shape::Power { c0 } => c0 * v.powf(-self.p / self.dim),
            Shape::Table { raw, log_v, log_l } => {
                let x = v.ln();
                let n = log_v.len();
                if x < log_v[0] || x > log_v[n - 1] {
                    self.extended_hits.fetch_add(1, Ordering::Relaxed);
                }
                if x <= log_v[0] || n == 1 {
                    return raw[0].1;
                }
                let k = if x >= log_v[n - 1] {
                    n - 2
                } else {
                    log_v.partition_point(|&a| a <= x) - 1
                };
                if x == log_v[k] {
                    return raw[k].1;
                }
                let t = (x - log_v[k]) / (log_v[k + 1] - log_v[k]);
                (log_l[k] + t * (log_l[k + 1] - log_l[k])).exp()
            }
        }
    }

    /// `sup { v : Lambda(v) >= y }`, the generalized inverse of the
    /// nonincreasing profile. Returns `None` when no `v` qualifies, and
    /// `Some(f64::INFINITY)` when the profile never drops below `y`.
    pub fn lambda_inverse(&self, y: f64) -> Option<f64> {
        match &self.shape {
            Shape::Power { c0 } => Some((c0 / y).powf(self.dim / self.p)),
            Shape::Table { raw, log_v, log_l } => {
                let n = log_v.len();
                if raw[0].1 < y {
                    return None;
                }
                // last table point still >= y
                let mut k = 0;
                while k + 1 < n && raw[k + 1].1 >= y {
                    k += 1;
                }
                if k + 1 == n {
                    if n == 1 || log_l[n - 1] >= log_l[n - 2] {
                        return Some(f64::INFINITY);
                    }
                    let slope = (log_l[n - 1] - log_l[n - 2]) / (log_v[n - 1] - log_v[n - 2]);
                    return Some((log_v[n - 1] + (y.ln() - log_l[n - 1]) / slope).exp());
                }
                if raw[k].1 == y {
                    return Some(raw[k].0);
                }
                let t = (y.ln() - log_l[k]) / (log_l[k + 1] - log_l[k]);
                Some((log_v[k] + t * (log_v[k + 1] - log_v[k])).exp())
            }
        }
    }

    /// `psi_r(s) = s^{(p-2)/r} Lambda(1/s)`.
    pub fn psi(&self, r: f64, s: f64) -> f64 {
        s.powf((self.p - 2.0) / r) * self.lambda(1.0 / s)
    }

    /// Inverse of `psi_r` by bisection in `ln s` on an exponentially
    /// expanded bracket.
    pub fn psi_inverse(&self, r: f64, y: f64) -> Result<f64, FkError> {
        if !(r >= 1.0) {
            return Err(FkError::Profile(format!("psi order must be >= 1, got {r}")));
        }
        if !(y.is_finite() && y > 0.0) {
            return Err(FkError::PsiRange(y));
        }
        const MAX_EXPANSIONS: usize = 1100;
        let mut lo = 1.0f64;
        let mut hi = 1.0f64;
        let mut k = 0;
        while self.psi(r, hi) < y {
            hi *= 2.0;
            k += 1;
            if k > MAX_EXPANSIONS || !hi.is_finite() {
                return Err(FkError::PsiRange(y));
            }
        }
        k = 0;
        while self.psi(r, lo) > y {
            lo *= 0.5;
            k += 1;
            if k > MAX_EXPANSIONS || lo == 0.0 {
                return Err(FkError::PsiRange(y));
            }
        }
        let (mut a, mut b) = (lo.ln(), hi.ln());
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let v = self.psi(r, m.exp());
            if v == y {
                return Ok(m.exp());
            }
            if v < y {
                a = m;
            } else {
                b = m;
            }
        }
        // pick the closer endpoint
        let (sa, sb) = (a.exp(), b.exp());
        if (self.psi(r, sa) - y).abs() <= (self.psi(r, sb) - y).abs() {
            Ok(sa)
        } else {
            Ok(sb)
        }
    }

    /// CSV `v,lambda` for tabulated profiles.
    pub fn to_csv(&self) -> Option<String> {
        let table = self.table()?;
        let mut s = String::from("v,lambda\n");
        for (v, l) in table {
            s.push_str(&format!("{v:.16e},{l:.16e}\n"));
        }
        Some(s)
    }

    pub fn from_csv(text: &str, p: f64, dim: f64, omega_exp: f64) -> Result<Self, FkError> {
        let mut table = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('v')) {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| FkError::Profile(format!("line {}: expected `v,lambda`", i + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| FkError::Profile(format!("line {}: bad number `{s}`", i + 1)))
            };
            table.push((parse(a)?, parse(b)?));
        }
        Self::tabulated(&table, p, dim, omega_exp)
    }

    /// JSON `{c0, N, p}` for closed-form profiles.
    pub fn to_json(&self) -> Option<String> {
        match self.shape {
            Shape::Power { c0 } => Some(
                serde_json::to_string(&ClosedFormJson {
                    c0,
                    dim: self.dim,
                    p: self.p,
                })
                .expect("profile json"),
            ),
            Shape::Table { .. } => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, FkError> {
        let j: ClosedFormJson =
            serde_json::from_str(text).map_err(|e| FkError::Profile(e.to_string()))?;
        if j.dim.fract() != 0.0 || j.dim < 1.0 {
            return Err(FkError::Profile(format!("N must be a positive integer, got {}", j.dim)));
        }
        Self::lattice(j.dim as usize, j.p, j.c0)
    }
}
