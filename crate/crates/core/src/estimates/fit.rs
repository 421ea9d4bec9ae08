use serde::{Deserialize, Serialize};

use super::{EstimateError, Window, MIN_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares of `ln y` against `ln x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, EstimateError> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(EstimateError::Window(format!("need at least 3 paired points, got {}", xs.len().min(ys.len()))));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(EstimateError::Window(format!("log fit needs positive finite values, got {v}")));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(EstimateError::Window("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        stderr: (sse / (n - 2.0) / sxx).sqrt(),
        r2,
        n: xs.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub quantity: String,
    pub t_min: f64,
    pub t_max: f64,
    pub slope: f64,
    pub stderr: f64,
    pub r2: f64,
    pub n_points: usize,
    pub theoretical: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Fit `ln y` against `ln t` over instants already restricted to `window`.
pub fn fit_exponent(
    quantity: &str,
    ts: &[f64],
    ys: &[f64],
    window: Window,
    theoretical: f64,
    tolerance: f64,
) -> Result<ExponentFit, EstimateError> {
    if ts.len() < MIN_WINDOW {
        return Err(EstimateError::Window(format!(
            "{} instants in the window, need {MIN_WINDOW}",
            ts.len()
        )));
    }
    let f = loglog_fit(ts, ys)?;
    Ok(ExponentFit {
        quantity: quantity.to_string(),
        t_min: window.t_min,
        t_max: window.t_max,
        slope: f.slope,
        stderr: f.stderr,
        r2: f.r2,
        n_points: f.n,
        theoretical,
        tolerance,
        pass: (f.slope - theoretical).abs() <= tolerance,
    })
}
