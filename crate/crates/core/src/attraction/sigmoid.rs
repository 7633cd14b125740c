//! Logistic fit `f(x) = 1 / (1 + exp(−g (x − s)))` over `x ∈ [−6, 6]` and
//! its area.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const X_MIN: f64 = -6.0;
pub const X_MAX: f64 = 6.0;
pub const GROWTH_MIN: f64 = 1e-6;
pub const GROWTH_MAX: f64 = 1e6;
pub const MAX_ITERATIONS: usize = 500;
const REL_TOL: f64 = 1e-10;
/// RMS residual treated as an exact fit.
const ABS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    pub g: f64,
    pub s: f64,
    /// Root-mean-square error over the fitted points.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SigmoidFit {
    pub fn eval(&self, x: f64) -> f64 {
        logistic(self.g, self.s, x)
    }
}

pub fn logistic(g: f64, s: f64, x: f64) -> f64 {
    let z = g * (x - s);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `m` evenly spaced abscissae covering `[−6, 6]` end to end.
pub fn abscissae(m: usize) -> Vec<f64> {
    let last = (m - 1) as f64;
    (0..m).map(|i| X_MIN + (X_MAX - X_MIN) * i as f64 / last).collect()
}

/// Shortens a step so that `s` moves by at most half the x-range and `g`
/// changes by at most a factor of ten. Unbounded steps can land on the flat
/// far tails where the gradient vanishes.
fn step_limit(g: f64, dg: f64, ds: f64) -> f64 {
    let mut tau: f64 = 1.0;
    let half_range = 0.5 * (X_MAX - X_MIN);
    if ds.abs() > half_range {
        tau = tau.min(half_range / ds.abs());
    }
    if dg > 9.0 * g {
        tau = tau.min(9.0 * g / dg);
    }
    if dg < -0.9 * g {
        tau = tau.min(-0.9 * g / dg);
    }
    tau
}

fn sum_sq(g: f64, s: f64, x: &[f64], h: &[f64]) -> f64 {
    x.iter().zip(h).map(|(&x, &y)| (logistic(g, s, x) - y).powi(2)).sum()
}

/// Damped Gauss–Newton (Levenberg–Marquardt) least-squares fit of a hit curve
/// sampled at [`abscissae`], started from `g = 1, s = 0`.
pub fn fit_sigmoid(h: &[f64]) -> Result<SigmoidFit> {
    if h.len() < 2 {
        return Err(Error::invalid("a hit curve needs at least two points"));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite hit proportion"));
    }
    let x = abscissae(h.len());
    let (mut g, mut s) = (1.0f64, 0.0f64);
    let mut loss = sum_sq(g, s, &x, h);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // An exact fit; step-shaped curves only approach it as g grows.
        if loss <= ABS_TOL * ABS_TOL * h.len() as f64 {
            converged = true;
            break;
        }
        // Normal equations of the linearised residual.
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(h) {
            let f = logistic(g, s, xi);
            let slope = f * (1.0 - f);
            let jg = slope * (xi - s);
            let js = -g * slope;
            let r = f - yi;
            a11 += jg * jg;
            a12 += jg * js;
            a22 += js * js;
            b1 += jg * r;
            b2 += js * r;
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let d11 = a11 + lambda * a11.max(1e-12);
            let d22 = a22 + lambda * a22.max(1e-12);
            let det = d11 * d22 - a12 * a12;
            if det > 0.0 && det.is_finite() {
                let dg = -(d22 * b1 - a12 * b2) / det;
                let ds = -(d11 * b2 - a12 * b1) / det;
                let tau = step_limit(g, dg, ds);
                let ng = (g + tau * dg).clamp(GROWTH_MIN, GROWTH_MAX);
                let ns = s + tau * ds;
                let nl = sum_sq(ng, ns, &x, h);
                if nl < loss {
                    let rel = (loss - nl) / loss;
                    let step = ((ng - g).powi(2) + (ns - s).powi(2)).sqrt();
                    let scale = (g * g + s * s).sqrt() + 1e-12;
                    g = ng;
                    s = ns;
                    loss = nl;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel < REL_TOL || step < 1e-14 * scale {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        // No damping yields descent: the current point is stationary.
        if !accepted {
            converged = true;
        }
        if converged {
            break;
        }
    }

    Ok(SigmoidFit {
        g,
        s,
        residual: (loss / h.len() as f64).sqrt(),
        converged,
        iterations,
    })
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// `∫_{−6}^{6} f(x) dx` in closed form.
pub fn sigmoid_area(g: f64, s: f64) -> f64 {
    let width = X_MAX - X_MIN;
    if g * width < 1e-9 {
        // Midpoint value; the error is O(g²).
        return width * logistic(g, s, 0.0);
    }
    let a = g * (X_MAX - s);
    let b = g * (X_MIN - s);
    // softplus(u) = u + softplus(−u) avoids cancelling two large values.
    let diff = if b > 0.0 {
        (a - b) + softplus(-a) - softplus(-b)
    } else {
        softplus(a) - softplus(b)
    };
    diff / g
}

/// Neighbourhood attraction score of a fitted curve.
pub fn delta_integral(fit: &SigmoidFit) -> f64 {
    sigmoid_area(fit.g, fit.s)
}

/// `log2(delta / null)`.
pub fn normalize_delta(delta: f64, null: f64) -> Result<f64> {
    if !(delta > 0.0 && null > 0.0) {
        return Err(Error::invalid(format!(
            "attraction scores must be positive (delta = {delta}, null = {null})"
        )));
    }
    Ok((delta / null).log2())
}
