//! Conditional maximum-likelihood estimation of the IMA(1,1) null
//! model `X_t = phi0 + X_{t-1} + eps_t - theta eps_{t-1}`.
//!
//! For fixed theta the residual recursion is affine in phi0, so the
//! drift is profiled out in closed form and only theta is optimized
//! numerically: a 200-point grid over (-0.999, 0.999) followed by
//! golden-section refinement of the conditional sum of squares.

use crate::error::{Result, TarmaError};
use crate::series::TimeSeries;
use crate::util::golden_min;

/// Theta grid resolution for the coarse profile-likelihood scan.
const THETA_GRID: usize = 200;
/// Invertibility bound used by the optimizer.
const THETA_MAX: f64 = 0.999;

/// Fitted IMA(1,1) null model.
#[derive(Clone, Debug)]
pub struct ImaFit {
    pub theta: f64,
    pub phi0: f64,
    /// Residual variance, conditional sum of squares over n.
    pub sigma2: f64,
    /// Gaussian conditional log-likelihood at the optimum.
    pub loglik: f64,
    /// Residuals eps_hat_1..eps_hat_n (eps_hat_0 = 0 by convention).
    pub residuals: Vec<f64>,
}

/// Residuals of the differenced series under the null for given
/// (theta, phi0): `eps_t = X_t - X_{t-1} - phi0 + theta eps_{t-1}`,
/// starting from `eps_0 = 0`. Input is the level series X_0..X_n.
pub fn residuals_under_h0(x: &[f64], theta: f64, phi0: f64) -> Vec<f64> {
    let mut eps = Vec::with_capacity(x.len().saturating_sub(1));
    let mut prev = 0.0;
    for w in x.windows(2) {
        let e = w[1] - w[0] - phi0 + theta * prev;
        eps.push(e);
        prev = e;
    }
    eps
}

/// Conditional sum of squares profiled over phi0. Returns
/// (css, phi0_hat) for a given theta, or with `fix_phi0 = Some(c)` the
/// css at phi0 = c.
fn profile_css(x: &[f64], theta: f64, fix_phi0: Option<f64>) -> (f64, f64) {
    let phi0 = match fix_phi0 {
        Some(c) => c,
        None => {
            // eps_t = a_t - phi0 b_t with a_t = dX_t + theta a_{t-1},
            // b_t = 1 + theta b_{t-1}; least squares in phi0.
            let mut a = 0.0;
            let mut b = 0.0;
            let mut sab = 0.0;
            let mut sbb = 0.0;
            for w in x.windows(2) {
                a = (w[1] - w[0]) + theta * a;
                b = 1.0 + theta * b;
                sab += a * b;
                sbb += b * b;
            }
            sab / sbb
        }
    };
    let mut css = 0.0;
    let mut prev = 0.0;
    for w in x.windows(2) {
        let e = w[1] - w[0] - phi0 + theta * prev;
        css += e * e;
        prev = e;
    }
    (css, phi0)
}

/// Gradient of the profiled conditional sum of squares with respect to
/// theta. phi0 is re-profiled first, so by the envelope theorem the
/// profile gradient equals the partial derivative at fixed phi0:
/// g = 2 sum e_t de_t/dtheta with de_t/dtheta = e_{t-1} + theta de_{t-1}.
fn profile_css_grad(x: &[f64], theta: f64, fix_phi0: Option<f64>) -> f64 {
    let (_, phi0) = profile_css(x, theta, fix_phi0);
    let mut g = 0.0;
    let mut e_prev = 0.0;
    let mut de_prev = 0.0;
    for w in x.windows(2) {
        let de = e_prev + theta * de_prev;
        let e = w[1] - w[0] - phi0 + theta * e_prev;
        g += e * de;
        e_prev = e;
        de_prev = de;
    }
    2.0 * g
}

/// Secant iteration on the CSS gradient, starting from the golden-
/// section optimum. Root-finding on the gradient locates theta to near
/// machine precision, which the direct minimization cannot (its noise
/// floor is sqrt(eps)); this is what makes the statistic invariant to
/// rescaling the data at the 1e-8 level.
fn secant_polish(x: &[f64], theta0: f64, fix_phi0: Option<f64>) -> f64 {
    let mut t0 = theta0;
    let mut t1 = (theta0 + 1e-6).min(THETA_MAX);
    let mut g0 = profile_css_grad(x, t0, fix_phi0);
    let (css_start, _) = profile_css(x, theta0, fix_phi0);
    for _ in 0..50 {
        let g1 = profile_css_grad(x, t1, fix_phi0);
        if g1 == g0 {
            break;
        }
        let t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
        if !t2.is_finite() {
            break;
        }
        let t2 = t2.clamp(-THETA_MAX, THETA_MAX);
        t0 = t1;
        g0 = g1;
        let done = (t2 - t1).abs() < 1e-13;
        t1 = t2;
        if done {
            break;
        }
    }
    // Accept only if the polished point does not worsen the objective
    // (the secant can wander off to a different stationary point).
    let (css_end, _) = profile_css(x, t1, fix_phi0);
    if css_end <= css_start * (1.0 + 1e-12) && (t1 - theta0).abs() < 1e-2 {
        t1
    } else {
        theta0
    }
}

/// Fit the IMA(1,1) null by conditional maximum likelihood.
///
/// `fix_phi0` pins the drift instead of estimating it (used when the
/// null of interest is a driftless random walk with MA errors).
pub fn fit_ima11(ts: &TimeSeries, fix_phi0: Option<f64>) -> Result<ImaFit> {
    let x = ts.values();
    if x.len() < 10 {
        return Err(TarmaError::TooShort {
            got: x.len(),
            need: 10,
        });
    }
    let n = (x.len() - 1) as f64;
    let dx_var: f64 = {
        let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        crate::util::variance(&diffs)
    };
    if dx_var <= 0.0 || !dx_var.is_finite() {
        return Err(TarmaError::DegenerateInput(
            "differenced series has no variation".into(),
        ));
    }

    // Coarse grid scan.
    let mut best_theta = 0.0;
    let mut best_css = f64::INFINITY;
    for i in 0..THETA_GRID {
        let theta = -THETA_MAX + (2.0 * THETA_MAX) * (i as f64 + 0.5) / THETA_GRID as f64;
        let (css, _) = profile_css(x, theta, fix_phi0);
        if css < best_css {
            best_css = css;
            best_theta = theta;
        }
    }
    // Golden-section refinement in a bracket around the grid winner.
    let step = 2.0 * THETA_MAX / THETA_GRID as f64;
    let lo = (best_theta - step).max(-THETA_MAX);
    let hi = (best_theta + step).min(THETA_MAX);
    let theta = golden_min(|t| profile_css(x, t, fix_phi0).0, lo, hi, 1e-8);
    let theta = secant_polish(x, theta, fix_phi0);
    let (css, phi0) = profile_css(x, theta, fix_phi0);
    let sigma2 = css / n;
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(TarmaError::DegenerateInput(
            "residual variance collapsed to zero".into(),
        ));
    }
    let loglik = -0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    let residuals = residuals_under_h0(x, theta, phi0);
    Ok(ImaFit {
        theta,
        phi0,
        sigma2,
        loglik,
        residuals,
    })
}
