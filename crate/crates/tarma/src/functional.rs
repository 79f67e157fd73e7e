//! The limiting functional F(W; r_L, r_U): a sup over tau of a Schur-
//! complement quadratic form built from Ito integrals of a path W on
//! [0, 1]. The same evaluator serves the null law (standard Brownian
//! motion) and the local-power limit (threshold diffusion), since F
//! only sees the path's own increments.
//!
//! With left-endpoint sums over a uniform grid (step delta = 1/m):
//!   H(tau)   = (sum dW, sum I(W<=tau) dW, sum W I(W<=tau) dW)
//!   Lambda entries A = sum I delta, B = sum W I delta, C = sum W^2 I delta
//!   Lambda(tau) = [[1, A, B], [A, A, B], [B, B, C]]
//!   v = (H_2 - A H_1, H_3 - B H_1),  S = [[A - A^2, B - AB], [B - AB, C - B^2]]
//!   F = sup_tau v' S^{-1} v, skipping tau where S is singular.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TarmaError};
use crate::rng::stream_rng;
use crate::util::Sym2;

/// Schur-complement condition cutoff, matching the finite-sample test.
const COND_LIMIT: f64 = 1e12;

/// Per-tau evaluation of H, Lambda and the quadratic form on one path.
#[derive(Clone, Debug)]
pub struct FunctionalCurve {
    pub taus: Vec<f64>,
    /// H(tau) = (int dW, int I dW, int W I dW).
    pub h: Vec<[f64; 3]>,
    /// (A, B, C) entries of Lambda(tau).
    pub lambda_abc: Vec<[f64; 3]>,
    /// Quadratic form per tau; `None` at singular Schur complements.
    pub f_curve: Vec<Option<f64>>,
    /// Supremum of the finite values, if any.
    pub f_value: Option<f64>,
}

/// Reconstruct the full 3x3 Lambda(tau) from its (A, B, C) entries.
pub fn lambda_matrix(abc: [f64; 3]) -> [[f64; 3]; 3] {
    let [a, b, c] = abc;
    [[1.0, a, b], [a, a, b], [b, b, c]]
}

/// Evaluate the curve tau -> F-quadratic-form over a path sampled on a
/// uniform grid of [0, 1] (`path.len() - 1` increments).
///
/// Prefix sums over the left endpoints sorted by value make the whole
/// tau sweep O(m log m + k log m).
pub fn eval_functional(path: &[f64], taus: &[f64]) -> Result<FunctionalCurve> {
    let m = path.len().saturating_sub(1);
    if m < 2 {
        return Err(TarmaError::InvalidSpec("path needs >= 2 increments".into()));
    }
    if taus.is_empty() {
        return Err(TarmaError::InvalidSpec("empty tau grid".into()));
    }
    let delta = 1.0 / m as f64;
    // Per-step contributions keyed by the left endpoint W_k.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| path[i].partial_cmp(&path[j]).unwrap());
    let mut w_sorted = Vec::with_capacity(m);
    // Cumulative (dW, W dW, delta, W delta, W^2 delta) in sorted order.
    let mut pre = Vec::with_capacity(m + 1);
    pre.push([0.0; 5]);
    let mut acc = [0.0; 5];
    for &k in &order {
        let w = path[k];
        let dw = path[k + 1] - path[k];
        acc[0] += dw;
        acc[1] += w * dw;
        acc[2] += delta;
        acc[3] += w * delta;
        acc[4] += w * w * delta;
        w_sorted.push(w);
        pre.push(acc);
    }
    let h1 = path[m] - path[0]; // total increment, tau-independent
    let mut out = FunctionalCurve {
        taus: taus.to_vec(),
        h: Vec::with_capacity(taus.len()),
        lambda_abc: Vec::with_capacity(taus.len()),
        f_curve: Vec::with_capacity(taus.len()),
        f_value: None,
    };
    let mut best = f64::NEG_INFINITY;
    for &tau in taus {
        let cut = w_sorted.partition_point(|&w| w <= tau);
        let s = pre[cut];
        let (h2, h3, a, b, c) = (s[0], s[1], s[2], s[3], s[4]);
        out.h.push([h1, h2, h3]);
        out.lambda_abc.push([a, b, c]);
        let v = [h2 - a * h1, h3 - b * h1];
        let schur = Sym2 {
            a: a - a * a,
            b: b - a * b,
            c: c - b * b,
        };
        let (lo, hi) = schur.eigenvalues();
        let f = if lo.is_finite() && lo > 0.0 && hi / lo <= COND_LIMIT {
            let q = schur.inv_quadratic_form(v[0], v[1]);
            if q.is_finite() && q >= 0.0 {
                Some(q)
            } else {
                None
            }
        } else {
            None
        };
        if let Some(q) = f {
            best = best.max(q);
        }
        out.f_curve.push(f);
    }
    if best.is_finite() {
        out.f_value = Some(best);
    }
    Ok(out)
}

/// Simulate a standard Brownian path on [0, 1] with `steps` increments.
pub fn brownian_path(steps: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let sd = (1.0 / steps as f64).sqrt();
    let mut w = Vec::with_capacity(steps + 1);
    w.push(0.0);
    for k in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        w.push(w[k] + sd * z);
    }
    w
}

/// Tau grid formed from a path's own occupation quantiles: distinct
/// left-endpoint values between the pi and 1-pi occupation fractions,
/// thinned to at most `max_points`. This mirrors how the finite-sample
/// statistic picks its thresholds from the data.
pub fn occupation_tau_grid(path: &[f64], pi: f64, max_points: usize) -> Result<Vec<f64>> {
    if !(0.0 < pi && pi < 0.5) {
        return Err(TarmaError::InvalidSpec(format!(
            "occupation fraction must be in (0, 0.5), got {pi}"
        )));
    }
    let m = path.len() - 1;
    let mut w: Vec<f64> = path[..m].to_vec();
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = crate::util::percentile_sorted(&w, pi);
    let hi = crate::util::percentile_sorted(&w, 1.0 - pi);
    let mut taus: Vec<f64> = w.into_iter().filter(|v| *v >= lo && *v <= hi).collect();
    taus.dedup();
    if taus.len() > max_points {
        let stride = taus.len() as f64 / max_points as f64;
        taus = (0..max_points)
            .map(|i| taus[(i as f64 * stride) as usize])
            .collect();
    }
    if taus.is_empty() {
        return Err(TarmaError::DegenerateInput("empty tau grid".into()));
    }
    Ok(taus)
}

/// One draw of the Brownian functional on a fixed band [r_L, r_U] with
/// an equally spaced tau grid.
#[derive(Clone, Debug)]
pub struct BrownianFunctionalSample {
    pub tau_grid: Vec<f64>,
    pub h: Vec<[f64; 3]>,
    pub lambda_abc: Vec<[f64; 3]>,
    pub f_value: Option<f64>,
}

pub fn sample_brownian_functional(
    r_l: f64,
    r_u: f64,
    steps: usize,
    tau_points: usize,
    seed: u64,
) -> Result<BrownianFunctionalSample> {
    if !(r_l < r_u) {
        return Err(TarmaError::InvalidSpec("need r_L < r_U".into()));
    }
    if steps < 1000 {
        return Err(TarmaError::InvalidSpec("steps must be >= 1000".into()));
    }
    if tau_points < 2 {
        return Err(TarmaError::InvalidSpec("need >= 2 tau points".into()));
    }
    let path = brownian_path(steps, seed, 0);
    let taus: Vec<f64> = (0..tau_points)
        .map(|i| r_l + (r_u - r_l) * i as f64 / (tau_points - 1) as f64)
        .collect();
    let curve = eval_functional(&path, &taus)?;
    Ok(BrownianFunctionalSample {
        tau_grid: curve.taus,
        h: curve.h,
        lambda_abc: curve.lambda_abc,
        f_value: curve.f_value,
    })
}
