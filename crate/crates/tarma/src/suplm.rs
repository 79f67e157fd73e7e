//! The supremum Lagrange-multiplier statistic T_n = sup_r T_n(r) for
//! testing an IMA(1,1) null against a one-regime-shift TARMA(1,1)
//! alternative.
//!
//! T_n(r) is a quadratic form of the score in the threshold directions
//! (psi_2 = (phi_{1,0}, phi_{1,1})), normalized by the Schur complement
//! of the observed information. All derivative sequences follow first-
//! order recursions, so a single O(n) pass evaluates one threshold; the
//! grid consists of the distinct lagged values inside a percentile band.

use crate::error::{Result, TarmaError};
use crate::ima::{fit_ima11, ImaFit};
use crate::series::TimeSeries;
use crate::util::{percentile, Sym2};

/// Condition-number cutoff above which a threshold is excluded.
const COND_LIMIT: f64 = 1e12;

/// Score-derivative sequences for one threshold.
#[derive(Clone, Debug)]
pub struct ScorePanel {
    pub d_phi0: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_phi10: Vec<f64>,
    pub d_phi11: Vec<f64>,
}

/// How a reported p-value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PvalueSource {
    AsymptoticTable,
    FiniteSampleTable,
    Bootstrap,
}

impl std::fmt::Display for PvalueSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PvalueSource::AsymptoticTable => write!(f, "asymptotic-table"),
            PvalueSource::FiniteSampleTable => write!(f, "finite-sample-table"),
            PvalueSource::Bootstrap => write!(f, "bootstrap"),
        }
    }
}

/// Grid bookkeeping attached to a test result.
#[derive(Clone, Debug)]
pub struct GridMeta {
    pub a_pct: f64,
    pub b_pct: f64,
    pub grid_size: usize,
    pub excluded: usize,
}

/// Result of the sup-LM test on one series.
#[derive(Clone, Debug)]
pub struct SupLmResult {
    pub t_sup: f64,
    /// Arg-max threshold; ties broken by the smallest r.
    pub r_hat: f64,
    /// Per-threshold curve; `None` marks excluded (ill-conditioned) points.
    pub curve: Vec<(f64, Option<f64>)>,
    pub grid_meta: GridMeta,
    pub pvalue: Option<(f64, PvalueSource)>,
    pub theta_used_for_table: Option<f64>,
    /// The null fit underlying the statistic.
    pub fit: ImaFit,
}

/// Precomputed threshold-independent quantities for one (series, fit)
/// pair: residuals, lagged values, the (phi0, theta) derivative columns
/// and their 2x2 information block.
pub struct LmContext {
    eps: Vec<f64>,
    lag: Vec<f64>,
    theta: f64,
    sigma2: f64,
    d0: Vec<f64>,
    dth: Vec<f64>,
    c11_inv: [[f64; 2]; 2],
}

impl LmContext {
    pub fn new(series: &TimeSeries, fit: &ImaFit) -> Result<Self> {
        let x = series.values();
        let n = x.len() - 1;
        if fit.residuals.len() != n {
            return Err(TarmaError::Internal(
                "fit does not match series length".into(),
            ));
        }
        let theta = fit.theta;
        let mut d0 = Vec::with_capacity(n);
        let mut dth = Vec::with_capacity(n);
        let (mut p0, mut pt) = (0.0, 0.0);
        let mut eps_prev = 0.0;
        for &e in &fit.residuals {
            p0 = -1.0 + theta * p0;
            pt = eps_prev + theta * pt;
            d0.push(p0);
            dth.push(pt);
            eps_prev = e;
        }
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for t in 0..n {
            a += d0[t] * d0[t];
            b += d0[t] * dth[t];
            c += dth[t] * dth[t];
        }
        let c11 = Sym2 { a, b, c };
        let det = c11.det();
        if !(det.is_finite() && det > 0.0) {
            return Err(TarmaError::UntestableSeries(
                "singular (phi0, theta) information block".into(),
            ));
        }
        let c11_inv = [[c / det, -b / det], [-b / det, a / det]];
        Ok(Self {
            eps: fit.residuals.clone(),
            lag: x[..n].to_vec(),
            theta,
            sigma2: fit.sigma2,
            d0,
            dth,
            c11_inv,
        })
    }

    /// T_n(r) for one threshold, or `None` when the Schur complement is
    /// singular or ill-conditioned (condition number > 1e12).
    pub fn stat_at(&self, r: f64) -> Option<f64> {
        let n = self.eps.len();
        let theta = self.theta;
        // Running score recursions for the threshold directions plus the
        // nine cross-product accumulators of score and information.
        let (mut d10, mut d11) = (0.0, 0.0);
        let (mut u1, mut u2) = (0.0, 0.0);
        let (mut p, mut q, mut s) = (0.0, 0.0, 0.0);
        let (mut g1, mut g2, mut g3, mut g4) = (0.0, 0.0, 0.0, 0.0);
        for t in 0..n {
            let xl = self.lag[t];
            let (i0, i1) = if xl <= r { (-1.0, -xl) } else { (0.0, 0.0) };
            d10 = i0 + theta * d10;
            d11 = i1 + theta * d11;
            let e = self.eps[t];
            u1 += e * d10;
            u2 += e * d11;
            p += d10 * d10;
            q += d10 * d11;
            s += d11 * d11;
            let a0 = self.d0[t];
            let at = self.dth[t];
            g1 += d10 * a0;
            g2 += d10 * at;
            g3 += d11 * a0;
            g4 += d11 * at;
        }
        self.stat_from_acc(u1, u2, p, q, s, g1, g2, g3, g4)
    }

    /// T_n(r) over an ascending threshold grid in one sweep.
    ///
    /// Raising r flips the indicator on only the newly covered lag
    /// indices; index s perturbs the threshold scores at times t >= s
    /// by a factor theta^(t-s), which decays geometrically. Each flip
    /// therefore updates the cross-product accumulators over a short
    /// horizon, making the whole curve O(n * horizon) instead of
    /// O(n * grid size).
    pub fn curve_over(&self, grid: &[f64]) -> Vec<Option<f64>> {
        let n = self.eps.len();
        let theta = self.theta;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| self.lag[i].partial_cmp(&self.lag[j]).unwrap());
        // Past the horizon, theta^k is below the accumulators' own
        // rounding noise and can be dropped.
        let horizon = if theta == 0.0 {
            1
        } else {
            let l = ((1e-18f64).ln() / theta.abs().ln()).ceil();
            if l.is_finite() && l < n as f64 {
                l as usize
            } else {
                n
            }
        }
        .max(1);
        let mut d10 = vec![0.0; n];
        let mut d11 = vec![0.0; n];
        let (mut u1, mut u2) = (0.0, 0.0);
        let (mut p, mut q, mut s_acc) = (0.0, 0.0, 0.0);
        let (mut g1, mut g2, mut g3, mut g4) = (0.0, 0.0, 0.0, 0.0);
        let mut next = 0usize;
        let mut out = Vec::with_capacity(grid.len());
        for &r in grid {
            while next < n && self.lag[order[next]] <= r {
                let s = order[next];
                next += 1;
                let xl = self.lag[s];
                let end = (s + horizon).min(n);
                let mut w = 1.0; // theta^(t - s)
                for t in s..end {
                    let da = -w;
                    let db = -xl * w;
                    let e = self.eps[t];
                    u1 += e * da;
                    u2 += e * db;
                    p += (2.0 * d10[t] + da) * da;
                    s_acc += (2.0 * d11[t] + db) * db;
                    q += d10[t] * db + d11[t] * da + da * db;
                    g1 += da * self.d0[t];
                    g2 += da * self.dth[t];
                    g3 += db * self.d0[t];
                    g4 += db * self.dth[t];
                    d10[t] += da;
                    d11[t] += db;
                    w *= theta;
                }
            }
            out.push(self.stat_from_acc(u1, u2, p, q, s_acc, g1, g2, g3, g4));
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn stat_from_acc(
        &self,
        u1: f64,
        u2: f64,
        p: f64,
        q: f64,
        s: f64,
        g1: f64,
        g2: f64,
        g3: f64,
        g4: f64,
    ) -> Option<f64> {
        // Schur complement M = C22 - G C11^{-1} G^T (raw sums; the 1/sigma^2
        // factors cancel inside and are applied once at the end).
        let iv = &self.c11_inv;
        let h1 = [
            g1 * iv[0][0] + g2 * iv[1][0],
            g1 * iv[0][1] + g2 * iv[1][1],
        ];
        let h2 = [
            g3 * iv[0][0] + g4 * iv[1][0],
            g3 * iv[0][1] + g4 * iv[1][1],
        ];
        let m = Sym2 {
            a: p - (h1[0] * g1 + h1[1] * g2),
            b: q - (h1[0] * g3 + h1[1] * g4),
            c: s - (h2[0] * g3 + h2[1] * g4),
        };
        let (lo, hi) = m.eigenvalues();
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi / lo > COND_LIMIT {
            return None;
        }
        let t_r = m.inv_quadratic_form(u1, u2) / self.sigma2;
        if t_r.is_finite() && t_r >= 0.0 {
            Some(t_r)
        } else {
            None
        }
    }
}

/// Evaluate the four score recursions of the (constrained) likelihood
/// at the null fit for one threshold.
pub fn score_panel(series: &TimeSeries, fit: &ImaFit, r: f64) -> Result<ScorePanel> {
    if !r.is_finite() {
        return Err(TarmaError::InvalidSpec("threshold must be finite".into()));
    }
    let x = series.values();
    let n = x.len() - 1;
    if fit.residuals.len() != n {
        return Err(TarmaError::Internal(
            "fit does not match series length".into(),
        ));
    }
    let theta = fit.theta;
    let mut panel = ScorePanel {
        d_phi0: Vec::with_capacity(n),
        d_theta: Vec::with_capacity(n),
        d_phi10: Vec::with_capacity(n),
        d_phi11: Vec::with_capacity(n),
    };
    let (mut p0, mut pt, mut p10, mut p11) = (0.0, 0.0, 0.0, 0.0);
    let mut eps_prev = 0.0;
    for t in 0..n {
        let xl = x[t];
        let ind = if xl <= r { 1.0 } else { 0.0 };
        p0 = -1.0 + theta * p0;
        pt = eps_prev + theta * pt;
        p10 = -ind + theta * p10;
        p11 = -xl * ind + theta * p11;
        panel.d_phi0.push(p0);
        panel.d_theta.push(pt);
        panel.d_phi10.push(p10);
        panel.d_phi11.push(p11);
        eps_prev = fit.residuals[t];
    }
    Ok(panel)
}

/// T_n(r) at a single threshold; `None` means excluded.
pub fn lm_stat_at(series: &TimeSeries, fit: &ImaFit, r: f64) -> Result<Option<f64>> {
    if !r.is_finite() {
        return Err(TarmaError::InvalidSpec("threshold must be finite".into()));
    }
    let ctx = LmContext::new(series, fit)?;
    Ok(ctx.stat_at(r))
}

/// Grid of candidate thresholds: the distinct lagged values
/// X_0..X_{n-1} falling inside the [a_pct, b_pct] percentile band of
/// the whole series, in increasing order.
pub fn threshold_grid(series: &TimeSeries, a_pct: f64, b_pct: f64) -> Result<Vec<f64>> {
    if !(0.0 < a_pct && a_pct < b_pct && b_pct < 1.0) {
        return Err(TarmaError::InvalidSpec(format!(
            "need 0 < a < b < 1, got ({a_pct}, {b_pct})"
        )));
    }
    let x = series.values();
    let lo = percentile(x, a_pct);
    let hi = percentile(x, b_pct);
    let mut grid: Vec<f64> = x[..x.len() - 1]
        .iter()
        .copied()
        .filter(|v| *v >= lo && *v <= hi)
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    Ok(grid)
}

fn sup_over_grid(
    series: &TimeSeries,
    fit: ImaFit,
    a_pct: f64,
    b_pct: f64,
) -> Result<SupLmResult> {
    let grid = threshold_grid(series, a_pct, b_pct)?;
    if grid.is_empty() {
        return Err(TarmaError::UntestableSeries(
            "no candidate thresholds inside the percentile band".into(),
        ));
    }
    let ctx = LmContext::new(series, &fit)?;
    let stats = ctx.curve_over(&grid);
    let mut curve = Vec::with_capacity(grid.len());
    let mut t_sup = f64::NEG_INFINITY;
    let mut r_hat = f64::NAN;
    let mut excluded = 0usize;
    for (&r, &stat) in grid.iter().zip(&stats) {
        match stat {
            Some(v) => {
                if v > t_sup {
                    t_sup = v;
                    r_hat = r;
                }
            }
            None => excluded += 1,
        }
        curve.push((r, stat));
    }
    if !t_sup.is_finite() {
        return Err(TarmaError::UntestableSeries(
            "every candidate threshold was excluded".into(),
        ));
    }
    Ok(SupLmResult {
        t_sup,
        r_hat,
        grid_meta: GridMeta {
            a_pct,
            b_pct,
            grid_size: grid.len(),
            excluded,
        },
        curve,
        pvalue: None,
        theta_used_for_table: None,
        fit,
    })
}

/// The sup-LM test: fit the IMA(1,1) null, scan the threshold grid and
/// return the supremum with the full curve. The p-value is left unset;
/// fill it from a null table or the wild bootstrap.
pub fn sup_lm(series: &TimeSeries, a_pct: f64, b_pct: f64, fix_phi0: bool) -> Result<SupLmResult> {
    if series.len() < 50 {
        return Err(TarmaError::TooShort {
            got: series.len(),
            need: 50,
        });
    }
    let fit = fit_ima11(series, if fix_phi0 { Some(0.0) } else { None })?;
    sup_over_grid(series, fit, a_pct, b_pct)
}

/// Test for threshold regulation from above: run `sup_lm` on the
/// negated series and map the arg-max threshold back through negation.
pub fn sup_lm_above(
    series: &TimeSeries,
    a_pct: f64,
    b_pct: f64,
    fix_phi0: bool,
) -> Result<SupLmResult> {
    let neg = series.negated();
    let mut res = sup_lm(&neg, a_pct, b_pct, fix_phi0)?;
    res.r_hat = -res.r_hat;
    for point in &mut res.curve {
        point.0 = -point.0;
    }
    res.curve.reverse();
    Ok(res)
}
