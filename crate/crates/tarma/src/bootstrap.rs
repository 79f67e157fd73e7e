//! Wild bootstrap p-value for the sup-LM statistic (the sLMb test):
//! regenerate the series under the fitted null with randomly signed
//! residuals, recompute the statistic per replicate, add-one p-value.
//! Robust to heteroskedastic innovations.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Result, TarmaError};
use crate::rng::stream_rng;
use crate::series::TimeSeries;
use crate::suplm::sup_lm;

/// Replicates that come back untestable are redrawn, up to this factor
/// times B total draws.
const MAX_DRAW_FACTOR: usize = 10;

/// Output of the wild bootstrap: p-value, observed statistic, and the
/// B bootstrap statistics.
#[derive(Clone, Debug)]
pub struct BootstrapResult {
    pub pvalue: f64,
    pub t_obs: f64,
    pub t_star: Vec<f64>,
}

/// Rebuild a series under the fitted null from signed residuals:
/// X*_t = phi0 + X*_{t-1} + e*_t - theta e*_{t-1}, X*_0 = X_0, e*_0 = 0.
fn rebuild(x0: f64, phi0: f64, theta: f64, eps_star: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(eps_star.len() + 1);
    x.push(x0);
    let mut prev = 0.0;
    for (t, &e) in eps_star.iter().enumerate() {
        x.push(phi0 + x[t] + e - theta * prev);
        prev = e;
    }
    x
}

/// Wild-bootstrap p-value of the sup-LM test.
///
/// The null fit (phi0_hat, theta_hat, residuals) is held fixed when
/// generating each X*; the statistic on X* performs its own null fit,
/// exactly as on the original data. P-value is the add-one estimator
/// (1 + #{t* >= t_obs}) / (B + 1).
pub fn wild_bootstrap_pvalue(
    series: &TimeSeries,
    a_pct: f64,
    b_pct: f64,
    b_reps: usize,
    seed: u64,
    fix_phi0: bool,
) -> Result<BootstrapResult> {
    if b_reps < 99 {
        return Err(TarmaError::InvalidSpec(format!(
            "bootstrap needs B >= 99, got {b_reps}"
        )));
    }
    let obs = sup_lm(series, a_pct, b_pct, fix_phi0)?;
    let t_obs = obs.t_sup;
    let phi0 = obs.fit.phi0;
    let theta = obs.fit.theta;
    let eps_hat = &obs.fit.residuals;
    let x0 = series.values()[0];
    let max_rounds = MAX_DRAW_FACTOR;
    // Each replicate index b explores sub-streams b, b + B, b + 2B, ...
    // until one draw is testable, keeping the result independent of the
    // worker count and of other replicates' redraws.
    let t_star: Vec<Option<f64>> = (0..b_reps as u64)
        .into_par_iter()
        .map(|b| {
            for round in 0..max_rounds as u64 {
                let mut rng = stream_rng(seed, b + round * b_reps as u64);
                let eps_star: Vec<f64> = eps_hat
                    .iter()
                    .map(|&e| if rng.gen::<bool>() { e } else { -e })
                    .collect();
                let xs = rebuild(x0, phi0, theta, &eps_star);
                let ts = match TimeSeries::new(xs) {
                    Ok(ts) => ts,
                    Err(_) => continue,
                };
                match sup_lm(&ts, a_pct, b_pct, fix_phi0) {
                    Ok(r) => return Some(r.t_sup),
                    Err(TarmaError::UntestableSeries(_))
                    | Err(TarmaError::DegenerateInput(_)) => continue,
                    Err(_) => return None,
                }
            }
            None
        })
        .collect();
    let t_star: Vec<f64> = {
        let ok: Vec<f64> = t_star.iter().filter_map(|v| *v).collect();
        if ok.len() < b_reps {
            return Err(TarmaError::DegenerateInput(format!(
                "{} of {b_reps} bootstrap replicates untestable after {MAX_DRAW_FACTOR}x redraws",
                b_reps - ok.len()
            )));
        }
        ok
    };
    let exceed = t_star.iter().filter(|&&t| t >= t_obs).count();
    let pvalue = (1 + exceed) as f64 / (b_reps + 1) as f64;
    Ok(BootstrapResult {
        pvalue,
        t_obs,
        t_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_ima, NoiseSpec};

    #[test]
    fn rebuild_inverts_residual_recursion() {
        // Rebuilding with the unsigned residuals reproduces the original
        // series exactly when the fit's recursion is consistent.
        let ts = simulate_ima(0.4, 0.2, 1.0, 200, 3.0, &NoiseSpec::gaussian(8)).unwrap();
        let fit = crate::ima::fit_ima11(&ts, None).unwrap();
        let xs = rebuild(ts.values()[0], fit.phi0, fit.theta, &fit.residuals);
        for (a, b) in xs.iter().zip(ts.values()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn pvalue_bounds_hold() {
        let ts = simulate_ima(0.0, 0.0, 1.0, 150, 0.0, &NoiseSpec::gaussian(20)).unwrap();
        let b = 99;
        let res = wild_bootstrap_pvalue(&ts, 0.25, 0.75, b, 5, false).unwrap();
        assert!(res.pvalue >= 1.0 / (b as f64 + 1.0));
        assert!(res.pvalue <= 1.0);
        assert_eq!(res.t_star.len(), b);
    }

    #[test]
    fn deterministic_given_seed() {
        let ts = simulate_ima(0.5, 0.0, 1.0, 150, 0.0, &NoiseSpec::gaussian(21)).unwrap();
        let a = wild_bootstrap_pvalue(&ts, 0.25, 0.75, 99, 17, false).unwrap();
        let b = wild_bootstrap_pvalue(&ts, 0.25, 0.75, 99, 17, false).unwrap();
        assert_eq!(a.pvalue, b.pvalue);
        assert_eq!(a.t_star, b.t_star);
    }

    #[test]
    fn degenerate_series_errors() {
        // A constant series has zero residual variance: the inner fit
        // must fail rather than divide by zero.
        let ts = TimeSeries::new(vec![5.0; 120]).unwrap();
        assert!(matches!(
            wild_bootstrap_pvalue(&ts, 0.25, 0.75, 99, 1, false),
            Err(TarmaError::DegenerateInput(_))
        ));
    }

    #[test]
    fn rejects_small_b() {
        let ts = simulate_ima(0.0, 0.0, 1.0, 150, 0.0, &NoiseSpec::gaussian(2)).unwrap();
        assert!(wild_bootstrap_pvalue(&ts, 0.25, 0.75, 50, 1, false).is_err());
    }
}
