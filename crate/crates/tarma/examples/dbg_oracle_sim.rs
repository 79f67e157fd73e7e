//! Similarity of the true-parameter (no estimation) statistic across theta.
use rayon::prelude::*;
use tarma::ima::residuals_under_h0;
use tarma::sim::{simulate_ima, NoiseSpec};
use tarma::suplm::{threshold_grid, LmContext};
use tarma::util::percentile;
use tarma::TimeSeries;

fn main() {
    let reps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let len: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    for theta in [0.0f64, 0.5] {
        let sups: Vec<f64> = (0..reps)
            .into_par_iter()
            .filter_map(|rep| {
                let ts = simulate_ima(theta, 0.0, 1.0, len + 5, 0.0, &NoiseSpec::gaussian(77_000 + rep)).ok()?;
                let ts = TimeSeries::new(ts.values()[5..].to_vec()).ok()?;
                let res = residuals_under_h0(ts.values(), theta, 0.0);
                let sigma2 = res.iter().map(|e| e * e).sum::<f64>() / res.len() as f64;
                let fit = tarma::ima::ImaFit { theta, phi0: 0.0, sigma2, loglik: 0.0, residuals: res };
                let ctx = LmContext::new(&ts, &fit).ok()?;
                let grid = threshold_grid(&ts, 0.25, 0.75).ok()?;
                let s = ctx.curve_over(&grid).iter().filter_map(|s| *s).fold(f64::NEG_INFINITY, f64::max);
                s.is_finite().then_some(s)
            })
            .collect();
        println!(
            "len {len} theta {theta}: q90 {:.3} q95 {:.3} q99 {:.3} (n={})",
            percentile(&sups, 0.90), percentile(&sups, 0.95), percentile(&sups, 0.99), sups.len()
        );
    }
}
