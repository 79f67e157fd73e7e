// Scratch diagnostic: size-corrected power surface for EQ28 at n = 300.
use tarma::sim::{simulate_dgp, DgpKind, DgpSpec, NoiseSpec};
use tarma::suplm::sup_lm;
use tarma::util::percentile;

fn stats(tau: f64, theta: f64, n: usize, reps: usize) -> Vec<f64> {
    let dgp = DgpSpec::new(DgpKind::Eq28 { tau, theta });
    let burn = 5;
    let mut ts = Vec::new();
    for k in 0..reps as u64 {
        let long = simulate_dgp(&dgp, n + burn, &NoiseSpec::gaussian(9_000 + k)).unwrap();
        let series =
            tarma::TimeSeries::new(long.values()[burn..].to_vec()).unwrap();
        if let Ok(res) = sup_lm(&series, 0.25, 0.75, false) {
            ts.push(res.t_sup);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts
}

fn main() {
    let n = 300;
    let reps = 2000;
    // Paper's size-corrected powers at tau = 0.5 / 1.0 / 1.5 (n = 300).
    let paper: &[(f64, [f64; 3])] = &[
        (-0.9, [25.7, 52.5, 77.1]),
        (-0.5, [21.7, 48.3, 72.6]),
        (0.0, [22.4, 50.5, 75.3]),
        (0.5, [20.6, 50.1, 76.9]),
        (0.9, [24.8, 62.8, 86.3]),
    ];
    for &(theta, pows) in paper {
        let null = stats(0.0, theta, n, reps);
        let cv = percentile(&null, 0.95);
        let mut row = format!("theta {theta:>4}: cv {cv:.2} |");
        for (i, tau) in [0.5, 1.0, 1.5].iter().enumerate() {
            let alt = stats(*tau, theta, n, reps);
            let pow = alt.iter().filter(|&&t| t > cv).count() as f64 / alt.len() as f64;
            // Critical value that would reproduce the paper's power.
            let implied = percentile(&alt, 1.0 - pows[i] / 100.0);
            row.push_str(&format!(
                " tau{tau}: {:.1} (implied cv {:.1})",
                100.0 * pow,
                implied
            ));
        }
        println!("{row}");
    }
}
