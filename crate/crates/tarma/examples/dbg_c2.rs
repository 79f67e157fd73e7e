use tarma::null_dist::{build_null_table, default_levels, SampleSize};

fn main() {
    let reps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5000);
    let len: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    for theta in [0.0, 0.5] {
        let t = build_null_table(
            &[theta],
            &[SampleSize::Asymptotic],
            &[0.25],
            reps,
            2,
            len,
            &default_levels(),
        )
        .unwrap();
        let e = t.lookup(theta, usize::MAX, 0.25).unwrap();
        let q = |p: f64| e.quantile(p);
        println!(
            "len {len} theta {theta}: q90 {:.3} q95 {:.3} q99 {:.3}",
            q(0.90),
            q(0.95),
            q(0.99)
        );
    }
}
