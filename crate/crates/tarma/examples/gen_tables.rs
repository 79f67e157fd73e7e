//! Regenerates the null-distribution tables shipped in `data/`.
//!
//! Usage: `cargo run --release --example gen_tables [reps_asym reps_finite]`
//! (defaults 10000 / 10000). Expect a long single-core run at the
//! default replication counts.

use std::path::Path;

use tarma::null_dist::{build_null_table, default_levels, save_table, SampleSize};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let reps_asym: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(10_000);
    let reps_finite: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(10_000);
    let pis = [0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40];
    let thetas = [0.0, -0.9, 0.9];
    let levels = default_levels();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");

    eprintln!("asymptotic table: {reps_asym} reps, path length 5000");
    let asym = build_null_table(
        &thetas,
        &[SampleSize::Asymptotic],
        &pis,
        reps_asym,
        20260801,
        5000,
        &levels,
    )
    .unwrap();
    save_table(&asym, &data.join("null_table_asym.csv")).unwrap();
    eprintln!("wrote null_table_asym.csv");

    eprintln!("finite-sample table: {reps_finite} reps, n in {{100, 300, 500}}");
    let finite = build_null_table(
        &thetas,
        &[
            SampleSize::Finite(100),
            SampleSize::Finite(300),
            SampleSize::Finite(500),
        ],
        &pis,
        reps_finite,
        20260802,
        5000,
        &levels,
    )
    .unwrap();
    save_table(&finite, &data.join("null_table_finite.csv")).unwrap();
    eprintln!("wrote null_table_finite.csv");
}
