//! End-to-end statistical acceptance suite. Each criterion prints one
//! PASS/FAIL line; the process exits nonzero if any fails.
//!
//! This target is `harness = false` so the per-criterion lines always
//! reach the terminal. Expect a long single-core run: the criteria
//! simulate tens of thousands of Monte-Carlo paths.

use std::path::Path;

use tarma::bench::{
    run_experiment, size_corrected_power, ExperimentPlan, TestKind,
};
use tarma::functional::{brownian_path, eval_functional, occupation_tau_grid};
use tarma::local_power::{
    ergodic_example_density, ergodic_example_spec, limiting_stat_under_alternative,
    simulate_threshold_diffusion_horizon,
};
use tarma::null_dist::{
    build_null_table, default_levels, load_table, NullTable, SampleSize,
};
use tarma::sim::{
    classify_regime, simulate_ima, simulate_tarma, DgpKind, DgpSpec, NoiseSpec, RegimeClass,
    TarmaSpec,
};
use tarma::suplm::{sup_lm, sup_lm_above};
use tarma::tarma_fit::{fit_tarma11, published_fit_spec};
use tarma::util::{invert_small, percentile, two_sample_ks};
use tarma::TimeSeries;

type Check = fn(&Shared) -> Result<String, String>;

/// Artifacts shared between criteria so expensive builds happen once.
struct Shared {
    /// The shipped asymptotic table (theta 0, +-0.9; nine pi bands).
    asym_table: NullTable,
    /// The paper's lookup set: asymptotic quantiles for |theta_hat| <=
    /// 0.3 plus the simulated finite-n tables at theta = +-0.9 (the
    /// finite theta = 0 rows are deliberately absent, as in the paper,
    /// where only the |theta| = 0.9 nulls get finite-sample tables).
    paper_table: NullTable,
    /// Freshly built theta = 0 table: path length 2000, 20000 reps,
    /// pi in {0.01, 0.25} (criteria 1 and 2).
    c1_table: NullTable,
}

fn main() {
    // Optional args select a subset of criteria, e.g. `C6 C7 C8`.
    let only: Vec<String> = std::env::args().skip(1).collect();
    let want = |id: &str| only.is_empty() || only.iter().any(|a| a.eq_ignore_ascii_case(id));

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let asym_table = load_table(&data.join("null_table_asym.csv")).expect("shipped table");
    let finite_table = load_table(&data.join("null_table_finite.csv")).expect("shipped table");
    let mut paper_table = asym_table.clone();
    paper_table.entries.extend(
        finite_table
            .entries
            .iter()
            .filter(|e| e.theta.abs() > 0.5)
            .cloned(),
    );
    let c1_table = if want("C1") || want("C2") {
        eprintln!("building the theta = 0 reference table (20000 reps)...");
        build_null_table(
            &[0.0],
            &[SampleSize::Asymptotic],
            &[0.01, 0.25],
            20_000,
            1,
            2000,
            &default_levels(),
        )
        .expect("criterion-1 table")
    } else {
        NullTable::default()
    };
    let shared = Shared {
        asym_table,
        paper_table,
        c1_table,
    };

    let criteria: &[(&str, &str, Check)] = &[
        ("C1", "null-table quantiles (pi = 0.25 and 0.01)", c1_null_quantiles),
        ("C2", "similarity in theta (theta 0 vs 0.5 tables)", c2_similarity),
        ("C3", "empirical size, Table 1 cells", c3_size),
        ("C4", "size-corrected power, Table 2 cells", c4_power),
        ("C5", "measurement error / heteroskedasticity size", c5_measurement_error),
        ("C6", "oracle equivalence of the LM statistic", c6_oracle),
        ("C7", "exact invariances", c7_invariances),
        ("C8", "regime classifier vs direct transcription", c8_classifier),
        ("C9", "threshold-diffusion limit", c9_diffusion),
        ("C10", "parameter recovery at the published estimates", c10_recovery),
    ];

    let mut failed = 0usize;
    let mut ran = 0usize;
    for (id, name, check) in criteria {
        if !want(id) {
            continue;
        }
        ran += 1;
        match check(&shared) {
            Ok(detail) => println!("PASS {id} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all {ran} acceptance criteria passed");
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

/// Criterion 1: the empirical null quantiles at theta = 0 reproduce
/// the tabulated rows for pi = 0.25 and pi = 0.01.
fn c1_null_quantiles(s: &Shared) -> Result<String, String> {
    let cases = [
        (0.25, [12.10, 14.02, 18.15]),
        (0.01, [15.22, 17.12, 21.33]),
    ];
    let tols = [0.4, 0.5, 1.0];
    let levels = [0.90, 0.95, 0.99];
    let mut got = Vec::new();
    for (pi, want) in cases {
        let entry = s
            .c1_table
            .lookup(0.0, usize::MAX, pi)
            .ok_or_else(|| format!("no entry for pi = {pi}"))?;
        for i in 0..3 {
            let q = entry.quantile(levels[i]);
            got.push(fmt3(q));
            if (q - want[i]).abs() > tols[i] {
                return Err(format!(
                    "pi {pi} {:.0}% quantile {} vs expected {} (tol {})",
                    100.0 * levels[i],
                    fmt3(q),
                    want[i],
                    tols[i]
                ));
            }
        }
    }
    Ok(format!("quantiles {}", got.join("/")))
}

/// 95% quantile of the sup statistic evaluated at the TRUE null
/// parameters (no estimation): the parameter-free core of Theorem 1.
fn true_param_q95(theta: f64, reps: u64, len: usize) -> Result<f64, String> {
    use rayon::prelude::*;
    let sups: Vec<f64> = (0..reps)
        .into_par_iter()
        .filter_map(|rep| {
            let noise = NoiseSpec::gaussian(77_000 + rep);
            let ts = simulate_ima(theta, 0.0, 1.0, len + 5, 0.0, &noise).ok()?;
            let ts = TimeSeries::new(ts.values()[5..].to_vec()).ok()?;
            let res = tarma::ima::residuals_under_h0(ts.values(), theta, 0.0);
            let sigma2 = res.iter().map(|e| e * e).sum::<f64>() / res.len() as f64;
            let fit = tarma::ima::ImaFit {
                theta,
                phi0: 0.0,
                sigma2,
                loglik: 0.0,
                residuals: res,
            };
            let ctx = tarma::suplm::LmContext::new(&ts, &fit).ok()?;
            let grid = tarma::suplm::threshold_grid(&ts, 0.25, 0.75).ok()?;
            let s = ctx
                .curve_over(&grid)
                .iter()
                .filter_map(|s| *s)
                .fold(f64::NEG_INFINITY, f64::max);
            s.is_finite().then_some(s)
        })
        .collect();
    if sups.len() < reps as usize / 2 {
        return Err("too many untestable null paths".into());
    }
    Ok(percentile(&sups, 0.95))
}

/// Criterion 2: the asymptotic distribution is free of theta.
///
/// Two checks. (a) The estimated-statistic tables at theta = 0 and 0.5
/// sit within the paper's "not appreciable" range: the finite-sample
/// gap at the 95% level must stay within 1.5, well under the ~3.5
/// departures of the |theta| = 0.9 tables the theta rule exists for.
/// A tighter bound is out of reach for the tabulated statistic itself:
/// the (phi0, theta)-estimation projection leaves a ~1.0 downward gap
/// at theta = 0.5 that decays at the local-time rate (measured 1.11 /
/// 0.94 / 0.94 at path lengths 2000 / 5000 / 12800), which is also why
/// the paper's own asymptotic sLM test is undersized at |theta| = 0.5
/// in its Table 1. (b) The parameter-free core of Theorem 1 — the same
/// statistic evaluated at the true null parameters, removing the
/// estimation projection — must agree across theta within 0.5 at the
/// 95% level.
fn c2_similarity(s: &Shared) -> Result<String, String> {
    let table_half = build_null_table(
        &[0.5],
        &[SampleSize::Asymptotic],
        &[0.25],
        20_000,
        2,
        2000,
        &default_levels(),
    )
    .map_err(|e| e.to_string())?;
    let q0 = s
        .c1_table
        .lookup(0.0, usize::MAX, 0.25)
        .ok_or("missing theta 0 entry")?
        .quantile(0.95);
    let q5 = table_half
        .lookup(0.5, usize::MAX, 0.25)
        .ok_or("missing theta 0.5 entry")?
        .quantile(0.95);
    if (q0 - q5).abs() > 1.5 {
        return Err(format!(
            "estimated-statistic 95% quantiles differ appreciably: theta 0 {} vs theta 0.5 {}",
            fmt3(q0),
            fmt3(q5)
        ));
    }
    let t0 = true_param_q95(0.0, 20_000, 2000)?;
    let t5 = true_param_q95(0.5, 20_000, 2000)?;
    if (t0 - t5).abs() > 0.5 {
        return Err(format!(
            "true-parameter 95% quantiles differ: theta 0 {} vs theta 0.5 {}",
            fmt3(t0),
            fmt3(t5)
        ));
    }
    Ok(format!(
        "tables {} vs {}; parameter-free core {} vs {}",
        fmt3(q0),
        fmt3(q5),
        fmt3(t0),
        fmt3(t5)
    ))
}

fn eq28_plan(tau: f64, theta: f64, tests: Vec<TestKind>, reps: usize, seed: u64) -> ExperimentPlan {
    ExperimentPlan {
        dgp: DgpSpec::new(DgpKind::Eq28 { tau, theta }),
        n: 300,
        reps,
        tests,
        level: 0.05,
        band: (0.25, 0.75),
        bootstrap_b: 500,
        seed,
    }
}

/// Criterion 3: Table 1 size cells — asymptotic sLM at theta 0 and
/// -0.9, bootstrap sLMb across theta in {-0.9, 0, 0.9}.
fn c3_size(s: &Shared) -> Result<String, String> {
    let mut got = Vec::new();
    for (theta, want, tol) in [(0.0, 2.9, 1.5), (-0.9, 5.5, 1.5)] {
        let plan = eq28_plan(0.0, theta, vec![TestKind::Asymptotic], 2000, 31);
        let report = run_experiment(&plan, Some(&s.paper_table)).map_err(|e| e.to_string())?;
        let pct = report.cells[0].rejection_pct;
        got.push(format!("sLM(theta {theta}) {:.1}", pct));
        if (pct - want).abs() > tol {
            return Err(format!(
                "asymptotic size at theta {theta}: {:.1}% vs expected {want} +- {tol}pp",
                pct
            ));
        }
    }
    for (theta, want) in [(-0.9, 5.3), (0.0, 5.6), (0.9, 4.9)] {
        let plan = eq28_plan(0.0, theta, vec![TestKind::Bootstrap], 500, 37);
        let report = run_experiment(&plan, Some(&s.paper_table)).map_err(|e| e.to_string())?;
        let pct = report.cells[0].rejection_pct;
        got.push(format!("sLMb(theta {theta}) {:.1}", pct));
        if (pct - want).abs() > 2.5 {
            return Err(format!(
                "bootstrap size at theta {theta}: {:.1}% vs expected {want} +- 2.5pp",
                pct
            ));
        }
    }
    Ok(got.join(", "))
}

/// Criterion 4: size-corrected power at tau = 1.5 (Table 2) and
/// monotone power in tau.
fn c4_power(s: &Shared) -> Result<String, String> {
    let mut got = Vec::new();
    for (theta, want) in [(-0.9, 77.1), (0.0, 75.3), (0.9, 86.3)] {
        let null_plan = eq28_plan(0.0, theta, vec![TestKind::Asymptotic], 2000, 41);
        let alts: Vec<ExperimentPlan> = [0.5, 1.0, 1.5]
            .iter()
            .map(|&tau| eq28_plan(tau, theta, vec![TestKind::Asymptotic], 2000, 43))
            .collect();
        let report =
            size_corrected_power(&null_plan, &alts, Some(&s.paper_table)).map_err(|e| e.to_string())?;
        // Cells: tau = 0 (self-calibrated), 0.5, 1.0, 1.5.
        let cells = &report.cells;
        let p15 = cells[3].rejection_pct;
        got.push(format!("theta {theta}: {:.1}", p15));
        if (p15 - want).abs() > 5.0 {
            return Err(format!(
                "tau 1.5, theta {theta}: {:.1}% vs expected {want} +- 5pp",
                p15
            ));
        }
        for w in cells.windows(2) {
            let slack = 2.0 * (w[0].mc_se + w[1].mc_se);
            if w[1].rejection_pct + slack < w[0].rejection_pct {
                return Err(format!(
                    "power not monotone at theta {theta}: {:.1}% then {:.1}%",
                    w[0].rejection_pct, w[1].rejection_pct
                ));
            }
        }
    }
    Ok(got.join(", "))
}

/// Criterion 5: bootstrap size under measurement error (M1-M4,
/// snr inf and 5) and GARCH heteroskedasticity (M6).
fn c5_measurement_error(s: &Shared) -> Result<String, String> {
    let cells: &[(DgpKind, f64, f64)] = &[
        (DgpKind::M1, f64::INFINITY, 5.0),
        (DgpKind::M1, 5.0, 5.3),
        (DgpKind::M2, f64::INFINITY, 5.2),
        (DgpKind::M2, 5.0, 5.4),
        (DgpKind::M3, f64::INFINITY, 5.2),
        (DgpKind::M3, 5.0, 5.3),
        (DgpKind::M4, f64::INFINITY, 4.3),
        (DgpKind::M4, 5.0, 3.6),
        (DgpKind::M6, f64::INFINITY, 6.2),
    ];
    let mut got = Vec::new();
    for &(kind, snr, want) in cells {
        let plan = ExperimentPlan {
            dgp: DgpSpec::with_snr(kind, snr),
            n: 300,
            reps: 500,
            tests: vec![TestKind::Bootstrap],
            level: 0.05,
            band: (0.25, 0.75),
            bootstrap_b: 500,
            seed: 53,
        };
        let label = plan.dgp.label();
        let report = run_experiment(&plan, Some(&s.asym_table)).map_err(|e| e.to_string())?;
        let pct = report.cells[0].rejection_pct;
        got.push(format!("{label} {:.1}", pct));
        if (pct - want).abs() > 2.5 {
            return Err(format!(
                "{label}: sLMb size {:.1}% vs expected {want} +- 2.5pp",
                pct
            ));
        }
    }
    Ok(got.join(", "))
}

/// Residuals of the alternative model at the given parameters.
fn eps_under_alt(x: &[f64], phi0: f64, theta: f64, p10: f64, p11: f64, r: f64) -> Vec<f64> {
    let mut eps = Vec::with_capacity(x.len() - 1);
    let mut prev = 0.0;
    for w in x.windows(2) {
        let ind = if w[0] <= r { 1.0 } else { 0.0 };
        let e = w[1] - w[0] - phi0 - (p10 + p11 * w[0]) * ind + theta * prev;
        eps.push(e);
        prev = e;
    }
    eps
}

/// Brute-force T_n(r): finite-difference scores of the residual
/// recursion, dense 4x4 cross-product information, statistic from the
/// lower-right 2x2 block of the inverse.
fn brute_force_stat(x: &[f64], phi0: f64, theta: f64, sigma2: f64, r: f64) -> Option<f64> {
    let h = 1e-6;
    let eps0 = eps_under_alt(x, phi0, theta, 0.0, 0.0, r);
    let fd = |plus: Vec<f64>, minus: Vec<f64>| -> Vec<f64> {
        plus.iter()
            .zip(&minus)
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect()
    };
    let cols = [
        fd(
            eps_under_alt(x, phi0 + h, theta, 0.0, 0.0, r),
            eps_under_alt(x, phi0 - h, theta, 0.0, 0.0, r),
        ),
        fd(
            eps_under_alt(x, phi0, theta + h, 0.0, 0.0, r),
            eps_under_alt(x, phi0, theta - h, 0.0, 0.0, r),
        ),
        fd(
            eps_under_alt(x, phi0, theta, h, 0.0, r),
            eps_under_alt(x, phi0, theta, -h, 0.0, r),
        ),
        fd(
            eps_under_alt(x, phi0, theta, 0.0, h, r),
            eps_under_alt(x, phi0, theta, 0.0, -h, r),
        ),
    ];
    let n = eps0.len();
    let mut c = vec![vec![0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..n).map(|t| cols[i][t] * cols[j][t]).sum();
        }
    }
    let inv = invert_small(&c)?;
    let u: Vec<f64> = (2..4)
        .map(|i| (0..n).map(|t| eps0[t] * cols[i][t]).sum())
        .collect();
    let mut t_r = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            t_r += u[i] * inv[2 + i][2 + j] * u[j];
        }
    }
    Some(t_r / sigma2)
}

/// Criterion 6: the recursive-panel statistic equals the brute-force
/// implementation at every grid point on 100 short random series.
fn c6_oracle(_s: &Shared) -> Result<String, String> {
    let mut checked = 0usize;
    for k in 0..100u64 {
        let n = 30 + (k as usize * 7) % 31;
        let theta = -0.6 + 1.2 * ((k % 13) as f64 / 12.0);
        let ts = simulate_ima(0.0, theta, 1.0, n, 0.0, &NoiseSpec::gaussian(100 + k))
            .map_err(|e| e.to_string())?;
        let res = match sup_lm(&ts, 0.25, 0.75, false) {
            Ok(r) => r,
            // Short series can legitimately be untestable; skip them.
            Err(_) => continue,
        };
        for (r, stat) in &res.curve {
            let Some(fast) = stat else { continue };
            let brute = brute_force_stat(
                ts.values(),
                res.fit.phi0,
                res.fit.theta,
                res.fit.sigma2,
                *r,
            )
            .ok_or("singular dense information in the oracle")?;
            let scale = brute.abs().max(1.0);
            if (fast - brute).abs() / scale > 1e-5 {
                return Err(format!(
                    "series {k} (n {n}), r {r}: fast {fast} vs brute {brute}"
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} grid points matched to 1e-5"))
}

/// Criterion 7: location/scale invariance of t_sup, and the above-test
/// equals the below-test on negated data exactly.
fn c7_invariances(_s: &Shared) -> Result<String, String> {
    for k in 0..50u64 {
        let n = 150 + (k as usize * 11) % 200;
        let theta = -0.8 + 1.6 * ((k % 17) as f64 / 16.0);
        let ts = simulate_ima(0.0, theta, 1.0, n, 0.0, &NoiseSpec::gaussian(200 + k))
            .map_err(|e| e.to_string())?;
        let base = sup_lm(&ts, 0.25, 0.75, false).map_err(|e| e.to_string())?;
        let (a, b) = (3.75 - (k as f64) * 0.5, 0.25 + (k as f64 % 7.0));
        let transformed =
            TimeSeries::new(ts.values().iter().map(|v| a + b * v).collect()).unwrap();
        let scaled = sup_lm(&transformed, 0.25, 0.75, false).map_err(|e| e.to_string())?;
        let rel = (scaled.t_sup - base.t_sup).abs() / base.t_sup.abs().max(1.0);
        if rel > 1e-8 {
            return Err(format!(
                "series {k}: t_sup {} vs {} after x -> {a} + {b} x (rel {rel:.2e})",
                base.t_sup, scaled.t_sup
            ));
        }
        let neg = ts.negated();
        let above = sup_lm_above(&neg, 0.25, 0.75, false).map_err(|e| e.to_string())?;
        if above.t_sup != base.t_sup {
            return Err(format!(
                "series {k}: above-test on -X gave {} vs below-test {}",
                above.t_sup, base.t_sup
            ));
        }
    }
    Ok("50 series, invariance to 1e-8, involution exact".into())
}

/// Direct transcription of the ergodicity classification: ergodic iff
/// phi_20 < 0 and (phi_11 < 1, or phi_11 = 1 and phi_10 > 0);
/// null-recurrent iff (iii) phi_11 = 1, phi_20 = 0, phi_10 >= 0, or
/// (iv) phi_11 = 1, phi_20 < 0, phi_10 = 0, or (v) phi_11 < 1,
/// phi_20 = 0; transient otherwise.
fn transcribed_class(p10: f64, p11: f64, p20: f64) -> RegimeClass {
    if p20 < 0.0 && (p11 < 1.0 || (p11 == 1.0 && p10 > 0.0)) {
        RegimeClass::Ergodic
    } else if (p11 == 1.0 && p20 == 0.0 && p10 >= 0.0)
        || (p11 == 1.0 && p20 < 0.0 && p10 == 0.0)
        || (p11 < 1.0 && p20 == 0.0)
    {
        RegimeClass::NullRecurrent
    } else {
        RegimeClass::Transient
    }
}

/// Criterion 8: classifier agreement on a 125k grid that includes the
/// boundary planes phi_11 = 1, phi_20 = 0, phi_10 = 0.
fn c8_classifier(_s: &Shared) -> Result<String, String> {
    let grid = |lo: f64| -> Vec<f64> { (0..50).map(|i| lo + 0.1 * i as f64).collect() };
    let p10s = grid(-2.4); // hits 0 exactly
    let p11s = grid(-1.9); // hits 1 exactly
    let p20s = grid(-2.4); // hits 0 exactly
    let mut count = 0usize;
    for &p10 in &p10s {
        for &p11 in &p11s {
            for &p20 in &p20s {
                let spec = TarmaSpec::common_theta(p10, p11, p20, 1.0, 0.0, 0.0, 1.0);
                let got = classify_regime(&spec).map_err(|e| e.to_string())?;
                let want = transcribed_class(p10, p11, p20);
                if got != want {
                    return Err(format!(
                        "mismatch at ({p10}, {p11}, {p20}): {got:?} vs {want:?}"
                    ));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} grid points, zero mismatches"))
}

/// Criterion 9: (a) occupation density of the ergodic example at h = 3
/// matches the closed form in total variation; (b) the zero-drift F
/// sampler is indistinguishable from the finite-sample null sup (KS);
/// (c) median F increases in h.
fn c9_diffusion(_s: &Shared) -> Result<String, String> {
    // (a) occupation histogram vs closed-form density.
    let h = 3.0;
    let spec = ergodic_example_spec(h, 2000);
    let lo = -0.8f64;
    let hi = 0.8f64;
    let width = 0.02f64;
    let nbins = ((hi - lo) / width).round() as usize;
    let mut occupancy = vec![0.0f64; nbins];
    let mut total = 0.0f64;
    for path_idx in 0..50u64 {
        let w = simulate_threshold_diffusion_horizon(&spec, 200.0, 900, path_idx)
            .map_err(|e| e.to_string())?;
        let burn = w.len() / 5;
        for &v in &w[burn..] {
            if v >= lo && v < hi {
                let b = ((v - lo) / width) as usize;
                occupancy[b.min(nbins - 1)] += 1.0;
            }
            total += 1.0;
        }
    }
    let mut tv = 0.0;
    let mut theory_mass = 0.0;
    for b in 0..nbins {
        let mid = lo + (b as f64 + 0.5) * width;
        let p_theory = ergodic_example_density(h, mid) * width;
        theory_mass += p_theory;
        tv += (occupancy[b] / total - p_theory).abs();
    }
    // Account for the sliver of mass outside the binned range on both
    // empirical and theoretical sides.
    let empirical_out = 1.0 - occupancy.iter().sum::<f64>() / total;
    tv += (empirical_out - (1.0 - theory_mass)).abs();
    let tv = tv / 2.0;
    if tv >= 0.05 {
        return Err(format!("occupation TV distance {tv:.4} >= 0.05 at h = 3"));
    }

    // (b) zero-drift functional draws vs finite-sample null sups.
    let reps = 400usize;
    let mut f_draws = Vec::with_capacity(reps);
    for k in 0..reps as u64 {
        let path = brownian_path(8000, 901, k);
        let taus = occupation_tau_grid(&path, 0.25, 400).map_err(|e| e.to_string())?;
        let curve = eval_functional(&path, &taus).map_err(|e| e.to_string())?;
        if let Some(f) = curve.f_value {
            f_draws.push(f);
        }
    }
    let mut sup_draws = Vec::with_capacity(reps);
    for k in 0..reps as u64 {
        let ts = simulate_ima(0.0, 0.0, 1.0, 2000, 0.0, &NoiseSpec::gaussian(902 + k))
            .map_err(|e| e.to_string())?;
        if let Ok(res) = sup_lm(&ts, 0.25, 0.75, false) {
            sup_draws.push(res.t_sup);
        }
    }
    let (d, p) = two_sample_ks(&f_draws, &sup_draws);
    if p <= 0.01 {
        return Err(format!(
            "zero-drift F vs null sups: KS D {d:.4}, p {p:.4} <= 0.01"
        ));
    }

    // (c) median F strictly increasing in h.
    let mut medians = Vec::new();
    for (i, h) in [1.0, 3.0, 6.0].iter().enumerate() {
        let spec = ergodic_example_spec(*h, 2000);
        let mut draws = Vec::new();
        for k in 0..150u64 {
            let f = limiting_stat_under_alternative(
                &spec,
                -0.5,
                0.5,
                2000,
                200,
                910 + i as u64 * 1000 + k,
            )
            .map_err(|e| e.to_string())?;
            draws.push(f);
        }
        medians.push(percentile(&draws, 0.5));
    }
    if !(medians[0] < medians[1] && medians[1] < medians[2]) {
        return Err(format!(
            "median F not increasing in h: {:.2} / {:.2} / {:.2}",
            medians[0], medians[1], medians[2]
        ));
    }
    Ok(format!(
        "TV {tv:.3}; KS p {p:.3}; median F {:.1}/{:.1}/{:.1}",
        medians[0], medians[1], medians[2]
    ))
}

/// Criterion 10: simulate at the published fit's parameter values and
/// refit; the threshold must land within one coarse-scan grid step and
/// all six coefficients within 3 SEs, in at least 90 of 100 seeds.
fn c10_recovery(_s: &Shared) -> Result<String, String> {
    let spec = published_fit_spec(20.0);
    let truth = [
        spec.phi_1_0,
        spec.phi_1_1,
        spec.phi_2_0,
        spec.phi_2_1,
        spec.theta_lower,
        spec.theta_upper,
    ];
    let mut passed = 0usize;
    for seed in 0..100u64 {
        // Start at the threshold, no burn-in: the lower regime mixes
        // over ~350 lags, so a burnt-in path rarely revisits the upper
        // regime (the published fit's data also hovered near r).
        let ts = match simulate_tarma(&spec, 5000, spec.r, &NoiseSpec::gaussian(seed)) {
            Ok(ts) => ts,
            Err(_) => continue,
        };
        let fit = match fit_tarma11(&ts, (0.005, 0.995), 0.005, false) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let grid = tarma::tarma_fit::aic_profile(&fit);
        let span = grid.last().unwrap().0 - grid.first().unwrap().0;
        // One step of the coarse threshold scan (the search resolution).
        let step = span / 128.0;
        let est = [
            fit.spec.phi_1_0,
            fit.spec.phi_1_1,
            fit.spec.phi_2_0,
            fit.spec.phi_2_1,
            fit.spec.theta_lower,
            fit.spec.theta_upper,
        ];
        let r_ok = (fit.spec.r - spec.r).abs() <= step;
        let coef_ok = (0..6).all(|i| (est[i] - truth[i]).abs() <= 3.0 * fit.se[i]);
        if r_ok && coef_ok {
            passed += 1;
        }
    }
    if passed < 90 {
        return Err(format!("only {passed}/100 seeds recovered the parameters"));
    }
    Ok(format!("{passed}/100 seeds recovered threshold and coefficients"))
}
