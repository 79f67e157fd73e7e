//! Command-line front end: test a series for threshold effects, build
//! null tables, run Monte-Carlo benchmarks, fit TARMA models, simulate
//! DGPs and sample the threshold-diffusion limit.
//!
//! Exit codes: 0 success, 2 configuration/parse errors, 3 data errors
//! (short, degenerate or untestable series), 4 missing null table.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tarma::bench::{
    emit_report, parse_plan, run_experiment, size_corrected_power, ReportFormat,
};
use tarma::bootstrap::wild_bootstrap_pvalue;
use tarma::local_power::{ergodic_example_spec, local_power_curve, simulate_threshold_diffusion};
use tarma::null_dist::{
    build_null_table, default_levels, load_table, pvalue_from_table, save_table, NullTable,
    SampleSize,
};
use tarma::sim::{simulate_dgp, DgpKind, DgpSpec, NoiseSpec};
use tarma::suplm::{sup_lm, sup_lm_above, SupLmResult};
use tarma::tarma_fit::fit_tarma11;
use tarma::{Result, TarmaError, TimeSeries};

/// Default asymptotic null table (path length 5000), shipped with the
/// binary so `tarma test` works without any table file.
const DEFAULT_ASYM_TABLE: &str = include_str!("../../data/null_table_asym.csv");
/// Default finite-sample table (n = 100, 300, 500).
const DEFAULT_FINITE_TABLE: &str = include_str!("../../data/null_table_finite.csv");

#[derive(Parser)]
#[command(
    name = "tarma",
    about = "Threshold regulation tests for near-unit-root time series",
    version
)]
struct Cli {
    /// Size of the worker thread pool (default: all cores). Never
    /// changes numeric output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a CSV series for threshold regulation (sup-LM).
    Test(TestArgs),
    /// Build an empirical null-distribution table.
    NullTable(NullTableArgs),
    /// Run a Monte-Carlo benchmark from plan files.
    Bench(BenchArgs),
    /// Fit a two-regime TARMA(1,1) model by AIC threshold search.
    Fit(FitArgs),
    /// Simulate a named data-generating process to CSV.
    Simulate(SimulateArgs),
    /// Sample the threshold-diffusion local-power limit.
    Diffusion(DiffusionArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Input CSV (one value per line, optional label column).
    input: PathBuf,
    /// Threshold-search band as sample percentiles `a,b`.
    #[arg(long, default_value = "0.25,0.75", value_parser = parse_band)]
    band: (f64, f64),
    /// Test for regulation from above (run on the negated series).
    #[arg(long)]
    above: bool,
    /// Wild-bootstrap p-value with this many resamples instead of a
    /// table lookup.
    #[arg(long, value_name = "B")]
    bootstrap: Option<usize>,
    /// Null-table CSV path (default: the shipped tables).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Fix the drift to zero instead of profiling it.
    #[arg(long)]
    fix_phi0: bool,
    /// RNG seed (bootstrap only).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the (threshold, statistic) curve as CSV.
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Args)]
struct NullTableArgs {
    /// MA parameters to tabulate.
    #[arg(long, value_delimiter = ',', default_value = "0.0")]
    theta: Vec<f64>,
    /// Band half-widths pi (band is [pi, 1-pi]).
    #[arg(long, value_delimiter = ',', default_value = "0.25")]
    pi: Vec<f64>,
    /// Finite sample sizes to tabulate (omit for asymptotic only).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Also tabulate the asymptotic (long-path) entry.
    #[arg(long)]
    asym: bool,
    /// Monte-Carlo replicates per (theta, n) cell.
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    /// Path length for the asymptotic entry.
    #[arg(long, default_value_t = 5000)]
    len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment plan file (`key = value` lines).
    #[arg(long)]
    plan: PathBuf,
    /// Alternative-plan files for size-corrected power; `--plan` is
    /// then the null (tau = 0) member of the family.
    #[arg(long = "alt")]
    alts: Vec<PathBuf>,
    /// Null-table CSV (default: the shipped tables).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Report format.
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    /// Threshold-search band as sample percentiles `a,b`.
    #[arg(long, default_value = "0.01,0.99", value_parser = parse_band)]
    band: (f64, f64),
    /// Minimum fraction of observations per regime.
    #[arg(long, default_value_t = 0.01)]
    min_regime_frac: f64,
    /// Restrict both regimes to a common MA parameter.
    #[arg(long)]
    common_theta: bool,
    /// Write the (threshold, AIC) profile as CSV.
    #[arg(long)]
    profile_out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// DGP name: EQ28, TARMA_IMA, or M1..M11.
    #[arg(long)]
    dgp: String,
    /// Interpolation weight (EQ28 and TARMA_IMA only).
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// MA parameter (EQ28 and TARMA_IMA only).
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Signal-to-noise ratio of added measurement error.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiffusionArgs {
    /// Drift magnitudes h of the ergodic example, one curve point each.
    #[arg(long, value_delimiter = ',', default_value = "1,3,6")]
    h: Vec<f64>,
    /// Monte-Carlo replicates per h.
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Nominal test level for the power curve.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Band half-width pi matched against the null table.
    #[arg(long, default_value_t = 0.25)]
    pi: f64,
    /// Euler steps per unit time.
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Threshold grid points for the limiting functional.
    #[arg(long, default_value_t = 400)]
    tau_points: usize,
    /// Null-table CSV (default: the shipped asymptotic table).
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write one sample diffusion path (h = first value) here.
    #[arg(long)]
    path_out: Option<PathBuf>,
    /// Write the power curve here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_band(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("band wants 'a,b', got '{s}'"));
    }
    let a: f64 = parts[0].parse().map_err(|_| format!("bad band value '{}'", parts[0]))?;
    let b: f64 = parts[1].parse().map_err(|_| format!("bad band value '{}'", parts[1]))?;
    if !(0.0 < a && a < b && b < 1.0) {
        return Err(format!("band must satisfy 0 < a < b < 1, got ({a}, {b})"));
    }
    Ok((a, b))
}

fn exit_code_for(err: &TarmaError) -> u8 {
    match err {
        TarmaError::InvalidSpec(_)
        | TarmaError::UnsupportedSpec(_)
        | TarmaError::Parse { .. }
        | TarmaError::Io(_) => 2,
        TarmaError::TooShort { .. }
        | TarmaError::DegenerateInput(_)
        | TarmaError::UntestableSeries(_) => 3,
        TarmaError::MissingTable(_) => 4,
        TarmaError::InvariantViolation(_) | TarmaError::Internal(_) => 1,
    }
}

/// The shipped tables, merged (finite-sample entries plus asymptotic
/// fallback), parsed from the strings embedded at compile time.
fn builtin_table() -> Result<NullTable> {
    let mut table = tarma::null_dist::parse_table(DEFAULT_FINITE_TABLE)?;
    let asym = tarma::null_dist::parse_table(DEFAULT_ASYM_TABLE)?;
    table.entries.extend(asym.entries);
    Ok(table)
}

fn resolve_table(path: &Option<PathBuf>) -> Result<NullTable> {
    match path {
        Some(p) => load_table(p),
        None => builtin_table(),
    }
}

fn sample_percentile(values: &[f64], v: f64) -> f64 {
    let below = values.iter().filter(|&&x| x <= v).count();
    100.0 * below as f64 / values.len() as f64
}

fn print_test_report(res: &SupLmResult, series: &TimeSeries, above: bool) {
    let direction = if above { "from above" } else { "from below" };
    println!("sup-LM test for threshold regulation {direction}");
    println!(
        "  null fit: theta_hat = {:.6}, phi0_hat = {:.6}, sigma2_hat = {:.6}",
        res.fit.theta, res.fit.phi0, res.fit.sigma2
    );
    println!(
        "  threshold grid: {} points in the [{:.0}%, {:.0}%] band ({} excluded)",
        res.grid_meta.grid_size,
        100.0 * res.grid_meta.a_pct,
        100.0 * res.grid_meta.b_pct,
        res.grid_meta.excluded
    );
    println!("  t_sup = {:.6}", res.t_sup);
    println!(
        "  r_hat = {:.6} ({:.1}th sample percentile)",
        res.r_hat,
        sample_percentile(series.values(), if above { -res.r_hat } else { res.r_hat })
    );
    match &res.pvalue {
        Some((p, source)) => {
            println!("  p-value = {p:.4} [{source}]");
            if let Some(theta_used) = res.theta_used_for_table {
                println!(
                    "  (table lookup used theta = {theta_used}; rule: 0 when |theta_hat| <= 0.3, else sign(theta_hat) * 0.9)"
                );
            }
        }
        None => println!("  p-value unavailable (no matching table entry; try --bootstrap)"),
    }
}

fn cmd_test(args: &TestArgs) -> Result<()> {
    let series = TimeSeries::read_csv(&args.input)?;
    let mut res = if args.above {
        sup_lm_above(&series, args.band.0, args.band.1, args.fix_phi0)?
    } else {
        sup_lm(&series, args.band.0, args.band.1, args.fix_phi0)?
    };
    match args.bootstrap {
        Some(b) => {
            let run = if args.above {
                wild_bootstrap_pvalue(
                    &series.negated(),
                    args.band.0,
                    args.band.1,
                    b,
                    args.seed,
                    args.fix_phi0,
                )?
            } else {
                wild_bootstrap_pvalue(
                    &series,
                    args.band.0,
                    args.band.1,
                    b,
                    args.seed,
                    args.fix_phi0,
                )?
            };
            res.pvalue = Some((run.pvalue, tarma::suplm::PvalueSource::Bootstrap));
        }
        None => {
            let table = resolve_table(&args.table)?;
            let theta_hat = res.fit.theta;
            let n = series.len() - 1;
            // A missing entry (e.g. an asymmetric band) leaves the
            // p-value unset rather than failing the whole test report.
            let _ = pvalue_from_table(&mut res, &table, theta_hat, n);
        }
    }
    print_test_report(&res, &series, args.above);
    if let Some(path) = &args.curve_out {
        let mut out = String::from("threshold,statistic\n");
        for (r, s) in &res.curve {
            match s {
                Some(v) => out.push_str(&format!("{r},{v}\n")),
                None => out.push_str(&format!("{r},\n")),
            }
        }
        std::fs::write(path, out)?;
        println!("  curve written to {}", path.display());
    }
    Ok(())
}

fn cmd_null_table(args: &NullTableArgs) -> Result<()> {
    let mut sizes: Vec<SampleSize> = args.n.iter().map(|&n| SampleSize::Finite(n)).collect();
    if args.asym || sizes.is_empty() {
        sizes.push(SampleSize::Asymptotic);
    }
    let table = build_null_table(
        &args.theta,
        &sizes,
        &args.pi,
        args.reps,
        args.seed,
        args.len,
        &default_levels(),
    )?;
    save_table(&table, &args.out)?;
    println!(
        "wrote {} entries ({} reps each) to {}",
        table.entries.len(),
        table.reps,
        args.out.display()
    );
    // Print the headline quantiles for a quick sanity read.
    for entry in &table.entries {
        println!(
            "  theta={} n={} pi={}: 90% {:.2}  95% {:.2}  99% {:.2}",
            entry.theta,
            entry.n,
            entry.pi,
            entry.quantile(0.90),
            entry.quantile(0.95),
            entry.quantile(0.99)
        );
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let format = match args.format.as_str() {
        "csv" => ReportFormat::Csv,
        "markdown" | "md" => ReportFormat::Markdown,
        other => {
            return Err(TarmaError::InvalidSpec(format!(
                "unknown format '{other}' (want csv or markdown)"
            )))
        }
    };
    let plan = parse_plan(&std::fs::read_to_string(&args.plan)?)?;
    let table = resolve_table(&args.table)?;
    let report = if args.alts.is_empty() {
        run_experiment(&plan, Some(&table))?
    } else {
        let alts = args
            .alts
            .iter()
            .map(|p| parse_plan(&std::fs::read_to_string(p)?))
            .collect::<Result<Vec<_>>>()?;
        size_corrected_power(&plan, &alts, Some(&table))?
    };
    let text = emit_report(&report, format);
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let series = TimeSeries::read_csv(&args.input)?;
    let fit = fit_tarma11(
        &series,
        args.band,
        args.min_regime_frac,
        args.common_theta,
    )?;
    let s = &fit.spec;
    println!("TARMA(1,1) fit by AIC threshold search");
    println!(
        "  r_hat = {:.6} (regime occupancy: {} lower / {} upper)",
        s.r, fit.regime_counts.0, fit.regime_counts.1
    );
    println!("  lower regime: phi0 = {:.6} (se {:.4}), phi1 = {:.6} (se {:.4}), theta = {:.6} (se {:.4})",
        s.phi_1_0, fit.se[0], s.phi_1_1, fit.se[1], s.theta_lower, fit.se[4]);
    println!("  upper regime: phi0 = {:.6} (se {:.4}), phi1 = {:.6} (se {:.4}), theta = {:.6} (se {:.4})",
        s.phi_2_0, fit.se[2], s.phi_2_1, fit.se[3], s.theta_upper, fit.se[5]);
    println!(
        "  sigma2_hat = {:.6}, AIC = {:.4} (k = {})",
        fit.sigma2_hat, fit.aic, fit.aic_k
    );
    if let Some(path) = &args.profile_out {
        let mut out = String::from("threshold,aic\n");
        for (r, aic) in tarma::tarma_fit::aic_profile(&fit) {
            out.push_str(&format!("{r},{aic}\n"));
        }
        std::fs::write(path, out)?;
        println!("  AIC profile written to {}", path.display());
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let kind = match args.dgp.as_str() {
        "EQ28" => DgpKind::Eq28 {
            tau: args.tau,
            theta: args.theta,
        },
        "TARMA_IMA" => DgpKind::TarmaIma {
            tau: args.tau,
            theta: args.theta,
        },
        "M1" => DgpKind::M1,
        "M2" => DgpKind::M2,
        "M3" => DgpKind::M3,
        "M4" => DgpKind::M4,
        "M5" => DgpKind::M5,
        "M6" => DgpKind::M6,
        "M7" => DgpKind::M7,
        "M8" => DgpKind::M8,
        "M9" => DgpKind::M9,
        "M10" => DgpKind::M10,
        "M11" => DgpKind::M11,
        other => {
            return Err(TarmaError::InvalidSpec(format!(
                "unknown dgp '{other}' (want EQ28, TARMA_IMA or M1..M11)"
            )))
        }
    };
    let dgp = match args.snr {
        Some(snr) => DgpSpec::with_snr(kind, snr),
        None => DgpSpec::new(kind),
    };
    let series = simulate_dgp(&dgp, args.n, &NoiseSpec::gaussian(args.seed))?;
    series.write_csv(&args.out)?;
    println!(
        "wrote {} observations of {} to {}",
        series.len(),
        dgp.label(),
        args.out.display()
    );
    Ok(())
}

fn cmd_diffusion(args: &DiffusionArgs) -> Result<()> {
    if let Some(path) = &args.path_out {
        let spec = ergodic_example_spec(args.h[0], args.steps);
        let w = simulate_threshold_diffusion(&spec, args.seed)?;
        let mut out = String::from("s,w\n");
        for (i, v) in w.iter().enumerate() {
            out.push_str(&format!("{},{v}\n", i as f64 / (w.len() - 1) as f64));
        }
        std::fs::write(path, out)?;
        println!("sample path (h = {}) written to {}", args.h[0], path.display());
    }
    let table = resolve_table(&args.table)?;
    let family: Vec<(f64, tarma::local_power::DiffusionSpec)> = args
        .h
        .iter()
        .map(|&h| (h, ergodic_example_spec(h, args.steps)))
        .collect();
    let curve = local_power_curve(
        &family,
        args.level,
        args.reps,
        args.seed,
        &table,
        args.pi,
        args.pi - 0.5,
        0.5 - args.pi,
        args.steps,
        args.tau_points,
    )?;
    let mut text = String::from("h,rejection_rate,mc_se\n");
    for (h, rate, se) in &curve {
        text.push_str(&format!("{h},{rate:.4},{se:.4}\n"));
    }
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not size the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::NullTable(args) => cmd_null_table(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Diffusion(args) => cmd_diffusion(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
