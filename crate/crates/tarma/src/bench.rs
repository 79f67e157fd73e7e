//! Monte-Carlo benchmark harness: empirical size and (size-corrected)
//! power of the sup-LM tests over the simulation DGP families.
//!
//! A [`BenchReport`] is a pure function of the plan and its seed: each
//! replicate draws from its own RNG stream derived from
//! `(seed, cell index, replicate index)`, so thread count never changes
//! a number.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::bootstrap::wild_bootstrap_pvalue;
use crate::error::{Result, TarmaError};
use crate::null_dist::{pvalue_from_table, NullTable};
use crate::sim::{simulate_dgp, DgpKind, DgpSpec, NoiseSpec};
use crate::suplm::sup_lm;
use crate::util::percentile;

/// Which sup-LM variant a cell runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestKind {
    /// Statistic against a precomputed null table (`sLM`).
    Asymptotic,
    /// Wild-bootstrap p-value (`sLMb`).
    Bootstrap,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestKind::Asymptotic => write!(f, "sLM-asymptotic"),
            TestKind::Bootstrap => write!(f, "sLM-bootstrap"),
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = TarmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sLM-asymptotic" | "sLM" | "asymptotic" => Ok(TestKind::Asymptotic),
            "sLM-bootstrap" | "sLMb" | "bootstrap" => Ok(TestKind::Bootstrap),
            other => Err(TarmaError::InvalidSpec(format!(
                "unknown test kind '{other}' (want sLM-asymptotic or sLM-bootstrap)"
            ))),
        }
    }
}

/// One Monte-Carlo experiment: a DGP, a sample size, and the tests to
/// run on every replicate.
#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub dgp: DgpSpec,
    pub n: usize,
    pub reps: usize,
    pub tests: Vec<TestKind>,
    /// Nominal size of each test.
    pub level: f64,
    /// Threshold-search band as sample percentiles.
    pub band: (f64, f64),
    /// Bootstrap resamples per replicate (bootstrap cells only).
    pub bootstrap_b: usize,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return Err(TarmaError::InvalidSpec(format!(
                "plan needs reps >= 100, got {}",
                self.reps
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(TarmaError::InvalidSpec(format!(
                "level must lie in (0,1), got {}",
                self.level
            )));
        }
        let (a, b) = self.band;
        if !(a > 0.0 && a < b && b < 1.0) {
            return Err(TarmaError::InvalidSpec(format!(
                "band must satisfy 0 < a < b < 1, got ({a}, {b})"
            )));
        }
        if self.tests.is_empty() {
            return Err(TarmaError::InvalidSpec("plan lists no tests".into()));
        }
        if self.tests.contains(&TestKind::Bootstrap) && self.bootstrap_b < 99 {
            return Err(TarmaError::InvalidSpec(format!(
                "bootstrap cells need bootstrap_B >= 99, got {}",
                self.bootstrap_b
            )));
        }
        Ok(())
    }
}

/// One table cell of a report.
#[derive(Clone, Debug)]
pub struct CellRecord {
    pub dgp: String,
    pub n: usize,
    pub test: TestKind,
    pub rejection_pct: f64,
    /// Binomial Monte-Carlo standard error, in percentage points.
    pub mc_se: f64,
    /// Replicates that entered the denominator.
    pub reps_effective: usize,
    /// Replicates dropped as untestable (must stay below 1%).
    pub untestable: usize,
}

/// The output of a benchmark run.
#[derive(Clone, Debug)]
pub struct BenchReport {
    pub cells: Vec<CellRecord>,
    pub seed: u64,
    /// Wall-clock seconds; informational only, never emitted.
    pub runtime_secs: f64,
}

/// Raw per-replicate draws for one (plan, test) cell, kept so that
/// size correction can recompute rejections under calibrated cutoffs.
#[derive(Clone, Debug)]
struct CellSamples {
    test: TestKind,
    /// Observed sup-LM statistic per testable replicate.
    stats: Vec<f64>,
    /// Table or bootstrap p-value per testable replicate.
    pvalues: Vec<f64>,
    untestable: usize,
}

const SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

fn replicate_seed(seed: u64, cell: usize, rep: usize) -> u64 {
    seed.wrapping_add(SEED_MIX.wrapping_mul((cell as u64) << 32 | (rep as u64 + 1)))
}

fn is_untestable(err: &TarmaError) -> bool {
    matches!(
        err,
        TarmaError::UntestableSeries(_) | TarmaError::DegenerateInput(_)
    )
}

/// Run every replicate of one cell, returning the raw statistic and
/// p-value samples. `table` is required for asymptotic cells.
fn run_cell(
    plan: &ExperimentPlan,
    cell_index: usize,
    test: TestKind,
    table: Option<&NullTable>,
) -> Result<CellSamples> {
    if test == TestKind::Asymptotic && table.is_none() {
        return Err(TarmaError::MissingTable(
            "asymptotic cells need a null table".into(),
        ));
    }
    let draws: Vec<Result<Option<(f64, f64)>>> = (0..plan.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = replicate_seed(plan.seed, cell_index, rep);
            let series = simulate_dgp(&plan.dgp, plan.n, &NoiseSpec::gaussian(rep_seed))?;
            let outcome = match test {
                TestKind::Asymptotic => sup_lm(&series, plan.band.0, plan.band.1, false)
                    .and_then(|mut res| {
                        let theta_hat = res.fit.theta;
                        let p =
                            pvalue_from_table(&mut res, table.unwrap(), theta_hat, plan.n)?;
                        Ok((res.t_sup, p))
                    }),
                TestKind::Bootstrap => wild_bootstrap_pvalue(
                    &series,
                    plan.band.0,
                    plan.band.1,
                    plan.bootstrap_b,
                    rep_seed ^ SEED_MIX,
                    false,
                )
                .map(|b| (b.t_obs, b.pvalue)),
            };
            match outcome {
                Ok(pair) => Ok(Some(pair)),
                Err(e) if is_untestable(&e) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut stats = Vec::with_capacity(plan.reps);
    let mut pvalues = Vec::with_capacity(plan.reps);
    let mut untestable = 0usize;
    for draw in draws {
        match draw? {
            Some((t, p)) => {
                stats.push(t);
                pvalues.push(p);
            }
            None => untestable += 1,
        }
    }
    if untestable * 100 >= plan.reps {
        return Err(TarmaError::InvariantViolation(format!(
            "{untestable} of {} replicates untestable (>= 1%) for {}",
            plan.reps,
            plan.dgp.label()
        )));
    }
    Ok(CellSamples {
        test,
        stats,
        pvalues,
        untestable,
    })
}

fn collect_cells(plan: &ExperimentPlan, table: Option<&NullTable>) -> Result<Vec<CellSamples>> {
    plan.validate()?;
    plan.tests
        .iter()
        .enumerate()
        .map(|(ci, &test)| run_cell(plan, ci, test, table))
        .collect()
}

fn cell_record(plan: &ExperimentPlan, samples: &CellSamples, rejected: usize) -> CellRecord {
    let m = samples.pvalues.len();
    let p = if m == 0 { 0.0 } else { rejected as f64 / m as f64 };
    let se = if m == 0 {
        0.0
    } else {
        (p * (1.0 - p) / m as f64).sqrt()
    };
    CellRecord {
        dgp: plan.dgp.label(),
        n: plan.n,
        test: samples.test,
        rejection_pct: 100.0 * p,
        mc_se: 100.0 * se,
        reps_effective: m,
        untestable: samples.untestable,
    }
}

/// Run a plan and tally nominal-level rejections (`p <= level`).
pub fn run_experiment(plan: &ExperimentPlan, table: Option<&NullTable>) -> Result<BenchReport> {
    let start = Instant::now();
    let mut cells = Vec::new();
    for samples in collect_cells(plan, table)? {
        let rejected = samples
            .pvalues
            .iter()
            .filter(|&&p| p <= plan.level)
            .count();
        cells.push(cell_record(plan, &samples, rejected));
    }
    Ok(BenchReport {
        cells,
        seed: plan.seed,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Size-corrected power: calibrate each test's cutoff on the null plan
/// (the tau = 0 member of the family), then evaluate every alternative
/// plan against the calibrated cutoff.
///
/// Asymptotic tests reject when the statistic exceeds the empirical
/// `1 - level` quantile of the null-plan statistics; bootstrap tests
/// reject when the bootstrap p-value falls at or below the empirical
/// `level` quantile of the null-plan bootstrap p-values.
pub fn size_corrected_power(
    null_plan: &ExperimentPlan,
    alt_plans: &[ExperimentPlan],
    table: Option<&NullTable>,
) -> Result<BenchReport> {
    let start = Instant::now();
    for alt in alt_plans {
        if alt.n != null_plan.n || alt.band != null_plan.band {
            return Err(TarmaError::InvalidSpec(format!(
                "size correction needs matching (n, band); null has ({}, {:?}), alt '{}' has ({}, {:?})",
                null_plan.n,
                null_plan.band,
                alt.dgp.label(),
                alt.n,
                alt.band
            )));
        }
        if alt.tests != null_plan.tests {
            return Err(TarmaError::InvalidSpec(
                "size correction needs identical test lists in every plan".into(),
            ));
        }
    }
    let null_samples = collect_cells(null_plan, table)?;
    // Per-test calibrated cutoff: statistic critical value for the
    // asymptotic test, p-value cutoff for the bootstrap test.
    let cutoffs: Vec<(TestKind, f64)> = null_samples
        .iter()
        .map(|s| {
            let cut = match s.test {
                TestKind::Asymptotic => percentile(&s.stats, 1.0 - null_plan.level),
                TestKind::Bootstrap => percentile(&s.pvalues, null_plan.level),
            };
            (s.test, cut)
        })
        .collect();

    let mut cells = Vec::new();
    let mut tally = |plan: &ExperimentPlan, samples: &[CellSamples]| {
        for (s, &(_, cut)) in samples.iter().zip(&cutoffs) {
            let rejected = match s.test {
                TestKind::Asymptotic => s.stats.iter().filter(|&&t| t > cut).count(),
                TestKind::Bootstrap => s.pvalues.iter().filter(|&&p| p <= cut).count(),
            };
            cells.push(cell_record(plan, s, rejected));
        }
    };
    tally(null_plan, &null_samples);
    for alt in alt_plans {
        let samples = collect_cells(alt, table)?;
        tally(alt, &samples);
    }
    Ok(BenchReport {
        cells,
        seed: null_plan.seed,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Report output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Render a report. CSV is lossless; markdown lays cells out as
/// DGP rows by test columns, `rejection% (mc_se)` per cell.
pub fn emit_report(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# seed: {}\n", report.seed));
            out.push_str("dgp,n,test,rejection_pct,mc_se,reps_effective,untestable\n");
            for c in &report.cells {
                // The dgp label can contain commas, so it is quoted.
                out.push_str(&format!(
                    "\"{}\",{},{},{:.4},{:.4},{},{}\n",
                    c.dgp, c.n, c.test, c.rejection_pct, c.mc_se, c.reps_effective, c.untestable
                ));
            }
            out
        }
        ReportFormat::Markdown => {
            let mut tests: Vec<TestKind> = Vec::new();
            for c in &report.cells {
                if !tests.contains(&c.test) {
                    tests.push(c.test);
                }
            }
            let mut rows: Vec<(String, usize)> = Vec::new();
            for c in &report.cells {
                let key = (c.dgp.clone(), c.n);
                if !rows.contains(&key) {
                    rows.push(key);
                }
            }
            let mut out = String::new();
            out.push_str("| dgp | n |");
            for t in &tests {
                out.push_str(&format!(" {t} |"));
            }
            out.push('\n');
            out.push_str("|---|---|");
            for _ in &tests {
                out.push_str("---|");
            }
            out.push('\n');
            for (dgp, n) in &rows {
                out.push_str(&format!("| {dgp} | {n} |"));
                for t in &tests {
                    let cell = report
                        .cells
                        .iter()
                        .find(|c| &c.dgp == dgp && c.n == *n && c.test == *t);
                    match cell {
                        Some(c) => {
                            out.push_str(&format!(" {:.1} ({:.1}) |", c.rejection_pct, c.mc_se))
                        }
                        None => out.push_str(" - |"),
                    }
                }
                out.push('\n');
            }
            out
        }
    }
}

/// Parse a plan file: flat `key = value` lines, `#` comments.
///
/// Keys: `dgp` (EQ28, M1..M11, TARMA_IMA), `tau`, `theta` (EQ28 and
/// TARMA_IMA only), `snr` (number or `inf`), `n`, `reps`, `tests`
/// (comma-separated), `level`, `band` (`a,b`), `bootstrap_B`, `seed`.
pub fn parse_plan(text: &str) -> Result<ExperimentPlan> {
    let mut kv = std::collections::HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| TarmaError::Parse {
            line: i + 1,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        kv.insert(k.trim().to_string(), (v.trim().to_string(), i + 1));
    }
    let take = |key: &str| -> Result<(String, usize)> {
        kv.get(key).cloned().ok_or_else(|| TarmaError::Parse {
            line: 0,
            msg: format!("missing plan key '{key}'"),
        })
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        let (v, line) = take(key)?;
        if v == "inf" {
            return Ok(f64::INFINITY);
        }
        v.parse().map_err(|_| TarmaError::Parse {
            line,
            msg: format!("'{key}' is not a number: '{v}'"),
        })
    };
    let parse_usize = |key: &str| -> Result<usize> {
        let (v, line) = take(key)?;
        v.parse().map_err(|_| TarmaError::Parse {
            line,
            msg: format!("'{key}' is not an integer: '{v}'"),
        })
    };

    let (dgp_name, dgp_line) = take("dgp")?;
    let kind = match dgp_name.as_str() {
        "EQ28" => DgpKind::Eq28 {
            tau: parse_f64("tau")?,
            theta: parse_f64("theta")?,
        },
        "TARMA_IMA" => DgpKind::TarmaIma {
            tau: parse_f64("tau")?,
            theta: parse_f64("theta")?,
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
            return Err(TarmaError::Parse {
                line: dgp_line,
                msg: format!("unknown dgp '{other}'"),
            })
        }
    };
    let snr = if kv.contains_key("snr") {
        parse_f64("snr")?
    } else {
        f64::INFINITY
    };
    let (tests_str, tests_line) = take("tests")?;
    let tests = tests_str
        .split(',')
        .map(|t| {
            t.parse::<TestKind>().map_err(|e| TarmaError::Parse {
                line: tests_line,
                msg: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (band_str, band_line) = take("band")?;
    let band_parts: Vec<&str> = band_str.split(',').map(|s| s.trim()).collect();
    if band_parts.len() != 2 {
        return Err(TarmaError::Parse {
            line: band_line,
            msg: format!("'band' wants two comma-separated numbers, got '{band_str}'"),
        });
    }
    let band = (
        band_parts[0].parse().map_err(|_| TarmaError::Parse {
            line: band_line,
            msg: format!("bad band value '{}'", band_parts[0]),
        })?,
        band_parts[1].parse().map_err(|_| TarmaError::Parse {
            line: band_line,
            msg: format!("bad band value '{}'", band_parts[1]),
        })?,
    );
    let bootstrap_b = if kv.contains_key("bootstrap_B") {
        parse_usize("bootstrap_B")?
    } else {
        500
    };
    let seed = if kv.contains_key("seed") {
        parse_usize("seed")? as u64
    } else {
        0
    };
    let plan = ExperimentPlan {
        dgp: DgpSpec::with_snr(kind, snr),
        n: parse_usize("n")?,
        reps: parse_usize("reps")?,
        tests,
        level: parse_f64("level")?,
        band,
        bootstrap_b,
        seed,
    };
    plan.validate()?;
    Ok(plan)
}
