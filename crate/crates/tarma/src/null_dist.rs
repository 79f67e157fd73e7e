//! Empirical null distributions of the sup-LM statistic: building
//! quantile tables from simulated null paths (random walk / IMA(1,1)),
//! persisting them as CSV, and turning a statistic into a p-value with
//! the finite-sample theta rule.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Result, TarmaError};
use crate::ima::fit_ima11;
use crate::sim::NoiseSpec;
use crate::suplm::{threshold_grid, LmContext, PvalueSource, SupLmResult};
use crate::util::{percentile, percentile_sorted};

/// Series length used for asymptotic-law tables.
pub const DEFAULT_ASYM_PATH_LEN: usize = 5000;
/// |theta_hat| beyond which the finite-sample table switches to 0.9.
const THETA_RULE_CUTOFF: f64 = 0.3;
/// Minimum replicate count for a table that is written to disk.
const MIN_PERSISTED_REPS: usize = 1000;

/// Sample size key: a concrete n or the asymptotic sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SampleSize {
    Finite(usize),
    Asymptotic,
}

impl std::fmt::Display for SampleSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleSize::Finite(n) => write!(f, "{n}"),
            SampleSize::Asymptotic => write!(f, "asym"),
        }
    }
}

/// One (theta, n, pi) row set of the table.
#[derive(Clone, Debug, PartialEq)]
pub struct NullEntry {
    pub theta: f64,
    pub n: SampleSize,
    pub pi: f64,
    pub levels: Vec<f64>,
    pub quantiles: Vec<f64>,
}

impl NullEntry {
    fn validate(&self) -> Result<()> {
        if !(0.0 < self.pi && self.pi < 0.5) {
            return Err(TarmaError::InvariantViolation(format!(
                "pi out of (0, 0.5): {}",
                self.pi
            )));
        }
        if self.levels.len() != self.quantiles.len() || self.levels.is_empty() {
            return Err(TarmaError::InvariantViolation(
                "levels/quantiles length mismatch".into(),
            ));
        }
        let inc = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !inc(&self.levels) {
            return Err(TarmaError::InvariantViolation(
                "levels must be strictly increasing".into(),
            ));
        }
        if !inc(&self.quantiles) {
            return Err(TarmaError::InvariantViolation(
                "quantiles must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Quantile at `level`, monotone linear interpolation in the stored
    /// grid, clamped at the ends.
    pub fn quantile(&self, level: f64) -> f64 {
        let ls = &self.levels;
        let qs = &self.quantiles;
        if level <= ls[0] {
            return qs[0];
        }
        if level >= *ls.last().unwrap() {
            return *qs.last().unwrap();
        }
        let i = ls.partition_point(|&l| l < level);
        let w = (level - ls[i - 1]) / (ls[i] - ls[i - 1]);
        qs[i - 1] + w * (qs[i] - qs[i - 1])
    }

    /// Right-tail p-value of `t` by inverse interpolation, clamped to
    /// [1 - max level, 1 - min level].
    pub fn pvalue(&self, t: f64) -> f64 {
        let qs = &self.quantiles;
        let ls = &self.levels;
        if t <= qs[0] {
            return 1.0 - ls[0];
        }
        if t >= *qs.last().unwrap() {
            return 1.0 - *ls.last().unwrap();
        }
        let i = qs.partition_point(|&q| q < t);
        let w = (t - qs[i - 1]) / (qs[i] - qs[i - 1]);
        1.0 - (ls[i - 1] + w * (ls[i] - ls[i - 1]))
    }
}

/// Persisted empirical null distribution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NullTable {
    pub entries: Vec<NullEntry>,
    pub reps: usize,
    pub path_len: usize,
    pub seed: u64,
    pub created: String,
}

impl NullTable {
    /// Find the entry for (theta, pi), preferring the nearest finite n
    /// and falling back to the asymptotic entry.
    pub fn lookup(&self, theta: f64, n: usize, pi: f64) -> Option<&NullEntry> {
        let matches: Vec<&NullEntry> = self
            .entries
            .iter()
            .filter(|e| (e.theta - theta).abs() < 1e-9 && (e.pi - pi).abs() < 1e-9)
            .collect();
        matches
            .iter()
            .filter_map(|e| match e.n {
                SampleSize::Finite(m) => Some((m.abs_diff(n), *e)),
                SampleSize::Asymptotic => None,
            })
            .min_by_key(|(d, _)| *d)
            .map(|(_, e)| e)
            .or_else(|| {
                matches
                    .into_iter()
                    .find(|e| e.n == SampleSize::Asymptotic)
            })
    }
}

/// Default level grid: percent steps plus far-tail points, covering
/// the conventional 90/95/99/99.9% quantiles.
pub fn default_levels() -> Vec<f64> {
    let mut levels = vec![0.001, 0.005];
    for i in 1..100 {
        levels.push(i as f64 / 100.0);
    }
    levels.extend_from_slice(&[0.995, 0.999]);
    levels
}

/// Simulate one null path and return the sup of the statistic for each
/// requested band, sharing a single curve evaluation over the widest
/// band. `pis` must be sorted ascending (widest band first).
fn null_sups_one_path(
    theta: f64,
    len: usize,
    pis: &[f64],
    seed: u64,
    rep: u64,
) -> Result<Vec<Option<f64>>> {
    let noise = NoiseSpec::Gaussian { seed };
    let path = {
        // Per-replicate sub-stream: each replicate draws from stream
        // 2*rep (innovations), leaving odd streams for other uses.
        // Five warm-up steps are dropped so the lagged-innovation state
        // is stationary, matching the DGP simulator in `sim`.
        let warm = 5usize;
        let eps = noise.draw(len + warm, 1.0, 2 * rep)?;
        let mut x = Vec::with_capacity(len + warm + 1);
        x.push(0.0);
        let mut prev = 0.0;
        for (t, &e) in eps.iter().enumerate() {
            x.push(x[t] + e - theta * prev);
            prev = e;
        }
        crate::series::TimeSeries::new(x[warm..].to_vec())?
    };
    let fit = fit_ima11(&path, None)?;
    let ctx = LmContext::new(&path, &fit)?;
    let pi_min = pis[0];
    let grid = threshold_grid(&path, pi_min, 1.0 - pi_min)?;
    let stats = ctx.curve_over(&grid);
    let x = path.values();
    let mut out = Vec::with_capacity(pis.len());
    for &pi in pis {
        let lo = percentile(x, pi);
        let hi = percentile(x, 1.0 - pi);
        let sup = grid
            .iter()
            .zip(&stats)
            .filter(|(r, _)| **r >= lo && **r <= hi)
            .filter_map(|(_, s)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(if sup.is_finite() { Some(sup) } else { None });
    }
    Ok(out)
}

/// Build an empirical null table by simulating IMA(1,1) paths (a pure
/// random walk when theta = 0) and tabulating quantiles of the sup-LM
/// statistic for every (theta, n, pi) combination.
pub fn build_null_table(
    theta_list: &[f64],
    n_list: &[SampleSize],
    pi_list: &[f64],
    reps: usize,
    seed: u64,
    path_len: usize,
    levels: &[f64],
) -> Result<NullTable> {
    if reps == 0 || theta_list.is_empty() || n_list.is_empty() || pi_list.is_empty() {
        return Err(TarmaError::InvalidSpec("empty table request".into()));
    }
    for &pi in pi_list {
        if !(0.0 < pi && pi < 0.5) {
            return Err(TarmaError::InvalidSpec(format!(
                "pi must be in (0, 0.5), got {pi}"
            )));
        }
    }
    let mut pis = pi_list.to_vec();
    pis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut entries = Vec::new();
    for (ci, &theta) in theta_list.iter().enumerate() {
        for (cj, &nsz) in n_list.iter().enumerate() {
            let len = match nsz {
                SampleSize::Finite(n) => n,
                SampleSize::Asymptotic => path_len,
            };
            // Independent seed block per (theta, n) cell so cells can be
            // built separately and merged without replicate overlap.
            let cell_seed = seed
                .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul((ci * 64 + cj + 1) as u64));
            let sups: Vec<Vec<Option<f64>>> = (0..reps as u64)
                .into_par_iter()
                .map(|rep| {
                    null_sups_one_path(theta, len, &pis, cell_seed, rep)
                        .unwrap_or_else(|_| vec![None; pis.len()])
                })
                .collect();
            for (k, &pi) in pis.iter().enumerate() {
                let mut vals: Vec<f64> = sups.iter().filter_map(|v| v[k]).collect();
                if vals.len() < reps / 2 {
                    return Err(TarmaError::DegenerateInput(format!(
                        "too many untestable replicates for theta={theta}, n={nsz}, pi={pi}"
                    )));
                }
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let quantiles: Vec<f64> =
                    levels.iter().map(|&l| percentile_sorted(&vals, l)).collect();
                let entry = NullEntry {
                    theta,
                    n: nsz,
                    pi,
                    levels: levels.to_vec(),
                    quantiles,
                };
                entry.validate()?;
                entries.push(entry);
            }
        }
    }
    Ok(NullTable {
        entries,
        reps,
        path_len,
        seed,
        created: chrono::Utc::now().to_rfc3339(),
    })
}

/// Theta used for table lookup under the finite-sample rule: 0 when
/// |theta_hat| <= 0.3, else sign(theta_hat) * 0.9.
pub fn theta_for_table(theta_hat: f64) -> f64 {
    if theta_hat.abs() <= THETA_RULE_CUTOFF {
        0.0
    } else {
        0.9f64.copysign(theta_hat)
    }
}

/// Attach a table-based p-value to a test result, applying the theta
/// rule, and return it.
pub fn pvalue_from_table(
    result: &mut SupLmResult,
    table: &NullTable,
    theta_hat: f64,
    n: usize,
) -> Result<f64> {
    let pi = result.grid_meta.a_pct;
    if (result.grid_meta.b_pct - (1.0 - pi)).abs() > 1e-9 {
        return Err(TarmaError::InvalidSpec(format!(
            "table lookup needs a symmetric band [pi, 1-pi], got [{}, {}]",
            result.grid_meta.a_pct, result.grid_meta.b_pct
        )));
    }
    let theta_used = theta_for_table(theta_hat);
    let entry = table.lookup(theta_used, n, pi).ok_or_else(|| {
        TarmaError::MissingTable(format!(
            "no null-table entry for theta={theta_used}, n={n}, pi={pi}"
        ))
    })?;
    let p = entry.pvalue(result.t_sup);
    let source = match entry.n {
        SampleSize::Asymptotic => PvalueSource::AsymptoticTable,
        SampleSize::Finite(_) => PvalueSource::FiniteSampleTable,
    };
    result.pvalue = Some((p, source));
    result.theta_used_for_table = Some(theta_used);
    Ok(p)
}

/// Write a table as CSV: `#`-prefixed metadata, then
/// `theta,n,pi,level,quantile` rows with `asym` as the sentinel n.
pub fn save_table(table: &NullTable, path: &Path) -> Result<()> {
    if table.reps < MIN_PERSISTED_REPS {
        return Err(TarmaError::InvalidSpec(format!(
            "refusing to persist a table built from {} < {MIN_PERSISTED_REPS} replicates",
            table.reps
        )));
    }
    for e in &table.entries {
        e.validate()?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# reps={}", table.reps)?;
    writeln!(f, "# path_len={}", table.path_len)?;
    writeln!(f, "# seed={}", table.seed)?;
    writeln!(f, "# created={}", table.created)?;
    writeln!(f, "theta,n,pi,level,quantile")?;
    for e in &table.entries {
        for (l, q) in e.levels.iter().zip(&e.quantiles) {
            writeln!(f, "{},{},{},{},{}", e.theta, e.n, e.pi, l, q)?;
        }
    }
    Ok(())
}

/// Load a table from CSV, validating every entry.
pub fn load_table(path: &Path) -> Result<NullTable> {
    parse_table(&std::fs::read_to_string(path)?)
}

/// Parse a table from CSV text, validating every entry.
pub fn parse_table(text: &str) -> Result<NullTable> {
    let mut reps = 0usize;
    let mut path_len = 0usize;
    let mut seed = 0u64;
    let mut created = String::new();
    let mut entries: Vec<NullEntry> = Vec::new();
    let mut header_seen = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let parse_err = |msg: String| TarmaError::Parse { line: lineno, msg };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            let meta = meta.trim();
            if let Some((k, v)) = meta.split_once('=') {
                match k.trim() {
                    "reps" => reps = v.trim().parse().map_err(|e| parse_err(format!("{e}")))?,
                    "path_len" => {
                        path_len = v.trim().parse().map_err(|e| parse_err(format!("{e}")))?
                    }
                    "seed" => seed = v.trim().parse().map_err(|e| parse_err(format!("{e}")))?,
                    "created" => created = v.trim().to_string(),
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if trimmed != "theta,n,pi,level,quantile" {
                return Err(parse_err(format!("unexpected header `{trimmed}`")));
            }
            header_seen = true;
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        if parts.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, got {}", parts.len())));
        }
        let theta: f64 = parts[0]
            .parse()
            .map_err(|e| parse_err(format!("theta: {e}")))?;
        let n = if parts[1] == "asym" {
            SampleSize::Asymptotic
        } else {
            SampleSize::Finite(
                parts[1]
                    .parse()
                    .map_err(|e| parse_err(format!("n: {e}")))?,
            )
        };
        let pi: f64 = parts[2]
            .parse()
            .map_err(|e| parse_err(format!("pi: {e}")))?;
        let level: f64 = parts[3]
            .parse()
            .map_err(|e| parse_err(format!("level: {e}")))?;
        let quantile: f64 = parts[4]
            .parse()
            .map_err(|e| parse_err(format!("quantile: {e}")))?;
        let same_key = entries.last().map(|e: &NullEntry| {
            (e.theta - theta).abs() < 1e-12 && e.n == n && (e.pi - pi).abs() < 1e-12
        });
        if same_key == Some(true) {
            let e = entries.last_mut().unwrap();
            e.levels.push(level);
            e.quantiles.push(quantile);
        } else {
            entries.push(NullEntry {
                theta,
                n,
                pi,
                levels: vec![level],
                quantiles: vec![quantile],
            });
        }
    }
    if entries.is_empty() {
        return Err(TarmaError::Parse {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    for e in &entries {
        e.validate()?;
    }
    Ok(NullTable {
        entries,
        reps,
        path_len,
        seed,
        created,
    })
}
