//! Local power of the test: the limiting law under local alternatives
//! is the same F functional evaluated on a threshold diffusion
//!   dW = drift(W) dt + dB,  drift(w) = c_{1,0} + c_{1,1} w  (w <= tau0)
//!                                    = c_{2,0} + c_{2,1} w  (w > tau0)
//! simulated by Euler-Maruyama (the diffusion coefficient is the
//! constant 1, so Euler is exact in the diffusion term).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Result, TarmaError};
use crate::functional::eval_functional;
use crate::null_dist::{NullTable, SampleSize};
use crate::rng::stream_rng;

/// Threshold-diffusion drift specification. The coefficients are the
/// effective products rho * sqrt(I_f) * h_{i,j}; the diffusion never
/// sees the factors separately.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionSpec {
    pub c_1_0: f64,
    pub c_1_1: f64,
    pub c_2_0: f64,
    pub c_2_1: f64,
    pub tau0: f64,
    pub steps: usize,
    pub w0: f64,
    /// Inflate the step count proportionally to max |c| so stiff drifts
    /// stay stable.
    pub auto_step: bool,
    /// When set to the product rho*sqrt(I_f), the underlying slopes
    /// h_{i,1} = c_{i,1}/scale are checked against the contiguity
    /// condition -pi/2 < h_{1,1}, h_{2,1} <= 0 and h_{1,1}+h_{2,1} < 0.
    pub contiguity_scale: Option<f64>,
}

impl DiffusionSpec {
    pub fn new(c_1_0: f64, c_1_1: f64, c_2_0: f64, c_2_1: f64, tau0: f64, steps: usize) -> Self {
        Self {
            c_1_0,
            c_1_1,
            c_2_0,
            c_2_1,
            tau0,
            steps,
            w0: 0.0,
            auto_step: true,
            contiguity_scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cs = [self.c_1_0, self.c_1_1, self.c_2_0, self.c_2_1, self.tau0, self.w0];
        if cs.iter().any(|c| !c.is_finite()) {
            return Err(TarmaError::InvalidSpec("non-finite drift coefficient".into()));
        }
        if self.steps < 1000 {
            return Err(TarmaError::InvalidSpec("steps must be >= 1000".into()));
        }
        if let Some(scale) = self.contiguity_scale {
            if scale <= 0.0 {
                return Err(TarmaError::InvalidSpec("contiguity scale must be > 0".into()));
            }
            let h11 = self.c_1_1 / scale;
            let h21 = self.c_2_1 / scale;
            let half_pi = std::f64::consts::FRAC_PI_2;
            let ok = h11 > -half_pi && h21 > -half_pi && h11 <= 0.0 && h21 <= 0.0
                && h11 + h21 < 0.0;
            if !ok {
                return Err(TarmaError::InvalidSpec(format!(
                    "slopes (h11={h11}, h21={h21}) violate the contiguity condition"
                )));
            }
        }
        Ok(())
    }

    fn drift(&self, w: f64) -> f64 {
        if w <= self.tau0 {
            self.c_1_0 + self.c_1_1 * w
        } else {
            self.c_2_0 + self.c_2_1 * w
        }
    }

    fn effective_steps_per_unit(&self) -> usize {
        if !self.auto_step {
            return self.steps;
        }
        let cmax = self.c_1_0
            .abs()
            .max(self.c_1_1.abs())
            .max(self.c_2_0.abs())
            .max(self.c_2_1.abs());
        self.steps * (cmax.ceil().max(1.0) as usize)
    }
}

/// The paper's ergodic example: drift 2h below zero and -2h above, with
/// a common mean-reverting slope -1/2.
pub fn ergodic_example_spec(h: f64, steps: usize) -> DiffusionSpec {
    DiffusionSpec::new(2.0 * h, -0.5, -2.0 * h, -0.5, 0.0, steps)
}

fn phi_cdf(x: f64) -> f64 {
    // erfc keeps precision deep in the lower tail, where erf saturates.
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Stationary density of `ergodic_example_spec(h)`, derived from the
/// speed measure of the SDE (unit diffusion coefficient):
/// pi(x) proportional to exp[2 * int_0^x drift(u) du], which for the
/// drift {2h - x/2 below 0, -2h - x/2 above} gives, with g = 4h,
/// pi(x) = k^{-1} exp[-{(x-g)^2 I(x<=0) + (x+g)^2 I(x>0)}/2],
/// k = 2 sqrt(2 pi) Phi(-g).
pub fn ergodic_example_density(h: f64, x: f64) -> f64 {
    let g = 4.0 * h;
    let k = 2.0 * (2.0 * std::f64::consts::PI).sqrt() * phi_cdf(-g);
    let e = if x <= 0.0 {
        (x - g) * (x - g)
    } else {
        (x + g) * (x + g)
    };
    (-e / 2.0).exp() / k
}

/// Euler-Maruyama path over time horizon `t_end` on a uniform grid.
/// `stream` selects an independent noise sub-stream for the given seed.
pub fn simulate_threshold_diffusion_horizon(
    spec: &DiffusionSpec,
    t_end: f64,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(TarmaError::InvalidSpec("horizon must be positive".into()));
    }
    let per_unit = spec.effective_steps_per_unit();
    let m = ((per_unit as f64) * t_end).ceil() as usize;
    let dt = t_end / m as f64;
    let sd = dt.sqrt();
    let mut rng = stream_rng(seed, stream);
    let mut w = Vec::with_capacity(m + 1);
    w.push(spec.w0);
    for k in 0..m {
        let cur = w[k];
        let d = spec.drift(cur);
        if !d.is_finite() {
            return Err(TarmaError::InvalidSpec("non-finite drift on path".into()));
        }
        let z: f64 = rng.sample(StandardNormal);
        w.push(cur + d * dt + sd * z);
    }
    Ok(w)
}

/// Euler-Maruyama path of the threshold diffusion on [0, 1].
pub fn simulate_threshold_diffusion(spec: &DiffusionSpec, seed: u64) -> Result<Vec<f64>> {
    simulate_threshold_diffusion_horizon(spec, 1.0, seed, 0)
}

/// One draw of the limiting statistic under the local alternative:
/// evaluate the F functional on a threshold-diffusion path over the
/// band [r_L, r_U] with `tau_points` equally spaced thresholds.
pub fn limiting_stat_under_alternative(
    spec: &DiffusionSpec,
    r_l: f64,
    r_u: f64,
    steps: usize,
    tau_points: usize,
    seed: u64,
) -> Result<f64> {
    limiting_stat_on_stream(spec, r_l, r_u, steps, tau_points, seed, 0)
}

fn limiting_stat_on_stream(
    spec: &DiffusionSpec,
    r_l: f64,
    r_u: f64,
    steps: usize,
    tau_points: usize,
    seed: u64,
    stream: u64,
) -> Result<f64> {
    if !(r_l < r_u) {
        return Err(TarmaError::InvalidSpec("need r_L < r_U".into()));
    }
    if tau_points < 2 {
        return Err(TarmaError::InvalidSpec("need >= 2 tau points".into()));
    }
    let spec = DiffusionSpec { steps, ..*spec };
    let path = simulate_threshold_diffusion_horizon(&spec, 1.0, seed, stream)?;
    let taus: Vec<f64> = (0..tau_points)
        .map(|i| r_l + (r_u - r_l) * i as f64 / (tau_points - 1) as f64)
        .collect();
    let curve = eval_functional(&path, &taus)?;
    curve
        .f_value
        .ok_or_else(|| TarmaError::DegenerateInput("all tau points singular".into()))
}

/// Power curve of the limiting statistic against a tabulated null
/// quantile: for each (label, spec), the fraction of `reps` draws
/// exceeding the asymptotic null quantile at `level`, with binomial
/// standard errors.
#[allow(clippy::too_many_arguments)]
pub fn local_power_curve(
    family: &[(f64, DiffusionSpec)],
    level: f64,
    reps: usize,
    seed: u64,
    table: &NullTable,
    pi: f64,
    r_l: f64,
    r_u: f64,
    steps: usize,
    tau_points: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    if !(0.0 < level && level < 1.0) {
        return Err(TarmaError::InvalidSpec("level must be in (0, 1)".into()));
    }
    if reps < 100 {
        return Err(TarmaError::InvalidSpec("reps must be >= 100".into()));
    }
    let entry = table
        .entries
        .iter()
        .find(|e| e.theta == 0.0 && e.n == SampleSize::Asymptotic && (e.pi - pi).abs() < 1e-9)
        .ok_or_else(|| {
            TarmaError::MissingTable(format!(
                "no asymptotic theta=0 entry with pi={pi} for the power curve"
            ))
        })?;
    let crit = entry.quantile(level);
    let mut out = Vec::with_capacity(family.len());
    for (idx, (param, spec)) in family.iter().enumerate() {
        let hits: usize = (0..reps as u64)
            .into_par_iter()
            .map(|rep| {
                let stream = (idx as u64) * (reps as u64) + rep;
                match limiting_stat_on_stream(spec, r_l, r_u, steps, tau_points, seed, stream) {
                    Ok(f) => usize::from(f > crit),
                    Err(_) => 0,
                }
            })
            .sum();
        let rate = hits as f64 / reps as f64;
        let se = (rate * (1.0 - rate) / reps as f64).sqrt();
        out.push((*param, rate, se));
    }
    Ok(out)
}
