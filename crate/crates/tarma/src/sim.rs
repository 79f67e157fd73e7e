//! Exact simulation of TARMA(1,1)/IMA(1,1) processes, the full set of
//! data-generating processes used in the Monte Carlo experiments, and
//! the ergodicity classification of the constrained parameter space.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TarmaError};
use crate::rng::stream_rng;
use crate::series::TimeSeries;
use crate::util::variance;

/// Two-regime TARMA(1,1) parameter record.
///
/// Regime selection: lower regime when `X_{t-d} <= r`. Each regime has
/// its own MA coefficient; `theta_lower == theta_upper` recovers the
/// common-theta model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TarmaSpec {
    pub phi_1_0: f64,
    pub phi_1_1: f64,
    pub phi_2_0: f64,
    pub phi_2_1: f64,
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub r: f64,
    pub d: usize,
    pub sigma: f64,
}

impl TarmaSpec {
    /// Common-theta spec, the constrained model used throughout testing.
    pub fn common_theta(
        phi_1_0: f64,
        phi_1_1: f64,
        phi_2_0: f64,
        phi_2_1: f64,
        theta: f64,
        r: f64,
        sigma: f64,
    ) -> Self {
        Self {
            phi_1_0,
            phi_1_1,
            phi_2_0,
            phi_2_1,
            theta_lower: theta,
            theta_upper: theta,
            r,
            d: 1,
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.phi_1_0,
            self.phi_1_1,
            self.phi_2_0,
            self.phi_2_1,
            self.theta_lower,
            self.theta_upper,
            self.r,
            self.sigma,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(TarmaError::InvalidSpec("non-finite parameter".into()));
        }
        if self.theta_lower.abs() >= 1.0 || self.theta_upper.abs() >= 1.0 {
            return Err(TarmaError::InvalidSpec(format!(
                "|theta| must be < 1 for invertibility, got ({}, {})",
                self.theta_lower, self.theta_upper
            )));
        }
        if self.sigma <= 0.0 {
            return Err(TarmaError::InvalidSpec("sigma must be positive".into()));
        }
        if self.d == 0 {
            return Err(TarmaError::InvalidSpec("delay d must be >= 1".into()));
        }
        Ok(())
    }
}

/// Innovation source. A fixed seed yields an identical sequence.
#[derive(Clone, Debug)]
pub enum NoiseSpec {
    Gaussian { seed: u64 },
    /// Random signs, +-sigma with equal probability.
    Rademacher { seed: u64 },
    /// Caller-supplied innovations, used verbatim (sigma ignored).
    Custom(Vec<f64>),
}

impl NoiseSpec {
    pub fn gaussian(seed: u64) -> Self {
        NoiseSpec::Gaussian { seed }
    }

    /// Materialize `n` innovations with standard deviation `sigma` on
    /// the given sub-stream.
    pub fn draw(&self, n: usize, sigma: f64, stream: u64) -> Result<Vec<f64>> {
        match self {
            NoiseSpec::Gaussian { seed } => {
                let mut rng = stream_rng(*seed, stream);
                Ok((0..n)
                    .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect())
            }
            NoiseSpec::Rademacher { seed } => {
                let mut rng = stream_rng(*seed, stream);
                Ok((0..n)
                    .map(|_| if rng.gen::<bool>() { sigma } else { -sigma })
                    .collect())
            }
            NoiseSpec::Custom(values) => {
                if values.len() < n {
                    return Err(TarmaError::InvalidSpec(format!(
                        "custom noise sequence has {} values, need {n}",
                        values.len()
                    )));
                }
                Ok(values[..n].to_vec())
            }
        }
    }

    fn seed_or_err(&self) -> Result<u64> {
        match self {
            NoiseSpec::Gaussian { seed } | NoiseSpec::Rademacher { seed } => Ok(*seed),
            NoiseSpec::Custom(_) => Err(TarmaError::InvalidSpec(
                "this DGP needs a seeded noise source".into(),
            )),
        }
    }
}

/// Long-run regime of the constrained TARMA chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeClass {
    Ergodic,
    NullRecurrent,
    Transient,
}

/// Classify the constrained model (phi_2_1 = 1, common theta) as
/// ergodic, null recurrent or transient.
pub fn classify_regime(spec: &TarmaSpec) -> Result<RegimeClass> {
    spec.validate()?;
    if spec.phi_2_1 != 1.0 {
        return Err(TarmaError::UnsupportedSpec(
            "classification requires phi_2_1 = 1".into(),
        ));
    }
    if spec.theta_lower != spec.theta_upper {
        return Err(TarmaError::UnsupportedSpec(
            "classification requires a common theta".into(),
        ));
    }
    let (p10, p11, p20) = (spec.phi_1_0, spec.phi_1_1, spec.phi_2_0);
    let ergodic = p20 < 0.0 && (p11 < 1.0 || (p11 == 1.0 && p10 > 0.0));
    if ergodic {
        return Ok(RegimeClass::Ergodic);
    }
    let null_recurrent = (p11 == 1.0 && p20 == 0.0 && p10 >= 0.0)
        || (p11 == 1.0 && p20 < 0.0 && p10 == 0.0)
        || (p11 < 1.0 && p20 == 0.0);
    if null_recurrent {
        Ok(RegimeClass::NullRecurrent)
    } else {
        Ok(RegimeClass::Transient)
    }
}

fn tarma_path(spec: &TarmaSpec, n: usize, x0: f64, eps: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(n + 1);
    x.push(x0);
    let mut eps_prev = 0.0; // eps_0 = 0
    for t in 1..=n {
        let lagged = if t >= spec.d { x[t - spec.d] } else { x[0] };
        let e = eps[t - 1];
        let xt = if lagged <= spec.r {
            spec.phi_1_0 + spec.phi_1_1 * x[t - 1] + e - spec.theta_lower * eps_prev
        } else {
            spec.phi_2_0 + spec.phi_2_1 * x[t - 1] + e - spec.theta_upper * eps_prev
        };
        x.push(xt);
        eps_prev = e;
    }
    x
}

/// Simulate `X_0 = x0, X_1, ..., X_n` from the TARMA(1,1) recursion,
/// with `eps_0 = 0` and the active regime's theta multiplying the
/// lagged innovation.
pub fn simulate_tarma(spec: &TarmaSpec, n: usize, x0: f64, noise: &NoiseSpec) -> Result<TimeSeries> {
    spec.validate()?;
    if n == 0 {
        return Err(TarmaError::InvalidSpec("n must be >= 1".into()));
    }
    let eps = noise.draw(n, spec.sigma, 0)?;
    TimeSeries::new(tarma_path(spec, n, x0, &eps))
}

/// Simulate the IMA(1,1) null model `X_t = phi0 + X_{t-1} + eps_t -
/// theta * eps_{t-1}`, `eps_0 = 0`.
pub fn simulate_ima(
    theta: f64,
    phi0: f64,
    sigma: f64,
    n: usize,
    x0: f64,
    noise: &NoiseSpec,
) -> Result<TimeSeries> {
    if theta.abs() >= 1.0 || !theta.is_finite() {
        return Err(TarmaError::InvalidSpec(format!(
            "|theta| must be < 1, got {theta}"
        )));
    }
    if sigma <= 0.0 || !sigma.is_finite() || !phi0.is_finite() {
        return Err(TarmaError::InvalidSpec("bad IMA parameters".into()));
    }
    if n == 0 {
        return Err(TarmaError::InvalidSpec("n must be >= 1".into()));
    }
    let eps = noise.draw(n, sigma, 0)?;
    let mut x = Vec::with_capacity(n + 1);
    x.push(x0);
    let mut eps_prev = 0.0;
    for (t, &e) in eps.iter().enumerate() {
        x.push(phi0 + x[t] + e - theta * eps_prev);
        eps_prev = e;
    }
    TimeSeries::new(x)
}

/// Named data-generating processes of the size/power experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DgpKind {
    /// Convex combination between a random walk and a stationary TARMA:
    /// `(phi_10, phi_11, phi_20, phi_21) = tau*(0,0.7,-0.02,0.99) +
    /// (1-tau)*(0,1,0,1)`, threshold 0, unit innovation variance.
    Eq28 { tau: f64, theta: f64 },
    /// IMA(1,1), theta = -0.9.
    M1,
    /// IMA(1,1), theta = -0.5.
    M2,
    /// IMA(1,1), theta = 0.5.
    M3,
    /// IMA(1,1), theta = 0.9.
    M4,
    /// Integrated AR(1) with a variance break between half-samples.
    M5,
    /// Integrated MA(1) with GARCH(1,1) innovations.
    M6,
    /// Integrated AR(1) with GARCH(1,1) innovations.
    M7,
    /// Stationary TAR(1) alternatives.
    M8,
    M9,
    M10,
    M11,
    /// TARMA(1,1) whose upper regime is exactly IMA(1,1):
    /// `phi_10 = -0.02*tau, phi_11 = 0.7*tau + (1-tau), phi_20 = 0,
    /// phi_21 = 1`.
    TarmaIma { tau: f64, theta: f64 },
}

/// A DGP plus an optional measurement-noise level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DgpSpec {
    pub kind: DgpKind,
    /// Signal-to-noise ratio; `f64::INFINITY` means no measurement error.
    pub snr: f64,
}

impl DgpSpec {
    pub fn new(kind: DgpKind) -> Self {
        Self {
            kind,
            snr: f64::INFINITY,
        }
    }

    pub fn with_snr(kind: DgpKind, snr: f64) -> Self {
        Self { kind, snr }
    }

    pub fn label(&self) -> String {
        let base = match self.kind {
            DgpKind::Eq28 { tau, theta } => format!("EQ28(tau={tau},theta={theta})"),
            DgpKind::M1 => "M1".into(),
            DgpKind::M2 => "M2".into(),
            DgpKind::M3 => "M3".into(),
            DgpKind::M4 => "M4".into(),
            DgpKind::M5 => "M5".into(),
            DgpKind::M6 => "M6".into(),
            DgpKind::M7 => "M7".into(),
            DgpKind::M8 => "M8".into(),
            DgpKind::M9 => "M9".into(),
            DgpKind::M10 => "M10".into(),
            DgpKind::M11 => "M11".into(),
            DgpKind::TarmaIma { tau, theta } => format!("TARMA_IMA(tau={tau},theta={theta})"),
        };
        if self.snr.is_finite() {
            format!("{base},snr={}", self.snr)
        } else {
            base
        }
    }
}

/// Eq. 28 family coefficients at interpolation weight `tau`.
pub fn eq28_spec(tau: f64, theta: f64) -> TarmaSpec {
    TarmaSpec::common_theta(
        0.0,
        tau * 0.7 + (1.0 - tau),
        tau * -0.02,
        tau * 0.99 + (1.0 - tau),
        theta,
        0.0,
        1.0,
    )
}

/// TARMA-with-IMA-regime family coefficients at weight `tau`.
pub fn tarma_ima_spec(tau: f64, theta: f64) -> TarmaSpec {
    TarmaSpec::common_theta(-0.02 * tau, 0.7 * tau + (1.0 - tau), 0.0, 1.0, theta, 0.0, 1.0)
}

fn tar_spec(p10: f64, p11: f64, p20: f64, p21: f64) -> TarmaSpec {
    TarmaSpec::common_theta(p10, p11, p20, p21, 0.0, 0.0, 1.0)
}

const TAR_BURNIN: usize = 500;

/// Steps dropped from the front of the difference-stationary DGPs
/// (EQ28, TARMA_IMA, M1-M7) so the lagged-innovation state is
/// stationary while the level still starts near the threshold. With a
/// hard eps_0 = 0 start the residual transient -theta*eps_0*thetahat^t
/// inflates the supLM statistic at theta near +1 and deflates it near
/// -1; five steps are enough to wash out the MA(1) state without
/// letting the random-walk level drift away from X_0.
const INNOVATION_WARMUP: usize = 5;

/// GARCH(1,1) innovation sequence: `u_t = sqrt(h_t) z_t`,
/// `h_t = 0.05 + 0.30 u_{t-1}^2 + 0.65 h_{t-1}`, `h_0 = 1`
/// (the unconditional variance 0.05 / (1 - 0.30 - 0.65)).
fn garch_innovations(z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut u = Vec::with_capacity(z.len());
    let mut h_hist = Vec::with_capacity(z.len());
    let mut h = 1.0f64;
    let mut u_prev = 0.0;
    for &zt in z {
        h = 0.05 + 0.30 * u_prev * u_prev + 0.65 * h;
        let ut = h.sqrt() * zt;
        h_hist.push(h);
        u.push(ut);
        u_prev = ut;
    }
    (u, h_hist)
}

/// Simulate a path from the named DGP, adding measurement noise with
/// the requested signal-to-noise ratio when finite. The noise variance
/// is `var(X)/snr` with `var(X)` the per-path sample variance.
///
/// Difference-stationary DGPs drop [`INNOVATION_WARMUP`] leading steps
/// so the MA/GARCH innovation state is stationary at the first retained
/// observation; stationary TAR alternatives (M8-M11) discard a 500-step
/// burn-in instead.
pub fn simulate_dgp(dgp: &DgpSpec, n: usize, noise: &NoiseSpec) -> Result<TimeSeries> {
    if n < 50 {
        return Err(TarmaError::TooShort { got: n, need: 50 });
    }
    if dgp.snr <= 0.0 {
        return Err(TarmaError::InvalidSpec(format!(
            "snr must be positive, got {}",
            dgp.snr
        )));
    }
    let w = INNOVATION_WARMUP;
    let x = match dgp.kind {
        DgpKind::Eq28 { tau, theta } => {
            let spec = eq28_spec(tau, theta);
            let eps = noise.draw(n + w, 1.0, 0)?;
            tarma_path(&spec, n + w, 0.0, &eps)[w..].to_vec()
        }
        DgpKind::TarmaIma { tau, theta } => {
            let spec = tarma_ima_spec(tau, theta);
            let eps = noise.draw(n + w, 1.0, 0)?;
            tarma_path(&spec, n + w, 0.0, &eps)[w..].to_vec()
        }
        DgpKind::M1 | DgpKind::M2 | DgpKind::M3 | DgpKind::M4 => {
            let theta = match dgp.kind {
                DgpKind::M1 => -0.9,
                DgpKind::M2 => -0.5,
                DgpKind::M3 => 0.5,
                _ => 0.9,
            };
            let eps = noise.draw(n + w, 1.0, 0)?;
            let mut x = Vec::with_capacity(n + w + 1);
            x.push(0.0);
            let mut eps_prev = 0.0;
            for (t, &e) in eps.iter().enumerate() {
                x.push(x[t] + e - theta * eps_prev);
                eps_prev = e;
            }
            x[w..].to_vec()
        }
        DgpKind::M5 => {
            // Delta X_t = -0.6 Delta X_{t-1} + eps_t, innovations in the
            // second half-sample scaled by 1.5.
            let eps = noise.draw(n + w, 1.0, 0)?;
            let half = w + n / 2;
            let mut x = Vec::with_capacity(n + w + 1);
            x.push(0.0);
            let mut dx_prev = 0.0;
            for (t, &e) in eps.iter().enumerate() {
                let scale = if t >= half { 1.5 } else { 1.0 };
                let dx = -0.6 * dx_prev + scale * e;
                x.push(x[t] + dx);
                dx_prev = dx;
            }
            x[w..].to_vec()
        }
        DgpKind::M6 => {
            let z = noise.draw(n + w, 1.0, 0)?;
            let (u, h) = garch_innovations(&z);
            debug_assert!(h.iter().all(|&v| v > 0.0));
            let mut x = Vec::with_capacity(n + w + 1);
            x.push(0.0);
            let mut u_prev = 0.0;
            for (t, &ut) in u.iter().enumerate() {
                x.push(x[t] + ut - 0.6 * u_prev);
                u_prev = ut;
            }
            x[w..].to_vec()
        }
        DgpKind::M7 => {
            let z = noise.draw(n + w, 1.0, 0)?;
            let (u, h) = garch_innovations(&z);
            debug_assert!(h.iter().all(|&v| v > 0.0));
            let mut x = Vec::with_capacity(n + w + 1);
            x.push(0.0);
            let mut dx_prev = 0.0;
            for (t, &ut) in u.iter().enumerate() {
                let dx = 0.3 * dx_prev + ut;
                x.push(x[t] + dx);
                dx_prev = dx;
            }
            x[w..].to_vec()
        }
        DgpKind::M8 | DgpKind::M9 | DgpKind::M10 | DgpKind::M11 => {
            let spec = match dgp.kind {
                DgpKind::M8 => tar_spec(0.0, 0.6, 0.0, 0.35),
                DgpKind::M9 => tar_spec(0.0, 0.6, 0.0, -0.35),
                DgpKind::M10 => tar_spec(0.0, -0.6, 0.0, -0.35),
                _ => tar_spec(0.5, -2.0, -0.5, 1.0),
            };
            let eps = noise.draw(n + TAR_BURNIN, 1.0, 0)?;
            let full = tarma_path(&spec, n + TAR_BURNIN, 0.0, &eps);
            full[TAR_BURNIN..].to_vec()
        }
    };
    if dgp.snr.is_finite() {
        let seed = noise.seed_or_err()?;
        let sigma_eta = (variance(&x) / dgp.snr).sqrt();
        let mut rng = stream_rng(seed, 1); // measurement-noise sub-stream
        let y: Vec<f64> = x
            .iter()
            .map(|&v| v + sigma_eta * rng.sample::<f64, _>(StandardNormal))
            .collect();
        TimeSeries::new(y)
    } else {
        TimeSeries::new(x)
    }
}
