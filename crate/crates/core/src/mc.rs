//! Seeded simulation of the discrete-time chain and its continuous-time
//! embedding, with estimators of `W^DT`, `W^CT` and `xi`.
//!
//! Two estimators are offered for the limit variables at a finite horizon
//! `n`:
//!
//! * [`Estimator::Truncated`] returns `u2(U(n)) / n^sigma` (discrete time) and
//!   `e^{-m tau_n} u2(U(n))` (continuous time).
//! * [`Estimator::Completed`] adds the part of the limit generated after the
//!   horizon. Given the state at `tau_n`, every ball present seeds an
//!   independent subtree whose limit is a copy of `X` (red) or `Y` (black),
//!   so the unsimulated remainder is a sum of `alpha + beta + nS` centered
//!   independent terms with known variances. It is drawn as a Gaussian with
//!   that exact conditional variance; the completed estimator therefore has
//!   the limit's first two moments at every horizon.
//!
//! The truncated estimators carry a second-moment bias of order
//! `n^(1 - 2 sigma)`, which for sigma close to 1/2 is far above Monte Carlo
//! noise at any practical horizon.
//!
//! Jump times of the embedding are independent of the jump chain and
//! `S tau_n` is a sum of `Exp(1) / (kappa + k)`, so `e^{-S tau_n}` has the
//! `Beta(kappa, n)` law; the samplers draw it directly.
//! [`simulate_ct_trajectory`] keeps the explicit clock for checks.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Result, UrnError};
use crate::exec::map_indexed;
use crate::rng::{below, domain, open01, std_normal, stream, LogGamma};
use crate::sample::{SampleMeta, SampleSet};
use crate::special::{beta_power_mean, gamma_ratio};
use crate::stats;
use crate::urn::{Composition, UrnSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Truncated,
    Completed,
}

impl Estimator {
    fn tag(self) -> &'static str {
        match self {
            Estimator::Truncated => "truncated",
            Estimator::Completed => "completed",
        }
    }
}

/// Default horizon in draws.
pub const DEFAULT_HORIZON: u64 = 2000;

/// Variances of the elementary limits `X = W^CT_(1,0)` and `Y = W^CT_(0,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ElementaryVariances {
    pub var_x: f64,
    pub var_y: f64,
}

/// Exact first two moments of `u2(U(n))` and the mean composition.
#[derive(Clone, Copy, Debug)]
struct ChainMoments {
    #[allow(dead_code)]
    mean_u2: f64,
    second_u2: f64,
    mean_red: f64,
    mean_black: f64,
}

fn chain_moments(spec: &UrnSpec, init: Composition, n: u64) -> ChainMoments {
    let s = spec.balance() as f64;
    let m = spec.m() as f64;
    let (b, c) = (spec.b() as f64, spec.c() as f64);
    let mut mean = spec.u2_f64(init.red, init.black);
    let mut second = mean * mean;
    for k in 0..n {
        let total = init.total() as f64 + k as f64 * s;
        // E[du2^2 | state] = (m/S)^2 (bc + S (b - c) u2 / T)
        let jump2 = (m / s).powi(2) * (b * c + s * (b - c) * mean / total);
        second = second * (1.0 + 2.0 * m / total) + jump2;
        mean *= 1.0 + m / total;
    }
    let total = init.total() as f64 + n as f64 * s;
    ChainMoments {
        mean_u2: mean,
        second_u2: second,
        mean_red: (c * total + s * mean) / (b + c),
        mean_black: (b * total - s * mean) / (b + c),
    }
}

impl ElementaryVariances {
    /// Solves the branching identity at `tau_n`,
    /// `E[X^2] = E[e^{-2m tau_n}] (E[u2(U(n))^2] + E[R_n] var_x + E[B_n] var_y)`,
    /// for both elementary starts. The identity is exact for every `n >= 1`.
    pub fn renewal(spec: &UrnSpec, n: u64) -> Result<Self> {
        spec.require_large()?;
        if n == 0 {
            return Err(UrnError::InvalidArgument("renewal horizon must be >= 1".into()));
        }
        let s = spec.balance() as f64;
        let sigma = spec.sigma_f64();
        let kappa = 1.0 / s;
        let decay = beta_power_mean(kappa, n as f64, 2.0 * sigma);
        let x1 = spec.b() as f64 / s;
        let y1 = -(spec.c() as f64) / s;
        let from_x = chain_moments(spec, Composition { red: 1, black: 0 }, n);
        let from_y = chain_moments(spec, Composition { red: 0, black: 1 }, n);
        // [1 - q R_x, -q B_x; -q R_y, 1 - q B_y] (vx, vy) = (q s_x - x1^2, q s_y - y1^2)
        let m11 = 1.0 - decay * from_x.mean_red;
        let m12 = -decay * from_x.mean_black;
        let m21 = -decay * from_y.mean_red;
        let m22 = 1.0 - decay * from_y.mean_black;
        let r1 = decay * from_x.second_u2 - x1 * x1;
        let r2 = decay * from_y.second_u2 - y1 * y1;
        let det = m11 * m22 - m12 * m21;
        Ok(Self {
            var_x: (r1 * m22 - m12 * r2) / det,
            var_y: (m11 * r2 - m21 * r1) / det,
        })
    }
}

/// Red and black counts after `steps` draws.
#[inline]
fn run_chain<R: RngCore>(spec: &UrnSpec, init: Composition, steps: u64, rng: &mut R) -> (u64, u64) {
    let (a, c, s) = (spec.a() as u64, spec.c() as u64, spec.balance());
    let mut red = init.red;
    let mut total = init.total();
    for _ in 0..steps {
        red += if below(rng, total) < red { a } else { c };
        total += s;
    }
    (red, total - red)
}

fn check_args(spec: &UrnSpec, horizon: u64, trajectories: usize) -> Result<()> {
    spec.require_large()?;
    if horizon == 0 || trajectories == 0 {
        return Err(UrnError::InvalidArgument(
            "horizon and trajectory count must be positive".into(),
        ));
    }
    Ok(())
}

struct DtCompletion {
    first: f64,
    second: f64,
    vars: ElementaryVariances,
}

impl DtCompletion {
    fn new(spec: &UrnSpec, init: Composition, horizon: u64) -> Result<Self> {
        let kappa_n = spec.kappa_f64(init) + horizon as f64;
        let sigma = spec.sigma_f64();
        Ok(Self {
            first: gamma_ratio(kappa_n, kappa_n + sigma),
            second: gamma_ratio(kappa_n, kappa_n + 2.0 * sigma),
            vars: ElementaryVariances::renewal(spec, horizon)?,
        })
    }

    fn draw<R: RngCore>(&self, u2: f64, red: u64, black: u64, rng: &mut R) -> f64 {
        let mean = self.first * u2;
        let spread = red as f64 * self.vars.var_x + black as f64 * self.vars.var_y;
        let var = (self.second * (u2 * u2 + spread) - mean * mean).max(0.0);
        mean + var.sqrt() * std_normal(rng)
    }
}

/// One estimate of `W^DT` per trajectory, in trajectory order.
pub fn w_dt_draws(
    spec: &UrnSpec,
    init: Composition,
    horizon: u64,
    trajectories: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<Vec<f64>> {
    check_args(spec, horizon, trajectories)?;
    let completion = match estimator {
        Estimator::Completed => Some(DtCompletion::new(spec, init, horizon)?),
        Estimator::Truncated => None,
    };
    let scale = (horizon as f64).powf(-spec.sigma_f64());
    Ok(map_indexed(trajectories, |t| {
        let mut rng = stream(seed, domain::DT_CHAIN, t as u64);
        let (red, black) = run_chain(spec, init, horizon, &mut rng);
        let u2 = spec.u2_f64(red, black);
        match &completion {
            Some(c) => c.draw(u2, red, black, &mut rng),
            None => u2 * scale,
        }
    }))
}

pub fn sample_w_dt(
    spec: &UrnSpec,
    init: Composition,
    horizon: u64,
    trajectories: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<SampleSet> {
    let values = w_dt_draws(spec, init, horizon, trajectories, seed, estimator)?;
    let meta = SampleMeta::new(spec, Some(init), &format!("w_dt_{}", estimator.tag()))
        .with_horizon(horizon)
        .with_seed(seed);
    Ok(SampleSet::new(values, meta))
}

/// Unnormalized `u2(U(n))` per trajectory, for checks against the exact mean.
pub fn u2_draws(spec: &UrnSpec, init: Composition, horizon: u64, trajectories: usize, seed: u64) -> Vec<f64> {
    map_indexed(trajectories, |t| {
        let mut rng = stream(seed, domain::DT_CHAIN, t as u64);
        let (red, black) = run_chain(spec, init, horizon, &mut rng);
        spec.u2_f64(red, black)
    })
}

/// Paired `(xi, W^CT)` estimates from the same trajectory.
pub fn ct_pairs(
    spec: &UrnSpec,
    init: Composition,
    horizon: u64,
    trajectories: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<Vec<(f64, f64)>> {
    check_args(spec, horizon, trajectories)?;
    let vars = match estimator {
        Estimator::Completed => Some(ElementaryVariances::renewal(spec, horizon)?),
        Estimator::Truncated => None,
    };
    let kappa = spec.kappa_f64(init);
    let sigma = spec.sigma_f64();
    let head = LogGamma::new(kappa);
    let tail = LogGamma::new(horizon as f64);
    Ok(map_indexed(trajectories, |t| {
        let mut rng = stream(seed, domain::CT_CHAIN, t as u64);
        let (red, black) = run_chain(spec, init, horizon, &mut rng);
        // ln e^{-S tau_n} = ln Beta(kappa, n)
        let lg1 = head.sample(&mut rng);
        let lg2 = tail.sample(&mut rng);
        let ln_beta = lg1 - (lg2 + (lg1 - lg2).exp().ln_1p());
        let xi = ln_beta.exp() * (kappa + horizon as f64);
        let mut w = spec.u2_f64(red, black);
        if let Some(v) = &vars {
            w += (red as f64 * v.var_x + black as f64 * v.var_y).sqrt() * std_normal(&mut rng);
        }
        (xi, (sigma * ln_beta).exp() * w)
    }))
}

/// `(xi, W^CT)` sample sets; `xi` estimates `lim e^{-St} u1(U(t))`.
pub fn sample_ct(
    spec: &UrnSpec,
    init: Composition,
    horizon: u64,
    trajectories: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<(SampleSet, SampleSet)> {
    let pairs = ct_pairs(spec, init, horizon, trajectories, seed, estimator)?;
    let (xi, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let meta = |name: &str| {
        SampleMeta::new(spec, Some(init), name)
            .with_horizon(horizon)
            .with_seed(seed)
    };
    Ok((
        SampleSet::new(xi, meta("xi")),
        SampleSet::new(w, meta(&format!("w_ct_{}", estimator.tag()))),
    ))
}

/// `(xi, W^DT)` with `xi ~ Gamma(kappa)` drawn independently of the trajectory.
pub fn connexion_pairs(
    spec: &UrnSpec,
    init: Composition,
    horizon: u64,
    trajectories: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<Vec<(f64, f64)>> {
    let w = w_dt_draws(spec, init, horizon, trajectories, seed, estimator)?;
    let gamma = LogGamma::new(spec.kappa_f64(init));
    let xi = map_indexed(trajectories, |t| {
        let mut rng = stream(seed, domain::CONNEXION_XI, t as u64);
        gamma.sample(&mut rng).exp()
    });
    Ok(xi.into_iter().zip(w).collect())
}

/// `xi^sigma W^DT`, which has the law of `W^CT`.
pub fn sample_connexion(
    spec: &UrnSpec,
    init: Composition,
    horizon: u64,
    trajectories: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<SampleSet> {
    let sigma = spec.sigma_f64();
    let values = connexion_pairs(spec, init, horizon, trajectories, seed, estimator)?
        .into_iter()
        .map(|(xi, w)| xi.powf(sigma) * w)
        .collect();
    let meta = SampleMeta::new(spec, Some(init), &format!("connexion_{}", estimator.tag()))
        .with_horizon(horizon)
        .with_seed(seed);
    Ok(SampleSet::new(values, meta))
}

/// Jump times and compositions of one continuous-time path.
#[derive(Clone, Debug)]
pub struct CTTrajectory {
    pub jump_times: Vec<f64>,
    pub compositions: Vec<Composition>,
}

/// Explicit clock: the holding time after `k` draws is `Exp(alpha + beta + kS)`.
pub fn simulate_ct_trajectory<R: RngCore>(spec: &UrnSpec, init: Composition, horizon: u64, rng: &mut R) -> CTTrajectory {
    let (a, b, c, d) = (spec.a() as u64, spec.b() as u64, spec.c() as u64, spec.d() as u64);
    let mut comp = init;
    let mut time = 0.0;
    let mut jump_times = Vec::with_capacity(horizon as usize + 1);
    let mut compositions = Vec::with_capacity(horizon as usize + 1);
    jump_times.push(0.0);
    compositions.push(comp);
    for _ in 0..horizon {
        let total = comp.total();
        time += -open01(rng).ln() / total as f64;
        if below(rng, total) < comp.red {
            comp.red += a;
            comp.black += b;
        } else {
            comp.red += c;
            comp.black += d;
        }
        jump_times.push(time);
        compositions.push(comp);
    }
    CTTrajectory {
        jump_times,
        compositions,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub horizon: u64,
    pub value: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub statistic: &'static str,
    pub rows: Vec<SweepRow>,
    /// All pairs of horizons agree within three combined standard errors.
    pub stable: bool,
}

/// Runs horizons `n, 2n, 4n` and compares the sample mean (`power = 1`) or
/// raw second moment (`power = 2`) of the W^DT estimator.
pub fn convergence_sweep(
    spec: &UrnSpec,
    init: Composition,
    horizon: u64,
    trajectories: usize,
    seed: u64,
    estimator: Estimator,
    power: i32,
) -> Result<SweepReport> {
    let mut rows = Vec::new();
    for (i, h) in [horizon, 2 * horizon, 4 * horizon].into_iter().enumerate() {
        let draws = w_dt_draws(spec, init, h, trajectories, seed.wrapping_add(i as u64), estimator)?;
        let (value, std_err) = stats::raw_moment(&draws, power);
        rows.push(SweepRow {
            horizon: h,
            value,
            std_err,
        });
    }
    let stable = rows.iter().enumerate().all(|(i, r)| {
        rows[i + 1..]
            .iter()
            .all(|o| (r.value - o.value).abs() <= 3.0 * (r.std_err.powi(2) + o.std_err.powi(2)).sqrt())
    });
    Ok(SweepReport {
        statistic: if power == 1 { "mean" } else { "raw_moment" },
        rows,
        stable,
    })
}
