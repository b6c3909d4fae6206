//! Particle approximations of the fixed-point systems for `(X, Y)`.
//!
//! A pool of `N` particles stands for each marginal. One application of the
//! transform draws, for every new particle, fresh Dirichlet weights over
//! `S + 1` slots and parents uniformly from the current pools: X-particles
//! use `a + 1` X-slots and `b` Y-slots, Y-particles `c` X-slots and `d + 1`
//! Y-slots. In continuous time the slots carry no weights and the whole sum
//! is scaled by a single `U^m`.

use std::io::Write;

use rand::RngCore;
use serde::Serialize;

use crate::error::{Result, UrnError};
use crate::exec::map_indexed;
use crate::moments::System;
use crate::rng::{below, domain, log_dirichlet, open01, std_normal, stream, LogGamma};
use crate::special::gamma_ratio;
use crate::stats::w2_sorted;
use crate::urn::UrnSpec;

#[derive(Clone, Debug)]
pub struct ParticlePair {
    x: Vec<f64>,
    y: Vec<f64>,
    target: (f64, f64),
    spec: UrnSpec,
    system: System,
}

/// Exact `(E X, E Y)` for the system.
pub fn target_means(spec: &UrnSpec, system: System) -> (f64, f64) {
    let s = spec.balance() as f64;
    let ct = (spec.b() as f64 / s, -(spec.c() as f64) / s);
    match system {
        System::Ct => ct,
        System::Dt => {
            let r = gamma_ratio(1.0 / s, 1.0 / s + spec.sigma_f64());
            (ct.0 * r, ct.1 * r)
        }
    }
}

fn shift_to(pool: &mut [f64], target: f64) -> f64 {
    let shift = target - pool.iter().sum::<f64>() / pool.len() as f64;
    pool.iter_mut().for_each(|v| *v += shift);
    shift
}

impl ParticlePair {
    /// Pools given explicitly; targets are the exact means of the system.
    pub fn from_pools(spec: &UrnSpec, system: System, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        spec.require_large()?;
        if x.len() != y.len() || x.len() < 2 {
            return Err(UrnError::InvalidArgument(format!(
                "pools need equal sizes >= 2, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self {
            x,
            y,
            target: target_means(spec, system),
            spec: spec.clone(),
            system,
        })
    }

    pub fn point_masses(spec: &UrnSpec, system: System, n: usize) -> Result<Self> {
        let (bx, by) = target_means(spec, system);
        Self::from_pools(spec, system, vec![bx; n], vec![by; n])
    }

    /// Gaussian pools with the exact means and standard deviation `scale`.
    pub fn gaussian(spec: &UrnSpec, system: System, n: usize, scale: f64, seed: u64) -> Result<Self> {
        let (bx, by) = target_means(spec, system);
        let mut rng = stream(seed, domain::FIXPOINT_INIT, 0);
        let x = (0..n).map(|_| bx + scale * std_normal(&mut rng)).collect();
        let y = (0..n).map(|_| by + scale * std_normal(&mut rng)).collect();
        let mut pair = Self::from_pools(spec, system, x, y)?;
        pair.recenter();
        Ok(pair)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn target(&self) -> (f64, f64) {
        self.target
    }

    pub fn spec(&self) -> &UrnSpec {
        &self.spec
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn means(&self) -> (f64, f64) {
        let n = self.len() as f64;
        (self.x.iter().sum::<f64>() / n, self.y.iter().sum::<f64>() / n)
    }

    /// Returns the shifts applied.
    pub fn recenter(&mut self) -> (f64, f64) {
        (shift_to(&mut self.x, self.target.0), shift_to(&mut self.y, self.target.1))
    }

    pub fn into_pools(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.y)
    }
}

/// Dirichlet(1/S, ..., 1/S) over `S + 1` coordinates.
pub fn dirichlet_weights<R: RngCore>(spec: &UrnSpec, rng: &mut R) -> Vec<f64> {
    let slots = spec.balance() as usize + 1;
    let samplers = vec![LogGamma::new(1.0 / spec.balance() as f64); slots];
    let mut out = vec![0.0; slots];
    log_dirichlet(&samplers, rng, &mut out);
    out.iter_mut().for_each(|l| *l = l.exp());
    out
}

/// `V_k^sigma` for a fresh Dirichlet draw.
pub fn dirichlet_power_weights<R: RngCore>(spec: &UrnSpec, rng: &mut R) -> Vec<f64> {
    let sigma = spec.sigma_f64();
    dirichlet_weights(spec, rng).into_iter().map(|v| v.powf(sigma)).collect()
}

struct Kernel {
    samplers: Vec<LogGamma>,
    sigma: f64,
    m: f64,
    system: System,
}

impl Kernel {
    fn new(spec: &UrnSpec, system: System) -> Self {
        let slots = spec.balance() as usize + 1;
        Self {
            samplers: vec![LogGamma::new(1.0 / spec.balance() as f64); slots],
            sigma: spec.sigma_f64(),
            m: spec.m() as f64,
            system,
        }
    }

    /// One new particle with `x_slots` parents from `x` and the rest from `y`.
    fn particle<R: RngCore>(&self, x: &[f64], y: &[f64], x_slots: usize, rng: &mut R, scratch: &mut [f64]) -> f64 {
        let n = x.len() as u64;
        let parent = |k: usize, rng: &mut R| {
            let j = below(rng, n) as usize;
            if k < x_slots {
                x[j]
            } else {
                y[j]
            }
        };
        match self.system {
            System::Dt => {
                log_dirichlet(&self.samplers, rng, scratch);
                let mut acc = 0.0;
                for (k, l) in scratch.iter().enumerate() {
                    acc += (self.sigma * l).exp() * parent(k, rng);
                }
                acc
            }
            System::Ct => {
                let sum: f64 = (0..scratch.len()).map(|k| parent(k, rng)).sum();
                (self.m * open01(rng).ln()).exp() * sum
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Step {
    pub pair: ParticlePair,
    /// Pool means before recentering.
    pub raw_means: (f64, f64),
    pub shifts: (f64, f64),
}

fn iteration_index(iteration: u64, particle: usize) -> u64 {
    (iteration << 32) | particle as u64
}

fn apply_at(pair: &ParticlePair, seed: u64, iteration: u64) -> Step {
    let spec = &pair.spec;
    let kernel = Kernel::new(spec, pair.system);
    let slots = spec.balance() as usize + 1;
    let (xa, xc) = (spec.a() as usize + 1, spec.c() as usize);
    let draw = |dom: u64, x_slots: usize| {
        map_indexed(pair.len(), |i| {
            let mut rng = stream(seed, dom, iteration_index(iteration, i));
            let mut scratch = vec![0.0; slots];
            kernel.particle(&pair.x, &pair.y, x_slots, &mut rng, &mut scratch)
        })
    };
    let x = draw(domain::FIXPOINT_X, xa);
    let y = draw(domain::FIXPOINT_Y, xc);
    let mut next = ParticlePair {
        x,
        y,
        target: pair.target,
        spec: spec.clone(),
        system: pair.system,
    };
    let raw_means = next.means();
    let shifts = next.recenter();
    Step {
        pair: next,
        raw_means,
        shifts,
    }
}

/// One application of the transform followed by recentering.
pub fn apply_k(pair: &ParticlePair, seed: u64) -> Step {
    apply_at(pair, seed, 0)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Marginal W2 distances between two pairs of equal size.
pub fn pair_distance(p: &ParticlePair, q: &ParticlePair) -> (f64, f64) {
    (
        w2_sorted(&sorted(&p.x), &sorted(&q.x)),
        w2_sorted(&sorted(&p.y), &sorted(&q.y)),
    )
}

/// `sqrt((S + 1) / (2m + 1))`.
pub fn contraction_constant(spec: &UrnSpec) -> f64 {
    ((spec.balance() as f64 + 1.0) / (2.0 * spec.m() as f64 + 1.0)).sqrt()
}

pub fn noise_floor(n: usize) -> f64 {
    3.0 / (n as f64).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub w2_x: f64,
    pub w2_y: f64,
    /// Product metric `max(w2_x, w2_y)`.
    pub distance: f64,
    pub ratio_x: Option<f64>,
    pub ratio_y: Option<f64>,
    pub ratio: Option<f64>,
    pub shift_x: f64,
    pub shift_y: f64,
    /// Both this and the previous distance exceed the noise floor.
    pub above_floor: bool,
}

#[derive(Clone, Debug)]
pub struct FixpointRun {
    pub trace: Vec<TraceRow>,
    pub constant: f64,
    pub noise_floor: f64,
    pub pair: ParticlePair,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionSummary {
    pub constant: f64,
    pub noise_floor: f64,
    pub checked: usize,
    pub max_ratio: Option<f64>,
    /// Geometric rate from a least-squares fit of `ln distance` over the
    /// iterations above the floor.
    pub fitted_rate: Option<f64>,
    pub within: bool,
}

impl FixpointRun {
    pub fn summary(&self, slack: f64) -> ContractionSummary {
        let checked: Vec<f64> = self
            .trace
            .iter()
            .filter(|r| r.above_floor)
            .filter_map(|r| r.ratio)
            .collect();
        let max_ratio = checked.iter().copied().reduce(f64::max);
        let pts: Vec<(f64, f64)> = self
            .trace
            .iter()
            .filter(|r| r.distance > self.noise_floor)
            .map(|r| (r.iteration as f64, r.distance.ln()))
            .collect();
        let fitted_rate = (pts.len() >= 2).then(|| {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            (sxy / sxx).exp()
        });
        ContractionSummary {
            constant: self.constant,
            noise_floor: self.noise_floor,
            checked: checked.len(),
            max_ratio,
            fitted_rate,
            within: max_ratio.is_none_or(|r| r <= self.constant + slack),
        }
    }

    /// Columns as in [`TraceRow`].
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iteration", "w2_x", "w2_y", "distance", "ratio_x", "ratio_y", "ratio", "shift_x", "shift_y", "above_floor",
        ])?;
        let opt = |v: Option<f64>| v.map(|r| format!("{r:e}")).unwrap_or_default();
        for r in &self.trace {
            w.write_record([
                r.iteration.to_string(),
                format!("{:e}", r.w2_x),
                format!("{:e}", r.w2_y),
                format!("{:e}", r.distance),
                opt(r.ratio_x),
                opt(r.ratio_y),
                opt(r.ratio),
                format!("{:e}", r.shift_x),
                format!("{:e}", r.shift_y),
                r.above_floor.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Repeated application from an arbitrary admissible pair.
pub fn iterate_from(start: ParticlePair, iterations: u64, seed: u64) -> FixpointRun {
    let n = start.len();
    let floor = noise_floor(n);
    let constant = contraction_constant(&start.spec);
    let mut current = start;
    let mut trace = Vec::with_capacity(iterations as usize);
    let mut previous: Option<(f64, f64, f64)> = None;
    for it in 1..=iterations {
        let step = apply_at(&current, seed, it);
        let (w2_x, w2_y) = pair_distance(&current, &step.pair);
        let distance = w2_x.max(w2_y);
        let ratio_of = |now: f64, before: f64| (before > 0.0).then(|| now / before);
        let (ratio_x, ratio_y, ratio, above_floor) = match previous {
            Some((px, py, pd)) => (
                ratio_of(w2_x, px),
                ratio_of(w2_y, py),
                ratio_of(distance, pd),
                distance > floor && pd > floor,
            ),
            None => (None, None, None, false),
        };
        trace.push(TraceRow {
            iteration: it,
            w2_x,
            w2_y,
            distance,
            ratio_x,
            ratio_y,
            ratio,
            shift_x: step.shifts.0,
            shift_y: step.shifts.1,
            above_floor,
        });
        previous = Some((w2_x, w2_y, distance));
        current = step.pair;
    }
    FixpointRun {
        trace,
        constant,
        noise_floor: floor,
        pair: current,
    }
}

/// Iterates from point masses at the exact means.
pub fn iterate_fixpoint(spec: &UrnSpec, system: System, n: usize, iterations: u64, seed: u64) -> Result<FixpointRun> {
    Ok(iterate_from(ParticlePair::point_masses(spec, system, n)?, iterations, seed))
}

/// Multiplies every particle by an independent `xi^sigma`, `xi ~ Gamma(1/S)`.
pub fn transfer_dt_to_ct(pair: &ParticlePair, seed: u64) -> Result<ParticlePair> {
    if pair.system != System::Dt {
        return Err(UrnError::InvalidArgument("transfer expects a discrete-time pair".into()));
    }
    let spec = &pair.spec;
    let gamma = LogGamma::new(1.0 / spec.balance() as f64);
    let sigma = spec.sigma_f64();
    let n = pair.len();
    let scale = |pool: &[f64], offset: usize| {
        map_indexed(n, |i| {
            let mut rng = stream(seed, domain::TRANSFER, (offset + i) as u64);
            pool[i] * (sigma * gamma.sample(&mut rng)).exp()
        })
    };
    let x = scale(&pair.x, 0);
    let y = scale(&pair.y, n);
    ParticlePair::from_pools(spec, System::Ct, x, y)
}
