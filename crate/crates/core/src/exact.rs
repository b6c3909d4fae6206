//! Exact law of the discrete-time composition after `n` draws.
//!
//! The chain state after `k` draws is the number `i` of red draws; the red
//! count is the affine image `alpha + i a + (k - i) c`. All probabilities
//! after `k` draws share the denominator `prod_{l<k} (alpha + beta + l S)`,
//! so the DP carries integer numerators and one common denominator and only
//! reduces fractions on output.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Result, UrnError};
use crate::exec::map_indexed;
use crate::rational::{fmt_exact, qi, to_f64, Q};
use crate::rng::{below, domain, stream};
use crate::urn::{Composition, UrnSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    pub spec: UrnSpec,
    pub init: Composition,
    pub n: u64,
    /// Red-ball count to probability.
    pub mass: BTreeMap<u64, Q>,
}

impl ExactDistribution {
    pub fn total_balls(&self) -> u64 {
        self.init.total() + self.n * self.spec.balance()
    }

    pub fn total_mass(&self) -> Q {
        self.mass.values().fold(Q::zero(), |acc, p| acc + p)
    }

    pub fn mean_red(&self) -> Q {
        self.mass
            .iter()
            .fold(Q::zero(), |acc, (r, p)| acc + qi(*r as i64) * p)
    }

    /// `E[u2(U(n))]` from the distribution itself.
    pub fn mean_u2(&self) -> Q {
        let total = self.total_balls();
        self.mass.iter().fold(Q::zero(), |acc, (&r, p)| {
            let (_, u2) = self.spec.project(Composition {
                red: r,
                black: total - r,
            });
            acc + u2 * p
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "probability_exact", "probability"])?;
        for (r, p) in &self.mass {
            w.write_record([r.to_string(), fmt_exact(p), format!("{:e}", to_f64(p))])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stepper over draw counts, exposing the law after every step.
#[derive(Clone, Debug)]
pub struct ExactChain {
    spec: UrnSpec,
    init: Composition,
    steps: u64,
    numerators: Vec<BigInt>,
    denominator: BigInt,
}

impl ExactChain {
    pub fn new(spec: &UrnSpec, init: Composition) -> Self {
        Self {
            spec: spec.clone(),
            init,
            steps: 0,
            numerators: vec![BigInt::from(1u8)],
            denominator: BigInt::from(1u8),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn red_after(&self, red_draws: u64) -> u64 {
        let black_draws = self.steps - red_draws;
        self.init.red + red_draws * self.spec.a() as u64 + black_draws * self.spec.c() as u64
    }

    fn total(&self) -> u64 {
        self.init.total() + self.steps * self.spec.balance()
    }

    pub fn step(&mut self) {
        let total = self.total();
        let mut next = vec![BigInt::zero(); self.numerators.len() + 1];
        for (i, w) in self.numerators.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let red = self.red_after(i as u64);
            if red > 0 {
                next[i + 1] += w * red;
            }
            if red < total {
                next[i] += w * (total - red);
            }
        }
        self.numerators = next;
        self.denominator *= total;
        self.steps += 1;
    }

    /// Exact `E[u2(U(k))]` at the current step.
    pub fn mean_u2(&self) -> Q {
        let total = self.total() as i64;
        let (b, c) = (self.spec.b() as i64, self.spec.c() as i64);
        let mut acc = BigInt::zero();
        for (i, w) in self.numerators.iter().enumerate() {
            let red = self.red_after(i as u64) as i64;
            acc += w * (b * red - c * (total - red));
        }
        Q::new(acc, &self.denominator * BigInt::from(self.spec.balance()))
    }

    pub fn distribution(&self) -> ExactDistribution {
        let mut mass: BTreeMap<u64, Q> = BTreeMap::new();
        for (i, w) in self.numerators.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let p = Q::new(w.clone(), self.denominator.clone());
            *mass.entry(self.red_after(i as u64)).or_insert_with(Q::zero) += p;
        }
        ExactDistribution {
            spec: self.spec.clone(),
            init: self.init,
            n: self.steps,
            mass,
        }
    }
}

pub fn exact_distribution(spec: &UrnSpec, init: Composition, n: u64) -> ExactDistribution {
    let mut chain = ExactChain::new(spec, init);
    for _ in 0..n {
        chain.step();
    }
    chain.distribution()
}

/// Floating-point law for horizons where exact arithmetic is too slow.
#[derive(Clone, Debug)]
pub struct FloatDistribution {
    pub n: u64,
    pub mass: BTreeMap<u64, f64>,
}

/// Documented tolerance on `|sum of mass - 1|` for the floating DP.
pub const FLOAT_MASS_TOLERANCE: f64 = 1e-12;

pub fn float_distribution(spec: &UrnSpec, init: Composition, n: u64) -> FloatDistribution {
    let (a, c, s) = (spec.a() as f64, spec.c() as f64, spec.balance() as f64);
    let mut w = vec![1.0f64];
    for k in 0..n {
        let total = init.total() as f64 + k as f64 * s;
        let mut next = vec![0.0; w.len() + 1];
        for (i, &p) in w.iter().enumerate() {
            let red = init.red as f64 + i as f64 * a + (k as f64 - i as f64) * c;
            let pr = red / total;
            next[i + 1] += p * pr;
            next[i] += p * (1.0 - pr);
        }
        w = next;
    }
    let mut mass = BTreeMap::new();
    for (i, p) in w.into_iter().enumerate() {
        if p > 0.0 {
            let red = init.red + i as u64 * spec.a() as u64 + (n - i as u64) * spec.c() as u64;
            *mass.entry(red).or_insert(0.0) += p;
        }
    }
    FloatDistribution { n, mass }
}

/// `(r - E r) / n^sigma` for every atom, sorted by value.
pub fn normalized_profile(dist: &ExactDistribution) -> Result<Vec<(f64, f64)>> {
    if dist.n == 0 {
        return Err(UrnError::InvalidArgument("profile needs n >= 1".into()));
    }
    let mean = dist.mean_red();
    let scale = (dist.n as f64).powf(dist.spec.sigma_f64());
    let mut out: Vec<(f64, f64)> = dist
        .mass
        .iter()
        .map(|(r, p)| (to_f64(&(qi(*r as i64) - &mean)) / scale, to_f64(p)))
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(out)
}

pub fn write_profile_csv<W: Write>(profile: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["value", "probability"])?;
    for (v, p) in profile {
        w.write_record([format!("{v:e}"), format!("{p:e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
    pub samples: usize,
    /// Set when the identity holds by construction (single tree or `n = 0`).
    pub trivial: bool,
}

impl GofReport {
    fn trivial(samples: usize) -> Self {
        Self {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            bins: 1,
            samples,
            trivial: true,
        }
    }
}

/// Pearson chi-square of observed counts against exact atom probabilities.
/// Adjacent atoms are merged until each bin expects at least 5 observations.
pub fn chi_square_against(mass: &BTreeMap<u64, f64>, observed: &[u64]) -> (f64, usize, f64) {
    let n = observed.len() as f64;
    let mut bin_of: BTreeMap<u64, usize> = BTreeMap::new();
    let mut expected: Vec<f64> = Vec::new();
    let mut open = 0.0;
    let mut pending: Vec<u64> = Vec::new();
    for (&state, &p) in mass {
        pending.push(state);
        open += p * n;
        if open >= 5.0 {
            for s in pending.drain(..) {
                bin_of.insert(s, expected.len());
            }
            expected.push(open);
            open = 0.0;
        }
    }
    if !pending.is_empty() {
        if expected.is_empty() {
            expected.push(0.0);
        }
        let last = expected.len() - 1;
        for s in pending.drain(..) {
            bin_of.insert(s, last);
        }
        expected[last] += open;
    }
    let mut counts = vec![0u64; expected.len()];
    for r in observed {
        match bin_of.get(r) {
            Some(&b) => counts[b] += 1,
            None => return (f64::INFINITY, expected.len().saturating_sub(1), 0.0),
        }
    }
    let stat: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = expected.len() - 1;
    let p = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("dof > 0").sf(stat)
    };
    (if dof == 0 { 0.0 } else { stat }, dof, p)
}

/// Red count of the chain after `steps` draws from `init`.
pub(crate) fn run_red<R: rand::RngCore>(spec: &UrnSpec, init: Composition, steps: u64, rng: &mut R) -> u64 {
    let (a, c, s) = (spec.a() as u64, spec.c() as u64, spec.balance());
    let mut red = init.red;
    let mut total = init.total();
    for _ in 0..steps {
        red += if below(rng, total) < red { a } else { c };
        total += s;
    }
    red
}

/// Samples the forest form of the finite-time law (independent elementary
/// sub-urns run for `(D_k - 1) / S` draws, with tree sizes `D` from a
/// diagonal `S I` urn started at all ones) and tests it against the exact law.
pub fn decomposition_check(
    spec: &UrnSpec,
    init: Composition,
    n: u64,
    samples: usize,
    seed: u64,
) -> Result<GofReport> {
    if samples == 0 {
        return Err(UrnError::InvalidArgument("need at least one sample".into()));
    }
    let trees = init.total() as usize;
    if trees == 1 || n == 0 {
        return Ok(GofReport::trivial(samples));
    }
    let exact = exact_distribution(spec, init, n);
    let s = spec.balance();
    let observed = map_indexed(samples, |idx| {
        let mut rng = stream(seed, domain::DECOMPOSITION, idx as u64);
        let mut sizes = vec![1u64; trees];
        let mut total = trees as u64;
        for _ in 0..n {
            let mut u = below(&mut rng, total);
            for size in sizes.iter_mut() {
                if u < *size {
                    *size += s;
                    break;
                }
                u -= *size;
            }
            total += s;
        }
        sizes
            .iter()
            .enumerate()
            .map(|(k, &size)| {
                let start = if (k as u64) < init.red {
                    Composition { red: 1, black: 0 }
                } else {
                    Composition { red: 0, black: 1 }
                };
                run_red(spec, start, (size - 1) / s, &mut rng)
            })
            .sum::<u64>()
    });
    let mass: BTreeMap<u64, f64> = exact.mass.iter().map(|(k, p)| (*k, to_f64(p))).collect();
    let (statistic, dof, p_value) = chi_square_against(&mass, &observed);
    Ok(GofReport {
        statistic,
        dof,
        p_value,
        bins: dof + 1,
        samples,
        trivial: false,
    })
}

pub fn mass_as_f64(dist: &ExactDistribution) -> BTreeMap<u64, f64> {
    dist.mass
        .iter()
        .map(|(k, p)| (*k, p.to_f64().unwrap_or_else(|| to_f64(p))))
        .collect()
}
