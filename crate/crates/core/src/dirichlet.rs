//! Dirichlet sampling and moments, and the diagonal urn `S * I_d`.

use std::io::Write;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, UrnError};
use crate::exec::map_indexed;
use crate::rational::{fmt_exact, qi, rising, to_f64, Q};
use crate::rng::{below, domain, log_dirichlet, stream, LogGamma};

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletParams {
    nu: Vec<Q>,
}

impl DirichletParams {
    pub fn new(nu: Vec<Q>) -> Result<Self> {
        if nu.len() < 2 {
            return Err(UrnError::InvalidArgument("Dirichlet needs dimension >= 2".into()));
        }
        if let Some(k) = nu.iter().position(|v| !v.is_positive()) {
            return Err(UrnError::InvalidArgument(format!(
                "parameter {} must be positive, got {}",
                k,
                fmt_exact(&nu[k])
            )));
        }
        Ok(Self { nu })
    }

    /// Parameters `alpha_k / S` of the diagonal-urn limit.
    pub fn from_urn(balance: u64, init: &[u64]) -> Result<Self> {
        if balance == 0 {
            return Err(UrnError::InvalidArgument("balance must be positive".into()));
        }
        Self::new(init.iter().map(|&a| Q::new(a.into(), balance.into())).collect())
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self) -> &[Q] {
        &self.nu
    }

    pub fn total(&self) -> Q {
        self.nu.iter().fold(Q::zero(), |acc, v| acc + v)
    }

    pub fn mean(&self, k: usize) -> f64 {
        to_f64(&(&self.nu[k] / self.total()))
    }
}

/// `n` points on the simplex from normalized Gamma variates.
pub fn sample(params: &DirichletParams, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let samplers: Vec<LogGamma> = params.nu.iter().map(|v| LogGamma::new(to_f64(v))).collect();
    map_indexed(n, |i| {
        let mut rng = stream(seed, domain::DIRICHLET, i as u64);
        let mut out = vec![0.0; samplers.len()];
        log_dirichlet(&samplers, &mut rng, &mut out);
        out.iter_mut().for_each(|l| *l = l.exp());
        out
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Powers {
    Integer(Vec<u32>),
    Real(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MomentValue {
    Exact(Q),
    Float(f64),
}

impl MomentValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            MomentValue::Exact(q) => to_f64(q),
            MomentValue::Float(x) => *x,
        }
    }
}

/// `E[D_1^{p_1} ... D_d^{p_d}]`; exact for integer powers.
pub fn joint_moment(params: &DirichletParams, powers: &Powers) -> Result<MomentValue> {
    let d = params.dim();
    let len = match powers {
        Powers::Integer(p) => p.len(),
        Powers::Real(p) => p.len(),
    };
    if len != d {
        return Err(UrnError::InvalidArgument(format!("expected {d} powers, got {len}")));
    }
    match powers {
        Powers::Integer(p) => {
            let total: u32 = p.iter().sum();
            let num = params
                .nu
                .iter()
                .zip(p)
                .fold(Q::one(), |acc, (v, &k)| acc * rising(v, k));
            Ok(MomentValue::Exact(num / rising(&params.total(), total)))
        }
        Powers::Real(p) => {
            let nu: Vec<f64> = params.nu.iter().map(to_f64).collect();
            for (k, (v, pk)) in nu.iter().zip(p).enumerate() {
                if (v + pk).is_nan() || v + pk <= 0.0 {
                    return Err(UrnError::NotIntegrable {
                        coordinate: k,
                        value: v + pk,
                    });
                }
            }
            let total_nu: f64 = nu.iter().sum();
            let total_p: f64 = p.iter().sum();
            let mut ln = ln_gamma(total_nu) - ln_gamma(total_nu + total_p);
            for (v, pk) in nu.iter().zip(p) {
                ln += ln_gamma(v + pk) - ln_gamma(*v);
            }
            Ok(MomentValue::Float(ln.exp()))
        }
    }
}

fn validate_urn(d: usize, balance: u64, init: &[u64]) -> Result<()> {
    if d < 2 || init.len() != d {
        return Err(UrnError::InvalidArgument(format!(
            "need d >= 2 and {d} initial counts, got {}",
            init.len()
        )));
    }
    if balance == 0 {
        return Err(UrnError::InvalidArgument("balance must be positive".into()));
    }
    if init.iter().all(|&a| a == 0) {
        return Err(UrnError::EmptyComposition);
    }
    Ok(())
}

/// One trajectory of the `d`-color urn with replacement `S * I_d`.
pub fn run_diagonal_urn<R: rand::RngCore>(balance: u64, init: &[u64], steps: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = init.to_vec();
    let mut total: u64 = counts.iter().sum();
    for _ in 0..steps {
        let mut u = below(rng, total);
        let mut k = 0;
        while u >= counts[k] {
            u -= counts[k];
            k += 1;
        }
        counts[k] += balance;
        total += balance;
    }
    counts
}

/// Samples of `P_n / (n S)`.
pub fn simulate_diagonal_urn(
    d: usize,
    balance: u64,
    init: &[u64],
    steps: u64,
    trajectories: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    validate_urn(d, balance, init)?;
    if steps == 0 {
        return Err(UrnError::InvalidArgument("normalization needs n >= 1".into()));
    }
    let scale = (steps * balance) as f64;
    Ok(map_indexed(trajectories, |i| {
        let mut rng = stream(seed, domain::DIAGONAL_URN, i as u64);
        run_diagonal_urn(balance, init, steps, &mut rng)
            .into_iter()
            .map(|c| c as f64 / scale)
            .collect()
    }))
}

/// `Gamma_p(P) = prod_k Gamma(P_k / S + p_k) / Gamma(P_k / S)`.
pub fn gamma_p(balance: u64, counts: &[u64], p: &[u32]) -> Q {
    counts
        .iter()
        .zip(p)
        .fold(Q::one(), |acc, (&c, &k)| acc * rising(&Q::new(c.into(), balance.into()), k))
}

/// Exact `E Gamma_p(P_n)`; every Gamma ratio has integer-spaced arguments.
pub fn gamma_p_expectation(d: usize, balance: u64, init: &[u64], steps: u64, p: &[u32]) -> Result<Q> {
    validate_urn(d, balance, init)?;
    if p.len() != d {
        return Err(UrnError::InvalidArgument(format!("expected {d} powers, got {}", p.len())));
    }
    let total_p: u32 = p.iter().sum();
    let base = Q::new(init.iter().sum::<u64>().into(), balance.into());
    let factor = rising(&(&base + qi(steps as i64)), total_p) / rising(&base, total_p);
    Ok(factor * gamma_p(balance, init, p))
}

/// Limit of `n^{-|p|} E Gamma_p(P_n)`.
pub fn gamma_p_limit(balance: u64, init: &[u64], p: &[u32]) -> f64 {
    let total_p: u32 = p.iter().sum();
    let base = Q::new(init.iter().sum::<u64>().into(), balance.into());
    to_f64(&(gamma_p(balance, init, p) / rising(&base, total_p)))
}

#[derive(Clone, Debug, Serialize)]
pub struct CoordinateCheck {
    pub coordinate: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub mean_expected: f64,
    pub second: f64,
    pub second_se: f64,
    pub second_expected: f64,
    pub within_3se: bool,
}

/// Sample first and second moments per coordinate against the Dirichlet formulas.
pub fn coordinate_checks(params: &DirichletParams, rows: &[Vec<f64>]) -> Result<Vec<CoordinateCheck>> {
    if rows.is_empty() {
        return Err(UrnError::EmptySample);
    }
    let d = params.dim();
    (0..d)
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let (mean, mean_se) = crate::stats::raw_moment(&col, 1);
            let (second, second_se) = crate::stats::raw_moment(&col, 2);
            let mut p1 = vec![0u32; d];
            p1[k] = 1;
            let mut p2 = vec![0u32; d];
            p2[k] = 2;
            let mean_expected = joint_moment(params, &Powers::Integer(p1))?.to_f64();
            let second_expected = joint_moment(params, &Powers::Integer(p2))?.to_f64();
            Ok(CoordinateCheck {
                coordinate: k,
                mean,
                mean_se,
                mean_expected,
                second,
                second_se,
                second_expected,
                within_3se: (mean - mean_expected).abs() <= 3.0 * mean_se
                    && (second - second_expected).abs() <= 3.0 * second_se,
            })
        })
        .collect()
}

/// Simplex samples with columns `x1..xd`.
pub fn write_simplex_csv<W: Write>(rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        w.write_record((1..=first.len()).map(|k| format!("x{k}")))?;
    }
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}
