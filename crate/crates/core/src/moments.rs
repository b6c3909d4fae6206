//! Exact moment recursions for the elementary limits `X` and `Y`.
//!
//! Raising the fixed-point equations to the power `p` and taking
//! expectations gives, for `p >= 2`,
//!
//! ```text
//! (mp - a) x_p - b y_p = T_X(p)
//! -c x_p + (mp - d) y_p = T_Y(p)
//! ```
//!
//! where `T_X(p)` is the multinomial sum over compositions of `p` into
//! `a + 1` X-slots and `b` Y-slots with every part below `p`. These sums are
//! binomial convolutions of moment sequences (coefficients of products of
//! exponential generating functions), maintained incrementally for every
//! power of the two sequences, so each order costs `O(S p)`.
//!
//! In discrete time the slot weights are the fractional Dirichlet moments
//! `h(q) = Gamma(1/S + sigma q) / Gamma(1/S)` and the whole sum carries
//! `Gamma(nu) / Gamma(nu + sigma p)` with `nu = (S + 1) / S`; since
//! `G(p) h(p) = 1 / (mp + 1)` the linear part keeps the same matrix.

use std::io::Write;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, UrnError};
use crate::rational::{binomial_row, fmt_exact, ln_abs, qi, to_f64, Q};
use crate::special::gamma_ratio;
use crate::urn::{Composition, UrnSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Dt,
    Ct,
}

/// Moments indexed from `p = 0` (always 1).
#[derive(Clone, Debug, PartialEq)]
pub enum MomentSeq {
    Exact(Vec<Q>),
    Float(Vec<f64>),
}

impl MomentSeq {
    pub fn len(&self) -> usize {
        match self {
            MomentSeq::Exact(v) => v.len(),
            MomentSeq::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_f64(&self, p: usize) -> f64 {
        match self {
            MomentSeq::Exact(v) => to_f64(&v[p]),
            MomentSeq::Float(v) => v[p],
        }
    }

    pub fn get_exact(&self, p: usize) -> Option<&Q> {
        match self {
            MomentSeq::Exact(v) => v.get(p),
            MomentSeq::Float(_) => None,
        }
    }

    /// `ln |m_p|`, exact-to-float safe for huge rationals.
    pub fn ln_abs(&self, p: usize) -> f64 {
        match self {
            MomentSeq::Exact(v) => ln_abs(&v[p]),
            MomentSeq::Float(v) => v[p].abs().ln(),
        }
    }

    fn to_floats(&self) -> Vec<f64> {
        (0..self.len()).map(|p| self.get_f64(p)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct MomentTable {
    pub spec: UrnSpec,
    pub system: System,
    pub x: MomentSeq,
    pub y: MomentSeq,
}

impl MomentTable {
    pub fn max_order(&self) -> usize {
        self.x.len() - 1
    }

    /// Even moments positive and both variances positive.
    pub fn nondegenerate(&self) -> bool {
        let p_max = self.max_order();
        let even_ok = (2..=p_max)
            .step_by(2)
            .all(|p| self.x.get_f64(p) > 0.0 && self.y.get_f64(p) > 0.0);
        let var_ok = p_max < 2 || {
            let vx = self.x.get_f64(2) - self.x.get_f64(1).powi(2);
            let vy = self.y.get_f64(2) - self.y.get_f64(1).powi(2);
            vx > 0.0 && vy > 0.0
        };
        even_ok && var_ok
    }

    /// Columns `p, x_exact, x, y_exact, y`; exact columns are empty for floats.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "x_exact", "x", "y_exact", "y"])?;
        for p in 0..=self.max_order() {
            let ex = |s: &MomentSeq| s.get_exact(p).map(fmt_exact).unwrap_or_default();
            w.write_record([
                p.to_string(),
                ex(&self.x),
                format!("{:e}", self.x.get_f64(p)),
                ex(&self.y),
                format!("{:e}", self.y.get_f64(p)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let col = |s: &MomentSeq| -> Vec<serde_json::Value> {
            (0..s.len())
                .map(|p| match s.get_exact(p) {
                    Some(q) => serde_json::json!({ "exact": fmt_exact(q), "value": to_f64(q) }),
                    None => serde_json::json!({ "value": s.get_f64(p) }),
                })
                .collect()
        };
        serde_json::json!({
            "spec": self.spec.record(),
            "system": self.system,
            "max_order": self.max_order(),
            "x": col(&self.x),
            "y": col(&self.y),
        })
    }
}

trait Scalar:
    Clone + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn from_big(n: &BigInt) -> Self;
    fn from_int(n: i64) -> Self;
}

impl Scalar for Q {
    fn from_big(n: &BigInt) -> Self {
        Q::from_integer(n.clone())
    }
    fn from_int(n: i64) -> Self {
        qi(n)
    }
}

impl Scalar for f64 {
    fn from_big(n: &BigInt) -> Self {
        to_f64(&Q::from_integer(n.clone()))
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
}

/// Moment sequences of `Z_1 + ... + Z_j` for iid copies `Z`, `j = 0..=max_power`,
/// grown one order at a time.
struct PowerTower<T> {
    powers: Vec<Vec<T>>,
    provisional: Vec<T>,
}

impl<T: Scalar> PowerTower<T> {
    fn new(max_power: usize, first: T) -> Self {
        let mut powers = Vec::with_capacity(max_power + 1);
        for j in 0..=max_power {
            powers.push(vec![T::one(), T::from_int(j as i64) * first.clone()]);
        }
        Self {
            powers,
            provisional: Vec::new(),
        }
    }

    /// Order-`p` coefficient of every power, counting only compositions
    /// whose parts are all below `p`.
    fn open_order(&mut self, p: usize, binom: &[T]) {
        let base = &self.powers[1];
        let mut prov = vec![T::zero(); self.powers.len()];
        for j in 2..self.powers.len() {
            let prev = &self.powers[j - 1];
            let mut acc = prov[j - 1].clone();
            for q in 1..p {
                acc = acc + binom[q].clone() * base[q].clone() * prev[p - q].clone();
            }
            prov[j] = acc;
        }
        self.provisional = prov;
    }

    fn close_order(&mut self, value: T) {
        let prov = std::mem::take(&mut self.provisional);
        for (j, (seq, pv)) in self.powers.iter_mut().zip(prov).enumerate() {
            seq.push(pv + T::from_int(j as i64) * value.clone());
        }
    }

    fn provisional(&self, j: usize) -> &T {
        &self.provisional[j]
    }

    fn power(&self, j: usize) -> &[T] {
        &self.powers[j]
    }
}

/// Order-`p` coefficient of `X^{jx} * Y^{jy}` restricted to parts below `p`.
fn mixed_provisional<T: Scalar>(xs: &PowerTower<T>, jx: usize, ys: &PowerTower<T>, jy: usize, p: usize, binom: &[T]) -> T {
    let px = xs.power(jx);
    let py = ys.power(jy);
    let mut acc = xs.provisional(jx).clone() + ys.provisional(jy).clone();
    for q in 1..p {
        acc = acc + binom[q].clone() * px[q].clone() * py[p - q].clone();
    }
    acc
}

fn binomials<T: Scalar>(p: usize) -> Vec<T> {
    binomial_row(p).iter().map(T::from_big).collect()
}

/// Shared recursion; `rhs_scale(p)` multiplies `(T_X, T_Y)` and `weight(p)`
/// maps a solved moment into the sequence convolved at later orders.
fn recurse<T: Scalar>(
    spec: &UrnSpec,
    max_order: usize,
    first: (T, T),
    weight: impl Fn(usize, &T) -> T,
    rhs_scale: impl Fn(usize) -> T,
) -> (Vec<T>, Vec<T>) {
    let (a, b, c, d) = (spec.a() as usize, spec.b() as usize, spec.c() as usize, spec.d() as usize);
    let m = spec.m();
    let mut xs = vec![T::one()];
    let mut ys = vec![T::one()];
    if max_order == 0 {
        return (xs, ys);
    }
    xs.push(first.0.clone());
    ys.push(first.1.clone());
    let mut tx = PowerTower::new((a + 1).max(c), weight(1, &first.0));
    let mut ty = PowerTower::new(b.max(d + 1), weight(1, &first.1));
    for p in 2..=max_order {
        let binom = binomials::<T>(p);
        tx.open_order(p, &binom);
        ty.open_order(p, &binom);
        let scale = rhs_scale(p);
        let t_x = mixed_provisional(&tx, a + 1, &ty, b, p, &binom) * scale.clone();
        let t_y = mixed_provisional(&tx, c, &ty, d + 1, p, &binom) * scale;
        let mp = m * p as i64;
        let (m11, m12) = (T::from_int(mp - a as i64), T::from_int(b as i64));
        let (m21, m22) = (T::from_int(c as i64), T::from_int(mp - d as i64));
        let det = m11.clone() * m22.clone() - m12.clone() * m21.clone();
        let x = (m22 * t_x.clone() + m12 * t_y.clone()) / det.clone();
        let y = (m21 * t_x + m11 * t_y) / det;
        tx.close_order(weight(p, &x));
        ty.close_order(weight(p, &y));
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// Exact moments of `X^CT`, `Y^CT` up to `max_order`.
pub fn ct_moments_exact(spec: &UrnSpec, max_order: usize) -> Result<MomentTable> {
    spec.require_large()?;
    let first = spec.ct_elementary_means();
    let (x, y) = recurse(spec, max_order, first, |_, v: &Q| v.clone(), |_| Q::one());
    Ok(MomentTable {
        spec: spec.clone(),
        system: System::Ct,
        x: MomentSeq::Exact(x),
        y: MomentSeq::Exact(y),
    })
}

/// Moments of `X^DT`, `Y^DT` from the discrete-time system with fractional
/// Dirichlet moments, independently of the connexion with continuous time.
pub fn dt_moments_direct(spec: &UrnSpec, max_order: usize) -> Result<MomentTable> {
    spec.require_large()?;
    let s = spec.balance() as f64;
    let sigma = spec.sigma_f64();
    let inv_s = 1.0 / s;
    let nu = (s + 1.0) / s;
    let ln_g_inv_s = ln_gamma(inv_s);
    let h = |q: usize| (ln_gamma(inv_s + sigma * q as f64) - ln_g_inv_s).exp();
    let ratio1 = gamma_ratio(inv_s, inv_s + sigma);
    let first = (
        ratio1 * spec.b() as f64 / s,
        -ratio1 * spec.c() as f64 / s,
    );
    let m = spec.m() as f64;
    let (x, y) = recurse(
        spec,
        max_order,
        first,
        |q, v: &f64| h(q) * v,
        |p| (m * p as f64 + 1.0) * gamma_ratio(nu, nu + sigma * p as f64),
    );
    Ok(MomentTable {
        spec: spec.clone(),
        system: System::Dt,
        x: MomentSeq::Float(x),
        y: MomentSeq::Float(y),
    })
}

/// `E[(W^DT)^p] = E[(W^CT)^p] Gamma(kappa) / Gamma(kappa + sigma p)`.
pub fn dt_moments_via_connexion(ct: &MomentTable, init: Composition) -> Result<MomentTable> {
    if ct.system != System::Ct {
        return Err(UrnError::InvalidArgument("connexion needs a continuous-time table".into()));
    }
    if init.total() != 1 {
        return Err(UrnError::InvalidArgument(
            "elementary tables start from a single ball; use composite_moments".into(),
        ));
    }
    let kappa = ct.spec.kappa_f64(init);
    let sigma = ct.spec.sigma_f64();
    let convert = |seq: &MomentSeq| -> MomentSeq {
        MomentSeq::Float(
            (0..seq.len())
                .map(|p| seq.get_f64(p) * gamma_ratio(kappa, kappa + sigma * p as f64))
                .collect(),
        )
    };
    Ok(MomentTable {
        spec: ct.spec.clone(),
        system: System::Dt,
        x: convert(&ct.x),
        y: convert(&ct.y),
    })
}

/// Moments of `W_(alpha, beta)`.
#[derive(Clone, Debug)]
pub struct CompositeMoments {
    pub init: Composition,
    pub system: System,
    pub values: MomentSeq,
}

fn convolve_power<T: Scalar>(seq: &[T], power: u64, into: Vec<T>) -> Vec<T> {
    let mut acc = into;
    for _ in 0..power {
        acc = binomial_convolution(&acc, seq);
    }
    acc
}

fn binomial_convolution<T: Scalar>(f: &[T], g: &[T]) -> Vec<T> {
    let n = f.len().min(g.len());
    (0..n)
        .map(|p| {
            let binom = binomials::<T>(p);
            (0..=p).fold(T::zero(), |acc, q| acc + binom[q].clone() * f[q].clone() * g[p - q].clone())
        })
        .collect()
}

/// Continuous time: `alpha`-fold and `beta`-fold independent sums, by
/// binomial convolution. Discrete time: through continuous time and the
/// connexion with `xi ~ Gamma((alpha + beta) / S)`.
pub fn composite_moments(table: &MomentTable, init: Composition) -> Result<CompositeMoments> {
    if init.total() == 0 {
        return Err(UrnError::EmptyComposition);
    }
    let spec = &table.spec;
    let values = match (&table.x, &table.y, table.system) {
        (MomentSeq::Exact(x), MomentSeq::Exact(y), System::Ct) => {
            let one = vec![Q::one(); x.len()];
            let unit: Vec<Q> = one.iter().enumerate().map(|(p, v)| if p == 0 { v.clone() } else { Q::zero() }).collect();
            let acc = convolve_power(x, init.red, unit);
            MomentSeq::Exact(convolve_power(y, init.black, acc))
        }
        _ => {
            let x = table.x.to_floats();
            let y = table.y.to_floats();
            let s = spec.balance() as f64;
            let sigma = spec.sigma_f64();
            let inv_s = 1.0 / s;
            let (x, y) = if table.system == System::Dt {
                let lift = |v: &[f64]| -> Vec<f64> {
                    v.iter()
                        .enumerate()
                        .map(|(p, m)| m * gamma_ratio(inv_s + sigma * p as f64, inv_s))
                        .collect()
                };
                (lift(&x), lift(&y))
            } else {
                (x, y)
            };
            let mut unit = vec![0.0; x.len()];
            unit[0] = 1.0;
            let ct = convolve_power(&y, init.black, convolve_power(&x, init.red, unit));
            if table.system == System::Dt {
                let kappa = spec.kappa_f64(init);
                MomentSeq::Float(
                    ct.iter()
                        .enumerate()
                        .map(|(p, m)| m * gamma_ratio(kappa, kappa + sigma * p as f64))
                        .collect(),
                )
            } else {
                MomentSeq::Float(ct)
            }
        }
    };
    Ok(CompositeMoments {
        init,
        system: table.system,
        values,
    })
}

/// `phi(q) = ln^q(q + 2)`.
pub fn phi(q: usize) -> f64 {
    ((q as f64 + 2.0).ln()).powi(q as i32)
}

/// Sum over compositions of `p` into `slots` parts, each at most `p - 1`,
/// of `phi(p_1) ... phi(p_slots) / phi(p)`.
///
/// Uses the ordinary power series `sum phi(q) t^q` raised to `slots`. Every
/// composition has total `p`, so `phi(q)` can be rescaled by `r^q` with
/// `r = 1 / ln(p + 2)` without changing the ratio; this keeps the
/// coefficients near one.
pub fn phi_capital(p: usize, balance: u64) -> f64 {
    assert!(p >= 2, "defined for p >= 2");
    let slots = balance as usize + 1;
    let lp = (p as f64 + 2.0).ln();
    let w: Vec<f64> = (0..=p).map(|q| ((q as f64 + 2.0).ln() / lp).powi(q as i32)).collect();
    let mut acc = vec![0.0; p + 1];
    acc[0] = 1.0;
    for _ in 0..slots {
        let mut next = vec![0.0; p + 1];
        for (i, ai) in acc.iter().enumerate() {
            if *ai == 0.0 {
                continue;
            }
            for (j, wj) in w.iter().enumerate().take(p + 1 - i) {
                next[i + j] += ai * wj;
            }
        }
        acc = next;
    }
    // w[p] == 1 after rescaling
    acc[p] - slots as f64
}

pub fn phi_bound(p: usize, balance: u64) -> f64 {
    (1.0 + 8.0 * (p as f64 + 2.0).ln()).powi(balance as i32 + 1)
}

pub fn phi_bound_check(p: usize, balance: u64) -> bool {
    phi_capital(p, balance) <= phi_bound(p, balance)
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSeries {
    /// `(p, (|m_p| / p!)^(1/p))`
    pub factorial_root: Vec<(usize, f64)>,
    /// `(k, (m_2k / ((2k)! ln^{2k}(2k)))^(1/2k))`
    pub log_factorial_root: Vec<(usize, f64)>,
    /// `(k, sum_{j<=k} m_2j^(-1/2j))`
    pub carleman: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub x: GrowthSeries,
    pub y: GrowthSeries,
}

fn growth_series(seq: &MomentSeq) -> GrowthSeries {
    let max = seq.len() - 1;
    let ln_fact = |p: usize| ln_gamma(p as f64 + 1.0);
    let factorial_root = (1..=max)
        .map(|p| (p, ((seq.ln_abs(p) - ln_fact(p)) / p as f64).exp()))
        .collect();
    let mut log_factorial_root = Vec::new();
    let mut carleman = Vec::new();
    let mut partial = 0.0;
    for k in 1..=max / 2 {
        let p = 2 * k;
        let ln_m = seq.ln_abs(p);
        let ln_log = (p as f64).ln().ln();
        log_factorial_root.push((k, ((ln_m - ln_fact(p) - p as f64 * ln_log) / p as f64).exp()));
        partial += (-ln_m / p as f64).exp();
        carleman.push((k, partial));
    }
    GrowthSeries {
        factorial_root,
        log_factorial_root,
        carleman,
    }
}

/// Moment-growth sequences for a table with even orders up to `2K`.
pub fn growth_diagnostics(table: &MomentTable) -> Result<GrowthReport> {
    if table.max_order() < 2 {
        return Err(UrnError::InvalidArgument("growth diagnostics need order >= 2".into()));
    }
    Ok(GrowthReport {
        x: growth_series(&table.x),
        y: growth_series(&table.y),
    })
}

/// Sign of every odd moment, used against sample skew.
pub fn odd_signs(seq: &MomentSeq) -> Vec<(usize, i8)> {
    (1..seq.len())
        .step_by(2)
        .map(|p| {
            let s = match seq {
                MomentSeq::Exact(v) => {
                    if v[p].is_positive() {
                        1
                    } else if v[p].is_negative() {
                        -1
                    } else {
                        0
                    }
                }
                MomentSeq::Float(v) => v[p].signum() as i8,
            };
            (p, s)
        })
        .collect()
}
