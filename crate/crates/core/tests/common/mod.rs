//! Independent reference computations used only by the tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

pub fn qf(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap()
}

/// `u2(init) * prod_{k<n} (1 + sigma / (k + kappa))`.
pub fn martingale_product(abcd: [i64; 4], red: i64, black: i64, n: u64) -> Q {
    let [a, b, c, _] = abcd;
    let s = a + b;
    let sigma = q(a - c, s);
    let kappa = q(red + black, s);
    let mut acc = q(b * red - c * black, s);
    for k in 0..n {
        acc *= Q::one() + &sigma / (Q::from_integer(BigInt::from(k)) + &kappa);
    }
    acc
}

/// Law of the red count after `n` draws, by walking every path.
pub fn enumerate_paths(abcd: [u64; 4], red: u64, black: u64, n: u32) -> BTreeMap<u64, Q> {
    let mut out = BTreeMap::new();
    fn walk(abcd: [u64; 4], r: u64, b: u64, left: u32, p: Q, out: &mut BTreeMap<u64, Q>) {
        if left == 0 {
            *out.entry(r).or_insert_with(Q::zero) += p;
            return;
        }
        let t = r + b;
        if r > 0 {
            let pr = &p * Q::new(r.into(), t.into());
            walk(abcd, r + abcd[0], b + abcd[1], left - 1, pr, out);
        }
        if b > 0 {
            let pb = &p * Q::new(b.into(), t.into());
            walk(abcd, r + abcd[2], b + abcd[3], left - 1, pb, out);
        }
    }
    walk(abcd, red, black, n, Q::one(), &mut out);
    out
}

/// All compositions of `p` into `parts` nonnegative parts, each below `p`.
pub fn compositions(p: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(parts);
    fn rec(left: usize, parts: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left.min(cap) {
            cur.push(k);
            rec(left - k, parts - 1, cap, cur, out);
            cur.pop();
        }
    }
    rec(p, parts, p - 1, &mut cur, &mut out);
    out
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn multinomial(parts: &[usize]) -> BigInt {
    let p: usize = parts.iter().sum();
    parts.iter().fold(factorial(p), |acc, k| acc / factorial(*k))
}

/// Continuous-time moments by explicit enumeration of the multinomial sums
/// and a direct 2x2 solve.
pub fn brute_force_ct_moments(abcd: [i64; 4], max_order: usize) -> (Vec<Q>, Vec<Q>) {
    let [a, b, c, d] = abcd;
    let s = a + b;
    let m = a - c;
    let mut x = vec![Q::one(), q(b, s)];
    let mut y = vec![Q::one(), q(-c, s)];
    for p in 2..=max_order {
        let sum = |x_slots: usize, x: &[Q], y: &[Q]| -> Q {
            compositions(p, (s + 1) as usize).iter().fold(Q::zero(), |acc, comp| {
                let mut term = Q::from_integer(multinomial(comp));
                for (i, k) in comp.iter().enumerate() {
                    term *= if i < x_slots { &x[*k] } else { &y[*k] };
                }
                acc + term
            })
        };
        let tx = sum((a + 1) as usize, &x, &y);
        let ty = sum(c as usize, &x, &y);
        let mp = m * p as i64;
        let (m11, m12, m21, m22) = (q(mp - a, 1), q(-b, 1), q(-c, 1), q(mp - d, 1));
        let det = &m11 * &m22 - &m12 * &m21;
        x.push((&m22 * &tx - &m12 * &ty) / &det);
        y.push((&m11 * &ty - &m21 * &tx) / &det);
    }
    (x, y)
}

/// `ln Gamma` by Lanczos (g = 7, 9 terms), kept separate from the library.
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut sum = G[0];
    for (i, g) in G.iter().enumerate().skip(1) {
        sum += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Discrete-time moments from the expanded system: every composition of `p`
/// over `S + 1` slots weighted by the fractional Dirichlet joint moment.
pub fn brute_force_dt_moments(abcd: [i64; 4], max_order: usize) -> (Vec<f64>, Vec<f64>) {
    let [a, b, c, d] = abcd;
    let s = (a + b) as f64;
    let sigma = (a - c) as f64 / s;
    let slots = (a + b + 1) as usize;
    let nu = (s + 1.0) / s;
    let dir = |comp: &[usize]| -> f64 {
        let p: usize = comp.iter().sum();
        let mut ln = ln_gamma(nu) - ln_gamma(nu + sigma * p as f64);
        for k in comp {
            ln += ln_gamma(1.0 / s + sigma * *k as f64) - ln_gamma(1.0 / s);
        }
        ln.exp()
    };
    let first = (ln_gamma(1.0 / s) - ln_gamma(1.0 / s + sigma)).exp();
    let mut x = vec![1.0, first * b as f64 / s];
    let mut y = vec![1.0, -first * c as f64 / s];
    for p in 2..=max_order {
        let sum = |x_slots: usize| -> f64 {
            compositions(p, slots)
                .iter()
                .map(|comp| {
                    let mut term = qf(&Q::from_integer(multinomial(comp))) * dir(comp);
                    for (i, k) in comp.iter().enumerate() {
                        term *= if i < x_slots { x[*k] } else { y[*k] };
                    }
                    term
                })
                .sum()
        };
        let tx = sum((a + 1) as usize);
        let ty = sum(c as usize);
        let mut single = vec![0; slots];
        single[0] = p;
        let w = dir(&single);
        // x = w((a+1) x + b y) + tx ; y = w(c x + (d+1) y) + ty
        let (m11, m12, m21, m22) = (
            1.0 - w * (a + 1) as f64,
            -w * b as f64,
            -w * c as f64,
            1.0 - w * (d + 1) as f64,
        );
        let det = m11 * m22 - m12 * m21;
        x.push((m22 * tx - m12 * ty) / det);
        y.push((m11 * ty - m21 * tx) / det);
    }
    (x, y)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut z = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        out.push(((1.0 - z) / 2.0, w / 2.0));
    }
    out
}

/// `E[D^p]` for a Dirichlet with integer parameters by quadrature over the
/// simplex (d = 2 or 3); normalization also by quadrature.
pub fn simplex_moment(nu: &[u32], p: &[u32]) -> f64 {
    let rule = gauss_legendre(40);
    let dens = |x: &[f64], pw: &[u32]| -> f64 {
        x.iter()
            .zip(nu)
            .zip(pw)
            .map(|((xi, n), k)| xi.powi((*n + *k) as i32 - 1))
            .product()
    };
    let integrate = |pw: &[u32]| -> f64 {
        match nu.len() {
            2 => rule.iter().map(|(u, w)| w * dens(&[*u, 1.0 - u], pw)).sum(),
            3 => rule
                .iter()
                .map(|(u, wu)| {
                    let inner: f64 = rule
                        .iter()
                        .map(|(v, wv)| {
                            let x2 = (1.0 - u) * v;
                            wv * (1.0 - u) * dens(&[*u, x2, 1.0 - u - x2], pw)
                        })
                        .sum();
                    wu * inner
                })
                .sum(),
            _ => unimplemented!("quadrature oracle covers d = 2, 3"),
        }
    };
    integrate(p) / integrate(&vec![0; nu.len()])
}

/// Law of the three-color diagonal urn after `n` draws.
pub fn three_color_dp(balance: u64, init: [u64; 3], n: u64) -> BTreeMap<[u64; 3], Q> {
    let mut dist = BTreeMap::from([(init, Q::one())]);
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for (state, p) in &dist {
            let total: u64 = state.iter().sum();
            for k in 0..3 {
                if state[k] == 0 {
                    continue;
                }
                let mut s = *state;
                s[k] += balance;
                *next.entry(s).or_insert_with(Q::zero) += p * Q::new(state[k].into(), total.into());
            }
        }
        dist = next;
    }
    dist
}

/// `prod_k (P_k / S)(P_k / S + 1)...(P_k / S + p_k - 1)`.
pub fn gamma_p_direct(balance: u64, counts: &[u64], p: &[u32]) -> Q {
    let mut acc = Q::one();
    for (c, k) in counts.iter().zip(p) {
        let base = Q::new((*c).into(), balance.into());
        for j in 0..*k {
            acc *= &base + Q::from_integer(j.into());
        }
    }
    acc
}

pub fn spec6() -> urnlab::UrnSpec {
    urnlab::UrnSpec::new(6, 1, 2, 5).unwrap()
}

pub fn spec18() -> urnlab::UrnSpec {
    urnlab::UrnSpec::new(18, 2, 3, 17).unwrap()
}

pub fn comp(red: u64, black: u64) -> urnlab::Composition {
    urnlab::Composition::new(red, black).unwrap()
}
