//! Replacement matrices, their spectral data, and closed-form expectations.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::rational::{fmt_exact, q, qi, to_f64, Q};
use crate::special::gamma_ratio;

/// Balanced two-color replacement matrix `(a, b; c, d)`: drawing red adds
/// `a` red and `b` black, drawing black adds `c` red and `d` black.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UrnSpec {
    a: u32,
    b: u32,
    c: u32,
    d: u32,
    balance: u64,
    m: i64,
    sigma: Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UrnClass {
    Original,
    Large,
    Critical,
    Small,
    Triangular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Composition {
    pub red: u64,
    pub black: u64,
}

impl Composition {
    pub fn new(red: u64, black: u64) -> Result<Self> {
        if red + black == 0 {
            return Err(UrnError::EmptyComposition);
        }
        Ok(Self { red, black })
    }

    pub fn total(&self) -> u64 {
        self.red + self.black
    }
}

/// Linear form `(x, y) -> x_coef * x + y_coef * y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub x_coef: Q,
    pub y_coef: Q,
}

impl LinearForm {
    pub fn apply(&self, x: &Q, y: &Q) -> Q {
        &self.x_coef * x + &self.y_coef * y
    }
}

/// Eigenvectors `v1, v2` of the transposed matrix and the dual forms `u1, u2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralData {
    pub v1: (Q, Q),
    pub v2: (Q, Q),
    pub u1: LinearForm,
    pub u2: LinearForm,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecRecord {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub balance: u64,
    pub m: i64,
    pub sigma: String,
}

impl UrnSpec {
    pub fn new(a: u32, b: u32, c: u32, d: u32) -> Result<Self> {
        let left = a as u64 + b as u64;
        let right = c as u64 + d as u64;
        if left != right {
            return Err(UrnError::Unbalanced { left, right });
        }
        if left == 0 {
            return Err(UrnError::InvalidArgument("balance must be at least 1".into()));
        }
        let m = a as i64 - c as i64;
        Ok(Self {
            a,
            b,
            c,
            d,
            balance: left,
            m,
            sigma: q(m, left as i64),
        })
    }

    pub fn a(&self) -> u32 {
        self.a
    }
    pub fn b(&self) -> u32 {
        self.b
    }
    pub fn c(&self) -> u32 {
        self.c
    }
    pub fn d(&self) -> u32 {
        self.d
    }
    /// Balls added per draw, `S`.
    pub fn balance(&self) -> u64 {
        self.balance
    }
    /// Second eigenvalue `m = a - c = d - b`.
    pub fn m(&self) -> i64 {
        self.m
    }
    pub fn sigma(&self) -> &Q {
        &self.sigma
    }
    pub fn sigma_f64(&self) -> f64 {
        self.m as f64 / self.balance as f64
    }
    pub fn entries(&self) -> [u32; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn record(&self) -> SpecRecord {
        SpecRecord {
            a: self.a,
            b: self.b,
            c: self.c,
            d: self.d,
            balance: self.balance,
            m: self.m,
            sigma: fmt_exact(&self.sigma),
        }
    }

    /// Triangular (`bc = 0`) dominates the sigma-based classes.
    pub fn classify(&self) -> UrnClass {
        if self.b == 0 || self.c == 0 {
            return UrnClass::Triangular;
        }
        let half = q(1, 2);
        if self.sigma.is_one() {
            UrnClass::Original
        } else if self.sigma > half {
            UrnClass::Large
        } else if self.sigma == half {
            UrnClass::Critical
        } else {
            UrnClass::Small
        }
    }

    pub fn require_large(&self) -> Result<()> {
        match self.classify() {
            UrnClass::Large => Ok(()),
            class => Err(UrnError::NotLarge { class }),
        }
    }

    /// `None` when `b + c = 0`, where the eigenvalues coincide.
    pub fn spectral(&self) -> Option<SpectralData> {
        let bc = self.b as i64 + self.c as i64;
        if bc == 0 {
            return None;
        }
        let s = self.balance as i64;
        let scale = q(s, bc);
        Some(SpectralData {
            v1: (&scale * qi(self.c as i64), &scale * qi(self.b as i64)),
            v2: (scale.clone(), -scale),
            u1: LinearForm {
                x_coef: q(1, s),
                y_coef: q(1, s),
            },
            u2: LinearForm {
                x_coef: q(self.b as i64, s),
                y_coef: q(-(self.c as i64), s),
            },
        })
    }

    /// `(u1, u2)` evaluated exactly at a composition.
    pub fn project(&self, comp: Composition) -> (Q, Q) {
        let s = self.balance as i64;
        let x = comp.red as i64;
        let y = comp.black as i64;
        (q(x + y, s), q(self.b as i64 * x - self.c as i64 * y, s))
    }

    /// `u2` as a float, for simulation hot loops.
    #[inline]
    pub fn u2_f64(&self, red: u64, black: u64) -> f64 {
        (self.b as f64 * red as f64 - self.c as f64 * black as f64) / self.balance as f64
    }

    /// `(alpha + beta) / S`.
    pub fn kappa(&self, init: Composition) -> Q {
        q(init.total() as i64, self.balance as i64)
    }

    pub fn kappa_f64(&self, init: Composition) -> f64 {
        init.total() as f64 / self.balance as f64
    }

    /// `E[u2(U(n))] = u2(init) * prod_{k<n} (1 + sigma / (k + kappa))`, exactly.
    pub fn expected_u2_exact(&self, init: Composition, n: u64) -> Q {
        let (_, mut value) = self.project(init);
        let kappa = self.kappa(init);
        for k in 0..n {
            let factor = Q::one() + &self.sigma / (qi(k as i64) + &kappa);
            value *= factor;
        }
        value
    }

    /// `Gamma(kappa) / Gamma(kappa + sigma) * (b alpha - c beta) / S`.
    pub fn expected_w_dt(&self, init: Composition) -> Result<f64> {
        self.require_large()?;
        let kappa = self.kappa_f64(init);
        let (_, u2) = self.project(init);
        if u2.is_zero() {
            return Ok(0.0);
        }
        Ok(gamma_ratio(kappa, kappa + self.sigma_f64()) * to_f64(&u2))
    }

    /// `(b alpha - c beta) / S`.
    pub fn expected_w_ct(&self, init: Composition) -> Result<f64> {
        self.require_large()?;
        Ok(to_f64(&self.project(init).1))
    }

    /// Mean of the elementary pair `(X, Y)` in continuous time: `(b/S, -c/S)`.
    pub fn ct_elementary_means(&self) -> (Q, Q) {
        let s = self.balance as i64;
        (q(self.b as i64, s), q(-(self.c as i64), s))
    }
}

/// Checks `tR v1 = S v1`, `tR v2 = m v2` and the duality identities exactly.
pub fn spectral_identities_hold(spec: &UrnSpec, data: &SpectralData) -> bool {
    let (a, b, c, d) = (
        qi(spec.a as i64),
        qi(spec.b as i64),
        qi(spec.c as i64),
        qi(spec.d as i64),
    );
    let tr = |v: &(Q, Q)| (&a * &v.0 + &c * &v.1, &b * &v.0 + &d * &v.1);
    let s = qi(spec.balance as i64);
    let m = qi(spec.m);
    let r1 = tr(&data.v1);
    let r2 = tr(&data.v2);
    let eig1 = r1 == (&s * &data.v1.0, &s * &data.v1.1);
    let eig2 = r2 == (&m * &data.v2.0, &m * &data.v2.1);
    let one = Q::one();
    let zero = Q::zero();
    let dual = data.u1.apply(&data.v1.0, &data.v1.1) == one
        && data.u1.apply(&data.v2.0, &data.v2.1) == zero
        && data.u2.apply(&data.v1.0, &data.v1.1) == zero
        && data.u2.apply(&data.v2.0, &data.v2.1) == one;
    eig1 && eig2 && dual
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(a: u32, b: u32, c: u32, d: u32) -> UrnSpec {
        UrnSpec::new(a, b, c, d).unwrap()
    }

    #[test]
    fn build_examples() {
        let s = spec(6, 1, 2, 5);
        assert_eq!((s.balance(), s.m()), (7, 4));
        assert_eq!(s.sigma(), &q(4, 7));
        let s = spec(18, 2, 3, 17);
        assert_eq!((s.balance(), s.m()), (20, 15));
        assert_eq!(s.sigma(), &q(3, 4));
        match UrnSpec::new(6, 1, 2, 4) {
            Err(UrnError::Unbalanced { left: 7, right: 6 }) => {}
            other => panic!("expected unbalanced error, got {other:?}"),
        }
        let msg = UrnSpec::new(6, 1, 2, 4).unwrap_err().to_string();
        assert!(msg.contains("7") && msg.contains("6"));
    }

    #[test]
    fn classification() {
        assert_eq!(spec(6, 1, 2, 5).classify(), UrnClass::Large);
        assert_eq!(spec(1, 0, 0, 1).classify(), UrnClass::Triangular);
        assert_eq!(spec(1, 1, 1, 1).classify(), UrnClass::Small);
        assert_eq!(spec(3, 1, 1, 3).classify(), UrnClass::Critical);
        // sigma = 3/4 but c = 0
        assert_eq!(spec(4, 0, 1, 3).classify(), UrnClass::Triangular);
        assert_eq!(spec(0, 2, 2, 0).classify(), UrnClass::Small);
    }

    #[test]
    fn projections() {
        let s = spec(6, 1, 2, 5);
        assert_eq!(s.project(Composition::new(1, 0).unwrap()), (q(1, 7), q(1, 7)));
        assert_eq!(s.project(Composition::new(7, 1).unwrap()), (q(8, 7), q(5, 7)));
        assert_eq!(s.project(Composition::new(0, 1).unwrap()), (q(1, 7), q(-2, 7)));
        assert!(Composition::new(0, 0).is_err());
    }

    #[test]
    fn martingale_product() {
        let s = spec(6, 1, 2, 5);
        let init = Composition::new(1, 0).unwrap();
        assert_eq!(s.expected_u2_exact(init, 0), q(1, 7));
        assert_eq!(s.expected_u2_exact(init, 1), q(5, 7));
        assert_eq!(s.expected_u2_exact(init, 2), q(15, 14));
    }

    #[test]
    fn expectations() {
        let s = spec(6, 1, 2, 5);
        let w = s.expected_w_dt(Composition::new(1, 0).unwrap()).unwrap();
        assert!((w - 0.733_105_746_497_173).abs() < 1e-12);
        assert_eq!(s.expected_w_dt(Composition::new(2, 1).unwrap()).unwrap(), 0.0);
        let w01 = s.expected_w_dt(Composition::new(0, 1).unwrap()).unwrap();
        assert!((w01 + 2.0 * w).abs() < 1e-12);
        assert!((s.expected_w_ct(Composition::new(1, 0).unwrap()).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert!((s.expected_w_ct(Composition::new(0, 1).unwrap()).unwrap() + 2.0 / 7.0).abs() < 1e-15);
        assert_eq!(s.expected_w_ct(Composition::new(2, 1).unwrap()).unwrap(), 0.0);
        assert!(matches!(
            spec(1, 1, 1, 1).expected_w_dt(Composition::new(1, 0).unwrap()),
            Err(UrnError::NotLarge { class: UrnClass::Small })
        ));
    }

    #[test]
    fn connexion_of_expectations() {
        for s in [spec(6, 1, 2, 5), spec(18, 2, 3, 17)] {
            let init = Composition::new(1, 0).unwrap();
            let sf = s.balance() as f64;
            let dt = s.expected_w_dt(init).unwrap();
            let ct = s.expected_w_ct(init).unwrap();
            let ratio = gamma_ratio(1.0 / sf, (1.0 + s.m() as f64) / sf);
            assert!(((dt - ct * ratio) / dt).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn spectral_data_is_exact(a in 0u32..30, b in 0u32..30, c in 0u32..30) {
            prop_assume!(a + b >= c && a + b > 0);
            let d = a + b - c;
            let s = spec(a, b, c, d);
            match s.spectral() {
                Some(data) => prop_assert!(spectral_identities_hold(&s, &data)),
                None => prop_assert!(b == 0 && c == 0),
            }
        }

        #[test]
        fn product_ratio_is_exact(n in 0u64..40, red in 0u64..6, black in 0u64..6) {
            prop_assume!(red + black > 0);
            let s = spec(6, 1, 2, 5);
            let init = Composition::new(red, black).unwrap();
            let now = s.expected_u2_exact(init, n);
            let next = s.expected_u2_exact(init, n + 1);
            if !now.is_zero() {
                let want = Q::one() + s.sigma() / (qi(n as i64) + s.kappa(init));
                prop_assert_eq!(next / now, want);
            } else {
                prop_assert!(next.is_zero());
            }
        }
    }
}
