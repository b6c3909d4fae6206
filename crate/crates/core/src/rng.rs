//! Counter-based seeding and the small-shape Gamma sampler.
//!
//! Work item `index` of a computation tagged `domain` draws from the ChaCha8
//! stream `index` under a key derived from `(seed, domain)`. Streams are
//! addressed, not advanced, so the result of item `index` never depends on
//! scheduling or worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Stream domains. Distinct purposes inside one run never share a stream.
pub mod domain {
    pub const DT_CHAIN: u64 = 0x01;
    pub const CT_CHAIN: u64 = 0x02;
    pub const CONNEXION_XI: u64 = 0x03;
    pub const FIXPOINT_X: u64 = 0x10;
    pub const FIXPOINT_Y: u64 = 0x11;
    pub const TRANSFER: u64 = 0x12;
    pub const FIXPOINT_INIT: u64 = 0x13;
    pub const DIRICHLET: u64 = 0x20;
    pub const DIAGONAL_URN: u64 = 0x21;
    pub const DECOMPOSITION: u64 = 0x30;
    pub const RESAMPLE: u64 = 0x40;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for work item `index` of computation `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.rotate_left(32);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform integer in `[0, bound)` by multiply-shift; bias is below `bound / 2^64`.
#[inline]
pub fn below<R: RngCore>(rng: &mut R, bound: u64) -> u64 {
    ((rng.next_u64() as u128 * bound as u128) >> 64) as u64
}

/// Uniform on the open interval `(0, 1)`.
#[inline]
pub fn open01<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn std_normal<R: RngCore>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma(shape, 1) variates returned as logarithms.
///
/// Shapes below one use `G(a) = G(a + 1) * U^(1/a)` with the power taken
/// in log space, so shape 1/20 never underflows to zero.
#[derive(Clone, Debug)]
pub struct LogGamma {
    base: Gamma<f64>,
    inv_shape: Option<f64>,
}

impl LogGamma {
    pub fn new(shape: f64) -> Self {
        assert!(shape > 0.0 && shape.is_finite(), "gamma shape must be positive");
        let (base_shape, inv_shape) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        Self {
            base: Gamma::new(base_shape, 1.0).expect("valid shape"),
            inv_shape,
        }
    }

    #[inline]
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> f64 {
        let g: f64 = self.base.sample(rng);
        match self.inv_shape {
            Some(inv) => g.ln() + open01(rng).ln() * inv,
            None => g.ln(),
        }
    }
}

/// Fill `out` with `ln` of a Dirichlet draw built from normalized Gamma variates.
pub fn log_dirichlet<R: RngCore>(samplers: &[LogGamma], rng: &mut R, out: &mut [f64]) {
    debug_assert_eq!(samplers.len(), out.len());
    let mut max = f64::NEG_INFINITY;
    for (slot, s) in out.iter_mut().zip(samplers) {
        *slot = s.sample(rng);
        max = max.max(*slot);
    }
    let lse = max + out.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    for slot in out.iter_mut() {
        *slot -= lse;
    }
}
