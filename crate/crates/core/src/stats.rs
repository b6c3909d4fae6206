//! Sample statistics and one-dimensional distances.

use serde::Serialize;

use crate::error::{Result, UrnError};
use crate::rng::{below, domain, stream};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Raw moment `E[X^p]` with the standard error of its estimate.
pub fn raw_moment(xs: &[f64], p: i32) -> (f64, f64) {
    let powers: Vec<f64> = xs.iter().map(|x| x.powi(p)).collect();
    let m = mean(&powers);
    (m, (variance(&powers) / xs.len() as f64).sqrt())
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Kolmogorov-Smirnov statistic of sorted `values` against a CDF.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if values.is_empty() {
        return Err(UrnError::EmptySample);
    }
    debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
    let n = values.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov statistic of sorted inputs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(UrnError::EmptySample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct W2 {
    pub distance: f64,
    /// `(from, to)` when the smaller set was resampled with replacement.
    pub resampled: Option<(usize, usize)>,
}

/// Order-statistic pairing of two sorted samples of equal size.
pub fn w2_sorted(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (ss / a.len() as f64).sqrt()
}

/// Wasserstein-2 distance between the empirical measures of two samples.
/// Unequal sizes resample the smaller one up to the larger size.
pub fn two_sample_w2(a: &[f64], b: &[f64], seed: u64) -> Result<W2> {
    if a.is_empty() || b.is_empty() {
        return Err(UrnError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let mut resampled = None;
    if a.len() != b.len() {
        let (small, target) = if a.len() < b.len() {
            (&mut a, b.len())
        } else {
            (&mut b, a.len())
        };
        let mut rng = stream(seed, domain::RESAMPLE, 0);
        let from = small.len();
        let draws: Vec<f64> = (0..target)
            .map(|_| small[below(&mut rng, from as u64) as usize])
            .collect();
        *small = draws;
        resampled = Some((from, target));
    }
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(W2 {
        distance: w2_sorted(&a, &b),
        resampled,
    })
}

/// `sqrt((var_a + var_b) / 2)`.
pub fn pooled_std(a: &[f64], b: &[f64]) -> f64 {
    ((variance(a) + variance(b)) / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn w2_examples() {
        let a = [0.0, 1.0];
        assert_eq!(two_sample_w2(&a, &a, 0).unwrap().distance, 0.0);
        assert_eq!(two_sample_w2(&a, &[1.0, 2.0], 0).unwrap().distance, 1.0);
        assert_eq!(two_sample_w2(&[1.0, 0.0], &[2.0, 1.0], 0).unwrap().distance, 1.0);
        assert!(two_sample_w2(&[], &a, 0).is_err());
        let r = two_sample_w2(&[0.0], &[0.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(r.resampled, Some((1, 3)));
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn ks_examples() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.0005).abs() < 1e-12);
        assert!(ks_distance(&[], |x| x).is_err());
        assert_eq!(ks_two_sample(&xs, &xs).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn w2_of_shift_is_the_shift(xs in prop::collection::vec(-100f64..100.0, 1..60), c in -10f64..10.0) {
            let ys: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let d = two_sample_w2(&xs, &ys, 0).unwrap().distance;
            prop_assert!((d - c.abs()).abs() < 1e-9);
        }

        #[test]
        fn w2_is_symmetric_and_nonnegative(
            xs in prop::collection::vec(-50f64..50.0, 5),
            ys in prop::collection::vec(-50f64..50.0, 5),
        ) {
            let d1 = two_sample_w2(&xs, &ys, 0).unwrap().distance;
            let d2 = two_sample_w2(&ys, &xs, 0).unwrap().distance;
            prop_assert!(d1 >= 0.0);
            prop_assert!((d1 - d2).abs() < 1e-12);
        }
    }
}
