//! Empirical characteristic function, support and kernel density diagnostics.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Result, UrnError};
use crate::exec::map_indexed;
use crate::sample::SampleSet;

pub const MIN_CF_SAMPLES: usize = 10_000;

#[derive(Clone, Debug, Serialize)]
pub struct CFReport {
    pub t: Vec<f64>,
    pub modulus: Vec<f64>,
    pub samples: usize,
    /// `4 / sqrt(N)`
    pub noise_floor: f64,
}

impl CFReport {
    /// Modulus at the grid point closest to `t`.
    pub fn modulus_at(&self, t: f64) -> f64 {
        let i = self
            .t
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.modulus[i]
    }

    /// Largest pointwise gap to another report on the same grid.
    pub fn max_gap(&self, other: &CFReport) -> Result<f64> {
        if self.t != other.t {
            return Err(UrnError::InvalidArgument("reports use different grids".into()));
        }
        Ok(self
            .modulus
            .iter()
            .zip(&other.modulus)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "modulus", "noise_floor"])?;
        for (t, m) in self.t.iter().zip(&self.modulus) {
            w.write_record([format!("{t}"), format!("{m:e}"), format!("{:e}", self.noise_floor)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `0, step, 2 step, ..., t_max`.
pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    let step = t_max / (points.max(2) - 1) as f64;
    (0..points.max(2)).map(|i| i as f64 * step).collect()
}

/// `|N^{-1} sum exp(i t X_j)|` on each grid point.
pub fn empirical_cf(samples: &[f64], grid: &[f64]) -> Result<CFReport> {
    if samples.len() < MIN_CF_SAMPLES {
        return Err(UrnError::InvalidArgument(format!(
            "characteristic function needs at least {MIN_CF_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|t| *t < 0.0) {
        return Err(UrnError::InvalidArgument("t-grid must be nonnegative and strictly increasing".into()));
    }
    let n = samples.len() as f64;
    let modulus = map_indexed(grid.len(), |i| {
        let t = grid[i];
        let (mut re, mut im) = (0.0, 0.0);
        for x in samples {
            let (s, c) = (t * x).sin_cos();
            re += c;
            im += s;
        }
        ((re / n).hypot(im / n)).min(1.0)
    });
    Ok(CFReport {
        t: grid.to_vec(),
        modulus,
        samples: samples.len(),
        noise_floor: 4.0 / n.sqrt(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupportSpan {
    pub min: f64,
    pub max: f64,
    pub fraction_negative: f64,
    pub fraction_positive: f64,
    pub degenerate: bool,
}

pub fn support_span(samples: &SampleSet) -> Result<SupportSpan> {
    let v = samples.values();
    if v.is_empty() {
        return Err(UrnError::EmptySample);
    }
    let n = v.len() as f64;
    let (min, max) = (v[0], v[v.len() - 1]);
    Ok(SupportSpan {
        min,
        max,
        fraction_negative: v.iter().filter(|x| **x < 0.0).count() as f64 / n,
        fraction_positive: v.iter().filter(|x| **x > 0.0).count() as f64 / n,
        degenerate: min == max,
    })
}

/// `0.9 min(sd, IQR / 1.34) N^{-1/5}`.
pub fn silverman_bandwidth(samples: &SampleSet) -> Result<f64> {
    let v = samples.values();
    if v.len() < 2 {
        return Err(UrnError::EmptySample);
    }
    let quantile = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    let iqr = quantile(0.75) - quantile(0.25);
    let sd = samples.std_dev();
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (v.len() as f64).powf(-0.2);
    if h > 0.0 {
        Ok(h)
    } else {
        Err(UrnError::InvalidBandwidth(h))
    }
}

/// `points` equally spaced values covering mean +/- `width` standard deviations.
pub fn density_grid(samples: &SampleSet, width: f64, points: usize) -> Vec<f64> {
    let (mu, sd) = (samples.mean(), samples.std_dev());
    let (lo, hi) = (mu - width * sd, mu + width * sd);
    let step = (hi - lo) / (points.max(2) - 1) as f64;
    (0..points.max(2)).map(|i| lo + i as f64 * step).collect()
}

/// Gaussian kernel estimate; samples beyond eight bandwidths are skipped.
pub fn kde_density(samples: &SampleSet, bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if bandwidth <= 0.0 || !bandwidth.is_finite() {
        return Err(UrnError::InvalidBandwidth(bandwidth));
    }
    let v = samples.values();
    if v.is_empty() {
        return Err(UrnError::EmptySample);
    }
    let norm = 1.0 / (v.len() as f64 * bandwidth * (2.0 * PI).sqrt());
    let reach = 8.0 * bandwidth;
    Ok(map_indexed(grid.len(), |i| {
        let x = grid[i];
        let lo = v.partition_point(|s| *s < x - reach);
        let hi = v.partition_point(|s| *s <= x + reach);
        v[lo..hi]
            .iter()
            .map(|s| {
                let z = (x - s) / bandwidth;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm
    }))
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| (g[1] - g[0]) * (v[0] + v[1]) / 2.0)
        .sum()
}

pub fn write_density_csv<W: Write>(grid: &[f64], density: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "density"])?;
    for (x, d) in grid.iter().zip(density) {
        w.write_record([format!("{x:e}"), format!("{d:e}")])?;
    }
    w.flush()?;
    Ok(())
}
