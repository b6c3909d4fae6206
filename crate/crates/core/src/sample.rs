use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::urn::{Composition, UrnSpec};

/// Provenance attached to every sample set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub spec: Option<[u32; 4]>,
    pub init: Option<Composition>,
    pub estimator: String,
    pub horizon: Option<u64>,
    pub count: usize,
    pub seed: Option<u64>,
}

impl SampleMeta {
    pub fn new(spec: &UrnSpec, init: Option<Composition>, estimator: &str) -> Self {
        Self {
            spec: Some(spec.entries()),
            init,
            estimator: estimator.to_string(),
            horizon: None,
            count: 0,
            seed: None,
        }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Sorted real draws with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn new(mut values: Vec<f64>, mut meta: SampleMeta) -> Self {
        values.sort_by(f64::total_cmp);
        meta.count = values.len();
        Self { values, meta }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        crate::stats::mean(&self.values)
    }

    pub fn std_dev(&self) -> f64 {
        crate::stats::variance(&self.values).sqrt()
    }

    /// Standard error of the sample mean.
    pub fn std_err(&self) -> f64 {
        self.std_dev() / (self.len() as f64).sqrt()
    }

    /// One value per line after a `#`-prefixed JSON metadata line and a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", serde_json::to_string(&self.meta)?)?;
        writeln!(out, "value")?;
        for v in &self.values {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let meta_line = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| UrnError::InvalidArgument("missing metadata line".into()))?;
        let meta: SampleMeta = serde_json::from_str(meta_line)?;
        if lines.next() != Some("value") {
            return Err(UrnError::InvalidArgument("missing value header".into()));
        }
        let values = lines
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| UrnError::InvalidArgument(format!("bad value {l:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(values, meta))
    }

    /// Writes `<path>` as CSV and `<path>.json` as the metadata sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".json");
        std::fs::write(sidecar, serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }
}
