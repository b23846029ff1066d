//! Run configuration: an optional JSON file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::output::Format;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: Option<Vec<u32>>,
    pub base: Option<Vec<f64>>,
    pub covector: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub t: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub horizon: Option<f64>,
    pub suite: Option<Vec<u8>>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Multi-index, comma separated (e.g. 1,2); a single value for `trig`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub alpha: Option<Vec<u32>>,
    /// Base point, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub base: Option<Vec<f64>>,
    /// Initial covector (Cartesian); normalized to H = 1/2.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "phi")]
    pub covector: Option<Vec<f64>>,
    /// Initial covector in spherical coordinates.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub phi: Option<Vec<f64>>,
    /// Exponents (a, b) of sin_{a,b} for `trig`.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub t: Option<f64>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Conjugate-time search horizon in half periods.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Verification suites to run (1-9), comma separated; all by default.
    #[arg(long, global = true, value_delimiter = ',')]
    pub suite: Option<Vec<u8>>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with any of the fields above; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl Flags {
    pub fn resolve(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! overlay {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f; } )* };
        }
        // a covector given on the command line replaces one from the file,
        // in either coordinate system
        if self.covector.is_some() {
            c.phi = None;
        }
        if self.phi.is_some() {
            c.covector = None;
        }
        overlay!(alpha, base, covector, phi, a, b, t, t_max, samples, horizon, suite, format, out, seed);
        Ok(c)
    }
}

impl RunConfig {
    pub fn alpha(&self) -> Result<&[u32]> {
        match &self.alpha {
            Some(a) if !a.is_empty() => Ok(a),
            _ => bail!("--alpha is required"),
        }
    }

    pub fn alpha3(&self) -> Result<(u32, u32)> {
        match self.alpha()? {
            &[a, b] => Ok((a, b)),
            other => bail!("this command needs n = 2 (a 3D space), got alpha = {other:?}"),
        }
    }

    pub fn base(&self) -> Result<&[f64]> {
        self.base.as_deref().context("--base is required")
    }

    pub fn samples(&self, default: usize) -> Result<usize> {
        let s = self.samples.unwrap_or(default);
        if s < 2 {
            bail!("--samples must be at least 2");
        }
        Ok(s)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(grushin::verify::DEFAULT_SEED)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}
