//! Run configuration: one JSON file, overridden field-for-field by flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eightfold::pipeline::{FamilyKind, StudyOptions};
use eightfold::seeds::{DEFAULT_MODES, DEFAULT_SAMPLES};
use eightfold::SolveOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// lj-high, lj-low, cy, homogeneous; `find` also accepts newtonian-eight.
    pub family: String,
    pub modes: usize,
    pub samples: usize,
    pub output: PathBuf,
    pub solve: SolveOptions,
    pub find: FindConfig,
    pub scan: ScanConfig,
    /// Three-fold search bracket; `None` uses the family default.
    pub bracket: Option<(f64, f64)>,
    /// Full study settings; `None` uses the family defaults at `modes`, `samples`.
    pub study: Option<StudyOptions>,
    pub fold: FoldConfig,
    pub surface: SurfaceConfig,
    pub merge: MergeConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FindConfig {
    pub period: Option<f64>,
    /// Exponent of `u = -1/(a r^a)` for newtonian-eight.
    pub exponent: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldConfig {
    /// Branch CSV to analyze instead of tracing a branch.
    pub branch: Option<PathBuf>,
    pub a3_integral: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub a3: Option<f64>,
    pub a4: Option<f64>,
    pub kappa: Option<f64>,
    /// `kappa` as a multiple of the model's fold eigenvalue.
    pub kappa_rel: Option<f64>,
    /// Half-width of the grid; `None` uses 1.5 r0.
    pub extent: Option<f64>,
    pub resolution: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeConfig {
    pub period: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: "lj-high".into(),
            modes: DEFAULT_MODES,
            samples: DEFAULT_SAMPLES,
            output: PathBuf::from("out"),
            solve: SolveOptions::default(),
            find: FindConfig::default(),
            scan: ScanConfig::default(),
            bracket: None,
            study: None,
            fold: FoldConfig::default(),
            surface: SurfaceConfig::default(),
            merge: MergeConfig::default(),
        }
    }
}

impl Default for FindConfig {
    fn default() -> Self {
        FindConfig { period: None, exponent: 1.0 }
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { from: None, to: None, steps: 20 }
    }
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig { a3: None, a4: None, kappa: None, kappa_rel: None, extent: None, resolution: 101 }
    }
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig { period: 16.0 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form. The
    /// output directory is left out: where files go does not change them.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { output: PathBuf::new(), ..self.clone() };
        let text = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        format!("{digest:x}")[..16].to_string()
    }

    pub fn kind(&self) -> eightfold::Result<FamilyKind> {
        FamilyKind::parse(&self.family)
    }

    /// Study settings for the configured family.
    pub fn study_options(&self) -> eightfold::Result<StudyOptions> {
        let kind = self.kind()?;
        let mut o = self.study.clone().unwrap_or_else(|| {
            let mut d = StudyOptions::for_family(kind);
            d.modes = self.modes;
            d.samples = self.samples;
            d
        });
        if let Some(b) = self.bracket {
            o.bracket = b;
        }
        Ok(o)
    }
}
