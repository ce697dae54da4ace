//! Run configurations for the command-line tool, config hashing, and output
//! sidecars.
//!
//! Each command reads one JSON document. Unknown keys are rejected. The hash
//! of the effective configuration (after flag overrides) is the SHA-256 of its
//! canonical JSON form, with object keys sorted.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::DgpSpec;
use crate::error::{Error, Result};
use crate::harness::{Scale, Variant};
use crate::inference::SamplerConfig;
use crate::model::Structure;

/// Seed and scale plumbing shared by all command configs.
pub trait RunConfig: Serialize + DeserializeOwned {
    fn seed(&self) -> u64;
    fn set_seed(&mut self, seed: u64);
    fn set_scale(&mut self, _scale: Scale) {}
    fn validate(&self) -> Result<()> {
        Ok(())
    }
}

fn default_seed() -> u64 {
    1
}
fn default_step() -> f64 {
    0.01
}
fn default_band_points() -> usize {
    101
}
fn default_ns() -> Vec<usize> {
    vec![2, 5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_dgp")]
    pub dgp: DgpSpec,
}

fn default_dgp() -> DgpSpec {
    DgpSpec::baseline(default_seed())
}

impl RunConfig for SimulateConfig {
    fn seed(&self) -> u64 {
        self.dgp.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.dgp.seed = seed;
    }
    fn validate(&self) -> Result<()> {
        self.dgp.structure().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    /// Bid CSV as written by `simulate`.
    pub data: PathBuf,
    #[serde(default)]
    pub scale: Scale,
    /// Full sampler settings; when absent the scale defaults apply.
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_step")]
    pub grid_step: f64,
    #[serde(default = "default_band_points")]
    pub band_points: usize,
}

impl EstimateConfig {
    pub fn sampler_config(&self) -> SamplerConfig {
        let base = self.sampler.clone().unwrap_or_else(|| self.scale.sampler());
        SamplerConfig { seed: self.seed, ..base }
    }
}

impl RunConfig for EstimateConfig {
    fn seed(&self) -> u64 {
        self.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
    fn set_scale(&mut self, scale: Scale) {
        self.scale = scale;
    }
    fn validate(&self) -> Result<()> {
        check_grid(self.grid_step, self.band_points)?;
        self.sampler_config().validate()
    }
}

fn check_grid(step: f64, points: usize) -> Result<()> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::Config(format!("grid_step {step} outside (0, 1)")));
    }
    if points < 2 {
        return Err(Error::Config("band_points must be at least 2".into()));
    }
    Ok(())
}

/// Bid-law file for one bidder count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawFile {
    pub n: usize,
    pub path: PathBuf,
}

/// Either a structure whose exact bid laws are generated, or two bid-law files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyConfig {
    #[serde(default)]
    pub structure: Option<Structure>,
    #[serde(default)]
    pub laws: Option<Vec<LawFile>>,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_levels() -> usize {
    2001
}

impl RunConfig for IdentifyConfig {
    fn seed(&self) -> u64 {
        self.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
    fn validate(&self) -> Result<()> {
        match (&self.structure, &self.laws) {
            (Some(s), None) => {
                s.validate()?;
                if self.ns.len() != 2 || self.ns[0] == self.ns[1] || self.ns.iter().any(|n| *n < 2) {
                    return Err(Error::Config("ns must hold two distinct bidder counts >= 2".into()));
                }
                Ok(())
            }
            (None, Some(l)) if l.len() == 2 && l[0].n != l[1].n => Ok(()),
            (None, Some(_)) => Err(Error::Config("laws must list two files with distinct n".into())),
            _ => Err(Error::Config("give exactly one of `structure` or `laws`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecideConfig {
    /// Chain CSV as written by `estimate`.
    pub chain: PathBuf,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "default_step")]
    pub grid_step: f64,
    #[serde(default = "default_band_points")]
    pub band_points: usize,
    /// When given, true revenue curves and revenue losses are reported too.
    #[serde(default)]
    pub truth: Option<Structure>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl RunConfig for DecideConfig {
    fn seed(&self) -> u64 {
        self.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
    fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.ns.iter().any(|n| *n < 2) {
            return Err(Error::Config("ns must be nonempty with every n >= 2".into()));
        }
        if let Some(s) = &self.truth {
            s.validate()?;
        }
        check_grid(self.grid_step, self.band_points)
    }
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}
fn default_totals() -> Vec<usize> {
    vec![600, 1200, 2400]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "default_totals")]
    pub totals: Vec<usize>,
    /// Defaults to 50 at desk scale and 300 at paper scale.
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl McConfig {
    pub fn specs(&self) -> Vec<crate::harness::ExperimentSpec> {
        let reps = self.replications.unwrap_or_else(|| self.scale.replications());
        let mut specs = crate::harness::experiment_grid(&self.variants, &self.ns, &self.totals, reps, self.seed, self.scale);
        for s in &mut specs {
            s.sampler = self.sampler.clone();
        }
        specs
    }
}

impl RunConfig for McConfig {
    fn seed(&self) -> u64 {
        self.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
    fn set_scale(&mut self, scale: Scale) {
        self.scale = scale;
    }
    fn validate(&self) -> Result<()> {
        if self.variants.is_empty() || self.totals.is_empty() {
            return Err(Error::Config("variants and totals must be nonempty".into()));
        }
        self.specs().iter().try_for_each(|s| s.validate())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Data-generating process whose true curves are tabulated.
    #[serde(default)]
    pub dgp: Option<DgpSpec>,
    /// Observed bid CSV.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Chain CSV as written by `estimate`.
    #[serde(default)]
    pub chain: Option<PathBuf>,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "default_step")]
    pub grid_step: f64,
    #[serde(default = "default_band_points")]
    pub band_points: usize,
    /// Simulated datasets per predictive scatter.
    #[serde(default = "default_reps")]
    pub predictive_reps: usize,
    /// Sampler `k` used for prior predictive draws.
    #[serde(default = "default_k")]
    pub prior_k: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_reps() -> usize {
    100
}
fn default_k() -> usize {
    6
}

impl RunConfig for ReportConfig {
    fn seed(&self) -> u64 {
        self.seed
    }
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
    fn validate(&self) -> Result<()> {
        if let Some(d) = &self.dgp {
            d.structure()?;
        }
        if self.predictive_reps == 0 {
            return Err(Error::Config("predictive_reps must be at least 1".into()));
        }
        check_grid(self.grid_step, self.band_points)
    }
}

/// SHA-256 of the canonical (key-sorted, compact) JSON form.
pub fn config_hash<T: Serialize>(cfg: &T) -> Result<String> {
    let canonical = serde_json::to_string(&serde_json::to_value(cfg)?)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Prefixes an I/O error with the path involved.
pub fn with_path(e: std::io::Error, p: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
}

/// Parses a config document; a missing path means `{}`.
pub fn load_config<T: RunConfig>(path: Option<&Path>) -> Result<T> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| with_path(e, p))?,
        None => "{}".to_string(),
    };
    serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
}

/// Provenance written next to every output file as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMeta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub file: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl OutputMeta {
    pub fn new<T: RunConfig>(command: &str, cfg: &T) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            file: String::new(),
            config_hash: config_hash(cfg)?,
            seed: cfg.seed(),
            config: serde_json::to_value(cfg)?,
        })
    }
}

/// Writes output files under one directory, each with a meta sidecar.
pub struct OutputDir {
    root: PathBuf,
    meta: OutputMeta,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path, meta: OutputMeta) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), meta, written: Vec::new() })
    }

    pub fn meta(&self) -> &OutputMeta {
        &self.meta
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `name` through `fill`, then its sidecar.
    pub fn write<F: FnOnce(&mut Vec<u8>) -> Result<()>>(&mut self, name: &str, fill: F) -> Result<PathBuf> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.root.join(name);
        fs::write(&path, &buf)?;
        let meta = OutputMeta { file: name.into(), ..self.meta.clone() };
        let mut side = serde_json::to_vec_pretty(&meta)?;
        side.push(b'\n');
        fs::write(self.root.join(format!("{name}.meta.json")), side)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }
}
