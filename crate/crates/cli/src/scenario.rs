//! Scenario files: a TOML description of one simulation setup.
//!
//! Quantities are scaled integers. `currency_scale` and `bandwidth_scale`
//! are mandatory and must match the engine's fixed scales (6 and 3), so a
//! capacity of 50 Mbps is written `capacity = 50000`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tierbid_core::auction::EngineConfig;
use tierbid_core::coop::WeightPolicy;
use tierbid_core::multicast::DEFAULT_THRESHOLD;
use tierbid_core::sim::{Mode, TargetSpec, WorkloadSpec};
use tierbid_core::units::{BANDWIDTH_SCALE, CURRENCY_SCALE};
use tierbid_core::{NetworkNode, ServiceCatalog, ServiceClass, Topology, WinnerRule};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Auction,
    Multicast,
    Cooperative,
}

impl std::str::FromStr for ModeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auction" => Ok(ModeKind::Auction),
            "multicast" => Ok(ModeKind::Multicast),
            "cooperative" => Ok(ModeKind::Cooperative),
            other => Err(format!("unknown mode `{other}` (auction, multicast, cooperative)")),
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default)]
    pub winner_rule: WinnerRule,
    /// Resolve same-tier networks concurrently.
    #[serde(default = "yes")]
    pub parallel: bool,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection { winner_rule: WinnerRule::default(), parallel: true }
    }
}

fn default_thresholds() -> Vec<usize> {
    vec![DEFAULT_THRESHOLD]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MulticastSection {
    /// `n` per tier, tier 1 first; missing tiers reuse the last value.
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<usize>,
}

impl Default for MulticastSection {
    fn default() -> Self {
        MulticastSection { thresholds: default_thresholds() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    pub replications: usize,
    pub target: TargetSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub currency_scale: u32,
    pub bandwidth_scale: u32,
    #[serde(default)]
    pub seed: u64,
    pub mode: ModeKind,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub multicast: MulticastSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cooperative: Option<WeightPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    /// Present in run manifests only; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
    pub networks: Vec<NetworkNode>,
    pub services: Vec<ServiceClass>,
    pub workload: WorkloadSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestInfo {
    pub config_hash: String,
    pub replications: usize,
    pub outputs: Vec<String>,
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub topology: Topology,
    pub catalog: ServiceCatalog,
    pub workload: WorkloadSpec,
    pub mode: Mode,
    pub config: EngineConfig,
}

/// Largest seed a TOML file can hold.
pub const MAX_SEED: u64 = i64::MAX as u64;

pub fn check_scales(currency: u32, bandwidth: u32) -> CliResult<()> {
    if currency != CURRENCY_SCALE {
        return Err(CliError::Validation(format!("currency_scale must be {CURRENCY_SCALE}, found {currency}")));
    }
    if bandwidth != BANDWIDTH_SCALE {
        return Err(CliError::Validation(format!("bandwidth_scale must be {BANDWIDTH_SCALE}, found {bandwidth}")));
    }
    Ok(())
}

pub fn build_network(networks: &[NetworkNode], services: &[ServiceClass]) -> CliResult<(Topology, ServiceCatalog)> {
    let topology = Topology::build(networks.to_vec()).map_err(|e| CliError::section("networks", e))?;
    let catalog = ServiceCatalog::new(services.to_vec()).map_err(|e| CliError::section("services", e))?;
    Ok((topology, catalog))
}

impl ScenarioSpec {
    pub fn parse(text: &str) -> CliResult<ScenarioSpec> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("scenario parse error: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<ScenarioSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }

    /// The experiment proper: no output location or manifest.
    pub fn canonical(&self) -> ScenarioSpec {
        ScenarioSpec { output: None, manifest: None, ..self.clone() }
    }

    /// SHA-256 of the canonical emission, hex encoded.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().emit().as_bytes()))
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        check_scales(self.currency_scale, self.bandwidth_scale)?;
        if self.seed > MAX_SEED {
            return Err(CliError::Validation(format!("seed must be at most {MAX_SEED}, found {}", self.seed)));
        }
        let (topology, catalog) = build_network(&self.networks, &self.services)?;
        let workload = WorkloadSpec { seed: self.seed, ..self.workload.clone() };
        workload.validate(&topology, &catalog).map_err(|e| CliError::section("workload", e))?;
        let mode = match self.mode {
            ModeKind::Auction => Mode::Auction,
            ModeKind::Multicast => {
                let th = &self.multicast.thresholds;
                if th.is_empty() || th.len() > topology.depth() {
                    return Err(CliError::section(
                        "multicast",
                        format!("need between 1 and {} thresholds, found {}", topology.depth(), th.len()),
                    ));
                }
                if th.contains(&0) {
                    return Err(CliError::section("multicast", "thresholds must be at least 1"));
                }
                Mode::Multicast { thresholds: th.clone() }
            }
            ModeKind::Cooperative => {
                let policy = self
                    .cooperative
                    .clone()
                    .ok_or_else(|| CliError::section("cooperative", "cooperative mode needs a policy"))?;
                policy.validate(&catalog).map_err(|e| CliError::section("cooperative", e))?;
                Mode::Cooperative { policy }
            }
        };
        if let Some(s) = &self.strategy {
            if s.replications == 0 {
                return Err(CliError::section("strategy", "replications must be at least 1"));
            }
            if catalog.get(&s.target.service).is_none() {
                return Err(CliError::section("strategy", format!("unknown service `{}`", s.target.service)));
            }
            if !workload.value_classes.contains_key(&s.target.class) {
                return Err(CliError::section("strategy", format!("unknown value class `{}`", s.target.class)));
            }
            if let Some(n) = &s.target.network {
                if topology.index_of(n).is_none() {
                    return Err(CliError::section("strategy", format!("unknown network `{n}`")));
                }
            }
        }
        let config = EngineConfig { winner_rule: self.engine.winner_rule, parallel: self.engine.parallel };
        Ok(Resolved { topology, catalog, workload, mode, config })
    }
}
