//! Scenario documents: one JSON file describing a graph, an initial formation,
//! a controller, integration settings and the certificates to compute.
//!
//! ```json
//! {
//!   "name": "square",
//!   "graph": {"n": 4, "edges": [[1, 2], [2, 3], [3, 4], [4, 1]]},
//!   "formation": {"d": 2, "positions": [[0, 0], [1, 0], [1, 1], [0, 1]]},
//!   "controller": {"family": "consensus", "topology": "directed"},
//!   "sim": {"dt": 0.001, "t_max": 3},
//!   "analysis": ["conjecture"]
//! }
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerFamily, ControllerKind, Topology};
use crate::error::{Error, Result};
use crate::geometry::{Formation, FormationSpec, TargetSpec};
use crate::graph::{DirectedGraph, GraphSpec};
use crate::sim::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub family: ControllerFamily,
    pub topology: Topology,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
}

/// Certificates that can be requested in `analysis` or with `--cert`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertName {
    /// `ν` estimate and the finite-time bound it implies.
    Nu,
    Conjecture,
    Spectrum,
    Persistence,
    Rigidity,
}

impl CertName {
    pub const ALL: [CertName; 5] = [
        CertName::Nu,
        CertName::Conjecture,
        CertName::Spectrum,
        CertName::Persistence,
        CertName::Rigidity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CertName::Nu => "nu",
            CertName::Conjecture => "conjecture",
            CertName::Spectrum => "spectrum",
            CertName::Persistence => "persistence",
            CertName::Rigidity => "rigidity",
        }
    }

    pub fn randomized(self) -> bool {
        matches!(self, CertName::Nu | CertName::Persistence)
    }
}

impl fmt::Display for CertName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CertName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CertName::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::Scenario(format!("unknown certificate `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File name for the trajectory, relative to the output directory.
    #[serde(default)]
    pub trajectory: Option<String>,
    /// File name for the certificate report, relative to the output directory.
    #[serde(default)]
    pub report: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    /// Free text; bundled scenarios say where their coordinates come from.
    #[serde(default)]
    pub description: Option<String>,
    pub graph: GraphSpec,
    pub formation: FormationSpec,
    pub controller: ControllerSpec,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub analysis: Vec<CertName>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A validated scenario with its graph, initial formation and controller built.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub name: String,
    pub graph: Arc<DirectedGraph>,
    pub formation: Formation,
    pub kind: ControllerKind,
    /// Target positions when the target was given as a formation.
    pub target_formation: Option<Formation>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("parse error: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Builds and cross-checks every fragment.
    pub fn load(self, fallback_name: &str) -> Result<LoadedScenario> {
        let ctx = |field: &'static str| move |e: Error| Error::Scenario(format!("`{field}`: {e}"));
        self.sim.validate()?;
        let graph = Arc::new(self.graph.build().map_err(ctx("graph"))?);
        let formation = self.formation.build(graph.clone()).map_err(ctx("formation"))?;
        let d = formation.d();

        let c = &self.controller;
        let (target, target_formation) = match (&c.family, &c.target) {
            (ControllerFamily::Consensus, Some(_)) => {
                return Err(Error::Scenario("`controller.target` is only allowed for formation control".into()))
            }
            (ControllerFamily::Consensus, None) => (None, None),
            (ControllerFamily::Formation, None) => {
                return Err(Error::Scenario("`controller.target` is required for formation control".into()))
            }
            (ControllerFamily::Formation, Some(spec)) => {
                let t = spec.build(&graph, d).map_err(ctx("controller.target"))?;
                t.covers(&graph, c.topology == Topology::Undirected)
                    .map_err(ctx("controller.target"))?;
                let tf = match spec {
                    TargetSpec::FromPositions { targets_from } => Some(
                        FormationSpec { d, positions: targets_from.clone() }
                            .build(graph.clone())
                            .map_err(ctx("controller.target"))?,
                    ),
                    TargetSpec::Explicit { .. } => None,
                };
                (Some(t), tf)
            }
        };
        let kind = ControllerKind::new(c.family, c.topology, target)?;

        if self.seed.is_none() {
            if let Some(cert) = self.analysis.iter().find(|c| c.randomized()) {
                return Err(Error::Scenario(format!("`seed` is required when `{cert}` is requested")));
            }
        }
        let name = self.name.clone().unwrap_or_else(|| fallback_name.to_string());
        Ok(LoadedScenario {
            scenario: self,
            name,
            graph,
            formation,
            kind,
            target_formation,
        })
    }
}

/// Parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    Scenario::from_path(path)?.load(stem)
}

pub fn load_scenario_str(text: &str, fallback_name: &str) -> Result<LoadedScenario> {
    Scenario::from_json(text)?.load(fallback_name)
}
