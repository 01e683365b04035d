//! Scenario files: a knowledge snapshot, a road graph path and solver
//! settings in one JSON document.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::KnowledgeSnapshot;
use crate::recommender::{
    compute_travel_times, geometry_fingerprint, instance_with_travel_times, ConstraintSet,
    ProblemInstance, RecommendError, SolverConfig, TimeObjective, TravelTimes, DEFAULT_EXACT_BOUND,
};
use crate::roads::{GraphError, GraphFile, RoadGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub exact_bound: usize,
    pub time_objective: TimeObjective,
    pub constraints: ConstraintSet,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            exact_bound: DEFAULT_EXACT_BOUND,
            time_objective: TimeObjective::Sum,
            constraints: ConstraintSet::default(),
        }
    }
}

impl SolverSettings {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            exact_bound: self.exact_bound,
            time_objective: self.time_objective,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub knowledge: KnowledgeSnapshot,
    /// Road graph file, relative to the scenario file's directory.
    pub graph: PathBuf,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    /// One line per broken invariant.
    #[error("{} violation(s): {}", .0.len(), .0.join("; "))]
    Invalid(Vec<String>),
}

/// A loaded and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub graph: RoadGraph,
    pub graph_path: PathBuf,
}

impl Scenario {
    /// Reads the scenario and its graph, then checks the snapshot, the graph
    /// and that every place lands on the road network. Every violation is
    /// reported, not just the first.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::load_with_graph(path, None::<&Path>)
    }

    /// Like [`Scenario::load`], reading the road graph from `graph` instead
    /// of the path named in the file when given.
    pub fn load_with_graph(
        path: impl AsRef<Path>,
        graph: Option<impl AsRef<Path>>,
    ) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_owned(),
            source,
        })?;
        let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        let graph_path = match graph {
            Some(g) => g.as_ref().to_owned(),
            None => path.parent().unwrap_or(Path::new(".")).join(&file.graph),
        };

        let mut violations: Vec<String> = file
            .knowledge
            .validate()
            .iter()
            .map(|v| format!("knowledge.{v}"))
            .collect();

        let graph_text = fs::read_to_string(&graph_path).map_err(|source| ScenarioError::Io {
            path: graph_path.clone(),
            source,
        })?;
        let graph_file: GraphFile = serde_json::from_str(&graph_text).map_err(|e| ScenarioError::Parse {
            path: graph_path.clone(),
            message: e.to_string(),
        })?;
        let graph = match RoadGraph::from_file(&graph_file) {
            Ok(g) => Some(g),
            Err(GraphError::GraphViolation(v)) => {
                violations.extend(v.into_iter().map(|m| format!("graph: {m}")));
                None
            }
            Err(e) => {
                violations.push(format!("graph: {e}"));
                None
            }
        };

        if let (Some(g), true) = (&graph, violations.is_empty()) {
            if let Err(e) = compute_travel_times(&file.knowledge, g) {
                violations.push(format!("placement: {e}"));
            }
        }
        match graph {
            Some(graph) if violations.is_empty() => Ok(Scenario {
                file,
                graph,
                graph_path,
            }),
            _ => Err(ScenarioError::Invalid(violations)),
        }
    }

    pub fn snapshot(&self) -> &KnowledgeSnapshot {
        &self.file.knowledge
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.file.solver
    }

    pub fn travel_times(&self) -> Result<TravelTimes, RecommendError> {
        compute_travel_times(&self.file.knowledge, &self.graph)
    }

    pub fn fingerprint(&self) -> Result<String, RecommendError> {
        geometry_fingerprint(&self.file.knowledge, &self.graph)
    }

    /// Solver input, reusing precomputed `times` when given. Precomputed
    /// times whose fingerprint does not match this scenario are rejected.
    pub fn instance(&self, times: Option<&TravelTimes>) -> Result<ProblemInstance, InstanceError> {
        let owned;
        let times = match times {
            Some(t) => {
                let expected = self.fingerprint()?;
                if t.fingerprint != expected {
                    return Err(InstanceError::StaleMatrix {
                        expected,
                        found: t.fingerprint.clone(),
                    });
                }
                t
            }
            None => {
                owned = self.travel_times()?;
                &owned
            }
        };
        Ok(instance_with_travel_times(
            &self.file.knowledge,
            times,
            self.file.solver.constraints,
        )?)
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("travel-time matrix is stale (fingerprint {found}, scenario is {expected})")]
    StaleMatrix { expected: String, found: String },
    #[error(transparent)]
    Recommend(#[from] RecommendError),
}

/// Reads a matrix file written by [`write_travel_times`].
pub fn read_travel_times(path: impl AsRef<Path>) -> Result<TravelTimes, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

pub fn write_travel_times(path: impl AsRef<Path>, times: &TravelTimes) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(times).expect("matrix serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })
}
