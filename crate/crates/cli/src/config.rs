//! Experiment configuration documents.
//!
//! Every field except `objective` has a default matching the reference ridge
//! experiment: `rho = 0.1`, `gamma = 0.01`, `a = 1`, `dt = 0.02`,
//! Erdős–Rényi graph with `p = 10/N`, threshold 0.1, start at the origin.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swarmsgd::engine::{Horizon, Scheme};
use swarmsgd::objective::ObjectiveSpec;
use swarmsgd::rng::SimRng;
use swarmsgd::topology::Graph;

use crate::CliError;

fn default_rho() -> f64 {
    0.1
}

fn default_noise_std() -> f64 {
    1.0
}

/// Objective block. Ridge instances without `x_tilde` draw a fresh target
/// uniformly from `[0, 1]^dim` for every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    Ridge {
        dim: usize,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default)]
        x_tilde: Option<Vec<f64>>,
    },
    Quadratic {
        q: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
    },
    NonconvexSine {
        dim: usize,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
    },
}

impl ObjectiveConfig {
    pub fn dim(&self) -> usize {
        match self {
            ObjectiveConfig::Ridge { dim, .. } | ObjectiveConfig::NonconvexSine { dim, .. } => *dim,
            ObjectiveConfig::Quadratic { b, .. } => b.len(),
        }
    }

    pub fn instantiate(&self, rng: &mut SimRng) -> swarmsgd::Result<ObjectiveSpec> {
        match self {
            ObjectiveConfig::Ridge {
                rho,
                x_tilde: Some(t),
                dim,
            } => {
                if t.len() != *dim {
                    return Err(swarmsgd::Error::DimensionMismatch {
                        expected: *dim,
                        got: t.len(),
                    });
                }
                ObjectiveSpec::ridge(*rho, t.clone())
            }
            ObjectiveConfig::Ridge { rho, dim, .. } => ObjectiveSpec::random_ridge(*dim, *rho, rng),
            ObjectiveConfig::Quadratic { q, b, noise_std } => {
                ObjectiveSpec::quadratic(q.clone(), b.clone(), *noise_std)
            }
            ObjectiveConfig::NonconvexSine { dim, noise_std } => {
                ObjectiveSpec::nonconvex_sine(*dim, *noise_std)
            }
        }
    }
}

fn default_n_threads() -> usize {
    20
}
fn default_step_size() -> f64 {
    0.01
}
fn default_attraction() -> f64 {
    1.0
}
fn default_mean_sample_time() -> f64 {
    0.02
}
fn default_scheme() -> Scheme {
    Scheme::SwarmEventDriven
}
fn default_record_every() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_n_threads")]
    pub n_threads: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_attraction")]
    pub attraction: f64,
    #[serde(default = "default_mean_sample_time")]
    pub mean_sample_time: f64,
    /// Defaults to ten times the predicted centralized crossing time.
    #[serde(default)]
    pub horizon: Option<Horizon>,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    #[serde(default)]
    pub stop_at_threshold: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all run fields have defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Complete,
    ErdosRenyi,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub kind: GraphKind,
    /// Edge probability; defaults to `min(1, 10/N)`.
    #[serde(default)]
    pub p: Option<f64>,
    /// Graph JSON file for `kind = "file"`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Draw one random graph for all replications instead of one each.
    #[serde(default)]
    pub fixed: bool,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            kind: GraphKind::ErdosRenyi,
            p: None,
            path: None,
            fixed: false,
        }
    }
}

impl GraphSection {
    pub fn edge_probability(&self, n: usize) -> f64 {
        self.p.unwrap_or_else(|| (10.0 / n as f64).min(1.0))
    }
}

fn default_validate_updates() -> u64 {
    500
}
fn default_validate_record_every() -> u64 {
    10
}
fn default_lemma2_states() -> usize {
    20
}
fn default_lemma2_replications() -> usize {
    10_000
}
fn default_noise_samples() -> usize {
    1000
}
fn default_min_pass_rate() -> f64 {
    0.95
}

/// Settings of the `validate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default = "default_validate_updates")]
    pub updates: u64,
    #[serde(default = "default_validate_record_every")]
    pub record_every: u64,
    /// Recorded states (evenly spaced) that get the Monte-Carlo check.
    #[serde(default = "default_lemma2_states")]
    pub lemma2_states: usize,
    #[serde(default = "default_lemma2_replications")]
    pub lemma2_replications: usize,
    /// Oracle draws per thread for the noise-variance estimate.
    #[serde(default = "default_noise_samples")]
    pub noise_samples: usize,
    #[serde(default = "default_min_pass_rate")]
    pub min_lemma2_pass_rate: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all validate fields have defaults")
    }
}

fn default_replications() -> usize {
    100
}
fn default_threshold() -> f64 {
    0.1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Common starting point of every thread; the origin by default.
    #[serde(default)]
    pub initial_point: Option<Vec<f64>>,
    #[serde(default)]
    pub validate: ValidateSection,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Semantic checks beyond what deserialization enforces.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.replications < 1 {
            return bad("replications: must be at least 1".into());
        }
        if !(self.threshold > 0.0) {
            return bad("threshold: must be positive".into());
        }
        let n = self.run.n_threads;
        if n < 2 {
            return bad("run.n_threads: must be at least 2".into());
        }
        if self.objective.dim() < 1 {
            return bad("objective.dim: must be at least 1".into());
        }
        if let Some(x0) = &self.initial_point {
            if x0.len() != self.objective.dim() {
                return bad(format!(
                    "initial_point: length {} does not match objective dimension {}",
                    x0.len(),
                    self.objective.dim()
                ));
            }
        }
        let p = self.graph.edge_probability(n);
        if self.graph.kind == GraphKind::ErdosRenyi && !(p > 0.0 && p <= 1.0) {
            return bad(format!("graph.p: {p} is outside (0, 1]"));
        }
        if self.graph.kind == GraphKind::File && self.graph.path.is_none() {
            return bad("graph.path: required when graph.kind is \"file\"".into());
        }
        // Objective parameters are validated by instantiating with a throwaway
        // generator.
        self.objective
            .instantiate(&mut swarmsgd::rng::seeded(0))
            .map_err(|e| CliError::Config(format!("objective: {e}")))?;
        let v = &self.validate;
        if v.record_every < 1 || v.lemma2_replications < 2 || v.noise_samples < 100 {
            return bad(
                "validate: record_every >= 1, lemma2_replications >= 2 and noise_samples >= 100 are required"
                    .into(),
            );
        }
        Ok(())
    }

    pub fn initial_point(&self) -> Vec<f64> {
        self.initial_point
            .clone()
            .unwrap_or_else(|| vec![0.0; self.objective.dim()])
    }

    /// Graph loaded from `graph.path`.
    pub fn load_graph_file(&self) -> Result<Graph, CliError> {
        let path = self
            .graph
            .path
            .as_ref()
            .ok_or_else(|| CliError::Config("graph.path: missing".into()))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("graph.path {}: {e}", path.display())))?;
        let g = Graph::from_json(&text)
            .map_err(|e| CliError::Config(format!("graph.path {}: {e}", path.display())))?;
        if g.n_vertices() != self.run.n_threads {
            return Err(CliError::Config(format!(
                "graph.path: {} vertices but run.n_threads is {}",
                g.n_vertices(),
                self.run.n_threads
            )));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_experiment() {
        let cfg =
            ExperimentConfig::from_json(r#"{"objective": {"kind": "ridge", "dim": 20}}"#).unwrap();
        assert_eq!(cfg.run.n_threads, 20);
        assert_eq!(cfg.run.step_size, 0.01);
        assert_eq!(cfg.run.attraction, 1.0);
        assert_eq!(cfg.run.mean_sample_time, 0.02);
        assert_eq!(cfg.threshold, 0.1);
        assert_eq!(cfg.replications, 100);
        assert_eq!(cfg.graph.kind, GraphKind::ErdosRenyi);
        assert_eq!(cfg.graph.edge_probability(20), 0.5);
        assert_eq!(cfg.graph.edge_probability(5), 1.0);
        assert_eq!(cfg.initial_point(), vec![0.0; 20]);
        assert!(matches!(cfg.objective, ObjectiveConfig::Ridge { rho, .. } if rho == 0.1));
    }

    #[test]
    fn missing_objective_is_named() {
        let err = ExperimentConfig::from_json(r#"{"replications": 3}"#).unwrap_err();
        assert!(err.to_string().contains("objective"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn semantic_errors() {
        for (text, field) in [
            (
                r#"{"objective": {"kind": "ridge", "dim": 3}, "replications": 0}"#,
                "replications",
            ),
            (
                r#"{"objective": {"kind": "ridge", "dim": 3}, "threshold": 0}"#,
                "threshold",
            ),
            (
                r#"{"objective": {"kind": "ridge", "dim": 3}, "initial_point": [1]}"#,
                "initial_point",
            ),
            (
                r#"{"objective": {"kind": "ridge", "dim": 3}, "graph": {"kind": "file"}}"#,
                "graph.path",
            ),
            (
                r#"{"objective": {"kind": "ridge", "dim": 3, "rho": -1}}"#,
                "objective",
            ),
            (
                r#"{"objective": {"kind": "ridge", "dim": 3}, "bogus": 1}"#,
                "bogus",
            ),
        ] {
            let err = ExperimentConfig::from_json(text).unwrap_err();
            assert!(err.to_string().contains(field), "{field}: {err}");
        }
    }
}
