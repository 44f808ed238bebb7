//! Per-replication setup shared by the subcommands.

use rayon::prelude::*;
use swarmsgd::engine::{
    run_centralized_observed, run_swarm_observed, Horizon, RunConfig, Scheme, SwarmState, Trace,
    TraceRecord,
};
use swarmsgd::metrics::lemma4_check;
use swarmsgd::objective::ObjectiveSpec;
use swarmsgd::positions::Positions;
use swarmsgd::rng::{seeded, split, stream};
use swarmsgd::theory::{centralized_contraction, harmonic_speedup};
use swarmsgd::topology::{complete_graph, erdos_renyi_connected, Graph};

use crate::config::{ExperimentConfig, GraphKind};
use crate::CliError;

/// Everything one replication needs.
#[derive(Debug, Clone)]
pub struct Replication {
    pub index: usize,
    /// `split(master_seed, index)`; all streams of the replication derive
    /// from it.
    pub seed: u64,
    pub graph: Graph,
    pub spec: ObjectiveSpec,
    pub init: Vec<f64>,
    pub horizon: Horizon,
}

impl Replication {
    pub fn stream_seed(&self, tag: u64) -> u64 {
        split(self.seed, tag)
    }

    pub fn run_config(
        &self,
        cfg: &ExperimentConfig,
        scheme: Scheme,
        stop_at_threshold: bool,
    ) -> RunConfig {
        let tag = if scheme.is_swarm() {
            stream::SWARM
        } else {
            stream::CENTRAL
        };
        RunConfig {
            n_threads: cfg.run.n_threads,
            step_size: cfg.run.step_size,
            attraction: cfg.run.attraction,
            mean_sample_time: cfg.run.mean_sample_time,
            horizon: self.horizon,
            seed: self.stream_seed(tag),
            scheme,
            record_every: cfg.run.record_every,
            threshold: cfg.threshold,
            stop_at_threshold,
        }
    }
}

/// Graph shared by all replications, when the configuration asks for one.
pub fn shared_graph(cfg: &ExperimentConfig) -> Result<Option<Graph>, CliError> {
    let n = cfg.run.n_threads;
    match cfg.graph.kind {
        GraphKind::Complete => Ok(Some(complete_graph(n)?)),
        GraphKind::File => cfg.load_graph_file().map(Some),
        GraphKind::ErdosRenyi if cfg.graph.fixed => {
            let mut rng = seeded(split(cfg.master_seed, stream::GRAPH));
            Ok(Some(
                erdos_renyi_connected(n, cfg.graph.edge_probability(n), &mut rng)?.0,
            ))
        }
        GraphKind::ErdosRenyi => Ok(None),
    }
}

/// Virtual time ten times the predicted crossing time of the centralized
/// scheme, `H_N dt ln(G0/threshold) / -ln(1 - 2 kappa gamma + kappa L gamma^2)`.
pub fn default_horizon(
    cfg: &ExperimentConfig,
    spec: &ObjectiveSpec,
    init: &[f64],
) -> Result<Horizon, CliError> {
    let x_star = spec.optimum().ok_or_else(|| {
        CliError::Config(format!(
            "run.horizon: required for the {} objective, whose optimum is unknown",
            spec.name()
        ))
    })?;
    let reg = spec.regularity();
    let rho = centralized_contraction(reg.kappa, reg.lipschitz, cfg.run.step_size);
    if !(rho > 0.0 && rho < 1.0) {
        return Err(CliError::Config(
            "run.horizon: required because the step size gives no predicted contraction".into(),
        ));
    }
    let g0: f64 = init
        .iter()
        .zip(&x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let steps = ((g0 / cfg.threshold).ln() / -rho.ln()).max(1.0);
    let h_n = harmonic_speedup(cfg.run.n_threads)?.h_n;
    Ok(Horizon::MaxVirtualTime(
        10.0 * steps * h_n * cfg.run.mean_sample_time,
    ))
}

pub fn prepare(
    cfg: &ExperimentConfig,
    index: usize,
    shared: Option<&Graph>,
) -> Result<Replication, CliError> {
    let seed = split(cfg.master_seed, index as u64);
    let n = cfg.run.n_threads;
    let graph = match shared {
        Some(g) => g.clone(),
        None => {
            let mut rng = seeded(split(seed, stream::GRAPH));
            erdos_renyi_connected(n, cfg.graph.edge_probability(n), &mut rng)?.0
        }
    };
    let spec = cfg
        .objective
        .instantiate(&mut seeded(split(seed, stream::OBJECTIVE)))?;
    let init = cfg.initial_point();
    let horizon = match cfg.run.horizon {
        Some(h) => h,
        None => default_horizon(cfg, &spec, &init)?,
    };
    Ok(Replication {
        index,
        seed,
        graph,
        spec,
        init,
        horizon,
    })
}

/// Prepares every replication, in index order.
pub fn prepare_all(cfg: &ExperimentConfig) -> Result<Vec<Replication>, CliError> {
    let shared = shared_graph(cfg)?;
    (0..cfg.replications)
        .map(|r| prepare(cfg, r, shared.as_ref()))
        .collect()
}

/// Tally of deterministic inequality checks on recorded swarm states.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Lemma4Tally {
    pub checked: u64,
    pub violations: u64,
}

impl Lemma4Tally {
    pub fn merge(self, other: Lemma4Tally) -> Lemma4Tally {
        Lemma4Tally {
            checked: self.checked + other.checked,
            violations: self.violations + other.violations,
        }
    }
}

/// Runs one scheme for a replication. Swarm runs check the deterministic
/// direction-norm inequality at every recorded state.
pub fn run_scheme(
    cfg: &ExperimentConfig,
    rep: &Replication,
    scheme: Scheme,
    stop_at_threshold: bool,
) -> Result<(Trace, Lemma4Tally), CliError> {
    let run_cfg = rep.run_config(cfg, scheme, stop_at_threshold);
    let mut tally = Lemma4Tally::default();
    let trace = if scheme.is_swarm() {
        let init = Positions::filled(cfg.run.n_threads, &rep.init);
        let mut failure = None;
        let trace = run_swarm_observed(
            &run_cfg,
            &rep.graph,
            &rep.spec,
            init,
            |st: &SwarmState, rec: Option<&TraceRecord>| {
                if rec.is_some() && failure.is_none() {
                    match lemma4_check(st.positions(), &rep.graph, &rep.spec, cfg.run.attraction) {
                        Ok(c) => {
                            tally.checked += 1;
                            tally.violations += u64::from(!c.holds);
                        }
                        Err(e) => failure = Some(e),
                    }
                }
            },
        )?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        trace
    } else {
        run_centralized_observed(&run_cfg, &rep.spec, &rep.init, |_, _| {})?
    };
    Ok((trace, tally))
}

/// Maps `f` over replications on the current rayon pool, keeping index order.
pub fn par_map<T, F>(reps: &[Replication], f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(&Replication) -> Result<T, CliError> + Sync + Send,
{
    reps.par_iter().map(f).collect()
}
