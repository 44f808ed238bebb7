//! Browser bindings: a swarm-versus-batch race on a random ridge instance,
//! a step-size scan of the strongly convex error bound, and a random thread
//! graph with its connectivity. Every export returns a JSON string; failures
//! come back as `{"error": "..."}`.

use serde::Serialize;
use swarmsgd::engine::{run_centralized, run_swarm, Horizon, RunConfig, Scheme, Trace};
use swarmsgd::objective::ObjectiveSpec;
use swarmsgd::positions::Positions;
use swarmsgd::rng::{seeded, split, stream};
use swarmsgd::theory::{
    centralized_bound, centralized_contraction, harmonic_speedup, strong_convex_bound,
    ProblemSetting,
};
use swarmsgd::topology::{algebraic_connectivity, erdos_renyi_connected, max_degree};
use wasm_bindgen::prelude::wasm_bindgen;

const MEAN_SAMPLE_TIME: f64 = 0.02;
const THRESHOLD: f64 = 0.1;
const TARGET_POINTS: f64 = 300.0;
const MAX_THREADS: usize = 200;
const MAX_DIM: usize = 200;

#[derive(Debug, Serialize)]
pub struct Race {
    /// `(t, U)` pairs.
    pub swarm: Vec<[f64; 2]>,
    pub central: Vec<[f64; 2]>,
    pub t_swarm: Option<f64>,
    pub t_central: Option<f64>,
    pub h_n: f64,
    pub lambda2: f64,
    pub horizon: f64,
    pub threshold: f64,
}

fn points(trace: &Trace) -> Vec<[f64; 2]> {
    trace
        .records
        .iter()
        .map(|r| [r.t, r.u.unwrap_or(f64::NAN)])
        .collect()
}

fn check_size(n: usize, dim: usize) -> Result<(), String> {
    if !(2..=MAX_THREADS).contains(&n) {
        return Err(format!("threads must be between 2 and {MAX_THREADS}"));
    }
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(format!("dimension must be between 1 and {MAX_DIM}"));
    }
    Ok(())
}

/// Runs both schemes from the origin on a ridge problem (`rho = 0.1`) over an
/// Erdős–Rényi graph, for 1.5 times the predicted batch crossing time.
pub fn race(n: usize, dim: usize, gamma: f64, a: f64, p: f64, seed: u64) -> Result<Race, String> {
    check_size(n, dim)?;
    let graph = erdos_renyi_connected(n, p, &mut seeded(split(seed, stream::GRAPH)))
        .map_err(|e| e.to_string())?
        .0;
    let spec = ObjectiveSpec::random_ridge(dim, 0.1, &mut seeded(split(seed, stream::OBJECTIVE)))
        .map_err(|e| e.to_string())?;
    let x_star = spec.optimum().expect("ridge has a closed-form optimum");
    let reg = spec.regularity();
    let rho = centralized_contraction(reg.kappa, reg.lipschitz, gamma);
    if !(gamma > 0.0 && rho > 0.0 && rho < 1.0) {
        return Err("step size too large for the batch scheme to converge".into());
    }
    let h_n = harmonic_speedup(n).map_err(|e| e.to_string())?.h_n;
    let g0: f64 = x_star.iter().map(|v| v * v).sum();
    let steps = ((g0 / THRESHOLD).ln() / -rho.ln()).max(10.0);
    let horizon = 1.5 * steps * h_n * MEAN_SAMPLE_TIME;

    let swarm_updates = horizon * n as f64 / MEAN_SAMPLE_TIME;
    let base = RunConfig {
        n_threads: n,
        step_size: gamma,
        attraction: a,
        mean_sample_time: MEAN_SAMPLE_TIME,
        horizon: Horizon::MaxVirtualTime(horizon),
        seed: split(seed, stream::SWARM),
        scheme: Scheme::SwarmEventDriven,
        record_every: (swarm_updates / TARGET_POINTS).ceil().max(1.0) as u64,
        threshold: THRESHOLD,
        stop_at_threshold: false,
    };
    let swarm =
        run_swarm(&base, &graph, &spec, Positions::zeros(n, dim)).map_err(|e| e.to_string())?;
    let central_cfg = RunConfig {
        seed: split(seed, stream::CENTRAL),
        scheme: Scheme::Centralized,
        record_every: (1.5 * steps / TARGET_POINTS).ceil().max(1.0) as u64,
        ..base
    };
    let central =
        run_centralized(&central_cfg, &spec, &vec![0.0; dim]).map_err(|e| e.to_string())?;
    Ok(Race {
        swarm: points(&swarm),
        central: points(&central),
        t_swarm: swarm.summary.t_hit,
        t_central: central.summary.t_hit,
        h_n,
        lambda2: algebraic_connectivity(&graph).map_err(|e| e.to_string())?,
        horizon,
        threshold: THRESHOLD,
    })
}

#[derive(Debug, Serialize)]
pub struct ScanPoint {
    pub gamma: f64,
    /// Swarm error floor, absent where the step size is inadmissible.
    pub phi_star: Option<f64>,
    pub hat_omega: Option<f64>,
    /// Batch error floor.
    pub phi_star_star: Option<f64>,
}

/// Error floors of both schemes over log-spaced step sizes in
/// `[1e-4, 1]` for a ridge problem with penalty `rho`.
pub fn bound_scan(
    n: usize,
    a: f64,
    lambda2: f64,
    d_bar: f64,
    sigma_sq: f64,
    rho: f64,
) -> Result<Vec<ScanPoint>, String> {
    if n < 2 || !(lambda2 > 0.0) || !(sigma_sq >= 0.0) || !(rho > 0.0) {
        return Err("need N >= 2, lambda2 > 0, sigma^2 >= 0 and rho > 0".into());
    }
    let h = 2.0 / 3.0 + 2.0 * rho;
    let count = 80;
    Ok((0..=count)
        .map(|i| {
            let gamma = 10f64.powf(-4.0 + 4.0 * i as f64 / count as f64);
            let s = ProblemSetting {
                kappa: h,
                lipschitz: h,
                sigma_sq,
                gamma,
                attraction: a,
                lambda2,
                max_degree: d_bar,
                n,
            };
            let strong = strong_convex_bound(&s, 0.0, 0.0)
                .ok()
                .filter(|b| b.admissible);
            ScanPoint {
                gamma,
                phi_star: strong.map(|b| b.phi_star),
                hat_omega: strong.map(|b| b.hat_omega),
                phi_star_star: centralized_bound(h, h, sigma_sq, gamma, n, 0.0)
                    .ok()
                    .map(|b| b.phi_star_star),
            }
        })
        .collect())
}

#[derive(Debug, Serialize)]
pub struct GraphView {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub lambda2: f64,
    pub max_degree: usize,
    /// Draws needed to obtain a connected graph.
    pub attempts: u32,
}

pub fn graph(n: usize, p: f64, seed: u64) -> Result<GraphView, String> {
    check_size(n, 1)?;
    let (g, attempts) = erdos_renyi_connected(n, p, &mut seeded(split(seed, stream::GRAPH)))
        .map_err(|e| e.to_string())?;
    Ok(GraphView {
        n,
        edges: g.edges(),
        lambda2: algebraic_connectivity(&g).map_err(|e| e.to_string())?,
        max_degree: max_degree(&g),
        attempts,
    })
}

fn to_json<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[wasm_bindgen]
pub fn race_json(n: usize, dim: usize, gamma: f64, a: f64, p: f64, seed: u32) -> String {
    to_json(race(n, dim, gamma, a, p, u64::from(seed)))
}

#[wasm_bindgen]
pub fn bound_scan_json(
    n: usize,
    a: f64,
    lambda2: f64,
    d_bar: f64,
    sigma_sq: f64,
    rho: f64,
) -> String {
    to_json(bound_scan(n, a, lambda2, d_bar, sigma_sq, rho))
}

#[wasm_bindgen]
pub fn graph_json(n: usize, p: f64, seed: u32) -> String {
    to_json(graph(n, p, u64::from(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn race_is_won_by_the_swarm() {
        let r = race(20, 20, 0.01, 1.0, 0.5, 3).unwrap();
        let (s, c) = (r.t_swarm.unwrap(), r.t_central.unwrap());
        assert!(s < c, "{s} vs {c}");
        assert!(r.swarm.len() > 100 && r.central.len() > 100);
        assert!(r.swarm.last().unwrap()[0] <= r.horizon);
        assert!((r.h_n - 3.597_739_657).abs() < 1e-8);
    }

    #[test]
    fn race_rejects_bad_input() {
        assert!(race(1, 5, 0.01, 1.0, 0.5, 0).is_err());
        assert!(race(10, 5, 10.0, 1.0, 0.5, 0).is_err());
        assert!(race_json(1, 5, 0.01, 1.0, 0.5, 0).starts_with("{\"error\""));
    }

    #[test]
    fn scan_marks_large_steps_inadmissible() {
        let scan = bound_scan(20, 1.0, 20.0, 19.0, 80.0, 0.1).unwrap();
        assert_eq!(scan.len(), 81);
        assert!(scan[0].phi_star.is_some());
        assert!(scan.last().unwrap().phi_star.is_none());
        let floors: Vec<f64> = scan.iter().filter_map(|p| p.phi_star).collect();
        assert!(floors.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn graph_view_round_trips() {
        let json = graph_json(12, 0.3, 5);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["n"], 12);
        assert!(v["lambda2"].as_f64().unwrap() > 0.0);
        assert!(v["edges"].as_array().unwrap().len() >= 11);
    }
}
