use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use swarmsgd::engine::{run_swarm_observed, Horizon, Scheme, TraceSummary};
use swarmsgd::metrics::{lemma2_monte_carlo_check, lemma4_check, Lemma2Settings};
use swarmsgd::positions::Positions;
use swarmsgd::rng::{seeded, stream};
use swarmsgd::theory::{
    centralized_bound, convex_bound, harmonic_speedup, nonconvex_bound, solve_hat_omega,
    strong_convex_bound, ProblemSetting,
};

use crate::config::ExperimentConfig;
use crate::experiment::{par_map, prepare_all, run_scheme, Lemma4Tally};
use crate::CliError;

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub replication: usize,
    #[serde(flatten)]
    pub summary: TraceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub master_seed: u64,
    pub scheme: Scheme,
    pub runs: Vec<RunEntry>,
}

/// Runs the configured scheme for every replication, writing
/// `run_<r>.csv` per replication and `summary.json`.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulateSummary, CliError> {
    let reps = prepare_all(cfg)?;
    create_dir(out)?;
    let scheme = cfg.run.scheme;
    let runs = par_map(&reps, |rep| {
        let (trace, _) = run_scheme(cfg, rep, scheme, cfg.run.stop_at_threshold)?;
        write_file(
            &out.join(format!("run_{:03}.csv", rep.index)),
            &trace.to_csv(),
        )?;
        Ok(RunEntry {
            replication: rep.index,
            summary: trace.summary,
        })
    })?;
    let summary = SimulateSummary {
        master_seed: cfg.master_seed,
        scheme,
        runs,
    };
    write_file(&out.join("summary.json"), &to_json(&summary))?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRun {
    pub replication: usize,
    pub seed: u64,
    #[serde(rename = "T_s")]
    pub t_s: Option<f64>,
    #[serde(rename = "T_c")]
    pub t_c: Option<f64>,
}

impl ComparisonRun {
    /// Both schemes reached the threshold.
    pub fn complete(&self) -> Option<(f64, f64)> {
        Some((self.t_s?, self.t_c?))
    }
}

/// Mean threshold-crossing times of the two schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub instance: Instance,
    pub threshold: f64,
    #[serde(rename = "T_s_mean")]
    pub t_s_mean: Option<f64>,
    #[serde(rename = "T_c_mean")]
    pub t_c_mean: Option<f64>,
    pub ratio: Option<f64>,
    /// `H_N`, the expected ratio of step durations.
    pub predicted_ratio: f64,
    /// Replications where a scheme never crossed within the horizon; they do
    /// not enter the means.
    pub excluded: usize,
    pub per_run: Vec<ComparisonRun>,
    pub lemma4: Lemma4Tally,
}

impl ComparisonReport {
    pub fn from_runs(
        instance: Instance,
        threshold: f64,
        per_run: Vec<ComparisonRun>,
        lemma4: Lemma4Tally,
    ) -> Self {
        let done: Vec<(f64, f64)> = per_run.iter().filter_map(ComparisonRun::complete).collect();
        let (t_s_mean, t_c_mean) = if done.is_empty() {
            (None, None)
        } else {
            let k = done.len() as f64;
            (
                Some(done.iter().map(|d| d.0).sum::<f64>() / k),
                Some(done.iter().map(|d| d.1).sum::<f64>() / k),
            )
        };
        ComparisonReport {
            instance,
            threshold,
            t_s_mean,
            t_c_mean,
            ratio: t_c_mean.zip(t_s_mean).map(|(c, s)| c / s),
            predicted_ratio: harmonic_speedup(instance.n).expect("N >= 2").h_n,
            excluded: per_run.len() - done.len(),
            per_run,
            lemma4,
        }
    }
}

/// Runs both schemes from the same start for every replication and compares
/// the first virtual times at which the squared error reaches the threshold.
/// The swarm uses `run.scheme` when that is a swarm scheme.
pub fn compare(cfg: &ExperimentConfig, out: &Path) -> Result<ComparisonReport, CliError> {
    let reps = prepare_all(cfg)?;
    let swarm_scheme = if cfg.run.scheme.is_swarm() {
        cfg.run.scheme
    } else {
        Scheme::SwarmEventDriven
    };
    let results = par_map(&reps, |rep| {
        let (swarm, tally) = run_scheme(cfg, rep, swarm_scheme, true)?;
        let (central, _) = run_scheme(cfg, rep, Scheme::Centralized, true)?;
        Ok((
            ComparisonRun {
                replication: rep.index,
                seed: rep.seed,
                t_s: swarm.summary.t_hit,
                t_c: central.summary.t_hit,
            },
            tally,
        ))
    })?;
    let tally = results
        .iter()
        .fold(Lemma4Tally::default(), |acc, r| acc.merge(r.1));
    let report = ComparisonReport::from_runs(
        Instance {
            d: cfg.objective.dim(),
            n: cfg.run.n_threads,
        },
        cfg.threshold,
        results.into_iter().map(|r| r.0).collect(),
        tally,
    );
    create_dir(out)?;
    write_file(&out.join("comparison.json"), &to_json(&report))?;
    Ok(report)
}

/// Named scalars accepted by [`bounds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsParams {
    pub kappa: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub sigma_sq: f64,
    pub gamma: f64,
    pub a: f64,
    pub lambda2: f64,
    pub d_bar: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Horizon of the convex and nonconvex bounds; those are skipped
    /// without it.
    #[serde(rename = "K", default)]
    pub k: Option<u64>,
    #[serde(rename = "U0", default)]
    pub u0: f64,
    #[serde(rename = "V0", default)]
    pub v0: f64,
    /// Initial centralized error; defaults to `U0`.
    #[serde(rename = "G0", default)]
    pub g0: Option<f64>,
    #[serde(default)]
    pub f0_gap: f64,
    /// Constant of the convex step-size rule.
    #[serde(rename = "D", default = "default_d")]
    pub d: f64,
}

fn default_d() -> f64 {
    1.0
}

impl BoundsParams {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let p: BoundsParams =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if p.n < 1 {
            return Err(CliError::Config("N: must be at least 1".into()));
        }
        Ok(p)
    }

    pub fn setting(&self) -> ProblemSetting {
        ProblemSetting {
            kappa: self.kappa,
            lipschitz: self.lipschitz,
            sigma_sq: self.sigma_sq,
            gamma: self.gamma,
            attraction: self.a,
            lambda2: self.lambda2,
            max_degree: self.d_bar,
            n: self.n,
        }
    }
}

fn section<T: Serialize>(result: swarmsgd::Result<T>, admissible: impl Fn(&T) -> bool) -> Value {
    match result {
        Ok(v) => {
            let ok = admissible(&v);
            let mut obj = serde_json::to_value(v).expect("bound serialization cannot fail");
            obj["admissible"] = json!(ok);
            obj
        }
        Err(e) => json!({"admissible": false, "reason": e.to_string()}),
    }
}

/// Evaluates every bound at the given parameters. Inadmissible settings are
/// reported per bound rather than treated as failures.
pub fn bounds(p: &BoundsParams) -> Value {
    let s = p.setting();
    let harmonic = harmonic_speedup(p.n).expect("N >= 1 is checked on load");
    let hat_omega = section(solve_hat_omega(&s), |_| true);
    let strong = section(strong_convex_bound(&s, p.u0, p.v0), |b| b.admissible);
    let central = section(
        centralized_bound(
            p.kappa,
            p.lipschitz,
            p.sigma_sq,
            p.gamma,
            p.n,
            p.g0.unwrap_or(p.u0),
        ),
        |_| true,
    );
    let (convex, nonconvex) = match p.k {
        Some(k) => (
            section(convex_bound(&s, k, p.u0, p.v0, p.d), |_| true),
            section(nonconvex_bound(&s, k, p.f0_gap, p.v0), |_| true),
        ),
        None => {
            let skipped = json!({"admissible": false, "reason": "K not given"});
            (skipped.clone(), skipped)
        }
    };
    json!({
        "harmonic": harmonic,
        "hat_omega": hat_omega,
        "strong_convex": strong,
        "centralized": central,
        "convex": convex,
        "nonconvex": nonconvex,
    })
}

/// One validator outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: CheckKind,
    pub replication: usize,
    pub k: u64,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs` for Monte-Carlo checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Lemma4,
    Lemma2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub lemma4_checked: usize,
    pub lemma4_violations: usize,
    pub lemma2_checked: usize,
    pub lemma2_passed: usize,
    pub lemma2_pass_rate: f64,
    pub min_lemma2_pass_rate: f64,
    pub passed: bool,
}

/// Runs short swarm trajectories and applies the runtime inequality checks:
/// the deterministic one at every recorded state, the Monte-Carlo one at
/// evenly spaced recorded states. Writes `validation.json` (the record array)
/// and `validation_summary.json`.
pub fn validate(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<(Vec<CheckRecord>, ValidationSummary), CliError> {
    let v = &cfg.validate;
    let mut run_cfg = cfg.clone();
    run_cfg.run.horizon = Some(Horizon::MaxUpdates(v.updates));
    run_cfg.run.record_every = v.record_every;
    if !run_cfg.run.scheme.is_swarm() {
        run_cfg.run.scheme = Scheme::SwarmEventDriven;
    }
    let reps = prepare_all(&run_cfg)?;
    let settings = Lemma2Settings {
        step_size: cfg.run.step_size,
        attraction: cfg.run.attraction,
        n_replications: v.lemma2_replications,
        noise_samples: v.noise_samples,
    };

    let per_rep = par_map(&reps, |rep| {
        let rc = rep.run_config(&run_cfg, run_cfg.run.scheme, false);
        let mut records = Vec::new();
        let mut states: Vec<(u64, Positions)> = Vec::new();
        let mut failure = None;
        run_swarm_observed(
            &rc,
            &rep.graph,
            &rep.spec,
            Positions::filled(cfg.run.n_threads, &rep.init),
            |st, rec| {
                let Some(rec) = rec else { return };
                match lemma4_check(st.positions(), &rep.graph, &rep.spec, cfg.run.attraction) {
                    Ok(c) => records.push(CheckRecord {
                        check: CheckKind::Lemma4,
                        replication: rep.index,
                        k: rec.k,
                        holds: c.holds,
                        lhs: c.lhs,
                        rhs: c.rhs,
                        std_err: None,
                    }),
                    Err(e) => failure = Some(e),
                }
                states.push((rec.k, st.positions().clone()));
            },
        )?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        let picks = v.lemma2_states.min(states.len());
        let mut rng = seeded(rep.stream_seed(stream::VALIDATION));
        for j in 0..picks {
            let (k, ref pos) = states[j * states.len() / picks];
            let c = lemma2_monte_carlo_check(pos, &rep.graph, &rep.spec, &settings, &mut rng)?;
            records.push(CheckRecord {
                check: CheckKind::Lemma2,
                replication: rep.index,
                k,
                holds: c.holds,
                lhs: c.empirical_mean,
                rhs: c.rhs,
                std_err: Some(c.std_err),
            });
        }
        Ok(records)
    })?;
    let records: Vec<CheckRecord> = per_rep.into_iter().flatten().collect();

    let count = |kind: CheckKind, holds: Option<bool>| {
        records
            .iter()
            .filter(|r| r.check == kind && holds.is_none_or(|h| r.holds == h))
            .count()
    };
    let lemma2_checked = count(CheckKind::Lemma2, None);
    let lemma2_passed = count(CheckKind::Lemma2, Some(true));
    let lemma2_pass_rate = if lemma2_checked == 0 {
        1.0
    } else {
        lemma2_passed as f64 / lemma2_checked as f64
    };
    let lemma4_violations = count(CheckKind::Lemma4, Some(false));
    let summary = ValidationSummary {
        lemma4_checked: count(CheckKind::Lemma4, None),
        lemma4_violations,
        lemma2_checked,
        lemma2_passed,
        lemma2_pass_rate,
        min_lemma2_pass_rate: v.min_lemma2_pass_rate,
        passed: lemma4_violations == 0 && lemma2_pass_rate >= v.min_lemma2_pass_rate,
    };
    create_dir(out)?;
    write_file(&out.join("validation.json"), &to_json(&records))?;
    write_file(&out.join("validation_summary.json"), &to_json(&summary))?;
    Ok((records, summary))
}

/// Grid for the `sweep` subcommand. Scalars not swept are fixed; `d_bar`
/// defaults to `N - 1` (complete graph).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kappa: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub sigma_sq: f64,
    #[serde(default)]
    pub d_bar: Option<f64>,
    #[serde(rename = "K", default = "default_sweep_k")]
    pub k: u64,
    #[serde(rename = "U0", default = "default_one")]
    pub u0: f64,
    #[serde(rename = "V0", default)]
    pub v0: f64,
    #[serde(default = "default_one")]
    pub f0_gap: f64,
    #[serde(rename = "D", default = "default_one")]
    pub d: f64,
    pub gamma: Vec<f64>,
    pub a: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub lambda2: Vec<f64>,
}

fn default_sweep_k() -> u64 {
    10_000
}

fn default_one() -> f64 {
    1.0
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let c: SweepConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if c.gamma.is_empty() || c.a.is_empty() || c.n.is_empty() || c.lambda2.is_empty() {
            return Err(CliError::Config(
                "sweep: gamma, a, N and lambda2 must be non-empty".into(),
            ));
        }
        if c.n.iter().any(|&n| n < 1) {
            return Err(CliError::Config("N: entries must be at least 1".into()));
        }
        Ok(c)
    }
}

pub const SWEEP_HEADER: &str = "gamma,a,N,lambda2,quantity,value";

/// Long-format table of bound quantities over the grid. Inadmissible
/// quantities have an empty value.
pub fn sweep(c: &SweepConfig) -> String {
    let mut grid = Vec::new();
    for &gamma in &c.gamma {
        for &a in &c.a {
            for &n in &c.n {
                for &lambda2 in &c.lambda2 {
                    grid.push((gamma, a, n, lambda2));
                }
            }
        }
    }
    let rows: Vec<String> = grid
        .par_iter()
        .map(|&(gamma, a, n, lambda2)| {
            let s = ProblemSetting {
                kappa: c.kappa,
                lipschitz: c.lipschitz,
                sigma_sq: c.sigma_sq,
                gamma,
                attraction: a,
                lambda2,
                max_degree: c.d_bar.unwrap_or(n as f64 - 1.0),
                n,
            };
            let strong = strong_convex_bound(&s, c.u0, c.v0).ok();
            let convex = convex_bound(&s, c.k, c.u0, c.v0, c.d).ok();
            let nonconvex = nonconvex_bound(&s, c.k, c.f0_gap, c.v0).ok();
            let central = centralized_bound(c.kappa, c.lipschitz, c.sigma_sq, gamma, n, c.u0).ok();
            let flag = |b: bool| if b { 1.0 } else { 0.0 };
            let quantities: [(&str, Option<f64>); 10] = [
                ("hat_omega", strong.map(|b| b.hat_omega)),
                ("C", strong.map(|b| b.c)),
                ("phi_star", strong.map(|b| b.phi_star)),
                (
                    "strong_convex_admissible",
                    Some(flag(strong.is_some_and(|b| b.admissible))),
                ),
                (
                    "corollary_condition",
                    strong.map(|b| flag(b.corollary_condition)),
                ),
                ("phi_star_star", central.map(|b| b.phi_star_star)),
                ("tilde_omega", convex.map(|b| b.tilde_omega)),
                ("convex_bound_at_K", convex.map(|b| b.bound_at_k)),
                ("check_omega", nonconvex.map(|b| b.check_omega)),
                ("nonconvex_bound_at_K", nonconvex.map(|b| b.bound_at_k)),
            ];
            let mut block = String::new();
            for (name, value) in quantities {
                block.push_str(&format!("{gamma},{a},{n},{lambda2},{name},"));
                if let Some(v) = value {
                    block.push_str(&v.to_string());
                }
                block.push('\n');
            }
            block
        })
        .collect();
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    out.extend(rows);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ridge_params(gamma: f64) -> BoundsParams {
        BoundsParams::from_json(&format!(
            r#"{{"kappa": 0.8666666666666667, "L": 0.8666666666666667, "sigma_sq": 30,
                "gamma": {gamma}, "a": 1, "lambda2": 20, "d_bar": 19, "N": 20,
                "K": 10000, "U0": 4, "V0": 0, "f0_gap": 2}}"#
        ))
        .unwrap()
    }

    #[test]
    fn bounds_report_harmonic_number() {
        let report = bounds(&ridge_params(0.01));
        let h = report["harmonic"]["h_n"].as_f64().unwrap();
        assert_eq!(format!("{h:.4}"), "3.5977");
        assert_eq!(report["strong_convex"]["admissible"], json!(true));
        assert_eq!(report["centralized"]["admissible"], json!(true));
    }

    #[test]
    fn huge_step_is_inadmissible_everywhere() {
        let report = bounds(&ridge_params(10.0));
        for key in [
            "hat_omega",
            "strong_convex",
            "centralized",
            "convex",
            "nonconvex",
        ] {
            assert_eq!(
                report[key]["admissible"],
                json!(false),
                "{key}: {}",
                report[key]
            );
        }
        let corollary = &report["strong_convex"]["corollary_condition"];
        assert!(corollary.is_null() || corollary == &json!(false));
    }

    #[test]
    fn missing_bounds_field_is_named() {
        let err = BoundsParams::from_json(r#"{"kappa": 1, "L": 1}"#).unwrap_err();
        assert!(err.to_string().contains("sigma_sq"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn comparison_means_recompute_from_runs() {
        let runs = vec![
            ComparisonRun {
                replication: 0,
                seed: 1,
                t_s: Some(1.0),
                t_c: Some(3.5),
            },
            ComparisonRun {
                replication: 1,
                seed: 2,
                t_s: Some(2.0),
                t_c: None,
            },
            ComparisonRun {
                replication: 2,
                seed: 3,
                t_s: Some(1.5),
                t_c: Some(5.0),
            },
        ];
        let r =
            ComparisonReport::from_runs(Instance { d: 2, n: 4 }, 0.1, runs, Lemma4Tally::default());
        assert_eq!(r.excluded, 1);
        assert_eq!(r.t_s_mean, Some(1.25));
        assert_eq!(r.t_c_mean, Some(4.25));
        assert_eq!(r.ratio, Some(4.25 / 1.25));
        assert!((r.predicted_ratio - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_layout() {
        let c = SweepConfig::from_json(
            r#"{"kappa": 0.8, "L": 0.8, "sigma_sq": 10, "gamma": [0.001, 0.01], "a": [1], "N": [10], "lambda2": [10, 5]}"#,
        )
        .unwrap();
        let csv = sweep(&c);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines.len(), 1 + 2 * 2 * 10);
        assert!(lines[1].starts_with("0.001,1,10,10,hat_omega,0."));
        assert_eq!(sweep(&c), csv);
    }
}
