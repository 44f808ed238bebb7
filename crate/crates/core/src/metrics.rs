//! Trajectory statistics and runtime checks of the swarm's key inequalities.
//!
//! The two checks compare a quantity computed from a frozen swarm state with
//! its upper bound:
//!
//! * [`lemma4_check`] is deterministic: the squared norms of the attracted
//!   gradient directions are bounded by twice the plain gradient norms plus a
//!   dispersion term `8 a^2 N d^2 Vbar`.
//! * [`lemma2_monte_carlo_check`] replicates one global-tick update many times
//!   and compares the average next dispersion with its conditional-expectation
//!   bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::swarm_increment;
use crate::error::{check_dim, Error, Result};
use crate::objective::ObjectiveSpec;
use crate::positions::Positions;
use crate::topology::{algebraic_connectivity, max_degree, Graph};

/// Error measures of one swarm (or centralized, with `N = 1`) state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    /// `|x_bar - x*|^2`; absent when the optimum is unknown.
    pub u: Option<f64>,
    /// `(1/N) sum_i |x_i - x_bar|^2`.
    pub vbar: f64,
    /// `f(x_bar) - f*`; absent when the optimum is unknown.
    pub f_gap: Option<f64>,
    /// `|grad f(x_bar)|^2`.
    pub grad_norm_sq: f64,
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Dispersion `(1/N) sum_i |x_i - x_bar|^2`.
pub fn dispersion(positions: &Positions) -> f64 {
    let mean = positions.mean();
    positions.rows().map(|r| dist_sq(r, &mean)).sum::<f64>() / positions.n() as f64
}

pub fn snapshot(
    positions: &Positions,
    spec: &ObjectiveSpec,
    x_star: Option<&[f64]>,
) -> Result<MetricSnapshot> {
    check_dim(spec.dim(), positions.dim())?;
    let mean = positions.mean();
    let vbar = positions.rows().map(|r| dist_sq(r, &mean)).sum::<f64>() / positions.n() as f64;
    let (u, f_gap) = match x_star {
        Some(xs) => {
            check_dim(spec.dim(), xs.len())?;
            let gap = spec.value(&mean)? - spec.value(xs)?;
            (Some(dist_sq(&mean, xs)), Some(gap))
        }
        None => (None, None),
    };
    Ok(MetricSnapshot {
        u,
        vbar,
        f_gap,
        grad_norm_sq: spec.grad_norm_sq(&mean)?,
    })
}

/// Incremental mean `x_k = (1 - 1/k) x_{k-1} + (1/k) input_k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunningAverage {
    pub count: u64,
    pub value: Vec<f64>,
}

impl RunningAverage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if self.count == 0 {
            self.value = x.to_vec();
            self.count = 1;
            return Ok(());
        }
        check_dim(self.value.len(), x.len())?;
        self.count += 1;
        let w = 1.0 / self.count as f64;
        for (v, &xi) in self.value.iter_mut().zip(x) {
            *v = (1.0 - w) * *v + w * xi;
        }
        Ok(())
    }
}

/// Uniform index on `{0, ..., k - 1}`.
pub fn select_random_index<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<usize> {
    if k < 1 {
        return Err(Error::param("K", "must be at least 1"));
    }
    Ok(rng.random_range(0..k))
}

/// Outcome of a deterministic inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Relative slack for floating-point round-off in [`lemma4_check`].
pub const LEMMA4_REL_SLACK: f64 = 1e-9;

/// Attracted direction `grad f(x_i) + a sum_{j ~ i} (x_i - x_j)` for thread
/// `i`, written into `out`.
fn attracted_direction(
    graph: &Graph,
    positions: &Positions,
    spec: &ObjectiveSpec,
    a: f64,
    i: usize,
    out: &mut [f64],
) {
    spec.grad_into(positions.row(i), out);
    let xi = positions.row(i);
    for &j in graph.neighbors(i) {
        for ((o, &xic), &xjc) in out.iter_mut().zip(xi).zip(positions.row(j)) {
            *o += a * (xic - xjc);
        }
    }
}

/// `sum_i |grad f(x_i) + a sum_j alpha_ij (x_i - x_j)|^2
///   <= 2 sum_i |grad f(x_i)|^2 + 8 a^2 N dmax^2 Vbar`.
pub fn lemma4_check(
    positions: &Positions,
    graph: &Graph,
    spec: &ObjectiveSpec,
    a: f64,
) -> Result<InequalityCheck> {
    check_dim(graph.n_vertices(), positions.n())?;
    check_dim(spec.dim(), positions.dim())?;
    let n = positions.n();
    let mut dir = vec![0.0; spec.dim()];
    let (mut lhs, mut grad_sq) = (0.0, 0.0);
    for i in 0..n {
        attracted_direction(graph, positions, spec, a, i, &mut dir);
        lhs += dir.iter().map(|v| v * v).sum::<f64>();
        grad_sq += spec.grad_norm_sq(positions.row(i))?;
    }
    let d = max_degree(graph) as f64;
    let rhs = 2.0 * grad_sq + 8.0 * a * a * n as f64 * d * d * dispersion(positions);
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + LEMMA4_REL_SLACK),
    })
}

/// Settings for [`lemma2_monte_carlo_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Settings {
    pub step_size: f64,
    pub attraction: f64,
    pub n_replications: usize,
    /// Oracle draws per thread for the local noise-variance estimate.
    pub noise_samples: usize,
}

/// Outcome of [`lemma2_monte_carlo_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Check {
    /// Average `Vbar_{k+1}` over the replications.
    pub empirical_mean: f64,
    pub rhs: f64,
    pub std_err: f64,
    /// Noise variance used in `rhs`: the thread average of local estimates.
    pub sigma_sq: f64,
    pub vbar: f64,
    pub holds: bool,
}

/// Monte-Carlo check of the one-step dispersion bound
///
/// ```text
/// E[Vbar_{k+1} | x_k] <= Vbar_k - (2 gamma / N^2) sum_i grad f(x_i)' e_i
///                        - (2/N) a lambda2 gamma Vbar_k
///                        + (gamma^2 / N^2) sum_i |grad f(x_i) + a sum_j alpha_ij (x_i - x_j)|^2
///                        + gamma^2 sigma^2 / N
/// ```
///
/// where `e_i = x_i - x_bar`. The state is frozen and a single global-tick
/// update (uniform updater, fresh gradient sample) is replicated; the
/// resulting dispersion is recomputed from scratch each time. The check
/// passes when the empirical mean is at most `rhs + 3 std_err`.
pub fn lemma2_monte_carlo_check<R: Rng + ?Sized>(
    positions: &Positions,
    graph: &Graph,
    spec: &ObjectiveSpec,
    settings: &Lemma2Settings,
    rng: &mut R,
) -> Result<Lemma2Check> {
    check_dim(graph.n_vertices(), positions.n())?;
    check_dim(spec.dim(), positions.dim())?;
    if settings.n_replications < 2 {
        return Err(Error::param(
            "n_replications",
            "need at least 2 replications",
        ));
    }
    let n = positions.n();
    let nf = n as f64;
    let (gamma, a) = (settings.step_size, settings.attraction);
    let m = spec.dim();

    let mean = positions.mean();
    let vbar = dispersion(positions);
    let lambda2 = algebraic_connectivity(graph)?;

    let mut sigma_sq = 0.0;
    for row in positions.rows() {
        sigma_sq += spec.estimate_noise_variance(row, settings.noise_samples, rng)?;
    }
    sigma_sq /= nf;

    let mut grad = vec![0.0; m];
    let mut dir = vec![0.0; m];
    let (mut grad_dot_e, mut dir_sq) = (0.0, 0.0);
    for i in 0..n {
        spec.grad_into(positions.row(i), &mut grad);
        grad_dot_e += grad
            .iter()
            .zip(positions.row(i))
            .zip(&mean)
            .map(|((g, x), xb)| g * (x - xb))
            .sum::<f64>();
        attracted_direction(graph, positions, spec, a, i, &mut dir);
        dir_sq += dir.iter().map(|v| v * v).sum::<f64>();
    }
    let rhs = vbar - 2.0 * gamma / (nf * nf) * grad_dot_e - 2.0 / nf * a * lambda2 * gamma * vbar
        + gamma * gamma / (nf * nf) * dir_sq
        + gamma * gamma * sigma_sq / nf;

    let mut work = positions.clone();
    let mut sample = vec![0.0; m];
    let mut delta = vec![0.0; m];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..settings.n_replications {
        let i = rng.random_range(0..n);
        spec.sample_into(positions.row(i), &mut sample, rng);
        swarm_increment(graph, positions, i, &sample, gamma, a, &mut delta);
        for ((w, x), d) in work.row_mut(i).iter_mut().zip(positions.row(i)).zip(&delta) {
            *w = x + d;
        }
        let next = dispersion(&work);
        work.row_mut(i).copy_from_slice(positions.row(i));
        sum += next;
        sum_sq += next * next;
    }
    let reps = settings.n_replications as f64;
    let empirical_mean = sum / reps;
    let var = ((sum_sq - reps * empirical_mean * empirical_mean) / (reps - 1.0)).max(0.0);
    let std_err = (var / reps).sqrt();
    Ok(Lemma2Check {
        empirical_mean,
        rhs,
        std_err,
        sigma_sq,
        vbar,
        holds: empirical_mean <= rhs + 3.0 * std_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::topology::{complete_graph, path_graph};

    fn ridge() -> ObjectiveSpec {
        ObjectiveSpec::ridge(0.1, vec![0.3, 0.6, 0.9]).unwrap()
    }

    #[test]
    fn snapshot_at_optimum() {
        let spec = ridge();
        let xs = spec.optimum().unwrap();
        let snap = snapshot(&Positions::filled(4, &xs), &spec, Some(&xs)).unwrap();
        assert_eq!(snap.u, Some(0.0));
        assert_eq!(snap.vbar, 0.0);
        assert!(snap.f_gap.unwrap().abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair_has_zero_error() {
        let spec = ridge();
        let xs = spec.optimum().unwrap();
        let delta = 0.25;
        let mut up = xs.clone();
        up[0] += delta;
        let mut down = xs.clone();
        down[0] -= delta;
        let snap = snapshot(
            &Positions::from_rows(&[up, down]).unwrap(),
            &spec,
            Some(&xs),
        )
        .unwrap();
        assert!(snap.u.unwrap() < 1e-30);
        assert!((snap.vbar - delta * delta).abs() < 1e-15);
    }

    #[test]
    fn vbar_matches_brute_force() {
        let mut rng = seeded(4);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let p = Positions::from_rows(&rows).unwrap();
        let snap = snapshot(&p, &ridge(), None).unwrap();
        // Pairwise identity: Vbar = (1 / 2N^2) sum_{i,j} |x_i - x_j|^2.
        let pairwise: f64 = rows
            .iter()
            .flat_map(|a| rows.iter().map(move |b| dist_sq(a, b)))
            .sum::<f64>()
            / (2.0 * 25.0);
        assert!((snap.vbar - pairwise).abs() < 1e-12 * pairwise);
        assert!(snap.u.is_none() && snap.f_gap.is_none());
    }

    #[test]
    fn running_average_examples() {
        let mut ra = RunningAverage::new();
        ra.push(&[1.5, -2.0]).unwrap();
        ra.push(&[1.5, -2.0]).unwrap();
        assert_eq!(ra.value, vec![1.5, -2.0]);
        let mut ra = RunningAverage::new();
        ra.push(&[0.0]).unwrap();
        ra.push(&[2.0]).unwrap();
        assert_eq!(ra.value, vec![1.0]);
        assert!(ra.push(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn random_index() {
        let mut rng = seeded(1);
        assert_eq!(select_random_index(1, &mut rng).unwrap(), 0);
        assert!(select_random_index(0, &mut rng).is_err());
        let n = 100_000;
        let mut bins = [0usize; 4];
        for _ in 0..n {
            bins[select_random_index(4, &mut rng).unwrap()] += 1;
        }
        for b in bins {
            assert!((b as f64 / n as f64 - 0.25).abs() < 0.006);
        }
    }

    #[test]
    fn lemma4_trivial_cases() {
        let spec = ridge();
        let g = path_graph(3).unwrap();
        let same = Positions::filled(3, &[0.1, 0.2, 0.3]);
        let c = lemma4_check(&same, &g, &spec, 2.0).unwrap();
        assert!((c.rhs - 2.0 * c.lhs).abs() < 1e-12 && c.holds);

        let rows = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, -1.0],
            vec![3.0, 3.0, 3.0],
        ];
        let c = lemma4_check(&Positions::from_rows(&rows).unwrap(), &g, &spec, 0.0).unwrap();
        assert!(c.holds && (c.rhs - 2.0 * c.lhs).abs() < 1e-12);
    }

    #[test]
    fn lemma2_zero_step_keeps_dispersion() {
        let spec = ridge();
        let g = complete_graph(3).unwrap();
        let rows = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, -1.0],
            vec![0.5, 0.5, 0.5],
        ];
        let p = Positions::from_rows(&rows).unwrap();
        let settings = Lemma2Settings {
            step_size: 0.0,
            attraction: 1.0,
            n_replications: 1000,
            noise_samples: 100,
        };
        let c = lemma2_monte_carlo_check(&p, &g, &spec, &settings, &mut seeded(2)).unwrap();
        assert!((c.empirical_mean - dispersion(&p)).abs() < 1e-12);
        assert!((c.rhs - c.vbar).abs() < 1e-12);
        assert!(c.holds);
    }

    #[test]
    fn lemma2_deterministic_two_threads() {
        // N = 2, m = 1, a = 0, zero-noise quadratic f = x^2/2, both threads
        // at x = 1. The updater moves to 1 - gamma, so
        // Vbar' = (gamma/2)^2 exactly, and the bound is gamma^2 * 2 / 4.
        let spec = ObjectiveSpec::quadratic(vec![vec![1.0]], vec![0.0], 0.0).unwrap();
        let g = complete_graph(2).unwrap();
        let p = Positions::filled(2, &[1.0]);
        let gamma = 0.1;
        let settings = Lemma2Settings {
            step_size: gamma,
            attraction: 0.0,
            n_replications: 1000,
            noise_samples: 100,
        };
        let c = lemma2_monte_carlo_check(&p, &g, &spec, &settings, &mut seeded(3)).unwrap();
        assert!((c.empirical_mean - gamma * gamma / 4.0).abs() < 1e-15);
        assert!(c.std_err < 1e-9);
        assert!((c.rhs - gamma * gamma / 2.0).abs() < 1e-15);
        assert!(c.holds);
    }
}
