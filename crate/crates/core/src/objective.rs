//! Objective functions and their stochastic gradient oracles.
//!
//! Three families are supported:
//!
//! * `ridge`: on-line ridge regression `E[(u'x - v)^2] + rho |x|^2` with
//!   features `u ~ U[-1, 1]^m` and responses `v = u'x_tilde + eps`,
//!   `eps ~ N(0, 1)`. Since `E[uu'] = I/3` the expectation has the closed form
//!   `|x - x_tilde|^2 / 3 + rho |x|^2 + 1`.
//! * `quadratic`: `x'Qx/2 + b'x` with isotropic Gaussian gradient noise.
//! * `nonconvex_sine`: `sum_i x_i^2/2 + 3 sin^2(x_i)` with isotropic Gaussian
//!   gradient noise. Its curvature `1 + 6 cos(2 x_i)` ranges over `[-5, 7]`.
//!
//! Every oracle is unbiased and each sample carries an exponentially
//! distributed generation time.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::{exponential, standard_normal};

/// Gradient-Lipschitz constant of the sine test function.
pub const SINE_LIPSCHITZ: f64 = 7.0;

fn default_noise_std() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Ridge {
        rho: f64,
        x_tilde: Vec<f64>,
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityClass {
    StronglyConvex,
    Convex,
    Nonconvex,
}

/// Strong-convexity modulus `kappa` (0 when not strongly convex), gradient
/// Lipschitz constant `lipschitz`, and convexity class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub kappa: f64,
    pub lipschitz: f64,
    pub convexity: ConvexityClass,
}

/// One oracle answer.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub g: Vec<f64>,
    /// Seconds the oracle spent producing `g`.
    pub sampling_time: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

impl ObjectiveSpec {
    pub fn ridge(rho: f64, x_tilde: Vec<f64>) -> Result<Self> {
        let spec = ObjectiveSpec::Ridge { rho, x_tilde };
        spec.validate()?;
        Ok(spec)
    }

    /// Ridge instance with `x_tilde` drawn uniformly from `[0, 1]^dim`.
    pub fn random_ridge<R: Rng + ?Sized>(dim: usize, rho: f64, rng: &mut R) -> Result<Self> {
        let x_tilde = (0..dim).map(|_| rng.random::<f64>()).collect();
        Self::ridge(rho, x_tilde)
    }

    pub fn quadratic(q: Vec<Vec<f64>>, b: Vec<f64>, noise_std: f64) -> Result<Self> {
        let spec = ObjectiveSpec::Quadratic { q, b, noise_std };
        spec.validate()?;
        Ok(spec)
    }

    pub fn nonconvex_sine(dim: usize, noise_std: f64) -> Result<Self> {
        let spec = ObjectiveSpec::NonconvexSine { dim, noise_std };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::param("objective", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::param("objective", "dimension must be positive"));
        }
        match self {
            ObjectiveSpec::Ridge { rho, x_tilde } => {
                if !(*rho > 0.0 && rho.is_finite()) {
                    return Err(Error::param("rho", format!("{rho} must be positive")));
                }
                if x_tilde.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::param("x_tilde", "entries must lie in [0, 1]"));
                }
            }
            ObjectiveSpec::Quadratic { q, b, noise_std } => {
                let m = b.len();
                if q.len() != m || q.iter().any(|row| row.len() != m) {
                    return Err(Error::param("q", format!("must be {m} x {m}")));
                }
                for i in 0..m {
                    for j in 0..i {
                        if (q[i][j] - q[j][i]).abs() > 1e-12 * (1.0 + q[i][j].abs()) {
                            return Err(Error::param("q", "must be symmetric"));
                        }
                    }
                }
                let (lo, _) = quadratic_eigen_range(q);
                if !(lo > 0.0) {
                    return Err(Error::param("q", "must be positive definite"));
                }
                check_noise(*noise_std)?;
            }
            ObjectiveSpec::NonconvexSine { noise_std, .. } => check_noise(*noise_std)?,
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ObjectiveSpec::Ridge { x_tilde, .. } => x_tilde.len(),
            ObjectiveSpec::Quadratic { b, .. } => b.len(),
            ObjectiveSpec::NonconvexSine { dim, .. } => *dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveSpec::Ridge { .. } => "ridge",
            ObjectiveSpec::Quadratic { .. } => "quadratic",
            ObjectiveSpec::NonconvexSine { .. } => "nonconvex_sine",
        }
    }

    /// Exact objective value.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            ObjectiveSpec::Ridge { rho, x_tilde } => {
                let diff: f64 = x.iter().zip(x_tilde).map(|(a, b)| (a - b) * (a - b)).sum();
                diff / 3.0 + rho * norm_sq(x) + 1.0
            }
            ObjectiveSpec::Quadratic { q, b, .. } => {
                let quad: f64 = q.iter().zip(x).map(|(row, xi)| xi * dot(row, x)).sum();
                0.5 * quad + dot(b, x)
            }
            ObjectiveSpec::NonconvexSine { .. } => {
                x.iter().map(|&v| 0.5 * v * v + 3.0 * v.sin().powi(2)).sum()
            }
        })
    }

    /// Exact gradient.
    pub fn grad_exact(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = vec![0.0; x.len()];
        self.grad_into(x, &mut out);
        Ok(out)
    }

    /// Writes the exact gradient at `x` into `out`. Both must have length
    /// `dim()`.
    pub(crate) fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ObjectiveSpec::Ridge { rho, x_tilde } => {
                for ((o, &xi), &ti) in out.iter_mut().zip(x).zip(x_tilde) {
                    *o = (2.0 / 3.0 + 2.0 * rho) * xi - (2.0 / 3.0) * ti;
                }
            }
            ObjectiveSpec::Quadratic { q, b, .. } => {
                for ((o, row), bi) in out.iter_mut().zip(q).zip(b) {
                    *o = dot(row, x) + bi;
                }
            }
            ObjectiveSpec::NonconvexSine { .. } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = xi + 3.0 * (2.0 * xi).sin();
                }
            }
        }
    }

    /// Squared norm of the exact gradient.
    pub fn grad_norm_sq(&self, x: &[f64]) -> Result<f64> {
        Ok(norm_sq(&self.grad_exact(x)?))
    }

    /// Draws one noisy gradient at `x` together with its generation time
    /// `~ Exp(mean_time)`.
    ///
    /// For ridge, `u ~ U[-1, 1]^m`, `v = u'x_tilde + eps` and
    /// `g = 2(u'x - v)u + 2 rho x`. The other families return the exact
    /// gradient plus `N(0, noise_std^2 I)` noise.
    pub fn sample_gradient<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        mean_time: f64,
        rng: &mut R,
    ) -> Result<GradientSample> {
        check_dim(self.dim(), x.len())?;
        if !(mean_time > 0.0 && mean_time.is_finite()) {
            return Err(Error::param(
                "mean_time",
                format!("{mean_time} must be positive"),
            ));
        }
        let mut g = vec![0.0; x.len()];
        self.sample_into(x, &mut g, rng);
        let sampling_time = exponential(rng, mean_time);
        Ok(GradientSample { g, sampling_time })
    }

    /// Noisy gradient without a timing draw. `out` must have length `dim()`.
    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, x: &[f64], out: &mut [f64], rng: &mut R) {
        match self {
            ObjectiveSpec::Ridge { rho, x_tilde } => {
                for o in out.iter_mut() {
                    *o = rng.random_range(-1.0..1.0);
                }
                let u = &*out;
                let v = dot(u, x_tilde) + standard_normal(rng);
                let residual = 2.0 * (dot(u, x) - v);
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = residual * *o + 2.0 * rho * xi;
                }
            }
            ObjectiveSpec::Quadratic { noise_std, .. }
            | ObjectiveSpec::NonconvexSine { noise_std, .. } => {
                self.grad_into(x, out);
                if *noise_std > 0.0 {
                    for o in out.iter_mut() {
                        *o += noise_std * standard_normal(rng);
                    }
                }
            }
        }
    }

    /// Unique minimizer where one is known in closed form: `x_tilde/(1+3 rho)`
    /// for ridge and `-Q^{-1} b` for quadratics. `None` for the sine family.
    pub fn optimum(&self) -> Option<Vec<f64>> {
        match self {
            ObjectiveSpec::Ridge { rho, x_tilde } => {
                Some(x_tilde.iter().map(|t| t / (1.0 + 3.0 * rho)).collect())
            }
            ObjectiveSpec::Quadratic { q, b, .. } => {
                let m = b.len();
                let mat = DMatrix::from_fn(m, m, |i, j| q[i][j]);
                let rhs = -DVector::from_column_slice(b);
                let chol = mat.cholesky()?;
                Some(chol.solve(&rhs).iter().copied().collect())
            }
            ObjectiveSpec::NonconvexSine { .. } => None,
        }
    }

    /// Optimal value `f*`. The sine family is nonnegative and vanishes at the
    /// origin, so its optimal value is 0 even though [`Self::optimum`] does not
    /// certify a minimizer.
    pub fn optimal_value(&self) -> f64 {
        match self.optimum() {
            Some(x) => self.value(&x).expect("optimum has the objective dimension"),
            None => 0.0,
        }
    }

    pub fn regularity(&self) -> Regularity {
        match self {
            ObjectiveSpec::Ridge { rho, .. } => {
                let h = 2.0 / 3.0 + 2.0 * rho;
                Regularity {
                    kappa: h,
                    lipschitz: h,
                    convexity: ConvexityClass::StronglyConvex,
                }
            }
            ObjectiveSpec::Quadratic { q, .. } => {
                let (lo, hi) = quadratic_eigen_range(q);
                Regularity {
                    kappa: lo,
                    lipschitz: hi,
                    convexity: ConvexityClass::StronglyConvex,
                }
            }
            ObjectiveSpec::NonconvexSine { .. } => Regularity {
                kappa: 0.0,
                lipschitz: SINE_LIPSCHITZ,
                convexity: ConvexityClass::Nonconvex,
            },
        }
    }

    /// Monte-Carlo estimate of `E|g(x) - grad f(x)|^2` from `n_samples` draws.
    pub fn estimate_noise_variance<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        n_samples: usize,
        rng: &mut R,
    ) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        if n_samples < 100 {
            return Err(Error::param(
                "n_samples",
                "at least 100 samples are required",
            ));
        }
        let exact = self.grad_exact(x)?;
        let mut g = vec![0.0; x.len()];
        let mut total = 0.0;
        for _ in 0..n_samples {
            self.sample_into(x, &mut g, rng);
            total += g
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        Ok(total / n_samples as f64)
    }
}

fn check_noise(noise_std: f64) -> Result<()> {
    if noise_std >= 0.0 && noise_std.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "noise_std",
            format!("{noise_std} must be nonnegative"),
        ))
    }
}

fn quadratic_eigen_range(q: &[Vec<f64>]) -> (f64, f64) {
    let m = q.len();
    let mat = DMatrix::from_fn(m, m, |i, j| 0.5 * (q[i][j] + q[j][i]));
    let eig = SymmetricEigen::new(mat).eigenvalues;
    (eig.min(), eig.max())
}
