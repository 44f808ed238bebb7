//! Closed-form step-size conditions and error bounds.
//!
//! All evaluators are pure functions of a [`ProblemSetting`] plus initial
//! conditions. Conditions that involve the quantity being solved for (the
//! strongly convex step-size cap depends on `omega_hat`, which depends on the
//! step size) are checked after solving rather than iterated to a fixed point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalars shared by every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSetting {
    /// Strong-convexity modulus (ignored by the convex and nonconvex bounds).
    pub kappa: f64,
    /// Gradient Lipschitz constant.
    pub lipschitz: f64,
    /// Oracle noise variance bound.
    pub sigma_sq: f64,
    pub gamma: f64,
    pub attraction: f64,
    /// Algebraic connectivity of the thread graph.
    pub lambda2: f64,
    /// Maximum vertex degree.
    pub max_degree: f64,
    pub n: usize,
}

impl ProblemSetting {
    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `4 a^2 d^2`, recurring in every bound.
    fn attraction_load(&self) -> f64 {
        4.0 * self.attraction * self.attraction * self.max_degree * self.max_degree
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpeedup {
    pub h_n: f64,
    /// Expected centralized step duration over the mean sampling time,
    /// `E[max of N Exp(dt)] / dt = H_N`.
    pub delta_t_c_over_delta_t: f64,
}

/// `H_N = 1 + 1/2 + ... + 1/N`.
pub fn harmonic_speedup(n: usize) -> Result<HarmonicSpeedup> {
    if n < 1 {
        return Err(Error::param("N", "must be at least 1"));
    }
    // Summed smallest-first for accuracy.
    let h_n: f64 = (1..=n).rev().map(|i| 1.0 / i as f64).sum();
    Ok(HarmonicSpeedup {
        h_n,
        delta_t_c_over_delta_t: h_n,
    })
}

/// Coefficients `(A, B, C)` of `A w^2 + B w + C = 0` defining `omega_hat`.
pub fn hat_omega_coefficients(s: &ProblemSetting) -> (f64, f64, f64) {
    let (k, l, g, n) = (s.kappa, s.lipschitz, s.gamma, s.nf());
    let load = s.attraction_load();
    let a2 = k * l * g;
    let b = -(k + (n - 1.0) / n * k * l * g - l - s.attraction * s.lambda2 + load * g);
    let c = -(-k + k * l * g / n + l + load * g / n);
    (a2, b, c)
}

/// Root of the `omega_hat` quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HatOmega {
    pub value: f64,
    /// Both roots lie in `(0, 1)`; the smaller one was returned.
    pub ambiguous: bool,
    /// `|A w^2 + B w + C|` at the returned root.
    pub residual: f64,
}

fn polish(a: f64, b: f64, c: f64, mut w: f64) -> f64 {
    for _ in 0..3 {
        let f = (a * w + b) * w + c;
        let df = 2.0 * a * w + b;
        if df == 0.0 {
            break;
        }
        let next = w - f / df;
        if !next.is_finite() {
            break;
        }
        w = next;
    }
    w
}

/// Root in `(0, 1)` of the `omega_hat` quadratic, without the step-size
/// caps. The smaller root is taken when both qualify.
pub fn hat_omega_root(s: &ProblemSetting) -> Result<HatOmega> {
    let (a, b, c) = hat_omega_coefficients(s);
    let mut roots: Vec<f64> = if a == 0.0 {
        if b == 0.0 {
            Vec::new()
        } else {
            vec![-c / b]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            Vec::new()
        } else {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut r = vec![q / a];
            if q != 0.0 {
                r.push(c / q);
            }
            r
        }
    };
    roots = roots
        .into_iter()
        .map(|w| polish(a, b, c, w))
        .filter(|w| *w > 0.0 && *w < 1.0)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let value = *roots
        .first()
        .ok_or_else(|| Error::Inadmissible("no root of the omega_hat equation in (0, 1)".into()))?;
    Ok(HatOmega {
        value,
        ambiguous: roots.len() > 1,
        residual: ((a * value + b) * value + c).abs(),
    })
}

/// The three step-size caps `N/((1 + w N) L)`, `N/(2 kappa)` and
/// `N lambda2 / (4 a (N + 1) d^2)`.
pub fn strong_convex_caps(s: &ProblemSetting, hat_omega: f64) -> [f64; 3] {
    let n = s.nf();
    let third = if s.attraction == 0.0 || s.max_degree == 0.0 {
        f64::INFINITY
    } else {
        n * s.lambda2 / (4.0 * s.attraction * (n + 1.0) * s.max_degree * s.max_degree)
    };
    [
        n / ((1.0 + hat_omega * n) * s.lipschitz),
        n / (2.0 * s.kappa),
        third,
    ]
}

/// `omega_hat` for a step size inside the caps; fails otherwise.
pub fn solve_hat_omega(s: &ProblemSetting) -> Result<HatOmega> {
    check_positive(s)?;
    let root = hat_omega_root(s)?;
    let caps = strong_convex_caps(s, root.value);
    let cap = caps.iter().copied().fold(f64::INFINITY, f64::min);
    if s.gamma < cap {
        Ok(root)
    } else {
        Err(Error::Inadmissible(format!(
            "step size {} is not below the cap {cap}",
            s.gamma
        )))
    }
}

fn check_positive(s: &ProblemSetting) -> Result<()> {
    let fields = [
        ("kappa", s.kappa),
        ("L", s.lipschitz),
        ("gamma", s.gamma),
        ("lambda2", s.lambda2),
    ];
    for (name, v) in fields {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("{v} must be positive")));
        }
    }
    if s.n < 1 {
        return Err(Error::param("N", "must be at least 1"));
    }
    Ok(())
}

/// Error bound for strongly convex objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongConvexBound {
    pub hat_omega: f64,
    pub hat_omega_ambiguous: bool,
    pub hat_omega_residual: f64,
    /// Per-update contraction factor `C`.
    pub c: f64,
    /// Long-run bound on `E|x_bar - x*|^2`.
    pub phi_star: f64,
    pub gamma_caps: [f64; 3],
    /// Step size below all caps, `C` in `(0, 1)` and `phi_star > 0`.
    pub admissible: bool,
    /// The tighter step-size condition under which `phi_star` scales as
    /// `sigma^2 / (kappa lambda2)`.
    pub corollary_condition: bool,
    pub u0: f64,
    pub v0: f64,
}

impl StrongConvexBound {
    /// `phi_k = phi* + (U0 + w V0 - phi*) (1 - C)^k`.
    pub fn phi_k(&self, k: u64) -> f64 {
        self.phi_star
            + (self.u0 + self.hat_omega * self.v0 - self.phi_star) * (1.0 - self.c).powf(k as f64)
    }
}

pub fn strong_convex_bound(s: &ProblemSetting, u0: f64, v0: f64) -> Result<StrongConvexBound> {
    check_positive(s)?;
    let root = hat_omega_root(s)?;
    let w = root.value;
    let (k, l, g, n) = (s.kappa, s.lipschitz, s.gamma, s.nf());
    let caps = strong_convex_caps(s, w);
    let c = 2.0 / n * k * g - 2.0 / (n * n) * k * (1.0 + w * n) * l * g * g;
    let phi_star = (1.0 + w * n) * g * s.sigma_sq / (2.0 * k * n - 2.0 * k * (1.0 + w * n) * l * g);
    let below_caps = caps.iter().all(|&cap| g < cap);
    let cor_cap = ((s.attraction * s.lambda2 + 2.0 * l - 2.0 * k)
        / (2.0 * (k * l + s.attraction_load())))
    .min(2.0 / l);
    Ok(StrongConvexBound {
        hat_omega: w,
        hat_omega_ambiguous: root.ambiguous,
        hat_omega_residual: root.residual,
        c,
        phi_star,
        gamma_caps: caps,
        admissible: below_caps && c > 0.0 && c < 1.0 && phi_star > 0.0,
        corollary_condition: g < cor_cap,
        u0,
        v0,
    })
}

/// `1 - 2 kappa gamma + kappa L gamma^2`, the centralized contraction factor.
pub fn centralized_contraction(kappa: f64, lipschitz: f64, gamma: f64) -> f64 {
    1.0 - 2.0 * kappa * gamma + kappa * lipschitz * gamma * gamma
}

/// Error bound of the synchronized batch scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralizedBound {
    pub phi_star_star: f64,
    pub contraction: f64,
    pub g0: f64,
}

impl CentralizedBound {
    /// `phi** + (G0 - phi**) rho^(k-1)`.
    pub fn trajectory(&self, k: u64) -> f64 {
        self.phi_star_star + (self.g0 - self.phi_star_star) * self.contraction.powf(k as f64 - 1.0)
    }
}

pub fn centralized_bound(
    kappa: f64,
    lipschitz: f64,
    sigma_sq: f64,
    gamma: f64,
    n: usize,
    g0: f64,
) -> Result<CentralizedBound> {
    if !(gamma > 0.0 && gamma < 2.0 / lipschitz) {
        return Err(Error::Inadmissible(format!(
            "step size {gamma} must lie in (0, 2/L = {})",
            2.0 / lipschitz
        )));
    }
    let nf = n as f64;
    Ok(CentralizedBound {
        phi_star_star: gamma * sigma_sq / (kappa * nf * (2.0 - lipschitz * gamma)),
        contraction: centralized_contraction(kappa, lipschitz, gamma),
        g0,
    })
}

/// Bound on `E[f(x_tilde_K) - f*]` for convex objectives, where `x_tilde_K`
/// averages the first `K` swarm means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexBound {
    pub tilde_omega: f64,
    pub mu: f64,
    pub bound_at_k: f64,
    /// `D sqrt(lambda2 N) / (sigma sqrt(K))`.
    pub gamma_rule_value: f64,
    /// `min(lambda2 / (8 a d^2), (2L + a lambda2) N / (4 (N L + L + a lambda2) L))`.
    pub gamma_rule_cap: f64,
    pub gamma_rule_ok: bool,
    /// Bound obtained when `gamma` equals the rule value.
    pub phi_k_star: f64,
}

/// Convex-case bound. `d_const` is the free constant `D > 0` of the step-size
/// rule.
pub fn convex_bound(
    s: &ProblemSetting,
    k: u64,
    u0: f64,
    v0: f64,
    d_const: f64,
) -> Result<ConvexBound> {
    if k < 2 {
        return Err(Error::param("K", "must exceed 1"));
    }
    let (l, g, n, a, lam) = (s.lipschitz, s.gamma, s.nf(), s.attraction, s.lambda2);
    let load = s.attraction_load();
    let tilde_omega = (n * l + load * g) / (n * l + a * n * lam - load * n * g);
    if !(tilde_omega > 0.0 && tilde_omega < 1.0) {
        return Err(Error::Inadmissible(format!(
            "omega_tilde = {tilde_omega} is outside (0, 1)"
        )));
    }
    let mu = g / (n * n) - (1.0 + tilde_omega * n) * g * g * l / (n * n * n);
    if !(mu > 0.0) {
        return Err(Error::Inadmissible(format!("mu = {mu} is not positive")));
    }
    let kf = k as f64;
    let bound_at_k =
        (u0 + tilde_omega * v0 + (1.0 + tilde_omega * n) * kf * g * g * s.sigma_sq / (n * n))
            / (2.0 * n * kf * mu);
    let sigma = s.sigma_sq.sqrt();
    let gamma_rule_value = d_const * (lam * n).sqrt() / (sigma * kf.sqrt());
    let first_cap = if a == 0.0 || s.max_degree == 0.0 {
        f64::INFINITY
    } else {
        lam / (8.0 * a * s.max_degree * s.max_degree)
    };
    let gamma_rule_cap = first_cap.min((2.0 * l + a * lam) * n / (4.0 * (n * l + l + a * lam) * l));
    let phi_k_star = sigma * n.sqrt() / (d_const * (lam * kf).sqrt())
        * (u0
            + tilde_omega * v0
            + (1.0 + (2.0 * n * l + a * lam) / (2.0 * l + a * lam)) * d_const * d_const * lam / n);
    Ok(ConvexBound {
        tilde_omega,
        mu,
        bound_at_k,
        gamma_rule_value,
        gamma_rule_cap,
        gamma_rule_ok: gamma_rule_value <= gamma_rule_cap,
        phi_k_star,
    })
}

/// Step size prescribed by the convex-case rule.
pub fn convex_rule_gamma(lambda2: f64, n: usize, sigma_sq: f64, k: u64, d_const: f64) -> f64 {
    d_const * (lambda2 * n as f64).sqrt() / (sigma_sq.sqrt() * (k as f64).sqrt())
}

/// Bound on `(1/L) E|grad f(x_bar_R)|^2` for a uniformly random index `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonconvexBound {
    pub check_omega: f64,
    pub check_mu: f64,
    pub bound_at_k: f64,
    /// `a > 5 L / (4 lambda2)`.
    pub attraction_ok: bool,
}

pub fn nonconvex_bound(s: &ProblemSetting, k: u64, f0_gap: f64, v0: f64) -> Result<NonconvexBound> {
    if k < 2 {
        return Err(Error::param("K", "must exceed 1"));
    }
    let (l, g, n, a, lam) = (s.lipschitz, s.gamma, s.nf(), s.attraction, s.lambda2);
    let attraction_ok = a > 5.0 * l / (4.0 * lam);
    if !attraction_ok {
        return Err(Error::Inadmissible(format!(
            "attraction {a} must exceed 5L/(4 lambda2) = {}",
            5.0 * l / (4.0 * lam)
        )));
    }
    let curv = 2.0 * l * l + s.attraction_load();
    let check_omega = (n * l + 2.0 * curv * g) / (4.0 * n * (a * lam - l) - 4.0 * n * curv * g);
    if !(check_omega > 0.0 && check_omega < 1.0) {
        return Err(Error::Inadmissible(format!(
            "omega_check = {check_omega} is outside (0, 1)"
        )));
    }
    let check_mu = g / (2.0 * n * n) - (2.0 + 4.0 * check_omega * n) * l * g * g / (n * n * n);
    if !(check_mu > 0.0) {
        return Err(Error::Inadmissible(format!(
            "mu_check = {check_mu} is not positive"
        )));
    }
    let kf = k as f64;
    let bound_at_k = ((f0_gap + check_omega * l * v0) / l
        + (0.5 + check_omega * n) * kf * g * g * s.sigma_sq / (n * n))
        / (n * kf * check_mu);
    Ok(NonconvexBound {
        check_omega,
        check_mu,
        bound_at_k,
        attraction_ok,
    })
}
