//! Closed-form sampling policies for maximization.
//!
//! All functions take the prediction mean `mu` and the prediction *standard
//! deviation* `s` at a decision, together with the best observation `y_max`,
//! and use `z = (y_max - mu) / s`.

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::{Error, Result};

/// |z| beyond which the normal tails are treated as exactly 0 / 1.
pub const Z_CLAMP: f64 = 38.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Which acquisition function to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    ExpectedImprovement,
    /// Hard deterministic knowledge gradient, `min(EI, ED)`.
    Kgcp,
    /// Log-sum-exp smoothed knowledge gradient; uses `PolicyContext::soft_k`.
    SoftKgcp,
    /// `mu + beta * s`; uses `PolicyContext::ucb_beta`.
    Ucb,
}

/// State shared by every policy evaluation within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyContext {
    pub y_max: f64,
    pub iteration: usize,
    pub ucb_beta: f64,
    pub soft_k: f64,
}

impl PolicyContext {
    pub fn new(y_max: f64, iteration: usize) -> Self {
        Self {
            y_max,
            iteration,
            ucb_beta: 0.0,
            soft_k: 1e3,
        }
    }
}

/// Acquisition value with an optional gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyScore {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
}

fn check(mu: f64, s: f64, y_max: f64) -> Result<()> {
    if !mu.is_finite() || !s.is_finite() || !y_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "non-finite policy input (mu = {mu}, s = {s}, y_max = {y_max})"
        )));
    }
    if s < 0.0 {
        return Err(Error::InvalidArgument(format!("negative standard deviation {s}")));
    }
    Ok(())
}

/// `None` when the tails are flat and the limiting linear form applies.
fn standardized(mu: f64, s: f64, y_max: f64) -> Option<f64> {
    if s == 0.0 {
        return None;
    }
    let z = (y_max - mu) / s;
    (z.abs() <= Z_CLAMP).then_some(z)
}

/// Expected Improvement `(mu - y_max) Φ(-z) + s φ(z)`.
pub fn expected_improvement(mu: f64, s: f64, y_max: f64) -> Result<f64> {
    check(mu, s, y_max)?;
    Ok(match standardized(mu, s, y_max) {
        Some(z) => ((mu - y_max) * norm_cdf(-z) + s * norm_pdf(z)).max(0.0),
        None => (mu - y_max).max(0.0),
    })
}

/// Expected Decrement `(y_max - mu) Φ(z) + s φ(z)`: the expected value of
/// `max(Y, y_max) - mu` for `Y ~ N(mu, s²)`.
pub fn expected_decrement(mu: f64, s: f64, y_max: f64) -> Result<f64> {
    check(mu, s, y_max)?;
    Ok(match standardized(mu, s, y_max) {
        Some(z) => ((y_max - mu) * norm_cdf(z) + s * norm_pdf(z)).max(0.0),
        None => (y_max - mu).max(0.0),
    })
}

/// Deterministic knowledge gradient for continuous parameters, `min(EI, ED)`.
pub fn kgcp(mu: f64, s: f64, y_max: f64) -> Result<f64> {
    Ok(expected_improvement(mu, s, y_max)?.min(expected_decrement(mu, s, y_max)?))
}

fn dz(mu: f64, s: f64, y_max: f64, dmu: &[f64], ds: &[f64]) -> (f64, Vec<f64>) {
    let z = (y_max - mu) / s;
    let dz = dmu.iter().zip(ds).map(|(m, sd)| -(m + z * sd) / s).collect();
    (z, dz)
}

fn check_grad(mu: f64, s: f64, y_max: f64, dmu: &[f64], ds: &[f64]) -> Result<()> {
    check(mu, s, y_max)?;
    if s == 0.0 {
        return Err(Error::UndefinedGradient);
    }
    if dmu.len() != ds.len() {
        return Err(Error::InvalidArgument("gradient length mismatch".into()));
    }
    Ok(())
}

/// Gradient of [`expected_improvement`] given `dmu = dμ/dx` and `ds = ds/dx`.
pub fn ei_gradient(mu: f64, s: f64, dmu: &[f64], ds: &[f64], y_max: f64) -> Result<Vec<f64>> {
    check_grad(mu, s, y_max, dmu, ds)?;
    let (z, dz) = dz(mu, s, y_max, dmu, ds);
    let z = z.clamp(-Z_CLAMP, Z_CLAMP);
    let a = -z * norm_cdf(-z) + norm_pdf(z);
    let b = s * norm_cdf(-z);
    Ok(ds.iter().zip(&dz).map(|(sd, zd)| a * sd - b * zd).collect())
}

/// Gradient of [`expected_decrement`].
pub fn ed_gradient(mu: f64, s: f64, dmu: &[f64], ds: &[f64], y_max: f64) -> Result<Vec<f64>> {
    check_grad(mu, s, y_max, dmu, ds)?;
    let (z, dz) = dz(mu, s, y_max, dmu, ds);
    let z = z.clamp(-Z_CLAMP, Z_CLAMP);
    let a = z * norm_cdf(z) + norm_pdf(z);
    let b = s * norm_cdf(z);
    Ok(ds.iter().zip(&dz).map(|(sd, zd)| a * sd + b * zd).collect())
}

/// Soft minimum `-log(exp(-k EI) + exp(-k ED)) / k` of the two criteria.
///
/// The gradient is returned when `grads = Some((dmu, ds))`; it needs `s > 0`.
pub fn soft_kgcp(
    mu: f64,
    s: f64,
    y_max: f64,
    k: f64,
    grads: Option<(&[f64], &[f64])>,
) -> Result<PolicyScore> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("smoothing constant must be positive, got {k}")));
    }
    let ei = expected_improvement(mu, s, y_max)?;
    let ed = expected_decrement(mu, s, y_max)?;
    let lo = ei.min(ed);
    // The smaller term contributes exp(0) = 1 after the shift.
    let value = lo - (-k * (ei - ed).abs()).exp().ln_1p() / k;
    let gradient = match grads {
        None => None,
        Some((dmu, ds)) => {
            let gi = ei_gradient(mu, s, dmu, ds, y_max)?;
            let gd = ed_gradient(mu, s, dmu, ds, y_max)?;
            let wi = (-k * (ei - lo)).exp();
            let wd = (-k * (ed - lo)).exp();
            let total = wi + wd;
            Some(
                gi.iter()
                    .zip(&gd)
                    .map(|(a, b)| (wi * a + wd * b) / total)
                    .collect(),
            )
        }
    };
    Ok(PolicyScore { value, gradient })
}

/// Upper confidence bound `mu + beta * s`.
pub fn ucb(mu: f64, s: f64, beta: f64) -> f64 {
    mu + beta * s
}

/// GP-UCB exploration weight `sqrt(2 ln(n^{d/2+2} π² / (3δ)))`.
pub fn ucb_beta(iteration: usize, d: usize, delta: f64) -> f64 {
    let n = iteration.max(1) as f64;
    let arg = (d as f64 / 2.0 + 2.0) * n.ln() + (std::f64::consts::PI.powi(2) / (3.0 * delta)).ln();
    (2.0 * arg).max(0.0).sqrt()
}

/// Score a policy from a prediction mean/std and, optionally, their gradients.
pub fn score(
    policy: PolicySpec,
    mu: f64,
    s: f64,
    ctx: &PolicyContext,
    grads: Option<(&[f64], &[f64])>,
) -> Result<PolicyScore> {
    let y_max = ctx.y_max;
    match policy {
        PolicySpec::ExpectedImprovement => Ok(PolicyScore {
            value: expected_improvement(mu, s, y_max)?,
            gradient: grads
                .map(|(dm, ds)| ei_gradient(mu, s, dm, ds, y_max))
                .transpose()?,
        }),
        PolicySpec::Kgcp => {
            let ei = expected_improvement(mu, s, y_max)?;
            let ed = expected_decrement(mu, s, y_max)?;
            // One-sided derivative of the active branch; undefined on the kink.
            let gradient = grads
                .map(|(dm, ds)| {
                    if ei <= ed {
                        ei_gradient(mu, s, dm, ds, y_max)
                    } else {
                        ed_gradient(mu, s, dm, ds, y_max)
                    }
                })
                .transpose()?;
            Ok(PolicyScore {
                value: ei.min(ed),
                gradient,
            })
        }
        PolicySpec::SoftKgcp => soft_kgcp(mu, s, y_max, ctx.soft_k, grads),
        PolicySpec::Ucb => {
            check(mu, s, 0.0)?;
            Ok(PolicyScore {
                value: ucb(mu, s, ctx.ucb_beta),
                gradient: grads.map(|(dm, ds)| {
                    dm.iter().zip(ds).map(|(a, b)| a + ctx.ucb_beta * b).collect()
                }),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_and_ed_at_z_zero() {
        let phi0 = 0.398_942_280_401_432_7;
        assert!((expected_improvement(1.5, 1.0, 1.5).unwrap() - phi0).abs() < 1e-15);
        assert!((expected_decrement(1.5, 1.0, 1.5).unwrap() - phi0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_limits() {
        assert_eq!(expected_improvement(-1.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(expected_improvement(2.0, 0.0, 0.5).unwrap(), 1.5);
        assert_eq!(expected_decrement(5.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(expected_decrement(-1.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(kgcp(2.0, 0.0, 0.5).unwrap(), 0.0);
        assert_eq!(kgcp(-2.0, 0.0, 0.5).unwrap(), 0.0);
        assert!(expected_improvement(-1.0, 1e-300, 0.0).unwrap() == 0.0);
    }

    #[test]
    fn tails_take_linear_limits() {
        assert_eq!(expected_improvement(100.0, 1.0, 0.0).unwrap(), 100.0);
        assert_eq!(expected_decrement(-100.0, 1.0, 0.0).unwrap(), 100.0);
        assert_eq!(expected_decrement(100.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(expected_improvement(f64::NAN, 1.0, 0.0).is_err());
        assert!(expected_decrement(0.0, -1.0, 0.0).is_err());
        assert!(kgcp(0.0, 1.0, f64::INFINITY).is_err());
        assert!(soft_kgcp(0.0, 1.0, 0.0, 0.0, None).is_err());
        assert!(matches!(
            ei_gradient(0.0, 0.0, &[1.0], &[1.0], 0.0),
            Err(Error::UndefinedGradient)
        ));
    }

    #[test]
    fn soft_kgcp_equal_branches() {
        let k = 4.0;
        let v = soft_kgcp(0.7, 0.3, 0.7, k, None).unwrap().value;
        let ei = expected_improvement(0.7, 0.3, 0.7).unwrap();
        assert!((v - (ei - 2f64.ln() / k)).abs() < 1e-14);
    }

    #[test]
    fn zero_derivatives_give_zero_gradient() {
        let zero = [0.0; 3];
        assert_eq!(ei_gradient(0.3, 0.8, &zero, &zero, 0.1).unwrap(), vec![0.0; 3]);
        assert_eq!(ed_gradient(0.3, 0.8, &zero, &zero, 0.1).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn gradients_at_z_zero() {
        let (mu, s) = (1.0, 0.5);
        let (dmu, ds) = ([0.3, -0.2], [0.1, 0.4]);
        let dz: Vec<f64> = dmu.iter().map(|m| -m / s).collect();
        let phi0 = norm_pdf(0.0);
        let gi = ei_gradient(mu, s, &dmu, &ds, mu).unwrap();
        let gd = ed_gradient(mu, s, &dmu, &ds, mu).unwrap();
        for k in 0..2 {
            assert!((gi[k] - (phi0 * ds[k] - s * 0.5 * dz[k])).abs() < 1e-15);
            assert!((gd[k] - (phi0 * ds[k] + s * 0.5 * dz[k])).abs() < 1e-15);
            assert!((gi[k] - gd[k]).abs() > 0.1);
        }
    }

    #[test]
    fn ucb_arithmetic() {
        assert_eq!(ucb(1.0, 2.0, 1.5), 4.0);
        assert_eq!(ucb(-0.3, 2.0, 0.0), -0.3);
        assert_eq!(ucb(0.7, 0.0, 9.0), 0.7);
    }

    #[test]
    fn ucb_beta_grows_with_iteration() {
        let b10 = ucb_beta(10, 2, 0.1);
        let expected = (2.0 * (1000f64 * std::f64::consts::PI.powi(2) / 0.3).ln()).sqrt();
        assert!((b10 - expected).abs() < 1e-12);
        assert!(ucb_beta(20, 2, 0.1) > b10);
    }

    #[test]
    fn cdf_reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((norm_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }
}
