//! Independent reference implementations shared by the integration tests and
//! the acceptance runner. Nothing here calls into the library's numerics.
#![allow(dead_code)]

use std::sync::Arc;

use kgcp::kriging::Dataset;
use kgcp::Domain;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Matérn 5/2 written out directly.
pub fn matern(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    let l2: f64 = a.iter().zip(b).zip(theta).map(|((x, y), t)| t * (x - y).powi(2)).sum();
    let l = l2.sqrt();
    (1.0 + 5f64.sqrt() * l + 5.0 * l2 / 3.0) * (-(5f64.sqrt()) * l).exp()
}

/// Kriging by explicit matrix inversion, in output units.
pub struct Oracle {
    u: Vec<Vec<f64>>,
    domain: Domain,
    theta: Vec<f64>,
    basis: fn(&[f64]) -> Vec<f64>,
    psi_inv: DMatrix<f64>,
    f: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    alpha: DVector<f64>,
    resid_w: DVector<f64>,
    pub sigma2: f64,
    pub log_det: f64,
    pub y_mean: f64,
    pub y_scale: f64,
    pub n: usize,
}

pub fn constant_basis(_: &[f64]) -> Vec<f64> {
    vec![1.0]
}

impl Oracle {
    pub fn new(data: &Dataset, theta: &[f64], jitter: f64, basis: fn(&[f64]) -> Vec<f64>) -> Self {
        let domain = data.domain().clone();
        let n = data.len();
        let u: Vec<Vec<f64>> = data
            .rows()
            .map(|r| r.iter().enumerate().map(|(k, v)| (v - domain.lower[k]) / domain.width(k)).collect())
            .collect();
        let y_mean = data.y().iter().sum::<f64>() / n as f64;
        let var = data.y().iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let yn = DVector::from_iterator(n, data.y().iter().map(|v| (v - y_mean) / y_scale));
        let psi = DMatrix::from_fn(n, n, |i, j| matern(&u[i], &u[j], theta) + if i == j { jitter } else { 0.0 });
        let log_det = psi.determinant().ln();
        let psi_inv = psi.try_inverse().expect("invertible");
        let p = basis(&u[0]).len();
        let f = DMatrix::from_fn(n, p, |i, k| basis(&u[i])[k]);
        let m_inv = (f.transpose() * &psi_inv * &f).try_inverse().expect("invertible trend");
        let alpha = &m_inv * f.transpose() * &psi_inv * &yn;
        let resid = &yn - &f * &alpha;
        let sigma2 = (resid.transpose() * &psi_inv * &resid)[(0, 0)] / n as f64;
        let resid_w = &psi_inv * resid;
        Self {
            u,
            domain,
            theta: theta.to_vec(),
            basis,
            psi_inv,
            f,
            m_inv,
            alpha,
            resid_w,
            sigma2,
            log_det,
            y_mean,
            y_scale,
            n,
        }
    }

    fn unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(k, v)| (v - self.domain.lower[k]) / self.domain.width(k)).collect()
    }

    /// `(mean, variance)` at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let u = self.unit(x);
        let psi = DVector::from_iterator(self.n, self.u.iter().map(|ui| matern(&u, ui, &self.theta)));
        let m = DVector::from_vec((self.basis)(&u));
        let mean = m.dot(&self.alpha) + psi.dot(&self.resid_w);
        let g = self.f.transpose() * &self.psi_inv * &psi - &m;
        let var = self.sigma2 * (1.0 - (psi.transpose() * &self.psi_inv * &psi)[(0, 0)] + (g.transpose() * &self.m_inv * &g)[(0, 0)]);
        (self.y_mean + self.y_scale * mean, var * self.y_scale * self.y_scale)
    }

    pub fn neg_log_lik(&self) -> f64 {
        0.5 * (self.n as f64 * self.sigma2.ln() + self.log_det)
    }

    pub fn process_variance(&self) -> f64 {
        self.sigma2 * self.y_scale * self.y_scale
    }
}

/// Random distinct rows in `domain` with a smooth response.
pub fn random_dataset<R: Rng>(n: usize, domain: &Domain, rng: &mut R) -> Arc<Dataset> {
    let d = domain.dim();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|k| domain.lower[k] + rng.gen::<f64>() * domain.width(k)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(k, v)| ((k + 1) as f64 * (v - domain.lower[k]) / domain.width(k) * 3.0).sin())
                .sum::<f64>()
                * 10.0
                + 3.0
        })
        .collect();
    Arc::new(Dataset::new(rows, y, domain.clone()).unwrap())
}

/// Central finite-difference gradient.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[k] += h[k];
            b[k] -= h[k];
            (f(&a) - f(&b)) / (2.0 * h[k])
        })
        .collect()
}

/// Largest `|a - b| / max(|b|, floor)` over components.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(floor)).fold(0.0, f64::max)
}

/// Monte-Carlo estimate (mean, standard error) of `E[max(Y - mu, y_max - mu)]`, `Y ~ N(mu, s²)`.
pub fn mc_expected_decrement<R: Rng>(mu: f64, s: f64, y_max: f64, samples: usize, rng: &mut R) -> (f64, f64) {
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        let v = (mu + s * z - mu).max(y_max - mu);
        sum += v;
        sum2 += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = (sum2 / m - mean * mean).max(0.0) * m / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Same for `E[max(Y - y_max, 0)]`.
pub fn mc_expected_improvement<R: Rng>(mu: f64, s: f64, y_max: f64, samples: usize, rng: &mut R) -> (f64, f64) {
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        let v = (mu + s * z - y_max).max(0.0);
        sum += v;
        sum2 += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = (sum2 / m - mean * mean).max(0.0) * m / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Smooth synthetic `(mu, s)` surfaces over `R^2` with analytic gradients.
pub fn synthetic_surface(x: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
    let mu = x[0].sin() + 0.5 * x[1] * x[1];
    let s = (0.3 * x[0] - 0.2 * x[1]).exp();
    (mu, s, vec![x[0].cos(), x[1]], vec![0.3 * s, -0.2 * s])
}
