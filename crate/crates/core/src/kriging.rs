//! Kriging surrogate with a Matérn 5/2 correlation.
//!
//! Inputs are mapped affinely onto `[0, 1]^d` using the dataset's domain and
//! outputs are standardized to zero mean and unit variance before fitting, so
//! the length-scale parameters `theta` always live in normalized input space.
//! Predictions and gradients are reported back in the original units.
//!
//! [`KrigingModel::predict`] returns the prediction *variance*. Policies work
//! with its square root, the prediction standard deviation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::{solve_dense, Cholesky};
use crate::{Domain, Error, Result};

pub use crate::linalg::JitterLadder;

const SQRT5: f64 = 2.236_067_977_499_79;

/// Decisions and deterministic observations inside a box domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    d: usize,
    domain: Domain,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>, domain: Domain) -> Result<Self> {
        let d = domain.dim();
        if rows.is_empty() {
            return Err(Error::InvalidArgument("dataset needs at least one observation".into()));
        }
        if rows.len() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "{} decisions but {} observations",
                rows.len(),
                y.len()
            )));
        }
        let mut x = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "decision {i} has {} components, domain has {d}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry in row {i}")));
            }
            if !domain.contains(row) {
                return Err(Error::InvalidArgument(format!("decision {i} lies outside the domain")));
            }
            x.extend_from_slice(row);
        }
        let data = Self {
            x,
            y,
            n: rows.len(),
            d,
            domain,
        };
        data.check_distinct()?;
        Ok(data)
    }

    fn check_distinct(&self) -> Result<()> {
        for i in 1..self.n {
            for j in 0..i {
                if self.row(i) == self.row(j) {
                    return Err(Error::DuplicateDecision { first: j, second: i });
                }
            }
        }
        Ok(())
    }

    /// Copy of this dataset with one more observation appended.
    pub fn with_observation(&self, x: &[f64], y: f64) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = self.rows().map(<[f64]>::to_vec).collect();
        rows.push(x.to_vec());
        let mut ys = self.y.clone();
        ys.push(y);
        Self::new(rows, ys, self.domain.clone())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Largest observation so far.
    pub fn y_max(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Monomial trend function `prod_k u_k^{powers[k]}` on normalized inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn constant(d: usize) -> Self {
        Self { powers: vec![0; d] }
    }

    fn is_constant(&self) -> bool {
        self.powers.iter().all(|&p| p == 0)
    }

    fn eval(&self, u: &[f64]) -> f64 {
        self.powers
            .iter()
            .zip(u)
            .map(|(&p, v)| v.powi(p as i32))
            .product()
    }

    fn grad_into(&self, u: &[f64], out: &mut [f64]) {
        for (k, g) in out.iter_mut().enumerate() {
            let pk = self.powers[k];
            *g = if pk == 0 {
                0.0
            } else {
                self.powers
                    .iter()
                    .zip(u)
                    .enumerate()
                    .map(|(j, (&p, v))| {
                        if j == k {
                            p as f64 * v.powi(p as i32 - 1)
                        } else {
                            v.powi(p as i32)
                        }
                    })
                    .product()
            };
        }
    }
}

/// Regression trend of a Kriging model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSet {
    functions: Vec<Monomial>,
}

impl BasisSet {
    /// Ordinary Kriging: a single constant trend.
    pub fn ordinary() -> Self {
        Self {
            functions: vec![Monomial { powers: Vec::new() }],
        }
    }

    pub fn new(functions: Vec<Monomial>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidArgument("basis set must not be empty".into()));
        }
        Ok(Self { functions })
    }

    /// Constant, linear and pure quadratic terms in every coordinate.
    pub fn pure_quadratic(d: usize) -> Self {
        let mut functions = vec![Monomial::constant(d)];
        for power in 1..=2 {
            for k in 0..d {
                let mut powers = vec![0; d];
                powers[k] = power;
                functions.push(Monomial { powers });
            }
        }
        Self { functions }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        for f in &self.functions {
            if !f.powers.is_empty() && f.powers.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "basis monomial has {} powers for a {d}-dimensional input",
                    f.powers.len()
                )));
            }
        }
        Ok(())
    }

    fn constant_index(&self) -> Option<usize> {
        self.functions.iter().position(Monomial::is_constant)
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.functions) {
            *o = if f.powers.is_empty() { 1.0 } else { f.eval(u) };
        }
    }

    /// Row-major `p x d` Jacobian.
    fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        let d = u.len();
        for (i, f) in self.functions.iter().enumerate() {
            let row = &mut out[i * d..(i + 1) * d];
            if f.powers.is_empty() {
                row.iter_mut().for_each(|g| *g = 0.0);
            } else {
                f.grad_into(u, row);
            }
        }
    }
}

/// Positive anisotropic length-scale parameters, one per input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters(Vec<f64>);

impl Hyperparameters {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidArgument("theta must have at least one component".into()));
        }
        if let Some(bad) = theta.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "theta components must be positive and finite, got {bad}"
            )));
        }
        Ok(Self(theta))
    }

    pub fn from_log10(log_theta: &[f64]) -> Result<Self> {
        Self::new(log_theta.iter().map(|v| 10f64.powf(*v)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn log10(&self) -> Vec<f64> {
        self.0.iter().map(|t| t.log10()).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn check_pair(xi: &[f64], xj: &[f64], theta: &Hyperparameters) -> Result<()> {
    if xi.len() != theta.dim() || xj.len() != theta.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} / {} inputs for {} length scales",
            xi.len(),
            xj.len(),
            theta.dim()
        )));
    }
    if xi.iter().chain(xj).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite kernel input".into()));
    }
    Ok(())
}

#[inline]
fn scaled_sq_dist(xi: &[f64], xj: &[f64], theta: &[f64]) -> f64 {
    xi.iter()
        .zip(xj)
        .zip(theta)
        .map(|((a, b), t)| t * (a - b) * (a - b))
        .sum()
}

#[inline]
fn matern52_from_sq(l2: f64) -> f64 {
    let l = l2.sqrt();
    (1.0 + SQRT5 * l + 5.0 * l2 / 3.0) * (-SQRT5 * l).exp()
}

/// Matérn 5/2 correlation `(1 + √5 l + 5 l²/3) exp(-√5 l)` with
/// `l² = Σ_k θ_k (xi_k - xj_k)²`.
pub fn matern52(xi: &[f64], xj: &[f64], theta: &Hyperparameters) -> Result<f64> {
    check_pair(xi, xj, theta)?;
    Ok(matern52_from_sq(scaled_sq_dist(xi, xj, theta.values())))
}

#[inline]
fn matern52_grad_into(xi: &[f64], xj: &[f64], theta: &[f64], out: &mut [f64]) -> f64 {
    let l2 = scaled_sq_dist(xi, xj, theta);
    let l = l2.sqrt();
    let e = (-SQRT5 * l).exp();
    // dψ/dl · dl/dxi_k with the 1/l factor cancelled analytically.
    let c = -5.0 / 3.0 * (1.0 + SQRT5 * l) * e;
    for (k, o) in out.iter_mut().enumerate() {
        *o = c * theta[k] * (xi[k] - xj[k]);
    }
    (1.0 + SQRT5 * l + 5.0 * l2 / 3.0) * e
}

/// Gradient of [`matern52`] with respect to `xi`.
pub fn matern52_gradient(xi: &[f64], xj: &[f64], theta: &Hyperparameters) -> Result<Vec<f64>> {
    check_pair(xi, xj, theta)?;
    let mut out = vec![0.0; xi.len()];
    matern52_grad_into(xi, xj, theta.values(), &mut out);
    Ok(out)
}

/// Correlation matrix of normalized inputs `u` (row-major `n x d`), unit diagonal.
pub(crate) fn correlation_matrix(u: &[f64], n: usize, d: usize, theta: &[f64]) -> Vec<f64> {
    let mut psi = vec![0.0; n * n];
    for i in 0..n {
        psi[i * n + i] = 1.0;
        let ui = &u[i * d..(i + 1) * d];
        for j in 0..i {
            let v = matern52_from_sq(scaled_sq_dist(ui, &u[j * d..(j + 1) * d], theta));
            psi[i * n + j] = v;
            psi[j * n + i] = v;
        }
    }
    psi
}

/// Dataset mapped to normalized coordinates together with its trend matrix.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub u: Vec<f64>,
    pub yn: Vec<f64>,
    pub f: Vec<f64>,
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub y_mean: f64,
    pub y_scale: f64,
}

impl Prepared {
    pub fn new(data: &Dataset, basis: &BasisSet) -> Result<Self> {
        let (n, d, p) = (data.len(), data.dim(), basis.len());
        basis.check_dim(d)?;
        if n < p {
            return Err(Error::InsufficientData { n, p });
        }
        let domain = data.domain();
        let mut u = Vec::with_capacity(n * d);
        for row in data.rows() {
            u.extend(domain.to_unit(row));
        }
        let y_mean = data.y().iter().sum::<f64>() / n as f64;
        let var = data.y().iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 && var.sqrt().is_finite() { var.sqrt() } else { 1.0 };
        let yn = data.y().iter().map(|v| (v - y_mean) / y_scale).collect();
        let mut f = vec![0.0; n * p];
        for i in 0..n {
            basis.eval_into(&u[i * d..(i + 1) * d], &mut f[i * p..(i + 1) * p]);
        }
        Ok(Self {
            u,
            yn,
            f,
            n,
            d,
            p,
            y_mean,
            y_scale,
        })
    }

    pub fn factor(&self, theta: &Hyperparameters, ladder: &JitterLadder) -> Result<Cholesky> {
        if theta.dim() != self.d {
            return Err(Error::InvalidArgument(format!(
                "theta has {} components for {}-dimensional data",
                theta.dim(),
                self.d
            )));
        }
        let psi = correlation_matrix(&self.u, self.n, self.d, theta.values());
        Cholesky::with_ladder(&psi, self.n, ladder).ok_or_else(|| Error::IllConditioned {
            theta: theta.values().to_vec(),
            max_jitter: ladder.max,
        })
    }
}

/// Generalized least squares quantities for a factored correlation matrix.
#[derive(Debug, Clone)]
pub(crate) struct Gls {
    pub alpha: Vec<f64>,
    pub sigma2: f64,
    /// `(FᵀΨ⁻¹F)⁻¹`, row-major `p x p`.
    pub m_inv: Vec<f64>,
    /// `L⁻¹F`, stored column by column (`p` columns of length `n`).
    pub ft_cols: Vec<Vec<f64>>,
    /// `L⁻¹(y - Fα)`.
    pub resid_t: Vec<f64>,
}

pub(crate) fn gls(prep: &Prepared, chol: &Cholesky) -> Option<Gls> {
    let (n, p) = (prep.n, prep.p);
    let ft_cols: Vec<Vec<f64>> = (0..p)
        .map(|k| {
            let mut col: Vec<f64> = (0..n).map(|i| prep.f[i * p + k]).collect();
            chol.solve_lower(&mut col);
            col
        })
        .collect();
    let mut yt = prep.yn.clone();
    chol.solve_lower(&mut yt);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut m = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..p {
            m[a * p + b] = dot(&ft_cols[a], &ft_cols[b]);
        }
    }
    let rhs: Vec<f64> = ft_cols.iter().map(|c| dot(c, &yt)).collect();
    let alpha = solve_dense(m.clone(), rhs, p)?;
    let mut m_inv = vec![0.0; p * p];
    for k in 0..p {
        let mut e = vec![0.0; p];
        e[k] = 1.0;
        let col = solve_dense(m.clone(), e, p)?;
        for (r, v) in col.into_iter().enumerate() {
            m_inv[r * p + k] = v;
        }
    }
    let resid_t: Vec<f64> = (0..n)
        .map(|i| yt[i] - (0..p).map(|k| ft_cols[k][i] * alpha[k]).sum::<f64>())
        .collect();
    let sigma2 = (dot(&resid_t, &resid_t) / n as f64).max(0.0);
    if !sigma2.is_finite() || alpha.iter().any(|a| !a.is_finite()) {
        return None;
    }
    Some(Gls {
        alpha,
        sigma2,
        m_inv,
        ft_cols,
        resid_t,
    })
}

/// Options controlling model construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub ladder: JitterLadder,
}

/// Prediction mean and (clamped) variance in output units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
    /// Variance before clamping at zero.
    pub unclamped_variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Gradients of the prediction mean and variance with respect to `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGradient {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// A fitted Kriging surrogate. Immutable once built.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    data: Arc<Dataset>,
    basis: BasisSet,
    theta: Hyperparameters,
    chol: Cholesky,
    u: Vec<f64>,
    alpha: Vec<f64>,
    sigma2: f64,
    m_inv: Vec<f64>,
    ft_cols: Vec<Vec<f64>>,
    /// `Ψ⁻¹(y - Fα)`.
    weights: Vec<f64>,
    /// `Ψ⁻¹F`, row-major `n x p`.
    psi_inv_f: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
}

/// Fit with default options.
pub fn fit(data: Arc<Dataset>, basis: &BasisSet, theta: &Hyperparameters) -> Result<KrigingModel> {
    KrigingModel::fit(data, basis, theta, &FitOptions::default())
}

impl KrigingModel {
    pub fn fit(
        data: Arc<Dataset>,
        basis: &BasisSet,
        theta: &Hyperparameters,
        options: &FitOptions,
    ) -> Result<Self> {
        let prep = Prepared::new(&data, basis)?;
        Self::from_prepared(data, basis, theta, &prep, options)
    }

    pub(crate) fn from_prepared(
        data: Arc<Dataset>,
        basis: &BasisSet,
        theta: &Hyperparameters,
        prep: &Prepared,
        options: &FitOptions,
    ) -> Result<Self> {
        let chol = prep.factor(theta, &options.ladder)?;
        let ill = || Error::IllConditioned {
            theta: theta.values().to_vec(),
            max_jitter: options.ladder.max,
        };
        let g = gls(prep, &chol).ok_or_else(ill)?;
        let (n, p) = (prep.n, prep.p);
        let mut weights = g.resid_t.clone();
        chol.solve_upper(&mut weights);
        let mut psi_inv_f = vec![0.0; n * p];
        for (k, col) in g.ft_cols.iter().enumerate() {
            let mut c = col.clone();
            chol.solve_upper(&mut c);
            for (i, v) in c.into_iter().enumerate() {
                psi_inv_f[i * p + k] = v;
            }
        }
        Ok(Self {
            data,
            basis: basis.clone(),
            theta: theta.clone(),
            chol,
            u: prep.u.clone(),
            alpha: g.alpha,
            sigma2: g.sigma2,
            m_inv: g.m_inv,
            ft_cols: g.ft_cols,
            weights,
            psi_inv_f,
            y_mean: prep.y_mean,
            y_scale: prep.y_scale,
        })
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn theta(&self) -> &Hyperparameters {
        &self.theta
    }

    /// Diagonal jitter that was needed for the factorization.
    pub fn jitter(&self) -> f64 {
        self.chol.jitter()
    }

    /// Row-major lower Cholesky factor of `Ψ + jitter·I` (normalized inputs).
    pub fn cholesky_factor(&self) -> &[f64] {
        self.chol.factor()
    }

    /// GLS trend coefficients in output units. The output mean is folded into
    /// the constant term when the basis has one.
    pub fn alpha(&self) -> Vec<f64> {
        let c = self.basis.constant_index();
        self.alpha
            .iter()
            .enumerate()
            .map(|(k, a)| a * self.y_scale + if Some(k) == c { self.y_mean } else { 0.0 })
            .collect()
    }

    /// Process variance σ² in squared output units.
    pub fn process_variance(&self) -> f64 {
        self.sigma2 * self.y_scale * self.y_scale
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.data.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected a {}-dimensional decision, got {}",
                self.data.dim(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite decision".into()));
        }
        Ok(())
    }

    fn correlations(&self, u: &[f64]) -> Vec<f64> {
        let d = u.len();
        let th = self.theta.values();
        self.u
            .chunks_exact(d)
            .map(|ui| matern52_from_sq(scaled_sq_dist(u, ui, th)))
            .collect()
    }

    /// Prediction mean only; skips the triangular solve.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let u = self.data.domain().to_unit(x);
        let r = self.correlations(&u);
        let mut m = vec![0.0; self.basis.len()];
        self.basis.eval_into(&u, &mut m);
        let mean_n = dot(&m, &self.alpha) + dot(&r, &self.weights);
        Ok(self.y_mean + self.y_scale * mean_n)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_input(x)?;
        let u = self.data.domain().to_unit(x);
        let r = self.correlations(&u);
        let mut m = vec![0.0; self.basis.len()];
        self.basis.eval_into(&u, &mut m);
        let mean_n = dot(&m, &self.alpha) + dot(&r, &self.weights);
        let mut v = r;
        self.chol.solve_lower(&mut v);
        let g = self.trend_gap(&v, &m);
        let var_n = self.sigma2 * (1.0 - dot(&v, &v) + self.quad_m_inv(&g));
        let s2 = self.y_scale * self.y_scale;
        Ok(Prediction {
            mean: self.y_mean + self.y_scale * mean_n,
            variance: (var_n * s2).max(0.0),
            unclamped_variance: var_n * s2,
        })
    }

    /// `FᵀΨ⁻¹r - m(x)` given `v = L⁻¹r`.
    fn trend_gap(&self, v: &[f64], m: &[f64]) -> Vec<f64> {
        self.ft_cols
            .iter()
            .zip(m)
            .map(|(col, mk)| dot(col, v) - mk)
            .collect()
    }

    fn quad_m_inv(&self, g: &[f64]) -> f64 {
        let p = g.len();
        (0..p)
            .map(|a| g[a] * (0..p).map(|b| self.m_inv[a * p + b] * g[b]).sum::<f64>())
            .sum()
    }

    /// Analytic gradients of the prediction mean and unclamped variance.
    pub fn predict_gradient(&self, x: &[f64]) -> Result<PredictionGradient> {
        self.check_input(x)?;
        let domain = self.data.domain();
        let d = x.len();
        let (n, p) = (self.data.len(), self.basis.len());
        let u = domain.to_unit(x);
        let th = self.theta.values();

        // J: row-major n x d, dψ(u, u_i)/du.
        let mut jac = vec![0.0; n * d];
        let mut r = vec![0.0; n];
        for i in 0..n {
            r[i] = matern52_grad_into(&u, &self.u[i * d..(i + 1) * d], th, &mut jac[i * d..(i + 1) * d]);
        }
        let mut m = vec![0.0; p];
        self.basis.eval_into(&u, &mut m);
        let mut jm = vec![0.0; p * d];
        self.basis.jacobian_into(&u, &mut jm);

        let mut v = r;
        self.chol.solve_lower(&mut v);
        let g = self.trend_gap(&v, &m);
        let mut a = v;
        self.chol.solve_upper(&mut a);
        // gᵀ M⁻¹
        let gm: Vec<f64> = (0..p)
            .map(|b| (0..p).map(|c| g[c] * self.m_inv[c * p + b]).sum())
            .collect();

        let mut dmean = vec![0.0; d];
        let mut dvar = vec![0.0; d];
        for k in 0..d {
            let mut dm = (0..p).map(|b| jm[b * d + k] * self.alpha[b]).sum::<f64>();
            let mut a_j = 0.0;
            let mut fj = vec![0.0; p];
            for i in 0..n {
                let jik = jac[i * d + k];
                dm += jik * self.weights[i];
                a_j += a[i] * jik;
                for (b, fb) in fj.iter_mut().enumerate() {
                    *fb += self.psi_inv_f[i * p + b] * jik;
                }
            }
            let dg_term: f64 = (0..p).map(|b| gm[b] * (fj[b] - jm[b * d + k])).sum();
            let scale = 1.0 / domain.width(k);
            dmean[k] = self.y_scale * dm * scale;
            dvar[k] = self.y_scale * self.y_scale * self.sigma2 * (-2.0 * a_j + 2.0 * dg_term) * scale;
        }
        Ok(PredictionGradient {
            mean: dmean,
            variance: dvar,
        })
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(xs: &[f64], ys: &[f64]) -> Arc<Dataset> {
        Arc::new(
            Dataset::new(
                xs.iter().map(|v| vec![*v]).collect(),
                ys.to_vec(),
                Domain::unit(1),
            )
            .unwrap(),
        )
    }

    #[test]
    fn kernel_is_one_at_coincident_points() {
        let th = Hyperparameters::new(vec![3.0, 0.1]).unwrap();
        assert_eq!(matern52(&[0.3, -2.0], &[0.3, -2.0], &th).unwrap(), 1.0);
        assert_eq!(matern52_gradient(&[0.3, -2.0], &[0.3, -2.0], &th).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn kernel_at_unit_distance() {
        // Evaluated term by term: (1 + √5 + 5/3)·exp(-√5).
        let l = 1.0f64;
        let expected = (1.0 + 5f64.sqrt() * l + 5.0 * l * l / 3.0) * (-(5f64.sqrt()) * l).exp();
        let th = Hyperparameters::new(vec![1.0]).unwrap();
        let got = matern52(&[0.0], &[1.0], &th).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.523_994).abs() < 1e-6);
    }

    #[test]
    fn kernel_rejects_nonfinite() {
        let th = Hyperparameters::new(vec![1.0]).unwrap();
        assert!(matern52(&[f64::NAN], &[0.0], &th).is_err());
        assert!(matern52_gradient(&[0.0], &[f64::INFINITY], &th).is_err());
    }

    #[test]
    fn hyperparameters_must_be_positive() {
        assert!(Hyperparameters::new(vec![1.0, 0.0]).is_err());
        assert!(Hyperparameters::new(vec![f64::INFINITY]).is_err());
        assert!(Hyperparameters::new(vec![]).is_err());
    }

    #[test]
    fn single_point_model() {
        let data = one_d(&[0.4], &[2.5]);
        let th = Hyperparameters::new(vec![10.0]).unwrap();
        let model = fit(data, &BasisSet::ordinary(), &th).unwrap();
        assert_eq!(model.alpha(), vec![2.5]);
        assert_eq!(model.process_variance(), 0.0);
        let p = model.predict(&[0.9]).unwrap();
        assert!((p.mean - 2.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_rows_rejected() {
        let err = Dataset::new(vec![vec![0.1], vec![0.1]], vec![1.0, 2.0], Domain::unit(1)).unwrap_err();
        assert!(matches!(err, Error::DuplicateDecision { first: 0, second: 1 }));
    }

    #[test]
    fn out_of_domain_rows_rejected() {
        assert!(Dataset::new(vec![vec![1.5]], vec![1.0], Domain::unit(1)).is_err());
    }

    #[test]
    fn insufficient_data_for_basis() {
        let data = Arc::new(
            Dataset::new(vec![vec![0.1, 0.2], vec![0.5, 0.5]], vec![1.0, 2.0], Domain::unit(2)).unwrap(),
        );
        let th = Hyperparameters::new(vec![1.0, 1.0]).unwrap();
        let err = fit(data, &BasisSet::pure_quadratic(2), &th).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { n: 2, p: 5 }));
    }

    #[test]
    fn ill_conditioned_error_names_theta() {
        let data = one_d(&[0.5, 0.5 + 1e-15], &[0.0, 1.0]);
        let th = Hyperparameters::new(vec![1e3]).unwrap();
        let strict = FitOptions {
            ladder: JitterLadder {
                initial: 0.0,
                factor: 10.0,
                max: 0.0,
            },
        };
        match KrigingModel::fit(data.clone(), &BasisSet::ordinary(), &th, &strict) {
            Err(Error::IllConditioned { theta, .. }) => assert_eq!(theta, vec![1e3]),
            other => panic!("expected ill-conditioned error, got {other:?}"),
        }
        // The default ladder rescues the same matrix.
        let model = fit(data, &BasisSet::ordinary(), &th).unwrap();
        assert!(model.jitter() >= 1e-10);
    }

    #[test]
    fn constant_response_has_flat_mean() {
        let data = Arc::new(
            Dataset::new(
                vec![vec![0.1, 0.9], vec![0.4, 0.2], vec![0.8, 0.6]],
                vec![3.0; 3],
                Domain::unit(2),
            )
            .unwrap(),
        );
        let th = Hyperparameters::new(vec![4.0, 2.0]).unwrap();
        let model = fit(data, &BasisSet::ordinary(), &th).unwrap();
        let g = model.predict_gradient(&[0.33, 0.47]).unwrap();
        assert!(g.mean.iter().all(|v| v.abs() < 1e-12));
        assert!((model.predict(&[0.5, 0.5]).unwrap().mean - 3.0).abs() < 1e-12);
    }

    #[test]
    fn far_field_reverts_to_trend() {
        let data = one_d(&[0.1, 0.2, 0.3], &[1.0, 3.0, 2.0]);
        let th = Hyperparameters::new(vec![1000.0]).unwrap();
        let model = fit(data, &BasisSet::ordinary(), &th).unwrap();
        let p = model.predict(&[1.0]).unwrap();
        assert!((p.mean - model.alpha()[0]).abs() < 1e-6);
        assert!(p.variance >= model.process_variance());
    }

    #[test]
    fn variance_gradient_vanishes_at_training_points() {
        let data = one_d(&[0.1, 0.45, 0.8], &[1.0, -1.0, 0.5]);
        let th = Hyperparameters::new(vec![20.0]).unwrap();
        let model = fit(data, &BasisSet::ordinary(), &th).unwrap();
        let g = model.predict_gradient(&[0.45]).unwrap();
        assert!(g.variance[0].abs() < 1e-6 * model.process_variance().max(1.0));
        let p = model.predict(&[0.45]).unwrap();
        assert!((p.mean + 1.0).abs() < 1e-8);
        assert!(p.variance < 1e-8 * model.process_variance());
    }

    #[test]
    fn quadratic_basis_recovers_trend_exactly() {
        let f = |x: &[f64]| 1.0 - (x[0] - 0.6).powi(2) - (x[1] - 0.2).powi(2);
        let rows = vec![
            vec![0.1, 0.1],
            vec![0.9, 0.3],
            vec![0.5, 0.8],
            vec![0.3, 0.5],
            vec![0.7, 0.9],
            vec![0.2, 0.7],
            vec![0.8, 0.05],
        ];
        let y = rows.iter().map(|r| f(r)).collect();
        let data = Arc::new(Dataset::new(rows, y, Domain::unit(2)).unwrap());
        let th = Hyperparameters::new(vec![5.0, 5.0]).unwrap();
        let model = fit(data, &BasisSet::pure_quadratic(2), &th).unwrap();
        for x in [[0.6, 0.2], [0.0, 1.0], [0.33, 0.71]] {
            assert!((model.predict_mean(&x).unwrap() - f(&x)).abs() < 1e-7);
        }
    }
}
