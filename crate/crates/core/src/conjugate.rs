//! Conjugate Normal-inverse-Gamma machinery for one Gaussian linear-regression
//! mixture component.
//!
//! A component emits `y | x ~ N(x^T w, sigma2)` with the prior
//! `sigma2 ~ IG(alpha, beta)`, `w | sigma2 ~ N(u, sigma2 * V)`. Everything in
//! this module is exact: posterior hyperparameters come from sufficient
//! statistics, the single-point predictive is a Student-t and a block of
//! observations follows a matrix-t.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A context vector `x` of fixed dimension `d`.
pub type ContextVector = DVector<f64>;

const SYMMETRY_TOL: f64 = 1e-9;

/// Normal-inverse-Gamma hyperparameters `(u, V, alpha, beta)`.
///
/// The coefficient covariance shape is held in precision form `V^{-1}`
/// together with its Cholesky factor and the derived `V`, all fixed at
/// construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NigHyperRepr", into = "NigHyperRepr")]
pub struct NigHyper {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
    precision_chol: DMatrix<f64>,
    covariance: DMatrix<f64>,
    log_det_precision: f64,
    alpha: f64,
    beta: f64,
    // lnG((nu+1)/2) - lnG(nu/2) - ln(nu*pi)/2 for nu = 2 alpha
    student_log_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct NigHyperRepr {
    u: Vec<f64>,
    precision: Vec<Vec<f64>>,
    alpha: f64,
    beta: f64,
}

impl TryFrom<NigHyperRepr> for NigHyper {
    type Error = Error;

    fn try_from(repr: NigHyperRepr) -> Result<Self> {
        let d = repr.u.len();
        let precision = matrix_from_rows(&repr.precision, d)?;
        NigHyper::from_precision(DVector::from_vec(repr.u), precision, repr.alpha, repr.beta)
    }
}

impl From<NigHyper> for NigHyperRepr {
    fn from(h: NigHyper) -> Self {
        let d = h.dim();
        NigHyperRepr {
            u: h.mean.iter().copied().collect(),
            precision: (0..d)
                .map(|i| (0..d).map(|j| h.precision[(i, j)]).collect())
                .collect(),
            alpha: h.alpha,
            beta: h.beta,
        }
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidHyper(format!(
            "expected a {d}x{d} matrix, got {} rows",
            rows.len()
        )));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl NigHyper {
    /// Builds hyperparameters from the covariance-shape form `V`.
    pub fn new(u: DVector<f64>, v: DMatrix<f64>, alpha: f64, beta: f64) -> Result<Self> {
        check_square(&v, u.len())?;
        check_symmetric(&v)?;
        let chol = v
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("V"))?;
        Self::from_precision(u, chol.inverse(), alpha, beta)
    }

    /// Builds hyperparameters from the precision form `V^{-1}`.
    pub fn from_precision(
        u: DVector<f64>,
        precision: DMatrix<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let d = u.len();
        if d == 0 {
            return Err(Error::InvalidHyper("dimension must be at least 1".into()));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHyper("mean u must be finite".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidHyper(format!("alpha must be > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidHyper(format!("beta must be > 0, got {beta}")));
        }
        check_square(&precision, d)?;
        check_symmetric(&precision)?;
        let precision = symmetrize(precision);
        Self::assemble(u, precision, alpha, beta)
    }

    /// Default weakly informative prior: `u = 0`, `V = I`, `alpha = beta = 1`.
    pub fn standard(d: usize) -> Self {
        Self::assemble(DVector::zeros(d), DMatrix::identity(d, d), 1.0, 1.0)
            .expect("identity precision is positive definite")
    }

    fn assemble(u: DVector<f64>, precision: DMatrix<f64>, alpha: f64, beta: f64) -> Result<Self> {
        if precision.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("V^-1 has non-finite entries"));
        }
        let chol = precision
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("V^-1"))?;
        let log_det_precision = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let covariance = symmetrize(chol.inverse());
        let nu = 2.0 * alpha;
        let student_log_norm =
            ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
        Ok(Self {
            mean: u,
            precision,
            precision_chol: chol.l(),
            covariance,
            log_det_precision,
            alpha,
            beta,
            student_log_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Coefficient mean `u`.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Coefficient covariance shape `V`.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Precision form `V^{-1}`.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ln |V^{-1}|`.
    pub fn log_det_precision(&self) -> f64 {
        self.log_det_precision
    }

    /// Parameters `(nu, m, r^2)` of the Student-t predictive at `x`.
    pub fn predictive_params(&self, x: &ContextVector) -> (f64, f64, f64) {
        let m = dot(x.as_slice(), self.mean.as_slice());
        let q = quad_form(&self.covariance, x.as_slice());
        (2.0 * self.alpha, m, self.beta / self.alpha * (1.0 + q))
    }

    /// Log Student-t predictive density of `y` at context `x`.
    pub fn log_predictive(&self, x: &ContextVector, y: f64) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let (nu, m, r2) = self.predictive_params(x);
        let z = (y - m) * (y - m) / (nu * r2);
        self.student_log_norm - 0.5 * r2.ln() - 0.5 * (nu + 1.0) * z.ln_1p()
    }

    /// Draws `(w, sigma2)` from the NIG distribution.
    pub fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> GaussianLinearParams {
        let gamma = Gamma::new(self.alpha, 1.0 / self.beta).expect("validated shape and scale");
        let precision_draw: f64 = gamma.sample(rng);
        let sigma2 = 1.0 / precision_draw;
        let d = self.dim();
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        // L L^T = V^{-1}  =>  L^{-T} z ~ N(0, V)
        let white = self
            .precision_chol
            .tr_solve_lower_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        let w = &self.mean + white * sigma2.sqrt();
        GaussianLinearParams { w, sigma2 }
    }
}

fn check_square(m: &DMatrix<f64>, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::InvalidHyper(format!(
            "expected a {d}x{d} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidHyper("matrix is not symmetric".into()));
            }
        }
    }
    Ok(())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn quad_form(m: &DMatrix<f64>, x: &[f64]) -> f64 {
    let d = x.len();
    let mut acc = 0.0;
    for j in 0..d {
        let col = m.column(j);
        let mut s = 0.0;
        for i in 0..d {
            s += col[i] * x[i];
        }
        acc += s * x[j];
    }
    acc
}

/// Regression coefficients and noise variance of one Gaussian component.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianLinearParams {
    pub w: DVector<f64>,
    pub sigma2: f64,
}

impl GaussianLinearParams {
    pub fn mean_at(&self, x: &ContextVector) -> f64 {
        dot(self.w.as_slice(), x.as_slice())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Add,
    Remove,
}

/// Sufficient statistics of the observations assigned to one component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    count: usize,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    energy: f64,
}

impl ComponentStats {
    pub fn empty(d: usize) -> Self {
        Self {
            count: 0,
            gram: DMatrix::zeros(d, d),
            cross: DVector::zeros(d),
            energy: 0.0,
        }
    }

    /// Batch construction from `(x, y)` pairs.
    pub fn from_observations<'a, I>(d: usize, obs: I) -> Self
    where
        I: IntoIterator<Item = (&'a ContextVector, f64)>,
    {
        let mut stats = Self::empty(d);
        let mut xs: Vec<&ContextVector> = Vec::new();
        let mut ys = Vec::new();
        for (x, y) in obs {
            xs.push(x);
            ys.push(y);
        }
        if xs.is_empty() {
            return stats;
        }
        let design = DMatrix::from_fn(d, xs.len(), |i, j| xs[j][i]);
        let y = DVector::from_vec(ys);
        stats.count = xs.len();
        stats.gram = &design * design.transpose();
        stats.cross = &design * &y;
        stats.energy = y.dot(&y);
        stats
    }

    pub fn dim(&self) -> usize {
        self.cross.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `sum x x^T`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `sum x y`.
    pub fn cross(&self) -> &DVector<f64> {
        &self.cross
    }

    /// `sum y^2`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn accumulate(&mut self, x: &ContextVector, y: f64, direction: Direction) -> Result<()> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let sign = match direction {
            Direction::Add => 1.0,
            Direction::Remove => {
                if self.count == 0 {
                    return Err(Error::RemoveFromEmpty);
                }
                -1.0
            }
        };
        for j in 0..d {
            for i in 0..d {
                self.gram[(i, j)] += sign * x[i] * x[j];
            }
            self.cross[j] += sign * x[j] * y;
        }
        self.energy += sign * y * y;
        match direction {
            Direction::Add => self.count += 1,
            Direction::Remove => self.count -= 1,
        }
        Ok(())
    }

    pub fn add(&mut self, x: &ContextVector, y: f64) -> Result<()> {
        self.accumulate(x, y, Direction::Add)
    }

    pub fn remove(&mut self, x: &ContextVector, y: f64) -> Result<()> {
        self.accumulate(x, y, Direction::Remove)
    }
}

/// Posterior NIG hyperparameters after conditioning `prior` on `stats`.
pub fn posterior_update(prior: &NigHyper, stats: &ComponentStats) -> Result<NigHyper> {
    if stats.dim() != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            got: stats.dim(),
        });
    }
    if stats.count == 0 {
        return Ok(prior.clone());
    }
    let precision = symmetrize(&stats.gram + &prior.precision);
    let prior_pu = &prior.precision * &prior.mean;
    let rhs = &stats.cross + &prior_pu;
    let chol = precision
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("posterior V^-1"))?;
    let u = chol.solve(&rhs);
    let alpha = prior.alpha + 0.5 * stats.count as f64;
    let prior_quad = prior.mean.dot(&prior_pu);
    let post_quad = u.dot(&rhs);
    let beta = prior.beta + 0.5 * (stats.energy + prior_quad - post_quad);
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::NonPositiveScale(beta));
    }
    NigHyper::assemble(u, precision, alpha, beta)
}

/// Log marginal likelihood of the observations summarized by a posterior,
/// computed from the prior and posterior normalizers. `n` is the number of
/// observations behind `posterior`.
pub fn log_evidence(prior: &NigHyper, posterior: &NigHyper, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    ln_gamma(posterior.alpha) - ln_gamma(prior.alpha) + prior.alpha * prior.beta.ln()
        - posterior.alpha * posterior.beta.ln()
        + 0.5 * (prior.log_det_precision - posterior.log_det_precision)
        - 0.5 * n as f64 * (2.0 * PI).ln()
}

/// Matrix-t log density of a block of rewards `y` with contexts `x` (one
/// column per observation) under `prior`:
/// `nu = 2 alpha`, `M = X^T u`, `Psi = I + X^T V X`, `Omega = 2 beta`.
pub fn log_marginal_block(prior: &NigHyper, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let n = y.len();
    assert_eq!(x.ncols(), n, "one context column per reward");
    assert_eq!(x.nrows(), prior.dim(), "context dimension");
    if n == 0 {
        return 0.0;
    }
    let nu = 2.0 * prior.alpha;
    let omega = 2.0 * prior.beta;
    let psi = DMatrix::identity(n, n) + x.transpose() * &prior.covariance * x;
    let resid = y - x.transpose() * &prior.mean;
    let chol = psi
        .cholesky()
        .expect("I + X^T V X is positive definite for positive definite V");
    let log_det_psi = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let q = resid.dot(&chol.solve(&resid));
    let nf = n as f64;
    ln_gamma(0.5 * (nu + nf)) - ln_gamma(0.5 * nu) - 0.5 * nf * (PI * omega).ln()
        - 0.5 * log_det_psi
        - 0.5 * (nu + nf) * (q / omega).ln_1p()
}

/// Log Student-t predictive density; see [`NigHyper::log_predictive`].
pub fn log_predictive(hyper: &NigHyper, x: &ContextVector, y: f64) -> f64 {
    hyper.log_predictive(x, y)
}

/// Draw from the NIG; see [`NigHyper::sample_params`].
pub fn sample_params<R: Rng + ?Sized>(hyper: &NigHyper, rng: &mut R) -> GaussianLinearParams {
    hyper.sample_params(rng)
}
