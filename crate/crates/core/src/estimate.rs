//! OLS, GLS (known volatility) and adaptive least squares (kernel-estimated
//! volatility) fits of a VAR(p), with the sample moment matrices used by
//! the residual diagnostics.
//!
//! All sums run over t = 1..T with zero pre-sample values, so the first
//! regressors are partly or wholly zero. With `X̃_{t-1}` the stacked lags,
//!
//! ```text
//! OLS: θ̂ = (T⁻¹Σ X̃X̃' ⊗ I_d)⁻¹ vec(T⁻¹Σ X_t X̃'),
//! GLS: θ̂ = (T⁻¹Σ X̃X̃' ⊗ Σ_t⁻¹)⁻¹ vec(T⁻¹Σ Σ_t⁻¹ X_t X̃').
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matnum::{self, Matrix, Vector};
use crate::model::{matrix_to_rows, TimeSeries, VarCoefficients, VolCurve};
use crate::volatility::{self, KernelConfig, VolPathEstimate};

/// Design matrices with a condition number above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ols,
    Gls,
    Als,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ols => "OLS",
            Method::Gls => "GLS",
            Method::Als => "ALS",
        })
    }
}

/// Volatility information attached to a fit.
#[derive(Debug, Clone, PartialEq)]
pub enum VolSource {
    None,
    Known(VolCurve),
    Estimated(VolPathEstimate),
}

/// A fitted VAR(p).
#[derive(Debug, Clone, PartialEq)]
pub struct VarFit {
    pub method: Method,
    pub coeffs: VarCoefficients,
    /// û_t = X_t − Â X̃_{t-1}.
    pub residuals_u: TimeSeries,
    /// H_t⁻¹ û_t (GLS) or Ȟ_t⁻¹ û_t (ALS).
    pub residuals_eps: Option<TimeSeries>,
    pub vol: VolSource,
    /// Square roots of the volatility path used for weighting (GLS/ALS).
    pub h: Vec<Matrix>,
    pub h_inv: Vec<Matrix>,
    /// Estimated asymptotic covariance of √T(θ̂ − θ₀).
    pub theta_cov: Matrix,
}

impl VarFit {
    pub fn len(&self) -> usize {
        self.residuals_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals_u.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn order(&self) -> usize {
        self.coeffs.order()
    }

    /// Standard errors `sqrt(theta_cov_jj / T)` in θ order.
    pub fn standard_errors(&self) -> Vector {
        let t = self.len() as f64;
        Vector::from_fn(self.theta_cov.nrows(), |j, _| (self.theta_cov[(j, j)].max(0.0) / t).sqrt())
    }

    /// Residuals that feed the method's autocorrelation tests.
    pub fn test_residuals(&self) -> &TimeSeries {
        self.residuals_eps.as_ref().unwrap_or(&self.residuals_u)
    }

    pub fn report(&self) -> FitReport {
        let d = self.dim();
        let p = self.order();
        let se = VarCoefficients::from_theta(d, p, self.standard_errors().as_slice()).expect("theta layout");
        let (bandwidths, cv_score) = match &self.vol {
            VolSource::Estimated(v) => (Some(matrix_to_rows(&v.bandwidths)), Some(v.cv_score).filter(|s| s.is_finite())),
            _ => (None, None),
        };
        FitReport {
            schema_version: 1,
            method: self.method,
            dim: d,
            order: p,
            len: self.len(),
            coefficients: self.coeffs.mats().iter().map(matrix_to_rows).collect(),
            standard_errors: se.mats().iter().map(matrix_to_rows).collect(),
            bandwidths,
            cv_score,
        }
    }
}

/// Serializable summary of a fit; standard errors follow the coefficient
/// layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub method: Method,
    pub dim: usize,
    pub order: usize,
    pub len: usize,
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub standard_errors: Vec<Vec<Vec<f64>>>,
    pub bandwidths: Option<Vec<Vec<f64>>>,
    pub cv_score: Option<f64>,
}

fn check_sample(x: &TimeSeries, p: usize) -> Result<()> {
    let d = x.dim();
    if x.len() <= d * p + 1 {
        return Err(Error::InvalidArgument(format!(
            "sample length {} too short for a VAR({p}) in dimension {d}",
            x.len()
        )));
    }
    Ok(())
}

/// Solves `a z = b` for symmetric PD `a`, rejecting ill-conditioned systems.
fn solve_design(a: &Matrix, b: &Vector) -> Result<(Vector, Matrix)> {
    let a = matnum::symmetrize(a);
    let cond = matnum::condition_number_sym(&a);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularDesign { condition: cond });
    }
    let inv = matnum::inv_spd(&a).map_err(|_| Error::SingularDesign { condition: cond })?;
    Ok((&inv * b, inv))
}

/// `T⁻¹ Σ X̃_{t-1} X̃'_{t-1}` (dp × dp).
pub fn regressor_moment(x: &TimeSeries, p: usize) -> Matrix {
    let dp = x.dim() * p;
    let mut m = Matrix::zeros(dp, dp);
    for t in 0..x.len() {
        let z = x.lagged(t, p);
        m.ger(1.0, &z, &z, 1.0);
    }
    m / x.len() as f64
}

fn residuals(x: &TimeSeries, coeffs: &VarCoefficients) -> Result<TimeSeries> {
    let obs = (0..x.len()).map(|t| x.obs(t) - coeffs.predict(x, t)).collect();
    TimeSeries::from_vectors(x.dim(), obs)
}

fn standardize(u: &TimeSeries, h_inv: &[Matrix]) -> Result<TimeSeries> {
    let obs = u.observations().iter().zip(h_inv).map(|(v, hi)| hi * v).collect();
    TimeSeries::from_vectors(u.dim(), obs)
}

/// Ordinary least squares.
pub fn fit_ols(x: &TimeSeries, p: usize) -> Result<VarFit> {
    check_sample(x, p)?;
    let d = x.dim();
    if p == 0 {
        return Ok(VarFit {
            method: Method::Ols,
            coeffs: VarCoefficients::white_noise(d),
            residuals_u: x.clone(),
            residuals_eps: None,
            vol: VolSource::None,
            h: Vec::new(),
            h_inv: Vec::new(),
            theta_cov: Matrix::zeros(0, 0),
        });
    }
    let len = x.len() as f64;
    let dp = d * p;
    let m = regressor_moment(x, p);
    let mut cross = Matrix::zeros(d, dp);
    for t in 0..x.len() {
        cross.ger(1.0 / len, x.obs(t), &x.lagged(t, p), 1.0);
    }
    // Â = Σ̂_X M⁻¹ is the reshaped solution of the Kronecker system.
    let cond = matnum::condition_number_sym(&m);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularDesign { condition: cond });
    }
    let m_inv = matnum::inv_spd(&m).map_err(|_| Error::SingularDesign { condition: cond })?;
    let a = &cross * &m_inv;
    let coeffs = VarCoefficients::from_theta(d, p, matnum::vec(&a).as_slice())?;
    let u = residuals(x, &coeffs)?;
    let lambda2 = lambda2_hat(x, &u, p);
    let l3_inv = matnum::kron(&m_inv, &Matrix::identity(d, d));
    let theta_cov = matnum::symmetrize(&(&l3_inv * lambda2 * &l3_inv));
    Ok(VarFit {
        method: Method::Ols,
        coeffs,
        residuals_u: u,
        residuals_eps: None,
        vol: VolSource::None,
        h: Vec::new(),
        h_inv: Vec::new(),
        theta_cov,
    })
}

/// Weighted normal equations with weights `Σ_t⁻¹ = H_t⁻¹ H_t⁻¹`. Returns
/// coefficients and the weighted moment `T⁻¹ Σ X̃X̃' ⊗ Σ_t⁻¹`.
fn weighted_fit(x: &TimeSeries, p: usize, h_inv: &[Matrix]) -> Result<(VarCoefficients, Matrix)> {
    let d = x.dim();
    let len = x.len() as f64;
    let k = d * d * p;
    let mut lhs = Matrix::zeros(k, k);
    let mut rhs = Matrix::zeros(d, d * p);
    for t in 0..x.len() {
        let z = x.lagged(t, p);
        let w = &h_inv[t] * &h_inv[t];
        lhs += matnum::kron(&(&z * z.transpose()), &w);
        rhs += &w * x.obs(t) * z.transpose();
    }
    lhs /= len;
    rhs /= len;
    let (theta, _) = solve_design(&lhs, &matnum::vec(&rhs))?;
    Ok((VarCoefficients::from_theta(d, p, theta.as_slice())?, matnum::symmetrize(&lhs)))
}

/// Generalized least squares with the volatility curve known.
pub fn fit_gls(x: &TimeSeries, p: usize, vol: &VolCurve) -> Result<VarFit> {
    check_sample(x, p)?;
    if vol.dim() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "volatility curve has dimension {}, data has {}",
            vol.dim(),
            x.dim()
        )));
    }
    let len = x.len();
    let mut h = Vec::with_capacity(len);
    let mut h_inv = Vec::with_capacity(len);
    for t in 1..=len {
        let r = t as f64 / len as f64;
        let (a, b) = matnum::pd_sqrt_and_inv(&vol.sigma(r)).map_err(|_| Error::NotPositiveDefinite { r })?;
        h.push(a);
        h_inv.push(b);
    }
    weighted_method(x, p, Method::Gls, VolSource::Known(vol.clone()), h, h_inv)
}

/// Adaptive least squares: OLS residuals, kernel volatility estimate,
/// weighted refit.
pub fn fit_als(x: &TimeSeries, p: usize, cfg: &KernelConfig) -> Result<VarFit> {
    let ols = fit_ols(x, p)?;
    fit_als_from_ols(x, &ols, cfg)
}

/// ALS step reusing an existing OLS fit of the same data.
pub fn fit_als_from_ols(x: &TimeSeries, ols: &VarFit, cfg: &KernelConfig) -> Result<VarFit> {
    if ols.method != Method::Ols {
        return Err(Error::InvalidArgument("ALS needs an OLS first step".into()));
    }
    let est = volatility::estimate_vol_path(&ols.residuals_u, cfg)?;
    let h = est.h.clone();
    let h_inv = est.h_inv.clone();
    weighted_method(x, ols.order(), Method::Als, VolSource::Estimated(est), h, h_inv)
}

fn weighted_method(
    x: &TimeSeries,
    p: usize,
    method: Method,
    vol: VolSource,
    h: Vec<Matrix>,
    h_inv: Vec<Matrix>,
) -> Result<VarFit> {
    let d = x.dim();
    let (coeffs, theta_cov) = if p == 0 {
        (VarCoefficients::white_noise(d), Matrix::zeros(0, 0))
    } else {
        let (coeffs, lambda1) = weighted_fit(x, p, &h_inv)?;
        let inv = matnum::inv_spd(&lambda1).map_err(|_| Error::SingularDesign {
            condition: matnum::condition_number_sym(&lambda1),
        })?;
        (coeffs, inv)
    };
    let u = residuals(x, &coeffs)?;
    let eps = standardize(&u, &h_inv)?;
    Ok(VarFit {
        method,
        coeffs,
        residuals_u: u,
        residuals_eps: Some(eps),
        vol,
        h,
        h_inv,
        theta_cov,
    })
}

/// Sample moment matrices entering the residual autocorrelation covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSet {
    /// `T⁻¹ Σ X̃X̃' ⊗ Σ_t⁻¹` with the fit's volatility path (GLS/ALS only).
    pub lambda1_hat: Option<Matrix>,
    /// `T⁻¹ Σ X̃X̃' ⊗ û_t û_t'`.
    pub lambda2_hat: Matrix,
    /// `T⁻¹ Σ X̃X̃' ⊗ I_d`.
    pub lambda3_hat: Matrix,
    /// `T⁻¹ Σ û_t û_t'`.
    pub sigma_g_hat: Matrix,
    /// `T⁻¹ Σ_{t≥2} û_{t-1}û'_{t-1} ⊗ û_t û_t'`.
    pub sigma_g2_hat: Matrix,
    /// `T⁻¹ Σ H_t' ⊗ H_t⁻¹` (GLS/ALS only).
    pub g_mixed_hat: Option<Matrix>,
}

/// `T⁻¹ Σ X̃X̃' ⊗ û_t û_t'`.
pub fn lambda2_hat(x: &TimeSeries, u: &TimeSeries, p: usize) -> Matrix {
    let d = x.dim();
    let mut out = Matrix::zeros(d * d * p, d * d * p);
    for t in 0..x.len() {
        let z = x.lagged(t, p);
        let ut = u.obs(t);
        out += matnum::kron(&(&z * z.transpose()), &(ut * ut.transpose()));
    }
    out / x.len() as f64
}

/// `T⁻¹ Σ û_t û_t'`.
pub fn sigma_g_hat(u: &TimeSeries) -> Matrix {
    let d = u.dim();
    let mut out = Matrix::zeros(d, d);
    for v in u.observations() {
        out.ger(1.0, v, v, 1.0);
    }
    out / u.len() as f64
}

/// `T⁻¹ Σ_{t=2}^T û_{t-1}û'_{t-1} ⊗ û_t û_t'`.
pub fn sigma_g2_hat(u: &TimeSeries) -> Matrix {
    let d = u.dim();
    let mut out = Matrix::zeros(d * d, d * d);
    for w in u.observations().windows(2) {
        out += matnum::kron(&(&w[0] * w[0].transpose()), &(&w[1] * w[1].transpose()));
    }
    out / u.len() as f64
}

/// `T⁻¹ Σ H_t' ⊗ H_t⁻¹`.
pub fn g_mixed_hat(h: &[Matrix], h_inv: &[Matrix]) -> Matrix {
    let d = h.first().map(|m| m.nrows()).unwrap_or(0);
    let mut out = Matrix::zeros(d * d, d * d);
    for (a, b) in h.iter().zip(h_inv) {
        out += matnum::kron(&a.transpose(), b);
    }
    out / h.len().max(1) as f64
}

/// Sample moments for `fit`, computed from its own residuals `û_t`.
pub fn lambda_set(fit: &VarFit, x: &TimeSeries) -> Result<LambdaSet> {
    if x.len() != fit.len() || x.dim() != fit.dim() {
        return Err(Error::DimensionMismatch("data and fit differ in shape".into()));
    }
    let p = fit.order();
    let d = fit.dim();
    let u = &fit.residuals_u;
    let lambda3_hat = matnum::kron(&regressor_moment(x, p), &Matrix::identity(d, d));
    let weighted = fit.method != Method::Ols;
    let lambda1_hat = if weighted {
        let k = d * d * p;
        let mut l1 = Matrix::zeros(k, k);
        if p > 0 {
            for t in 0..x.len() {
                let z = x.lagged(t, p);
                l1 += matnum::kron(&(&z * z.transpose()), &(&fit.h_inv[t] * &fit.h_inv[t]));
            }
            l1 /= x.len() as f64;
        }
        Some(matnum::symmetrize(&l1))
    } else {
        None
    };
    Ok(LambdaSet {
        lambda1_hat,
        lambda2_hat: lambda2_hat(x, u, p),
        lambda3_hat,
        sigma_g_hat: sigma_g_hat(u),
        sigma_g2_hat: sigma_g2_hat(u),
        g_mixed_hat: weighted.then(|| g_mixed_hat(&fit.h, &fit.h_inv)),
    })
}
