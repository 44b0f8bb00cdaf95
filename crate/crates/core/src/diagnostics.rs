//! Residual autocovariances and the estimated asymptotic covariances of
//! their vectorized form.
//!
//! For residuals `r_t` the panel holds `γ̂_m = vec(Γ̂(1) … Γ̂(m))` with
//! `Γ̂(h) = T⁻¹ Σ_{t=h+1}^T r_t r'_{t-h}`. The covariance estimates are
//!
//! ```text
//! Σ^OLS = Λ^uu − Λ^uθ Λ₃⁻¹ Φ' − Φ Λ₃⁻¹ Λ^uθ' + Φ Λ₃⁻¹ Λ₂ Λ₃⁻¹ Φ',
//! Σ^GLS = I − Λ^εθ Λ₁⁻¹ Λ^εθ',
//! Ψ^OLS = {I_m ⊗ (S_u ⊗ S_u)⁻¹} Σ^OLS {I_m ⊗ (S_u ⊗ S_u)⁻¹},
//! ```
//!
//! where `Φ`, `Λ^uθ`, `Λ^εθ` are finite sums over powers of the estimated
//! companion matrix and `Λ^uu = I_m ⊗ Σ̂_{G⊗2}`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimate::{lambda_set, LambdaSet, Method, VarFit};
use crate::matnum::{self, Matrix, Vector};
use crate::model::TimeSeries;

/// Tolerance beyond which a Σ̂^GLS eigenvalue above 1 is an error rather
/// than rounding.
pub const GLS_EIGEN_TOL: f64 = 1e-3;

/// Scale of the residuals a panel is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Raw VAR residuals û_t; autocorrelations scaled by Ŝ⁻¹.
    Raw,
    /// Volatility-standardized residuals; autocorrelations are γ̂ itself.
    Standardized,
}

/// Sample autocovariances of a residual series up to lag m.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovPanel {
    pub m: usize,
    pub dim: usize,
    pub len: usize,
    pub normalization: Normalization,
    /// `vec(Γ̂(1) … Γ̂(m))`, length d²m.
    pub gamma: Vector,
    /// Γ̂(0).
    pub gamma0: Matrix,
    /// `vec(Ŝ⁻¹Γ̂(h)Ŝ⁻¹)` stacked over h, with σ̂(i)² = Γ̂(0)_ii.
    pub rho_a: Vector,
    /// γ̂ itself, only for standardized panels.
    pub rho_b: Option<Vector>,
}

impl AutocovPanel {
    /// Γ̂(h) for h = 1..=m.
    pub fn gamma_lag(&self, h: usize) -> Matrix {
        let d2 = self.dim * self.dim;
        matnum::unvec(&self.gamma.as_slice()[(h - 1) * d2..h * d2], self.dim, self.dim)
    }

    /// Autocorrelations reported alongside confidence bounds.
    pub fn estimates(&self) -> &Vector {
        self.rho_b.as_ref().unwrap_or(&self.rho_a)
    }
}

pub fn autocov_panel(residuals: &TimeSeries, m: usize, normalization: Normalization) -> Result<AutocovPanel> {
    let len = residuals.len();
    let d = residuals.dim();
    if m == 0 || m >= len {
        return Err(Error::LagTooLarge { m, len });
    }
    let obs = residuals.observations();
    let lag_cov = |h: usize| {
        let mut g = Matrix::zeros(d, d);
        for t in h..len {
            g.ger(1.0, &obs[t], &obs[t - h], 1.0);
        }
        g / len as f64
    };
    let gamma0 = lag_cov(0);
    let s_inv: Vec<f64> = (0..d)
        .map(|i| {
            let s = gamma0[(i, i)].sqrt();
            if s > 0.0 {
                1.0 / s
            } else {
                0.0
            }
        })
        .collect();
    let mut gamma = Vec::with_capacity(d * d * m);
    let mut rho = Vec::with_capacity(d * d * m);
    for h in 1..=m {
        let g = lag_cov(h);
        for j in 0..d {
            for i in 0..d {
                gamma.push(g[(i, j)]);
                rho.push(g[(i, j)] * s_inv[i] * s_inv[j]);
            }
        }
    }
    let gamma = Vector::from_vec(gamma);
    let rho_b = (normalization == Normalization::Standardized).then(|| gamma.clone());
    Ok(AutocovPanel {
        m,
        dim: d,
        len,
        normalization,
        gamma,
        gamma0,
        rho_a: Vector::from_vec(rho),
        rho_b,
    })
}

/// Building blocks of the residual covariance estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagCovComponents {
    pub m: usize,
    /// Φ̂ᵘ_m (d²m × d²p).
    pub phi_u: Matrix,
    /// Λ̂ᵘθ_m (d²m × d²p).
    pub lambda_u_theta: Matrix,
    /// Λ̂ᵋθ_m (d²m × d²p), weighted fits only.
    pub lambda_eps_theta: Option<Matrix>,
    /// I_m ⊗ Σ̂_{G⊗2}.
    pub lambda_u_u: Matrix,
    /// Companion matrix of the fitted coefficients (p ≥ 1).
    pub companion: Option<Matrix>,
    /// Ŝ_u = diag(Σ̂_G)^{1/2}.
    pub s_u: Matrix,
}

/// `Σ_{i=0}^{m-1} {e_m(i+1) e_p(1)' ⊗ B}{K^{i'} ⊗ I_d}` for a d² × d² block B.
pub fn companion_sum(block: &Matrix, companion: Option<&Matrix>, m: usize, p: usize, d: usize) -> Matrix {
    let d2 = d * d;
    let mut out = Matrix::zeros(d2 * m, d2 * p);
    let Some(k) = companion else {
        return out;
    };
    let id = Matrix::identity(d, d);
    let mut power = Matrix::identity(d * p, d * p);
    for i in 0..m {
        // block row 1 of K^{i'} ⊗ I_d
        let row = matnum::kron(&power.transpose().rows(0, d).into_owned(), &id);
        out.view_mut((i * d2, 0), (d2, d2 * p)).copy_from(&(block * row));
        power = k * power;
    }
    out
}

fn components_with(
    sigma_g: &Matrix,
    sigma_g2: &Matrix,
    g_mixed: Option<&Matrix>,
    companion: Option<&Matrix>,
    m: usize,
    p: usize,
    d: usize,
) -> DiagCovComponents {
    let phi_block = matnum::kron(sigma_g, &Matrix::identity(d, d));
    let s_u = Matrix::from_diagonal(&sigma_g.diagonal().map(|v| v.max(0.0).sqrt()));
    DiagCovComponents {
        m,
        phi_u: companion_sum(&phi_block, companion, m, p, d),
        lambda_u_theta: companion_sum(sigma_g2, companion, m, p, d),
        lambda_eps_theta: g_mixed.map(|g| companion_sum(g, companion, m, p, d)),
        lambda_u_u: matnum::kron(&Matrix::identity(m, m), sigma_g2),
        companion: companion.cloned(),
        s_u,
    }
}

pub fn diag_components(fit: &VarFit, lambdas: &LambdaSet, m: usize) -> Result<DiagCovComponents> {
    let d = fit.dim();
    let p = fit.order();
    let companion = if p > 0 { Some(fit.coeffs.companion_matrix()?) } else { None };
    Ok(components_with(
        &lambdas.sigma_g_hat,
        &lambdas.sigma_g2_hat,
        lambdas.g_mixed_hat.as_ref(),
        companion.as_ref(),
        m,
        p,
        d,
    ))
}

/// Estimated asymptotic covariances of √T γ̂_m.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCovEstimate {
    /// Σ̂^OLS (OLS fits).
    pub sigma_ols: Option<Matrix>,
    /// Σ̂^GLS with eigenvalues in [0, 1] (GLS/ALS fits).
    pub sigma_gls: Option<Matrix>,
    /// Ψ̂^OLS (OLS fits).
    pub psi_ols: Option<Matrix>,
}

fn sigma_ols_from(comps: &DiagCovComponents, lambda2: &Matrix, lambda3: &Matrix) -> Result<Matrix> {
    if comps.phi_u.ncols() == 0 {
        return Ok(comps.lambda_u_u.clone());
    }
    let l3_inv = matnum::inv_spd(lambda3)?;
    let phi = &comps.phi_u;
    let lut = &comps.lambda_u_theta;
    let cross = lut * &l3_inv * phi.transpose();
    let s = &comps.lambda_u_u - &cross - cross.transpose() + phi * &l3_inv * lambda2 * &l3_inv * phi.transpose();
    Ok(matnum::symmetrize(&s))
}

/// Replaces each eigenvalue λ by min(|λ|, 1). `I − ΛΛ₁⁻¹Λ'` cannot exceed
/// 1 but its plug-in estimate is indefinite in small samples; an
/// eigenvalue above 1 + [`GLS_EIGEN_TOL`] signals a broken Λ̂₁.
pub fn clamp_unit_spectrum(a: &Matrix) -> Result<Matrix> {
    let s = matnum::symmetrize(a);
    let (values, vectors) = matnum::sym_eigen(&s);
    if let Some(&bad) = values.iter().find(|&&v| !(v <= 1.0 + GLS_EIGEN_TOL)) {
        return Err(Error::EigenvalueOutOfRange { value: bad });
    }
    let clamped = values.map(|v| v.abs().min(1.0));
    let out = &vectors * Matrix::from_diagonal(&clamped) * vectors.transpose();
    Ok(matnum::symmetrize(&out))
}

fn sigma_gls_from(lambda_eps_theta: &Matrix, lambda1: &Matrix) -> Result<Matrix> {
    let n = lambda_eps_theta.nrows();
    if lambda_eps_theta.ncols() == 0 {
        return Ok(Matrix::identity(n, n));
    }
    let l1_inv = matnum::inv_spd(lambda1)?;
    let s = Matrix::identity(n, n) - lambda_eps_theta * l1_inv * lambda_eps_theta.transpose();
    clamp_unit_spectrum(&s)
}

fn psi_from(sigma_ols: &Matrix, s_u: &Matrix, m: usize) -> Result<Matrix> {
    let d = s_u.nrows();
    let mut inv = Matrix::zeros(d, d);
    for i in 0..d {
        let s = s_u[(i, i)];
        if !(s > 0.0) {
            return Err(Error::SingularMatrix { min_eigenvalue: s });
        }
        inv[(i, i)] = 1.0 / s;
    }
    let scale = matnum::kron(&Matrix::identity(m, m), &matnum::kron(&inv, &inv));
    Ok(matnum::symmetrize(&(&scale * sigma_ols * &scale)))
}

pub fn residual_cov(fit: &VarFit, comps: &DiagCovComponents, lambdas: &LambdaSet) -> Result<ResidualCovEstimate> {
    match fit.method {
        Method::Ols => {
            let sigma = sigma_ols_from(comps, &lambdas.lambda2_hat, &lambdas.lambda3_hat)?;
            let psi = psi_from(&sigma, &comps.s_u, comps.m)?;
            Ok(ResidualCovEstimate {
                sigma_ols: Some(sigma),
                sigma_gls: None,
                psi_ols: Some(psi),
            })
        }
        Method::Gls | Method::Als => {
            let let_ = comps
                .lambda_eps_theta
                .as_ref()
                .ok_or_else(|| Error::MissingInput("weighted fit without mixed volatility moment".into()))?;
            let l1 = lambdas
                .lambda1_hat
                .as_ref()
                .ok_or_else(|| Error::MissingInput("weighted fit without weighted design moment".into()))?;
            Ok(ResidualCovEstimate {
                sigma_ols: None,
                sigma_gls: Some(sigma_gls_from(let_, l1)?),
                psi_ols: None,
            })
        }
    }
}

/// Covariances computed as if the innovations were homoscedastic: Σ̂_{G⊗2}
/// becomes Σ̂_G ⊗ Σ̂_G, Λ̂₂ becomes Λ̂₃-shaped with Σ̂_G, and the
/// volatility path is replaced by the constant Σ̂_G.
pub fn naive_residual_cov(fit: &VarFit, x: &TimeSeries, lambdas: &LambdaSet, m: usize) -> Result<ResidualCovEstimate> {
    let d = fit.dim();
    let p = fit.order();
    let sg = &lambdas.sigma_g_hat;
    let sg2 = matnum::kron(sg, sg);
    let companion = if p > 0 { Some(fit.coeffs.companion_matrix()?) } else { None };
    let moment = crate::estimate::regressor_moment(x, p);
    match fit.method {
        Method::Ols => {
            let comps = components_with(sg, &sg2, None, companion.as_ref(), m, p, d);
            let lambda2 = matnum::kron(&moment, sg);
            let sigma = sigma_ols_from(&comps, &lambda2, &lambdas.lambda3_hat)?;
            let psi = psi_from(&sigma, &comps.s_u, m)?;
            Ok(ResidualCovEstimate {
                sigma_ols: Some(sigma),
                sigma_gls: None,
                psi_ols: Some(psi),
            })
        }
        Method::Gls | Method::Als => {
            let (g, g_inv) = matnum::pd_sqrt_and_inv(sg)?;
            let g_mixed = matnum::kron(&g.transpose(), &g_inv);
            let comps = components_with(sg, &sg2, Some(&g_mixed), companion.as_ref(), m, p, d);
            let lambda1 = matnum::kron(&moment, &matnum::inv_spd(sg)?);
            Ok(ResidualCovEstimate {
                sigma_ols: None,
                sigma_gls: Some(sigma_gls_from(comps.lambda_eps_theta.as_ref().expect("set above"), &lambda1)?),
                psi_ols: None,
            })
        }
    }
}

/// One entry of the per-lag confidence band output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub lag: usize,
    /// 1-based row index of the autocorrelation matrix.
    pub i: usize,
    /// 1-based column index.
    pub j: usize,
    pub estimate: f64,
    pub bound_robust: f64,
    pub bound_naive: f64,
}

fn panel_cov(panel: &AutocovPanel, cov: &ResidualCovEstimate) -> Result<Matrix> {
    let c = match panel.normalization {
        Normalization::Raw => cov.psi_ols.as_ref(),
        Normalization::Standardized => cov.sigma_gls.as_ref(),
    };
    let c = c.ok_or_else(|| Error::MissingInput("covariance estimate does not match the panel".into()))?;
    if c.nrows() != panel.gamma.len() {
        return Err(Error::DimensionMismatch("covariance and panel sizes differ".into()));
    }
    Ok(c.clone())
}

/// Two-sided bounds `z_{1−α/2} sqrt(cov_jj / T)` for every autocorrelation
/// entry, where `level` is the nominal size α.
pub fn confidence_bounds(
    panel: &AutocovPanel,
    robust: &ResidualCovEstimate,
    naive: &ResidualCovEstimate,
    level: f64,
) -> Result<Vec<BoundRow>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} outside (0, 1)")));
    }
    let z = Normal::standard().inverse_cdf(1.0 - level / 2.0);
    let cr = panel_cov(panel, robust)?;
    let cn = panel_cov(panel, naive)?;
    let t = panel.len as f64;
    let d = panel.dim;
    let est = panel.estimates();
    let mut rows = Vec::with_capacity(est.len());
    for (k, e) in est.iter().enumerate() {
        let within = k % (d * d);
        rows.push(BoundRow {
            lag: k / (d * d) + 1,
            i: within % d + 1,
            j: within / d + 1,
            estimate: *e,
            bound_robust: z * (cr[(k, k)].max(0.0) / t).sqrt(),
            bound_naive: z * (cn[(k, k)].max(0.0) / t).sqrt(),
        });
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("lag,i,j,estimate,bound_robust,bound_naive\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.16e},{:.16e},{:.16e}\n",
            r.lag, r.i, r.j, r.estimate, r.bound_robust, r.bound_naive
        ));
    }
    out
}

/// Panel, components and covariance estimates for one fit.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub panel: AutocovPanel,
    pub lambdas: LambdaSet,
    pub comps: DiagCovComponents,
    pub cov: ResidualCovEstimate,
}

pub fn diagnose(fit: &VarFit, x: &TimeSeries, m: usize) -> Result<Diagnostics> {
    let normalization = if fit.method == Method::Ols {
        Normalization::Raw
    } else {
        Normalization::Standardized
    };
    let panel = autocov_panel(fit.test_residuals(), m, normalization)?;
    let lambdas = lambda_set(fit, x)?;
    let comps = diag_components(fit, &lambdas, m)?;
    let cov = residual_cov(fit, &comps, &lambdas)?;
    Ok(Diagnostics { panel, lambdas, comps, cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{fit_gls, fit_ols};
    use crate::model::{simulate, SimConfig, VarCoefficients, VolCurve};

    #[test]
    fn zero_residuals_give_zero_panel() {
        let x = TimeSeries::from_rows(&vec![vec![0.0, 0.0]; 10]).unwrap();
        let p = autocov_panel(&x, 3, Normalization::Raw).unwrap();
        assert_eq!(p.gamma, Vector::zeros(12));
        assert!(matches!(autocov_panel(&x, 10, Normalization::Raw), Err(Error::LagTooLarge { .. })));
    }

    #[test]
    fn alternating_series() {
        let t = 20;
        let rows: Vec<Vec<f64>> = (0..t).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect();
        let p = autocov_panel(&TimeSeries::from_rows(&rows).unwrap(), 1, Normalization::Raw).unwrap();
        let want = -((t - 1) as f64) / t as f64;
        assert!((p.gamma[0] - want).abs() < 1e-15);
        assert!((p.rho_a[0] - want).abs() < 1e-15);
    }

    #[test]
    fn white_noise_autocovariances_are_small() {
        let n = 100_000;
        let x = simulate(&VarCoefficients::white_noise(2), &VolCurve::identity(2), &SimConfig { len: n, seed: 12, burn_in: 0 }).unwrap();
        let p = autocov_panel(&x, 5, Normalization::Raw).unwrap();
        assert!(p.gamma.abs().max() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn panel_layout_matches_lag_matrices() {
        let x = simulate(&VarCoefficients::white_noise(2), &VolCurve::identity(2), &SimConfig { len: 50, seed: 2, burn_in: 0 }).unwrap();
        let p = autocov_panel(&x, 2, Normalization::Raw).unwrap();
        let mut g2 = Matrix::zeros(2, 2);
        for t in 2..50 {
            g2 += x.obs(t) * x.obs(t - 2).transpose();
        }
        g2 /= 50.0;
        assert!((p.gamma_lag(2) - g2).abs().max() < 1e-15);
    }

    #[test]
    fn white_noise_model_components() {
        let x = simulate(&VarCoefficients::white_noise(2), &VolCurve::identity(2), &SimConfig { len: 100, seed: 4, burn_in: 0 }).unwrap();
        let fit = fit_ols(&x, 0).unwrap();
        let diag = diagnose(&fit, &x, 3).unwrap();
        assert_eq!(diag.comps.phi_u.ncols(), 0);
        assert_eq!(diag.comps.lambda_u_u, matnum::kron(&Matrix::identity(3, 3), &diag.lambdas.sigma_g2_hat));
        assert_eq!(diag.cov.sigma_ols.as_ref().unwrap(), &diag.comps.lambda_u_u);
        let gls = fit_gls(&x, 0, &VolCurve::identity(2)).unwrap();
        let diag = diagnose(&gls, &x, 3).unwrap();
        assert_eq!(diag.cov.sigma_gls.unwrap(), Matrix::identity(12, 12));
    }

    #[test]
    fn nilpotent_companion_keeps_first_term() {
        let d = 2;
        let sg = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let k = Matrix::zeros(2, 2);
        let phi = companion_sum(&matnum::kron(&sg, &Matrix::identity(d, d)), Some(&k), 3, 1, d);
        let mut e = Matrix::zeros(3, 1);
        e[(0, 0)] = 1.0;
        let want = matnum::kron(&matnum::kron(&e, &sg), &Matrix::identity(d, d));
        assert_eq!(phi, want);
    }

    #[test]
    fn companion_sum_matches_literal_formula() {
        let d = 2;
        let p = 2;
        let m = 4;
        let k = VarCoefficients::new(
            2,
            vec![
                Matrix::from_row_slice(2, 2, &[0.3, -0.3, 0.0, -0.1]),
                Matrix::from_row_slice(2, 2, &[-0.2, 0.1, 0.05, 0.1]),
            ],
        )
        .unwrap()
        .companion_matrix()
        .unwrap();
        let b = Matrix::from_fn(4, 4, |i, j| 1.0 + i as f64 * 0.3 - j as f64 * 0.7);
        let got = companion_sum(&b, Some(&k), m, p, d);
        let mut want = Matrix::zeros(d * d * m, d * d * p);
        let mut power = Matrix::identity(d * p, d * p);
        for i in 0..m {
            let mut e = Matrix::zeros(m, p);
            e[(i, 0)] = 1.0;
            want += matnum::kron(&e, &b) * matnum::kron(&power.transpose(), &Matrix::identity(d, d));
            power = &k * power;
        }
        assert!((got - want).abs().max() < 1e-14);
    }

    #[test]
    fn unit_bounds_example() {
        let n = 8;
        let panel = AutocovPanel {
            m: 2,
            dim: 2,
            len: 400,
            normalization: Normalization::Standardized,
            gamma: Vector::zeros(n),
            gamma0: Matrix::identity(2, 2),
            rho_a: Vector::zeros(n),
            rho_b: Some(Vector::zeros(n)),
        };
        let cov = ResidualCovEstimate {
            sigma_ols: None,
            sigma_gls: Some(Matrix::identity(n, n)),
            psi_ols: None,
        };
        let rows = confidence_bounds(&panel, &cov, &cov, 0.05).unwrap();
        for r in &rows {
            assert!((r.bound_robust - 1.959963984540054 / 20.0).abs() < 1e-12);
        }
        assert_eq!((rows[1].lag, rows[1].i, rows[1].j), (1, 2, 1));
        assert_eq!((rows[6].lag, rows[6].i, rows[6].j), (2, 1, 2));
        assert!(bounds_csv(&rows).starts_with("lag,i,j,estimate,bound_robust,bound_naive\n"));
    }

    #[test]
    fn unit_spectrum_clamp() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0 + 5e-4, -0.2, 0.5]));
        let c = clamp_unit_spectrum(&a).unwrap();
        let e = matnum::eigvals_sym(&c).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 0.5).abs() < 1e-15 && (e[2] - 0.2).abs() < 1e-15);
        let bad = Matrix::from_diagonal(&Vector::from_vec(vec![1.01, 0.5]));
        assert!(matches!(clamp_unit_spectrum(&bad), Err(Error::EigenvalueOutOfRange { .. })));
    }
}
