//! Box–Pierce and Ljung–Box statistics on OLS and volatility-standardized
//! residuals, their weighted chi-square laws, and Wald-type modifications
//! with standard chi-square laws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::diagnostics::{diagnose, AutocovPanel, DiagCovComponents, Diagnostics, ResidualCovEstimate};
use crate::error::{Error, Result};
use crate::estimate::{fit_als_from_ols, fit_gls, fit_ols, VarFit};
use crate::matnum::{self, Matrix, Vector};
use crate::model::{TimeSeries, VolCurve};
use crate::quadform::WeightedChiSq;
use crate::volatility::KernelConfig;

/// Gram matrices with a condition number above this make a modified
/// statistic infeasible.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Null law of a statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Law {
    WeightedChiSq { weights: Vec<f64> },
    ChiSq { df: usize },
}

impl Law {
    pub fn upper_tail(&self, x: f64) -> Result<f64> {
        match self {
            Law::WeightedChiSq { weights } => WeightedChiSq::new(weights)?.upper_tail(x),
            Law::ChiSq { df } => {
                if *df == 0 {
                    return Ok(0.0);
                }
                if x <= 0.0 {
                    return Ok(1.0);
                }
                let chi = ChiSquared::new(*df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
                Ok(chi.sf(x))
            }
        }
    }
}

/// Outcome of one portmanteau test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub m: usize,
    pub statistic: Option<f64>,
    pub law: Option<Law>,
    pub p_value: Option<f64>,
    pub rejected: Option<bool>,
    pub notes: Vec<String>,
}

impl TestReport {
    fn new(name: &str, m: usize, statistic: f64, law: Law, level: f64, notes: Vec<String>) -> Result<Self> {
        let p = law.upper_tail(statistic)?;
        Ok(Self {
            name: name.to_string(),
            m,
            statistic: Some(statistic),
            law: Some(law),
            p_value: Some(p),
            rejected: Some(p < level),
            notes,
        })
    }

    fn unavailable(name: &str, m: usize, statistic: Option<f64>, note: String) -> Self {
        Self {
            name: name.to_string(),
            m,
            statistic,
            law: None,
            p_value: None,
            rejected: None,
            notes: vec![note],
        }
    }

    pub fn is_available(&self) -> bool {
        self.p_value.is_some()
    }
}

fn gamma0_inv(panel: &AutocovPanel) -> Result<Matrix> {
    matnum::inv_spd(&panel.gamma0).map_err(|_| Error::SingularGamma0)
}

/// `Σ_h c_h tr(Γ̂'(h) Γ̂⁻¹(0) Γ̂(h) Γ̂⁻¹(0))`.
fn weighted_trace_sum(panel: &AutocovPanel, coef: impl Fn(usize) -> f64) -> Result<f64> {
    let g0i = gamma0_inv(panel)?;
    let mut q = 0.0;
    for h in 1..=panel.m {
        let g = panel.gamma_lag(h);
        q += coef(h) * (g.transpose() * &g0i * &g * &g0i).trace();
    }
    Ok(q)
}

fn lb_coef(len: usize) -> impl Fn(usize) -> f64 {
    let t = len as f64;
    move |h| t * t / (t - h as f64)
}

/// `T Σ tr(Γ̂'(h)Γ̂⁻¹(0)Γ̂(h)Γ̂⁻¹(0))`.
pub fn bp_ols(panel: &AutocovPanel) -> Result<f64> {
    let t = panel.len as f64;
    weighted_trace_sum(panel, |_| t)
}

/// `T² Σ (T−h)⁻¹ tr(Γ̂'(h)Γ̂⁻¹(0)Γ̂(h)Γ̂⁻¹(0))`.
pub fn lb_ols(panel: &AutocovPanel) -> Result<f64> {
    weighted_trace_sum(panel, lb_coef(panel.len))
}

/// Box–Pierce statistic through `T γ̂'(I_m ⊗ Γ̂⁻¹(0) ⊗ Γ̂⁻¹(0)) γ̂`.
pub fn bp_ols_kron(panel: &AutocovPanel) -> Result<f64> {
    let g0i = gamma0_inv(panel)?;
    let w = matnum::kron(&Matrix::identity(panel.m, panel.m), &matnum::kron(&g0i, &g0i));
    Ok(panel.len as f64 * (panel.gamma.transpose() * w * &panel.gamma)[(0, 0)])
}

/// Variants of the standardized-residual statistics: `A` normalizes by
/// Γ̂(0), `B` uses the raw autocovariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlsVariant {
    A,
    B,
}

pub fn bp_als(panel: &AutocovPanel, variant: AlsVariant) -> Result<f64> {
    let t = panel.len as f64;
    match variant {
        AlsVariant::A => bp_ols(panel),
        AlsVariant::B => Ok(t * panel.gamma.norm_squared()),
    }
}

pub fn lb_als(panel: &AutocovPanel, variant: AlsVariant) -> Result<f64> {
    match variant {
        AlsVariant::A => lb_ols(panel),
        AlsVariant::B => {
            let coef = lb_coef(panel.len);
            Ok((1..=panel.m).map(|h| coef(h) * panel.gamma_lag(h).norm_squared()).sum())
        }
    }
}

/// Absolute eigenvalues of `Δ̂ = (I_m ⊗ Σ̂_G^{-1/2} ⊗ Σ̂_G^{-1/2}) Σ̂^OLS (…)`;
/// the plug-in Σ̂^OLS need not be positive semi-definite.
pub fn weights_ols(cov: &ResidualCovEstimate, sigma_g: &Matrix) -> Result<WeightedChiSq> {
    let sigma = cov
        .sigma_ols
        .as_ref()
        .ok_or_else(|| Error::MissingInput("OLS residual covariance".into()))?;
    let delta = delta_ols(sigma, sigma_g)?;
    let e = matnum::eigvals_sym(&delta)?;
    WeightedChiSq::new(&e.iter().map(|v| v.abs()).collect::<Vec<_>>())
}

pub fn delta_ols(sigma_ols: &Matrix, sigma_g: &Matrix) -> Result<Matrix> {
    let d = sigma_g.nrows();
    let m = sigma_ols.nrows() / (d * d);
    let s = matnum::pd_inv_sqrt(sigma_g)?;
    let scale = matnum::kron(&Matrix::identity(m, m), &matnum::kron(&s, &s));
    Ok(matnum::symmetrize(&(&scale * sigma_ols * &scale)))
}

/// Eigenvalues of Σ̂^GLS (already folded into [0, 1]).
pub fn weights_als(cov: &ResidualCovEstimate) -> Result<WeightedChiSq> {
    let sigma = cov
        .sigma_gls
        .as_ref()
        .ok_or_else(|| Error::MissingInput("standardized residual covariance".into()))?;
    let e = matnum::eigvals_sym(sigma)?;
    WeightedChiSq::new(&e.iter().map(|v| v.clamp(0.0, 1.0)).collect::<Vec<_>>())
}

/// γ̂ with lag block h scaled by `sqrt(T/(T−h))`, so that its squared norm
/// forms carry Ljung–Box weights.
fn lb_scaled(panel: &AutocovPanel) -> Vector {
    let d2 = panel.dim * panel.dim;
    let t = panel.len as f64;
    Vector::from_fn(panel.gamma.len(), |k, _| {
        let h = (k / d2 + 1) as f64;
        panel.gamma[k] * (t / (t - h)).sqrt()
    })
}

fn name_for(base: &str, lb: bool, suffix: &str) -> String {
    format!("{}{base}_{suffix}", if lb { "LB" } else { "BP" })
}

fn conditioned(a: &Matrix) -> Result<Matrix> {
    let cond = matnum::condition_number_sym(a);
    if !(cond <= GRAM_CONDITION_LIMIT) {
        return Err(Error::SingularDesign { condition: cond });
    }
    matnum::inv_spd(a).map_err(|_| Error::SingularDesign { condition: cond })
}

/// `T γ̂'(I−D)' L⁻¹ (I−D) γ̂` with `D = Φ(Φ'L⁻¹Φ)⁻¹Φ'L⁻¹`, `L = Λ̂ᵘᵘ`,
/// against χ²(d²(m−p)).
pub fn modified_ols(panel: &AutocovPanel, comps: &DiagCovComponents, lb: bool, level: f64) -> TestReport {
    let name = name_for("mod", lb, "OLS");
    let g = if lb { lb_scaled(panel) } else { panel.gamma.clone() };
    let t = panel.len as f64;
    let n = g.len();
    let phi = &comps.phi_u;
    let p_block = phi.ncols();
    let result = (|| -> Result<f64> {
        let l_inv = conditioned(&comps.lambda_u_u)?;
        let resid = if p_block == 0 {
            g.clone()
        } else {
            let gram = phi.transpose() * &l_inv * phi;
            let gram_inv = conditioned(&matnum::symmetrize(&gram))?;
            let d = phi * gram_inv * phi.transpose() * &l_inv;
            (Matrix::identity(n, n) - d) * &g
        };
        Ok(t * (resid.transpose() * &l_inv * &resid)[(0, 0)])
    })();
    finish_modified(&name, panel.m, result, n.saturating_sub(p_block), level)
}

/// `T γ̂'(I−D) γ̂` with `D = Λ(Λ'Λ)⁻¹Λ'`, `Λ = Λ̂ᵋθ`, against χ²(d²(m−p)).
pub fn modified_als(panel: &AutocovPanel, comps: &DiagCovComponents, lb: bool, level: f64, suffix: &str) -> TestReport {
    let name = name_for("mod", lb, suffix);
    let g = if lb { lb_scaled(panel) } else { panel.gamma.clone() };
    let t = panel.len as f64;
    let n = g.len();
    let Some(lam) = comps.lambda_eps_theta.as_ref() else {
        return TestReport::unavailable(&name, panel.m, None, "no standardized-residual components".into());
    };
    let p_block = lam.ncols();
    let result = (|| -> Result<f64> {
        if p_block == 0 {
            return Ok(t * g.norm_squared());
        }
        let gram_inv = conditioned(&matnum::symmetrize(&(lam.transpose() * lam)))?;
        let d = lam * gram_inv * lam.transpose();
        let resid = (Matrix::identity(n, n) - d) * &g;
        Ok(t * g.dot(&resid))
    })();
    finish_modified(&name, panel.m, result, n.saturating_sub(p_block), level)
}

fn finish_modified(name: &str, m: usize, result: Result<f64>, df: usize, level: f64) -> TestReport {
    if df == 0 {
        return TestReport::unavailable(name, m, None, "need m > p".into());
    }
    match result {
        Ok(q) => TestReport::new(name, m, q, Law::ChiSq { df }, level, Vec::new())
            .unwrap_or_else(|e| TestReport::unavailable(name, m, Some(q), e.to_string())),
        Err(Error::SingularDesign { condition }) => TestReport::unavailable(
            name,
            m,
            None,
            format!("not available: Gram matrix not invertible (condition {condition:.3e})"),
        ),
        Err(e) => TestReport::unavailable(name, m, None, e.to_string()),
    }
}

/// Which families of tests to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub kernel: KernelConfig,
    /// Known volatility for the GLS benchmark rows.
    pub known_vol: Option<VolCurve>,
    pub level: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            kernel: KernelConfig::default(),
            known_vol: None,
            level: 0.05,
        }
    }
}

/// Fits shared by the tests at every lag count.
#[derive(Debug, Clone)]
pub struct TestSuite {
    pub x: TimeSeries,
    pub ols: VarFit,
    pub als: Result<VarFit>,
    pub gls: Option<Result<VarFit>>,
    pub level: f64,
}

impl TestSuite {
    pub fn new(x: &TimeSeries, p: usize, cfg: &SuiteConfig) -> Result<Self> {
        if !(cfg.level > 0.0 && cfg.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level {} outside (0, 1)", cfg.level)));
        }
        let ols = fit_ols(x, p)?;
        let als = fit_als_from_ols(x, &ols, &cfg.kernel);
        let gls = cfg.known_vol.as_ref().map(|v| fit_gls(x, p, v));
        Ok(Self {
            x: x.clone(),
            ols,
            als,
            gls,
            level: cfg.level,
        })
    }

    /// All reports for lag count `m`. Failures are recorded in the
    /// affected reports rather than returned.
    pub fn run(&self, m: usize) -> Result<Vec<TestReport>> {
        let level = self.level;
        let p = self.ols.order();
        let d = self.ols.dim();
        let mut out = Vec::new();

        let ols_diag = diagnose(&self.ols, &self.x, m)?;
        let bp = bp_ols(&ols_diag.panel)?;
        let lb = lb_ols(&ols_diag.panel)?;
        let naive = Law::ChiSq {
            df: (d * d * m.saturating_sub(p)).max(1),
        };
        out.push(TestReport::new("BP_S", m, bp, naive.clone(), level, Vec::new())?);
        out.push(TestReport::new("LB_S", m, lb, naive, level, Vec::new())?);
        match weights_ols(&ols_diag.cov, &ols_diag.lambdas.sigma_g_hat) {
            Ok(w) => {
                let law = Law::WeightedChiSq { weights: w.weights().to_vec() };
                out.push(report_or_note("BP_OLS", m, bp, &law, level));
                out.push(report_or_note("LB_OLS", m, lb, &law, level));
            }
            Err(e) => {
                out.push(TestReport::unavailable("BP_OLS", m, Some(bp), e.to_string()));
                out.push(TestReport::unavailable("LB_OLS", m, Some(lb), e.to_string()));
            }
        }

        let weighted: Vec<(&str, Option<&Result<VarFit>>)> = vec![("ALS", Some(&self.als)), ("GLS", self.gls.as_ref())];
        let mut modified = vec![
            modified_ols(&ols_diag.panel, &ols_diag.comps, false, level),
            modified_ols(&ols_diag.panel, &ols_diag.comps, true, level),
        ];
        for (suffix, fit) in weighted {
            let Some(fit) = fit else { continue };
            let names = weighted_names(suffix);
            let diag = fit.as_ref().map_err(Clone::clone).and_then(|f| diagnose(f, &self.x, m));
            match diag {
                Ok(diag) => {
                    out.extend(weighted_reports(&diag, &names, m, level));
                    modified.push(modified_als(&diag.panel, &diag.comps, false, level, suffix));
                    modified.push(modified_als(&diag.panel, &diag.comps, true, level, suffix));
                }
                Err(e) => {
                    for n in names.iter() {
                        out.push(TestReport::unavailable(n, m, None, e.to_string()));
                    }
                    for lb in [false, true] {
                        modified.push(TestReport::unavailable(&name_for("mod", lb, suffix), m, None, e.to_string()));
                    }
                }
            }
        }
        out.extend(modified);
        Ok(out)
    }
}

/// Names produced by [`TestSuite::run`], in order.
pub fn report_names(with_gls: bool) -> Vec<String> {
    let mut out: Vec<String> = ["BP_S", "LB_S", "BP_OLS", "LB_OLS"].iter().map(|s| s.to_string()).collect();
    out.extend(weighted_names("ALS"));
    if with_gls {
        out.extend(weighted_names("GLS"));
    }
    for suffix in ["OLS", "ALS", "GLS"] {
        if suffix == "GLS" && !with_gls {
            continue;
        }
        out.push(name_for("mod", false, suffix));
        out.push(name_for("mod", true, suffix));
    }
    out
}

fn weighted_names(suffix: &str) -> [String; 4] {
    [
        format!("BP_{suffix}"),
        format!("LB_{suffix}"),
        format!("BP_{suffix}_b"),
        format!("LB_{suffix}_b"),
    ]
}

fn report_or_note(name: &str, m: usize, stat: f64, law: &Law, level: f64) -> TestReport {
    TestReport::new(name, m, stat, law.clone(), level, Vec::new())
        .unwrap_or_else(|e| TestReport::unavailable(name, m, Some(stat), e.to_string()))
}

fn weighted_reports(diag: &Diagnostics, names: &[String; 4], m: usize, level: f64) -> Vec<TestReport> {
    let stats = [
        bp_als(&diag.panel, AlsVariant::A),
        lb_als(&diag.panel, AlsVariant::A),
        bp_als(&diag.panel, AlsVariant::B),
        lb_als(&diag.panel, AlsVariant::B),
    ];
    let law = weights_als(&diag.cov).map(|w| Law::WeightedChiSq { weights: w.weights().to_vec() });
    names
        .iter()
        .zip(stats)
        .map(|(n, s)| match (s, &law) {
            (Ok(s), Ok(law)) => report_or_note(n, m, s, law, level),
            (Ok(s), Err(e)) => TestReport::unavailable(n, m, Some(s), e.to_string()),
            (Err(e), _) => TestReport::unavailable(n, m, None, e.to_string()),
        })
        .collect()
}

/// Convenience wrapper: fits once and runs every test at lag count `m`.
pub fn run_all(x: &TimeSeries, p: usize, m: usize, cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    TestSuite::new(x, p, cfg)?.run(m)
}

/// Rows are test names (in first-seen order), columns are lag counts.
fn table(reports: &[TestReport], cell: impl Fn(&TestReport) -> String) -> String {
    let mut ms: Vec<usize> = reports.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        if !names.contains(&r.name.as_str()) {
            names.push(&r.name);
        }
    }
    let width = names.iter().map(|n| n.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<width$}", "test");
    for m in &ms {
        out.push_str(&format!(" {:>10}", format!("m={m}")));
    }
    out.push('\n');
    for n in names {
        out.push_str(&format!("{n:<width$}"));
        for m in &ms {
            let c = reports
                .iter()
                .find(|r| r.name == n && r.m == *m)
                .map(&cell)
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(" {c:>10}"));
        }
        out.push('\n');
    }
    out
}

/// p-values in percent, "n.a." where unavailable.
pub fn pvalue_table(reports: &[TestReport]) -> String {
    table(reports, |r| match r.p_value {
        Some(p) => format!("{:.2}", 100.0 * p),
        None => "n.a.".into(),
    })
}

pub fn statistic_table(reports: &[TestReport]) -> String {
    table(reports, |r| match r.statistic {
        Some(s) if r.p_value.is_some() => format!("{s:.2}"),
        _ => "n.a.".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{autocov_panel, Normalization};
    use crate::model::{simulate, SimConfig, VarCoefficients};
    use proptest::prelude::*;

    fn noise(len: usize, seed: u64) -> TimeSeries {
        simulate(&VarCoefficients::white_noise(2), &VolCurve::identity(2), &SimConfig { len, seed, burn_in: 0 }).unwrap()
    }

    #[test]
    fn zero_autocovariances_give_zero_statistics() {
        let mut rows = vec![vec![0.0, 0.0]; 10];
        rows[4] = vec![1.0, 2.0];
        let panel = autocov_panel(&TimeSeries::from_rows(&rows).unwrap(), 3, Normalization::Standardized).unwrap();
        assert!(bp_ols(&panel).is_err());
        assert_eq!(bp_als(&panel, AlsVariant::B).unwrap(), 0.0);
        assert_eq!(lb_als(&panel, AlsVariant::B).unwrap(), 0.0);
    }

    #[test]
    fn scalar_ljung_box_reduction() {
        let x = TimeSeries::from_rows(&[1.0, 0.3, -0.8, 0.5, 1.2, -0.4, 0.1].map(|v| vec![v])).unwrap();
        let panel = autocov_panel(&x, 1, Normalization::Raw).unwrap();
        let t = 7.0;
        let want = t * t / (t - 1.0) * panel.rho_a[0].powi(2);
        assert!((lb_ols(&panel).unwrap() - want).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn trace_and_kronecker_forms_agree(seed in 0u64..1000, m in 1usize..6) {
            let panel = autocov_panel(&noise(40, seed), m, Normalization::Raw).unwrap();
            let a = bp_ols(&panel).unwrap();
            let b = bp_ols_kron(&panel).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            prop_assert!(bp_ols(&panel).unwrap() <= lb_ols(&panel).unwrap());
        }
    }

    #[test]
    fn variants_coincide_with_identity_gamma0() {
        let mut panel = autocov_panel(&noise(60, 3), 3, Normalization::Standardized).unwrap();
        panel.gamma0 = Matrix::identity(2, 2);
        assert!((bp_als(&panel, AlsVariant::A).unwrap() - bp_als(&panel, AlsVariant::B).unwrap()).abs() < 1e-12);
        assert!((lb_als(&panel, AlsVariant::A).unwrap() - lb_als(&panel, AlsVariant::B).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn white_noise_modified_statistic_is_scaled_norm() {
        let x = noise(100, 5);
        let fit = crate::estimate::fit_gls(&x, 0, &VolCurve::identity(2)).unwrap();
        let diag = diagnose(&fit, &x, 3).unwrap();
        let r = modified_als(&diag.panel, &diag.comps, false, 0.05, "GLS");
        assert!((r.statistic.unwrap() - 100.0 * diag.panel.gamma.norm_squared()).abs() < 1e-12);
        assert_eq!(r.law, Some(Law::ChiSq { df: 12 }));
    }

    #[test]
    fn projector_annihilates_phi() {
        let phi = Matrix::from_fn(12, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 3.0 } else { 0.0 });
        let l = Matrix::from_fn(12, 12, |i, j| if i == j { 1.0 + i as f64 * 0.1 } else { 0.0 });
        let l_inv = matnum::inv_spd(&l).unwrap();
        let gram = phi.transpose() * &l_inv * &phi;
        let d = &phi * matnum::inv_spd(&gram).unwrap() * phi.transpose() * &l_inv;
        assert!(((Matrix::identity(12, 12) - d) * &phi).abs().max() < 1e-10);
    }

    #[test]
    fn run_all_reports_are_consistent() {
        let x = noise(200, 21);
        let cfg = SuiteConfig {
            known_vol: Some(VolCurve::identity(2)),
            ..SuiteConfig::default()
        };
        let reports = run_all(&x, 1, 5, &cfg).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
        for n in ["LB_S", "LB_OLS", "LB_ALS", "LB_GLS", "LBmod_OLS", "LBmod_ALS", "LBmod_GLS", "BP_ALS_b"] {
            assert!(names.contains(&n), "missing {n}");
        }
        for r in &reports {
            if let (Some(s), Some(law), Some(p)) = (r.statistic, &r.law, r.p_value) {
                assert!((law.upper_tail(s).unwrap() - p).abs() < 1e-6);
                assert!((0.0..=1.0).contains(&p));
            }
            if let Some(Law::WeightedChiSq { weights }) = &r.law {
                assert_eq!(weights.len(), 20);
                if r.name.contains("ALS") || r.name.contains("GLS") {
                    assert!(weights.iter().all(|w| (0.0..=1.0).contains(w)));
                    // rank argument: exactly d²(m − p) unit weights
                    assert_eq!(weights.iter().filter(|w| (**w - 1.0).abs() < 1e-8).count(), 16);
                }
            }
        }
        assert_eq!(names, report_names(true));
        let table = pvalue_table(&reports);
        assert!(table.lines().count() == reports.len() + 1);
    }

    #[test]
    fn unit_weights_reduce_to_chi_square() {
        let law = Law::WeightedChiSq { weights: vec![1.0; 8] };
        let chi = Law::ChiSq { df: 8 };
        for x in [2.0, 8.0, 15.5] {
            assert!((law.upper_tail(x).unwrap() - chi.upper_tail(x).unwrap()).abs() < 1e-6);
        }
    }
}
