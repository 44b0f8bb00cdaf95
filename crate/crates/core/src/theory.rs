//! Closed-form asymptotic quantities for two-regime diagonal volatility,
//! the scalar-volatility constant `c_σ`, and Bahadur slopes of the
//! Box–Pierce type statistics under a fixed VAR(1) alternative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matnum::{self, Matrix, Vector};
use crate::model::{spectral_radius, VolCurve};
use crate::quad;

const QUAD_TOL: f64 = 1e-13;

/// How an oracle value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Quadrature,
}

/// Two diagonal variance components, each with one break.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoRegime {
    pub s10: f64,
    pub s11: f64,
    pub s20: f64,
    pub s21: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl TwoRegime {
    pub fn from_curve(v: &VolCurve) -> Option<Self> {
        match *v {
            VolCurve::Break2d { s10, s11, s20, s21, tau1, tau2, corr } if corr == 0.0 => Some(Self {
                s10,
                s11,
                s20,
                s21,
                tau1,
                tau2,
            }),
            _ => None,
        }
    }

    pub fn curve(&self) -> VolCurve {
        VolCurve::Break2d {
            s10: self.s10,
            s11: self.s11,
            s20: self.s20,
            s21: self.s21,
            tau1: self.tau1,
            tau2: self.tau2,
            corr: 0.0,
        }
    }

    /// Segments `(length, Σ₁, Σ₂)` on which both components are constant.
    fn segments(&self) -> Vec<(f64, f64, f64)> {
        let mut knots = [0.0, self.tau1.clamp(0.0, 1.0), self.tau2.clamp(0.0, 1.0), 1.0];
        knots.sort_by(f64::total_cmp);
        knots
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let v1 = if mid >= self.tau1 { self.s11 } else { self.s10 };
                let v2 = if mid >= self.tau2 { self.s21 } else { self.s20 };
                (w[1] - w[0], v1, v2)
            })
            .collect()
    }
}

/// Integrals over (0, 1] of functions of two diagonal variance components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseVolIntegrals {
    pub s1: f64,
    pub s2: f64,
    pub s1_sq: f64,
    pub s2_sq: f64,
    pub s1_s2: f64,
    /// ∫ Σ₁^{1/2} Σ₂^{-1/2}
    pub sqrt_12: f64,
    /// ∫ Σ₁^{-1/2} Σ₂^{1/2}
    pub sqrt_21: f64,
    /// ∫ Σ₁ Σ₂⁻¹
    pub ratio_12: f64,
    /// ∫ Σ₂ Σ₁⁻¹
    pub ratio_21: f64,
    pub source: Source,
}

fn integrand_values(v1: f64, v2: f64) -> [f64; 9] {
    [
        v1,
        v2,
        v1 * v1,
        v2 * v2,
        v1 * v2,
        (v1 / v2).sqrt(),
        (v2 / v1).sqrt(),
        v1 / v2,
        v2 / v1,
    ]
}

impl PiecewiseVolIntegrals {
    fn from_array(a: [f64; 9], source: Source) -> Self {
        Self {
            s1: a[0],
            s2: a[1],
            s1_sq: a[2],
            s2_sq: a[3],
            s1_s2: a[4],
            sqrt_12: a[5],
            sqrt_21: a[6],
            ratio_12: a[7],
            ratio_21: a[8],
            source,
        }
    }

    pub fn closed_form(spec: &TwoRegime) -> Self {
        let mut acc = [0.0; 9];
        for (len, v1, v2) in spec.segments() {
            for (a, f) in acc.iter_mut().zip(integrand_values(v1, v2)) {
                *a += len * f;
            }
        }
        Self::from_array(acc, Source::ClosedForm)
    }

    /// Adaptive quadrature of the diagonal of any bivariate curve; the
    /// off-diagonal must vanish.
    pub fn by_quadrature(v: &VolCurve) -> Result<Self> {
        v.validate()?;
        if v.dim() != 2 {
            return Err(Error::DimensionMismatch(format!("need a bivariate curve, got dimension {}", v.dim())));
        }
        for k in 0..=20 {
            let s = v.sigma(k as f64 / 20.0);
            if s[(0, 1)] != 0.0 {
                return Err(Error::InvalidArgument("volatility curve is not diagonal".into()));
            }
        }
        let f = |r: f64| {
            let s = v.sigma(r);
            integrand_values(s[(0, 0)], s[(1, 1)]).to_vec()
        };
        let out = quad::integrate_vec_with_breaks(&f, 0.0, 1.0, &v.breakpoints(), QUAD_TOL)?;
        Ok(Self::from_array(out.try_into().expect("nine integrals"), Source::Quadrature))
    }

    /// Closed form for two-regime curves, quadrature otherwise.
    pub fn from_curve(v: &VolCurve) -> Result<Self> {
        match TwoRegime::from_curve(v) {
            Some(spec) => {
                v.validate()?;
                Ok(Self::closed_form(&spec))
            }
            None => Self::by_quadrature(v),
        }
    }

    pub fn as_array(&self) -> [f64; 9] {
        [
            self.s1,
            self.s2,
            self.s1_sq,
            self.s2_sq,
            self.s1_s2,
            self.sqrt_12,
            self.sqrt_21,
            self.ratio_12,
            self.ratio_21,
        ]
    }
}

/// Position of `Γ(lag)(i, j)` (all 1-based) in the stacked vector
/// `vec(Γ(1), …, Γ(m))`, 0-based.
pub fn flat_index(d: usize, lag: usize, i: usize, j: usize) -> usize {
    (lag - 1) * d * d + (j - 1) * d + (i - 1)
}

/// Asymptotic covariances of the OLS and GLS residual autocovariances for
/// a bivariate white noise fitted by a VAR(1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Cov {
    pub m: usize,
    pub sigma_ols: Matrix,
    pub sigma_gls: Matrix,
    /// OLS covariance under a spuriously constant variance.
    pub sigma_ols_spurious: Matrix,
}

impl Example1Cov {
    pub fn ols_entry(&self, lag: usize, i: usize, j: usize) -> f64 {
        let k = flat_index(2, lag, i, j);
        self.sigma_ols[(k, k)]
    }

    pub fn gls_entry(&self, lag: usize, i: usize, j: usize) -> f64 {
        let k = flat_index(2, lag, i, j);
        self.sigma_gls[(k, k)]
    }
}

fn block_diag(first: &Vector, rest: &Vector, m: usize) -> Matrix {
    let mut out = Matrix::zeros(4 * m, 4 * m);
    for k in 0..4 {
        out[(k, k)] = first[k];
    }
    for h in 1..m {
        for k in 0..4 {
            out[(4 * h + k, 4 * h + k)] = rest[k];
        }
    }
    out
}

pub fn example1_cov(ints: &PiecewiseVolIntegrals, m: usize) -> Result<Example1Cov> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let zero = Vector::zeros(4);
    let ols = Vector::from_vec(vec![ints.s1_sq, ints.s1_s2, ints.s1_s2, ints.s2_sq]);
    let gls = Vector::from_vec(vec![
        0.0,
        1.0 - ints.sqrt_12 * ints.sqrt_12 / ints.ratio_12,
        1.0 - ints.sqrt_21 * ints.sqrt_21 / ints.ratio_21,
        0.0,
    ]);
    let spurious = Vector::from_vec(vec![ints.s1 * ints.s1, ints.s1 * ints.s2, ints.s2 * ints.s1, ints.s2 * ints.s2]);
    Ok(Example1Cov {
        m,
        sigma_ols: block_diag(&zero, &ols, m),
        sigma_gls: block_diag(&gls, &Vector::from_element(4, 1.0), m),
        sigma_ols_spurious: block_diag(&zero, &spurious, m),
    })
}

/// Δ^OLS for the same design: Σ^OLS standardized by the integrated variances.
pub fn example2_delta(ints: &PiecewiseVolIntegrals, m: usize) -> Result<Matrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let cross = ints.s1_s2 / (ints.s1 * ints.s2);
    let breve = Vector::from_vec(vec![ints.s1_sq / (ints.s1 * ints.s1), cross, cross, ints.s2_sq / (ints.s2 * ints.s2)]);
    Ok(block_diag(&Vector::zeros(4), &breve, m))
}

/// `c_σ = ∫σ⁴ / (∫σ²)²` for `Σ(r) = σ²(r) I_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CSigma {
    pub value: f64,
    pub source: Source,
}

pub fn c_sigma(v: &VolCurve) -> Result<CSigma> {
    v.validate()?;
    match *v {
        VolCurve::ScalarTrend { pi1, .. } => {
            let m1 = 1.0 + pi1 / 2.0;
            let m2 = 1.0 + pi1 + pi1 * pi1 / 3.0;
            Ok(CSigma { value: m2 / (m1 * m1), source: Source::ClosedForm })
        }
        VolCurve::ScalarBreak { jump, tau, .. } => {
            let tau = tau.clamp(0.0, 1.0);
            let hi = 1.0 + jump;
            let m1 = tau + hi * (1.0 - tau);
            let m2 = tau + hi * hi * (1.0 - tau);
            Ok(CSigma { value: m2 / (m1 * m1), source: Source::ClosedForm })
        }
        _ => {
            let d = v.dim();
            for k in 0..=20 {
                let s = v.sigma(k as f64 / 20.0);
                let s2 = s[(0, 0)];
                if (s - Matrix::identity(d, d) * s2).abs().max() > 1e-12 * s2.abs().max(1.0) {
                    return Err(Error::InvalidArgument("volatility is not a scalar multiple of the identity".into()));
                }
            }
            let f = |r: f64| {
                let s2 = v.sigma(r)[(0, 0)];
                vec![s2, s2 * s2]
            };
            let m = quad::integrate_vec_with_breaks(&f, 0.0, 1.0, &v.breakpoints(), QUAD_TOL)?;
            Ok(CSigma { value: m[1] / (m[0] * m[0]), source: Source::Quadrature })
        }
    }
}

/// Limits of `T⁻¹Q` for the Box–Pierce type statistics when testing
/// uncorrelatedness of `u_t = B u_{t−1} + …`, and the resulting slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub m: usize,
    /// Limit of `T⁻¹Q^OLS`.
    pub quad_ols: f64,
    /// Limit of `T⁻¹` times the Wald-type OLS statistic.
    pub quad_modified: f64,
    /// Limit of `T⁻¹Q^ALS`.
    pub quad_als: f64,
    /// Largest weight of the null law of `Q^OLS`.
    pub delta_max_ols: f64,
    pub slope_ols: f64,
    pub slope_modified: f64,
    pub slope_als: f64,
    pub are_modified_vs_ols: Option<f64>,
    pub are_als_vs_ols: Option<f64>,
    pub are_als_vs_modified: Option<f64>,
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

/// Slopes `2 lim T⁻¹ q(Q)` with `q(x) = −log P₀(Q > x) ≈ x / (2 max δ)`.
/// `vol` is the unconditional variance Σ(r) of the observed process.
pub fn bahadur_slopes(b: &Matrix, vol: &VolCurve, m: usize) -> Result<SlopeReport> {
    let d = vol.dim();
    if b.nrows() != d || b.ncols() != d {
        return Err(Error::DimensionMismatch(format!("B is {}x{}, volatility has dimension {d}", b.nrows(), b.ncols())));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let rho = spectral_radius(b);
    if rho >= 1.0 {
        return Err(Error::UnstableAlternative { spectral_radius: rho });
    }
    vol.validate()?;

    let d2 = d * d;
    let f = |r: f64| -> Vec<f64> {
        let s = vol.sigma(r);
        let (g, g_inv) = matnum::pd_sqrt_and_inv(&s).expect("validated curve is PD");
        let mut out = Vec::with_capacity(d2 + 2 * d2 * d2);
        out.extend(s.iter());
        out.extend(matnum::kron(&s, &s).iter());
        out.extend(matnum::kron(&g.transpose(), &g_inv).iter());
        out
    };
    let ints = quad::integrate_vec_with_breaks(&f, 0.0, 1.0, &vol.breakpoints(), QUAD_TOL)?;
    let sigma_g = Matrix::from_column_slice(d, d, &ints[..d2]);
    let s2 = Matrix::from_column_slice(d2, d2, &ints[d2..d2 + d2 * d2]);
    let mix = Matrix::from_column_slice(d2, d2, &ints[d2 + d2 * d2..]);

    let sigma_g_inv = matnum::inv_spd(&sigma_g)?;
    let w_ols = matnum::kron(&sigma_g, &sigma_g_inv);
    let left = matnum::kron(&sigma_g, &Matrix::identity(d, d));
    let w_mod = &left * matnum::inv_spd(&matnum::symmetrize(&s2))? * left.transpose();
    let w_als = mix.transpose() * &mix;

    let mut quad_ols = 0.0;
    let mut quad_modified = 0.0;
    let mut quad_als = 0.0;
    let mut power = Matrix::identity(d, d);
    for _ in 0..m {
        power = &power * b;
        let v = matnum::vec(&power);
        quad_ols += v.dot(&(&w_ols * &v));
        quad_modified += v.dot(&(&w_mod * &v));
        quad_als += v.dot(&(&w_als * &v));
    }

    let s_inv_half = matnum::pd_inv_sqrt(&sigma_g)?;
    let scale = matnum::kron(&s_inv_half, &s_inv_half);
    let delta = matnum::symmetrize(&(&scale * &s2 * &scale));
    let delta_max_ols = matnum::eigvals_sym(&delta)?.max();

    let slope_ols = quad_ols / delta_max_ols;
    let slope_modified = quad_modified;
    let slope_als = quad_als;
    Ok(SlopeReport {
        m,
        quad_ols,
        quad_modified,
        quad_als,
        delta_max_ols,
        slope_ols,
        slope_modified,
        slope_als,
        are_modified_vs_ols: ratio(slope_modified, slope_ols),
        are_als_vs_ols: ratio(slope_als, slope_ols),
        are_als_vs_modified: ratio(slope_als, slope_modified),
    })
}

/// Oracle values for a fixed set of designs, serializable as a test fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub two_regime: TwoRegime,
    pub m: usize,
    pub integrals: PiecewiseVolIntegrals,
    pub example1: Example1Cov,
    pub example2_delta: Matrix,
    pub c_sigma_trend: CSigma,
    pub c_sigma_break: CSigma,
}

pub fn oracle_fixture(spec: &TwoRegime, m: usize) -> Result<OracleFixture> {
    let integrals = PiecewiseVolIntegrals::closed_form(spec);
    Ok(OracleFixture {
        two_regime: *spec,
        m,
        integrals,
        example1: example1_cov(&integrals, m)?,
        example2_delta: example2_delta(&integrals, m)?,
        c_sigma_trend: c_sigma(&VolCurve::ScalarTrend { dim: 2, pi1: 150.0 })?,
        c_sigma_break: c_sigma(&VolCurve::ScalarBreak { dim: 2, jump: 3.0, tau: 0.5 })?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(s11: f64, s21: f64, tau1: f64, tau2: f64) -> TwoRegime {
        TwoRegime { s10: 1.0, s11, s20: 1.0, s21, tau1, tau2 }
    }

    #[test]
    fn worked_two_regime_values() {
        let ints = PiecewiseVolIntegrals::closed_form(&spec(0.5, 1.0, 0.5, 0.5));
        assert!((ints.s1_sq - 0.625).abs() < 1e-15);
        assert!((ints.sqrt_12 - 0.5 * (1.0 + 0.5f64.sqrt())).abs() < 1e-15);
        assert!((ints.ratio_12 - 0.75).abs() < 1e-15);
        let ex = example1_cov(&ints, 3).unwrap();
        let want = 1.0 - (0.5 * (1.0 + 0.5f64.sqrt())).powi(2) / 0.75;
        assert!((ex.gls_entry(1, 2, 1) - want).abs() < 1e-14);
        assert!((want - 0.0286).abs() < 1e-4);
        assert!((ex.ols_entry(2, 1, 1) - 0.625).abs() < 1e-15);
        assert_eq!(ex.ols_entry(1, 1, 1), 0.0);
        let delta = example2_delta(&ints, 2).unwrap();
        assert!((delta[(4, 4)] - 0.625 / 0.5625).abs() < 1e-14);
    }

    #[test]
    fn constant_volatility_collapses() {
        let ints = PiecewiseVolIntegrals::closed_form(&TwoRegime { s10: 2.0, s11: 2.0, s20: 0.5, s21: 0.5, tau1: 0.3, tau2: 0.7 });
        let ex = example1_cov(&ints, 4).unwrap();
        let mut want = Matrix::identity(16, 16);
        for k in 0..4 {
            want[(k, k)] = 0.0;
        }
        assert!((&ex.sigma_gls - want).abs().max() < 1e-14);
        assert!((&ex.sigma_ols - &ex.sigma_ols_spurious).abs().max() < 1e-14);
        let delta = example2_delta(&ints, 4).unwrap();
        for k in 4..16 {
            assert!((delta[(k, k)] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn c_sigma_values() {
        let trend = c_sigma(&VolCurve::ScalarTrend { dim: 2, pi1: 150.0 }).unwrap();
        assert!((trend.value - 7651.0 / 5776.0).abs() < 1e-14);
        let brk = c_sigma(&VolCurve::ScalarBreak { dim: 1, jump: 3.0, tau: 0.5 }).unwrap();
        assert!((brk.value - 1.36).abs() < 1e-14);
        assert_eq!(c_sigma(&VolCurve::identity(3)).unwrap().value, 1.0);
        let affine = VolCurve::Affine {
            start: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            end: vec![vec![151.0, 0.0], vec![0.0, 151.0]],
        };
        let q = c_sigma(&affine).unwrap();
        assert_eq!(q.source, Source::Quadrature);
        assert!((q.value - trend.value).abs() < 1e-10);
        assert!(c_sigma(&crate::model::vol_smooth_trend(1.0, 1.0, 0.0).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn closed_form_matches_quadrature(
            s10 in 0.1f64..5.0, s11 in 0.1f64..5.0, s20 in 0.1f64..5.0, s21 in 0.1f64..5.0,
            tau1 in 0.0f64..1.0, tau2 in 0.0f64..1.0,
        ) {
            let sp = TwoRegime { s10, s11, s20, s21, tau1, tau2 };
            let a = PiecewiseVolIntegrals::closed_form(&sp).as_array();
            let b = PiecewiseVolIntegrals::by_quadrature(&sp.curve()).unwrap().as_array();
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
            let ints = PiecewiseVolIntegrals::closed_form(&sp);
            prop_assert!(ints.s1_sq >= ints.s1 * ints.s1 * (1.0 - 1e-12));
            prop_assert!(ints.s2_sq >= ints.s2 * ints.s2 * (1.0 - 1e-12));
            let delta = example2_delta(&ints, 2).unwrap();
            prop_assert!(delta[(4, 4)] >= 1.0 - 1e-12 && delta[(7, 7)] >= 1.0 - 1e-12);
        }

        #[test]
        fn modified_statistic_is_at_least_as_efficient(
            s10 in 0.1f64..5.0, s11 in 0.1f64..5.0, s20 in 0.1f64..5.0, s21 in 0.1f64..5.0,
            tau1 in 0.05f64..0.95, tau2 in 0.05f64..0.95,
            b in proptest::collection::vec(-0.6f64..0.6, 4), m in 1usize..6,
        ) {
            let vol = TwoRegime { s10, s11, s20, s21, tau1, tau2 }.curve();
            let bm = Matrix::from_column_slice(2, 2, &b);
            prop_assume!(spectral_radius(&bm) < 0.95 && bm.norm() > 1e-3);
            let rep = bahadur_slopes(&bm, &vol, m).unwrap();
            prop_assert!(rep.are_modified_vs_ols.unwrap() >= 1.0 - 1e-12);
        }

        #[test]
        fn als_dominates_under_scalar_volatility(
            pi1 in 0.0f64..200.0, b in proptest::collection::vec(-0.6f64..0.6, 4), m in 1usize..6,
        ) {
            let bm = Matrix::from_column_slice(2, 2, &b);
            prop_assume!(spectral_radius(&bm) < 0.95 && bm.norm() > 1e-3);
            let rep = bahadur_slopes(&bm, &VolCurve::ScalarTrend { dim: 2, pi1 }, m).unwrap();
            prop_assert!(rep.are_als_vs_ols.unwrap() >= 1.0 - 1e-12);
            prop_assert!(rep.are_als_vs_modified.unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn identity_volatility_slopes_are_norms() {
        let b = Matrix::from_row_slice(2, 2, &[0.3, -0.3, 0.0, -0.1]);
        let rep = bahadur_slopes(&b, &VolCurve::identity(2), 4).unwrap();
        let mut norm = 0.0;
        let mut pw = Matrix::identity(2, 2);
        for _ in 0..4 {
            pw = &pw * &b;
            norm += pw.norm_squared();
        }
        for s in [rep.slope_ols, rep.slope_modified, rep.slope_als] {
            assert!((s - norm).abs() < 1e-12);
        }
        let zero = bahadur_slopes(&Matrix::zeros(2, 2), &VolCurve::identity(2), 3).unwrap();
        assert_eq!((zero.slope_ols, zero.slope_modified, zero.slope_als), (0.0, 0.0, 0.0));
        assert!(zero.are_als_vs_ols.is_none());
        assert!(matches!(
            bahadur_slopes(&Matrix::identity(2, 2), &VolCurve::identity(2), 2),
            Err(Error::UnstableAlternative { .. })
        ));
    }

    #[test]
    fn fixture_round_trips() {
        let fx = oracle_fixture(&spec(0.5, 1.0, 0.5, 0.5), 3).unwrap();
        let json = serde_json::to_string(&fx).unwrap();
        let back: OracleFixture = serde_json::from_str(&json).unwrap();
        assert_eq!(fx, back);
    }

    #[test]
    fn flat_index_convention() {
        assert_eq!(flat_index(2, 1, 2, 1), 1);
        assert_eq!(flat_index(2, 2, 2, 1), 5);
    }
}
