//! VAR(p) representation, volatility curves and simulation of
//! heteroscedastic VAR paths.
//!
//! The model is `X_t = A_1 X_{t-1} + … + A_p X_{t-p} + u_t` with
//! `u_t = G(t/T) ε_t`, where `Σ(r) = G(r)G(r)'` is a deterministic
//! covariance curve on (0, 1] and `G(r)` is its symmetric square root.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matnum::{self, Matrix, Vector};

/// A T×d panel of real observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dim: usize,
    obs: Vec<Vector>,
}

impl TimeSeries {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidArgument("empty time series".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} columns, expected {dim}",
                rows[bad].len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite observation".into()));
        }
        Ok(Self {
            dim,
            obs: rows.iter().map(|r| Vector::from_column_slice(r)).collect(),
        })
    }

    pub fn from_vectors(dim: usize, obs: Vec<Vector>) -> Result<Self> {
        if obs.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch("observation length differs from dimension".into()));
        }
        Ok(Self { dim, obs })
    }

    /// Rows of `m` are time points.
    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            dim: m.ncols(),
            obs: m.row_iter().map(|r| r.transpose()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Observation at 0-based time index `t`.
    pub fn obs(&self, t: usize) -> &Vector {
        &self.obs[t]
    }

    pub fn observations(&self) -> &[Vector] {
        &self.obs
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.len(), self.dim, |t, k| self.obs[t][k])
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.obs.iter().map(|v| v.as_slice().to_vec()).collect()
    }

    pub fn first_difference(&self) -> Result<Self> {
        if self.len() < 2 {
            return Err(Error::InvalidArgument("need at least two observations to difference".into()));
        }
        let obs = self.obs.windows(2).map(|w| &w[1] - &w[0]).collect();
        Ok(Self { dim: self.dim, obs })
    }

    /// Stacked regressor `X̃_{t-1} = (X_{t-1}', …, X_{t-p}')'` for the
    /// observation at 0-based index `t`, with zero pre-sample values.
    pub fn lagged(&self, t: usize, p: usize) -> Vector {
        let d = self.dim;
        let mut out = Vector::zeros(d * p);
        for i in 1..=p {
            if t >= i {
                out.rows_mut((i - 1) * d, d).copy_from(&self.obs[t - i]);
            }
        }
        out
    }
}

/// VAR coefficient matrices `A_1 … A_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarCoefficients {
    dim: usize,
    mats: Vec<Matrix>,
}

impl VarCoefficients {
    pub fn new(dim: usize, mats: Vec<Matrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if mats.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::DimensionMismatch(format!("coefficient matrices must be {dim}x{dim}")));
        }
        Ok(Self { dim, mats })
    }

    /// The white-noise model (p = 0).
    pub fn white_noise(dim: usize) -> Self {
        Self { dim, mats: Vec::new() }
    }

    /// Rebuilds coefficients from `θ = (vec(A_1)', …, vec(A_p)')'`.
    pub fn from_theta(dim: usize, p: usize, theta: &[f64]) -> Result<Self> {
        let block = dim * dim;
        if theta.len() != p * block {
            return Err(Error::DimensionMismatch(format!(
                "theta has length {}, expected {}",
                theta.len(),
                p * block
            )));
        }
        let mats = theta.chunks(block).map(|c| matnum::unvec(c, dim, dim)).collect();
        Ok(Self { dim, mats })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn theta(&self) -> Vector {
        let mut out = Vec::with_capacity(self.order() * self.dim * self.dim);
        for m in &self.mats {
            out.extend_from_slice(m.as_slice());
        }
        Vector::from_vec(out)
    }

    /// `[A_1 … A_p]`, a d × dp matrix.
    pub fn stacked(&self) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d, d * self.order());
        for (i, m) in self.mats.iter().enumerate() {
            out.columns_mut(i * d, d).copy_from(m);
        }
        out
    }

    /// Companion matrix: top block row `(A_1 … A_p)`, identity blocks on
    /// the block subdiagonal.
    pub fn companion_matrix(&self) -> Result<Matrix> {
        let p = self.order();
        if p == 0 {
            return Err(Error::OrderZero);
        }
        let d = self.dim;
        let mut k = Matrix::zeros(d * p, d * p);
        k.rows_mut(0, d).copy_from(&self.stacked());
        for i in 1..p {
            k.view_mut((i * d, (i - 1) * d), (d, d)).fill_with_identity();
        }
        Ok(k)
    }

    pub fn spectral_radius(&self) -> f64 {
        match self.companion_matrix() {
            Ok(k) => spectral_radius(&k),
            Err(_) => 0.0,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0 - 1e-10
    }

    /// Conditional mean `Σ A_i X_{t-i}` at 0-based index `t`.
    pub fn predict(&self, x: &TimeSeries, t: usize) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for (i, a) in self.mats.iter().enumerate() {
            if t > i {
                out += a * x.obs(t - i - 1);
            }
        }
        out
    }
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues().iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

#[derive(Serialize, Deserialize)]
struct CoefficientsRepr {
    dim: usize,
    /// Row-major matrices.
    matrices: Vec<Vec<Vec<f64>>>,
}

impl Serialize for VarCoefficients {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoefficientsRepr {
            dim: self.dim,
            matrices: self.mats.iter().map(matrix_to_rows).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VarCoefficients {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CoefficientsRepr::deserialize(d)?;
        let mats = repr
            .matrices
            .iter()
            .map(|rows| rows_to_matrix(rows))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        VarCoefficients::new(repr.dim, mats).map_err(serde::de::Error::custom)
    }
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    let m = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Deterministic covariance curve `r ↦ Σ(r)` on (0, 1].
///
/// Serialized as `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum VolCurve {
    /// Time-constant covariance.
    Constant { sigma: Vec<Vec<f64>> },
    /// Two diagonal regimes with break dates `tau1`, `tau2`; optional
    /// constant correlation `corr` between the two components.
    Break2d {
        s10: f64,
        s11: f64,
        s20: f64,
        s21: f64,
        tau1: f64,
        tau2: f64,
        #[serde(default)]
        corr: f64,
    },
    /// Smoothly trending bivariate covariance of the simulation study.
    SmoothTrend { pi1: f64, pi2: f64, varpi: f64 },
    /// Bivariate covariance with a common break at r = 1/2.
    BreakSpec {
        varpi: f64,
        #[serde(default)]
        rho: f64,
    },
    /// `(1 + pi1 r) I_d`.
    ScalarTrend { dim: usize, pi1: f64 },
    /// `(1 + jump 1{r >= tau}) I_d`.
    ScalarBreak {
        dim: usize,
        jump: f64,
        #[serde(default = "half")]
        tau: f64,
    },
    /// Linear interpolation `(1 - r) start + r end`.
    Affine { start: Vec<Vec<f64>>, end: Vec<Vec<f64>> },
    /// Piecewise constant: `Σ(r) = matrices[k]` for `r` in `(knots[k-1], knots[k]]`.
    Grid { knots: Vec<f64>, matrices: Vec<Vec<Vec<f64>>> },
}

fn half() -> f64 {
    0.5
}

fn indicator(r: f64, tau: f64) -> f64 {
    if r >= tau {
        1.0
    } else {
        0.0
    }
}

impl VolCurve {
    pub fn identity(dim: usize) -> Self {
        VolCurve::Constant {
            sigma: matrix_to_rows(&Matrix::identity(dim, dim)),
        }
    }

    pub fn constant(sigma: &Matrix) -> Result<Self> {
        let v = VolCurve::Constant { sigma: matrix_to_rows(sigma) };
        v.validate()?;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        match self {
            VolCurve::Constant { sigma } => sigma.len(),
            VolCurve::Break2d { .. } | VolCurve::SmoothTrend { .. } | VolCurve::BreakSpec { .. } => 2,
            VolCurve::ScalarTrend { dim, .. } | VolCurve::ScalarBreak { dim, .. } => *dim,
            VolCurve::Affine { start, .. } => start.len(),
            VolCurve::Grid { matrices, .. } => matrices.first().map(|m| m.len()).unwrap_or(0),
        }
    }

    /// Σ(r). Values of `r` outside (0, 1] are clamped into it.
    pub fn sigma(&self, r: f64) -> Matrix {
        let r = r.clamp(0.0, 1.0);
        match self {
            VolCurve::Constant { sigma } => rows_to_matrix(sigma).expect("validated"),
            VolCurve::Break2d { s10, s11, s20, s21, tau1, tau2, corr } => {
                let v1 = s10 + (s11 - s10) * indicator(r, *tau1);
                let v2 = s20 + (s21 - s20) * indicator(r, *tau2);
                let c = corr * (v1 * v2).sqrt();
                Matrix::from_row_slice(2, 2, &[v1, c, c, v2])
            }
            VolCurve::SmoothTrend { pi1, pi2, varpi } => {
                let a = 1.0 + pi1 * r;
                let b = 0.1 + pi2 * r;
                let c = varpi * a.sqrt() * b.sqrt();
                Matrix::from_row_slice(2, 2, &[a * (1.0 + varpi * varpi), c, c, b])
            }
            VolCurve::BreakSpec { varpi, rho } => {
                let a = 6.0 + 54.0 * indicator(r, 0.5);
                let b = 0.5 + 3.0 * indicator(r, 0.5);
                let c = varpi * a.sqrt() * b.sqrt();
                Matrix::from_row_slice(2, 2, &[a * (1.0 + varpi * varpi), c, c, b * (1.0 + rho * rho)])
            }
            VolCurve::ScalarTrend { dim, pi1 } => Matrix::identity(*dim, *dim) * (1.0 + pi1 * r),
            VolCurve::ScalarBreak { dim, jump, tau } => {
                Matrix::identity(*dim, *dim) * (1.0 + jump * indicator(r, *tau))
            }
            VolCurve::Affine { start, end } => {
                let s = rows_to_matrix(start).expect("validated");
                let e = rows_to_matrix(end).expect("validated");
                s * (1.0 - r) + e * r
            }
            VolCurve::Grid { knots, matrices } => {
                let k = knots.iter().position(|&kn| r <= kn).unwrap_or(knots.len() - 1);
                rows_to_matrix(&matrices[k]).expect("validated")
            }
        }
    }

    /// Σ at the start of the sample (the r → 0⁺ limit).
    pub fn sigma_start(&self) -> Matrix {
        self.sigma(1e-12)
    }

    /// G(r) = Σ(r)^{1/2}.
    pub fn g(&self, r: f64) -> Result<Matrix> {
        matnum::pd_sqrt(&self.sigma(r))
    }

    /// Points in (0, 1) where the curve may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match self {
            VolCurve::Break2d { tau1, tau2, .. } => vec![*tau1, *tau2],
            VolCurve::BreakSpec { .. } => vec![0.5],
            VolCurve::ScalarBreak { tau, .. } => vec![*tau],
            VolCurve::Grid { knots, .. } => knots.clone(),
            _ => Vec::new(),
        };
        out.retain(|&x| x > 0.0 && x < 1.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `Some(σ²(·))` description when the curve is a scalar multiple of the
    /// identity by construction.
    pub fn is_scalar(&self) -> bool {
        matches!(self, VolCurve::ScalarTrend { .. } | VolCurve::ScalarBreak { .. })
    }

    /// Covariances at `t/T`, t = 1..=T.
    pub fn path(&self, len: usize) -> Vec<Matrix> {
        (1..=len).map(|t| self.sigma(t as f64 / len as f64)).collect()
    }

    /// Structural checks; every curve that passes is PD on (0, 1].
    pub fn validate(&self) -> Result<()> {
        let pd_check = |m: &Matrix, r: f64| -> Result<()> {
            matnum::check_symmetric(m)?;
            if nalgebra::Cholesky::new(m.clone()).is_none() {
                return Err(Error::NotPositiveDefinite { r });
            }
            Ok(())
        };
        match self {
            VolCurve::Constant { sigma } => pd_check(&rows_to_matrix(sigma)?, 1.0),
            VolCurve::Break2d { s10, s11, s20, s21, tau1, tau2, corr } => {
                for v in [s10, s11, s20, s21] {
                    if !(*v > 0.0) {
                        return Err(Error::NonPositiveVariance(*v));
                    }
                }
                for t in [tau1, tau2] {
                    if !(0.0..=1.0).contains(t) {
                        return Err(Error::InvalidBreakDate(*t));
                    }
                }
                if !(corr.abs() < 1.0) {
                    return Err(Error::InvalidArgument(format!("correlation {corr} outside (-1, 1)")));
                }
                Ok(())
            }
            VolCurve::SmoothTrend { .. } => {
                for k in 1..=1000 {
                    let r = k as f64 / 1000.0;
                    pd_check(&self.sigma(r), r)?;
                }
                Ok(())
            }
            VolCurve::BreakSpec { .. } => {
                pd_check(&self.sigma(0.25), 0.25)?;
                pd_check(&self.sigma(0.75), 0.75)
            }
            VolCurve::ScalarTrend { dim, pi1 } => {
                if *dim == 0 {
                    return Err(Error::InvalidArgument("dimension must be positive".into()));
                }
                let low = 1.0 + pi1.min(0.0);
                if !(low > 0.0) {
                    return Err(Error::NonPositiveVariance(low));
                }
                Ok(())
            }
            VolCurve::ScalarBreak { dim, jump, tau } => {
                if *dim == 0 {
                    return Err(Error::InvalidArgument("dimension must be positive".into()));
                }
                if !(0.0..=1.0).contains(tau) {
                    return Err(Error::InvalidBreakDate(*tau));
                }
                if !(1.0 + jump > 0.0) {
                    return Err(Error::NonPositiveVariance(1.0 + jump));
                }
                Ok(())
            }
            VolCurve::Affine { start, end } => {
                let s = rows_to_matrix(start)?;
                let e = rows_to_matrix(end)?;
                if s.shape() != e.shape() {
                    return Err(Error::DimensionMismatch("affine endpoints differ in shape".into()));
                }
                pd_check(&s, 0.0)?;
                pd_check(&e, 1.0)
            }
            VolCurve::Grid { knots, matrices } => {
                if knots.is_empty() || knots.len() != matrices.len() {
                    return Err(Error::InvalidArgument("grid needs one matrix per knot".into()));
                }
                if knots.windows(2).any(|w| w[1] <= w[0]) || knots[0] <= 0.0 || (knots[knots.len() - 1] - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(
                        "grid knots must increase strictly within (0, 1] and end at 1".into(),
                    ));
                }
                let dim = matrices[0].len();
                for (k, m) in matrices.iter().enumerate() {
                    let m = rows_to_matrix(m)?;
                    if m.nrows() != dim || m.ncols() != dim {
                        return Err(Error::DimensionMismatch("grid matrices differ in shape".into()));
                    }
                    pd_check(&m, knots[k])?;
                }
                Ok(())
            }
        }
    }
}

/// Two-regime diagonal curve, optionally with constant correlation.
#[allow(clippy::too_many_arguments)]
pub fn vol_break_2d(s10: f64, s11: f64, s20: f64, s21: f64, tau1: f64, tau2: f64, corr: f64) -> Result<VolCurve> {
    let v = VolCurve::Break2d { s10, s11, s20, s21, tau1, tau2, corr };
    v.validate()?;
    Ok(v)
}

/// Trending covariance; PD is checked on a 1000-point grid.
pub fn vol_smooth_trend(pi1: f64, pi2: f64, varpi: f64) -> Result<VolCurve> {
    let v = VolCurve::SmoothTrend { pi1, pi2, varpi };
    v.validate()?;
    Ok(v)
}

/// Common-break covariance; `rho` scales the (2,2) entry by `1 + rho²`.
pub fn vol_break_spec(varpi: f64, rho: f64) -> VolCurve {
    VolCurve::BreakSpec { varpi, rho }
}

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub len: usize,
    pub seed: u64,
    #[serde(default)]
    pub burn_in: usize,
}

/// Source of innovations with conditional mean zero and identity variance.
pub trait Innovations {
    fn fill(&mut self, out: &mut [f64]);
}

/// iid standard Gaussian innovations.
pub struct GaussianInnovations<R> {
    rng: R,
}

impl<R: Rng> GaussianInnovations<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> Innovations for GaussianInnovations<R> {
    fn fill(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.rng.sample(StandardNormal);
        }
    }
}

/// Simulates a path with iid Gaussian innovations drawn from a ChaCha8
/// stream seeded by `cfg.seed`.
pub fn simulate(c: &VarCoefficients, v: &VolCurve, cfg: &SimConfig) -> Result<TimeSeries> {
    let mut innov = GaussianInnovations::new(ChaCha8Rng::seed_from_u64(cfg.seed));
    simulate_with(c, v, cfg.len, cfg.burn_in, &mut innov)
}

/// Simulates `X_t = Σ A_i X_{t-i} + G(t/T) ε_t`, t = 1..=len, from zero
/// initial values. Burn-in steps use the frozen start-of-sample
/// volatility and are discarded.
pub fn simulate_with(
    c: &VarCoefficients,
    v: &VolCurve,
    len: usize,
    burn_in: usize,
    innov: &mut dyn Innovations,
) -> Result<TimeSeries> {
    let d = c.dim();
    if v.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "volatility curve has dimension {}, model has {d}",
            v.dim()
        )));
    }
    if len < c.order() + 1 {
        return Err(Error::InvalidArgument(format!(
            "sample length {len} must exceed the VAR order {}",
            c.order()
        )));
    }
    if !c.is_stable() {
        return Err(Error::UnstableModel { spectral_radius: c.spectral_radius() });
    }
    let p = c.order();
    let g_start = matnum::pd_sqrt(&v.sigma_start())?;
    let constant = matches!(v, VolCurve::Constant { .. });
    let g_const = if constant { Some(g_start.clone()) } else { None };

    let total = burn_in + len;
    let mut history: Vec<Vector> = Vec::with_capacity(total);
    let mut eps = vec![0.0; d];
    for step in 0..total {
        innov.fill(&mut eps);
        let e = Vector::from_column_slice(&eps);
        let u = if step < burn_in {
            &g_start * e
        } else {
            let t = step - burn_in + 1;
            match &g_const {
                Some(g) => g * e,
                None => v.g(t as f64 / len as f64)? * e,
            }
        };
        let mut x = u;
        for i in 0..p {
            if step > i {
                x += &c.mats()[i] * &history[step - i - 1];
            }
        }
        history.push(x);
    }
    TimeSeries::from_vectors(d, history.split_off(burn_in))
}
