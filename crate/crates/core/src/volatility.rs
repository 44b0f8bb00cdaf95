//! Kernel estimation of the time-varying innovation covariance from VAR
//! residuals.
//!
//! Entry `(k, l)` of the raw estimate at time `t` is a leave-one-out
//! kernel average of the products `û_{k,i} û_{l,i}`:
//!
//! ```text
//! Σ̌⁰_t(k,l) = Σ_{i≠t} w_ti(b_kl) û_{k,i} û_{l,i},
//! w_ti(b) ∝ K((t − i) / (T b)),   w_tt = 0,   Σ_i w_ti = 1.
//! ```
//!
//! The raw estimate is regularized to `Σ̌_t = {(Σ̌⁰_t)² + ν I}^{1/2}` and the
//! bandwidths are chosen by minimizing `Σ_t ‖Σ̌⁰_t − û_t û_t'‖²_F` over a
//! log-spaced grid. Time indices in this module are 0-based.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matnum::{self, Matrix, Vector};
use crate::model::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Gaussian,
    Triangular,
    Epanechnikov,
}

impl Kernel {
    /// Unnormalized kernel value; normalization cancels in the weights.
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * z * z).exp(),
            Kernel::Triangular => (1.0 - z.abs()).max(0.0),
            Kernel::Epanechnikov => (1.0 - z * z).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMode {
    /// One bandwidth shared by every cell; keeps Σ̌⁰_t PSD.
    #[default]
    Single,
    /// One bandwidth per (k, l) cell.
    PerCell,
}

/// Smoothing and bandwidth-selection settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub kernel: Kernel,
    pub bandwidth_mode: BandwidthMode,
    /// Grid range is `[c_min b_T, c_max b_T]` with `b_T = T^{-1/3}`.
    pub c_min: f64,
    pub c_max: f64,
    pub grid_points: usize,
    /// Regularization ν ≥ 0.
    pub nu: f64,
    /// Skips cross-validation when set.
    pub fixed_bandwidth: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Gaussian,
            bandwidth_mode: BandwidthMode::Single,
            c_min: 0.2,
            c_max: 5.0,
            grid_points: 200,
            nu: 0.0,
            fixed_bandwidth: None,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_min > 0.0 && self.c_min < self.c_max && self.c_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth constants must satisfy 0 < c_min < c_max, got {} and {}",
                self.c_min, self.c_max
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::EmptyGrid);
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("regularization must be nonnegative, got {}", self.nu)));
        }
        if let Some(b) = self.fixed_bandwidth {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {b}")));
            }
        }
        Ok(())
    }

    /// Rate-based default bandwidth scale `T^{-1/3}`.
    pub fn base_bandwidth(len: usize) -> f64 {
        (len as f64).powf(-1.0 / 3.0)
    }

    /// Rate-based regularization `T^{-3/5}` for callers that want ν > 0.
    pub fn default_nu(len: usize) -> f64 {
        (len as f64).powf(-0.6)
    }

    /// Log-spaced candidate bandwidths.
    pub fn bandwidth_grid(&self, len: usize) -> Vec<f64> {
        let bt = Self::base_bandwidth(len);
        let (lo, hi) = ((self.c_min * bt).ln(), (self.c_max * bt).ln());
        let n = self.grid_points;
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![lo.exp()];
        }
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// Kernel-smoothed volatility path.
#[derive(Debug, Clone, PartialEq)]
pub struct VolPathEstimate {
    /// Σ̌_t, t = 0..T-1.
    pub sigma: Vec<Matrix>,
    /// Ȟ_t = Σ̌_t^{1/2}.
    pub h: Vec<Matrix>,
    /// Ȟ_t^{-1}.
    pub h_inv: Vec<Matrix>,
    /// Symmetric d × d matrix of bandwidths b_kl.
    pub bandwidths: Matrix,
    pub cv_score: f64,
    pub nu: f64,
}

/// Cross-validation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub bandwidths: Matrix,
    pub score: f64,
    /// `(bandwidth, criterion)` with one bandwidth shared by all cells.
    pub trace: Vec<(f64, f64)>,
}

impl CvResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("bandwidth,score\n");
        for (b, s) in &self.trace {
            out.push_str(&format!("{b:.16e},{s:.16e}\n"));
        }
        out
    }
}

/// `K(h / (T b))` for lags h = 0..T-1, with the lag-0 value set to zero.
fn lag_kernel(len: usize, b: f64, kernel: Kernel) -> Vec<f64> {
    let scale = 1.0 / (len as f64 * b);
    let mut k: Vec<f64> = (0..len).map(|h| kernel.eval(h as f64 * scale)).collect();
    if let Some(first) = k.first_mut() {
        *first = 0.0;
    }
    k
}

/// Leave-one-out normalizers `Σ_{i≠t} K_ti` for every t.
fn normalizers(lag: &[f64]) -> Vec<f64> {
    let len = lag.len();
    let mut cum = vec![0.0; len];
    for h in 1..len {
        cum[h] = cum[h - 1] + lag[h];
    }
    (0..len).map(|t| cum[t] + cum[len - 1 - t]).collect()
}

/// Weights `w_ti`, i = 0..T-1, for the 0-based time index `t`.
pub fn kernel_weights(t: usize, len: usize, b: f64, kernel: Kernel) -> Result<Vector> {
    if t >= len {
        return Err(Error::InvalidArgument(format!("time index {t} outside 0..{len}")));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {b}")));
    }
    let scale = 1.0 / (len as f64 * b);
    let mut w = Vector::from_fn(len, |i, _| {
        if i == t {
            0.0
        } else {
            kernel.eval((t as f64 - i as f64) * scale)
        }
    });
    let total = w.sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateKernel { t, len, bandwidth: b });
    }
    w /= total;
    Ok(w)
}

/// Products `û_{k,i} û_{l,i}` for one cell.
fn cell_products(residuals: &TimeSeries, k: usize, l: usize) -> Vec<f64> {
    residuals.observations().iter().map(|u| u[k] * u[l]).collect()
}

fn check_bandwidths(d: usize, bandwidths: &Matrix) -> Result<()> {
    if bandwidths.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("bandwidth matrix must be {d}x{d}")));
    }
    for k in 0..d {
        for l in 0..d {
            let b = bandwidths[(k, l)];
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {b}")));
            }
            if b != bandwidths[(l, k)] {
                return Err(Error::InvalidArgument("bandwidth matrix must be symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Raw smoothed covariances Σ̌⁰_t by direct summation in increasing `i`.
pub fn smooth_residual_covariance(residuals: &TimeSeries, kernel: Kernel, bandwidths: &Matrix) -> Result<Vec<Matrix>> {
    let len = residuals.len();
    let d = residuals.dim();
    if len < 2 {
        return Err(Error::InvalidArgument("need at least two residuals to smooth".into()));
    }
    check_bandwidths(d, bandwidths)?;
    let mut out = vec![Matrix::zeros(d, d); len];
    for k in 0..d {
        for l in k..d {
            let b = bandwidths[(k, l)];
            let lag = lag_kernel(len, b, kernel);
            let reach = lag.iter().rposition(|&v| v > 0.0).unwrap_or(0);
            let norm = normalizers(&lag);
            let y = cell_products(residuals, k, l);
            for t in 0..len {
                if !(norm[t] > 0.0) {
                    return Err(Error::DegenerateKernel { t, len, bandwidth: b });
                }
                let lo = t.saturating_sub(reach);
                let hi = (t + reach).min(len - 1);
                let mut acc = 0.0;
                for (i, yi) in y.iter().enumerate().take(hi + 1).skip(lo) {
                    acc += lag[t.abs_diff(i)] * yi;
                }
                let v = acc / norm[t];
                out[t][(k, l)] = v;
                out[t][(l, k)] = v;
            }
        }
    }
    Ok(out)
}

/// `{(Σ⁰)² + ν I}^{1/2}`. With ν = 0 this is the spectral absolute value,
/// which leaves PSD input unchanged.
pub fn regularize(sigma0: &[Matrix], nu: f64) -> Result<Vec<Matrix>> {
    sigma0
        .iter()
        .map(|s| {
            let s = matnum::symmetrize(s);
            if nu == 0.0 && nalgebra::Cholesky::new(s.clone()).is_some() {
                return Ok(s);
            }
            matnum::spectral_apply(&s, |l| (l * l + nu).sqrt())
        })
        .collect()
}

/// Circular convolution engine for the leave-one-out kernel sums.
struct Convolver {
    n: usize,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Convolver {
    fn new(len: usize) -> Self {
        let n = (2 * len).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn transform(&self, x: &[f64]) -> Vec<Complex<f64>> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.n];
        for (b, v) in buf.iter_mut().zip(x) {
            b.re = *v;
        }
        self.fwd.process(&mut buf);
        buf
    }

    /// Spectrum of the symmetric lag kernel laid out circularly.
    fn kernel_transform(&self, lag: &[f64]) -> Vec<Complex<f64>> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.n];
        for (h, &v) in lag.iter().enumerate().skip(1) {
            buf[h].re = v;
            buf[self.n - h].re = v;
        }
        self.fwd.process(&mut buf);
        buf
    }

    /// First `len` entries of the linear convolution.
    fn apply(&self, spec_y: &[Complex<f64>], spec_k: &[Complex<f64>], len: usize) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = spec_y.iter().zip(spec_k).map(|(a, b)| a * b).collect();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf[..len].iter().map(|c| c.re * scale).collect()
    }
}

/// Per-cell leave-one-out squared errors on a bandwidth grid. Entry
/// `[g][c]` is `Σ_t (Σ̌⁰_t(cell c) − y_t)²` at grid point `g`, or `None`
/// when the kernel degenerates.
fn cell_scores(residuals: &TimeSeries, kernel: Kernel, grid: &[f64]) -> Vec<Option<Vec<f64>>> {
    let len = residuals.len();
    let d = residuals.dim();
    let conv = Convolver::new(len);
    let cells: Vec<(usize, usize)> = (0..d).flat_map(|k| (k..d).map(move |l| (k, l))).collect();
    let ys: Vec<Vec<f64>> = cells.iter().map(|&(k, l)| cell_products(residuals, k, l)).collect();
    let specs: Vec<Vec<Complex<f64>>> = ys.iter().map(|y| conv.transform(y)).collect();
    grid.iter()
        .map(|&b| {
            let lag = lag_kernel(len, b, kernel);
            let norm = normalizers(&lag);
            if norm.iter().any(|&v| !(v > 0.0)) {
                return None;
            }
            let spec_k = conv.kernel_transform(&lag);
            let scores = ys
                .iter()
                .zip(&specs)
                .map(|(y, spec_y)| {
                    let num = conv.apply(spec_y, &spec_k, len);
                    num.iter()
                        .zip(&norm)
                        .zip(y)
                        .map(|((n, z), yt)| {
                            let e = n / z - yt;
                            e * e
                        })
                        .sum()
                })
                .collect();
            Some(scores)
        })
        .collect()
}

/// Bandwidth selection by leave-one-out cross-validation on Σ̌⁰.
///
/// The criterion separates over cells, so per-cell mode takes each cell's
/// own grid minimizer; single mode minimizes the summed Frobenius
/// criterion (off-diagonal cells counted twice).
pub fn cross_validate(residuals: &TimeSeries, cfg: &KernelConfig) -> Result<CvResult> {
    cfg.validate()?;
    let grid = cfg.bandwidth_grid(residuals.len());
    cross_validate_on_grid(residuals, cfg.kernel, cfg.bandwidth_mode, &grid)
}

pub fn cross_validate_on_grid(
    residuals: &TimeSeries,
    kernel: Kernel,
    mode: BandwidthMode,
    grid: &[f64],
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let len = residuals.len();
    let d = residuals.dim();
    if len < 2 {
        return Err(Error::InvalidArgument("need at least two residuals to smooth".into()));
    }
    let cells: Vec<(usize, usize)> = (0..d).flat_map(|k| (k..d).map(move |l| (k, l))).collect();
    let mult: Vec<f64> = cells.iter().map(|&(k, l)| if k == l { 1.0 } else { 2.0 }).collect();
    let scores = cell_scores(residuals, kernel, grid);

    let mut trace = Vec::with_capacity(grid.len());
    for (b, s) in grid.iter().zip(&scores) {
        let total = match s {
            Some(s) => s.iter().zip(&mult).map(|(v, m)| v * m).sum(),
            None => f64::INFINITY,
        };
        trace.push((*b, total));
    }
    let argmin = |vals: &mut dyn Iterator<Item = f64>| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in vals.enumerate() {
            if v.is_finite() && best.is_none_or(|(_, bv)| v < bv) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    };
    let degenerate = || Error::DegenerateKernel {
        t: 0,
        len,
        bandwidth: grid[grid.len() - 1],
    };

    let mut bw = Matrix::zeros(d, d);
    let score = match mode {
        BandwidthMode::Single => {
            let g = argmin(&mut trace.iter().map(|x| x.1)).ok_or_else(degenerate)?;
            bw.fill(grid[g]);
            trace[g].1
        }
        BandwidthMode::PerCell => {
            let mut total = 0.0;
            for (c, &(k, l)) in cells.iter().enumerate() {
                let g = argmin(&mut scores.iter().map(|s| s.as_ref().map_or(f64::INFINITY, |s| s[c])))
                    .ok_or_else(degenerate)?;
                bw[(k, l)] = grid[g];
                bw[(l, k)] = grid[g];
                total += mult[c] * scores[g].as_ref().expect("finite score")[c];
            }
            total
        }
    };
    Ok(CvResult { bandwidths: bw, score, trace })
}

/// Full pipeline: bandwidth choice, smoothing, regularization and square
/// roots.
pub fn estimate_vol_path(residuals: &TimeSeries, cfg: &KernelConfig) -> Result<VolPathEstimate> {
    cfg.validate()?;
    let d = residuals.dim();
    let (bandwidths, cv_score) = match cfg.fixed_bandwidth {
        Some(b) => (Matrix::from_element(d, d, b), f64::NAN),
        None => {
            let cv = cross_validate(residuals, cfg)?;
            (cv.bandwidths, cv.score)
        }
    };
    let raw = smooth_residual_covariance(residuals, cfg.kernel, &bandwidths)?;
    let sigma = regularize(&raw, cfg.nu)?;
    let mut h = Vec::with_capacity(sigma.len());
    let mut h_inv = Vec::with_capacity(sigma.len());
    for s in &sigma {
        let (a, b) = matnum::pd_sqrt_and_inv(s)?;
        h.push(a);
        h_inv.push(b);
    }
    Ok(VolPathEstimate {
        sigma,
        h,
        h_inv,
        bandwidths,
        cv_score,
        nu: cfg.nu,
    })
}
