//! Distribution of `Q = Σ δ_i U_i²` with `U_i` iid N(0, 1) and `δ_i ≥ 0`.
//!
//! Tail probabilities use Imhof's inversion formula
//!
//! ```text
//! P(Q > x) = 1/2 + (1/π) ∫₀^∞ sin θ(u) / (u ρ(u)) du,
//! θ(u) = ½ Σ arctan(δ_i u) − ½ x u,   ρ(u) = Π (1 + δ_i² u²)^{1/4}.
//! ```
//!
//! θ is concave, so past its maximum the zeros of sin θ are found by
//! one-dimensional root search and the integral becomes an alternating
//! series of half-period chunks. The series is summed until Imhof's
//! truncation bound, the alternating-series bound, or a Wynn ε-accelerated
//! estimate meets the tolerance.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad;

/// Default absolute accuracy of tail probabilities.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Weights below this fraction of the largest weight are treated as zero.
pub const WEIGHT_FLOOR: f64 = 1e-12;
const MAX_CHUNKS: usize = 5000;
const WYNN_WINDOW: usize = 40;

/// Law of a nonnegatively weighted sum of independent χ²(1) variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedChiSq {
    weights: Vec<f64>,
    tolerance: f64,
}

impl WeightedChiSq {
    /// Weights are sorted in descending order. Tiny negative values (down to
    /// `-1e-10` times the largest weight) are set to zero; anything more
    /// negative is rejected.
    pub fn new(weights: &[f64]) -> Result<Self> {
        Self::with_tolerance(weights, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(weights: &[f64], tolerance: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("non-finite weight".into()));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")));
        }
        let max = weights.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut w = Vec::with_capacity(weights.len());
        for &v in weights {
            if v < -1e-10 * max {
                return Err(Error::InvalidArgument(format!("negative weight {v}")));
            }
            w.push(v.max(0.0));
        }
        w.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { weights: w, tolerance })
    }

    /// `k` unit weights: the χ²(k) law.
    pub fn chi_square(k: usize) -> Self {
        Self {
            weights: vec![1.0; k],
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Weights that carry distributional mass.
    pub fn active_weights(&self) -> Vec<f64> {
        let max = self.weights.first().copied().unwrap_or(0.0);
        self.weights.iter().copied().filter(|&w| w > WEIGHT_FLOOR * max && w > 0.0).collect()
    }

    /// `P(Q > x)`.
    ///
    /// With no active weight the law is a point mass at zero and the result
    /// is 0 for every `x`.
    pub fn upper_tail(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::InvalidArgument("tail point is NaN".into()));
        }
        let active = self.active_weights();
        if active.is_empty() {
            return Ok(0.0);
        }
        if x <= 0.0 {
            return Ok(1.0);
        }
        if x.is_infinite() {
            return Ok(0.0);
        }
        let scale = active[0];
        let delta: Vec<f64> = active.iter().map(|w| w / scale).collect();
        imhof(&delta, x / scale, self.tolerance)
    }

    /// Smallest `x` with `P(Q > x) = prob`, by bracketing and bisection.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::InvalidArgument(format!("probability {prob} outside (0, 1)")));
        }
        if self.active_weights().is_empty() {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = self.mean().max(f64::MIN_POSITIVE);
        let mut guard = 0;
        while self.upper_tail(hi)? > prob {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::ConvergenceFailure("quantile bracket did not close".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
                break;
            }
            if self.upper_tail(mid)? > prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// θ(u) and θ'(u) for normalized weights.
fn theta(delta: &[f64], x: f64, u: f64) -> f64 {
    0.5 * delta.iter().map(|d| (d * u).atan()).sum::<f64>() - 0.5 * x * u
}

fn theta_prime(delta: &[f64], x: f64, u: f64) -> f64 {
    0.5 * delta.iter().map(|d| d / (1.0 + d * d * u * u)).sum::<f64>() - 0.5 * x
}

fn integrand(delta: &[f64], x: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 0.5 * (delta.iter().sum::<f64>() - x);
    }
    let log_rho = 0.25 * delta.iter().map(|d| (d * d * u * u).ln_1p()).sum::<f64>();
    theta(delta, x, u).sin() / (u * log_rho.exp())
}

/// Bisection for a root of a monotone function on `[lo, hi]`, where
/// `f(lo) >= 0 >= f(hi)`.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Point past which θ decreases.
fn theta_peak(delta: &[f64], x: f64) -> f64 {
    if theta_prime(delta, x, 0.0) <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while theta_prime(delta, x, hi) > 0.0 {
        hi *= 2.0;
    }
    bisect_decreasing(|u| theta_prime(delta, x, u), 0.0, hi)
}

/// Solves θ(u) = target for u ≥ `from`, on the decreasing branch.
fn theta_crossing(delta: &[f64], x: f64, from: f64, target: f64) -> f64 {
    let f = |u: f64| theta(delta, x, u) - target;
    let mut step = 2.0 * PI / x;
    let mut hi = from + step;
    while f(hi) > 0.0 {
        step *= 2.0;
        hi = from + step;
    }
    bisect_decreasing(f, from, hi)
}

/// log of Imhof's bound on `(1/π) |∫_U^∞ …|`.
fn log_truncation_bound(delta: &[f64], u: f64) -> f64 {
    let n = delta.len() as f64;
    let half_log_det: f64 = 0.5 * delta.iter().map(|d| d.ln()).sum::<f64>();
    -(PI * 0.5 * n).ln() - 0.5 * n * u.ln() - half_log_det
}

/// Wynn ε extrapolation of a sequence of partial sums; returns the entry
/// of the highest even column that uses the latest sums.
fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur = s.to_vec();
    let mut best = s[n - 1];
    for k in 1..n {
        let len = cur.len() - 1;
        let mut next = vec![0.0; len];
        for i in 0..len {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 {
                return best;
            }
            next[i] = prev[i + 1] + 1.0 / diff;
        }
        prev = cur;
        cur = next;
        if k % 2 == 0 {
            best = cur[len - 1];
        }
    }
    best
}

fn imhof(delta: &[f64], x: f64, tol: f64) -> Result<f64> {
    let f = |u: f64| vec![integrand(delta, x, u)];
    // Work on the scale of the integral, P = 1/2 + I/π.
    let itol = tol * PI;
    let chunk_tol = itol * 1e-3;

    let peak = theta_peak(delta, x);
    let theta_max = theta(delta, x, peak);
    let mut level = (theta_max / PI).floor();
    let mut u_prev = theta_crossing(delta, x, peak, level * PI);
    let mut total = quad::integrate_vec(&f, 0.0, u_prev, chunk_tol)?[0];

    let mut partial = Vec::new();
    let mut last_wynn: Option<f64> = None;
    let mut stable = 0;
    for _ in 0..MAX_CHUNKS {
        level -= 1.0;
        let u_next = theta_crossing(delta, x, u_prev, level * PI);
        let chunk = quad::integrate_vec(&f, u_prev, u_next, chunk_tol)?[0];
        total += chunk;
        u_prev = u_next;

        if log_truncation_bound(delta, u_prev) <= (0.5 * tol).ln() {
            return Ok(finish(total));
        }
        // Chunks alternate in sign with shrinking magnitude.
        if chunk.abs() <= 0.25 * itol {
            return Ok(finish(total));
        }
        partial.push(total);
        let start = partial.len().saturating_sub(WYNN_WINDOW);
        if partial.len() - start >= 5 {
            let est = wynn_epsilon(&partial[start..]);
            if let Some(prev) = last_wynn {
                if (est - prev).abs() <= 0.05 * itol {
                    stable += 1;
                    if stable >= 2 {
                        return Ok(finish(est));
                    }
                } else {
                    stable = 0;
                }
            }
            last_wynn = Some(est);
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "Imhof integral did not converge within {MAX_CHUNKS} chunks (n = {}, x = {x})",
        delta.len()
    )))
}

fn finish(integral: f64) -> f64 {
    (0.5 + integral / PI).clamp(0.0, 1.0)
}
