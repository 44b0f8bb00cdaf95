//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! Vector-valued integrands are supported so that matrix integrals can be
//! computed entrywise in a single pass; the error estimate of a panel is the
//! largest componentwise |K15 - G7| difference.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Maximum number of panels kept by the adaptive scheme.
pub const MAX_PANELS: usize = 4000;

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn gk15<F>(f: &F, a: f64, b: f64) -> (Vec<f64>, f64)
where
    F: Fn(f64) -> Vec<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let n = fc.len();
    let mut kron: Vec<f64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut gauss: Vec<f64> = fc.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..n {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for k in 0..n {
        kron[k] *= half;
        gauss[k] *= half;
        err = err.max((kron[k] - gauss[k]).abs());
    }
    (kron, err)
}

/// Integrates a vector-valued function over `[a, b]` to absolute accuracy
/// `abs_tol` (componentwise).
pub fn integrate_vec<F>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64>,
{
    if b <= a {
        let n = f(a).len();
        return Ok(vec![0.0; n]);
    }
    let (value, error) = gk15(f, a, b);
    let mut panels = vec![Panel { a, b, value, error }];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        if total_err <= abs_tol {
            break;
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::ConvergenceFailure(format!(
                "quadrature on [{a}, {b}] stalled at error {total_err:.3e}"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::ConvergenceFailure(format!(
                "quadrature panel collapsed near {mid}"
            )));
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        panels.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        panels.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
    }
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let n = panels[0].value.len();
    let mut out = vec![0.0; n];
    for p in &panels {
        for k in 0..n {
            out[k] += p.value[k];
        }
    }
    Ok(out)
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_vec(&|x| vec![f(x)], a, b, abs_tol).map(|v| v[0])
}

/// Integrates over `[a, b]` splitting at the given interior break points
/// (points outside the interval are ignored).
pub fn integrate_vec_with_breaks<F>(f: &F, a: f64, b: f64, breaks: &[f64], abs_tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64>,
{
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut knots = vec![a];
    knots.extend(pts);
    knots.push(b);
    let pieces = (knots.len() - 1) as f64;
    let mut total: Option<Vec<f64>> = None;
    for w in knots.windows(2) {
        let part = integrate_vec(f, w[0], w[1], abs_tol / pieces)?;
        total = Some(match total {
            None => part,
            Some(mut t) => {
                for (x, y) in t.iter_mut().zip(part) {
                    *x += y;
                }
                t
            }
        });
    }
    Ok(total.unwrap_or_default())
}
