//! Acceptance checks, one PASS/FAIL line each.
//!
//! `ACCEPTANCE_ONLY=2,5` restricts the run to the listed checks.
//! `ACCEPTANCE_STRICT=1` turns any FAIL into a nonzero exit status.

use std::time::Instant;

use hetport::diagnostics::{autocov_panel, diagnose, Normalization};
use hetport::estimate::{fit_als, fit_gls, fit_ols, lambda_set, VarFit, VolSource};
use hetport::matnum::{self, Matrix, Vector};
use hetport::model::{simulate, SimConfig, TimeSeries, VarCoefficients, VolCurve};
use hetport::montecarlo::{run_experiment, weight_summary, Dgp, ExperimentConfig, RejectionTable, VolDesign};
use hetport::portmanteau::delta_ols;
use hetport::quadform::WeightedChiSq;
use hetport::theory::{c_sigma, example1_cov, example2_delta, PiecewiseVolIntegrals, TwoRegime};
use hetport::volatility::KernelConfig;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

type Check = fn() -> Verdict;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn sim(c: &VarCoefficients, v: &VolCurve, len: usize, seed: u64) -> TimeSeries {
    simulate(c, v, &SimConfig { len, seed, burn_in: 0 }).expect("simulation")
}

fn table(preset: &str, lens: &[usize], ms: &[usize], tests: &[&str]) -> RejectionTable {
    let mut cfg = ExperimentConfig::preset(preset).expect("preset");
    cfg.lens = lens.to_vec();
    cfg.ms = ms.to_vec();
    cfg.tests = tests.iter().map(|s| s.to_string()).collect();
    run_experiment(&cfg).expect("experiment")
}

fn in_band(t: &RejectionTable, rate: f64) -> bool {
    let (lo, hi) = t.band();
    rate >= lo && rate <= hi
}

fn quadform_chi_square() -> Verdict {
    let factors = [0.02, 0.1, 0.25, 0.4, 0.6, 0.8, 0.95, 1.0, 1.1, 1.3, 1.6, 2.0, 2.5, 3.2, 4.5];
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in [1usize, 4, 16, 60] {
        let law = WeightedChiSq::chi_square(k);
        let oracle = ChiSquared::new(k as f64).unwrap();
        for f in factors {
            let x = f * k as f64;
            let got = law.upper_tail(x).expect("tail");
            worst = worst.max((got - oracle.sf(x)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-7 && secs < 1.0, format!("max |error| {worst:.2e} over 60 points in {secs:.3}s"))
}

fn closed_form_oracles() -> Verdict {
    let m = 3;
    let specs = [
        TwoRegime { s10: 1.0, s11: 4.0, s20: 1.0, s21: 0.25, tau1: 0.5, tau2: 0.5 },
        TwoRegime { s10: 0.5, s11: 1.5, s20: 1.2, s21: 0.4, tau1: 0.3, tau2: 0.7 },
        TwoRegime { s10: 2.0, s11: 0.3, s20: 0.7, s21: 3.0, tau1: 0.8, tau2: 0.15 },
    ];
    let mut quad_err: f64 = 0.0;
    for sp in &specs {
        let a = PiecewiseVolIntegrals::closed_form(sp);
        let b = PiecewiseVolIntegrals::by_quadrature(&sp.curve()).expect("quadrature");
        let (ea, eb) = (example1_cov(&a, m).unwrap(), example1_cov(&b, m).unwrap());
        quad_err = quad_err
            .max((&ea.sigma_ols - &eb.sigma_ols).amax())
            .max((&ea.sigma_gls - &eb.sigma_gls).amax())
            .max((example2_delta(&a, m).unwrap() - example2_delta(&b, m).unwrap()).amax());
    }

    // Simulated white noise with known two-regime volatility, fitted by a VAR(1).
    let sp = specs[1];
    let vol = sp.curve();
    let ints = PiecewiseVolIntegrals::closed_form(&sp);
    let ex1 = example1_cov(&ints, m).unwrap();
    let ex2 = example2_delta(&ints, m).unwrap();
    let n = 4 * m;
    let reps = 20;
    let mut draws: [Vec<Matrix>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for r in 0..reps {
        let x = sim(&VarCoefficients::white_noise(2), &vol, 10_000, 1000 + r);
        let ols = fit_ols(&x, 1).unwrap();
        let d_ols = diagnose(&ols, &x, m).unwrap();
        let s_ols = d_ols.cov.sigma_ols.clone().unwrap();
        draws[1].push(delta_ols(&s_ols, &d_ols.lambdas.sigma_g_hat).unwrap());
        draws[0].push(s_ols);
        let gls = fit_gls(&x, 1, &vol).unwrap();
        draws[2].push(diagnose(&gls, &x, m).unwrap().cov.sigma_gls.unwrap());
    }
    let med = |k: usize| Matrix::from_fn(n, n, |i, j| median(draws[k].iter().map(|a| a[(i, j)]).collect()));
    let e_ols = (med(0) - &ex1.sigma_ols).amax();
    let e_delta = (med(1) - &ex2).amax();
    let e_gls = (med(2) - &ex1.sigma_gls).amax();
    let sim_err = e_ols.max(e_delta).max(e_gls);
    verdict(
        quad_err <= 1e-10 && sim_err <= 0.05,
        format!("closed form vs quadrature {quad_err:.1e}; simulated medians off by OLS {e_ols:.3}, Delta {e_delta:.3}, GLS {e_gls:.3}"),
    )
}

/// T⁻¹ Σ g_t g_t' with g_t = (vec(ε_t ε'_{t−h}))_{h=1..m}: a fourth-moment
/// estimate that does not impose the p = 0 structure.
fn moment_cov(eps: &TimeSeries, m: usize) -> Matrix {
    let d = eps.dim();
    let n = d * d * m;
    let mut s = Matrix::zeros(n, n);
    for t in 0..eps.len() {
        let mut g = Vector::zeros(n);
        for h in 1..=m {
            if t >= h {
                let block = matnum::vec(&(eps.obs(t) * eps.obs(t - h).transpose()));
                g.rows_mut((h - 1) * d * d, d * d).copy_from(&block);
            }
        }
        s.ger(1.0, &g, &g, 1.0);
    }
    s / eps.len() as f64
}

fn white_noise_gls_identity() -> Verdict {
    let m = 2;
    let vol = VolCurve::BreakSpec { varpi: 0.2, rho: 0.0 };
    let x = sim(&VarCoefficients::white_noise(2), &vol, 10_000, 31);
    let gls = fit_gls(&x, 0, &vol).unwrap();
    let sigma = diagnose(&gls, &x, m).unwrap().cov.sigma_gls.unwrap();
    let ev = matnum::eigvals_sym(&sigma).unwrap();
    let (lo, hi) = (ev.min(), ev.max());
    let mev = matnum::eigvals_sym(&moment_cov(gls.test_residuals(), m)).unwrap();
    verdict(
        lo >= 0.9 && hi <= 1.1,
        format!(
            "eigenvalues in [{lo:.4}, {hi:.4}]; unstructured fourth-moment estimate (informative) in [{:.3}, {:.3}]",
            mev.min(),
            mev.max()
        ),
    )
}

fn scalar_vol_identity() -> Verdict {
    let m = 5;
    let vol = VolCurve::ScalarTrend { dim: 2, pi1: 150.0 };
    let analytic = c_sigma(&vol).unwrap().value;
    let x = sim(&VarCoefficients::white_noise(2), &vol, 10_000, 41);

    let ols = fit_ols(&x, 0).unwrap();
    let d_ols = diagnose(&ols, &x, m).unwrap();
    let delta = delta_ols(d_ols.cov.sigma_ols.as_ref().unwrap(), &d_ols.lambdas.sigma_g_hat).unwrap();
    let mut ev_delta: Vec<f64> = matnum::eigvals_sym(&delta).unwrap().iter().copied().collect();
    ev_delta.sort_by(f64::total_cmp);

    let gls = fit_gls(&x, 0, &vol).unwrap();
    let sigma_gls = diagnose(&gls, &x, m).unwrap().cov.sigma_gls.unwrap();
    let mut ev_gls: Vec<f64> = matnum::eigvals_sym(&sigma_gls).unwrap().iter().copied().collect();
    ev_gls.sort_by(f64::total_cmp);

    // plug-in c_σ from the known variance path, and from the kernel estimate
    let plug_in = |s2: &[f64]| {
        let n = s2.len() as f64;
        let m1 = s2.iter().sum::<f64>() / n;
        let m2 = s2.iter().map(|v| v * v).sum::<f64>() / n;
        m2 / (m1 * m1)
    };
    let len = x.len();
    let known: Vec<f64> = (1..=len).map(|t| vol.sigma(t as f64 / len as f64)[(0, 0)]).collect();
    let c_hat = plug_in(&known);
    let als = fit_als(&x, 0, &KernelConfig::default()).unwrap();
    let VolSource::Estimated(est) = &als.vol else {
        return verdict(false, "ALS fit carries no estimated path".into());
    };
    let smoothed: Vec<f64> = est.sigma.iter().map(|s| s.trace() / 2.0).collect();
    let c_kernel = plug_in(&smoothed);

    let worst = ev_delta
        .iter()
        .zip(&ev_gls)
        .map(|(a, b)| (a - c_hat * b).abs() / (c_hat * b))
        .fold(0.0f64, f64::max);
    let c_err = (c_hat - analytic).abs() / analytic;
    verdict(
        worst <= 0.05 && c_err <= 0.02,
        format!(
            "c_hat {c_hat:.4} vs {analytic:.4} ({:.2}%); Delta eigenvalues in [{:.4}, {:.4}], max relative gap {:.2}%; kernel-path c (informative) {c_kernel:.4}",
            100.0 * c_err,
            ev_delta[0],
            ev_delta[ev_delta.len() - 1],
            100.0 * worst
        ),
    )
}

fn table1_size() -> Verdict {
    let t = table("table1", &[200], &[5], &["LB_OLS", "LB_ALS", "LBmod_OLS"]);
    let als = t.rate_of("LB_ALS", 200, 5).unwrap();
    let ols = t.rate_of("LB_OLS", 200, 5).unwrap();
    let modo = t.rate_of("LBmod_OLS", 200, 5).unwrap();
    let (lo, hi) = t.band();
    verdict(
        in_band(&t, als) && in_band(&t, ols),
        format!("LB_ALS {als:.1}%, LB_OLS {ols:.1}% (band [{lo:.2}, {hi:.2}]); LBmod_OLS {modo:.1}%"),
    )
}

fn table2_size() -> Verdict {
    let t = table("table2", &[200], &[5], &["LB_S", "LB_ALS", "LB_GLS"]);
    let s = t.rate_of("LB_S", 200, 5).unwrap();
    let als = t.rate_of("LB_ALS", 200, 5).unwrap();
    let gls = t.rate_of("LB_GLS", 200, 5).unwrap();
    verdict(
        s >= 25.0 && in_band(&t, als) && in_band(&t, gls),
        format!("LB_S {s:.1}% (>= 25), LB_ALS {als:.1}%, LB_GLS {gls:.1}% (band [3.65, 6.35])"),
    )
}

fn table3_size() -> Verdict {
    let t = table("table3", &[200], &[5], &["LB_S", "LB_ALS"]);
    let s = t.rate_of("LB_S", 200, 5).unwrap();
    let als = t.rate_of("LB_ALS", 200, 5).unwrap();
    verdict(
        s >= 12.0 && in_band(&t, als),
        format!("LB_S {s:.1}% (>= 12), LB_ALS {als:.1}% (band [3.65, 6.35])"),
    )
}

fn table4_weights() -> Verdict {
    let cfg = ExperimentConfig::preset("table4").unwrap();
    let summaries = weight_summary(&cfg).unwrap();
    let w = &summaries[0];
    let Some(als) = &w.als else {
        return verdict(false, "no ALS weights".into());
    };
    let tail = 4..als.mean.len();
    let mean_dev = tail.clone().map(|i| (als.mean[i] - 1.0).abs()).fold(0.0f64, f64::max);
    let sd_max = tail.map(|i| als.sd[i]).fold(0.0f64, f64::max);
    verdict(
        mean_dev <= 0.01 && sd_max <= 0.01 && als.mean[0] <= 0.10,
        format!(
            "indices 5-{}: max |mean - 1| {mean_dev:.4}, max sd {sd_max:.4}; delta_1 mean {:.3}; failures {}",
            als.mean.len(),
            als.mean[0],
            w.failures
        ),
    )
}

fn power_ordering() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in ["power-break", "power-trend"] {
        let t = table(preset, &[300], &[10], &["LB_OLS", "LB_ALS"]);
        let ols = t.rate_of("LB_OLS", 300, 10).unwrap();
        let als = t.rate_of("LB_ALS", 300, 10).unwrap();
        pass &= als >= ols - 2.0 && als >= 60.0 && ols >= 60.0;
        parts.push(format!("{preset}: LB_ALS {als:.1}%, LB_OLS {ols:.1}%"));
    }
    verdict(pass, parts.join("; "))
}

fn standardized_gamma(fit: &VarFit, m: usize) -> Vector {
    autocov_panel(fit.test_residuals(), m, Normalization::Standardized).unwrap().gamma
}

fn als_gls_equivalence() -> Verdict {
    let c = Dgp::Var2 { a: 0.0 }.coefficients().unwrap();
    let vol = VolDesign::Trend { varpi: 0.2, pi1: 250.0, pi2: 5.0 }.curve(2);
    let cfg = KernelConfig::default();
    let mut meds = Vec::new();
    for len in [200usize, 800, 3200] {
        let gaps: Vec<f64> = (0..50)
            .map(|r| {
                let x = sim(&c, &vol, len, 5000 + r);
                let als = fit_als(&x, 1, &cfg).unwrap();
                let gls = fit_gls(&x, 1, &vol).unwrap();
                (len as f64).sqrt() * (standardized_gamma(&als, 5) - standardized_gamma(&gls, 5)).norm()
            })
            .collect();
        meds.push(median(gaps));
    }
    verdict(
        meds[0] > meds[1] && meds[1] > meds[2],
        format!("median sqrt(T)|gamma_ALS - gamma_GLS| at T = 200, 800, 3200: {:.3}, {:.3}, {:.3}", meds[0], meds[1], meds[2]),
    )
}

fn efficiency_ordering() -> Verdict {
    let c = Dgp::Var2 { a: 0.0 }.coefficients().unwrap();
    let vol = VolDesign::Break { varpi: 0.2, rho: 0.0 }.curve(2);
    let reps = 200;
    let mut psd = 0;
    let mut worst: f64 = f64::INFINITY;
    for r in 0..reps {
        let x = sim(&c, &vol, 2000, 7000 + r);
        let gls = fit_gls(&x, 1, &vol).unwrap();
        let l = lambda_set(&gls, &x).unwrap();
        let l3_inv = matnum::inv_spd(&l.lambda3_hat).unwrap();
        let l1_inv = matnum::inv_spd(l.lambda1_hat.as_ref().unwrap()).unwrap();
        let diff = matnum::symmetrize(&(&l3_inv * &l.lambda2_hat * &l3_inv - l1_inv));
        if matnum::is_psd(&diff, 1e-10) {
            psd += 1;
        }
        worst = worst.min(matnum::eigvals_sym(&diff).unwrap().min());
    }
    let share = psd as f64 / reps as f64;
    verdict(
        share >= 0.95,
        format!("PSD in {psd}/{reps} replications ({:.1}%); smallest eigenvalue {worst:.3e}", 100.0 * share),
    )
}

fn determinism() -> Verdict {
    let mut cfg = ExperimentConfig::preset("table2").unwrap();
    cfg.reps = 200;
    cfg.lens = vec![100];
    let mut wcfg = ExperimentConfig::preset("table4").unwrap();
    wcfg.reps = 100;
    let mut outputs = Vec::new();
    for workers in [1usize, 3] {
        cfg.workers = workers;
        wcfg.workers = workers;
        let t = run_experiment(&cfg).unwrap();
        let w: String = weight_summary(&wcfg).unwrap().iter().map(|s| s.to_csv()).collect();
        outputs.push((t.to_csv(), t.to_text(), w));
    }
    verdict(
        outputs[0] == outputs[1],
        "rejection table and weight summary at 1 and 3 workers compared byte for byte".into(),
    )
}

fn main() {
    let checks: [(u32, &str, Check); 12] = [
        (1, "weighted chi-square tail vs chi-square oracle", quadform_chi_square),
        (2, "closed-form covariances vs quadrature and simulation", closed_form_oracles),
        (3, "white-noise GLS residual covariance is the identity", white_noise_gls_identity),
        (4, "scalar-volatility identity Delta = c_sigma Sigma_GLS", scalar_vol_identity),
        (5, "size under homoscedasticity (table1)", table1_size),
        (6, "size under a volatility break (table2)", table2_size),
        (7, "size under trending volatility (table3)", table3_size),
        (8, "estimated ALS weights (table4)", table4_weights),
        (9, "power ordering at T = 300", power_ordering),
        (10, "ALS and GLS autocovariances converge", als_gls_equivalence),
        (11, "GLS efficiency ordering", efficiency_ordering),
        (12, "Monte Carlo determinism across worker counts", determinism),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut run, mut passed) = (0, 0);
    for (id, name, check) in checks {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        run += 1;
        passed += usize::from(v.pass);
        println!(
            "{} {id:>2} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{run} passed");
    if strict && passed < run {
        std::process::exit(1);
    }
}
