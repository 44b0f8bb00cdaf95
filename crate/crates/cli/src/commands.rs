//! Subcommand implementations.

use std::path::Path;

use hetport::diagnostics::{bounds_csv, confidence_bounds, diagnose as diagnose_fit, naive_residual_cov};
use hetport::estimate::{fit_als_from_ols, fit_gls, fit_ols, FitReport, VarFit};
use hetport::model::{simulate as simulate_path, SimConfig, VolCurve};
use hetport::montecarlo::{run_experiment, weight_summary, Dgp, ExperimentConfig, VolDesign, WeightSummary};
use hetport::portmanteau::{pvalue_table, statistic_table, SuiteConfig, TestReport, TestSuite};
use hetport::theory::{oracle_fixture, TwoRegime};
use hetport::volatility::cross_validate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::series_csv;
use crate::error::CliError;
use crate::{DgpArg, DiagnoseArgs, FitArgs, McArgs, MethodArg, OracleArgs, SimulateArgs, VolDesignArg};

/// Reads a TOML file (by extension) or JSON otherwise.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn load_vol(path: &Path) -> Result<VolCurve, CliError> {
    let v: VolCurve = read_config(path)?;
    v.validate()?;
    Ok(v)
}

/// Coefficient matrices with bracketed standard errors.
pub fn fit_text(r: &FitReport) -> String {
    let mut out = format!("{} estimate of a VAR({}), d = {}, T = {}\n", r.method, r.order, r.dim, r.len);
    if r.order == 0 {
        out.push_str("no autoregressive coefficients\n");
    }
    for (k, (a, se)) in r.coefficients.iter().zip(&r.standard_errors).enumerate() {
        out.push_str(&format!("A{}\n", k + 1));
        for (row, srow) in a.iter().zip(se) {
            let cells: Vec<String> = row.iter().zip(srow).map(|(c, s)| format!("{c:>9.4} [{s:.4}]")).collect();
            out.push_str(&cells.join("  "));
            out.push('\n');
        }
    }
    if let Some(b) = &r.bandwidths {
        let first = b[0][0];
        if b.iter().flatten().all(|v| *v == first) {
            out.push_str(&format!("bandwidth {first:.4e}\n"));
        } else {
            out.push_str("bandwidths\n");
            for row in b {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.4e}")).collect();
                out.push_str(&cells.join("  "));
                out.push('\n');
            }
        }
    }
    if let Some(s) = r.cv_score {
        out.push_str(&format!("CV score {s:.6e}\n"));
    }
    out
}

pub fn fit(a: FitArgs) -> Result<(), CliError> {
    let x = a.data.load()?;
    let kcfg = a.kernel.config()?;
    if a.cv_trace.is_some() && !matches!(a.method, MethodArg::Als) {
        return Err(CliError::Input("--cv-trace applies to ALS only".into()));
    }
    let fit = match a.method {
        MethodArg::Ols => fit_ols(&x, a.order)?,
        MethodArg::Gls => {
            let path = a.vol.as_ref().ok_or_else(|| CliError::Input("GLS needs --vol".into()))?;
            fit_gls(&x, a.order, &load_vol(path)?)?
        }
        MethodArg::Als => {
            let ols = fit_ols(&x, a.order)?;
            if let Some(path) = &a.cv_trace {
                if kcfg.fixed_bandwidth.is_some() {
                    return Err(CliError::Input("--cv-trace needs cross-validation; drop --bandwidth".into()));
                }
                write_file(path, &cross_validate(&ols.residuals_u, &kcfg)?.trace_csv())?;
            }
            fit_als_from_ols(&x, &ols, &kcfg)?
        }
    };
    let report = fit.report();
    print!("{}", fit_text(&report));
    if let Some(path) = &a.json {
        write_file(path, &to_json(&report)?)?;
    }
    Ok(())
}

/// Machine-readable twin of the diagnose tables.
#[derive(Debug, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub schema_version: u32,
    pub order: usize,
    pub len: usize,
    pub level: f64,
    pub reports: Vec<TestReport>,
}

fn suite_fit(suite: &TestSuite, method: MethodArg) -> Result<&VarFit, CliError> {
    match method {
        MethodArg::Ols => Ok(&suite.ols),
        MethodArg::Als => suite.als.as_ref().map_err(|e| CliError::from(e.clone())),
        MethodArg::Gls => match &suite.gls {
            Some(r) => r.as_ref().map_err(|e| CliError::from(e.clone())),
            None => Err(CliError::Input("GLS bounds need --vol".into())),
        },
    }
}

pub fn diagnose(a: DiagnoseArgs) -> Result<(), CliError> {
    let x = a.data.load()?;
    let cfg = SuiteConfig {
        kernel: a.kernel.config()?,
        known_vol: a.vol.as_deref().map(load_vol).transpose()?,
        level: a.level,
    };
    if a.m.is_empty() || a.m.contains(&0) {
        return Err(CliError::Input("--m needs positive lag counts".into()));
    }
    let suite = TestSuite::new(&x, a.order, &cfg)?;
    let mut reports = Vec::new();
    for &m in &a.m {
        reports.extend(suite.run(m)?);
    }
    println!("p-values (%)");
    print!("{}", pvalue_table(&reports));
    println!();
    println!("statistics");
    print!("{}", statistic_table(&reports));
    for r in reports.iter().filter(|r| !r.notes.is_empty()) {
        eprintln!("{} (m = {}): {}", r.name, r.m, r.notes.join("; "));
    }
    if let Some(path) = &a.json {
        let doc = DiagnoseReport {
            schema_version: 1,
            order: a.order,
            len: x.len(),
            level: a.level,
            reports,
        };
        write_file(path, &to_json(&doc)?)?;
    }
    if let Some(path) = &a.bounds {
        let m = a.bounds_m.unwrap_or_else(|| *a.m.iter().max().expect("non-empty"));
        let fit = suite_fit(&suite, a.bounds_method)?;
        let diag = diagnose_fit(fit, &x, m)?;
        let naive = naive_residual_cov(fit, &x, &diag.lambdas, m)?;
        let rows = confidence_bounds(&diag.panel, &diag.cov, &naive, a.level)?;
        write_file(path, &bounds_csv(&rows))?;
    }
    Ok(())
}

/// Simulation settings read from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub dgp: Dgp,
    pub vol: VolDesign,
    pub len: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub burn_in: usize,
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = match &a.config {
        Some(path) => read_config(path)?,
        None => SimulateConfig {
            dgp: match a.dgp {
                DgpArg::Var2 => Dgp::Var2 { a: a.a },
                DgpArg::Uncorrelated => Dgp::Uncorrelated { b: a.b },
            },
            vol: match &a.vol {
                Some(path) => VolDesign::Custom { curve: load_vol(path)? },
                None => match a.vol_design {
                    VolDesignArg::Iid => VolDesign::Iid,
                    VolDesignArg::Break => VolDesign::Break { varpi: 0.2, rho: 0.0 },
                    VolDesignArg::Trend => VolDesign::Trend { varpi: 0.2, pi1: 250.0, pi2: 5.0 },
                    VolDesignArg::ScalarTrend => VolDesign::ScalarTrend { pi1: 150.0 },
                    VolDesignArg::ScalarBreak => VolDesign::ScalarBreak { jump: 10.0 },
                },
            },
            len: a.len,
            seed: a.seed,
            burn_in: a.burn_in,
        },
    };
    let coeffs = cfg.dgp.coefficients()?;
    let vol = cfg.vol.curve(coeffs.dim());
    vol.validate()?;
    let x = simulate_path(&coeffs, &vol, &SimConfig { len: cfg.len, seed: cfg.seed, burn_in: cfg.burn_in })?;
    let csv = series_csv(&x);
    match &a.out {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn weights_csv(summaries: &[WeightSummary]) -> String {
    let mut out = String::from("T,m,method,index,mean,sd\n");
    for s in summaries {
        for line in s.to_csv().lines().skip(1) {
            out.push_str(&format!("{},{},{line}\n", s.len, s.m));
        }
    }
    out
}

pub fn mc(a: McArgs) -> Result<(), CliError> {
    let mut cfg = match (&a.preset, &a.config) {
        (Some(name), None) => ExperimentConfig::preset(name)?,
        (None, Some(path)) => read_config::<ExperimentConfig>(path)?,
        _ => return Err(CliError::Input("give exactly one of --preset or --config".into())),
    };
    if let Some(v) = a.reps {
        cfg.reps = v;
    }
    if let Some(v) = a.workers {
        cfg.workers = v;
    }
    if let Some(v) = a.seed {
        cfg.seed_root = v;
    }
    if let Some(v) = a.lens {
        cfg.lens = v;
    }
    if let Some(v) = a.ms {
        cfg.ms = v;
    }
    if cfg.name.is_empty() {
        cfg.name = "experiment".into();
    }
    cfg.validate()?;
    let (text, csv, json) = if a.weights || cfg.name == "table4" {
        let summaries = weight_summary(&cfg)?;
        let text: String = summaries.iter().map(|s| s.to_text()).collect::<Vec<_>>().join("\n");
        (text, weights_csv(&summaries), to_json(&summaries)?)
    } else {
        let table = run_experiment(&cfg)?;
        (table.to_text(), table.to_csv(), to_json(&table)?)
    };
    print!("{text}");
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        write_file(&dir.join(format!("{}.txt", cfg.name)), &text)?;
        write_file(&dir.join(format!("{}.csv", cfg.name)), &csv)?;
        write_file(&dir.join(format!("{}.json", cfg.name)), &json)?;
    }
    Ok(())
}

pub fn oracle(a: OracleArgs) -> Result<(), CliError> {
    let spec: TwoRegime = match &a.spec {
        Some(path) => read_config(path)?,
        None => TwoRegime { s10: 1.0, s11: 4.0, s20: 1.0, s21: 0.25, tau1: 0.5, tau2: 0.5 },
    };
    spec.curve().validate()?;
    let json = to_json(&oracle_fixture(&spec, a.m)?)?;
    match &a.out {
        Some(path) => write_file(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
