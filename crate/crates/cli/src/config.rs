//! Command arguments and their resolved, serializable run configurations.
//!
//! Every artifact embeds the resolved configuration. Output destinations and
//! the execution policy are not part of it: they do not change results.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use tpbn::dist::{calibrate_phi, Phi, TpbParams};
use tpbn::sim::{Engine, MethodSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Gibbs,
    Vb,
    Map,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV file: response in the first column, predictors in the rest
    #[arg(long)]
    pub input: PathBuf,
    /// The first row of the input is a header
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum)]
    pub method: FitMethod,
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    /// A positive value, "auto" (calibrated) or "cauchy" (half-Cauchy hyperprior).
    /// Defaults to cauchy for gibbs and vb, 1 for map
    #[arg(long)]
    pub phi: Option<String>,
    /// Threshold t in P(rho > t) = prob for --phi auto
    #[arg(long, default_value_t = 0.5)]
    pub shrink_threshold: f64,
    #[arg(long, default_value_t = 0.99)]
    pub shrink_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub d0: f64,
    /// Gibbs sweeps in total
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Convergence tolerance (vb: 1e-8, map: 1e-10)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap (vb: 10000, map: 5000)
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Center y and X and scale columns to unit norm before fitting;
    /// estimates are reported on the original scale with an intercept
    #[arg(long)]
    pub standardize: bool,
    /// Include wall-clock timing in the report (breaks byte reproducibility)
    #[arg(long)]
    pub timing: bool,
    /// Report path; standard output when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Gibbs draws as CSV
    #[arg(long)]
    pub chain_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub input: String,
    pub header: bool,
    pub method: FitMethod,
    pub a: f64,
    pub b: f64,
    /// As requested: a number, "auto" or "cauchy".
    pub phi: String,
    /// The fixed φ used, if any.
    pub phi_value: Option<f64>,
    pub shrink_threshold: f64,
    pub shrink_prob: f64,
    pub c0: f64,
    pub d0: f64,
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub standardize: bool,
    pub timing: bool,
    /// Gibbs: whether every kept draw was stored (enables quantile intervals).
    pub keep_draws: Option<bool>,
}

fn parse_phi(s: &str) -> CliResult<Option<f64>> {
    match s {
        "cauchy" => Ok(None),
        _ => match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Some(v)),
            _ => Err(CliError::Usage(format!("--phi must be a positive number, 'auto' or 'cauchy', got '{s}'"))),
        },
    }
}

impl FitArgs {
    pub fn resolve(&self) -> CliResult<FitConfig> {
        if self.chain_out.is_some() && self.method != FitMethod::Gibbs {
            return Err(CliError::Usage("--chain-out is only valid with --method gibbs".into()));
        }
        let phi = self.phi.clone().unwrap_or_else(|| match self.method {
            FitMethod::Map => "1".into(),
            _ => "cauchy".into(),
        });
        let phi_value = if phi == "auto" {
            Some(calibrate_phi(self.a, self.b, self.shrink_threshold, self.shrink_prob)?)
        } else {
            parse_phi(&phi)?
        };
        if self.method == FitMethod::Map && phi_value.is_none() {
            return Err(CliError::Usage("--method map needs a fixed phi (a number or 'auto')".into()));
        }
        let (tol, max_iter) = match self.method {
            FitMethod::Map => (self.tol.unwrap_or(1e-10), self.max_iter.unwrap_or(5000)),
            _ => (self.tol.unwrap_or(1e-8), self.max_iter.unwrap_or(10_000)),
        };
        let cfg = FitConfig {
            input: self.input.display().to_string(),
            header: self.header,
            method: self.method,
            a: self.a,
            b: self.b,
            phi,
            phi_value,
            shrink_threshold: self.shrink_threshold,
            shrink_prob: self.shrink_prob,
            c0: self.c0,
            d0: self.d0,
            iters: self.iters,
            burnin: self.burnin,
            thin: self.thin,
            tol,
            max_iter,
            seed: self.seed,
            standardize: self.standardize,
            timing: self.timing,
            keep_draws: None,
        };
        cfg.tpb()?;
        Ok(cfg)
    }
}

impl FitConfig {
    pub fn tpb(&self) -> CliResult<TpbParams> {
        let phi = match self.phi_value {
            Some(v) => Phi::Fixed(v),
            None => Phi::HalfCauchy,
        };
        Ok(TpbParams::new(self.a, self.b, phi)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimCase {
    #[value(name = "1")]
    #[serde(rename = "1")]
    One,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    Highdim,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub case: SimCase,
    /// Defaults: 50 (case 1), 250 (case 2), 100 (highdim)
    #[arg(long)]
    pub n: Option<usize>,
    /// Defaults: 20 (case 1), 100 (case 2), 10000 (highdim)
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Planted signals (highdim)
    #[arg(long, default_value_t = 10)]
    pub signals: usize,
    #[arg(long, default_value_t = 3.0)]
    pub signal_value: f64,
    #[arg(long, default_value_t = 3.0)]
    pub noise_sd: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub case: SimCase,
    pub n: usize,
    pub p: usize,
    pub replicates: usize,
    pub seed: u64,
    pub signals: usize,
    pub signal_value: f64,
    pub noise_sd: f64,
}

pub fn default_dims(case: SimCase) -> (usize, usize) {
    match case {
        SimCase::One => (50, 20),
        SimCase::Two => (250, 100),
        SimCase::Highdim => (100, 10_000),
    }
}

impl SimulateArgs {
    pub fn resolve(&self) -> CliResult<SimulateConfig> {
        let (n0, p0) = default_dims(self.case);
        let cfg = SimulateConfig {
            case: self.case,
            n: self.n.unwrap_or(n0),
            p: self.p.unwrap_or(p0),
            replicates: self.replicates,
            seed: self.seed,
            signals: self.signals,
            signal_value: self.signal_value,
            noise_sd: self.noise_sd,
        };
        if cfg.n == 0 || cfg.p == 0 || cfg.replicates == 0 {
            return Err(CliError::Usage("n, p and replicates must be positive".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_enum)]
    pub case: SimCase,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    /// Comma-separated engine:a:b:phi entries, e.g. "vb:0.5:0.5:cauchy,map:1:0.5:1e-4".
    /// The cross-validated lasso is always included
    #[arg(long, default_value = "vb:0.5:0.5:cauchy")]
    pub methods: String,
    #[arg(long, default_value_t = 2000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 6000)]
    pub gibbs_iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub gibbs_burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Run replicates one after another
    #[arg(long)]
    pub sequential: bool,
    /// Output directory for records.csv, bootstrap.csv and summary.json
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub case: SimCase,
    pub n: usize,
    pub p: usize,
    pub replicates: usize,
    pub methods: Vec<MethodSpec>,
    pub bootstrap: usize,
    pub folds: usize,
    pub gibbs_iters: usize,
    pub gibbs_burnin: usize,
    pub seed: u64,
}

pub fn parse_methods(spec: &str) -> CliResult<Vec<MethodSpec>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let engine = match parts[0] {
            "gibbs" => Engine::Gibbs,
            "vb" => Engine::Vb,
            "map" => Engine::Map,
            "lasso" => Engine::Lasso,
            other => return Err(CliError::Usage(format!("unknown engine '{other}' in --methods"))),
        };
        if engine == Engine::Lasso {
            if parts.len() != 1 {
                return Err(CliError::Usage("lasso takes no prior in --methods".into()));
            }
            continue;
        }
        if parts.len() != 4 {
            return Err(CliError::Usage(format!("method '{item}' must have the form engine:a:b:phi")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("'{s}' is not a number in method '{item}'")))
        };
        let phi = match parse_phi(parts[3])? {
            Some(v) => Phi::Fixed(v),
            None => Phi::HalfCauchy,
        };
        let prior = TpbParams::new(num(parts[1])?, num(parts[2])?, phi)?;
        if engine == Engine::Map && phi == Phi::HalfCauchy {
            return Err(CliError::Usage(format!("method '{item}': map needs a fixed phi")));
        }
        out.push(MethodSpec { engine, prior: Some(prior) });
    }
    Ok(out)
}

impl BenchmarkArgs {
    pub fn resolve(&self) -> CliResult<BenchmarkConfig> {
        if self.case == SimCase::Highdim {
            return Err(CliError::Usage("benchmark supports --case 1 or 2".into()));
        }
        let (n0, p0) = default_dims(self.case);
        Ok(BenchmarkConfig {
            case: self.case,
            n: self.n.unwrap_or(n0),
            p: self.p.unwrap_or(p0),
            replicates: self.replicates,
            methods: parse_methods(&self.methods)?,
            bootstrap: self.bootstrap,
            folds: self.folds,
            gibbs_iters: self.gibbs_iters,
            gibbs_burnin: self.gibbs_burnin,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.99)]
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub a: f64,
    pub b: f64,
    pub threshold: f64,
    pub target: f64,
}

impl CalibrateArgs {
    pub fn resolve(&self) -> CalibrateConfig {
        CalibrateConfig {
            a: self.a,
            b: self.b,
            threshold: self.threshold,
            target: self.target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Fit(FitConfig),
    Simulate(SimulateConfig),
    Benchmark(BenchmarkConfig),
    CalibratePhi(CalibrateConfig),
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Any JSON artifact written by tpbn (report, manifest or summary)
    pub artifact: PathBuf,
    /// New destination: a file for fit and calibrate-phi, a directory otherwise.
    /// Standard output for fit and calibrate-phi when omitted
    #[arg(long)]
    pub to: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}
