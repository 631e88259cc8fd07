use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crate::config::*;
use crate::error::{io_err, CliError, CliResult};
use crate::io::{fmt_f64, json_string, read_dataset, to_value, write_csv, write_dataset, write_file};
use tpbn::dist::{calibrate_phi, tpb_cdf, TpbParams};
use tpbn::em::{run_em, EmOptions};
use tpbn::gibbs::{run_gibbs, GibbsChain, GibbsOptions};
use tpbn::model::{standardize, PriorConfig, Standardization};
use tpbn::par::Execution;
use tpbn::report::FitReport;
use tpbn::sim::{gen_case, gen_highdim, replicate_snr, run_benchmark, BenchmarkOptions, CaseSpec};
use tpbn::vb::{run_vb, VbOptions};

/// Above this many stored numbers (p × kept draws) a Gibbs fit keeps only
/// running moments unless a chain file is requested.
const DRAW_BUDGET: usize = 20_000_000;

/// Where a command's artifacts go; not part of the embedded configuration.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub file: Option<PathBuf>,
    pub dir: Option<PathBuf>,
    pub chain: Option<PathBuf>,
    pub execution: Execution,
}

fn emit(file: Option<&Path>, text: &str) -> CliResult<()> {
    match file {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {}", w.replace('\n', " "));
    }
}

fn with_config(mut body: Map<String, Value>, config: &RunConfig) -> CliResult<String> {
    body.insert("config".into(), to_value(config)?);
    Ok(json_string(&Value::Object(body)))
}

pub fn run(config: &RunConfig, out: &Outputs) -> CliResult<()> {
    match config {
        RunConfig::Fit(c) => fit(c, out),
        RunConfig::Simulate(c) => simulate(c, out),
        RunConfig::Benchmark(c) => benchmark(c, out),
        RunConfig::CalibratePhi(c) => calibrate(c, out),
    }
}

/// Scale a report fitted on standardized data back to the original columns.
fn back_transform(report: &mut FitReport, s: &Standardization) -> f64 {
    let (beta, intercept) = s.back_transform(&DVector::from_column_slice(&report.beta));
    report.beta = beta.iter().cloned().collect();
    for c in &mut report.coefficients {
        let k = s.x_scale[c.index];
        c.estimate /= k;
        c.sd = c.sd.map(|v| v / k);
        c.lower = c.lower.map(|v| v / k);
        c.upper = c.upper.map(|v| v / k);
    }
    intercept
}

fn write_chain(path: &Path, chain: &GibbsChain, s: Option<&Standardization>) -> CliResult<()> {
    let p = chain.beta_mean.len();
    let mut header = vec!["draw".to_string(), "sigma2".to_string(), "phi".to_string()];
    if s.is_some() {
        header.push("intercept".into());
    }
    header.extend((1..=p).map(|j| format!("beta{j}")));
    let rows = chain.draws.iter().enumerate().map(|(i, d)| {
        let mut row = vec![(i + 1) as f64, 1.0 / d.sigma2_inv, d.phi];
        match s {
            Some(s) => {
                let (beta, intercept) = s.back_transform(&d.beta);
                row.push(intercept);
                row.extend(beta.iter());
            }
            None => row.extend(d.beta.iter()),
        }
        row
    });
    write_csv(path, &header, rows)
}

pub fn fit(cfg: &FitConfig, out: &Outputs) -> CliResult<()> {
    let started = Instant::now();
    let raw = read_dataset(Path::new(&cfg.input), cfg.header)?;
    let (data, scaling) = if cfg.standardize {
        let (d, s) = standardize(&raw)?;
        (d, Some(s))
    } else {
        (raw, None)
    };
    let prior = PriorConfig::with_error_prior(cfg.tpb()?, cfg.c0, cfg.d0)?;
    let mut cfg = cfg.clone();
    let (mut report, chain) = match cfg.method {
        FitMethod::Gibbs => {
            let mut opts = GibbsOptions::new(cfg.iters, cfg.burnin, cfg.thin);
            opts.schedule.validate()?;
            let keep = *cfg
                .keep_draws
                .get_or_insert(out.chain.is_some() || data.p() * opts.schedule.kept() <= DRAW_BUDGET);
            opts.keep_draws = keep || out.chain.is_some();
            let (chain, report) = run_gibbs(&data, &prior, &opts, cfg.seed)?;
            (report, Some(chain))
        }
        FitMethod::Vb => {
            let opts = VbOptions { tol: cfg.tol, max_iter: cfg.max_iter, ..VbOptions::default() };
            (run_vb(&data, &prior, None, &opts)?.1, None)
        }
        FitMethod::Map => {
            let opts = EmOptions { tol: cfg.tol, max_iter: cfg.max_iter, ..EmOptions::default() };
            (run_em(&data, &prior, &opts)?.1, None)
        }
    };
    let intercept = scaling.as_ref().map(|s| back_transform(&mut report, s));
    if let (Some(path), Some(chain)) = (&out.chain, &chain) {
        write_chain(path, chain, scaling.as_ref())?;
    }
    warn(&report.warnings);

    let mut body = match to_value(&report)? {
        Value::Object(m) => m,
        _ => unreachable!("FitReport serializes to an object"),
    };
    if cfg.timing {
        body.insert("elapsed_seconds".into(), json!(started.elapsed().as_secs_f64()));
    } else {
        body.remove("elapsed_seconds");
    }
    body.insert("intercept".into(), to_value(&intercept)?);
    body.insert("n".into(), json!(data.n()));
    body.insert("p".into(), json!(data.p()));
    emit(out.file.as_deref(), &with_config(body, &RunConfig::Fit(cfg))?)
}

fn case_spec(case: SimCase, n: usize, p: usize, replicates: usize, seed: u64) -> CaseSpec {
    match case {
        SimCase::Two => CaseSpec::case2(n, p, replicates, seed),
        _ => CaseSpec::case1(n, p, replicates, seed),
    }
}

pub fn simulate(cfg: &SimulateConfig, out: &Outputs) -> CliResult<()> {
    let dir = out
        .dir
        .as_deref()
        .ok_or_else(|| CliError::Usage("simulate needs an output directory".into()))?;
    ensure_dir(dir)?;
    let mut entries = Vec::with_capacity(cfg.replicates);
    for r in 0..cfg.replicates {
        let file = format!("replicate_{r:04}.csv");
        let mut entry = Map::new();
        entry.insert("index".into(), json!(r));
        entry.insert("file".into(), json!(file));
        let data = if cfg.case == SimCase::Highdim {
            let seed = cfg.seed.wrapping_add(r as u64);
            let data = gen_highdim(cfg.n, cfg.p, cfg.signals, cfg.signal_value, cfg.noise_sd, seed)?;
            entry.insert("seed".into(), json!(seed));
            entry.insert("design_cov".into(), json!("identity"));
            entry.insert("sigma".into(), json!(cfg.noise_sd));
            // C = I
            let truth = data.true_beta.as_ref().expect("generated with truth");
            entry.insert("snr".into(), json!(truth.norm() / cfg.noise_sd));
            data
        } else {
            let spec = case_spec(cfg.case, cfg.n, cfg.p, cfg.replicates, cfg.seed);
            let rep = gen_case(&spec, r)?;
            let c = rep.data.design_cov.as_ref().expect("generated with covariance");
            let cov_file = format!("cov_{r:04}.csv");
            let header: Vec<String> = (1..=cfg.p).map(|j| format!("c{j}")).collect();
            write_csv(&dir.join(&cov_file), &header, c.row_iter().map(|row| row.iter().cloned().collect()))?;
            entry.insert("seed".into(), json!(cfg.seed));
            entry.insert("design_cov".into(), json!(cov_file));
            entry.insert("sigma".into(), json!(rep.sigma));
            entry.insert("q".into(), json!(rep.q));
            entry.insert("snr".into(), json!(replicate_snr(&rep)));
            rep.data
        };
        let truth = data.true_beta.as_ref().expect("generated with truth");
        entry.insert("true_beta".into(), json!(truth.as_slice()));
        entry.insert("nonzero".into(), json!(truth.iter().filter(|&&b| b != 0.0).count()));
        write_dataset(&dir.join(&file), &data)?;
        entries.push(Value::Object(entry));
    }
    let mut body = Map::new();
    body.insert("replicates".into(), Value::Array(entries));
    write_file(&dir.join("manifest.json"), &with_config(body, &RunConfig::Simulate(cfg.clone()))?)
}

pub fn benchmark(cfg: &BenchmarkConfig, out: &Outputs) -> CliResult<()> {
    let dir = out
        .dir
        .as_deref()
        .ok_or_else(|| CliError::Usage("benchmark needs an output directory".into()))?;
    ensure_dir(dir)?;
    let spec = case_spec(cfg.case, cfg.n, cfg.p, cfg.replicates, cfg.seed);
    let mut options = BenchmarkOptions { bootstrap: cfg.bootstrap, execution: out.execution, ..Default::default() };
    options.cv.folds = cfg.folds;
    options.cv.execution = Execution::Sequential;
    options.gibbs.schedule.total = cfg.gibbs_iters;
    options.gibbs.schedule.burn_in = cfg.gibbs_burnin;
    let result = run_benchmark(&spec, &cfg.methods, &options)?;

    let records_path = dir.join("records.csv");
    let mut w = csv::Writer::from_path(&records_path).map_err(|e| io_err(&records_path, e))?;
    let csv_err = |e: csv::Error| io_err(&records_path, e);
    w.write_record(["replicate", "method", "model_error", "rme", "snr", "sparsity_count"])
        .map_err(csv_err)?;
    for r in &result.records {
        w.write_record([
            r.replicate.to_string(),
            r.method.clone(),
            fmt_f64(r.model_error),
            fmt_f64(r.rme),
            fmt_f64(r.snr),
            r.sparsity_count.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(&records_path, e))?;

    let boot_path = dir.join("bootstrap.csv");
    let mut w = csv::Writer::from_path(&boot_path).map_err(|e| io_err(&boot_path, e))?;
    let csv_err = |e: csv::Error| io_err(&boot_path, e);
    w.write_record(["method", "resample", "median_rme"]).map_err(csv_err)?;
    for s in &result.summaries {
        for (i, m) in s.bootstrap_medians.iter().enumerate() {
            w.write_record([s.method.clone(), i.to_string(), fmt_f64(*m)]).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| io_err(&boot_path, e))?;

    for f in &result.failures {
        eprintln!("warning: replicate {} method {} failed: {}", f.replicate, f.method, f.message.replace('\n', " "));
    }
    let summaries: Vec<Value> = result
        .summaries
        .iter()
        .map(|s| {
            json!({
                "method": s.method,
                "replicates": s.replicates,
                "median_rme": s.median_rme,
                "bootstrap_quantiles": s.bootstrap_quantiles,
            })
        })
        .collect();
    let mut body = Map::new();
    body.insert("summaries".into(), Value::Array(summaries));
    body.insert("failures".into(), to_value(&result.failures)?);
    body.insert("records".into(), json!(result.records.len()));
    write_file(&dir.join("summary.json"), &with_config(body, &RunConfig::Benchmark(cfg.clone()))?)
}

pub fn calibrate(cfg: &CalibrateConfig, out: &Outputs) -> CliResult<()> {
    let phi = calibrate_phi(cfg.a, cfg.b, cfg.threshold, cfg.target)?;
    let probability = 1.0 - tpb_cdf(cfg.threshold, &TpbParams::fixed(cfg.a, cfg.b, phi)?)?;
    let mut body = Map::new();
    body.insert("phi".into(), json!(phi));
    body.insert("probability".into(), json!(probability));
    emit(out.file.as_deref(), &with_config(body, &RunConfig::CalibratePhi(cfg.clone()))?)
}

/// Read the configuration embedded in an artifact, or a bare configuration file.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: not valid JSON: {e}", path.display())))?;
    let cfg = match value.get("config") {
        Some(c) => c.clone(),
        None => value,
    };
    serde_json::from_value(cfg).map_err(|e| CliError::Usage(format!("{}: no usable run configuration: {e}", path.display())))
}
