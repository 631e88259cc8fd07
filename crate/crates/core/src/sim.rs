//! Simulation harness: randomized regression problems, model error, relative
//! model error against cross-validated lasso, and bootstrapped medians.
//!
//! Replicate `i` draws its data from `stream(seed, i, Data)` and its fitting
//! seeds from `stream(seed, i, Fit)`, so any replicate can be rebuilt alone
//! and replicates may run in any order.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Beta, ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::TpbParams;
use crate::em::{run_em, EmOptions};
use crate::error::{Error, Result};
use crate::gibbs::{run_gibbs, GibbsOptions};
use crate::lasso::{cv_lasso, CvOptions};
use crate::model::{PriorConfig, RegressionDataset};
use crate::par::{map_range, Execution};
use crate::rng::{stream, Rng, Stage};
use crate::stats::{bootstrap_medians, median, quantile};
use crate::vb::{run_vb, VbOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub n: usize,
    pub p: usize,
    /// Beta parameters of the inclusion probability q.
    pub q_beta: (f64, f64),
    pub replicates: usize,
    pub seed: u64,
}

impl CaseSpec {
    /// q ~ Beta(1, 1).
    pub fn case1(n: usize, p: usize, replicates: usize, seed: u64) -> Self {
        Self { n, p, q_beta: (1.0, 1.0), replicates, seed }
    }

    /// q ~ Beta(1, 4).
    pub fn case2(n: usize, p: usize, replicates: usize, seed: u64) -> Self {
        Self { n, p, q_beta: (1.0, 4.0), replicates, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::Usage(format!("n and p must be positive, got n = {}, p = {}", self.n, self.p)));
        }
        if !(self.q_beta.0 > 0.0 && self.q_beta.1 > 0.0) {
            return Err(Error::Usage(format!("invalid q prior {:?}", self.q_beta)));
        }
        Ok(())
    }
}

/// One generated problem with the quantities needed for SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub data: RegressionDataset,
    pub sigma: f64,
    pub q: f64,
}

/// Lower-triangular Bartlett factor A with C = AA' ~ Wishart(dof, I_p).
pub fn bartlett_factor(p: usize, dof: usize, rng: &mut Rng) -> Result<DMatrix<f64>> {
    if dof < p {
        return Err(Error::Usage(format!("Wishart needs dof >= p, got dof = {dof}, p = {p}")));
    }
    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new((dof - i) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(a)
}

/// Steps: C ~ W(p, I); xᵢ ~ N(0, C); q ~ Beta; inclusion ~ Bernoulli(q);
/// included βⱼ ~ U(0, 6); σ ~ U(0, 6); εᵢ ~ N(0, σ²).
pub fn gen_case(spec: &CaseSpec, index: usize) -> Result<Replicate> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let mut rng = stream(spec.seed, index as u64, Stage::Data);
    let a = bartlett_factor(p, p, &mut rng)?;
    let c = &a * a.transpose();
    let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = z * a.transpose();
    let q = Beta::new(spec.q_beta.0, spec.q_beta.1)
        .map_err(|e| Error::Numerical(e.to_string()))?
        .sample(&mut rng);
    let mut beta = DVector::zeros(p);
    for j in 0..p {
        if rng.random::<f64>() < q {
            beta[j] = rng.random_range(0.0..6.0);
        }
    }
    let sigma: f64 = rng.random_range(0.0..6.0);
    let eps = DVector::from_fn(n, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
    let y = &x * &beta + eps;
    let data = RegressionDataset::new(y, x)?.with_truth(beta, Some(c))?;
    Ok(Replicate { data, sigma, q })
}

/// xᵢⱼ ~ N(0, 1), `k` distinct coordinates of β* equal to `value`, noise sd
/// `noise_sd`. The design covariance (the identity) is not stored.
pub fn gen_highdim(n: usize, p: usize, k: usize, value: f64, noise_sd: f64, seed: u64) -> Result<RegressionDataset> {
    if k > p {
        return Err(Error::Usage(format!("k = {k} signals exceed p = {p}")));
    }
    let mut rng = stream(seed, 0, Stage::Data);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut beta = DVector::zeros(p);
    for j in sample(&mut rng, p, k).into_iter() {
        beta[j] = value;
    }
    let eps = DVector::from_fn(n, |_, _| noise_sd * rng.sample::<f64, _>(StandardNormal));
    let y = &x * &beta + eps;
    RegressionDataset::new(y, x)?.with_truth(beta, None)
}

/// (β* − β̂)'C(β* − β̂); C = I when no design covariance is stored.
pub fn model_error(beta_hat: &DVector<f64>, data: &RegressionDataset) -> Result<f64> {
    let Some(truth) = &data.true_beta else {
        return Err(Error::Usage("model error needs the true coefficients".into()));
    };
    if beta_hat.len() != truth.len() {
        return Err(Error::Usage(format!("estimate has length {}, truth {}", beta_hat.len(), truth.len())));
    }
    let d = truth - beta_hat;
    Ok(match &data.design_cov {
        Some(c) => d.dot(&(c * &d)).max(0.0),
        None => d.norm_squared(),
    })
}

/// √(β*'Cβ*)/σ.
pub fn snr(beta: &DVector<f64>, c: &DMatrix<f64>, sigma: f64) -> f64 {
    beta.dot(&(c * beta)).sqrt() / sigma
}

/// SNR of a generated replicate, with the Wishart draw scaled by its degrees
/// of freedom so that the covariance has expectation I.
pub fn replicate_snr(rep: &Replicate) -> f64 {
    let c = rep.data.design_cov.as_ref().expect("generated with covariance");
    let truth = rep.data.true_beta.as_ref().expect("generated with truth");
    snr(truth, c, rep.sigma) / (c.nrows() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Gibbs,
    Vb,
    Map,
    Lasso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub engine: Engine,
    /// Ignored for lasso.
    pub prior: Option<TpbParams>,
}

impl MethodSpec {
    pub fn lasso() -> Self {
        Self { engine: Engine::Lasso, prior: None }
    }

    pub fn label(&self) -> String {
        use crate::dist::Phi;
        match (&self.engine, &self.prior) {
            (Engine::Lasso, _) | (_, None) => format!("{:?}", self.engine).to_lowercase(),
            (e, Some(t)) => {
                let phi = match t.phi {
                    Phi::Fixed(v) => format!("{v}"),
                    Phi::HalfCauchy => "cauchy".into(),
                };
                format!("{}(a={},b={},phi={})", format!("{e:?}").to_lowercase(), t.a, t.b, phi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOptions {
    pub bootstrap: usize,
    pub cv: CvOptions,
    pub vb: VbOptions,
    pub em: EmOptions,
    pub gibbs: GibbsOptions,
    pub execution: Execution,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            bootstrap: 2000,
            cv: CvOptions::default(),
            vb: VbOptions::default(),
            em: EmOptions { monitor: false, ..EmOptions::default() },
            gibbs: GibbsOptions { keep_draws: false, ..GibbsOptions::new(6000, 1000, 1) },
            execution: Execution::default(),
        }
    }
}

/// One (replicate, method) row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub replicate: usize,
    pub method: String,
    pub model_error: f64,
    pub rme: f64,
    pub snr: f64,
    pub sparsity_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replicate: usize,
    pub method: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub replicates: usize,
    pub median_rme: f64,
    /// 2.5%, 50% and 97.5% quantiles of the bootstrapped median.
    pub bootstrap_quantiles: [f64; 3],
    pub bootstrap_medians: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub spec: CaseSpec,
    pub records: Vec<MetricsRecord>,
    pub failures: Vec<Failure>,
    pub summaries: Vec<MethodSummary>,
}

fn fit_one(engine: Engine, prior: Option<TpbParams>, data: &RegressionDataset, seed: u64, options: &BenchmarkOptions) -> Result<DVector<f64>> {
    let need_prior = || prior.ok_or_else(|| Error::Usage(format!("{engine:?} needs a prior")));
    let beta = match engine {
        Engine::Lasso => cv_lasso(data, &options.cv, seed)?.beta,
        Engine::Vb => run_vb(data, &PriorConfig::new(need_prior()?), None, &options.vb)?.1.beta,
        Engine::Map => run_em(data, &PriorConfig::new(need_prior()?), &options.em)?.1.beta,
        Engine::Gibbs => run_gibbs(data, &PriorConfig::new(need_prior()?), &options.gibbs, seed)?.1.beta,
    };
    Ok(DVector::from_vec(beta))
}

/// Fit every method on every replicate. Lasso is always fit as the
/// denominator; a replicate whose lasso fit fails is dropped entirely.
pub fn run_benchmark(spec: &CaseSpec, methods: &[MethodSpec], options: &BenchmarkOptions) -> Result<BenchmarkResult> {
    spec.validate()?;
    let mut all: Vec<MethodSpec> = vec![MethodSpec::lasso()];
    all.extend(methods.iter().filter(|m| m.engine != Engine::Lasso).cloned());
    let labels: Vec<String> = all.iter().map(|m| m.label()).collect();

    let per_rep = map_range(spec.replicates, options.execution, |r| {
        let mut rows = Vec::new();
        let mut fails = Vec::new();
        let rep = match gen_case(spec, r) {
            Ok(rep) => rep,
            Err(e) => {
                fails.push(Failure { replicate: r, method: "data".into(), message: e.to_string() });
                return (rows, fails);
            }
        };
        let truth = rep.data.true_beta.as_ref().expect("generated with truth");
        let s = replicate_snr(&rep);
        let sparsity = truth.iter().filter(|&&b| b != 0.0).count();
        let fit_seed: u64 = stream(spec.seed, r as u64, Stage::Fit).random();
        let mut errors: Vec<Option<f64>> = Vec::with_capacity(all.len());
        for (m, label) in all.iter().zip(&labels) {
            match fit_one(m.engine, m.prior, &rep.data, fit_seed, options).and_then(|b| model_error(&b, &rep.data)) {
                Ok(me) => errors.push(Some(me)),
                Err(e) => {
                    fails.push(Failure { replicate: r, method: label.clone(), message: e.to_string() });
                    errors.push(None);
                }
            }
        }
        let Some(base) = errors[0] else {
            return (rows, fails);
        };
        for (k, label) in labels.iter().enumerate() {
            if let Some(me) = errors[k] {
                let rme = if k == 0 { 1.0 } else { me / base };
                rows.push(MetricsRecord {
                    replicate: r,
                    method: label.clone(),
                    model_error: me,
                    rme,
                    snr: s,
                    sparsity_count: sparsity,
                });
            }
        }
        (rows, fails)
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (rows, fails) in per_rep {
        records.extend(rows);
        failures.extend(fails);
    }
    let summaries = labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let rme: Vec<f64> = records.iter().filter(|r| &r.method == label).map(|r| r.rme).collect();
            summarize(label, &rme, options.bootstrap, &mut stream(spec.seed, k as u64, Stage::Bootstrap))
        })
        .collect();
    Ok(BenchmarkResult { spec: *spec, records, failures, summaries })
}

fn summarize(label: &str, rme: &[f64], resamples: usize, rng: &mut Rng) -> MethodSummary {
    if rme.is_empty() {
        return MethodSummary {
            method: label.into(),
            replicates: 0,
            median_rme: f64::NAN,
            bootstrap_quantiles: [f64::NAN; 3],
            bootstrap_medians: Vec::new(),
        };
    }
    let boot = bootstrap_medians(rme, resamples, rng);
    let q = |t| if boot.is_empty() { f64::NAN } else { quantile(&boot, t) };
    MethodSummary {
        method: label.into(),
        replicates: rme.len(),
        median_rme: median(rme),
        bootstrap_quantiles: [q(0.025), q(0.5), q(0.975)],
        bootstrap_medians: boot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = CaseSpec::case1(20, 5, 1, 11);
        let a = gen_case(&spec, 3).unwrap();
        let b = gen_case(&spec, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.data.y, gen_case(&spec, 4).unwrap().data.y);
        a.data.validate().unwrap();
    }

    #[test]
    fn model_error_identity_cases() {
        let spec = CaseSpec::case1(10, 4, 1, 2);
        let rep = gen_case(&spec, 0).unwrap();
        let truth = rep.data.true_beta.clone().unwrap();
        assert_eq!(model_error(&truth, &rep.data).unwrap(), 0.0);
        let data = rep.data.clone().with_truth(truth.clone(), Some(DMatrix::identity(4, 4))).unwrap();
        let zero = DVector::zeros(4);
        assert!((model_error(&zero, &data).unwrap() - truth.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn highdim_signal_set() {
        let d = gen_highdim(30, 200, 10, 3.0, 3.0, 5).unwrap();
        let t = d.true_beta.unwrap();
        assert_eq!(t.iter().filter(|&&b| b == 3.0).count(), 10);
        assert_eq!(t.iter().filter(|&&b| b != 0.0).count(), 10);
        let z = gen_highdim(30, 200, 0, 3.0, 3.0, 5).unwrap();
        assert!(z.true_beta.unwrap().iter().all(|&b| b == 0.0));
    }
}
