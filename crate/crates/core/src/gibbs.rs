//! Blocked Gibbs sampler for the TPB normal scale-mixture regression.
//!
//! One sweep updates, in order,
//!
//! * β | · ~ N((X'X + T⁻¹)⁻¹X'y, σ²(X'X + T⁻¹)⁻¹)
//! * σ⁻² | · ~ G((n + p + c₀)/2, {‖y − Xβ‖² + β'T⁻¹β + d₀}/2)
//! * τⱼ | · ~ GIG(a − 1/2, 2λⱼ, βⱼ²/σ²)
//! * λⱼ | · ~ G(a + b, τⱼ + φ)
//! * φ | · ~ G(pb + 1/2, Σλⱼ + ω) and ω | · ~ G(1, φ + 1) when φ is learned.
//!
//! For p ≤ n the β block is drawn through a Cholesky factor of X'X + T⁻¹.
//! For p > n it uses the exact n-dimensional construction: u ~ N(0, σ²T),
//! δ ~ N(0, I), v = Xu/σ + δ, w solves (XTX' + I)w = y/σ − v, and
//! β = u + σTX'w.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{gig_sample, GigParams};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, dual_matrix};
use crate::model::{build_stats, PriorConfig, RegressionDataset, SufficientStats};
use crate::par::{try_map_range, Execution};
use crate::report::{CoefficientSummary, FitReport, Method};
use crate::rng::{self, Stage};
use crate::stats;

/// Floor on βⱼ²/σ² before the τⱼ draw, keeping the GIG well defined.
pub const XI_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub beta: DVector<f64>,
    pub sigma2_inv: f64,
    pub tau: DVector<f64>,
    pub lambda: DVector<f64>,
    pub phi: f64,
    pub omega: f64,
}

impl GibbsState {
    /// β = 0, σ⁻² = 1/var(y), τ = λ = 1, φ fixed or 1, ω = 1.
    pub fn initial(data: &RegressionDataset, prior: &PriorConfig) -> Self {
        let p = data.p();
        Self {
            beta: DVector::zeros(p),
            sigma2_inv: 1.0 / data.response_variance(),
            tau: DVector::from_element(p, 1.0),
            lambda: DVector::from_element(p, 1.0),
            phi: prior.phi_start(),
            omega: 1.0,
        }
    }

    fn check(&self, iteration: usize) -> Result<()> {
        let bad = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Numerical(format!("Gibbs iteration {iteration}: {name} = {v} is not positive and finite")))
            }
        };
        bad("sigma^-2", self.sigma2_inv)?;
        bad("phi", self.phi)?;
        bad("omega", self.omega)?;
        for j in 0..self.tau.len() {
            bad(&format!("tau[{j}]"), self.tau[j])?;
            bad(&format!("lambda[{j}]"), self.lambda[j])?;
            if !self.beta[j].is_finite() {
                return Err(Error::Numerical(format!("Gibbs iteration {iteration}: beta[{j}] is not finite")));
            }
        }
        Ok(())
    }
}

/// Blocks held fixed during sweeps (for conjugate sub-model checks).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frozen {
    pub sigma2: bool,
    pub tau: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub total: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.burn_in > self.total {
            return Err(Error::Usage(format!(
                "inconsistent schedule: total {}, burn-in {}, thin {}",
                self.total, self.burn_in, self.thin
            )));
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        (self.total - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsOptions {
    pub schedule: Schedule,
    /// Store every kept state; otherwise only running moments are kept.
    pub keep_draws: bool,
    pub frozen: Frozen,
}

impl GibbsOptions {
    pub fn new(total: usize, burn_in: usize, thin: usize) -> Self {
        Self {
            schedule: Schedule { total, burn_in, thin },
            keep_draws: true,
            frozen: Frozen::default(),
        }
    }
}

/// Post-burn-in output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsChain {
    pub draws: Vec<GibbsState>,
    pub burn_in: usize,
    pub thin: usize,
    pub total_iterations: usize,
    pub seed: u64,
    pub kept: usize,
    pub beta_mean: DVector<f64>,
    pub beta_var: DVector<f64>,
    pub sigma2_mean: f64,
    /// Posterior means of σ⁻², τⱼ⁻¹, λⱼ and φ over kept draws.
    pub sigma2_inv_mean: f64,
    pub tau_inv_mean: DVector<f64>,
    pub lambda_mean: DVector<f64>,
    pub phi_mean: f64,
}

fn gamma_rate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Numerical(format!("gamma draw with shape {shape}, rate {rate}: {e}")))?;
    Ok(g.sample(rng))
}

fn standard_normals<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

fn draw_beta<R: Rng + ?Sized>(
    state: &GibbsState,
    data: &RegressionDataset,
    stats: &SufficientStats,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let (n, p) = data.x.shape();
    let sigma = (1.0 / state.sigma2_inv).sqrt();
    if p <= n {
        let mut a = stats.xtx.clone();
        for j in 0..p {
            a[(j, j)] += 1.0 / state.tau[j];
        }
        let (chol, _) = cholesky_jittered(a)?;
        let mean = chol.solve(&stats.xty);
        let z = standard_normals(p, rng);
        let noise = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numerical("triangular solve failed in beta draw".into()))?;
        Ok(mean + noise * sigma)
    } else {
        let u = standard_normals(p, rng).component_mul(&state.tau.map(f64::sqrt)) * sigma;
        let delta = standard_normals(n, rng);
        let v = &data.x * &u / sigma + delta;
        let (chol, _) = cholesky_jittered(dual_matrix(&data.x, &state.tau))?;
        let w = chol.solve(&(&data.y / sigma - v));
        Ok(u + state.tau.component_mul(&(data.x.transpose() * w)) * sigma)
    }
}

/// λⱼ | τⱼ, φ ~ G(a + b, τⱼ + φ).
pub fn draw_lambda<R: Rng + ?Sized>(tau: f64, phi: f64, a: f64, b: f64, rng: &mut R) -> Result<f64> {
    gamma_rate(a + b, tau + phi, rng)
}

/// One systematic-scan sweep.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &GibbsState,
    data: &RegressionDataset,
    stats: &SufficientStats,
    prior: &PriorConfig,
    frozen: Frozen,
    rng: &mut R,
) -> Result<GibbsState> {
    let (n, p) = data.x.shape();
    let (a, b) = (prior.tpb.a, prior.tpb.b);
    let mut next = state.clone();

    next.beta = draw_beta(&next, data, stats, rng)?;

    if !frozen.sigma2 {
        let resid = &data.y - &data.x * &next.beta;
        let penalty: f64 = next.beta.iter().zip(next.tau.iter()).map(|(bj, tj)| bj * bj / tj).sum();
        let shape = (n + p) as f64 / 2.0 + prior.c0 / 2.0;
        let rate = (resid.norm_squared() + penalty + prior.d0) / 2.0;
        next.sigma2_inv = gamma_rate(shape, rate, rng)?;
    }

    if !frozen.tau {
        for j in 0..p {
            let xi = (next.beta[j] * next.beta[j] * next.sigma2_inv).max(XI_FLOOR);
            let g = GigParams::new(a - 0.5, 2.0 * next.lambda[j], xi)?;
            next.tau[j] = gig_sample(&g, rng)?;
        }
        for j in 0..p {
            next.lambda[j] = draw_lambda(next.tau[j], next.phi, a, b, rng)?;
        }
        if prior.hierarchical_phi() {
            next.phi = gamma_rate(p as f64 * b + 0.5, next.lambda.sum() + next.omega, rng)?;
            next.omega = gamma_rate(1.0, next.phi + 1.0, rng)?;
        }
    }
    Ok(next)
}

/// Run one chain from the default initial state.
pub fn run_gibbs(
    data: &RegressionDataset,
    prior: &PriorConfig,
    options: &GibbsOptions,
    seed: u64,
) -> Result<(GibbsChain, FitReport)> {
    run_gibbs_from(data, prior, options, seed, GibbsState::initial(data, prior))
}

/// Run one chain from a given state.
pub fn run_gibbs_from(
    data: &RegressionDataset,
    prior: &PriorConfig,
    options: &GibbsOptions,
    seed: u64,
    init: GibbsState,
) -> Result<(GibbsChain, FitReport)> {
    let started = Instant::now();
    options.schedule.validate()?;
    let stats = build_stats(data)?;
    let Schedule { total, burn_in, thin } = options.schedule;
    let p = data.p();
    let mut rng = rng::stream(seed, 0, Stage::Chain);
    let mut state = init;
    let mut draws = Vec::new();
    let mut kept = 0usize;
    let mut sum = DVector::zeros(p);
    let mut sum_sq = DVector::zeros(p);
    let mut sigma2_sum = 0.0;
    let mut prec_sum = 0.0;
    let mut tau_inv_sum = DVector::zeros(p);
    let mut lambda_sum = DVector::zeros(p);
    let mut phi_sum = 0.0;
    for it in 1..=total {
        state = gibbs_step(&state, data, &stats, prior, options.frozen, &mut rng)
            .map_err(|e| {
                let msg = match e {
                    Error::Numerical(m) => m,
                    other => other.to_string(),
                };
                Error::Numerical(format!("{msg} (at iteration {it}, {kept} draws kept)"))
            })?;
        state.check(it)?;
        if it > burn_in && (it - burn_in) % thin == 0 {
            kept += 1;
            sum += &state.beta;
            sum_sq += state.beta.component_mul(&state.beta);
            sigma2_sum += 1.0 / state.sigma2_inv;
            prec_sum += state.sigma2_inv;
            tau_inv_sum += state.tau.map(|t| 1.0 / t);
            lambda_sum += &state.lambda;
            phi_sum += state.phi;
            if options.keep_draws {
                draws.push(state.clone());
            }
        }
    }
    let k = kept.max(1) as f64;
    let beta_mean = &sum / k;
    let beta_var = if kept > 1 {
        (&sum_sq - beta_mean.component_mul(&beta_mean) * k) / (k - 1.0)
    } else {
        DVector::from_element(p, f64::NAN)
    };
    let chain = GibbsChain {
        draws,
        burn_in,
        thin,
        total_iterations: total,
        seed,
        kept,
        beta_mean,
        beta_var,
        sigma2_mean: sigma2_sum / k,
        sigma2_inv_mean: prec_sum / k,
        tau_inv_mean: tau_inv_sum / k,
        lambda_mean: lambda_sum / k,
        phi_mean: phi_sum / k,
    };
    let report = chain_report(&chain, started.elapsed().as_secs_f64());
    Ok((chain, report))
}

fn chain_report(chain: &GibbsChain, elapsed: f64) -> FitReport {
    let p = chain.beta_mean.len();
    let coefficients = (0..p)
        .map(|j| {
            let (lower, upper) = if chain.draws.len() > 1 {
                let col: Vec<f64> = chain.draws.iter().map(|s| s.beta[j]).collect();
                let mut s = col.clone();
                s.sort_by(f64::total_cmp);
                (Some(stats::sorted_quantile(&s, 0.025)), Some(stats::sorted_quantile(&s, 0.975)))
            } else {
                (None, None)
            };
            CoefficientSummary {
                index: j,
                estimate: chain.beta_mean[j],
                sd: chain.beta_var[j].is_finite().then(|| chain.beta_var[j].max(0.0).sqrt()),
                lower,
                upper,
                exact_zero: false,
            }
        })
        .collect();
    FitReport {
        method: Method::Gibbs,
        beta: chain.beta_mean.iter().cloned().collect(),
        sigma2: chain.sigma2_mean,
        iterations: chain.total_iterations,
        draws: chain.kept,
        converged: true,
        elapsed_seconds: elapsed,
        seed: Some(chain.seed),
        coefficients,
        warnings: Vec::new(),
    }
}

/// Independent chains with seeds `seed, seed + 1, …`, possibly concurrently.
pub fn run_chains(
    data: &RegressionDataset,
    prior: &PriorConfig,
    options: &GibbsOptions,
    seed: u64,
    chains: usize,
    exec: Execution,
) -> Result<Vec<(GibbsChain, FitReport)>> {
    try_map_range(chains, exec, |c| run_gibbs(data, prior, options, seed.wrapping_add(c as u64)))
}

/// Draws of β as a (draws × p) matrix.
pub fn beta_matrix(chain: &GibbsChain) -> DMatrix<f64> {
    let p = chain.beta_mean.len();
    DMatrix::from_fn(chain.draws.len(), p, |i, j| chain.draws[i].beta[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Phi, TpbParams};

    fn toy() -> RegressionDataset {
        let x = DMatrix::from_row_slice(6, 2, &[1.0, 0.2, -0.5, 1.0, 0.3, -0.7, 1.2, 0.1, -0.4, 0.9, 0.8, -1.1]);
        let y = DVector::from_vec(vec![1.1, -0.2, 0.5, 1.3, -0.6, 0.4]);
        RegressionDataset::new(y, x).unwrap()
    }

    #[test]
    fn schedule_counts() {
        let s = Schedule { total: 100, burn_in: 20, thin: 5 };
        assert_eq!(s.kept(), 16);
        assert!(Schedule { total: 10, burn_in: 20, thin: 1 }.validate().is_err());
        assert!(Schedule { total: 10, burn_in: 2, thin: 0 }.validate().is_err());
    }

    #[test]
    fn chain_is_deterministic_and_positive() {
        let prior = PriorConfig::new(TpbParams::horseshoe(Phi::HalfCauchy));
        let opts = GibbsOptions::new(300, 100, 2);
        let (c1, _) = run_gibbs(&toy(), &prior, &opts, 42).unwrap();
        let (c2, _) = run_gibbs(&toy(), &prior, &opts, 42).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1.draws.len(), 100);
        for s in &c1.draws {
            assert!(s.tau.iter().chain(s.lambda.iter()).all(|v| *v > 0.0 && v.is_finite()));
            assert!(s.phi > 0.0 && s.omega > 0.0 && s.sigma2_inv > 0.0);
        }
    }

    #[test]
    fn lambda_conditional_mean() {
        // a = b = 1/2, τ = φ = 1: λ | · ~ G(1, 2)
        let mut rng = rng::seeded(3);
        let lam: Vec<f64> = (0..100_000).map(|_| draw_lambda(1.0, 1.0, 0.5, 0.5, &mut rng).unwrap()).collect();
        assert!((stats::mean(&lam) - 0.5).abs() < 3.0 * stats::std_error(&lam));
    }
}
