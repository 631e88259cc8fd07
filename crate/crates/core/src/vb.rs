//! Mean-field variational Bayes for the TPB normal scale-mixture regression.
//!
//! Each cycle applies the moment equations in a fixed order: ⟨β⟩ and V_β,
//! then c*, d* and ⟨σ⁻²⟩ = c*/d*, then the GIG moments ⟨τⱼ⟩, ⟨τⱼ⁻¹⟩, then
//! ⟨λⱼ⟩ = (a + b)/(⟨τⱼ⟩ + ⟨φ⟩), then ⟨φ⟩ and ⟨ω⟩. The order is part of the
//! algorithm: different orders can reach different fixed points.
//!
//! The d* update needs tr(X'X V_β), which equals
//! {p − Σⱼ ⟨τⱼ⁻¹⟩ (A⁻¹)ⱼⱼ}/⟨σ⁻²⟩ with A = X'X + T⁻¹, so only the diagonal of
//! A⁻¹ is required. For p > n that diagonal comes from the Woodbury identity
//! and V_β is never formed.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::{gig_inv_mean, gig_mean, GigParams};
use crate::error::{Error, Result};
use crate::gibbs::GibbsChain;
use crate::linalg::penalized_solve;
use crate::model::{build_stats, PriorConfig, RegressionDataset, SufficientStats};
use crate::report::{CoefficientSummary, FitReport, Method};

/// Floor on ⟨βⱼ²⟩ before the Bessel ratios.
pub const BETA_SQ_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct VbState {
    pub mean_beta: DVector<f64>,
    /// V_β, materialized only when p ≤ n and requested.
    pub cov_beta: Option<DMatrix<f64>>,
    /// Diagonal of V_β.
    pub var_beta: DVector<f64>,
    pub mean_prec: f64,
    pub mean_tau: DVector<f64>,
    pub mean_tau_inv: DVector<f64>,
    pub mean_lambda: DVector<f64>,
    pub mean_phi: f64,
    pub mean_omega: f64,
    pub c_star: f64,
    pub d_star: f64,
}

impl VbState {
    /// ⟨τ⁻¹⟩ = ⟨τ⟩ = 1, ⟨λ⟩ = (a + b)/(1 + φ₀), ⟨σ⁻²⟩ = 1/var(y),
    /// ⟨φ⟩ = φ₀ (fixed value or 1), ⟨ω⟩ = 1/2.
    pub fn initial(data: &RegressionDataset, prior: &PriorConfig) -> Self {
        let (n, p) = data.x.shape();
        let phi0 = prior.phi_start();
        let prec = 1.0 / data.response_variance();
        let c_star = (n + p) as f64 / 2.0 + prior.c0 / 2.0;
        Self {
            mean_beta: DVector::zeros(p),
            cov_beta: None,
            var_beta: DVector::zeros(p),
            mean_prec: prec,
            mean_tau: DVector::from_element(p, 1.0),
            mean_tau_inv: DVector::from_element(p, 1.0),
            mean_lambda: DVector::from_element(p, (prior.tpb.a + prior.tpb.b) / (1.0 + phi0)),
            mean_phi: phi0,
            mean_omega: 0.5,
            c_star,
            d_star: c_star / prec,
        }
    }

    /// Start from posterior means of a Gibbs chain.
    pub fn from_chain(chain: &GibbsChain, data: &RegressionDataset, prior: &PriorConfig) -> Result<Self> {
        if chain.kept == 0 {
            return Err(Error::Usage("cannot initialize VB from a chain with no kept draws".into()));
        }
        let mut s = Self::initial(data, prior);
        if chain.beta_mean.len() != s.mean_beta.len() {
            return Err(Error::Usage(format!("chain has {} coefficients, data {}", chain.beta_mean.len(), s.mean_beta.len())));
        }
        s.mean_beta = chain.beta_mean.clone();
        s.var_beta = chain.beta_var.map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 });
        s.mean_prec = chain.sigma2_inv_mean;
        s.d_star = s.c_star / s.mean_prec;
        s.mean_tau_inv = chain.tau_inv_mean.clone();
        s.mean_tau = chain.tau_inv_mean.map(|v| 1.0 / v);
        s.mean_lambda = chain.lambda_mean.clone();
        s.mean_phi = chain.phi_mean;
        s.mean_omega = 1.0 / (chain.phi_mean + 1.0);
        Ok(s)
    }

    /// ⟨βⱼ²⟩ = ⟨βⱼ⟩² + (V_β)ⱼⱼ.
    pub fn second_moment(&self, j: usize) -> f64 {
        self.mean_beta[j] * self.mean_beta[j] + self.var_beta[j]
    }

    /// Posterior mean of σ² under the Gamma(c*, d*) factor for σ⁻².
    pub fn sigma2_mean(&self) -> f64 {
        if self.c_star > 1.0 {
            self.d_star / (self.c_star - 1.0)
        } else {
            self.d_star / self.c_star
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VbOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the full V_β when p ≤ n.
    pub full_covariance: bool,
}

impl Default for VbOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
            full_covariance: true,
        }
    }
}

/// (⟨τ⟩, ⟨τ⁻¹⟩) for τ ~ GIG(a − 1/2, 2⟨λ⟩, ξ) through log-scaled Bessel ratios.
pub fn tau_moments(a: f64, mean_lambda: f64, xi: f64) -> Result<(f64, f64)> {
    let g = GigParams::new(a - 0.5, 2.0 * mean_lambda, xi)?;
    Ok((gig_mean(&g)?, gig_inv_mean(&g)?))
}

/// The a = 1 case, where K_{1/2} = K_{−1/2} collapses the ratios:
/// ⟨τ⁻¹⟩ = √(ν/ξ) and ⟨τ⟩ = √(ξ/ν)(1 + 1/√(νξ)) with ν = 2⟨λ⟩.
pub fn tau_moments_a1(mean_lambda: f64, xi: f64) -> (f64, f64) {
    let nu = 2.0 * mean_lambda;
    let omega = (nu * xi).sqrt();
    ((xi / nu).sqrt() * (1.0 + 1.0 / omega), (nu / xi).sqrt())
}

/// One full cycle of the moment equations.
pub fn vb_step(
    state: &VbState,
    data: &RegressionDataset,
    stats: &SufficientStats,
    prior: &PriorConfig,
    full_covariance: bool,
) -> Result<VbState> {
    let (n, p) = data.x.shape();
    let (a, b) = (prior.tpb.a, prior.tpb.b);

    let sol = penalized_solve(&data.x, &stats.xtx, &stats.xty, &state.mean_tau_inv, full_covariance)?;
    let prec_old = state.mean_prec;
    let mean_beta = sol.solution;
    let var_beta = &sol.inverse_diag / prec_old;
    let cov_beta = sol.inverse.map(|m| m / prec_old);

    let c_star = (n + p) as f64 / 2.0 + prior.c0 / 2.0;
    let weighted: f64 = state.mean_tau_inv.iter().zip(sol.inverse_diag.iter()).map(|(w, d)| w * d).sum();
    let trace = (p as f64 - weighted) / prec_old;
    let resid = &data.y - &data.x * &mean_beta;
    let mut next = VbState {
        mean_beta,
        cov_beta,
        var_beta,
        mean_prec: prec_old,
        mean_tau: state.mean_tau.clone(),
        mean_tau_inv: state.mean_tau_inv.clone(),
        mean_lambda: state.mean_lambda.clone(),
        mean_phi: state.mean_phi,
        mean_omega: state.mean_omega,
        c_star,
        d_star: 0.0,
    };
    let penalty: f64 = (0..p).map(|j| next.second_moment(j) * state.mean_tau_inv[j]).sum();
    next.d_star = (resid.norm_squared() + trace.max(0.0) + penalty + prior.d0) / 2.0;
    next.mean_prec = c_star / next.d_star;
    if !(next.mean_prec.is_finite() && next.mean_prec > 0.0) {
        return Err(Error::Numerical(format!("VB: <sigma^-2> = {} (d* = {})", next.mean_prec, next.d_star)));
    }

    for j in 0..p {
        let xi = next.mean_prec * next.second_moment(j).max(BETA_SQ_FLOOR);
        let (t, ti) = if a == 1.0 {
            tau_moments_a1(next.mean_lambda[j], xi)
        } else {
            tau_moments(a, next.mean_lambda[j], xi)?
        };
        if !(t.is_finite() && t > 0.0 && ti.is_finite() && ti > 0.0) {
            return Err(Error::Numerical(format!(
                "VB: coordinate {j}: <tau> = {t}, <1/tau> = {ti} (lambda = {}, xi = {xi:e})",
                next.mean_lambda[j]
            )));
        }
        next.mean_tau[j] = t;
        next.mean_tau_inv[j] = ti;
    }
    for j in 0..p {
        next.mean_lambda[j] = (a + b) / (next.mean_tau[j] + next.mean_phi);
    }
    if prior.hierarchical_phi() {
        next.mean_phi = (p as f64 * b + 0.5) / (next.mean_omega + next.mean_lambda.sum());
    } else {
        next.mean_phi = prior.phi_start();
    }
    next.mean_omega = 1.0 / (next.mean_phi + 1.0);
    Ok(next)
}

fn rel_change(new: &DVector<f64>, old: &DVector<f64>) -> f64 {
    let scale = new.amax().max(old.amax());
    if scale == 0.0 {
        return 0.0;
    }
    (new - old).amax() / scale
}

fn rel_change_scalar(new: f64, old: f64) -> f64 {
    let scale = new.abs().max(old.abs());
    if scale == 0.0 {
        0.0
    } else {
        (new - old).abs() / scale
    }
}

/// Normwise relative change of every moment block across one more cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResiduals {
    pub beta: f64,
    pub prec: f64,
    pub tau: f64,
    pub tau_inv: f64,
    pub lambda: f64,
    pub phi: f64,
    pub omega: f64,
}

impl FixedPointResiduals {
    pub fn max(&self) -> f64 {
        [self.beta, self.prec, self.tau, self.tau_inv, self.lambda, self.phi, self.omega]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

impl FixedPointResiduals {
    /// Changes from `old` to `new`.
    pub fn between(new: &VbState, old: &VbState) -> Self {
        Self {
            beta: rel_change(&new.mean_beta, &old.mean_beta),
            prec: rel_change_scalar(new.mean_prec, old.mean_prec),
            tau: rel_change(&new.mean_tau, &old.mean_tau),
            tau_inv: rel_change(&new.mean_tau_inv, &old.mean_tau_inv),
            lambda: rel_change(&new.mean_lambda, &old.mean_lambda),
            phi: rel_change_scalar(new.mean_phi, old.mean_phi),
            omega: rel_change_scalar(new.mean_omega, old.mean_omega),
        }
    }
}

/// Residuals of one further cycle applied to `state`.
pub fn fixed_point_residuals(
    state: &VbState,
    data: &RegressionDataset,
    prior: &PriorConfig,
) -> Result<FixedPointResiduals> {
    let stats = build_stats(data)?;
    let next = vb_step(state, data, &stats, prior, false)?;
    Ok(FixedPointResiduals::between(&next, state))
}

/// Iterate until the largest normwise relative change over all moment
/// blocks drops below `tol`.
pub fn run_vb(
    data: &RegressionDataset,
    prior: &PriorConfig,
    init: Option<VbState>,
    options: &VbOptions,
) -> Result<(VbState, FitReport)> {
    if !(options.tol > 0.0) {
        return Err(Error::Usage(format!("tolerance must be positive, got {}", options.tol)));
    }
    let started = Instant::now();
    let stats = build_stats(data)?;
    let full = options.full_covariance && data.p() <= data.n();
    let mut state = init.unwrap_or_else(|| VbState::initial(data, prior));
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        let next = vb_step(&state, data, &stats, prior, full)?;
        iterations += 1;
        let change = FixedPointResiduals::between(&next, &state).max();
        state = next;
        if change < options.tol {
            converged = true;
            break;
        }
    }
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!("VB did not converge in {} iterations", options.max_iter));
    }
    let report = vb_report(&state, iterations, converged, started.elapsed().as_secs_f64(), warnings);
    Ok((state, report))
}

fn vb_report(state: &VbState, iterations: usize, converged: bool, elapsed: f64, warnings: Vec<String>) -> FitReport {
    const Z: f64 = 1.959_963_984_540_054;
    let coefficients = (0..state.mean_beta.len())
        .map(|j| {
            let m = state.mean_beta[j];
            let sd = state.var_beta[j].max(0.0).sqrt();
            CoefficientSummary {
                index: j,
                estimate: m,
                sd: Some(sd),
                lower: Some(m - Z * sd),
                upper: Some(m + Z * sd),
                exact_zero: false,
            }
        })
        .collect();
    FitReport {
        method: Method::Vb,
        beta: state.mean_beta.iter().cloned().collect(),
        sigma2: state.sigma2_mean(),
        iterations,
        draws: 0,
        converged,
        elapsed_seconds: elapsed,
        seed: None,
        coefficients,
        warnings,
    }
}
