//! MAP estimation by expectation-maximization over the local scales.
//!
//! The E-step weight is ⟨τⱼ⁻¹⟩ under π(τ | βⱼ, σ²) with the inverted-beta
//! prior π(τ) ∝ τ^{a−1}(1 + τ/φ)^{−(a+b)}. Substituting w = φ/τ gives
//!
//!   ⟨τ⁻¹⟩ = N(k) / {φ D(k)},   k = βⱼ²/(2σ²φ),
//!   N(k) = ∫ w^{b+1/2} (1+w)^{−(a+b)} e^{−kw} dw,
//!   D(k) = ∫ w^{b−1/2} (1+w)^{−(a+b)} e^{−kw} dw.
//!
//! Both integrals are taken over s = ln w, where the log integrands are
//! concave. At a = 1, b = 1/2 they reduce to erfcx.
//!
//! The M-step maximizes the complete-data log posterior jointly:
//! β = (X'X + W)⁻¹X'y on the active set and
//! σ² = {RSS + β'Wβ + d₀}/(n + p_active + c₀ + 2).

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dist::{Phi, TpbParams};
use crate::error::{Error, Result};
use crate::linalg::penalized_solve;
use crate::model::{build_stats, PriorConfig, RegressionDataset, SufficientStats};
use crate::quad::log_integral_concave;
use crate::report::{FitReport, Method};
use crate::specfun::{erfcx, log_gamma};

const QUAD_REL_TOL: f64 = 1e-13;
/// Slack for the log-posterior monotonicity check.
pub const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EmState {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub weights: DVector<f64>,
    pub log_posterior: f64,
    pub active: Vec<bool>,
    /// (active count, log posterior) after every iteration when monitored.
    pub trace: Vec<(usize, f64)>,
}

impl EmState {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// A coordinate is zeroed when |βⱼ| < `zero_beta` and its weight exceeds `zero_weight`.
    pub zero_beta: f64,
    pub zero_weight: f64,
    /// Evaluate the log posterior each iteration and fail on a decrease.
    pub monitor: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            zero_beta: 1e-8,
            zero_weight: 1e12,
            monitor: true,
        }
    }
}

fn fixed_phi(params: &TpbParams) -> Result<f64> {
    match params.phi {
        Phi::Fixed(v) => Ok(v),
        Phi::HalfCauchy => Err(Error::Usage("MAP estimation requires a fixed phi".into())),
    }
}

fn quad_log_integral(power: f64, a: f64, b: f64, k: f64) -> Result<f64> {
    let g = |s: f64| {
        let w = s.exp();
        let log1p = if s > 40.0 { s + (-s).exp() } else { w.ln_1p() };
        power * s - (a + b) * log1p - k * w
    };
    let start = if k > 1.0 { -k.ln() } else { 0.0 };
    log_integral_concave(g, start, QUAD_REL_TOL).map_err(|e| {
        Error::Numerical(format!("E-step quadrature failed (a = {a}, b = {b}, k = {k:e}, power = {power}): {e}"))
    })
}

/// ln D(k). Infinite when k = 0 and a ≤ 1/2.
pub fn log_d(k: f64, a: f64, b: f64) -> Result<f64> {
    if k == 0.0 && a <= 0.5 {
        return Ok(f64::INFINITY);
    }
    if a == 1.0 && b == 0.5 {
        return Ok(nc_half(k).1.ln());
    }
    // s-integrand carries one extra factor w from dw = w ds
    quad_log_integral(b + 0.5, a, b, k)
}

/// ln N(k). Infinite when k = 0 and a ≤ 3/2.
pub fn log_n(k: f64, a: f64, b: f64) -> Result<f64> {
    if k == 0.0 && a <= 1.5 {
        return Ok(f64::INFINITY);
    }
    if a == 1.0 && b == 0.5 {
        return Ok(nc_half(k).0.ln());
    }
    quad_log_integral(b + 1.5, a, b, k)
}

/// (N, D) at a = 1, b = 1/2. With u = 1 + w both are generalized
/// exponential integrals: D = eᵏE_{3/2}(k) and N = eᵏ{E_{1/2}(k) − E_{3/2}(k)}.
/// Small k uses D = 2 − 2√(πk)·erfcx(√k), N = √(π/k)·erfcx(√k) − D.
fn nc_half(k: f64) -> (f64, f64) {
    if k == 0.0 {
        return (f64::INFINITY, 2.0);
    }
    if k < 2.0 {
        let r = k.sqrt();
        let e = erfcx(r);
        let d = 2.0 - 2.0 * (PI * k).sqrt() * e;
        let n = (PI / k).sqrt() * e - d;
        return (n, d);
    }
    let half = scaled_expint(0.5, k);
    let three_half = scaled_expint(1.5, k);
    (half - three_half, three_half)
}

/// eˣE_p(x) = eˣ∫₁^∞ e^{−xu} u^{−p} du by the modified Lentz continued
/// fraction; intended for x ≥ 1.
fn scaled_expint(p: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + p;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let i = i as f64;
        let an = -i * (p - 1.0 + i);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Quadrature-only weight, bypassing the closed form.
pub fn e_step_weight_quadrature(beta_j: f64, sigma2: f64, params: &TpbParams) -> Result<f64> {
    let phi = fixed_phi(params)?;
    let k = beta_j * beta_j / (2.0 * sigma2 * phi);
    if k == 0.0 {
        return Ok(if params.a <= 1.5 { f64::INFINITY } else { weight_at_zero(params.a, params.b, phi)? });
    }
    let ln = quad_log_integral(params.b + 1.5, params.a, params.b, k)?;
    let ld = quad_log_integral(params.b + 0.5, params.a, params.b, k)?;
    Ok((ln - ld).exp() / phi)
}

fn weight_at_zero(a: f64, b: f64, phi: f64) -> Result<f64> {
    Ok((quad_log_integral(b + 1.5, a, b, 0.0)? - quad_log_integral(b + 0.5, a, b, 0.0)?).exp() / phi)
}

/// ⟨τⱼ⁻¹⟩ given βⱼ and σ². Infinite at βⱼ = 0 when a ≤ 3/2.
pub fn e_step_weight(beta_j: f64, sigma2: f64, params: &TpbParams) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite() && beta_j.is_finite()) {
        return Err(Error::domain("e_step_weight", format!("beta = {beta_j}, sigma2 = {sigma2}")));
    }
    let phi = fixed_phi(params)?;
    if params.a == 1.0 && params.b == 0.5 {
        let k = beta_j * beta_j / (2.0 * sigma2 * phi);
        let (n, d) = nc_half(k);
        return Ok(n / d / phi);
    }
    e_step_weight_quadrature(beta_j, sigma2, params)
}

/// ln ∫ N(βⱼ; 0, σ²τ) π(τ) dτ.
pub fn log_marginal_prior(beta_j: f64, sigma2: f64, params: &TpbParams) -> Result<f64> {
    let phi = fixed_phi(params)?;
    let (a, b) = (params.a, params.b);
    let k = beta_j * beta_j / (2.0 * sigma2 * phi);
    let log_beta_fn = log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?;
    Ok(-0.5 * (2.0 * PI * sigma2 * phi).ln() + log_d(k, a, b)? - log_beta_fn)
}

/// Log posterior of (β, σ²) with τ integrated out, over the active set and
/// up to an additive constant.
pub fn log_posterior(
    beta: &DVector<f64>,
    sigma2: f64,
    active: &[bool],
    data: &RegressionDataset,
    prior: &PriorConfig,
) -> Result<f64> {
    let n = data.n() as f64;
    let rss = (&data.y - &data.x * beta).norm_squared();
    let mut lp = -(0.5 * n + 0.5 * prior.c0 + 1.0) * sigma2.ln() - (rss + prior.d0) / (2.0 * sigma2);
    for (j, &on) in active.iter().enumerate() {
        if on {
            lp += log_marginal_prior(beta[j], sigma2, &prior.tpb)?;
        }
    }
    Ok(lp)
}

/// Joint maximizer of the complete-data log posterior given the weights.
/// Inactive coordinates are held at zero.
pub fn m_step(
    weights: &DVector<f64>,
    active: &[bool],
    data: &RegressionDataset,
    stats: &SufficientStats,
    prior: &PriorConfig,
) -> Result<(DVector<f64>, f64)> {
    let p = data.p();
    let idx: Vec<usize> = (0..p).filter(|&j| active[j]).collect();
    let mut beta = DVector::zeros(p);
    if !idx.is_empty() {
        let (xa, xtx, xty, w) = if idx.len() == p {
            (data.x.clone(), stats.xtx.clone(), stats.xty.clone(), weights.clone())
        } else {
            let xa = data.x.select_columns(&idx);
            let xtx = stats.xtx.select_rows(&idx).select_columns(&idx);
            let xty = stats.xty.select_rows(&idx);
            (xa, xtx, xty, weights.select_rows(&idx))
        };
        for (j, v) in w.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Numerical(format!("M-step: weight {v} on active coordinate {}", idx[j])));
            }
        }
        let sol = penalized_solve(&xa, &xtx, &xty, &w, false)?;
        for (k, &j) in idx.iter().enumerate() {
            beta[j] = sol.solution[k];
        }
    }
    let rss = (&data.y - &data.x * &beta).norm_squared();
    let penalty: f64 = idx.iter().map(|&j| weights[j] * beta[j] * beta[j]).sum();
    let denom = data.n() as f64 + idx.len() as f64 + prior.c0 + 2.0;
    let sigma2 = (rss + penalty + prior.d0) / denom;
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Numerical(format!("M-step: sigma2 = {sigma2} (rss = {rss:e}, penalty = {penalty:e})")));
    }
    Ok((beta, sigma2))
}

/// Ridge start: β = (X'X + I)⁻¹X'y, σ² = RSS/n.
pub fn initial_state(data: &RegressionDataset, stats: &SufficientStats) -> Result<EmState> {
    let p = data.p();
    let ones = DVector::from_element(p, 1.0);
    let beta = penalized_solve(&data.x, &stats.xtx, &stats.xty, &ones, false)?.solution;
    let rss = (&data.y - &data.x * &beta).norm_squared();
    let sigma2 = (rss / data.n() as f64).max(1e-12 * stats.yty / data.n() as f64).max(f64::MIN_POSITIVE);
    Ok(EmState {
        beta,
        sigma2,
        weights: ones,
        log_posterior: f64::NAN,
        active: vec![true; p],
        trace: Vec::new(),
    })
}

fn check_finite(state: &EmState, iteration: usize) -> Result<()> {
    if state.sigma2.is_finite() && state.sigma2 > 0.0 && state.beta.iter().all(|b| b.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "EM iterate is not finite at iteration {iteration} (sigma2 = {})",
            state.sigma2
        )))
    }
}

pub fn run_em(data: &RegressionDataset, prior: &PriorConfig, options: &EmOptions) -> Result<(EmState, FitReport)> {
    fixed_phi(&prior.tpb)?;
    if !(options.tol > 0.0) {
        return Err(Error::Usage(format!("tolerance must be positive, got {}", options.tol)));
    }
    let started = Instant::now();
    let stats = build_stats(data)?;
    let mut warnings = Vec::new();
    if prior.tpb.a > 1.0 {
        warnings.push(format!(
            "a = {} > 1: the prior has no kink at zero (0 < a <= 1 is required), so MAP estimates cannot be exactly zero",
            prior.tpb.a
        ));
    }
    let mut state = initial_state(data, &stats)?;
    check_finite(&state, 0)?;
    let mut converged = false;
    let mut iterations = 0;
    let mut prev_lp = f64::NEG_INFINITY;
    while iterations < options.max_iter {
        // E-step and screening
        let mut dropped = false;
        for j in 0..data.p() {
            if !state.active[j] {
                continue;
            }
            let w = e_step_weight(state.beta[j], state.sigma2, &prior.tpb)?;
            state.weights[j] = w;
            if state.beta[j].abs() < options.zero_beta && w > options.zero_weight {
                state.active[j] = false;
                state.beta[j] = 0.0;
                dropped = true;
            }
        }
        if dropped {
            // the objective is redefined on the smaller active set
            prev_lp = f64::NEG_INFINITY;
        }
        let (beta, sigma2) = m_step(&state.weights, &state.active, data, &stats, prior)?;
        iterations += 1;
        let change = (&beta - &state.beta).amax();
        state.beta = beta;
        state.sigma2 = sigma2;
        check_finite(&state, iterations)?;
        if options.monitor {
            let lp = log_posterior(&state.beta, state.sigma2, &state.active, data, prior)?;
            if lp < prev_lp - MONOTONE_SLACK {
                return Err(Error::Numerical(format!(
                    "EM log posterior decreased at iteration {iterations}: {prev_lp:.17e} -> {lp:.17e}"
                )));
            }
            prev_lp = lp;
            state.log_posterior = lp;
            state.trace.push((state.active_count(), lp));
        }
        if change < options.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!("EM did not converge in {} iterations", options.max_iter));
    }
    let mut coefficients = FitReport::point_summaries(state.beta.as_slice());
    for c in coefficients.iter_mut() {
        c.exact_zero = !state.active[c.index];
    }
    let report = FitReport {
        method: Method::Map,
        beta: state.beta.iter().cloned().collect(),
        sigma2: state.sigma2,
        iterations,
        draws: 0,
        converged,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        seed: None,
        coefficients,
        warnings,
    };
    Ok((state, report))
}

/// Constant weight vector.
pub fn ridge_weights(p: usize, w: f64) -> DVector<f64> {
    DVector::from_element(p, w)
}
